"""Certified real computation with tanh circuits, machine-simulating flows
and space-bounded ODE solving."""

from .ball import Ball, ball_arith, refine
from .branicky import TwoPhaseSystem, branicky_run, exec_flow, lattice_rounding
from .dyadic import Dyadic
from .elementary import elem_eval
from .errors import (
    CertificationError,
    ContractError,
    DecodeError,
    DomainError,
    RcdError,
    ResourceLimitError,
    SpecError,
    StabilityViolation,
)
from .expr import Expr, eval_expr, parse_sexpr
from .gadgets import barycentric_select, manon_lim, relutanh, select_eval, sigtanh
from .graphs import FiniteGraph, can_yield, graph_flow
from .robust import FlowQuery, MemoryTracker, RobustIVP, base_solve, bisect_flow, euler_direct, gronwall_bound
from .targeting import TargetingProblem, choose_gain, integrate_targeting
from .tm import TMConfig, TMSpec, decode_config, encode_config, encode_dyadic, parse_tm_spec, step_exact
from .tm_real import decode_nat, encode_mul, next_real
from .xi import GadgetScale, bestiary_eval, xi_ext

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "CertificationError",
    "ContractError",
    "DecodeError",
    "DomainError",
    "Dyadic",
    "Expr",
    "FiniteGraph",
    "FlowQuery",
    "GadgetScale",
    "MemoryTracker",
    "RcdError",
    "ResourceLimitError",
    "RobustIVP",
    "SpecError",
    "StabilityViolation",
    "TMConfig",
    "TMSpec",
    "TargetingProblem",
    "TwoPhaseSystem",
    "ball_arith",
    "barycentric_select",
    "base_solve",
    "bestiary_eval",
    "bisect_flow",
    "branicky_run",
    "can_yield",
    "choose_gain",
    "decode_config",
    "decode_nat",
    "elem_eval",
    "encode_config",
    "encode_dyadic",
    "encode_mul",
    "euler_direct",
    "eval_expr",
    "exec_flow",
    "graph_flow",
    "gronwall_bound",
    "integrate_targeting",
    "lattice_rounding",
    "manon_lim",
    "next_real",
    "parse_sexpr",
    "parse_tm_spec",
    "refine",
    "relutanh",
    "select_eval",
    "sigtanh",
    "step_exact",
    "xi_ext",
]

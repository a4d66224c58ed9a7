"""Exception hierarchy shared by all modules."""


class RcdError(Exception):
    """Base class for every error raised by rcdflow."""


class ResourceLimitError(RcdError):
    """An exponent, step budget or size limit was exhausted."""


class DomainError(RcdError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class ArityError(RcdError, ValueError):
    """An expression was evaluated with too few variables."""


class ContractError(RcdError):
    """A caller-supplied approximant or handle broke its stated contract."""


class CertificationError(RcdError):
    """A certified bound could not be established."""


class StabilityViolation(CertificationError):
    """A re-solve disagreed with the stored value beyond the stability tolerance."""


class DecodeError(RcdError, ValueError):
    """A real value is not close enough to any valid encoding."""


class SpecError(RcdError, ValueError):
    """A machine, graph or IVP description failed validation.

    ``problems`` lists every violation found, not only the first one.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))

"""Exception types raised by the solvers and the trainer."""


class NonFiniteStateError(RuntimeError):
    """Forward state became NaN/Inf (step too large or model blow-up)."""


class NonFiniteCostateError(RuntimeError):
    """Adjoint costate became NaN/Inf."""


class NonFiniteParticleError(RuntimeError):
    """A Langevin update produced a non-finite particle."""


class ConfigError(ValueError):
    """Malformed or unknown keys in a run configuration."""

"""Exception types shared across the package."""


class ModelError(ValueError):
    """Base class for domain errors raised by this package."""


class DegenerateDynamicsError(ModelError):
    """Raised when sigma_x = 0 makes the ratio deterministic (no characteristic roots)."""


class DivergentResaleError(ModelError):
    """Raised when r + lambda <= mu_x makes the expected discounted resale value infinite."""


class UnsupportedRegimeError(ModelError):
    """Raised when an operation requires an interior free-boundary solution."""


class SensitivityUndefinedError(ModelError):
    """Raised when a finite-difference sensitivity hits a degenerate perturbed point."""


class SimulationConfigError(ModelError):
    """Raised for simulation settings that cannot produce valid results (e.g. dt too coarse)."""


class ScenarioError(ModelError):
    """Raised for scenario/config validation failures; message carries the offending key path."""

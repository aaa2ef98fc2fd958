"""Exception types raised across the package."""


class BoxHeatError(Exception):
    """Base class for all package errors."""


class InvalidPolynomial(BoxHeatError, ValueError):
    """Coefficients fail real-valuedness, nonharmonicity or subharmonicity."""


class DegenerateTable(BoxHeatError, ValueError):
    """All mixed Taylor coefficients vanish at the base point."""


class NonconformingMoments(BoxHeatError, ValueError):
    """Moment sequence grows faster than any admissible stretched-exponential bound."""


class GridMismatch(BoxHeatError, ValueError):
    """Field and operator live on different grids."""


class SolverDiverged(BoxHeatError, RuntimeError):
    """The linear solve inside a time step did not converge."""


class BoundaryContamination(BoxHeatError, RuntimeError):
    """Too much of the solution reached the Dirichlet boundary."""


class StencilUnderflow(BoxHeatError, ValueError):
    """Finite-difference step in tau is too small relative to solver noise."""


class TruncationResidual(BoxHeatError, RuntimeError):
    """Estimated tail of the tau integral exceeds the requested tolerance."""


class InsufficientSamples(BoxHeatError, ValueError):
    """Too few admissible samples to fit decay constants."""


class TooLarge(BoxHeatError, ValueError):
    """Request exceeds the supported enumeration size."""


class PatternMismatch(BoxHeatError, ValueError):
    """Time-chain pattern is incompatible with the requested depth."""


class ConfigInvalid(BoxHeatError, ValueError):
    """Experiment configuration failed validation."""

# Exception hierarchy shared across the package.
#
# ConfigurationError covers everything a user can fix by changing inputs
# (grids, parameter boxes, noise parameters, unstable step sizes); the CLI
# maps it to exit code 2.  NumericError and its subclasses cover failures
# of the numerics themselves (exit code 3).


class ConfigurationError(ValueError):
    """Invalid grid, model parameters, or study configuration."""


class NumericError(RuntimeError):
    """A numerical routine failed to produce a reliable result."""


class EstimationError(NumericError):
    """An estimator could not be evaluated on the given window."""


class DegeneracyError(NumericError):
    """A model quantity that must be positive collapsed to zero."""


class OptimizationError(NumericError):
    """The global optimizer never saw a finite objective value."""

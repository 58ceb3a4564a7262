"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the interval on which an object is defined."""


class StepSizeError(ValueError):
    """A time step violates the CFL restriction."""


class NumericalError(RuntimeError):
    """The discrete state became non-finite or otherwise unusable."""


class InfeasibleInflowError(ValueError):
    """Requested inflow exceeds the road capacity at the current speed."""


class OracleValidityError(ValueError):
    """An exact-solution oracle was queried outside its range of validity."""

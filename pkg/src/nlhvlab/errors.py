"""Exception types raised across the package."""


class NlhvError(Exception):
    """Base class for errors raised by nlhvlab."""


class GeometryError(NlhvError, ValueError):
    """Measurement settings do not have the geometry a protocol requires."""


class DegeneratePlane(GeometryError):
    """Neither vector pair spans a plane, so orthogonality is undefined."""


class DegenerateAngle(NlhvError, ValueError):
    pass


class NoViolation(NlhvError):
    """The quantum prediction never exceeds the bound at this visibility."""


class EmptyTable(NlhvError, ValueError):
    pass


class ConfigError(NlhvError, ValueError):
    pass


class ModelInvalid(NlhvError):
    """Inputs fall outside the region where the hidden-variable model is consistent.

    ``a``, ``b``, ``u``, ``v`` hold the first offending configuration and
    ``invalid_fraction`` the share of draws that were affected.
    """

    def __init__(self, message, *, a=None, b=None, u=None, v=None, invalid_fraction=None):
        super().__init__(message)
        self.a = a
        self.b = b
        self.u = u
        self.v = v
        self.invalid_fraction = invalid_fraction

"""
Error hierarchy for nodal_atlas.

Every failure raised by the library derives from NodalAtlasError and keeps
the offending quantities as attributes so that callers (and the management
command) can report them without parsing messages.
"""


class NodalAtlasError(Exception):
    """Base class for all library failures."""

    code = 'error'


class DomainViolation(NodalAtlasError):
    """A value left the open domain (rho_minus, rho_plus) of h, or c >= H*."""

    code = 'domain-violation'

    def __init__(self, value, lower, upper, what='y'):
        self.value = value
        self.lower = lower
        self.upper = upper
        self.what = what
        super().__init__(f"{what}={value!r} outside the admissible domain ({lower!r}, {upper!r})")


class NoBracket(NodalAtlasError):
    """Geometric bracket expansion found no sign change."""

    code = 'no-bracket'

    def __init__(self, target, side, limit):
        self.target = target
        self.side = side
        self.limit = limit
        super().__init__(f"no bracket for level {target!r} on side '{side}' up to |x|={limit!r}")


class DegenerateLevel(NodalAtlasError):
    """The level c is a critical value: F' vanishes at the crossing."""

    code = 'degenerate-level'

    def __init__(self, c, x, slope):
        self.c = c
        self.x = x
        self.slope = slope
        super().__init__(f"level c={c!r} is degenerate at x={x!r} (F'={slope!r})")


class IncompatibleGeometry(NodalAtlasError):
    """The gap level line does not cross the annuli as required."""

    code = 'incompatible-geometry'

    def __init__(self, message, slack=None):
        self.slack = slack
        super().__init__(message)


class OriginCrossing(NodalAtlasError):
    """A trajectory passed through the origin, so its angle is undefined."""

    code = 'origin-crossing'

    def __init__(self, t, radius):
        self.t = t
        self.radius = radius
        super().__init__(f"trajectory reaches the origin at t={t!r} (radius {radius!r})")


class TangentialZero(NodalAtlasError):
    """A component touches zero without changing sign."""

    code = 'tangential-zero'

    def __init__(self, component, t, value):
        self.component = component
        self.t = t
        self.value = value
        super().__init__(f"{component}-component touches zero at t={t!r} (|{component}|={value!r})")


class MissingCertificate(NodalAtlasError):
    """A bound was requested without a satisfied certificate for every piece."""

    code = 'missing-certificate'

    def __init__(self, index, what='twist'):
        self.index = index
        self.what = what
        super().__init__(f"missing or unsatisfied {what} certificate for interval {index}")


class MapUndefined(NodalAtlasError):
    """The Poincare map is undefined because the trajectory blew up."""

    code = 'map-undefined'

    def __init__(self, t, point):
        self.t = t
        self.point = point
        super().__init__(f"trajectory leaves the domain of h at t={t!r} near {point!r}")


class OutOfRange(NodalAtlasError):
    """A ratio parameter lies outside the range where the formula is defined."""

    code = 'out-of-range'

    def __init__(self, name, value, valid):
        self.name = name
        self.value = value
        self.valid = valid
        super().__init__(f"{name}={value!r} outside {valid}")


class SignViolation(NodalAtlasError):
    """An operation was requested for the wrong sign of lambda."""

    code = 'sign-violation'

    def __init__(self, lam, required):
        self.lam = lam
        self.required = required
        super().__init__(f"lambda={lam!r} but the operation requires lambda {required}")


class InvalidWindow(NodalAtlasError):
    """An integration window is empty or outside [0, L]."""

    code = 'invalid-window'

    def __init__(self, t0, t1, length=None):
        self.t0 = t0
        self.t1 = t1
        self.length = length
        super().__init__(f"invalid integration window [{t0!r}, {t1!r}] (L={length!r})")


class ConfigError(NodalAtlasError):
    """A configuration file is malformed; key_path names the offending entry."""

    code = 'config-error'

    def __init__(self, key_path, message):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")


class CertificationViolated(NodalAtlasError):
    """A task expected a satisfied certificate and got a violation."""

    code = 'certification-violated'

    def __init__(self, what, detail):
        self.what = what
        self.detail = detail
        super().__init__(f"{what} violated: {detail}")

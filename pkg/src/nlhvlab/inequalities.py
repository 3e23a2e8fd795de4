"""Leggett-type and CHSH inequalities: left-hand sides, bounds and thresholds.

All angles are radians. ``phi`` is the relative angle between Alice's and
Bob's settings on the Poincare sphere.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import DegenerateAngle, NoViolation

CHSH_BOUND = 2.0
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LeggettInputs:
    e11_phi: float
    e22_phi: float
    e23_zero: float
    phi: float

    def __post_init__(self):
        for name in ("e11_phi", "e22_phi", "e23_zero"):
            if abs(getattr(self, name)) > 1.0 + 1e-12:
                raise ValueError(f"{name} outside [-1, 1]")
        if not 0.0 <= self.phi <= math.pi:
            raise ValueError("phi must lie in [0, pi]")


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    bound: float
    std_error: float = 0.0
    phi: float = None
    margin: float = field(init=False)
    sigma_margin: float = field(init=False)

    def __post_init__(self):
        margin = self.lhs - self.bound
        object.__setattr__(self, "margin", margin)
        object.__setattr__(self, "sigma_margin", margin / self.std_error if self.std_error > 0 else 0.0)

    @property
    def violated(self):
        return self.margin > 0

    def to_dict(self):
        out = {"name": self.name, "lhs": self.lhs, "bound": self.bound, "std_error": self.std_error,
               "margin": self.margin, "sigma_margin": self.sigma_margin}
        if self.phi is not None:
            out["phi_deg"] = math.degrees(self.phi)
        return out


def leggett_lhs(inputs):
    return abs(inputs.e11_phi + inputs.e23_zero) + abs(inputs.e22_phi + inputs.e23_zero)


def leggett_bound(phi):
    return 4.0 - (4.0 / np.pi) * np.abs(np.sin(np.asarray(phi) / 2.0))


def chsh_value(e11, e12, e21, e22):
    return abs(e11 + e12 - e21 + e22)


def quantum_leggett_lhs(phi, vis=1.0):
    return 2.0 * vis * (1.0 + np.cos(phi))


def quantum_chsh_at_settings(phi, vis=1.0):
    """CHSH value of the singlet at the orthogonal-plane settings.

    There E11 = E22 = -V cos(phi), E12 = 0 and E21 = V sin(phi).
    """
    return vis * (2.0 * np.cos(phi) + np.sin(phi))


def critical_visibility_nlhv(phi):
    """Smallest visibility at which the quantum value reaches the Leggett bound."""
    if math.isclose(abs(phi) % (2 * math.pi), math.pi, abs_tol=1e-12):
        raise DegenerateAngle("quantum value vanishes at phi = pi")
    return float(leggett_bound(phi) / quantum_leggett_lhs(phi))


def critical_visibility_chsh_here(phi=None):
    """2 / S_CHSH at the orthogonal-plane settings; ``phi`` defaults to :func:`find_phi_max`."""
    if phi is None:
        phi = find_phi_max()
    return float(CHSH_BOUND / quantum_chsh_at_settings(phi))


def critical_visibility_chsh_standard():
    """Threshold for the usual single-plane CHSH optimum, 2 / (2 sqrt 2)."""
    return 1.0 / math.sqrt(2.0)


def golden_section_max(f, lo, hi, tol=1e-8):
    """Maximize a unimodal f on [lo, hi]; returns the abscissa."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def _ratio(phi):
    return 2.0 * (1.0 + math.cos(phi)) / (4.0 - (4.0 / math.pi) * abs(math.sin(phi / 2.0)))


def _margin(phi, vis=1.0):
    return 2.0 * vis * (1.0 + math.cos(phi)) - 4.0 + (4.0 / math.pi) * abs(math.sin(phi / 2.0))


def find_phi_max(tol=1e-8):
    """Angle of strongest violation: maximizes quantum value / bound on (0, pi/2).

    This is also the angle needing the least visibility. The absolute
    difference peaks slightly earlier, see :func:`find_phi_max_margin`.
    """
    return golden_section_max(_ratio, 1e-6, math.pi / 2, tol)


def find_phi_max_margin(tol=1e-8):
    """Angle maximizing quantum value minus bound at unit visibility."""
    return golden_section_max(_margin, 1e-6, math.pi / 2, tol)


def violation_window(vis, xtol=1e-10):
    """Range of phi where 2V(1 + cos phi) exceeds the bound.

    Raises :class:`NoViolation` below the critical visibility. At exactly the
    critical visibility the window shrinks to the tangent point.
    """
    def f(phi):
        return _margin(phi, vis)

    peak = golden_section_max(f, 0.0, math.pi / 2)
    top = f(peak)
    if top < -1e-12:
        raise NoViolation(f"visibility {vis} is below the critical value {critical_visibility_nlhv(find_phi_max()):.6f}")
    if top <= 0.0:
        return peak, peak
    low = 0.0 if f(0.0) >= 0.0 else bisect(f, 0.0, peak, xtol=xtol)
    high = bisect(f, peak, math.pi / 2, xtol=xtol)
    return low, high


def _abs_term_error(coeffs, values, errors):
    s = sum(c * x for c, x in zip(coeffs, values))
    if s == 0.0:
        warnings.warn("absolute-value argument is exactly zero; taking derivative +1", RuntimeWarning)
        sign = 1.0
    else:
        sign = math.copysign(1.0, s)
    return sum((sign * c * e) ** 2 for c, e in zip(coeffs, errors))


def _value_error(x):
    if hasattr(x, "value"):
        return float(x.value), float(x.std_error)
    return float(x), 0.0


def leggett_report(e11, e22, e23, phi):
    """S_NLHV with its bound and propagated error.

    Inputs are floats or CorrelationEstimates. Each occurrence of a
    correlation inside an absolute value contributes its own variance, so the
    shared perfect-correlation term enters twice in quadrature.
    """
    (x11, s11), (x22, s22), (x23, s23) = map(_value_error, (e11, e22, e23))
    lhs = leggett_lhs(LeggettInputs(x11, x22, x23, phi))
    var = (_abs_term_error((1, 1), (x11, x23), (s11, s23))
           + _abs_term_error((1, 1), (x22, x23), (s22, s23)))
    return InequalityReport("S_NLHV", lhs, float(leggett_bound(phi)), math.sqrt(var), phi)


def chsh_report(e11, e12, e21, e22, phi=None):
    vals = [_value_error(x) for x in (e11, e12, e21, e22)]
    coeffs = (1, 1, -1, 1)
    lhs = chsh_value(*(v for v, _ in vals))
    var = _abs_term_error(coeffs, [v for v, _ in vals], [s for _, s in vals])
    return InequalityReport("S_CHSH", lhs, CHSH_BOUND, math.sqrt(var), phi)

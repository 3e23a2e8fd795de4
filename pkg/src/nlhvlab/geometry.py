"""Poincare-sphere vectors and the lab-to-sphere mapping of polarizer settings.

Axis convention: +z is horizontal (H) linear polarization, +x is +45 degree
linear, +y is circular. A linear polarizer at lab angle theta sits at sphere
angle 2*theta in the x-z plane; a quarter-wave plate with its fast axis at 0
degrees moves the same polarizer angle into the y-z plane.
"""
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegeneratePlane

ORTHO_TOL = 1e-9


class PoincareVector(NamedTuple):
    x: float
    y: float
    z: float

    @classmethod
    def normalized(cls, x, y=None, z=None):
        """Build a unit vector from components or from any length-3 sequence."""
        if y is None and z is None:
            x, y, z = np.asarray(x, dtype=float)
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(float(x) / norm, float(y) / norm, float(z) / norm)

    def dot(self, other):
        ox, oy, oz = other
        return self.x * ox + self.y * oy + self.z * oz

    def __neg__(self):
        return PoincareVector(-self.x, -self.y, -self.z)

    def as_array(self):
        return np.array(self, dtype=float)


class Plane(enum.Enum):
    LINEAR = "linear"    # x-z great circle, bare polarizer
    ROTATED = "rotated"  # y-z great circle, quarter-wave plate in the beam


@dataclass(frozen=True)
class PolarizerSetting:
    angle: float  # degrees in the lab frame
    plane: Plane = Plane.LINEAR

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValueError(f"polarizer angle must be finite, got {self.angle}")
        object.__setattr__(self, "plane", Plane(self.plane))


@dataclass(frozen=True)
class PlanePair:
    first: tuple
    second: tuple


def polarizer_to_poincare(setting):
    # lab angles are defined mod 180 degrees; the doubled angle is then mod 360
    theta = math.radians(2.0 * math.fmod(setting.angle, 180.0))
    s, c = math.sin(theta), math.cos(theta)
    if setting.plane is Plane.LINEAR:
        return PoincareVector(s, 0.0, c)
    return PoincareVector(0.0, s, c)


def sphere_angle(a, b):
    """Angle between two unit vectors on the sphere, in radians."""
    d = float(np.dot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
    return math.acos(min(1.0, max(-1.0, d)))


def plane_normal(a, b, tol=ORTHO_TOL):
    """Unit normal of span(a, b), or None when a and b are collinear."""
    n = np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    norm = np.linalg.norm(n)
    if norm <= tol:
        return None
    return n / norm


def planes_orthogonal(pair, tol=ORTHO_TOL):
    """True when the plane of ``pair.first`` is orthogonal to that of ``pair.second``.

    A collinear pair defines no plane by itself; its direction is then
    required to lie in the other pair's plane, which is how the
    perfect-correlation setting b3 = a2 sits on the intersection line.
    """
    n1 = plane_normal(*pair.first)
    n2 = plane_normal(*pair.second)
    if n1 is None and n2 is None:
        raise DegeneratePlane("both setting pairs are collinear")
    if n1 is None:
        d = np.asarray(pair.first[0], dtype=float)
        return bool(abs(np.dot(d, n2)) <= tol)
    if n2 is None:
        d = np.asarray(pair.second[0], dtype=float)
        return bool(abs(np.dot(d, n1)) <= tol)
    return bool(abs(np.dot(n1, n2)) <= tol)


def plane_basis(normal):
    """Orthonormal (e1, e2) spanning the plane orthogonal to ``normal``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.eye(3)[np.argmin(np.abs(n))]
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def uniform_sphere_sample(rng, size=None):
    """Draw points uniformly on the unit sphere.

    With ``size=None`` a single PoincareVector is returned, otherwise an
    array of shape (size, 3).
    """
    if size is None:
        return PoincareVector.normalized(rng.standard_normal(3))
    pts = rng.standard_normal((size, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts

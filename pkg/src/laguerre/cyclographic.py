"""Cyclographic dictionary between oriented spheres/planes of R^3 and R^4_1."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import sqrt

import numpy as np

from .minkowski import TIME_AXIS, CausalCharacter, causal_character, lorentz_dot, lorentz_norm2

SQRT2 = sqrt(2.0)
NORMAL_SLACK = 1e-6


@dataclass(frozen=True)
class OrientedSphere:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class OrientedPlane:
    normal: np.ndarray
    point: np.ndarray


@dataclass(frozen=True)
class ContactElement:
    point: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class IsotropicLine:
    """The null line base + t*direction, canonically normalized.

    The direction satisfies <v, e1 + e4> = -1 and the base is the point of
    the line with r = 0, so two equal lines compare equal componentwise.
    """

    base: np.ndarray
    direction: np.ndarray


def _unit(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    length = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(length - 1.0) > NORMAL_SLACK):
        raise ValueError("normal must be a unit vector")
    return n / length[..., None]


def sphere_coords_to_point(center, radius):
    """Vectorized x(p, r) for arrays of centers (..., 3) and radii (...)."""
    p = np.asarray(center, dtype=float)
    r = np.asarray(radius, dtype=float)
    out = np.empty(p.shape[:-1] + (4,))
    out[..., 0] = (r + p[..., 0]) / SQRT2
    out[..., 1] = p[..., 1]
    out[..., 2] = p[..., 2]
    out[..., 3] = (r - p[..., 0]) / SQRT2
    return out


def point_to_sphere_coords(x):
    """Inverse of :func:`sphere_coords_to_point`: returns (centers, radii)."""
    x = np.asarray(x, dtype=float)
    r = (x[..., 0] + x[..., 3]) / SQRT2
    p = np.stack([(x[..., 0] - x[..., 3]) / SQRT2, x[..., 1], x[..., 2]], axis=-1)
    return p, r


def sphere_to_point(s: OrientedSphere) -> np.ndarray:
    return sphere_coords_to_point(s.center, s.radius)


def point_to_sphere(x) -> OrientedSphere:
    p, r = point_to_sphere_coords(x)
    return OrientedSphere(p, float(r))


def normal_to_isotropic(n):
    """v(n) = ((1 + n1)/2, n2/sqrt2, n3/sqrt2, (1 - n1)/2), vectorized."""
    n = _unit(n)
    out = np.empty(n.shape[:-1] + (4,))
    out[..., 0] = (1.0 + n[..., 0]) / 2.0
    out[..., 1] = n[..., 1] / SQRT2
    out[..., 2] = n[..., 2] / SQRT2
    out[..., 3] = (1.0 - n[..., 0]) / 2.0
    return out


def plane_to_isotropic_normal(plane: OrientedPlane) -> np.ndarray:
    return normal_to_isotropic(plane.normal)


def contact_to_line(ce: ContactElement) -> IsotropicLine:
    base = sphere_coords_to_point(ce.point, 0.0)
    return IsotropicLine(base, normal_to_isotropic(ce.normal))


def lines_to_contacts(base, direction, tol: float = 1e-9):
    """Vectorized line -> contact element decode.

    Returns ``(points, normals)``.  Raises if any direction is not future
    pointing null (relative tolerance ``tol``).
    """
    x = np.asarray(base, dtype=float)
    v = np.asarray(direction, dtype=float)
    scale = np.sum(v * v, axis=-1)
    time = lorentz_dot(v, TIME_AXIS)
    if np.any(np.abs(lorentz_norm2(v)) > tol * scale) or np.any(time >= 0):
        raise ValueError("direction is not future-pointing lightlike")
    v = v / (-time)[..., None]
    # v1 + v4 = 1 after normalization, so r(x + t v) = 0 at t = -(x1 + x4)
    t = -(x[..., 0] + x[..., 3])
    x0 = x + t[..., None] * v
    p, _ = point_to_sphere_coords(x0)
    n = np.stack([v[..., 0] - v[..., 3], SQRT2 * v[..., 1], SQRT2 * v[..., 2]], axis=-1)
    return p, n


def canonical_line(base, direction) -> IsotropicLine:
    p, n = lines_to_contacts(base, direction)
    return contact_to_line(ContactElement(p, n))


def line_to_contact(line: IsotropicLine) -> ContactElement:
    p, n = lines_to_contacts(line.base, line.direction)
    return ContactElement(p, n)


class PairKind(str, Enum):
    TANGENTIAL = "tangential"
    PARALLEL = "parallel"
    CONTACT = "contact"


@dataclass(frozen=True)
class PairRelation:
    kind: PairKind
    distance: float


def pair_relation(x, y, tol: float = 1e-12) -> PairRelation:
    """Tangential / parallel distance between two L-spheres, or contact."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    q = float(lorentz_norm2(d))
    if abs(q) < tol * (1.0 + float(np.dot(d, d))):
        return PairRelation(PairKind.CONTACT, sqrt(abs(q)))
    kind = PairKind.TANGENTIAL if q > 0 else PairKind.PARALLEL
    return PairRelation(kind, sqrt(abs(q)))


@dataclass(frozen=True)
class SphericalSystem:
    center: np.ndarray
    value: float

    @property
    def kind(self) -> str:
        if self.value == 0:
            return "isotropic"
        return "timelike" if self.value > 0 else "spacelike"


@dataclass(frozen=True)
class PlanarSystem:
    point: np.ndarray
    normal: np.ndarray

    @property
    def kind(self) -> str:
        cc = causal_character(self.normal)
        if cc is CausalCharacter.SPACELIKE:
            return "timelike"
        if cc is CausalCharacter.TIMELIKE:
            return "spacelike"
        if cc is CausalCharacter.ZERO:
            return "degenerate"
        return "isotropic"


def system_membership(x, system: SphericalSystem | PlanarSystem, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    if isinstance(system, SphericalSystem):
        d = x - system.center
        return bool(abs(float(lorentz_norm2(d)) - system.value) <= tol)
    if isinstance(system, PlanarSystem):
        return bool(abs(float(lorentz_dot(x - system.point, system.normal))) <= tol)
    raise TypeError(f"unknown system {type(system).__name__}")

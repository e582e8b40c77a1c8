"""Lorentzian linear algebra in the null basis, the Laguerre group and its algebra.

Vectors of R^4_1 are plain ``numpy`` arrays with a trailing axis of length 4.
Everything vectorizes over leading axes, which is how the frame integrator
uses it.  Group elements are handled either as :class:`LaguerreElement` or as
5x5 homogeneous matrices ``[[a, x], [0, 1]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# <v, w> = -(v1 w4 + v4 w1) + v2 w2 + v3 w3
G = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)
E = np.eye(4)
E1, E2, E3, E4 = E
TIME_AXIS = E1 + E4

DEFAULT_TOL = 1e-9


class InvalidElement(ValueError):
    """A matrix or frame failed the Laguerre group conditions."""


class CausalCharacter(str, Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE_POSITIVE = "lightlike_positive"
    LIGHTLIKE_NEGATIVE = "lightlike_negative"
    ZERO = "zero"


def lorentz_dot(v, w):
    """Minkowski product, broadcasting over leading axes."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return (
        -(v[..., 0] * w[..., 3] + v[..., 3] * w[..., 0])
        + v[..., 1] * w[..., 1]
        + v[..., 2] * w[..., 2]
    )


def lorentz_norm2(v):
    return lorentz_dot(v, v)


def causal_character(v, tol: float = 1e-12) -> CausalCharacter:
    """Classify a single vector.

    ``tol`` is relative to the squared Euclidean size of ``v``; anything
    below it counts as null.
    """
    v = np.asarray(v, dtype=float)
    scale = float(np.dot(v, v))
    if scale == 0.0:
        return CausalCharacter.ZERO
    n2 = float(lorentz_norm2(v))
    if n2 > tol * scale:
        return CausalCharacter.SPACELIKE
    time = float(lorentz_dot(v, TIME_AXIS))
    if n2 < -tol * scale:
        return CausalCharacter.TIMELIKE
    return CausalCharacter.LIGHTLIKE_POSITIVE if time < 0 else CausalCharacter.LIGHTLIKE_NEGATIVE


def is_future_pointing(v, tol: float = 1e-12):
    """True for timelike-or-null vectors with <v, e1 + e4> < 0."""
    v = np.asarray(v, dtype=float)
    scale = np.sum(v * v, axis=-1)
    return (lorentz_norm2(v) <= tol * scale) & (lorentz_dot(v, TIME_AXIS) < 0)


@dataclass
class ValidityReport:
    ok: bool
    residuals: dict[str, float] = field(default_factory=dict)


def gram(vectors):
    """Gram matrix of the rows (or last-but-one axis) of ``vectors``."""
    vectors = np.asarray(vectors, dtype=float)
    return np.einsum("...ia,ab,...jb->...ij", vectors, G, vectors)


def validate_laguerre_linear(a, tol: float = DEFAULT_TOL) -> ValidityReport:
    """Check det a = 1, a^T g a = g and that a e1, a e4 are future null."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(a, dtype=float)
    det_res = abs(np.linalg.det(a) - 1.0)
    metric_res = float(np.max(np.abs(a.T @ G @ a - G)))
    cone = min(-float(lorentz_dot(a[:, 0], TIME_AXIS)), -float(lorentz_dot(a[:, 3], TIME_AXIS)))
    # cone residual: 0 when both columns point to the future, else the violation size
    cone_res = max(0.0, -cone)
    ok = det_res <= tol and metric_res <= tol and cone > 0
    return ValidityReport(ok, {"det": det_res, "metric": metric_res, "cone": cone_res})


@dataclass(frozen=True)
class LaguerreFrame:
    """Origin ``x`` and basis ``a`` with ``a[:, i]`` the vector a_{i+1}."""

    x: np.ndarray
    a: np.ndarray

    @classmethod
    def standard(cls) -> "LaguerreFrame":
        return cls(np.zeros(4), np.eye(4))

    @property
    def basis(self) -> tuple[np.ndarray, ...]:
        return tuple(self.a[:, i] for i in range(4))


def validate_frame(frame: LaguerreFrame, tol: float = DEFAULT_TOL) -> ValidityReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(frame.a, dtype=float)
    gram_res = float(np.max(np.abs(a.T @ G @ a - G)))
    a1, a4 = a[:, 0], a[:, 3]
    cone_ok = bool(is_future_pointing(a1) and is_future_pointing(a4))
    ok = gram_res <= tol and cone_ok
    return ValidityReport(ok, {"gram": gram_res, "cone": 0.0 if cone_ok else 1.0})


@dataclass(frozen=True)
class LaguerreElement:
    """Affine isometry v -> linear @ v + translation."""

    translation: np.ndarray
    linear: np.ndarray

    @classmethod
    def identity(cls) -> "LaguerreElement":
        return cls(np.zeros(4), np.eye(4))

    @classmethod
    def from_homogeneous(cls, m) -> "LaguerreElement":
        m = np.asarray(m, dtype=float)
        return cls(m[:4, 4].copy(), m[:4, :4].copy())

    def homogeneous(self) -> np.ndarray:
        return to_homogeneous(self.translation, self.linear)

    def as_frame(self) -> LaguerreFrame:
        return LaguerreFrame(self.translation, self.linear)

    def check(self, tol: float = DEFAULT_TOL) -> None:
        rep = validate_laguerre_linear(self.linear, tol)
        if not rep.ok:
            raise InvalidElement(f"not a Laguerre element: {rep.residuals}")

    def __matmul__(self, other: "LaguerreElement") -> "LaguerreElement":
        return compose(self, other)


def to_homogeneous(translation, linear):
    translation = np.asarray(translation, dtype=float)
    linear = np.asarray(linear, dtype=float)
    shape = linear.shape[:-2]
    out = np.zeros(shape + (5, 5))
    out[..., :4, :4] = linear
    out[..., :4, 4] = translation
    out[..., 4, 4] = 1.0
    return out


def invert_homogeneous(H):
    """Inverse of a stack of homogeneous Laguerre matrices, using a^{-1} = g a^T g."""
    H = np.asarray(H, dtype=float)
    a = H[..., :4, :4]
    ainv = G @ np.swapaxes(a, -1, -2) @ G
    out = np.zeros_like(H)
    out[..., :4, :4] = ainv
    out[..., :4, 4] = -np.einsum("...ij,...j->...i", ainv, H[..., :4, 4])
    out[..., 4, 4] = 1.0
    return out


def compose(A: LaguerreElement, B: LaguerreElement, check: bool = False) -> LaguerreElement:
    """(x, a)(y, b) = (x + a y, a b)."""
    if check:
        A.check()
        B.check()
    return LaguerreElement(A.translation + A.linear @ B.translation, A.linear @ B.linear)


def invert(A: LaguerreElement, check: bool = False) -> LaguerreElement:
    if check:
        A.check()
    # a^{-1} = g^{-1} a^T g for an isometry
    ainv = G @ A.linear.T @ G
    return LaguerreElement(-ainv @ A.translation, ainv)


def act_on_line(A: LaguerreElement, base, direction, check: bool = False):
    """(x, a).[y, v] = [x + a y, a v]; returns the new (base, direction)."""
    if check:
        A.check()
    return A.translation + A.linear @ np.asarray(base, float), A.linear @ np.asarray(direction, float)


def group_op(kind: str, *args, check: bool = True):
    """Dispatch to :func:`compose`, :func:`invert` or :func:`act_on_line`."""
    ops = {"compose": compose, "invert": invert, "act_on_line": act_on_line}
    try:
        op = ops[kind]
    except KeyError:
        raise ValueError(f"unknown group operation {kind!r}") from None
    return op(*args, check=check)


# -- Lie algebra ---------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraElement:
    """Infinitesimal Laguerre motion: translation part ``v`` and linear part ``X``."""

    v: np.ndarray
    X: np.ndarray

    def homogeneous(self) -> np.ndarray:
        return algebra_homogeneous(self.v, self.X)

    def residual(self) -> float:
        """Size of X^T g + g X; zero for a genuine algebra element."""
        return float(np.max(np.abs(self.X.T @ G + G @ self.X)))

    def __mul__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(self.v * s, self.X * s)

    __rmul__ = __mul__

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.v, -self.X)


def algebra_homogeneous(v, X):
    v = np.asarray(v, dtype=float)
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[:-2] + (5, 5))
    out[..., :4, :4] = X
    out[..., :4, 4] = v
    return out


def bracket(a, b):
    """Matrix commutator, batched over leading axes."""
    return a @ b - b @ a


_TAYLOR_ORDER = 14
_SCALE_TARGET = 0.5


def expm_batch(m) -> np.ndarray:
    """Matrix exponential of a stack of small matrices.

    Scaling and squaring around a fixed-order Taylor polynomial.  With
    ``||m / 2^s||_1 <= 0.5`` the truncation error is below 0.5**15 / 15!,
    far under double precision.
    """
    m = np.asarray(m, dtype=float)
    single = m.ndim == 2
    if single:
        m = m[None]
    n = m.shape[-1]
    norms = np.max(np.sum(np.abs(m), axis=-2), axis=-1)
    with np.errstate(divide="ignore"):
        s = np.where(norms > _SCALE_TARGET, np.ceil(np.log2(norms / _SCALE_TARGET)), 0).astype(int)
    scaled = m / (2.0 ** s)[..., None, None]
    eye = np.broadcast_to(np.eye(n), m.shape)
    result = eye.copy()
    term = eye.copy()
    for k in range(1, _TAYLOR_ORDER + 1):
        term = term @ scaled / k
        result = result + term
    smax = int(s.max()) if s.size else 0
    for step in range(smax):
        sq = result @ result
        mask = (s > step)[..., None, None]
        result = np.where(mask, sq, result)
    return result[0] if single else result


def algebra_exp(xi: AlgebraElement, tol: float = 1e-12) -> LaguerreElement:
    """Group exponential via the 5x5 homogeneous embedding."""
    h = xi.homogeneous()
    if not np.all(np.isfinite(h)):
        raise ValueError("algebra element must be finite")
    return LaguerreElement.from_homogeneous(expm_batch(h))


def boost(lam: float) -> np.ndarray:
    """diag(lam, 1, 1, 1/lam): a Laguerre linear map for lam > 0."""
    return np.diag([lam, 1.0, 1.0, 1.0 / lam])


def random_algebra_element(rng: np.random.Generator, scale: float = 1.0) -> AlgebraElement:
    """Sample X with X^T g + g X = 0 by projecting a Gaussian matrix."""
    M = rng.normal(size=(4, 4)) * scale
    # g X antisymmetric  <=>  X = g^{-1} S with S antisymmetric (g^{-1} = g)
    S = 0.5 * (M - M.T)
    return AlgebraElement(rng.normal(size=4) * scale, G @ S)


def random_laguerre_element(rng: np.random.Generator, scale: float = 1.0) -> LaguerreElement:
    """exp of a random algebra element; lies in the identity component."""
    return algebra_exp(random_algebra_element(rng, scale))

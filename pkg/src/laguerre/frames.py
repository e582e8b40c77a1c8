"""Maurer-Cartan forms of L-isothermic surfaces and their integration.

The form is stored as two stacks of 5x5 homogeneous algebra matrices,
``alpha = xi_x dx + xi_y dy``.  Frames are stacks of 5x5 homogeneous group
matrices ``[[a, x], [0, 1]]`` solving ``dA = A alpha`` on the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blaschke import InvariantField, Potential, invariants_from_potential
from .cyclographic import lines_to_contacts
from .fields import Grid, d_x, d_y, pad, strip
from .minkowski import (
    G,
    TIME_AXIS,
    AlgebraElement,
    InvalidElement,
    LaguerreElement,
    bracket,
    expm_batch,
    invert_homogeneous,
    lorentz_dot,
    lorentz_norm2,
    validate_laguerre_linear,
)

SCHEMES = ("euler", "midpoint_exp")
DEFAULT_FLATNESS_THRESHOLD = 1e-3
HOLONOMY_STRIDE = 8


class FlatnessError(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class MaurerCartanField:
    grid: Grid
    xi_x: np.ndarray  # (nx, ny, 5, 5)
    xi_y: np.ndarray
    m: float = 0.0
    u: np.ndarray | None = None  # potential restricted to this grid

    def at(self, i: int, j: int) -> tuple[AlgebraElement, AlgebraElement]:
        def split(h):
            return AlgebraElement(h[:4, 4].copy(), h[:4, :4].copy())

        return split(self.xi_x[i, j]), split(self.xi_y[i, j])

    def algebra_residual(self) -> float:
        """Largest entry of X^T g + g X over all nodes and both components."""
        out = 0.0
        for xi in (self.xi_x, self.xi_y):
            X = xi[..., :4, :4]
            out = max(out, float(np.max(np.abs(np.swapaxes(X, -1, -2) @ G + G @ X))))
        return out


def alpha_matrices(u, ux, uy, W, J):
    """dx- and dy-coefficients of the middle-frame Maurer-Cartan form (vectorized)."""
    shape = np.shape(u)
    eu = np.exp(u)
    a = (W + J) * eu
    b = (W - J) * eu
    Xx = np.zeros(shape + (5, 5))
    Xy = np.zeros(shape + (5, 5))
    # translation parts (0, e^u, 0, 0) and (0, 0, e^u, 0)
    Xx[..., 1, 4] = eu
    Xy[..., 2, 4] = eu

    Xx[..., 0, 0] = 2 * ux
    Xx[..., 0, 1] = a
    Xx[..., 1, 0] = eu
    Xx[..., 1, 2] = uy
    Xx[..., 1, 3] = a
    Xx[..., 2, 1] = -uy
    Xx[..., 3, 1] = eu
    Xx[..., 3, 3] = -2 * ux

    Xy[..., 0, 0] = 2 * uy
    Xy[..., 0, 2] = b
    Xy[..., 1, 2] = -ux
    Xy[..., 2, 0] = -eu
    Xy[..., 2, 1] = ux
    Xy[..., 2, 3] = b
    Xy[..., 3, 2] = -eu
    Xy[..., 3, 3] = -2 * uy
    return Xx, Xy


def assemble_alpha(p: Potential, m: float = 0.0, inv: InvariantField | None = None) -> MaurerCartanField:
    """The form alpha^(m) on the subgrid where all invariants are defined."""
    if inv is None:
        inv = invariants_from_potential(p, m)
    g = p.grid
    v = p.u.values
    margin = inv.margin
    ux = pad(d_x(v, g.hx), 1)
    uy = pad(d_y(v, g.hy), 1)
    sub = g.shrink(margin)
    Xx, Xy = alpha_matrices(
        strip(v, margin), strip(ux, margin), strip(uy, margin), strip(inv.W, margin), strip(inv.J, margin)
    )
    return MaurerCartanField(sub, Xx, Xy, m, strip(v, margin).copy())


def flatness_field(alpha: MaurerCartanField) -> np.ndarray:
    """Per-cell max-entry norm of d_x xi_y - d_y xi_x + [xi_x, xi_y]."""
    g = alpha.grid
    X, Y = alpha.xi_x, alpha.xi_y
    dYdx = ((Y[1:, :-1] + Y[1:, 1:]) - (Y[:-1, :-1] + Y[:-1, 1:])) / (2 * g.hx)
    dXdy = ((X[:-1, 1:] + X[1:, 1:]) - (X[:-1, :-1] + X[1:, :-1])) / (2 * g.hy)
    Xc = 0.25 * (X[:-1, :-1] + X[1:, :-1] + X[:-1, 1:] + X[1:, 1:])
    Yc = 0.25 * (Y[:-1, :-1] + Y[1:, :-1] + Y[:-1, 1:] + Y[1:, 1:])
    curv = dYdx - dXdy + bracket(Xc, Yc)
    return np.max(np.abs(curv), axis=(-1, -2))


def flatness_residual(alpha: MaurerCartanField) -> tuple[np.ndarray, float]:
    f = flatness_field(alpha)
    return f, float(np.max(f))


# -- integration -------------------------------------------------------------------


@dataclass
class IntegrationReport:
    flatness_max: float
    holonomy_max: float
    frame_drift_max: float
    scheme: str
    h: float


@dataclass
class FrameField:
    grid: Grid
    frames: np.ndarray  # (nx, ny, 5, 5) homogeneous
    scheme: str = "midpoint_exp"
    sweep: str = "row_first"
    m: float = 0.0
    u: np.ndarray | None = None

    @property
    def origin(self) -> np.ndarray:
        return self.frames[..., :4, 4]

    @property
    def linear(self) -> np.ndarray:
        return self.frames[..., :4, :4]

    def basis(self, k: int) -> np.ndarray:
        """The field a_{k}, 1-based like the usual notation."""
        return self.frames[..., :4, k - 1]

    def element(self, i: int, j: int) -> LaguerreElement:
        return LaguerreElement.from_homogeneous(self.frames[i, j])

    def left_multiply(self, B: LaguerreElement) -> "FrameField":
        return FrameField(self.grid, B.homogeneous() @ self.frames, self.scheme, self.sweep, self.m, self.u)

    def to_csv(self, path) -> None:
        write_frame_csv(path, self)


def edge_transports(alpha: MaurerCartanField, scheme: str) -> tuple[np.ndarray, np.ndarray]:
    """exp(h xi_edge) for every x-edge (i,j)->(i+1,j) and y-edge (i,j)->(i,j+1)."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    g = alpha.grid
    X, Y = alpha.xi_x, alpha.xi_y
    if scheme == "midpoint_exp":
        ex = 0.5 * (X[:-1] + X[1:])
        ey = 0.5 * (Y[:, :-1] + Y[:, 1:])
    else:
        ex = X[:-1]
        ey = Y[:, :-1]
    return expm_batch(g.hx * ex), expm_batch(g.hy * ey)


def sweep(A0: np.ndarray, Ex: np.ndarray, Ey: np.ndarray, order: str = "row_first") -> np.ndarray:
    """Propagate A0 from node (0, 0) across the grid.

    ``row_first``: along the bottom row, then up every column.
    ``column_first``: up the left column, then along every row.
    """
    nx, ny = Ex.shape[0] + 1, Ey.shape[1] + 1
    A = np.empty((nx, ny, 5, 5))
    A[0, 0] = A0
    if order == "row_first":
        for i in range(nx - 1):
            A[i + 1, 0] = A[i, 0] @ Ex[i, 0]
        for j in range(ny - 1):
            A[:, j + 1] = A[:, j] @ Ey[:, j]
    elif order == "column_first":
        for j in range(ny - 1):
            A[0, j + 1] = A[0, j] @ Ey[0, j]
        for i in range(nx - 1):
            A[i + 1, :] = A[i, :] @ Ex[i, :]
    else:
        raise ValueError(f"unknown sweep order {order!r}")
    return A


def subsample_indices(n: int, stride: int = HOLONOMY_STRIDE) -> np.ndarray:
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def integrate_frame(alpha: MaurerCartanField, A0: LaguerreElement | None = None,
                    scheme: str = "midpoint_exp",
                    flatness_threshold: float | None = DEFAULT_FLATNESS_THRESHOLD,
                    holonomy_stride: int = HOLONOMY_STRIDE):
    """Integrate dA = A alpha starting from ``A0`` at the lower-left node.

    Holonomy is measured on every ``holonomy_stride``-th node in each
    direction as max |A_row^{-1} A_col - I|, where ``A_col`` comes from a
    column-first re-integration of the same edge transports.  This is the
    transport around the loop formed by the two sweep paths.
    """
    if A0 is None:
        A0 = LaguerreElement.identity()
    rep = validate_laguerre_linear(A0.linear)
    if not rep.ok:
        raise InvalidElement(f"initial frame is not a Laguerre element: {rep.residuals}")
    _, flat = flatness_residual(alpha)
    if flatness_threshold is not None and flat > flatness_threshold:
        raise FlatnessError(f"flatness residual {flat:.3e} exceeds {flatness_threshold:.3e}", flat)
    Ex, Ey = edge_transports(alpha, scheme)
    H0 = A0.homogeneous()
    A = sweep(H0, Ex, Ey, "row_first")
    B = sweep(H0, Ex, Ey, "column_first")
    si = subsample_indices(alpha.grid.nx, holonomy_stride)
    sj = subsample_indices(alpha.grid.ny, holonomy_stride)
    loop = invert_homogeneous(A[np.ix_(si, sj)]) @ B[np.ix_(si, sj)]
    holonomy = float(np.max(np.abs(loop - np.eye(5))))
    F = FrameField(alpha.grid, A, scheme, "row_first", alpha.m, alpha.u)
    drift = frame_drift(F)
    report = IntegrationReport(flat, holonomy, drift.gram_max, scheme, alpha.grid.h)
    return F, report


def integrate_column_first(alpha: MaurerCartanField, A0: LaguerreElement | None = None,
                           scheme: str = "midpoint_exp") -> FrameField:
    """Full column-first sweep, for path-independence audits."""
    H0 = (A0 or LaguerreElement.identity()).homogeneous()
    Ex, Ey = edge_transports(alpha, scheme)
    return FrameField(alpha.grid, sweep(H0, Ex, Ey, "column_first"), scheme, "column_first", alpha.m, alpha.u)


@dataclass
class DriftReport:
    gram_max: float
    gram: np.ndarray  # per node
    cone_violations: list[tuple[int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.cone_violations


def frame_drift(F: FrameField, tol: float = 1e-9) -> DriftReport:
    """Gram residual |a^T g a - g| and cone-orientation violations per node."""
    a = F.linear
    gram = np.max(np.abs(np.swapaxes(a, -1, -2) @ G @ a - G), axis=(-1, -2))
    bad = np.zeros(F.grid.shape, dtype=bool)
    for k in (0, 3):
        v = a[..., :, k]
        scale = np.sum(v * v, axis=-1)
        bad |= (np.abs(lorentz_norm2(v)) > tol * scale) | (lorentz_dot(v, TIME_AXIS) >= 0)
    # a negated a2 or a3 keeps the Gram matrix but flips the orientation
    bad |= np.linalg.det(a) < 0
    viol = [tuple(int(t) for t in ij) for ij in np.argwhere(bad)]
    return DriftReport(float(np.max(gram)), gram, viol)


# -- Legendre lift -------------------------------------------------------------------


@dataclass
class LegendreRealization:
    f: np.ndarray  # (nx, ny, 3)
    n: np.ndarray  # (nx, ny, 3)
    contact_residual: float
    dn_positive: bool
    nondegeneracy_min: float


def realize_legendre(F: FrameField) -> LegendreRealization:
    """Decode [x, a1] at every node into a contact element (f, n).

    The contact residual is max |df . n| over interior nodes, taken as the
    larger of |f_x . n| and |f_y . n|.  Nondegeneracy is measured by the
    normalized cross product of the coefficient triples of df.dn and dn.dn.
    """
    f, n = lines_to_contacts(F.origin, F.basis(1))
    g = F.grid
    fx, fy = d_x(f, g.hx), d_y(f, g.hy)
    nx_, ny_ = d_x(n, g.hx), d_y(n, g.hy)
    nc = n[1:-1, 1:-1]
    contact = float(max(np.max(np.abs(np.sum(fx * nc, -1))), np.max(np.abs(np.sum(fy * nc, -1))))) if fx.size else 0.0
    III = np.stack([np.sum(nx_ * nx_, -1), np.sum(nx_ * ny_, -1), np.sum(ny_ * ny_, -1)], -1)
    II = np.stack(
        [np.sum(fx * nx_, -1), 0.5 * (np.sum(fx * ny_, -1) + np.sum(fy * nx_, -1)), np.sum(fy * ny_, -1)], -1
    )
    dn_pos = bool(np.all(III[..., 0] > 0) and np.all(III[..., 0] * III[..., 2] - III[..., 1] ** 2 > 0)) if III.size else False
    cross = np.linalg.norm(np.cross(II, III), axis=-1)
    denom = np.linalg.norm(II, axis=-1) * np.linalg.norm(III, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(denom > 0, cross / denom, 0.0)
    nondeg = float(np.min(ratio)) if ratio.size else 0.0
    return LegendreRealization(f, n, contact, dn_pos, nondeg)


# -- CSV -----------------------------------------------------------------------------


def write_frame_csv(path, F: FrameField) -> None:
    """One node per line: i,j,x(4),a1(4),a2(4),a3(4),a4(4)."""
    g = F.grid
    lines = [f"# grid {g.nx},{g.ny},{g.x0!r},{g.x1!r},{g.y0!r},{g.y1!r} scheme={F.scheme} m={F.m!r}"]
    for i in range(g.nx):
        for j in range(g.ny):
            A = F.frames[i, j]
            vals = list(A[:4, 4]) + [A[r, c] for c in range(4) for r in range(4)]
            lines.append(f"{i},{j}," + ",".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_frame_csv(path) -> FrameField:
    rows = Path(path).read_text().splitlines()
    header = rows[0]
    if not header.startswith("# grid "):
        raise ValueError(f"{path}: missing grid header")
    parts = header[len("# grid "):].split()
    nx, ny, x0, x1, y0, y1 = parts[0].split(",")
    meta = dict(p.split("=", 1) for p in parts[1:])
    g = Grid(float(x0), float(x1), float(y0), float(y1), int(nx), int(ny))
    frames = np.zeros((g.nx, g.ny, 5, 5))
    frames[..., 4, 4] = 1.0
    for ln in rows[1:]:
        if not ln.strip():
            continue
        vals = ln.split(",")
        i, j = int(vals[0]), int(vals[1])
        nums = np.array([float(v) for v in vals[2:]])
        frames[i, j, :4, 4] = nums[:4]
        frames[i, j, :4, :4] = nums[4:].reshape(4, 4).T
    return FrameField(g, frames, meta.get("scheme", "midpoint_exp"), "row_first", float(meta.get("m", 0.0)))

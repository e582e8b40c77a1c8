"""Blaschke potentials on rectangular grids.

A potential is the log ``u`` of the conformal factor of the middle coframe,
``alpha_0^2 = e^u dx``, ``alpha_0^3 = e^u dy``.  Special potentials solve the
Liouville-type equation ``Lap u = c e^{-2u}``; general L-isothermic ones only
need the Blaschke equation ``Lap(e^{-u} (e^u)_xy) = 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .fields import Grid, ScalarField, d_x, d_xy, d_y, laplacian, nanmax_abs, pad

log = logging.getLogger(__name__)

# seeds are certified against this multiple of h^2 (stencil error of the
# analytic formulas is roughly 0.1 h^2 on the unit square)
CERTIFY_FACTOR = 50.0


class DomainError(ValueError):
    """Seed parameters are incompatible with the grid."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, result: "NewtonResult"):
        super().__init__(message)
        self.result = result


class ClosednessError(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class Potential:
    """Sampled potential ``u`` with optional character ``c`` and spectral base ``k``."""

    u: ScalarField
    c: float | None = None
    k: float = 0.0
    residual_max: float | None = None

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def special(self) -> bool:
        return self.c is not None

    def certify(self, tol: float | None = None) -> float:
        """Record and check the Liouville residual; raises if above ``tol``."""
        if self.c is None:
            raise ValueError("only potentials with a character can be certified")
        res = liouville_residual(self.u, self.c).max_abs()
        self.residual_max = res
        if tol is None:
            tol = CERTIFY_FACTOR * self.grid.h**2
        if not res <= tol:
            raise DomainError(f"Liouville residual {res:.3e} exceeds {tol:.3e}")
        return res


def radial_values(grid: Grid, c: float) -> np.ndarray:
    X, Y = grid.mesh()
    arg = 1.0 + 0.25 * c * (X**2 + Y**2)
    if np.any(arg <= 0):
        raise DomainError("radial seed needs 1 + (c/4)(x^2 + y^2) > 0 on the grid")
    return np.log(arg)


def cosh1d_values(grid: Grid, c: float) -> np.ndarray:
    if c <= 0:
        raise DomainError("cosh1d seed needs c > 0")
    X, _ = grid.mesh()
    return np.log(np.cosh(np.sqrt(c) * X))


def seed_potential(kind: str, grid: Grid, *, c: float = 0.0, a: float = 0.0, b: float = 0.0,
                   values=None, k: float = 0.0, certify: bool = True) -> Potential:
    """Closed-form solutions of Lap u = c e^{-2u}.

    ``radial``: u = ln(1 + (c/4)(x^2 + y^2)); ``cosh1d``: u = ln cosh(sqrt(c) x);
    ``harmonic``: u = a x + b y with c = 0; ``custom``: user values, with ``c``
    taken as given (pass ``c=None`` for a non-special potential).
    """
    if kind == "radial":
        u, char = radial_values(grid, c), float(c)
    elif kind == "cosh1d":
        u, char = cosh1d_values(grid, c), float(c)
    elif kind == "harmonic":
        X, Y = grid.mesh()
        u, char = a * X + b * Y, 0.0
    elif kind == "custom":
        if values is None:
            raise ValueError("custom seed needs values")
        u, char = np.asarray(values, dtype=float), c
    else:
        raise ValueError(f"unknown seed kind {kind!r}")
    pot = Potential(ScalarField(grid, u), char, float(k))
    if certify and pot.special:
        pot.certify()
    return pot


def liouville_residual(u: ScalarField, c: float) -> ScalarField:
    """Lap_h u - c e^{-2u} on interior nodes, NaN on the boundary."""
    g = u.grid
    v = u.values
    res = laplacian(v, g.hx, g.hy) - c * np.exp(-2 * v[1:-1, 1:-1])
    return ScalarField(g, pad(res, 1))


def blaschke_residual(u: ScalarField) -> ScalarField:
    """Lap_h(e^{-u} (e^u)_xy) with nested central stencils (two-node margin)."""
    g = u.grid
    if g.nx < 5 or g.ny < 5:
        raise ValueError("Blaschke residual needs at least 5 nodes per direction")
    v = u.values
    inner = np.exp(-v[1:-1, 1:-1]) * d_xy(np.exp(v), g.hx, g.hy)
    return ScalarField(g, pad(laplacian(inner, g.hx, g.hy), 2))


# -- Newton solver ------------------------------------------------------------------


@dataclass
class NewtonResult:
    potential: Potential
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    halvings: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


def _interior_laplacian(nx: int, ny: int, hx: float, hy: float) -> sp.csr_matrix:
    """Sparse 5-point Laplacian acting on interior unknowns (Dirichlet data split off)."""
    mx, my = nx - 2, ny - 2
    tx = sp.diags([np.ones(mx - 1), -2 * np.ones(mx), np.ones(mx - 1)], [-1, 0, 1]) / hx**2
    ty = sp.diags([np.ones(my - 1), -2 * np.ones(my), np.ones(my - 1)], [-1, 0, 1]) / hy**2
    # unknowns flattened C-order over (i, j): j varies fastest
    return (sp.kron(tx, sp.identity(my)) + sp.kron(sp.identity(mx), ty)).tocsr()


def newton_solve_liouville(c: float, boundary: ScalarField, u_init: ScalarField | None = None,
                           tol: float = 1e-10, max_iter: int = 20, k: float = 0.0,
                           raise_on_failure: bool = True) -> NewtonResult:
    """Damped Newton for Lap_h u = c e^{-2u} with Dirichlet data from ``boundary``.

    The step is halved (at most 20 times) until the max-norm residual drops.
    ``trace[n]`` is the residual after ``n`` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = boundary.grid
    u = np.array(u_init.values if u_init is not None else np.zeros(g.shape), dtype=float)
    if u.shape != g.shape:
        raise ValueError("initial guess does not match the boundary grid")
    b = boundary.values
    u[0, :], u[-1, :], u[:, 0], u[:, -1] = b[0, :], b[-1, :], b[:, 0], b[:, -1]
    L = _interior_laplacian(g.nx, g.ny, g.hx, g.hy)

    def residual(w):
        return laplacian(w, g.hx, g.hy) - c * np.exp(-2 * w[1:-1, 1:-1])

    F = residual(u)
    res = float(np.max(np.abs(F)))
    result = NewtonResult(Potential(ScalarField(g, u), c, k), [res])
    for it in range(max_iter):
        if res < tol:
            break
        Jac = L + sp.diags(2 * c * np.exp(-2 * u[1:-1, 1:-1]).ravel())
        try:
            step = spsolve(Jac.tocsc(), -F.ravel())
        except RuntimeError as exc:  # singular factorization
            raise ConvergenceError(f"singular Jacobian at iteration {it}: {exc}", result) from exc
        if not np.all(np.isfinite(step)):
            raise ConvergenceError(f"singular Jacobian at iteration {it}", result)
        step = step.reshape(g.nx - 2, g.ny - 2)
        t = 1.0
        for halving in range(21):
            trial = u.copy()
            trial[1:-1, 1:-1] += t * step
            Ft = residual(trial)
            rt = float(np.max(np.abs(Ft)))
            if np.isfinite(rt) and rt < res:
                break
            t *= 0.5
        else:
            raise ConvergenceError("line search failed to reduce the residual", result)
        u, F, res = trial, Ft, rt
        result.trace.append(res)
        result.halvings.append(halving)
        log.debug("newton iteration %d: residual %.3e (damping %g)", it + 1, res, t)
    result.potential = Potential(ScalarField(g, u), c, k, residual_max=res)
    result.converged = res < tol
    if not result.converged and raise_on_failure:
        raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {res:.3e})", result)
    return result


# -- invariants -----------------------------------------------------------------------


@dataclass
class InvariantField:
    """Laguerre invariants per node (NaN where a stencil is missing)."""

    grid: Grid
    q1: np.ndarray
    q2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    J: np.ndarray
    W: np.ndarray
    m: float = 0.0
    margin: int = 1


def invariants_from_potential(p: Potential, m: float = 0.0) -> InvariantField:
    """q1, q2, J from the potential and W_m = W + m e^{-2u}.

    Special potentials use W = k e^{-2u}.  For a general Blaschke potential
    W is recovered from the integrated closed form, ``2 W e^{2u} = K`` with
    ``K`` pinned to ``2k`` at the base node, which reduces to the special
    formula when ``K`` is constant.
    """
    g = p.grid
    v = p.u.values
    e = np.exp(-v[1:-1, 1:-1])
    q1 = pad(-e * d_y(v, g.hy), 1)
    q2 = pad(e * d_x(v, g.hx), 1)
    J = pad(-0.5 * e**2 * laplacian(v, g.hx, g.hy), 1)
    e2u = np.exp(-2 * v)
    if p.special:
        W = p.k * e2u
        margin = 1
    else:
        K, _ = integrate_eta(p.u, 2 * p.k)
        W = 0.5 * K.values * e2u
        margin = 2
    W = W + m * e2u
    if margin == 1:
        W = pad(W[1:-1, 1:-1], 1)
    p1, p3 = W + J, W - J
    return InvariantField(g, q1, q2, p1, np.zeros_like(p1), p3, J, W, m, margin)


def eta_components(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Components of the closed form d(e^{2u}(p1 + p3)) (two-node margin, NaN elsewhere)."""
    g = u.grid
    v = u.values
    D = np.exp(-2 * v[1:-1, 1:-1]) * laplacian(v, g.hx, g.hy)
    vi = v[1:-1, 1:-1]
    core = vi[1:-1, 1:-1]
    e2 = np.exp(2 * core)
    Dc = D[1:-1, 1:-1]
    eta_x = -e2 * (d_x(D, g.hx) + 4 * d_x(vi, g.hx) * Dc)
    eta_y = e2 * (d_y(D, g.hy) + 4 * d_y(vi, g.hy) * Dc)
    return pad(eta_x, 2), pad(eta_y, 2)


def plaquette_curl(wx: np.ndarray, wy: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Trapezoid circulation of w_x dx + w_y dy around each cell, divided by its area."""
    bottom = 0.5 * (wx[:-1, :-1] + wx[1:, :-1]) * hx
    right = 0.5 * (wy[1:, :-1] + wy[1:, 1:]) * hy
    top = 0.5 * (wx[:-1, 1:] + wx[1:, 1:]) * hx
    left = 0.5 * (wy[:-1, :-1] + wy[:-1, 1:]) * hy
    return (bottom + right - top - left) / (hx * hy)


def integrate_eta(u: ScalarField, k0: float = 0.0, threshold: float | None = None):
    """Primitive K of the closed form with K = k0 at the lower-left interior node.

    Integrates by the trapezoid rule along the bottom row of the valid region,
    then up each column.  Returns ``(K, closedness)`` where ``closedness`` is
    the largest discrete curl of the form.
    """
    g = u.grid
    if g.nx < 5 or g.ny < 5:
        raise ValueError("integrating the closed form needs at least 5 nodes per direction")
    ex, ey = eta_components(u)
    wx, wy = ex[2:-2, 2:-2], ey[2:-2, 2:-2]
    curl = plaquette_curl(wx, wy, g.hx, g.hy)
    closed = float(np.max(np.abs(curl))) if curl.size else 0.0
    if threshold is not None and closed > threshold:
        raise ClosednessError(f"closed-form residual {closed:.3e} exceeds {threshold:.3e}", closed)
    K = np.empty_like(wx)
    K[0, 0] = k0
    K[1:, 0] = k0 + np.cumsum(0.5 * (wx[1:, 0] + wx[:-1, 0]) * g.hx)
    K[:, 1:] = K[:, :1] + np.cumsum(0.5 * (wy[:, 1:] + wy[:, :-1]) * g.hy, axis=1)
    return ScalarField(g, pad(K, 2)), closed


def eta_max(u: ScalarField) -> float:
    ex, ey = eta_components(u)
    return max(nanmax_abs(ex), nanmax_abs(ey))

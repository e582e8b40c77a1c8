"""Geometry of the L-Gauss map and the spectral (T-transform) pipeline.

All per-node quantities live on the frame grid (the potential grid minus the
invariant margin).  Second-order central differences are used throughout, so
every measured residual is O(h^2) unless the integrator says otherwise.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .blaschke import InvariantField, Potential, invariants_from_potential
from .cyclographic import point_to_sphere_coords
from .fields import Grid, d_x, d_xx, d_xy, d_y, d_yy, strip
from .frames import (
    DEFAULT_FLATNESS_THRESHOLD,
    FrameField,
    IntegrationReport,
    LegendreRealization,
    assemble_alpha,
    integrate_frame,
    realize_legendre,
)
from .minkowski import CausalCharacter, LaguerreElement, causal_character, lorentz_dot, lorentz_norm2

log = logging.getLogger(__name__)

# relative size below which P = p1 + p3 counts as zero
P_EPS = 1e-6


class BranchError(ValueError):
    """Raised when a detector is called on the wrong (minimal / non-minimal) branch."""


@dataclass
class SurfaceMaps:
    grid: Grid
    sigma: np.ndarray  # (nx, ny, 4)
    f: np.ndarray  # (nx, ny, 3)
    n: np.ndarray  # (nx, ny, 3)


def gauss_map(F: FrameField) -> np.ndarray:
    return F.origin.copy()


def surface_maps(F: FrameField, lift: LegendreRealization | None = None) -> SurfaceMaps:
    lift = lift or realize_legendre(F)
    return SurfaceMaps(F.grid, gauss_map(F), lift.f, lift.n)


def on_frame_grid(a: np.ndarray, inv: InvariantField) -> np.ndarray:
    return strip(a, inv.margin)


def tangents(sigma: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    return d_x(sigma, grid.hx), d_y(sigma, grid.hy)


def metric_tensor(sigma: np.ndarray, grid: Grid) -> np.ndarray:
    """Gram matrix <d sigma, d sigma> of central-difference tangents, (nx-2, ny-2, 2, 2)."""
    sx, sy = tangents(sigma, grid)
    gxx, gxy, gyy = lorentz_dot(sx, sx), lorentz_dot(sx, sy), lorentz_dot(sy, sy)
    return np.stack([np.stack([gxx, gxy], -1), np.stack([gxy, gyy], -1)], -2)


@dataclass
class MetricReport:
    gram: np.ndarray
    deviation: float | None
    positive_definite: bool


def induced_metric(sigma: np.ndarray, grid: Grid, u: np.ndarray | None = None) -> MetricReport:
    """Induced metric and its deviation from e^{2u} times the identity."""
    g = metric_tensor(sigma, grid)
    pd = bool(np.all(g[..., 0, 0] > 0) and np.all(np.linalg.det(g) > 0))
    dev = None
    if u is not None:
        conf = np.exp(2 * u[1:-1, 1:-1])[..., None, None] * np.eye(2)
        dev = float(np.max(np.abs(g - conf)))
    return MetricReport(g, dev, pd)


def normal_part(V: np.ndarray, a1: np.ndarray, a4: np.ndarray) -> np.ndarray:
    """Projection onto span{a1, a4} for a null pair with <a1, a4> = -1."""
    return -lorentz_dot(V, a4)[..., None] * a1 - lorentz_dot(V, a1)[..., None] * a4


def laplace_beltrami_half(sigma: np.ndarray, grid: Grid, u: np.ndarray) -> np.ndarray:
    """(1/2) Lap_g sigma for the conformal metric e^{2u}(dx^2 + dy^2)."""
    lap = d_xx(sigma, grid.hx) + d_yy(sigma, grid.hy)
    return 0.5 * np.exp(-2 * u[1:-1, 1:-1])[..., None] * lap


@dataclass
class MeanCurvatureReport:
    analytic: np.ndarray  # (nx-2, ny-2, 4)
    numeric: np.ndarray
    discrepancy: float
    null_residual: float  # max |<H, H>| of the numeric vector
    parallel_to_a1: float  # max |<H_num, a1>|, the a4-component


def mean_curvature_vector(F: FrameField, inv: InvariantField) -> MeanCurvatureReport:
    """Compare H = (1/2)(p1 + p3) a1 with the normal part of half the Laplace-Beltrami of sigma."""
    g = F.grid
    W = on_frame_grid(inv.W, inv)[1:-1, 1:-1]
    a1 = F.basis(1)[1:-1, 1:-1]
    a4 = F.basis(4)[1:-1, 1:-1]
    analytic = W[..., None] * a1
    numeric = normal_part(laplace_beltrami_half(F.origin, g, F.u), a1, a4)
    return MeanCurvatureReport(
        analytic,
        numeric,
        float(np.max(np.abs(numeric - analytic))),
        float(np.max(np.abs(lorentz_norm2(numeric)))),
        float(np.max(np.abs(lorentz_dot(numeric, a1)))),
    )


def second_fundamental_components(F: FrameField) -> dict[str, np.ndarray]:
    """Normal components of second differences of sigma in the null frame.

    Returns the a4- and a1-coefficients of (sigma_xx, sigma_xy, sigma_yy),
    scaled by e^{-2u}; they approach diag(1, -1) and diag(p1, p3).
    """
    g = F.grid
    s = F.origin
    a1 = F.basis(1)[1:-1, 1:-1]
    a4 = F.basis(4)[1:-1, 1:-1]
    scale = np.exp(-2 * F.u[1:-1, 1:-1])
    out = {}
    for name, sec in (("xx", d_xx(s, g.hx)), ("xy", d_xy(s, g.hx, g.hy)), ("yy", d_yy(s, g.hy))):
        out[f"h1_{name}"] = -lorentz_dot(sec, a1) * scale  # coefficient of a4
        out[f"h4_{name}"] = -lorentz_dot(sec, a4) * scale  # coefficient of a1
    return out


# -- holomorphic differentials ----------------------------------------------------------


@dataclass
class DifferentialField:
    Q: np.ndarray
    P: np.ndarray
    Q_scaled: np.ndarray  # Q lambda^4, lambda = e^u
    P_scaled: np.ndarray  # P lambda^2
    Q_const: float
    Q_spread: float
    cr_Q: float
    cr_P: float
    ratio: float | None
    ratio_spread: float | None

    @property
    def cr_residual(self) -> float:
        return max(self.cr_Q, self.cr_P)


def _dbar_abs(f: np.ndarray, grid: Grid) -> np.ndarray:
    """|d/dzbar f| = |f_x + i f_y| / 2 for real f."""
    return 0.5 * np.hypot(d_x(f, grid.hx), d_y(f, grid.hy))


def differentials(inv: InvariantField, u: np.ndarray) -> DifferentialField:
    """Quartic and quadratic differentials Q = J - i p2, P = p1 + p3 and their CR residuals."""
    m = inv.margin
    g = inv.grid.shrink(m)
    J = on_frame_grid(inv.J, inv)
    p2 = on_frame_grid(inv.p2, inv)
    W = on_frame_grid(inv.W, inv)
    uu = strip(u, m)
    Q = J - 1j * p2
    P = 2 * W
    Qs = Q.real * np.exp(4 * uu)
    Ps = P * np.exp(2 * uu)
    cr_Q = float(np.max(_dbar_abs(Qs, g)))
    cr_P = float(np.max(_dbar_abs(Ps, g)))
    ratio = spread = None
    if np.min(np.abs(P)) > P_EPS * (1 + np.max(np.abs(J))):
        r = Q.real / P**2
        ratio = float(np.mean(r))
        spread = float(np.max(r) - np.min(r))
    return DifferentialField(
        Q, P, Qs, Ps, float(np.mean(Qs)), float(np.max(Qs) - np.min(Qs)), cr_Q, cr_P, ratio, spread
    )


def is_minimal(inv: InvariantField) -> bool:
    P = on_frame_grid(inv.p1 + inv.p3, inv)
    J = on_frame_grid(inv.J, inv)
    return bool(np.max(np.abs(P)) <= P_EPS * (1 + np.max(np.abs(J))))


# -- hyperplane and quadric detectors ----------------------------------------------------------------


HYPERPLANE_CLASS = {
    CausalCharacter.TIMELIKE: "spacelike",
    CausalCharacter.SPACELIKE: "timelike",
    CausalCharacter.LIGHTLIKE_POSITIVE: "isotropic",
    CausalCharacter.LIGHTLIKE_NEGATIVE: "isotropic",
    CausalCharacter.ZERO: "degenerate",
}


@dataclass
class HyperplaneFit:
    v: np.ndarray
    O: np.ndarray
    vv: float
    dv_max: float
    plane_residual: float
    cls: str


def hyperplane_detect(F: FrameField, inv: InvariantField, null_tol: float | None = None) -> HyperplaneFit:
    """Constant normal v = e^{2u}(-p1 a1 + a4) of the hyperplane holding sigma (L-minimal case)."""
    if not is_minimal(inv):
        raise BranchError("hyperplane detection needs p1 + p3 = 0 (L-minimal)")
    g = F.grid
    p1 = on_frame_grid(inv.p1, inv)
    e2u = np.exp(2 * F.u)
    v = e2u[..., None] * (-p1[..., None] * F.basis(1) + F.basis(4))
    dv = max(float(np.max(np.abs(d_x(v, g.hx)))), float(np.max(np.abs(d_y(v, g.hy)))))
    vbar = v.reshape(-1, 4).mean(axis=0)
    sigma = F.origin
    O = sigma[g.nx // 2, g.ny // 2].copy()
    plane = float(np.max(np.abs(lorentz_dot(sigma - O, vbar))))
    vv = float(lorentz_norm2(vbar))
    if null_tol is None:
        null_tol = max(10 * g.h**2, 1e-9) * float(np.dot(vbar, vbar))
    if abs(vv) <= null_tol:
        cls = "isotropic"
    else:
        cls = HYPERPLANE_CLASS[causal_character(vbar, tol=0.0)]
    return HyperplaneFit(vbar, O, vv, dv, plane, cls)


@dataclass
class QuadricFit:
    O: np.ndarray
    rho: float
    center_spread: float
    value_spread: float
    cls: str
    threshold: float


def lightcone_threshold(h: float, scale: float = 0.0) -> float:
    """max(10 h^2, 1e-6) (1 + scale).

    ``scale`` should be Laguerre invariant (the mean |<sigma - O, sigma - O>|),
    so the classification does not change under a global motion.
    """
    return max(10 * h**2, 1e-6) * (1.0 + scale)


def quadric_detect(F: FrameField, inv: InvariantField) -> QuadricFit:
    """Center O and value rho of the pseudo-hypersphere <sigma - O, sigma - O> = rho."""
    if is_minimal(inv) or np.min(np.abs(on_frame_grid(inv.p1 + inv.p3, inv))) <= P_EPS:
        raise BranchError("P vanishes somewhere; use hyperplane_detect")
    p1 = on_frame_grid(inv.p1, inv)
    p3 = on_frame_grid(inv.p3, inv)
    l1 = (p3 - p1) / (p1 + p3)
    l4 = 2.0 / (p1 + p3)
    sigma = F.origin
    O_nodes = sigma - l1[..., None] * F.basis(1) - l4[..., None] * F.basis(4)
    O = O_nodes.reshape(-1, 4).mean(axis=0)
    center_spread = float(np.max(np.linalg.norm(O_nodes - O, axis=-1)))
    vals = lorentz_norm2(sigma - O)
    rho = float(np.mean(vals))
    value_spread = float(np.max(np.abs(vals - rho)))
    thr = lightcone_threshold(F.grid.h, float(np.mean(np.abs(vals))))
    if abs(rho) < thr:
        cls = "lightcone"
    else:
        cls = "hyperbolic" if rho < 0 else "de_sitter"
    return QuadricFit(O, rho, center_spread, value_spread, cls, thr)


@dataclass
class CMCReport:
    H: np.ndarray | None  # signed per node, None for the lightcone class
    H_abs_mean: float
    H_spread: float
    H_std: float
    sign: int


def cmc_in_quadric(F: FrameField, fit: QuadricFit) -> CMCReport:
    """Mean curvature of sigma inside the fitted quadric.

    The unit normal inside the quadric is nu = l1 a1 - l4 a4 (normalized),
    with sigma - O = l1 a1 + l4 a4.  H = (1/2) tr_g <d^2 sigma, nu> / <nu, nu>.
    For a lightcone fit the proxy reported is the a4-component of the mean
    curvature vector, i.e. its part tangent to the cone and normal to sigma.
    """
    g = F.grid
    sigma = F.origin
    a1 = F.basis(1)[1:-1, 1:-1]
    a4 = F.basis(4)[1:-1, 1:-1]
    if fit.cls == "lightcone":
        V = laplace_beltrami_half(sigma, g, F.u)
        proxy = np.abs(lorentz_dot(V, a1))
        return CMCReport(None, float(np.mean(proxy)), float(np.max(proxy)), float(np.std(proxy)), 0)
    rel = sigma[1:-1, 1:-1] - fit.O
    l1 = -lorentz_dot(rel, a4)
    l4 = -lorentz_dot(rel, a1)
    nu = l1[..., None] * a1 - l4[..., None] * a4
    nn = lorentz_norm2(nu)
    if np.any(np.abs(nn) < 1e-12):
        raise BranchError("degenerate normal span")
    eps = np.sign(nn)
    nu_hat = nu / np.sqrt(np.abs(nn))[..., None]
    gm = metric_tensor(sigma, g)
    II = np.empty(gm.shape)
    II[..., 0, 0] = lorentz_dot(d_xx(sigma, g.hx), nu_hat)
    II[..., 1, 1] = lorentz_dot(d_yy(sigma, g.hy), nu_hat)
    II[..., 0, 1] = II[..., 1, 0] = lorentz_dot(d_xy(sigma, g.hx, g.hy), nu_hat)
    H = 0.5 * eps * np.einsum("...ij,...ji->...", np.linalg.inv(gm), II)
    Habs = np.abs(H)
    mean = float(np.mean(Habs))
    sign = int(np.sign(np.mean(H)))
    return CMCReport(H, mean, float(np.max(np.abs(Habs - mean))), float(np.std(Habs)), sign)


# -- Euclidean cross-check -------------------------------------------------------------------


@dataclass
class MiddleSphereReport:
    radius_residual: float
    center_residual: float
    parabolic_excluded: int
    nodes: int


def euclidean_curvatures(f: np.ndarray, n: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(H, K, det I) of f with the given unit normal, II = -df.dn symmetrized."""
    fx, fy = d_x(f, grid.hx), d_y(f, grid.hy)
    nx_, ny_ = d_x(n, grid.hx), d_y(n, grid.hy)
    E, Fm, Gm = np.sum(fx * fx, -1), np.sum(fx * fy, -1), np.sum(fy * fy, -1)
    L = -np.sum(fx * nx_, -1)
    M = -0.5 * (np.sum(fx * ny_, -1) + np.sum(fy * nx_, -1))
    N = -np.sum(fy * ny_, -1)
    detI = E * Gm - Fm**2
    K = (L * N - M**2) / detI
    H = (E * N - 2 * Fm * M + Gm * L) / (2 * detI)
    return H, K, detI


def middle_sphere_check(maps: SurfaceMaps, k_eps: float = 1e-6) -> MiddleSphereReport:
    """Compare the sphere decoded from sigma with the Euclidean middle sphere of f."""
    H, K, detI = euclidean_curvatures(maps.f, maps.n, maps.grid)
    if np.any(detI <= 0):
        raise ValueError("f is not immersed on the interior")
    ok = np.abs(K) >= k_eps
    R = np.where(ok, H / np.where(ok, K, 1.0), np.nan)
    p, r = point_to_sphere_coords(maps.sigma[1:-1, 1:-1])
    expected_center = maps.f[1:-1, 1:-1] + R[..., None] * maps.n[1:-1, 1:-1]
    rad = np.abs(r - R)[ok]
    cen = np.linalg.norm(p - expected_center, axis=-1)[ok]
    return MiddleSphereReport(
        float(np.max(rad)) if rad.size else float("nan"),
        float(np.max(cen)) if cen.size else float("nan"),
        int(np.sum(~ok)),
        int(ok.size),
    )


# -- mesh export ---------------------------------------------------------------------------------


def export_mesh(points: np.ndarray, path) -> None:
    """Write a (nx, ny, 3) field as OBJ: row-major vertices, two triangles per cell."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 3 or pts.shape[-1] != 3 or pts.shape[0] < 2 or pts.shape[1] < 2:
        raise ValueError("need an (nx, ny, 3) field with nx, ny >= 2")
    nx, ny, _ = pts.shape
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in pts.reshape(-1, 3).tolist()]
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j + 1  # OBJ is 1-based
            b, c, d = a + ny, a + ny + 1, a + 1
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {d}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    for ln in Path(path).read_text().splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(t.split("/")[0]) - 1 for t in parts[1:]])
    return np.array(verts), np.array(faces, dtype=int)


# -- the spectral pipeline -------------------------------------------------------------------------


@dataclass
class DeformResult:
    potential: Potential
    m: float
    inv: InvariantField
    frames: FrameField
    integration: IntegrationReport
    lift: LegendreRealization
    metric: MetricReport
    mean_curvature: MeanCurvatureReport
    diffs: DifferentialField
    quadric: QuadricFit | None = None
    cmc: CMCReport | None = None
    hyperplane: HyperplaneFit | None = None
    flatness_threshold: float | None = None

    @property
    def maps(self) -> SurfaceMaps:
        return SurfaceMaps(self.frames.grid, self.frames.origin, self.lift.f, self.lift.n)


BASELINE_FACTOR = 100.0


def flatness_baseline(grid: Grid) -> float:
    """Flatness of the analytic radial seed (c = 1, k = 1, m = 0) on ``grid``."""
    from .blaschke import seed_potential
    from .frames import flatness_residual

    p = seed_potential("radial", grid, c=1.0, k=1.0, certify=False)
    return flatness_residual(assemble_alpha(p, 0.0))[1]


def default_flatness_threshold(grid: Grid) -> float:
    """BASELINE_FACTOR times the analytic-seed flatness at the same spacing."""
    try:
        return BASELINE_FACTOR * flatness_baseline(grid)
    except Exception:  # grid too small for a baseline
        return DEFAULT_FLATNESS_THRESHOLD


def run_pipeline(p: Potential, m: float = 0.0, scheme: str = "midpoint_exp",
                 A0: LaguerreElement | None = None, flatness_threshold: float | str | None = "auto") -> DeformResult:
    """Assemble, integrate, realize and analyze the T-transform F_m of ``p``.

    ``flatness_threshold="auto"`` uses :func:`default_flatness_threshold`;
    ``None`` disables the refusal.
    """
    inv = invariants_from_potential(p, m)
    alpha = assemble_alpha(p, m, inv)
    if flatness_threshold == "auto":
        flatness_threshold = default_flatness_threshold(p.grid)
    F, rep = integrate_frame(alpha, A0, scheme, flatness_threshold=flatness_threshold)
    lift = realize_legendre(F)
    metric = induced_metric(F.origin, F.grid, F.u)
    mcv = mean_curvature_vector(F, inv)
    diffs = differentials(inv, p.u.values)
    res = DeformResult(p, m, inv, F, rep, lift, metric, mcv, diffs, flatness_threshold=flatness_threshold)
    if is_minimal(inv):
        res.hyperplane = hyperplane_detect(F, inv)
    else:
        res.quadric = quadric_detect(F, inv)
        res.cmc = cmc_in_quadric(F, res.quadric)
    return res


def expected_values(c: float, k: float, m: float) -> dict[str, float | None]:
    """Closed-form predictions for a special potential of character c."""
    s = m + k
    out: dict[str, float | None] = {"Q_const": -c / 2}
    if s * s == 0:  # also catches underflow
        out.update(rho=None, H=0.0, kappa=None, lawson=None, ratio=None, vv=-c)
        return out
    out["ratio"] = -c / (8 * s**2)
    out["rho"] = -c / s**2
    if c == 0:
        out.update(H=0.0, kappa=None, lawson=None)
    else:
        out["H"] = abs(s) / math.sqrt(abs(c))
        out["kappa"] = -(s**2) / c
        out["lawson"] = out["kappa"] + out["H"] ** 2
    return out


@dataclass
class LawsonRow:
    m: float
    H_m: float
    kappa_m: float | None
    lawson_invariant: float | None
    lorentzian_invariant: float | None
    metric_deviation: float
    rho: float | None
    cls: str
    H_expected: float | None = None
    kappa_expected: float | None = None
    lawson_expected: float | None = None


def lawson_row(res: DeformResult, ref_gram: np.ndarray | None) -> LawsonRow:
    p = res.potential
    exp = expected_values(p.c, p.k, res.m)
    dev = 0.0 if ref_gram is None else float(np.max(np.abs(res.metric.gram - ref_gram)))
    if res.quadric is None:
        return LawsonRow(res.m, 0.0, None, None, None, dev, None, "hyperplane:" + res.hyperplane.cls,
                         exp["H"], exp["kappa"], exp["lawson"])
    rho = res.quadric.rho
    H = res.cmc.H_abs_mean
    if res.quadric.cls == "lightcone":
        kappa = inv_ = lor = None
    else:
        kappa = 1.0 / rho
        inv_ = kappa + H**2
        lor = kappa - H**2
    return LawsonRow(res.m, H, kappa, inv_, lor, dev, rho, res.quadric.cls,
                     exp["H"], exp["kappa"], exp["lawson"])


def lawson_table(p: Potential, m_list, scheme: str = "midpoint_exp",
                 A0: LaguerreElement | None = None) -> list[LawsonRow]:
    """One row per spectral parameter; metric deviation is measured against m_list[0]."""
    if not p.special:
        raise ValueError("the Lawson table needs a special potential")
    rows = []
    ref = None
    for m in m_list:
        res = run_pipeline(p, float(m), scheme, A0)
        if ref is None:
            ref = res.metric.gram
        rows.append(lawson_row(res, ref))
    return rows


def row_dict(row: LawsonRow) -> dict:
    return asdict(row)

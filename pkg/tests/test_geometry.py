import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import pipeline, potential
from laguerre.cyclographic import point_to_sphere_coords
from laguerre.fields import Grid
from laguerre.geometry import (
    BranchError,
    differentials,
    expected_values,
    export_mesh,
    hyperplane_detect,
    induced_metric,
    is_minimal,
    lawson_row,
    lawson_table,
    lightcone_threshold,
    middle_sphere_check,
    quadric_detect,
    read_obj,
    run_pipeline,
    second_fundamental_components,
)
from laguerre.minkowski import lorentz_norm2, random_laguerre_element


def test_expected_values_table():
    e = expected_values(1.0, 1.0, 0.0)
    assert e["rho"] == -1.0 and e["H"] == 1.0 and e["kappa"] == -1.0 and e["lawson"] == 0.0
    assert e["Q_const"] == -0.5 and e["ratio"] == -1 / 8
    e = expected_values(-1.0, 1.0, 0.0)
    assert e["rho"] == 1.0 and e["kappa"] == 1.0 and e["lawson"] == 2.0
    e = expected_values(-1.0, 1.0, 1.0)
    assert e["lawson"] == 8.0  # -2 (m + k)^2 / c
    e = expected_values(2.0, -1.0, 1.0)
    assert e["rho"] is None and e["vv"] == -2.0


@given(st.floats(0.1, 4.0), st.floats(-3, 3), st.floats(-3, 3))
def test_lawson_invariant_formula(c, k, m):
    # kappa + H^2 vanishes identically on the hyperbolic side
    e = expected_values(c, k, m)
    if abs(m + k) > 1e-3:
        assert abs(e["lawson"]) <= 1e-12 * (1 + e["H"] ** 2)
        assert np.isclose(expected_values(-c, k, m)["lawson"], 2 * (m + k) ** 2 / c)


@pytest.mark.parametrize("c, cls", [(1.0, "hyperbolic"), (-1.0, "de_sitter")])
def test_quadric_class_and_value(c, cls):
    res = pipeline("radial", 65, c, 1.0)
    assert res.quadric.cls == cls
    assert abs(res.quadric.rho - expected_values(c, 1.0, 0.0)["rho"]) < 1e-2
    assert res.hyperplane is None


def test_quadric_value_second_order():
    e = [abs(pipeline("radial", n, 1.0, 1.0, 1.0).quadric.rho + 0.25) for n in (33, 65)]
    assert 3.5 <= e[0] / e[1] <= 4.5


def test_lightcone_for_flat_potential():
    res = pipeline("harmonic", 65, 0.0, 1.0, a=0.3, b=0.2)
    q = res.quadric
    assert q.cls == "lightcone"
    assert abs(q.rho) < q.threshold
    assert res.cmc.sign == 0 and res.cmc.H is None
    assert lightcone_threshold(0.1) == pytest.approx(0.1)
    assert lightcone_threshold(1e-5, 1.0) == 2e-6


@pytest.mark.parametrize("c, cls", [(1.0, "spacelike"), (-1.0, "timelike")])
def test_hyperplane_classes(c, cls):
    res = pipeline("radial", 65, c, 0.0)
    assert res.quadric is None
    h = res.hyperplane
    assert h.cls == cls
    assert abs(h.vv + c) < 1e-2
    assert h.plane_residual < 1e-2


def test_isotropic_hyperplane():
    res = pipeline("harmonic", 33, 0.0, 0.0, a=0.3, b=0.2)
    assert res.hyperplane.cls == "isotropic"
    assert res.hyperplane.dv_max < 1e-8


def test_hyperplane_at_nonzero_m():
    # k = -m makes the m-th transform minimal
    res = run_pipeline(potential("radial", 33, 1.0, -1.0), 1.0)
    assert res.hyperplane is not None and res.hyperplane.cls == "spacelike"


def test_branch_errors():
    minimal = pipeline("radial", 33, 1.0, 0.0)
    with pytest.raises(BranchError):
        quadric_detect(minimal.frames, minimal.inv)
    cmc = pipeline("radial", 33, 1.0, 1.0)
    with pytest.raises(BranchError):
        hyperplane_detect(cmc.frames, cmc.inv)
    assert is_minimal(minimal.inv) and not is_minimal(cmc.inv)


def test_classification_invariant_under_motion(rng):
    p = potential("radial", 33, 1.0, 1.0)
    base = pipeline("radial", 33, 1.0, 1.0, 2.0)
    for _ in range(3):
        B = random_laguerre_element(rng, 0.5)
        res = run_pipeline(p, 2.0, A0=B)
        assert res.quadric.cls == base.quadric.cls
        assert abs(res.quadric.rho - base.quadric.rho) < 1e-8
        assert abs(res.cmc.H_abs_mean - base.cmc.H_abs_mean) < 1e-7
        assert np.abs(res.metric.gram - base.metric.gram).max() < 1e-7


def test_cmc_value():
    errs = []
    for n in (33, 65):
        res = pipeline("radial", n, 1.0, 1.0, 1.0)
        assert res.cmc.sign != 0
        errs.append(abs(res.cmc.H_abs_mean - 2.0))
    assert errs[1] < 1e-2 and errs[0] / errs[1] > 3


def test_induced_metric_conformal():
    for mm in (0.0, 2.0):
        res = pipeline("radial", 65, 1.0, 1.0, mm)
        assert res.metric.positive_definite
        assert res.metric.deviation < 1e-2
    g = Grid.square(9)
    X, Y = g.mesh()
    flat = np.stack([np.zeros_like(X), X, Y, np.zeros_like(X)], -1)
    rep = induced_metric(flat, g, np.zeros_like(X))
    assert rep.deviation < 1e-14 and rep.positive_definite


def test_isometric_family():
    d = []
    for n in (33, 65):
        rows = lawson_table(potential("radial", n, 1.0, 1.0), [0.0, 2.0])
        d.append(rows[1].metric_deviation)
        assert rows[0].metric_deviation == 0.0
    assert 3.0 <= d[0] / d[1] <= 4.5


def test_lawson_rows():
    rows = lawson_table(potential("radial", 65, 1.0, 1.0), [0.0, 1.0, 2.0])
    for r in rows:
        assert r.cls == "hyperbolic"
        assert abs(r.H_m - r.H_expected) < 2e-2
        assert abs(r.lawson_invariant) < 5e-2
    minimal = lawson_row(pipeline("radial", 33, 1.0, 0.0), None)
    assert minimal.cls == "hyperplane:spacelike" and minimal.kappa_m is None
    with pytest.raises(ValueError):
        lawson_table(potential("harmonic", 9).__class__(potential("harmonic", 9).u, None), [0.0])


def test_mean_curvature_vector():
    d = []
    for n in (33, 65):
        mc = pipeline("radial", n, 1.0, 1.0, 1.0).mean_curvature
        d.append(mc.discrepancy)
        assert mc.null_residual < 1e-2
    assert 3.0 <= d[0] / d[1] <= 4.5


def test_second_fundamental_form():
    res = pipeline("radial", 65, 1.0, 1.0)
    sf = second_fundamental_components(res.frames)
    assert np.abs(sf["h1_xx"] - 1).max() < 1e-2
    assert np.abs(sf["h1_yy"] + 1).max() < 1e-2
    assert np.abs(sf["h1_xy"]).max() < 1e-2
    # a1-coefficients: p1 along x, p3 along y, with p1 - p3 = 2J
    assert np.all(np.isfinite(sf["h4_xx"])) and np.all(np.isfinite(sf["h4_yy"]))


def test_differentials():
    res = pipeline("radial", 65, 1.0, 1.0)
    d = res.diffs
    assert abs(d.Q_const + 0.5) < 1e-3
    assert abs(d.ratio + 1 / 8) < 1e-3
    assert d.cr_residual < 1e-2
    assert np.all(d.Q.imag == 0)
    minimal = pipeline("radial", 33, 1.0, 0.0).diffs
    assert minimal.ratio is None


def test_cr_residual_second_order():
    cr = [pipeline("radial", n, 1.0, 1.0).diffs.cr_residual for n in (33, 65)]
    assert 3.5 <= cr[0] / cr[1] <= 4.5


def test_middle_sphere():
    res = pipeline("radial", 65, 1.0, 0.0)
    ms = middle_sphere_check(res.maps)
    assert ms.radius_residual < 2e-3 and ms.center_residual < 2e-3
    g = res.frames.grid
    assert ms.nodes == (g.nx - 2) * (g.ny - 2)


def test_decoded_spheres_lie_in_hyperplane():
    res = pipeline("radial", 33, 1.0, 0.0)
    sigma = res.frames.origin
    p, r = point_to_sphere_coords(sigma)
    assert p.shape == sigma.shape[:2] + (3,) and r.shape == sigma.shape[:2]
    # the hyperplane <sigma - O, v> = 0 is a fixed linear relation between center and radius
    assert res.hyperplane.plane_residual < 1e-2


def test_obj_roundtrip(tmp_path):
    res = pipeline("radial", 9, 1.0, 1.0)
    export_mesh(res.lift.f, tmp_path / "f.obj")
    v, f = read_obj(tmp_path / "f.obj")
    assert np.array_equal(v, res.lift.f.reshape(-1, 3))
    nx, ny = res.lift.f.shape[:2]
    assert f.shape == (2 * (nx - 1) * (ny - 1), 3)
    assert f.min() == 0 and f.max() == nx * ny - 1
    text = (tmp_path / "f.obj").read_text()
    assert "f 1 " in text and "f 0 " not in text
    with pytest.raises(ValueError):
        export_mesh(np.zeros((1, 5, 3)), tmp_path / "bad.obj")


def test_value_on_the_quadric():
    res = pipeline("radial", 65, 1.0, 1.0, 2.0)
    vals = lorentz_norm2(res.frames.origin - res.quadric.O)
    assert np.abs(vals - res.quadric.rho).max() < 1e-2


def test_differentials_from_invariants_match_pipeline():
    res = pipeline("radial", 33, 1.0, 1.0)
    d = differentials(res.inv, res.potential.u.values)
    assert d.Q_const == res.diffs.Q_const

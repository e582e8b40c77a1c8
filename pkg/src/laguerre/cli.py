"""Batch driver: ``laguerre {seed,solve,deform,verify,export}``.

Settings come from an optional ``key=value`` config file (``--config``);
command-line flags override it.  Exit codes: 0 pass, 1 gate failure,
2 usage or config error, 3 I/O error.

A deform run directory holds ``run.json`` (the resolved config), one
``m_<value>/`` directory per spectral parameter with ``frames.csv``,
``f.obj``, ``sigma.obj``, ``sigma_radius.csv`` and ``report.json``, and the
aggregate ``lawson.csv``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import shutil
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .blaschke import ConvergenceError, DomainError, Potential, liouville_residual, newton_solve_liouville, seed_potential
from .cyclographic import point_to_sphere_coords
from .fields import Grid, ScalarField, read_field_csv, write_field_csv
from .frames import SCHEMES, FlatnessError, read_frame_csv, realize_legendre, write_frame_csv
from .geometry import (
    BASELINE_FACTOR,
    DeformResult,
    expected_values,
    export_mesh,
    flatness_baseline,
    lawson_row,
    run_pipeline,
)

log = logging.getLogger("laguerre")

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SEED_KINDS = ("radial", "cosh1d", "harmonic")


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    # O(h^p) gates: measured <= order * h^p, times the frame scale max|a|
    # for quantities read off the frame entries
    order: float = 50.0
    value: float = 10.0  # closed-form values (rho, Q, ratio, <v,v>): |err| <= value * h^p
    cmc: float = 20.0  # |H|: |err| <= cmc * h^p + cmc_abs; the Lawson invariant also times max(1, |kappa|)
    cmc_abs: float = 1e-3
    drift: float = 1e-12  # Gram residual relative to max|a|^2
    baseline_factor: float = BASELINE_FACTOR


@dataclass
class RunConfig:
    grid: str = "-1:1:-1:1:65"
    kind: str = "radial"
    c: float | None = 1.0
    k: float = 1.0
    a: float = 0.0
    b: float = 0.0
    potential: str | None = None  # field CSV, overrides kind
    m_list: list[float] = field(default_factory=lambda: [0.0])
    scheme: str = "midpoint_exp"
    out: str = "out"
    tol: Tolerances = field(default_factory=Tolerances)

    def grid_obj(self) -> Grid:
        try:
            g = Grid.parse(self.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if g.nx < 5 or g.ny < 5:
            raise ConfigError("grid needs nx, ny >= 5")
        return g

    def validate(self) -> None:
        self.grid_obj()
        if not self.m_list:
            raise ConfigError("m_list must be nonempty")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.potential is None and self.kind not in SEED_KINDS:
            raise ConfigError(f"kind must be one of {SEED_KINDS}")

    def to_dict(self) -> dict:
        """Everything that determines the results (the output directory does not)."""
        d = asdict(self)
        d["m_list"] = [float(m) for m in self.m_list]
        del d["out"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        tol = Tolerances(**d.pop("tol", {}))
        return cls(tol=tol, **d)


# -- config parsing ---------------------------------------------------------------------


def _float_or_none(s: str) -> float | None:
    return None if s.strip().lower() in ("", "none") else float(s)


def _float_list(s: str) -> list[float]:
    return [float(t) for t in s.replace(";", ",").split(",") if t.strip()]


_KEYS = {
    "grid": str,
    "kind": str,
    "c": _float_or_none,
    "k": float,
    "a": float,
    "b": float,
    "potential": str,
    "m_list": _float_list,
    "scheme": str,
    "out": str,
}
_TOL_KEYS = {f"tol_{f.name}": f.name for f in fields(Tolerances)}


def read_config_file(path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, str] = {}
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in list(_KEYS) + list(_TOL_KEYS):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    cfg = RunConfig()
    tol = Tolerances()
    for key, val in raw.items():
        try:
            if key in _KEYS:
                setattr(cfg, key, _KEYS[key](val))
            elif key in _TOL_KEYS:
                setattr(tol, _TOL_KEYS[key], float(val))
            else:
                continue  # keys used only by other subcommands
        except ValueError:
            raise ConfigError(f"bad value for {key}: {val!r}") from None
    cfg.tol = tol
    cfg.validate()
    return cfg


def load_potential(cfg: RunConfig, base: Path | None = None, certify: bool = True) -> Potential:
    if cfg.potential is not None:
        path = Path(cfg.potential)
        if base is not None and not path.is_absolute():
            path = base / path
        u = read_field_csv(path)
        return Potential(u, cfg.c, cfg.k)
    grid = cfg.grid_obj()
    if cfg.kind == "harmonic":
        return seed_potential("harmonic", grid, a=cfg.a, b=cfg.b, k=cfg.k)
    if cfg.c is None:
        raise ConfigError(f"seed kind {cfg.kind} needs c")
    return seed_potential(cfg.kind, grid, c=cfg.c, k=cfg.k, certify=certify)


# -- report assembly ------------------------------------------------------------------------


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _pair(prefix: str, measured, expected, key: str | None = None) -> dict:
    """``prefix`` (or ``key``), ``prefix_expected`` and the absolute and relative errors."""
    out = {key or prefix: _num(measured), f"{prefix}_expected": _num(expected)}
    if measured is None or expected is None:
        out[f"{prefix}_abs_error"] = out[f"{prefix}_rel_error"] = None
    else:
        err = abs(float(measured) - float(expected))
        out[f"{prefix}_abs_error"] = _num(err)
        out[f"{prefix}_rel_error"] = _num(err / abs(expected)) if expected != 0 else None
    return out


def _gate(name: str, measured, required, kind: str = "le") -> dict:
    return {"name": name, "measured": measured, "required": required, "kind": kind}


def evaluate_gate(g: dict) -> bool:
    if g["kind"] == "eq":
        return g["measured"] == g["required"]
    m = g["measured"]
    return m is not None and math.isfinite(m) and m <= g["required"]


def _err(d: dict, prefix: str, key: str | None = None):
    """|measured - expected| recomputed from the stored pair."""
    m, e = d.get(key or prefix), d.get(f"{prefix}_expected")
    if m is None or e is None:
        return None
    return abs(float(m) - float(e))


def gate_list(report: dict, h: float, scheme: str, tol: Tolerances) -> list[dict]:
    """Acceptance gates for one per-m report, evaluated against ``tol``."""
    if "error" in report:
        g = _gate("status", report["error"], "ok", "eq")
        g["pass"] = False
        return [g]
    p = 2 if scheme == "midpoint_exp" else 1
    o = tol.order * h**p
    fo = o * report["frame_scale"]
    v = tol.value * h**p
    cm = tol.cmc * h**p + tol.cmc_abs
    gates = [
        _gate("flatness", report["flatness"]["measured"], report["flatness"]["threshold"]),
        _gate("holonomy", report["holonomy"], fo),
        _gate("frame_drift", report["frame_drift"], tol.drift * report["frame_scale"] ** 2),
        _gate("contact_residual", report["contact_residual"], fo),
        _gate("metric_conformal", report["metric"]["conformal_deviation"], o),
        _gate("metric_positive", report["metric"]["positive_definite"], True, "eq"),
    ]
    d = report["differentials"]
    if d["Q_const_expected"] is not None:
        gates += [
            _gate("Q_const", _err(d, "Q_const"), v),
            _gate("Q_spread", d["Q_spread"], v),
            _gate("CR_residual", d["CR_residual"], o),
        ]
        if d["ratio_expected"] is not None:
            gates += [_gate("ratio", _err(d, "ratio"), v), _gate("ratio_spread", d["ratio_spread"], o)]
    q = report["quadric"]
    if q is not None:
        gates += [
            _gate("quadric_class", q["class"], q["class_expected"], "eq"),
            _gate("center_spread", q["center_spread"], fo),
            _gate("value_spread", q["value_spread"], o),
        ]
        if q["rho_expected"] is not None:
            gates.append(_gate("rho", _err(q, "rho"), v))
    hp = report["hyperplane"]
    if hp is not None:
        gates += [
            _gate("hyperplane_class", hp["class"], hp["class_expected"], "eq"),
            _gate("dv_max", hp["dv_max"], fo),
            _gate("plane_residual", hp["plane_residual"], fo),
        ]
        if hp["vv_expected"] is not None:
            gates.append(_gate("vv", _err(hp, "vv"), v))
    cmc = report["cmc"]
    if cmc is not None and cmc["H_expected"] is not None:
        gates += [_gate("H_mean", _err(cmc, "H", "H_mean"), cm), _gate("H_std", cmc["H_std"], o)]
    for row in report["lawson_rows"]:
        if row.get("lawson_invariant_expected") is not None and row.get("lawson_invariant") is not None:
            scale = max(1.0, abs(row.get("kappa_m_expected") or 0.0))
            gates.append(_gate("lawson_invariant", _err(row, "lawson_invariant"), cm * scale))
        gates.append(_gate("lawson_isometry", row["metric_deviation"], o))
    for g in gates:
        g["pass"] = evaluate_gate(g)
    return gates


def _expected_class(rho_expected) -> str | None:
    if rho_expected is None:
        return None
    if rho_expected == 0:
        return "lightcone"
    return "hyperbolic" if rho_expected < 0 else "de_sitter"


def _expected_plane_class(c) -> str | None:
    if c is None:
        return None
    return "spacelike" if c > 0 else ("timelike" if c < 0 else "isotropic")


def build_report(cfg: RunConfig, m: float, res: DeformResult, ref_gram) -> dict:
    p = res.potential
    exp = expected_values(p.c, p.k, m) if p.special else {}
    g = res.frames.grid
    d = res.diffs
    rep: dict = {"config": {**cfg.to_dict(), "m": float(m), "h": res.frames.grid.h}}
    rep["flatness"] = {"measured": _num(res.integration.flatness_max), "threshold": _num(res.flatness_threshold)}
    rep["holonomy"] = _num(res.integration.holonomy_max)
    rep["frame_drift"] = _num(res.integration.frame_drift_max)
    rep["frame_scale"] = max(1.0, float(np.max(np.abs(res.frames.linear))))
    rep["contact_residual"] = _num(res.lift.contact_residual)
    rep["metric"] = {
        "conformal_deviation": _num(res.metric.deviation),
        "positive_definite": res.metric.positive_definite,
    }
    rep["mean_curvature"] = {
        "discrepancy": _num(res.mean_curvature.discrepancy),
        "null_residual": _num(res.mean_curvature.null_residual),
    }
    rep["differentials"] = {
        **_pair("Q_const", d.Q_const, exp.get("Q_const")),
        "Q_spread": _num(d.Q_spread),
        "CR_residual": _num(d.cr_residual),
        **_pair("ratio", d.ratio, exp.get("ratio")),
        "ratio_spread": _num(d.ratio_spread),
        "minimal": res.hyperplane is not None,
    }
    rep["quadric"] = rep["hyperplane"] = rep["cmc"] = None
    if res.quadric is not None:
        q = res.quadric
        rep["quadric"] = {
            "class": q.cls,
            "class_expected": _expected_class(exp.get("rho")),
            **_pair("rho", q.rho, exp.get("rho")),
            "center": [float(t) for t in q.O],
            "center_spread": _num(q.center_spread),
            "value_spread": _num(q.value_spread),
            "lightcone_threshold": _num(q.threshold),
        }
        cmc = res.cmc
        rep["cmc"] = {
            **_pair("H", cmc.H_abs_mean, exp.get("H"), key="H_mean"),
            "H_spread": _num(cmc.H_spread),
            "H_std": _num(cmc.H_std),
            "sign": cmc.sign,
        }
    else:
        hp = res.hyperplane
        rep["hyperplane"] = {
            "class": hp.cls,
            "class_expected": _expected_plane_class(p.c),
            **_pair("vv", hp.vv, exp.get("vv")),
            "normal": [float(t) for t in hp.v],
            "dv_max": _num(hp.dv_max),
            "plane_residual": _num(hp.plane_residual),
        }
    row = lawson_row(res, ref_gram)
    rd = {
        "m": float(m),
        "class": row.cls,
        **_pair("H_m", row.H_m, row.H_expected),
        **_pair("kappa_m", row.kappa_m, row.kappa_expected),
        **_pair("lawson_invariant", row.lawson_invariant, row.lawson_expected),
        "lorentzian_invariant": _num(row.lorentzian_invariant),
        "metric_deviation": _num(row.metric_deviation),
        "rho": _num(row.rho),
    }
    rep["lawson_rows"] = [rd]
    rep["gates"] = gate_list(rep, g.h, cfg.scheme, cfg.tol)
    rep["passed"] = all(x["pass"] for x in rep["gates"])
    return rep


def error_report(cfg: RunConfig, m: float, exc: Exception) -> dict:
    rep = {"config": {**cfg.to_dict(), "m": float(m), "h": cfg.grid_obj().h},
           "error": f"{type(exc).__name__}: {exc}", "lawson_rows": []}
    rep["gates"] = gate_list(rep, 0.0, cfg.scheme, cfg.tol)
    rep["passed"] = False
    return rep


def m_dirname(m: float) -> str:
    return f"m_{float(m):g}"


def compute_reports(cfg: RunConfig, base: Path | None = None):
    """Run every m in ``cfg.m_list``; yields ``(m, report, result_or_None)``.

    A failing m is reported and skipped; the first successful m is the
    reference for the Lawson isometry check.
    """
    pot = load_potential(cfg, base)
    if not pot.special:
        raise ConfigError("deform needs a special potential (set c)")
    threshold = cfg.tol.baseline_factor * flatness_baseline(pot.grid)
    ref = None
    for m in cfg.m_list:
        try:
            res = run_pipeline(pot, float(m), cfg.scheme, flatness_threshold=threshold)
        except (FlatnessError, DomainError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("m=%g failed: %s", m, exc)
            yield m, error_report(cfg, m, exc), None
            continue
        if ref is None:
            ref = res.metric.gram
        yield m, build_report(cfg, m, res, ref), res


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


LAWSON_COLUMNS = [
    "m", "status", "class", "H_m", "H_m_expected", "kappa_m", "kappa_m_expected",
    "lawson_invariant", "lawson_invariant_expected", "lorentzian_invariant", "metric_deviation", "rho",
]


def lawson_csv(reports: list[tuple[float, dict]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LAWSON_COLUMNS)
    for m, rep in reports:
        if rep["lawson_rows"]:
            row = {**rep["lawson_rows"][0], "status": "ok"}
        else:
            row = {"m": float(m), "status": "error"}
        w.writerow(["" if row.get(c) is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                    for c in LAWSON_COLUMNS])
    return buf.getvalue()


def write_meshes(directory: Path, F, lift=None) -> None:
    lift = lift or realize_legendre(F)
    export_mesh(lift.f, directory / "f.obj")
    centers, radii = point_to_sphere_coords(F.origin)
    export_mesh(centers, directory / "sigma.obj")
    lines = ["vertex,radius"] + [f"{n + 1},{float(r)!r}" for n, r in enumerate(radii.reshape(-1))]
    (directory / "sigma_radius.csv").write_text("\n".join(lines) + "\n")


# -- commands ---------------------------------------------------------------------------------


def cmd_seed(args) -> int:
    cfg = resolve_config(args)
    grid = cfg.grid_obj()
    if cfg.kind == "harmonic":
        pot = seed_potential("harmonic", grid, a=cfg.a, b=cfg.b, certify=False)
    else:
        if cfg.c is None:
            raise ConfigError(f"seed kind {cfg.kind} needs c")
        pot = seed_potential(cfg.kind, grid, c=cfg.c, certify=False)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_field_csv(out / "potential.csv", pot.u)
    res = liouville_residual(pot.u, pot.c).max_abs()
    print(f"kind={cfg.kind} c={pot.c:g} grid={cfg.grid} max_liouville_residual={res:.6e} h2={grid.h ** 2:.6e}")
    return EXIT_OK


def _init_field(spec: str | None, grid: Grid) -> ScalarField | None:
    if spec is None:
        return None
    try:
        return ScalarField(grid, np.full(grid.shape, float(spec)))
    except ValueError:
        u = read_field_csv(spec)
        if u.grid != grid:
            raise ConfigError("initial guess grid differs from the boundary grid") from None
        return u


def cmd_solve(args) -> int:
    cfg = resolve_config(args)
    if cfg.c is None:
        raise ConfigError("solve needs c")
    if args.boundary is not None:
        boundary = read_field_csv(args.boundary)
    elif cfg.kind == "harmonic":
        boundary = seed_potential("harmonic", cfg.grid_obj(), a=cfg.a, b=cfg.b).u
    else:
        boundary = seed_potential(cfg.kind, cfg.grid_obj(), c=cfg.c, certify=False).u
    init = _init_field(args.init, boundary.grid)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    try:
        result = newton_solve_liouville(cfg.c, boundary, init, tol=args.tol, max_iter=args.max_iter, k=cfg.k)
        error = None
    except ConvergenceError as exc:
        result, error, status = exc.result, str(exc), EXIT_GATE
    trace = {
        "c": cfg.c,
        "residuals": result.trace,
        "halvings": result.halvings,
        "iterations": result.iterations,
        "converged": error is None and result.converged,
        "linear": cfg.c == 0,
        "single_step": result.iterations <= 1 and error is None,
        "error": error,
    }
    write_field_csv(out / "potential.csv", result.potential.u)
    (out / "trace.json").write_text(dumps(trace))
    print(f"iterations={result.iterations} residual={result.trace[-1]:.6e} converged={trace['converged']}")
    return status


def write_run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stored = replace(cfg)
    if cfg.potential is not None:
        shutil.copyfile(cfg.potential, out / "potential.csv")
        stored.potential = "potential.csv"
    (out / "run.json").write_text(dumps(stored.to_dict()))
    reports = []
    for m, rep, res in compute_reports(cfg):
        d = out / m_dirname(m)
        d.mkdir(exist_ok=True)
        rep["config"] = {**stored.to_dict(), "m": rep["config"]["m"], "h": rep["config"]["h"]}
        if res is not None:
            write_frame_csv(d / "frames.csv", res.frames)
            write_meshes(d, res.frames, res.lift)
        (d / "report.json").write_text(dumps(rep))
        reports.append((m, rep))
        status = "pass" if rep["passed"] else "FAIL"
        print(f"m={m:g} {status} " + " ".join(g["name"] for g in rep["gates"] if not g["pass"]))
    (out / "lawson.csv").write_text(lawson_csv(reports))
    return EXIT_OK if all(r["passed"] for _, r in reports) else EXIT_GATE


def cmd_deform(args) -> int:
    return write_run(resolve_config(args))


def _diff(stored, fresh, path="", rtol=1e-9, atol=1e-12) -> list[str]:
    """Paths where two JSON trees disagree (floats compared with a tolerance)."""
    if isinstance(stored, dict) and isinstance(fresh, dict):
        out = []
        for key in sorted(set(stored) | set(fresh)):
            if key not in stored or key not in fresh:
                out.append(f"{path}/{key}")
            else:
                out += _diff(stored[key], fresh[key], f"{path}/{key}", rtol, atol)
        return out
    if isinstance(stored, list) and isinstance(fresh, list):
        if len(stored) != len(fresh):
            return [path]
        out = []
        for n, (a, b) in enumerate(zip(stored, fresh)):
            out += _diff(a, b, f"{path}/{n}", rtol, atol)
        return out
    if isinstance(stored, bool) or isinstance(fresh, bool) or not (
        isinstance(stored, (int, float)) and isinstance(fresh, (int, float))
    ):
        return [] if stored == fresh else [path]
    if not (math.isfinite(stored) and math.isfinite(fresh)):
        return [] if stored == fresh else [path]
    return [] if abs(stored - fresh) <= atol + rtol * abs(fresh) else [path]


def cmd_verify(args) -> int:
    run = Path(args.run)
    try:
        stored_cfg = json.loads((run / "run.json").read_text())
    except FileNotFoundError as exc:
        raise OSError(f"missing artifact: {exc.filename}") from None
    except json.JSONDecodeError as exc:
        print(json.dumps({"passed": False, "mismatches": ["/run.json"], "error": str(exc)}))
        return EXIT_GATE
    try:
        cfg = RunConfig.from_dict(stored_cfg)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        print(json.dumps({"passed": False, "mismatches": ["/run.json"], "error": str(exc)}))
        return EXIT_GATE
    tol = replace(cfg.tol)
    for key, name in _TOL_KEYS.items():
        val = getattr(args, key, None)
        if val is not None:
            setattr(tol, name, float(val))
    summary = {"run": str(run), "per_m": [], "passed": True}
    fresh = {m: rep for m, rep, _ in compute_reports(cfg, base=run)}
    lawson_fresh = lawson_csv(list(fresh.items()))
    try:
        lawson_stored = (run / "lawson.csv").read_text()
    except FileNotFoundError as exc:
        raise OSError(f"missing artifact: {exc.filename}") from None
    if lawson_stored != lawson_fresh:
        summary["lawson_csv"] = "mismatch"
        summary["passed"] = False
    for m, rep in fresh.items():
        path = run / m_dirname(m) / "report.json"
        try:
            stored = json.loads(path.read_text())
        except FileNotFoundError:
            raise OSError(f"missing artifact: {path}") from None
        except json.JSONDecodeError:
            summary["per_m"].append({"m": m, "mismatches": ["/"], "failed_gates": []})
            summary["passed"] = False
            continue
        rep["config"] = {**stored_cfg, "m": rep["config"]["m"], "h": rep["config"]["h"]}
        mismatches = _diff(stored, rep)
        try:
            gates = gate_list(stored, float(stored["config"]["h"]), cfg.scheme, tol)
        except (KeyError, TypeError, ValueError):
            gates = [{"name": "report_structure", "measured": None, "required": None, "pass": False}]
        failed = [g for g in gates if not g["pass"]]
        entry = {"m": m, "mismatches": mismatches, "failed_gates": failed}
        summary["per_m"].append(entry)
        if mismatches or failed:
            summary["passed"] = False
    print(dumps(summary), end="")
    return EXIT_OK if summary["passed"] else EXIT_GATE


def cmd_export(args) -> int:
    F = read_frame_csv(args.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_meshes(out, F)
    print(f"wrote {out / 'f.obj'}, {out / 'sigma.obj'}, {out / 'sigma_radius.csv'}")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--grid", help="x0:x1:y0:y1:n or x0:x1:y0:y1:nx:ny")
    p.add_argument("--kind", help="seed kind: " + ", ".join(SEED_KINDS))
    p.add_argument("--c", help="character c of Lap u = c e^{-2u}")
    p.add_argument("--k", help="spectral base k")
    p.add_argument("--a", help="harmonic seed u = a x + b y")
    p.add_argument("--b")
    p.add_argument("--out", help="output directory")


def _add_tolerances(p: argparse.ArgumentParser) -> None:
    for key in _TOL_KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laguerre", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seed", help="write a closed-form potential and its PDE residual")
    _add_common(p)
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("solve", help="Newton solve of Lap u = c e^{-2u} with Dirichlet data")
    _add_common(p)
    p.add_argument("--boundary", help="field CSV with the boundary values (default: the seed kind)")
    p.add_argument("--init", help="initial guess: field CSV or a constant (default 0)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=20)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("deform", help="run the T-transform pipeline for each m")
    _add_common(p)
    p.add_argument("--potential", help="field CSV (needs --c)")
    p.add_argument("--m", dest="m_list", help="comma-separated spectral parameters")
    p.add_argument("--scheme", choices=SCHEMES)
    _add_tolerances(p)
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("verify", help="recompute a deform run and re-check its gates")
    p.add_argument("run", help="deform output directory")
    _add_tolerances(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="OBJ meshes from a frame CSV")
    p.add_argument("frames", help="frame CSV written by deform")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_export)
    return parser


def _join_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--grid -1:1:-1:1:65`` into ``--grid=-1:1:-1:1:65``.

    argparse would otherwise read a value starting with ``-`` as an option.
    """
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok.startswith("--") and "=" not in tok and nxt and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

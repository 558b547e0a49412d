"""Command-line entry point: ``minkhyp <command> ...``.

Exit codes: 0 success, 1 invalid parameters, 2 numerical failure.
Set MINK_KHYP_THREADS to cap the number of BLAS/OpenMP worker threads.
"""
from __future__ import annotations

import os

_THREADS = os.environ.get("MINK_KHYP_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidParams, MinkHypError, NumericalFailure

log = logging.getLogger("minkhyp")

COMMANDS = ("profile", "lambda-table", "conjugate", "blowdown", "cone", "ma-solve", "verify")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: Optional[Path] = None
    seed: int = 0

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidParams(f"unknown command {self.command!r}")
        if self.out is not None:
            target = self.out if self.out.suffix == "" else self.out.parent
            target = target if str(target) else Path(".")
            probe = target
            while not probe.exists():
                probe = probe.parent
            if not os.access(probe, os.W_OK):
                raise InvalidParams(f"output location {self.out} is not writable")
        p = self.params
        if p.get("c") is not None:
            cs = p["c"] if isinstance(p["c"], list) else [p["c"]]
            for c in cs:
                if not math.isfinite(c) or c > 1:
                    raise InvalidParams(f"c must be finite and <= 1, got {c}")
        if "n" in p and (p["n"] < 2):
            raise InvalidParams("n must be >= 2")
        for key in ("tmax", "radius", "r"):
            if key in p and p[key] is not None and not p[key] > 0:
                raise InvalidParams(f"{key} must be positive")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _points(text: str) -> np.ndarray:
    vals = [_floats(p) for p in text.split(";") if p.strip()]
    if not vals or any(len(v) != 2 for v in vals):
        raise argparse.ArgumentTypeError("points are 'x1,x2;x1,x2;...'")
    return np.asarray(vals, float)


def _out_file(cfg: RunConfig, default: str) -> Path:
    out = cfg.out or Path(".")
    if out.suffix:
        out.parent.mkdir(parents=True, exist_ok=True)
        return out
    out.mkdir(parents=True, exist_ok=True)
    return out / default


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=float) + "\n")


def _u_c(c: float, n: int, tmax: float, shift: float = 0.0):
    from .symmetric_family import ProfileParams, embed_values, integrate_profile

    p = integrate_profile(ProfileParams(c, n), t_max=tmax)
    sv = np.zeros(n)
    sv[0] = shift
    return p, (lambda X: embed_values(p, np.asarray(X, float) + sv)[0]), \
        (lambda X: embed_values(p, np.asarray(X, float) + sv)[1])


# ---------------------------------------------------------------- commands

def cmd_profile(cfg: RunConfig) -> dict:
    from .symmetric_family import ProfileParams, integrate_profile

    p = cfg.params
    prof = integrate_profile(ProfileParams(p["c"], p["n"]), t_max=p["tmax"], tol=p["tol"])
    path = _out_file(cfg, f"profile_c{p['c']:g}_n{p['n']}.csv")
    prof.to_csv(path)
    return {"csv": str(path), "c_drift": prof.c_drift, "c_drift_rel": prof.c_drift_rel,
            "samples": int(prof.samples.shape[0])}


def cmd_lambda_table(cfg: RunConfig) -> dict:
    from .symmetric_family import lambda_c

    p = cfg.params
    rows = [lambda_c(c, p["n"]).to_json() for c in p["c"]]
    path = _out_file(cfg, f"lambda_n{p['n']}.json")
    _write_json(path, {"n": p["n"], "table": rows})
    return {"json": str(path), "lambda": {r["c"]: r["lambda"] for r in rows}}


def cmd_conjugate(cfg: RunConfig) -> dict:
    from .convex_analysis import profile_conjugate
    from .symmetric_family import ProfileParams, integrate_profile, lambda_c

    p = cfg.params
    c = p["c"]
    prof = integrate_profile(ProfileParams(c, 2), t_max=p["tmax"])
    lam = lambda_c(c, 2).lambda_c
    shift = lam if (c == 1 and p["shifted"]) else 0.0
    tr = profile_conjugate(prof, p["samples"], radius=p["radius"], shift=shift)
    y1 = tr.y[:, 0]
    if c == 1:
        # trace lambda_1 y_1^+ for u_1^*; the shifted profile removes it
        oracle = lam * np.maximum(y1, 0.0) * (0.0 if shift else 1.0)
    else:
        oracle = lam * np.abs(y1)
    path = _out_file(cfg, f"conjugate_c{c:g}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["direction", "y1", "y2", "ustar", "trace_oracle"])
        for row in zip(tr.directions, y1, tr.y[:, 1], tr.ustar, oracle):
            w.writerow([repr(float(v)) for v in row])
    return {"csv": str(path), "lambda": lam, "radius": tr.radius,
            "max_trace_err": float(np.max(np.abs(tr.ustar - oracle)))}


def cmd_blowdown(cfg: RunConfig) -> dict:
    from .convex_analysis import BlowdownFn, blowdown, null_condition_check
    from .errors import NoWitness

    p = cfg.params
    _, u, _ = _u_c(p["c"], 2, p["tmax"])
    rows = []
    V = BlowdownFn(u, r=p["r"])
    for x in p["x"]:
        e = blowdown(u, x, r_schedule=(p["r"] / 100, p["r"] / 10, p["r"]))
        try:
            gap = null_condition_check(V, x, tol=1e-3).gap
        except NoWitness:
            gap = None
        rows.append({"x": x.tolist(), "value": e.value, "raw": e.raw_value,
                     "secants": e.secants.tolist(), "null_witness_gap": gap})
    path = _out_file(cfg, f"blowdown_c{p['c']:g}.json")
    _write_json(path, {"c": p["c"], "r": p["r"], "entries": rows})
    return {"json": str(path), "values": [r["value"] for r in rows]}


def cmd_cone(cfg: RunConfig) -> dict:
    from .convex_analysis import tangent_cone
    from .symmetric_family import lambda_c

    p = cfg.params
    if p["E"] is not None:
        return _cone_solve(cfg)
    if p["c"] is None:
        raise InvalidParams("cone needs --c or --E")
    c = p["c"]
    shift = lambda_c(1.0, 2).lambda_c if c == 1 else 0.0
    _, u, du = _u_c(c, 2, p["tmax"], shift)
    cone = tangent_cone(u, sample_radius=0.9 * p["tmax"], gradient=du, n_dirs=p["dirs"],
                        radii=tuple(0.9 * p["tmax"] * np.array([0.04, 0.2, 1.0])))
    haus = cone.hausdorff_to_ball(half=(c == 1))
    path = _out_file(cfg, f"cone_c{c:g}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v1", "v2"])
        for v in cone.vertices:
            w.writerow([repr(float(a)) for a in v])
    return {"csv": str(path), "n_vertices": int(cone.vertices.shape[0]),
            "hausdorff_to_ball" if c != 1 else "hausdorff_to_half_ball": haus}


def _cone_solve(cfg: RunConfig) -> dict:
    from .ma_solver import prescribed_cone_solve

    p = cfg.params
    rep = prescribed_cone_solve(p["E"], radius_schedule=tuple(p["radii"]), h=p["h"])
    path = _out_file(cfg, "cone_solve.json")
    _write_json(path, rep.to_json())
    return {"json": str(path), "blowdown_error": rep.blowdown_error,
            "cone_hausdorff": rep.cone_hausdorff}


def cmd_ma_solve(cfg: RunConfig) -> dict:
    from .ma_solver import exhaustion_solve, problem_from_config, solve_fixed
    from .ma_solver.barriers import barrier_check, build_barriers

    prob = problem_from_config(cfg.params["config"])
    if cfg.params["mode"] == "fixed":
        sol = solve_fixed(prob, 1.0)
    else:
        sol = exhaustion_solve(prob)
    outdir = cfg.out or Path(".")
    outdir.mkdir(parents=True, exist_ok=True)
    res = sol.relative_residuals()
    with open(outdir / "solution.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y1", "y2", "v", "residual"])
        for (a, b), v, r in zip(sol.y, sol.w, res):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(v)), repr(float(r))])
    report = {"h": sol.h, "residual_inf": sol.residual_inf,
              "convexity_certificate": sol.convexity_certificate,
              "gradient_range_radius": sol.gradient_range_radius,
              "n_nodes": int(sol.y.shape[0]), "stages": len(sol.stages)}
    if prob.domain.kind in ("disk", "half-disk"):
        report["barrier_margins"] = barrier_check(sol, build_barriers(prob))
    if (prob.domain.kind == "disk" and prob.domain.radius == 1.0 and prob.boundary.kind == "constant"
            and prob.eta.kind == "constant"):
        # v = phi - sqrt(psi (1 - |y|^2)) solves the constant problem exactly
        psi = 1.0 / prob.eta.params["value"]
        y = sol.y
        m = np.sum(y * y, 1) <= 0.81
        exact = prob.boundary.params["value"] - np.sqrt(psi * (1 - np.sum(y[m] ** 2, 1)))
        report["interior_max_error"] = float(np.max(np.abs(sol.w[m] - exact)))
    _write_json(outdir / "report.json", report)
    return dict(report, csv=str(outdir / "solution.csv"), report=str(outdir / "report.json"))


def cmd_verify(cfg: RunConfig) -> dict:
    from .acceptance import run_all, write_ledger

    ids = cfg.params["ids"] or None
    results = run_all(ids, progress=lambda r: print(r.line(), flush=True), seed=cfg.seed)
    path = _out_file(cfg, "ledger.json")
    write_ledger(results, path)
    failed = [r.id for r in results if not r.passed]
    if failed:
        raise NumericalFailure(f"criteria failed: {failed}")
    return {"json": str(path), "passed": True}


HANDLERS = {"profile": cmd_profile, "lambda-table": cmd_lambda_table, "conjugate": cmd_conjugate,
            "blowdown": cmd_blowdown, "cone": cmd_cone, "ma-solve": cmd_ma_solve,
            "verify": cmd_verify}


def run(cfg: RunConfig) -> int:
    """Validate, dispatch and map errors to exit codes."""
    try:
        cfg.validate()
        np.random.seed(cfg.seed)
        summary = HANDLERS[cfg.command](cfg)
    except InvalidParams as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (NumericalFailure, MinkHypError) as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    print(json.dumps(summary, default=float))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minkhyp", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("--out", type=Path, default=None, help="output directory or file")
        return sp

    sp = add("profile", help="sample the profile f_c to CSV")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--tmax", type=float, default=10.0)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("lambda-table", help="lambda_c for a list of c")
    sp.add_argument("--c", type=_floats, required=True)
    sp.add_argument("--n", type=int, default=2)

    sp = add("conjugate", help="boundary trace of u_c^* from the profile")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--tmax", type=float, default=2000.0)
    sp.add_argument("--samples", type=int, default=64)
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--shifted", action="store_true", help="c = 1: use f_1(t + lambda_1)")

    sp = add("blowdown", help="blowdown V_u of u_c at given points")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--x", type=_points, default=_points("1,0;0.6,0.8;-1,0"))
    sp.add_argument("--r", type=float, default=1e3)
    sp.add_argument("--tmax", type=float, default=2.0e4)

    sp = add("cone", help="tangent cone at infinity of u_c, or a solve with prescribed cone")
    sp.add_argument("--c", type=float, default=None)
    sp.add_argument("--E", type=_points, default=None, help="unit vectors 'e1,e2;...' for V_E")
    sp.add_argument("--radii", type=_floats, default=[2.0, 4.0, 8.0])
    sp.add_argument("--h", type=float, default=1.0 / 64)
    sp.add_argument("--tmax", type=float, default=400.0)
    sp.add_argument("--dirs", type=int, default=256)

    sp = add("ma-solve", help="solve a Monge-Ampere problem from a JSON config")
    sp.add_argument("--config", type=Path, required=True)
    sp.add_argument("--mode", choices=("exhaustion", "fixed"), default="exhaustion")

    sp = add("verify", help="run the acceptance criteria and write a JSON ledger")
    sp.add_argument("--ids", type=lambda s: [int(v) for v in _floats(s)], default=None)
    return ap


def _config_from_args(ns) -> RunConfig:
    skip = {"command", "out", "seed", "verbose"}
    params = {k: v for k, v in vars(ns).items() if k not in skip}
    if ns.command == "ma-solve":
        if not ns.config.is_file():
            raise InvalidParams(f"config file {ns.config} not found")
        try:
            params["config"] = json.loads(ns.config.read_text())
        except json.JSONDecodeError as e:
            raise InvalidParams(f"config is not valid JSON: {e}") from None
    return RunConfig(command=ns.command, params=params, out=ns.out, seed=ns.seed)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(ns)
    except InvalidParams as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

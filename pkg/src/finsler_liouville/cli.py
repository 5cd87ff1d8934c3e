"""Command-line entry point.

Every command prints (or writes with ``--output``) one CheckReport as JSON
and exits 0 when the check passes, 1 when it fails and 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AccuracyError, FinslerError, StiffnessError
from .identities import brezis_merle_radial_check, d0_estimate, pohozaev_check
from .norms import NormModel, load_norm_config, verify_norm_properties
from .operators import (RadialProfile, annulus_points, qN_residual, radial_operator_check,
                        radial_shoot)
from .reports import CheckReport, write_csv
from .solution import (AsymptoticsReport, SolutionParams, asymptotics_check, du_of_t,
                       eval_grad_u, eval_u, level_set_radius, mass, u_of_t)
from .wulff import isoperimetric_quotient, parse_domain, wulff_volume

COMMANDS = ("verify-norm", "wulff-volume", "isoperimetric", "verify-solution", "mass",
            "asymptotics", "pohozaev", "brezis-merle", "d0", "radial-solve")

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    """Invalid command-line configuration (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    norm: NormModel
    beta: float
    lam: float
    tol: float | None
    grid: int | None
    radius: float | None
    eps: float
    seed: int
    output: Path | None
    csv: Path | None
    domain: str
    h: float
    method: str
    fractions: list

    @property
    def N(self) -> int:
        return self.norm.dimension

    def params(self) -> SolutionParams:
        return SolutionParams(self.N, self.beta, self.lam, self.norm)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="finsler-liouville",
        description="Verify Finsler-norm, Wulff-geometry and Liouville-solution identities.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--norm", type=Path, help="norm configuration file (YAML keys: family, "
                    "dimension, p, a, matrix); default: euclidean")
    ap.add_argument("--dim", type=int, help="dimension N (default 2, or the norm's)")
    ap.add_argument("--beta", type=float, default=0.5, help="weight exponent, 0 <= beta < N")
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0,
                    help="scale parameter of the solution family")
    ap.add_argument("--tol", type=float, help="pass/fail tolerance (command specific default)")
    ap.add_argument("--grid", type=int, help="sample/resolution count (command specific)")
    ap.add_argument("--radius", type=float, help="domain radius r or t_max")
    ap.add_argument("--eps", type=float, default=1e-3, help="inner radius for pohozaev")
    ap.add_argument("--seed", type=int, default=0, help="seed for all sampling")
    ap.add_argument("--output", type=Path, help="write the JSON report here")
    ap.add_argument("--csv", type=Path, help="write plot data (asymptotics, radial-solve)")
    ap.add_argument("--domain", default="wulff", help="isoperimetric domain, e.g. "
                    "wulff:1, disc:1,0.3,0, ellipse:2,1, annulus:0.5,1, star:0.2,3")
    ap.add_argument("--h", type=float, default=1e-3, help="finite-difference step")
    ap.add_argument("--method", default="radial_1d", choices=("radial_1d", "full_nd"))
    ap.add_argument("--fractions", default="0,0.1,0.3,0.5,0.7,0.9",
                    help="comma separated phi values for brezis-merle")
    return ap


def make_config(ns: argparse.Namespace) -> RunConfig:
    if ns.norm is not None:
        norm = load_norm_config(ns.norm)
        if ns.dim is not None and ns.dim != norm.dimension:
            raise UsageError(f"--dim {ns.dim} conflicts with the norm's dimension "
                             f"{norm.dimension}")
    else:
        norm = NormModel.euclidean(2 if ns.dim is None else ns.dim)
    for name in ("tol", "radius", "h", "eps"):
        v = getattr(ns, name)
        if v is not None and not (math.isfinite(v) and v > 0):
            raise UsageError(f"--{name} must be positive")
    if ns.grid is not None and ns.grid <= 0:
        raise UsageError("--grid must be positive")
    if not (math.isfinite(ns.lam) and ns.lam > 0):
        raise UsageError("--lambda must be positive")
    n = norm.dimension
    if not (math.isfinite(ns.beta) and 0 <= ns.beta < n):
        raise UsageError(f"--beta must lie in [0, N={n}); got {ns.beta}")
    try:
        fractions = [float(v) for v in ns.fractions.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --fractions {ns.fractions!r}") from None
    return RunConfig(ns.command, norm, ns.beta, ns.lam, ns.tol, ns.grid, ns.radius, ns.eps,
                     ns.seed, ns.output, ns.csv, ns.domain, ns.h, ns.method, fractions)


def emit_profile(obj, path) -> Path:
    """CSV plot data: t,u,minus_du,g for a RadialProfile; t,H,grad_decay for
    an AsymptoticsReport."""
    if isinstance(obj, RadialProfile):
        return write_csv(path, ["t", "u", "minus_du", "g"], obj.columns())
    if isinstance(obj, AsymptoticsReport):
        return write_csv(path, ["t", "H", "grad_decay"], obj.columns())
    raise TypeError(f"cannot emit {type(obj).__name__}")


# -- commands -------------------------------------------------------------------


def _verify_norm(cfg: RunConfig) -> CheckReport:
    return verify_norm_properties(cfg.norm, samples=cfg.grid or 1000, tol=cfg.tol or 1e-6,
                                  seed=cfg.seed)


def _wulff_volume(cfg: RunConfig) -> CheckReport:
    tol = cfg.tol or 1e-8
    k = wulff_volume(cfg.norm, rtol=min(1e-10, tol))
    return CheckReport.equality("wulff_volume", k, cfg.norm.kappa, tol, relative=True,
                                norm=cfg.norm.describe())


def _isoperimetric(cfg: RunConfig) -> CheckReport:
    dom = parse_domain(cfg.domain, cfg.norm)
    return isoperimetric_quotient(dom, cfg.norm, cfg.beta, tol=cfg.tol or 1e-6)


def _verify_solution(cfg: RunConfig) -> CheckReport:
    """Residual, gradient consistency and level-set membership in one report."""
    p = cfg.params()
    tol = cfg.tol or 1e-3
    r_out = cfg.radius or 3.0
    pts = annulus_points(cfg.norm, cfg.grid or 200, 0.5, r_out, cfg.seed)
    res = qN_residual(p, pts, cfg.h)
    t = cfg.norm.hat_polar(pts)
    # F(∇u) = −u'(F̂°) because u is a decreasing function of F̂° alone
    grad_gap = float(np.max(np.abs(cfg.norm.value(eval_grad_u(p, pts)) + du_of_t(p, t))))
    level = float(u_of_t(p, 1.0))
    R = level_set_radius(p, level)
    rng = np.random.default_rng(cfg.seed)
    x = rng.uniform(-2 * R, 2 * R, size=(1000, p.N))
    inside = eval_u(p, x) > level
    tx = cfg.norm.hat_polar(x)
    shell = np.abs(tx - R) <= 1e-12
    mis = int(np.sum((inside != (tx < R)) & ~shell))
    passed = res.max_rel <= tol and grad_gap <= 1e-9 and mis == 0
    return CheckReport("verify_solution", res.max_rel, 0.0, tol, res.max_rel, bool(passed),
                       details={"residual": {"max_abs": res.max_abs, "max_rel": res.max_rel,
                                             "fd_step": res.fd_step, "points": len(pts)},
                                "gradient_gauge_gap": grad_gap,
                                "level": level, "level_radius": R,
                                "membership_misclassified": mis,
                                "params": p.describe()})


def _mass(cfg: RunConfig) -> CheckReport:
    p = cfg.params()
    tol = cfg.tol or (1e-8 if cfg.method == "radial_1d" else 1e-3)
    m = mass(p, cfg.method)
    return CheckReport.equality("mass", m, p.mass_constant, tol, relative=True,
                                method=cfg.method, gamma0=p.gamma0, params=p.describe())


def _asymptotics(cfg: RunConfig) -> CheckReport:
    p = cfg.params()
    radii = np.geomspace(1e3, cfg.radius or 1e6, cfg.grid or 31)
    rep = asymptotics_check(p, radii)
    if cfg.csv:
        emit_profile(rep, cfg.csv)
    return rep.check(cfg.tol or 1e-3)


def _pohozaev(cfg: RunConfig) -> CheckReport:
    rep = pohozaev_check(cfg.params(), cfg.radius or 2.0, cfg.eps)
    return rep.check(cfg.tol or 1e-4)


def _brezis_merle(cfg: RunConfig) -> CheckReport:
    return brezis_merle_radial_check(cfg.params(), cfg.radius or 1.0, cfg.fractions,
                                     tol=cfg.tol or 1e-10, trials=cfg.grid or 4000,
                                     seed=cfg.seed)


def _d0(cfg: RunConfig) -> CheckReport:
    tol = cfg.tol or 1e-6
    mc = d0_estimate(cfg.norm, cfg.N, cfg.grid or 4000, beta=cfg.beta, seed=cfg.seed)
    d = mc.to_dict()
    d.pop("d0_estimate")
    return CheckReport("d0_positive", mc.d0_estimate, 0.0, tol, mc.d0_estimate,
                       bool(mc.d0_estimate > tol), True, d)


def _radial_solve(cfg: RunConfig) -> CheckReport:
    p = cfg.params()
    tol = cfg.tol or 1e-9
    prof = radial_shoot(p.N, p.beta, p.u0, cfg.radius or 10.0, tol)
    err = float(np.abs(prof.u_values - u_of_t(p, prof.grid)).max())
    defect = radial_operator_check(prof, p.beta, tol=10 * tol)
    if cfg.csv:
        emit_profile(prof, cfg.csv)
    limit = 1e4 * tol
    return CheckReport("radial_solve", err, 0.0, limit, err,
                       bool(err <= limit and defect.passed), False,
                       {"integrator_tol": tol, "steps": prof.meta["steps"],
                        "operator_defect": defect.to_dict(), "params": p.describe()})


DISPATCH = {
    "verify-norm": _verify_norm, "wulff-volume": _wulff_volume,
    "isoperimetric": _isoperimetric, "verify-solution": _verify_solution, "mass": _mass,
    "asymptotics": _asymptotics, "pohozaev": _pohozaev, "brezis-merle": _brezis_merle,
    "d0": _d0, "radial-solve": _radial_solve,
}


def run(cfg: RunConfig) -> int:
    report = DISPATCH[cfg.command](cfg)
    text = report.to_json()
    if cfg.output:
        cfg.output.write_text(text + "\n")
        print(f"{report.name}: {'pass' if report.passed else 'FAIL'} "
              f"(computed {report.computed:.12g}, reference {report.reference:.12g})")
    else:
        print(text)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    try:
        return run(make_config(ns))
    except (AccuracyError, StiffnessError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, FinslerError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

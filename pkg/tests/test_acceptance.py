"""Acceptance criteria 1-10, each recorded as a single PASS/FAIL line.

Every test computes its verdict first, records it, then asserts, so the
summary lists failures too.
"""
import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from finsler_liouville.identities import (brezis_merle_radial_check, d0_estimate,
                                          pohozaev_check)
from finsler_liouville.norms import NormModel, verify_norm_properties
from finsler_liouville.operators import annulus_points, qN_residual, radial_shoot
from finsler_liouville.solution import (SolutionParams, asymptotics_check, eval_grad_u,
                                        eval_u, level_set_radius, mass, u_of_t)
from finsler_liouville.wulff import Disc, Ellipse, WulffBall, isoperimetric_quotient


def record(number, summary, ok, elapsed):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {summary}  ({elapsed:.2f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_mass_quantization():
    start = time.perf_counter()
    norms = [NormModel.euclidean(2), NormModel.shifted([0.25, 0.0]), NormModel.lp(4, 2)]
    worst_radial = worst_nd = 0.0
    for norm in norms:
        for beta in (0.25, 0.5, 1.0, 1.5):
            for lam in (0.5, 1.0, 2.0):
                p = SolutionParams(2, beta, lam, norm)
                ref = p.mass_constant
                worst_radial = max(worst_radial, abs(mass(p) / ref - 1))
                worst_nd = max(worst_nd, abs(mass(p, "full_nd") / ref - 1))
    elapsed = time.perf_counter() - start
    ok = worst_radial < 1e-8 and worst_nd < 1e-3 and elapsed < 10
    record(1, f"mass: radial rel {worst_radial:.1e}, full_nd rel {worst_nd:.1e}", ok, elapsed)


def test_criterion_02_pde_residual():
    start = time.perf_counter()
    e2 = NormModel.euclidean(2)
    e3 = NormModel.euclidean(3)
    pts2 = annulus_points(e2, 200, 0.5, 3.0, seed=0)
    rel2 = max(qN_residual(SolutionParams(2, b, 1.0, e2), pts2, 1e-3).max_rel
               for b in (0.0, 0.5))
    p3 = SolutionParams(3, 1.0, 1.0, e3)
    pts3 = annulus_points(e3, 200, 0.5, 3.0, seed=0)
    rel3 = qN_residual(p3, pts3, 1e-3).max_rel
    factors = [qN_residual(p, pts, 2e-3).max_abs / qN_residual(p, pts, 1e-3).max_abs
               for p, pts in ((SolutionParams(2, 0.5, 1.0, e2), pts2), (p3, pts3))]
    elapsed = time.perf_counter() - start
    ok = rel2 < 1e-4 and rel3 < 1e-3 and all(3.5 <= f <= 4.5 for f in factors) \
        and elapsed < 30
    record(2, f"residual: N=2 {rel2:.1e}, N=3 {rel3:.1e}, factors "
              f"{', '.join(f'{f:.3f}' for f in factors)}", ok, elapsed)


def test_criterion_03_radial_shooting():
    start = time.perf_counter()
    worst = 0.0
    for N in (2, 3):
        for beta in (0.5, 1.0):
            p = SolutionParams.euclidean(N, beta, 1.0)
            prof = radial_shoot(N, beta, p.u0, 10.0, 1e-9)
            worst = max(worst, float(np.abs(prof.u_values - u_of_t(p, prof.grid)).max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 5
    record(3, f"shooting sup error {worst:.1e}", ok, elapsed)


def test_criterion_04_isoperimetric():
    start = time.perf_counter()
    norms = [NormModel.euclidean(2), NormModel.shifted([0.25, 0.0]), NormModel.lp(4, 2),
             NormModel.quadratic([[2.0, 0.3], [0.3, 1.0]]), NormModel.euclidean(3),
             NormModel.shifted([0.2, 0.1, -0.3])]
    ball_slack = max(abs(isoperimetric_quotient(WulffBall(m, r), m, b).details["slack"])
                     for m in norms for b in (0.5, 1.0) for r in (0.5, 1.3))
    e2 = NormModel.euclidean(2)
    ell = isoperimetric_quotient(Ellipse([2, 1]), e2, 1.0).details["slack"]
    disc = isoperimetric_quotient(Disc(1.0, [0.3, 0.0]), e2, 1.0).details["slack"]
    elapsed = time.perf_counter() - start
    ok = ball_slack < 1e-6 and ell > 1e-2 and disc > 1e-2 and elapsed < 10
    record(4, f"isoperimetric: Wulff |slack| {ball_slack:.1e}, ellipse {ell:.6f}, "
              f"disc {disc:.6f}", ok, elapsed)


def test_criterion_05_pohozaev():
    start = time.perf_counter()
    p = SolutionParams.euclidean(2, 0.5, 1.0)
    worst = max(pohozaev_check(p, r, 1e-3).relative_defect for r in (1.0, 2.0, 4.0))
    big = pohozaev_check(p, 1e3, 1e-3)
    expected = (p.N - 1) * p.norm.kappa * p.gamma0 ** p.N
    comb = abs(big.outer_combination / expected - 1)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and comb < 1e-2 and elapsed < 20
    record(5, f"Pohozaev: relative defect {worst:.1e}, r=1e3 combination rel {comb:.1e}",
           ok, elapsed)


def _ambient_decay(p, t, count=64):
    """t F(grad(u + gamma0 log F^o_hat)) on the Wulff sphere of radius t, from
    the ambient gradients rather than the radial profile."""
    dirs = np.random.default_rng(6).standard_normal((count, p.N))
    x = t * dirs / p.norm.hat_polar(dirs)[:, None]
    v = eval_grad_u(p, x) + p.gamma0 * p.norm.hat_polar_gradient(x) / t
    return float(np.max(t * p.norm.value(v)))


def test_criterion_06_asymptotics():
    start = time.perf_counter()
    ok = True
    parts = []
    for N, beta in ((2, 0.0), (2, 0.5), (3, 0.5)):
        p = SolutionParams.euclidean(N, beta, 1.0)
        rep = asymptotics_check(p, np.geomspace(1e3, 1e6, 31))
        slope_err = abs(rep.gamma_measured - p.gamma0)
        closed = p.gamma0 / (1 + p.lam ** p.q * 100.0 ** p.q_prime)
        gap = abs(_ambient_decay(p, 100.0) - closed)
        g1000 = _ambient_decay(p, 1e3)
        ok &= slope_err < 1e-3 and gap < 1e-6 and g1000 < 1e-3
        parts.append(f"N={N} b={beta} slope {slope_err:.1e} gap {gap:.1e} t=1e3 {g1000:.1e}")
    record(6, "asymptotics: " + "; ".join(parts), ok, time.perf_counter() - start)


def test_criterion_07_brezis_merle():
    start = time.perf_counter()
    phis = [0.1 * k for k in range(1, 10)]
    worst_slack = math.inf
    worst_eq = 0.0
    for beta in (0.5, 1.0, 1.5):
        for lam in (0.5, 1.0, 2.0):
            p = SolutionParams.euclidean(2, beta, lam)
            rep = brezis_merle_radial_check(p, 1.0, [0.0] + phis)
            rows = rep.details["rows"]
            worst_eq = max(worst_eq, abs(rows[0]["relative_slack"]))
            worst_slack = min(worst_slack, min(r["relative_slack"] for r in rows[1:]))
    elapsed = time.perf_counter() - start
    ok = worst_slack > 0 and worst_eq < 1e-8
    record(7, f"Brezis-Merle: min relative slack {worst_slack:.3e}, "
              f"phi=0 gap {worst_eq:.1e}", ok, elapsed)


def test_criterion_08_constants():
    start = time.perf_counter()
    d2 = d0_estimate(NormModel.euclidean(2), 2, 4000, beta=1.0)
    d3 = d0_estimate(NormModel.euclidean(3), 3, 4000, beta=1.0)
    x, y = (np.asarray(v) for v in d3.argmin_pair)
    antipodal = float(np.linalg.norm(x + y) / np.linalg.norm(x - y))
    elapsed = time.perf_counter() - start
    ok = (abs(d2.d0_estimate - 1) < 1e-9 and 0.49 <= d3.d0_estimate <= 0.51
          and antipodal < 1e-3 and abs(d2.delta - 2 * math.pi) < 1e-6)
    record(8, f"constants: d0(2)={d2.d0_estimate:.12f}, d0(3)={d3.d0_estimate:.6f}, "
              f"antipodal ratio {antipodal:.1e}, delta={d2.delta:.10f}", ok, elapsed)


def test_criterion_09_norm_properties():
    start = time.perf_counter()
    norms = [NormModel.euclidean(2), NormModel.euclidean(3), NormModel.lp(4, 2),
             NormModel.lp(1.5, 3), NormModel.quadratic([[2.0, 0.3], [0.3, 1.0]]),
             NormModel.quadratic([[2.0, 0.2, 0.0], [0.2, 1.0, 0.1], [0.0, 0.1, 1.5]]),
             NormModel.shifted([0.25, 0.0]), NormModel.shifted([0.2, 0.1, -0.3])]
    failed = []
    worst_inv = 0.0
    for m in norms:
        rep = verify_norm_properties(m, samples=1000, tol=1e-6)
        inv = rep.details["properties"]["polar_involution"]["max_violation"]
        worst_inv = max(worst_inv, inv)
        if not rep.passed:
            failed.append(f"{m.family}{m.dimension}:{rep.details['failed']}")
    elapsed = time.perf_counter() - start
    ok = not failed and worst_inv < 1e-6
    record(9, f"norm properties: {len(norms)} norms, failures {failed or 'none'}, "
              f"involution {worst_inv:.1e}", ok, elapsed)


def test_criterion_10_level_sets():
    start = time.perf_counter()
    rng = np.random.default_rng(10)
    total = 0
    for norm in (NormModel.euclidean(2), NormModel.shifted([0.25, 0.0]), NormModel.lp(4, 2),
                 NormModel.shifted([0.2, 0.1, -0.3])):
        p = SolutionParams(norm.dimension, 0.5, 1.0, norm)
        for level in (p.u0 - 0.5, 0.0, -5.0):
            R = level_set_radius(p, level)
            x = rng.uniform(-2 * R, 2 * R, (1000, norm.dimension))
            t = norm.hat_polar(x)
            keep = np.abs(t - R) > 1e-12
            total += int(np.sum(((eval_u(p, x) > level) != (t < R))[keep]))
    elapsed = time.perf_counter() - start
    record(10, f"level sets: {total} misclassified", total == 0, elapsed)

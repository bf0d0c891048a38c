"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The two flow runs are
module fixtures shared by the flow, consistency, and barrier criteria.
Desk scale: full 2-d grid 128x128 for the conserved flow, axisymmetric
n = 2 with 384 colatitude nodes for the inverse flow, corpora at n = 2, 3.
"""

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from hflow import flows as fl
from hflow import functionals as fn
from hflow import hypersurface as hs
from hflow import symfun as sf
from hflow import verify as vf
from hflow.symfun import SpeedFunctionSpec


def report(num, ok, detail):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def orders(errs):
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]


# ---------------------------------------------------------------------------
# shared long runs
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def conserved_run():
    """Weighted-volume-preserving F = E_1 flow, perturbed sphere, 128x128."""
    t0 = time.monotonic()
    graph = hs.perturbed_sphere(hs.SphereGrid.full2d(128, 128), 1.0, 0.05, 2)
    spec = fl.FlowSpec(family="weighted_volume_preserving",
                       speed=SpeedFunctionSpec.mean(), t_end=12.0, cfl=0.5)
    result = fl.run(graph, spec, monitor_dt=0.02)
    return SimpleNamespace(result=result, spec=spec, grid=graph.grid,
                           elapsed=time.monotonic() - t0)


@pytest.fixture(scope="module")
def inverse_run():
    """Inverse-constrained F = E_2/E_1 flow from a static convex off-center
    sphere (rho = 1, d = 0.3), axisymmetric n = 2 profile."""
    t0 = time.monotonic()
    graph = hs.offcenter_sphere(hs.SphereGrid.axisym(2, 384), 1.0, 0.3)
    spec = fl.FlowSpec(
        family="inverse_constrained",
        speed=SpeedFunctionSpec.quotient(2, 1, phi="neg_inv_power", phi_param=1.0),
        t_end=3.0, cfl=0.5)
    result = fl.run(graph, spec, monitor_dt=0.02)
    return SimpleNamespace(result=result, spec=spec, grid=graph.grid,
                           elapsed=time.monotonic() - t0)


# ---------------------------------------------------------------------------
# 1. symmetric-function suite
# ---------------------------------------------------------------------------


def test_criterion_1_symmetric_functions():
    t0 = time.monotonic()
    rng = np.random.default_rng(7)

    worst_newton = 0.0
    for n in (2, 3, 4, 6, 8):
        for _ in range(40):
            kappa = rng.uniform(0.05, 5.0, size=n)
            p = sf.eval_elementary(kappa)
            for k in range(1, n + 1):
                res = np.abs(sf.newton_identities(p, k)) / (1.0 + abs(p.e[k]))
                worst_newton = max(worst_newton, float(res.max()))
    newton_ok = worst_newton < 1e-10

    # 10^4 Newton-MacLaurin margins over Gamma_k samples
    margins_checked = 0
    worst_margin = np.inf
    while margins_checked < 10_000:
        n = int(rng.integers(2, 7))
        block = rng.uniform(0.02, 10.0, size=(64, n))
        e = sf.elementary_raw_batch(block) / sf.binom_row(n)
        for k in range(1, n):
            ok = np.all(e[:, 1:k + 1] > 0.0, axis=1)
            m = e[ok, k] ** 2 - e[ok, k + 1] * e[ok, k - 1]
            if m.size:
                worst_margin = min(worst_margin, float(m.min()))
                margins_checked += m.size
    margin_ok = worst_margin >= 0.0

    worst_enum = 0.0
    for n in range(1, 9):
        for _ in range(25):
            kappa = rng.uniform(-2.0, 4.0, size=n)
            e = sf.elementary_raw(kappa) / sf.binom_row(n)
            for k in range(n + 1):
                exact = sf.subset_sum_elementary(kappa, k)
                worst_enum = max(worst_enum, abs(e[k] - exact) / max(1.0, abs(exact)))
    enum_ok = worst_enum < 1e-12

    elapsed = time.monotonic() - t0
    report(1, newton_ok and margin_ok and enum_ok and elapsed < 10.0,
           f"newton {worst_newton:.2e} (<1e-10), NM min margin {worst_margin:.2e} (>=0, "
           f"{margins_checked} samples), enum {worst_enum:.2e} (<1e-12), {elapsed:.1f}s (<10s)")


# ---------------------------------------------------------------------------
# 2. curvature correctness
# ---------------------------------------------------------------------------


def test_criterion_2_curvature():
    t0 = time.monotonic()
    coth1 = 1.0 / math.tanh(1.0)

    sphere_err = 0.0
    for grid in (hs.SphereGrid.full2d(128), hs.SphereGrid.axisym(2, 256),
                 hs.SphereGrid.axisym(5, 128)):
        f = hs.curvature(hs.centered_sphere(grid, 1.0))
        sphere_err = max(sphere_err,
                         float(np.abs(f.kappa_a - coth1).max()),
                         float(np.abs(f.kappa_b - coth1).max()))
    exact_ok = sphere_err < 1e-12

    all_orders = []
    for mode in ("axisym", "full2d"):
        errs = []
        for nt in (32, 64, 128):
            grid = (hs.SphereGrid.axisym(2, nt) if mode == "axisym"
                    else hs.SphereGrid.full2d(nt, nt))
            f = hs.curvature(hs.offcenter_sphere(grid, 1.0, 0.3))
            errs.append(max(np.abs(f.kappa_a - coth1).max(),
                            np.abs(f.kappa_b - coth1).max()))
        all_orders += orders(errs)
    order_ok = all(1.7 < p < 2.3 for p in all_orders)

    nt = 128
    fa = hs.curvature(hs.offcenter_sphere(hs.SphereGrid.axisym(2, nt), 1.0, 0.3))
    ff = hs.curvature(hs.offcenter_sphere(hs.SphereGrid.full2d(nt, nt), 1.0, 0.3))
    cross = max(np.abs(ff.kappa_a - np.minimum(fa.kappa_a, fa.kappa_b)[:, None]).max(),
                np.abs(ff.kappa_b - np.maximum(fa.kappa_a, fa.kappa_b)[:, None]).max())
    h2 = (math.pi / nt) ** 2
    cross_ok = cross <= 10 * h2

    elapsed = time.monotonic() - t0
    report(2, exact_ok and order_ok and cross_ok and elapsed < 60.0,
           f"sphere exact {sphere_err:.2e} (<1e-12), umbilic orders "
           f"{['%.2f' % p for p in all_orders]} (1.7..2.3), cross {cross:.2e} "
           f"(<=10h^2={10 * h2:.2e}), {elapsed:.1f}s (<60s)")


# ---------------------------------------------------------------------------
# 3. identity suite
# ---------------------------------------------------------------------------


def test_criterion_3_identities():
    t0 = time.monotonic()
    shapes = [
        ("perturbed", lambda grid: hs.perturbed_sphere(grid, 1.0, 0.1, 2)),
        ("offcenter", lambda grid: hs.offcenter_sphere(grid, 1.0, 0.3)),
    ]
    all_orders = []
    for _name, build in shapes:
        mink_errs, supp_errs = [], []
        for nt in (32, 64, 128):
            g = build(hs.SphereGrid.axisym(2, nt))
            f = hs.curvature(g)
            rec = fn.evaluate(f)
            mink_errs.append(float(np.abs(rec.minkowski).max()))
            supp_errs.append(hs.support_identity_residuals(f, g).max_abs)
        all_orders += orders(mink_errs) + orders(supp_errs)
    order_ok = all(1.7 < p < 2.3 for p in all_orders)

    worst_wl0 = 0.0
    for grid in (hs.SphereGrid.full2d(64), hs.SphereGrid.axisym(3, 128)):
        rec = fn.evaluate(hs.curvature(hs.perturbed_sphere(grid, 1.0, 0.15, 2)))
        worst_wl0 = max(worst_wl0, abs(rec.Wl[0] - rec.wl0_volume_form) / rec.Wl[0])
        wl0_tol = 10 * grid.h_theta**2
    wl0_ok = worst_wl0 <= wl0_tol

    elapsed = time.monotonic() - t0
    report(3, order_ok and wl0_ok and elapsed < 60.0,
           f"residual orders {['%.2f' % p for p in all_orders]} (1.7..2.3), "
           f"Wl0 two-form gap {worst_wl0:.2e} (<=O(h^2)), {elapsed:.1f}s (<60s)")


# ---------------------------------------------------------------------------
# 4. conserved flow at 128x128
# ---------------------------------------------------------------------------


def test_criterion_4_conserved_flow(conserved_run):
    res = conserved_run.result
    drift_ok = res.wl0_rel_drift < 1e-5
    decay_ok = res.converged and res.step_max_grad[-1] < 1e-10
    alpha_ok = res.alpha_fit > 0.0
    envelope_ok = fl.gradient_envelope_excess(res, slack=1e-6) <= 0.0
    wl0 = res.samples[0].record.Wl[0]
    r_pred = fn.ball_profile_inverse(2, 0, True, wl0)
    radius_ok = abs(res.r_inf - r_pred) < 1e-3
    time_ok = conserved_run.elapsed < 600.0
    report(4, drift_ok and decay_ok and alpha_ok and envelope_ok and radius_ok and time_ok,
           f"Wl0 drift {res.wl0_rel_drift:.2e} (<1e-5), final grad "
           f"{res.step_max_grad[-1]:.2e} (<1e-10), alpha_fit {res.alpha_fit:.3f} (>0), "
           f"alpha_hat {res.alpha_hat:.3f}, envelope ok {envelope_ok}, "
           f"|r_inf-pred| {abs(res.r_inf - r_pred):.2e} (<1e-3), "
           f"{conserved_run.elapsed:.0f}s (<600s)")


# ---------------------------------------------------------------------------
# 5. inverse flow: static convexity and monotone functionals
# ---------------------------------------------------------------------------


def test_criterion_5_inverse_flow(inverse_run):
    res = inverse_run.result
    h = inverse_run.grid.h_theta
    margin_floor = -10 * h * h
    margins = res.step_min_margin
    margin_ok = margins.min() >= margin_floor
    i5 = max(1, int(0.05 * margins.size))
    strict_ok = margins[i5:].min() > 0.0

    t = np.array([s.t for s in res.samples])
    dt_pairs = np.diff(t)
    wl0 = np.array([s.record.Wl[0] for s in res.samples])
    wl2 = np.array([s.record.Wl[2] for s in res.samples])
    wl3 = np.array([s.record.Wl[3] for s in res.samples])
    tol0 = 10 * h * h * dt_pairs * max(1.0, np.abs(wl0).max())
    tol2 = 10 * h * h * dt_pairs * max(1.0, np.abs(wl2).max())
    tol3 = 10 * h * h * dt_pairs * max(1.0, np.abs(wl3).max())
    wl0_ok = bool(np.all(np.diff(wl0) >= -tol0))
    wl2_ok = bool(np.all(np.diff(wl2) <= tol2))
    wl3_ok = bool(np.all(np.diff(wl3) <= tol3))
    time_ok = inverse_run.elapsed < 600.0

    report(5, margin_ok and strict_ok and wl0_ok and wl2_ok and wl3_ok and time_ok,
           f"min margin {margins.min():.4f} (>= {margin_floor:.1e}), after-5% min "
           f"{margins[i5:].min():.4f} (>0), Wl0 nondecreasing {wl0_ok}, "
           f"Wl2 nonincreasing {wl2_ok}, Wl3 nonincreasing {wl3_ok}, "
           f"{inverse_run.elapsed:.0f}s (<600s)")


# ---------------------------------------------------------------------------
# 6. variational consistency along both flows
# ---------------------------------------------------------------------------


def test_criterion_6_variational_consistency(conserved_run, inverse_run):
    worst = {}
    for tag, ns in (("conserved", conserved_run), ("inverse", inverse_run)):
        rep = fl.variational_consistency(ns.result.samples, ns.spec)
        h = ns.grid.h_theta
        n = ns.result.samples[0].record.n
        for k in range(n + 2):
            series = np.abs([s.record.Wl[k] for s in ns.result.samples]).max()
            floor = h * h * max(1.0, series)
            pred = rep.predicted_Wl[:, k]
            meas = rep.measured_Wl[:, k]
            ratio = np.max(np.abs(meas - pred) / (0.02 * np.abs(pred) + floor))
            worst[f"{tag}:Wl{k}"] = float(ratio)
    ok = all(v <= 1.0 for v in worst.values())
    worst_key = max(worst, key=worst.get)
    report(6, ok,
           f"max (|d/dt - rhs| / (2%|rhs| + h^2 floor)) = {worst[worst_key]:.3f} "
           f"at {worst_key} (<=1 everywhere, {len(worst)} series)")


# ---------------------------------------------------------------------------
# 7. inequality corpus
# ---------------------------------------------------------------------------


def test_criterion_7_inequality_corpus():
    t0 = time.monotonic()
    fails = 0
    bad_eq = []
    nonpos = []
    worst_cross = 0.0
    checked = 0
    for n, nt in ((2, 512), (3, 384)):
        grid = hs.SphereGrid.axisym(n, nt)
        h2 = grid.h_theta**2
        for sid, g in vf.default_corpus(grid):
            reports = vf.run_checks(hs.curvature(g), shape_id=sid)
            for r in reports:
                checked += 1
                if r.verdict == "fail":
                    fails += 1
                if r.name.startswith("wl_vs_wl0") and r.hypothesis_ok:
                    worst_cross = max(worst_cross, float(r.note.split("=")[1]))
                family = r.name.split("[")[0]
                if family not in ("wl_vs_wl0", "wl0_vs_w0", "wl_vs_wm"):
                    continue
                if sid.startswith("centered"):
                    if r.verdict != "equality" or abs(r.relative_slack) > 10 * h2:
                        bad_eq.append((n, sid, r.name, r.relative_slack))
                elif r.verdict != "no_verdict" and r.slack <= 0.0:
                    nonpos.append((n, sid, r.name, r.slack))
    elapsed = time.monotonic() - t0
    ok = (fails == 0 and not bad_eq and not nonpos
          and worst_cross <= 1e-10 and elapsed < 300.0)
    report(7, ok,
           f"{checked} checks: fails={fails} (=0), centered-equality violations "
           f"{len(bad_eq)} (=0), nonpositive slacks {len(nonpos)} (=0), rhs cross "
           f"{worst_cross:.2e} (<=1e-10), {elapsed:.1f}s (<300s)")


# ---------------------------------------------------------------------------
# 8. C0 barrier along every run
# ---------------------------------------------------------------------------


def test_criterion_8_c0_barrier(conserved_run, inverse_run):
    c1, w1 = conserved_run.result.c0_violations, conserved_run.result.c0_worst
    c2, w2 = inverse_run.result.c0_violations, inverse_run.result.c0_worst
    ok = c1 == 0 and c2 == 0
    report(8, ok,
           f"per-step extrema slack 1e-8: conserved run {c1} violations "
           f"(worst {w1:.1e}), inverse run {c2} violations (worst {w2:.1e})")

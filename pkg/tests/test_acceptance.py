"""End-to-end acceptance runs, one test per criterion.

Each test records a ``C<i> PASS|FAIL`` line (repeated in the terminal summary)
before asserting.  The n=512 runs take about 15 minutes in total on one core.
"""
import time

import numpy as np
import pytest

from bdshear.approx import decay_curve, fit_rate, log_spaced_N
from bdshear.cartoon import cartoon_from_dict, rasterize
from bdshear.configs import bundled_cartoon
from bdshear.frames import (
    check_projection_equivalence,
    dual_reconstruct,
    estimate_bounds,
    project_system,
)
from bdshear.generators import build_generator_set, validate_decay
from bdshear.system import CoefficientTable, Cone, ShearletSystem
from bdshear.theorycheck import (
    check_decay_envelopes,
    corner_counts,
    corner_scaling,
    cross_shear_exponent,
    max_coefficient_slope,
)

from oracles import dense_analysis_matrix, direct_dft_magnitude, least_squares_dual, upper_envelope_slope

pytestmark = pytest.mark.slow


def verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


@pytest.fixture(scope="module")
def gen():
    return build_generator_set(6, 5, 10)


@pytest.fixture(scope="module")
def big(gen):
    t0 = time.perf_counter()
    s = ShearletSystem(gen, 512, 6)
    s.setup_seconds = time.perf_counter() - t0
    return s


def test_c1_adjoint_and_gram(gen, report_criterion):
    t0 = time.perf_counter()
    s = ShearletSystem(gen, 256, 4)
    rng = np.random.default_rng(1)
    h2 = 1.0 / 256**2
    adj, sym, gram, pos = [], [], [], True
    for _ in range(20):
        f, g = rng.standard_normal((2, 256, 256))
        theta = rng.standard_normal(s.size)
        a = np.dot(s.analyze_array(f), theta)
        b = np.sum(f * s.synthesize_array(theta)) * h2
        adj.append(abs(a - b) / abs(a))
        Sf, Sg = s.frame_apply_array(f), s.frame_apply_array(g)
        lhs, rhs = np.sum(Sf * g), np.sum(f * Sg)
        sym.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
        quad = np.sum(Sf * f) * h2
        coef = s.analyze_array(f)
        gram.append(abs(quad - np.dot(coef, coef)) / quad)
        pos &= bool(quad > 0)
    seconds = time.perf_counter() - t0
    ok = max(adj) <= 1e-10 and max(sym) <= 1e-10 and max(gram) <= 1e-10 and pos and seconds < 60
    report_criterion(
        f"C1 {verdict(ok)} adjoint {max(adj):.2e} symmetry {max(sym):.2e} gram {max(gram):.2e} "
        f"positive {pos} ({seconds:.1f} s, limit 60 s)"
    )
    assert ok


def test_c2_norm_invariance(gen, report_criterion):
    t0 = time.perf_counter()
    n = 256
    s = ShearletSystem(gen, n, 4, extent=1.0, cache_bytes=0)
    rng = np.random.default_rng(2)
    hv = np.flatnonzero((s.indices.cone != int(Cone.LOW)) & (2.0**s.indices.j <= n / 8))
    errs = []
    for i in rng.choice(hv, 200, replace=False):
        sl, _, _ = s.pixel_shift(s.indices[i])
        norm = np.sqrt(np.sum(s.filters[sl.filter_key].values ** 2)) / n
        errs.append(abs(norm - gen.psi_norm) / gen.psi_norm)
    seconds = time.perf_counter() - t0
    ok = max(errs) <= 0.01
    report_criterion(f"C2 {verdict(ok)} max relative norm error {max(errs):.2e} over 200 atoms, limit 1e-2 ({seconds:.1f} s)")
    assert ok


def test_c3_projection_equivalence(gen, report_criterion):
    t0 = time.perf_counter()
    s = ShearletSystem(gen, 256, 4)
    omega = cartoon_from_dict(bundled_cartoon("corner")).omega
    bounds = estimate_bounds(project_system(s, omega))
    try:
        rep = check_projection_equivalence(s, omega, 50, bounds, delta=0.05, seed=3)
        diff, lo, hi, ok = rep.max_table_difference, rep.ratios.min(), rep.ratios.max(), rep.ok
    except Exception as exc:  # EquivalenceViolated carries the offending ratio
        diff, lo, hi, ok = float("nan"), getattr(exc, "ratio", float("nan")), float("nan"), False
    seconds = time.perf_counter() - t0
    ok = ok and seconds < 300
    report_criterion(
        f"C3 {verdict(ok)} table difference {diff:.1e}, ratios [{lo:.4f}, {hi:.4f}] within "
        f"[{0.95 * bounds.A:.4f}, {1.05 * bounds.B:.4f}] ({seconds:.1f} s, limit 300 s)"
    )
    assert ok


def test_c4_smooth_rate(big, report_criterion):
    t0 = time.perf_counter()
    f = cartoon_from_dict(bundled_cartoon("smooth"))
    rep = decay_curve(rasterize(f, 512), big, log_spaced_N(64, 2048), reconstruct=False)
    fit = fit_rate(rep, 64, 2048)
    seconds = time.perf_counter() - t0 + big.setup_seconds
    ok = fit.beta >= 1.8 and seconds < 900
    report_criterion(f"C4 {verdict(ok)} tail exponent {fit.beta:.3f} (>= 1.8) over [64, 2048] ({seconds:.1f} s, limit 900 s)")
    assert ok


def test_c5_main_rate(big, report_criterion):
    t0 = time.perf_counter()
    f = cartoon_from_dict(bundled_cartoon("corner"))
    proj = project_system(big, f.omega)
    bounds = estimate_bounds(proj)
    rep = decay_curve(rasterize(f, 512), proj, log_spaced_N(64, 4096), bounds)
    fit = fit_rate(rep, 64, 4096)
    worst = float(np.max(rep.recon / (rep.bound * 1.05)))
    seconds = time.perf_counter() - t0 + big.setup_seconds
    failures = len(rep.notes["cg_failures"])
    ok = 1.6 <= fit.beta_log <= 2.4 and worst <= 1.0 and seconds < 1800
    report_criterion(
        f"C5 {verdict(ok)} log-corrected exponent {fit.beta_log:.3f} (in [1.6, 2.4]), plain {fit.beta:.3f}, "
        f"max recon/(1.05 bound) {worst:.4f}, A {bounds.A:.4g} B {bounds.B:.4g}, CG failures {failures} "
        f"({seconds:.0f} s, limit 1800 s)"
    )
    assert ok


def test_c6_decay_envelopes(big, report_criterion):
    t0 = time.perf_counter()
    f = cartoon_from_dict(bundled_cartoon("curved-edge"))
    theta = big.analyze_array(rasterize(f, 512).samples)
    rep = check_decay_envelopes(f, big, (f.B, f.omega), range(2, 7), coefficients=theta, edge_domains=(f.B,))
    slope, per_j = max_coefficient_slope(rep, ("steep",))
    falloff, offsets, _ = cross_shear_exponent(rep, 6, ("shallow",))
    seconds = time.perf_counter() - t0
    ok_slope = -2.75 <= slope <= -1.75
    ok_cross = 2.2 <= falloff <= 3.8
    maxima = ", ".join(f"j={j}: {v:.2e}" for j, v in sorted(per_j.items()))
    report_criterion(
        f"C6 {verdict(ok_slope and ok_cross)} steep-edge slope {slope:.3f} (in [-2.75, -1.75]) {verdict(ok_slope)}; "
        f"cross-shear exponent {falloff:.3f} at j=6 over {len(offsets)} offsets (in [2.2, 3.8]) {verdict(ok_cross)}; "
        f"maxima {maxima} ({seconds:.0f} s)"
    )
    assert ok_slope and ok_cross


def test_c7_counting_bounds(big, report_criterion):
    t0 = time.perf_counter()
    f = cartoon_from_dict(bundled_cartoon("corner"))
    counts = corner_counts(big, f.B, range(2, 7))
    theta = big.analyze_array(rasterize(f, 512).samples)
    scaling = corner_scaling(f, big, [2.0**-e for e in range(4, 16)], range(2, 7), coefficients=theta)
    seconds = time.perf_counter() - t0
    spreads = counts.spread
    ok_counts = all(v < 4.0 for v in spreads.values())
    ok_growth = 0.25 <= scaling.growth_exponent <= 0.75
    text = ", ".join(f"{k} {v:.2f}" for k, v in spreads.items())
    report_criterion(
        f"C7 {verdict(ok_counts and ok_growth)} ratio spreads across j {text} (< 4); "
        f"corner growth exponent {scaling.growth_exponent:.3f} (in [0.25, 0.75]) ({seconds:.0f} s)"
    )
    assert ok_counts and ok_growth


def test_c8_generator_flags(gen, report_criterion):
    rep = validate_decay(gen)
    fine = build_generator_set(6, 5, 12)
    low = np.logspace(-6, -2, 40, base=2.0)
    high = np.geomspace(2.0**3, 2.0**6, 400)
    alpha_ref = float(np.polyfit(np.log2(low), np.log2(direct_dft_magnitude(fine.psi1.values, fine.h_gen, low)), 1)[0])
    gamma_ref = min(
        upper_envelope_slope(high, direct_dft_magnitude(fine.psi1.values, fine.h_gen, high)),
        upper_envelope_slope(high, direct_dft_magnitude(fine.psi2.values, fine.h_gen, high)),
    )
    agree = abs(rep.alpha - alpha_ref) <= 0.1 and abs(rep.gamma - gamma_ref) <= 0.25
    ok = rep.alpha_ok and rep.gamma_ok and agree
    report_criterion(
        f"C8 {verdict(ok)} alpha {rep.alpha:.3f} (> 5) {verdict(rep.alpha_ok)}, gamma {rep.gamma:.3f} (>= 4) "
        f"{verdict(rep.gamma_ok)}; r=12 DFT oracle alpha {alpha_ref:.3f} gamma {gamma_ref:.3f} agreement {verdict(agree)}"
    )
    assert ok


def test_c9_dense_oracle(gen, report_criterion):
    n = 32
    s = ShearletSystem(gen, n, 1)
    T = dense_analysis_matrix(s)
    rng = np.random.default_rng(9)
    errs = {"analyze": 0.0, "synthesize": 0.0, "frame_apply": 0.0}
    for _ in range(5):
        f = rng.standard_normal((n, n))
        theta = rng.standard_normal(s.size)
        ref_a = T @ f.ravel()
        ref_s = (T.T @ theta).reshape(n, n) * n**2
        ref_f = (T.T @ ref_a).reshape(n, n) * n**2
        errs["analyze"] = max(errs["analyze"], np.linalg.norm(s.analyze_array(f) - ref_a) / np.linalg.norm(ref_a))
        errs["synthesize"] = max(errs["synthesize"], np.linalg.norm(s.synthesize_array(theta) - ref_s) / np.linalg.norm(ref_s))
        errs["frame_apply"] = max(errs["frame_apply"], np.linalg.norm(s.frame_apply_array(f) - ref_f) / np.linalg.norm(ref_f))
    theta = rng.standard_normal(s.size)
    ours = dual_reconstruct(CoefficientTable.from_system(s, theta), s, tol=1e-13, maxiter=2000).samples
    ref = least_squares_dual(T, theta, n)
    dual_err = float(np.max(np.abs(ours - ref)) / np.max(np.abs(ref)))
    ok = max(errs.values()) <= 1e-9 and dual_err <= 1e-8
    text = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    report_criterion(f"C9 {verdict(ok)} {text} (<= 1e-9); dual reconstruction {dual_err:.1e} (<= 1e-8)")
    assert ok

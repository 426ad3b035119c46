import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdshear.cartoon import ImageGrid, domain_cells
from bdshear.errors import CGNotConverged, EquivalenceViolated, GridMismatch, NotAFrame
from bdshear.frames import (
    FrameBounds,
    check_projection_equivalence,
    conjugate_gradient,
    dual_reconstruct,
    estimate_bounds,
    frame_apply,
    project_system,
    random_supported_field,
)
from bdshear.generators import build_generator_set
from bdshear.geometry import disk, square
from bdshear.system import CoefficientTable, ShearletSystem

from oracles import dense_analysis_matrix, least_squares_dual


@pytest.fixture(scope="module")
def gen():
    return build_generator_set(6, 5, 10)


@pytest.fixture(scope="module")
def small(gen):
    return ShearletSystem(gen, 32, 1)


@pytest.fixture(scope="module")
def dense(small):
    return dense_analysis_matrix(small)


@pytest.fixture(scope="module")
def dense_eigs(dense):
    # frame inequality in grid L2: ||T f||^2 against sum(f^2) / n^2
    return np.linalg.eigvalsh(32**2 * dense.T @ dense)


@pytest.fixture(scope="module")
def medium(gen):
    return ShearletSystem(gen, 64, 2)


def test_frame_apply_of_zero(small):
    assert not np.any(frame_apply(ImageGrid(np.zeros((32, 32))), small).samples)
    with pytest.raises(GridMismatch):
        frame_apply(ImageGrid(np.zeros((16, 16))), small)


@settings(max_examples=10)
@given(seed=st.integers(0, 2**16))
def test_frame_operator_is_gram_of_analysis(small, seed):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2, 32, 32))
    Sf, Sg = small.frame_apply_array(f), small.frame_apply_array(g)
    coef = small.analyze_array(f)
    assert np.sum(Sf * f) / 32**2 == pytest.approx(np.dot(coef, coef), rel=1e-10)
    assert np.sum(Sf * g) == pytest.approx(np.sum(f * Sg), rel=1e-10)


def test_cg_solves_spd_system():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((40, 40))
    M = M @ M.T + 40 * np.eye(40)
    b = rng.standard_normal(40)
    res = conjugate_gradient(lambda x: M @ x, b, tol=1e-12)
    assert res.converged
    assert np.allclose(res.x, np.linalg.solve(M, b), atol=1e-10)
    assert res.history[0] == 1.0 and res.history[-1] <= 1e-12


def test_cg_zero_rhs_and_warm_start():
    M = np.diag(np.arange(1.0, 11.0))
    assert conjugate_gradient(lambda x: M @ x, np.zeros(10)).iterations == 0
    b = np.ones(10)
    exact = b / np.arange(1.0, 11.0)
    assert conjugate_gradient(lambda x: M @ x, b, tol=1e-10, x0=exact).iterations == 0


def test_lanczos_bounds_match_dense_eigensolve(small, dense_eigs):
    fb = estimate_bounds(small, tol=1e-6)
    assert fb.A == pytest.approx(dense_eigs[0], rel=1e-3)
    assert fb.B == pytest.approx(dense_eigs[-1], rel=1e-6)
    assert 0 < fb.A <= fb.B


def test_power_method_bounds_match_dense_eigensolve(small, dense_eigs):
    fb = estimate_bounds(small, tol=1e-5, method="power", max_power=2000, max_inverse=200)
    assert fb.A == pytest.approx(dense_eigs[0], rel=2e-2)
    assert fb.B == pytest.approx(dense_eigs[-1], rel=2e-2)


def test_bounds_report_fields(small):
    d = estimate_bounds(small).to_dict()
    assert {"A", "B", "ratio", "tol", "n", "j_max", "c"} <= set(d)
    assert d["n"] == 32 and d["j_max"] == 1 and d["ratio"] == pytest.approx(d["B"] / d["A"])


class _Doubled:
    """Every atom listed twice: the frame operator doubles."""

    def __init__(self, base):
        self.base, self.n, self.mask = base, base.n, None

    def frame_apply_array(self, x):
        return 2.0 * self.base.frame_apply_array(x)

    def params(self):
        return self.base.params()


def test_duplicated_atoms_double_both_bounds(small):
    one = estimate_bounds(small, tol=1e-8)
    two = estimate_bounds(_Doubled(small), tol=1e-8)
    assert two.A == pytest.approx(2 * one.A, rel=1e-6)
    assert two.B == pytest.approx(2 * one.B, rel=1e-6)
    assert two.ratio == pytest.approx(one.ratio, rel=1e-6)


class _Singular:
    n, mask = 16, None

    def frame_apply_array(self, x):
        out = x.copy()
        out[:, 8:] = 0.0
        return out


def test_not_a_frame():
    with pytest.raises(NotAFrame):
        estimate_bounds(_Singular())
    with pytest.raises(NotAFrame):
        estimate_bounds(_Singular(), method="power", max_inverse=5)


def test_bad_arguments(small):
    with pytest.raises(ValueError):
        estimate_bounds(small, trials=0)
    with pytest.raises(ValueError):
        estimate_bounds(small, method="jacobi")


def test_frame_inequality_on_random_functions(small, dense_eigs):
    fb = estimate_bounds(small)
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = rng.standard_normal((32, 32))
        ratio = np.sum(small.analyze_array(f) ** 2) / (np.sum(f * f) / 32**2)
        assert fb.A * 0.95 <= ratio <= fb.B * 1.05


def test_projection_onto_enclosing_domain_is_identity(small):
    proj = project_system(small, square(1e-3, 1 - 1e-3))
    assert np.all(proj.mask == 1.0)
    f = np.random.default_rng(2).standard_normal((32, 32))
    assert np.array_equal(proj.analyze_array(f), small.analyze_array(f))


def test_projection_is_self_adjoint_and_idempotent(medium):
    omega = disk((0.5, 0.5), 0.3)
    proj = project_system(medium, omega)
    assert project_system(proj, omega) is proj
    assert set(np.unique(proj.mask)) == {0.0, 1.0}
    rng = np.random.default_rng(3)
    f = rng.standard_normal((64, 64))
    theta = rng.standard_normal(medium.size)
    lhs = np.dot(proj.analyze_array(f), theta)
    rhs = np.sum(f * proj.synthesize_array(theta)) / 64**2
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
    assert np.array_equal(proj.analyze_array(f), medium.analyze_array(proj.mask * f))


def test_projecting_twice_onto_new_domain_intersects(medium):
    a, b = square(0.1, 0.6), square(0.4, 0.9)
    both = project_system(project_system(medium, a), b)
    assert np.array_equal(both.mask > 0, domain_cells(a, 64) & domain_cells(b, 64))


def test_atoms_outside_domain_are_flagged(medium):
    proj = project_system(medium, square(0.4, 0.6))
    zero = proj.zero_atoms()
    assert zero.any() and not zero.all()
    rng = np.random.default_rng(4)
    for i in rng.choice(np.flatnonzero(zero), 20, replace=False):
        theta = np.zeros(medium.size)
        theta[i] = 1.0
        # exact zeros up to FFT roundoff relative to the atom's peak
        lam = medium.indices[i]
        scale = np.abs(medium.filters[medium.slice_of(lam.cone, lam.j, lam.k).filter_key].values).max()
        assert np.abs(proj.synthesize_array(theta)).max() <= 1e-13 * scale


def test_projection_equivalence_report(medium):
    omega = disk((0.5, 0.5), 0.3)
    proj = project_system(medium, omega)
    fb = estimate_bounds(proj)
    rep = check_projection_equivalence(medium, omega, 20, fb)
    assert rep.ok and rep.max_table_difference == 0.0
    assert np.all(rep.ratios >= fb.A * 0.95) and np.all(rep.ratios <= fb.B * 1.05)


def test_projection_equivalence_rejects_wrong_bounds(medium):
    omega = disk((0.5, 0.5), 0.3)
    fake = FrameBounds(100.0, 200.0, {}, 1e-3)
    with pytest.raises(EquivalenceViolated) as info:
        check_projection_equivalence(medium, omega, 3, fake)
    assert info.value.ratio < 95.0


def test_random_supported_field_respects_mask():
    mask = np.zeros((32, 32))
    mask[8:20, 4:30] = 1.0
    g = random_supported_field(mask, np.random.default_rng(5))
    assert not np.any(g[mask == 0]) and np.all(g[mask == 1] != 0)


def test_dual_reconstruction_matches_least_squares(small, dense):
    theta = np.random.default_rng(6).standard_normal(small.size)
    table = CoefficientTable.from_system(small, theta)
    ours = dual_reconstruct(table, small, tol=1e-13, maxiter=2000).samples
    ref = least_squares_dual(dense, theta, 32)
    assert np.max(np.abs(ours - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_dual_reconstruction_low_band_only(gen):
    s = ShearletSystem(gen, 32, 0)
    T = dense_analysis_matrix(s)
    x = (np.arange(32) + 0.5) / 32
    f = np.exp(-((x[:, None] - 0.5) ** 2 + (x[None, :] - 0.4) ** 2) / 0.05)
    table = CoefficientTable.from_system(s, s.analyze_array(f))
    ours = dual_reconstruct(table, s, tol=1e-13, maxiter=2000).samples
    ref = least_squares_dual(T, table.values, 32)
    assert np.max(np.abs(ours - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_full_table_reconstructs_the_function(medium):
    f = random_supported_field(np.ones((64, 64)), np.random.default_rng(8))
    table = CoefficientTable.from_system(medium, medium.analyze_array(f))
    out = dual_reconstruct(table, medium)
    err = np.linalg.norm(out.samples - f) / np.linalg.norm(f)
    assert err <= 1e-4
    assert out.cg_residual <= 1e-6


def test_empty_table_reconstructs_zero(medium):
    table = CoefficientTable.from_system(medium, np.zeros(medium.size))
    assert not np.any(dual_reconstruct(table, medium).samples)


def test_cg_failure_carries_partial_solution(medium):
    theta = np.random.default_rng(9).standard_normal(medium.size)
    table = CoefficientTable.from_system(medium, theta)
    with pytest.raises(CGNotConverged) as info:
        dual_reconstruct(table, medium, tol=1e-14, maxiter=3)
    assert info.value.residual > 1e-14
    assert info.value.solution.samples.shape == (64, 64)


def test_reconstruction_error_falls_along_magnitude_order(medium):
    from bdshear.approx import n_largest

    x = (np.arange(64) + 0.5) / 64
    f = ((x[:, None] - 0.5) ** 2 + (x[None, :] - 0.5) ** 2 < 0.09).astype(float)
    theta = CoefficientTable.from_system(medium, medium.analyze_array(f))
    errs = []
    for N in (50, 100, 200, 400, 800, 1600):
        out = dual_reconstruct(n_largest(theta, N), medium)
        errs.append(np.sum((out.samples - f) ** 2))
    assert all(b <= a * 1.01 for a, b in zip(errs, errs[1:]))

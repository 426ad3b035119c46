import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdshear.generators import (
    Filter1D,
    GeneratorSet,
    build_generator_set,
    cached_generator_set,
    cascade,
    discrete_moments,
    fourier_transform,
    maximally_flat_lowpass,
    validate_decay,
    wavelet_from,
)

from oracles import dft_magnitude, upper_envelope_slope


@pytest.fixture(scope="module")
def gen():
    return build_generator_set(6, 5, 10)


def test_haar_lowpass():
    f = maximally_flat_lowpass(1)
    assert np.allclose(f.taps, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)


def test_four_tap_filter_matches_closed_form():
    s3 = math.sqrt(3.0)
    expected = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4 * math.sqrt(2))
    assert np.allclose(maximally_flat_lowpass(2).taps, expected, atol=1e-12)


@given(m=st.integers(1, 12))
def test_taps_sum_to_sqrt2_and_are_orthonormal(m):
    h = maximally_flat_lowpass(m).taps
    assert abs(h.sum() - math.sqrt(2)) <= 1e-12
    # orthogonality to even shifts, the defining property of the half-band design
    for shift in range(1, m):
        assert abs(np.dot(h[2 * shift :], h[: len(h) - 2 * shift])) <= 1e-9


@given(m=st.integers(1, 12))
def test_flatness_at_pi(m):
    # |H(omega)|^2 has a zero of order 2m at pi; the response is tiny near pi
    f = maximally_flat_lowpass(m)
    assert abs(f.response(np.array([math.pi]))[0]) <= 1e-10
    assert abs(f.response(np.array([0.0]))[0] - 1.0) <= 1e-12


def test_filter_range():
    with pytest.raises(ValueError):
        maximally_flat_lowpass(13)
    with pytest.raises(ValueError):
        maximally_flat_lowpass(0)


def test_haar_cascade_is_unit_indicator():
    s = cascade(maximally_flat_lowpass(1), 8)
    inside = s.values[s.grid < 1.0]
    assert np.all(inside == 1.0)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_cascade_converges_between_depths():
    f = maximally_flat_lowpass(4)
    a = cascade(f, 10)
    b = cascade(f, 12)
    # every r=10 sample is also an r=12 sample
    assert np.max(np.abs(a.values - b.values[::4])) <= 1e-6
    assert a.norm() == pytest.approx(1.0, abs=1e-4)


def test_two_scale_relation_holds_on_grid():
    f = maximally_flat_lowpass(5)
    s = cascade(f, 10)
    x = s.grid
    rhs = sum(math.sqrt(2) * h * s(2 * x - k) for k, h in enumerate(f.taps))
    assert np.max(np.abs(s.values - rhs)) <= 1e-6


def test_wavelet_has_vanishing_moments():
    psi = wavelet_from(maximally_flat_lowpass(4), 10)
    assert np.max(np.abs(discrete_moments(psi, 4))) <= 1e-8


def test_default_generator_supports(gen):
    assert gen.psi1.support == (0.0, 11.0)
    assert gen.psi2.support == (0.0, 9.0)
    assert gen.h_gen == 2.0**-10
    assert np.max(np.abs(discrete_moments(gen.psi1, gen.m_vm))) <= 1e-8


def test_swapped_generator_is_transpose(gen):
    x = np.linspace(-1, 12, 57)
    a, b = np.meshgrid(x, x, indexing="ij")
    assert np.array_equal(gen.psi_tilde(a, b), gen.psi(a, b).T)


def test_psi_norm_is_product_of_factors(gen):
    direct = math.sqrt(np.sum(gen.psi_grid() ** 2) * gen.h_gen**2)
    assert direct == pytest.approx(gen.psi1.norm() * gen.psi2.norm(), rel=1e-6)
    assert gen.psi_norm == pytest.approx(direct, rel=1e-12)


def test_parseval_between_space_and_dft(gen):
    v = gen.psi1.values
    size = 8 * len(v)
    energy = np.sum(np.abs(np.fft.fft(v, size)) ** 2) / size
    assert energy * gen.h_gen == pytest.approx(gen.psi1.norm() ** 2, rel=1e-8)


def test_quadrature_fourier_matches_dft_oracle(gen):
    xi = np.geomspace(0.1, 40.0, 60)
    ours = np.abs(fourier_transform(gen.psi1, xi))
    ref = dft_magnitude(gen.psi1.values, gen.h_gen, xi)
    assert np.max(np.abs(ours - ref)) <= 1e-3 * np.max(ref)


def test_haar_alpha_fails():
    f1, f2 = maximally_flat_lowpass(1), maximally_flat_lowpass(5)
    haar = GeneratorSet(wavelet_from(f1, 10), cascade(f2, 10), (1, 5), 10, (f1, f2))
    rep = validate_decay(haar, n_freq=64)
    assert rep.alpha == pytest.approx(1.0, abs=0.3)
    assert not rep.alpha_ok


def test_fitted_alpha_tracks_vanishing_moments(gen):
    rep = validate_decay(gen, n_freq=64)
    assert rep.alpha >= gen.m_vm - 0.5
    assert rep.alpha_ok


def test_swapped_report_matches(gen):
    a = validate_decay(gen, n_freq=64)
    b = validate_decay(gen, swapped=True, n_freq=64)
    assert (a.alpha, a.gamma1, a.gamma2) == pytest.approx((b.alpha, b.gamma1, b.gamma2), rel=1e-12)
    assert b.swapped


def test_gamma_flag_against_dft_oracle(gen):
    """The default pair must reach gamma >= 4 in the fit window."""
    rep = validate_decay(gen, n_freq=64)
    xi = np.geomspace(2.0**3, 2.0**6, 400)
    oracle = min(
        upper_envelope_slope(xi, dft_magnitude(gen.psi1.values, gen.h_gen, xi)),
        upper_envelope_slope(xi, dft_magnitude(gen.psi2.values, gen.h_gen, xi)),
    )
    assert rep.gamma == pytest.approx(oracle, abs=0.25)
    assert rep.gamma_ok


def test_generator_cache_round_trip(tmp_path, gen):
    built = cached_generator_set(6, 5, 10, tmp_path)
    assert (tmp_path / "generators.json").exists()
    loaded = cached_generator_set(6, 5, 10, tmp_path)
    assert np.array_equal(loaded.psi1.values, built.psi1.values)
    assert np.array_equal(loaded.psi2.values, gen.psi2.values)
    assert loaded.psi1.support == built.psi1.support


def test_rejects_coarse_generator_grid():
    with pytest.raises(ValueError):
        build_generator_set(6, 5, 7)


def test_filter_highpass_is_quadrature_mirror():
    f = maximally_flat_lowpass(3)
    g = f.highpass()
    assert isinstance(g, Filter1D) and g.role == "highpass"
    assert abs(np.dot(f.taps, g.taps)) <= 1e-12
    assert abs(g.taps.sum()) <= 1e-12

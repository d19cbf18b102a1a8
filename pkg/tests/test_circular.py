import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from circpce.circular import (
    CharacteristicSequence,
    VonMisesParams,
    WrappedNormalParams,
    bessel_ratio,
    bessel_ratios,
    canonicalize,
    circular_mean_std,
    empirical_char,
    fit_wnd_to_char,
    sample_vmd,
    sample_wnd,
    summary_from_phi1,
    vmd_char,
    vmd_pdf,
    wnd_char,
    wnd_pdf,
)
from circpce.errors import DomainError, FitDegenerateError, UndefinedMeanError
from circpce.opuc import circle_quadrature

finite = st.floats(-1e6, 1e6, allow_nan=False)


# --- canonicalize ---


def test_canonicalize_examples():
    assert canonicalize(0.0) == 0.0
    assert canonicalize(3 * math.pi) == pytest.approx(math.pi, abs=1e-15)
    assert canonicalize(-math.pi) == math.pi


def test_canonicalize_rejects_non_finite():
    with pytest.raises(DomainError):
        canonicalize(float("nan"))
    with pytest.raises(DomainError):
        canonicalize(np.array([0.0, np.inf]))


@given(finite)
def test_canonicalize_range_and_idempotent(x):
    c = canonicalize(x)
    assert -math.pi < c <= math.pi
    assert canonicalize(c) == c
    # congruent mod 2 pi
    assert abs(math.remainder(c - x, 2 * math.pi)) < 1e-9


@given(st.floats(-100, 100), st.integers(-50, 50))
def test_canonicalize_periodic(x, k):
    a, b = canonicalize(x), canonicalize(x + 2 * math.pi * k)
    assert abs(math.remainder(a - b, 2 * math.pi)) < 1e-11


# --- circular statistics ---


def test_point_mass_has_zero_spread():
    s = circular_mean_std(np.full(17, 0.5))
    assert s.mean_direction == pytest.approx(0.5, abs=1e-15)
    assert s.circular_std == 0.0


def test_antipodal_pair_has_undefined_mean():
    with pytest.raises(UndefinedMeanError):
        circular_mean_std([math.pi / 2, -math.pi / 2])


def test_empty_samples_rejected():
    with pytest.raises(DomainError):
        circular_mean_std([])
    with pytest.raises(DomainError):
        empirical_char([], 3)


def test_wnd_unit_variance_stats():
    # phi_1 = exp(-1/2) for WND(0, 1), so the circular std is exactly 1
    lam = sample_wnd(np.random.default_rng(1), WrappedNormalParams(0.0, 1.0), 1_000_000)
    s = circular_mean_std(lam)
    assert abs(s.mean_direction) < 0.01
    assert s.circular_std == pytest.approx(1.0, abs=0.01)


@settings(max_examples=40, deadline=None)
@given(st.floats(-math.pi, math.pi), st.integers(0, 2**32 - 1))
def test_rotation_equivariance(delta, seed):
    lam = np.random.default_rng(seed).vonmises(0.3, 4.0, 200)
    a = circular_mean_std(lam)
    b = circular_mean_std(canonicalize(lam + delta))
    assert b.circular_std == pytest.approx(a.circular_std, rel=1e-9, abs=1e-12)
    assert abs(math.remainder(b.mean_direction - a.mean_direction - delta, 2 * math.pi)) < 1e-9


def test_summary_from_phi1_matches_definition():
    s = summary_from_phi1(0.5 * np.exp(0.7j))
    assert s.mean_direction == pytest.approx(0.7)
    assert s.circular_std == pytest.approx(math.sqrt(-2 * math.log(0.5)))


# --- empirical characteristic sequence ---


def test_empirical_char_single_sample():
    phi = empirical_char([0.0], 5)
    assert np.allclose(phi.values(5), 1.0)


def test_empirical_char_roots_of_unity():
    phi = empirical_char([0.0, math.pi / 2, math.pi, -math.pi / 2], 4)
    assert abs(phi(1)) < 1e-15
    assert phi(4) == pytest.approx(1.0, abs=1e-15)
    assert phi(-3) == np.conj(phi(3))


def test_empirical_char_von_mises_matches_bessel_ratio():
    lam = sample_vmd(np.random.default_rng(2), VonMisesParams(0.0, 2.0), 1_000_000)
    target = special.iv(1, 2.0) / special.iv(0, 2.0)
    assert abs(empirical_char(lam, 1)(1) - target) < 0.005


# --- densities and characteristic functions ---


def test_wnd_pdf_concentrated_peak():
    s2 = 1e-4
    assert wnd_pdf(0.2, WrappedNormalParams(0.2, s2)) == pytest.approx((2 * math.pi * s2) ** -0.5, rel=1e-12)


@pytest.mark.parametrize("s2", [0.01, 0.3, 1.0, 5.0, 19.0, 25.0, 60.0])
def test_wnd_pdf_integrates_to_one(s2):
    quad = circle_quadrature(1000)
    total = np.sum(quad.weights * wnd_pdf(quad.nodes, WrappedNormalParams(0.4, s2)))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_wnd_pdf_against_long_wrapping_sum():
    # oracle: the wrapped sum with far more terms than the truncation rule keeps
    params = WrappedNormalParams(-0.8, 2.3)
    theta = 1.1
    dense = sum(
        math.exp(-((theta - params.mu + 2 * math.pi * k) ** 2) / (2 * params.sigma2)) for k in range(-40, 41)
    ) / math.sqrt(2 * math.pi * params.sigma2)
    assert wnd_pdf(theta, params) == pytest.approx(dense, rel=1e-14)


def test_wnd_pdf_branches_agree_near_switch():
    theta = np.linspace(-math.pi, math.pi, 33)
    lo = wnd_pdf(theta, WrappedNormalParams(0.0, 20.0 - 1e-9))
    hi = wnd_pdf(theta, WrappedNormalParams(0.0, 20.0 + 1e-9))
    assert np.allclose(lo, hi, rtol=1e-9, atol=0)


@given(st.floats(-10, 10), st.floats(0.01, 30))
def test_pdfs_are_periodic(theta, s2):
    w = WrappedNormalParams(0.1, s2)
    v = VonMisesParams(0.1, s2)
    assert wnd_pdf(theta, w) == pytest.approx(wnd_pdf(theta + 2 * math.pi, w), rel=1e-12)
    assert vmd_pdf(theta, v) == pytest.approx(vmd_pdf(theta + 2 * math.pi, v), rel=1e-12)


def test_wnd_char_values():
    p = WrappedNormalParams(0.0, 1.0)
    assert wnd_char(0, p) == 1.0
    assert wnd_char(1, p) == pytest.approx(0.6065307, abs=1e-7)
    q = WrappedNormalParams(0.3, 0.5)
    assert wnd_char(-2, q) == pytest.approx(np.conj(wnd_char(2, q)), abs=1e-16)


def test_vmd_uniform_and_peak():
    assert np.allclose(vmd_pdf(np.linspace(-3, 3, 7), VonMisesParams(0.0, 0.0)), 1 / (2 * math.pi))
    k = 3.0
    assert vmd_pdf(0.5, VonMisesParams(0.5, k)) == pytest.approx(math.exp(k) / (2 * math.pi * special.iv(0, k)))


@pytest.mark.parametrize("kappa", [0.5, 10.0, 100.0])
def test_vmd_pdf_integrates_to_one(kappa):
    quad = circle_quadrature(100_000)
    total = np.sum(quad.weights * vmd_pdf(quad.nodes, VonMisesParams(1.0, kappa)))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_vmd_pdf_large_kappa_finite():
    val = vmd_pdf(0.0, VonMisesParams(0.0, 1e4))
    assert np.isfinite(val)
    assert val == pytest.approx(math.sqrt(1e4 / (2 * math.pi)), rel=1e-4)


def test_vmd_char_values():
    assert vmd_char(0, VonMisesParams(0.0, 3.0)) == 1.0
    assert vmd_char(1, VonMisesParams(0.0, 0.0)) == 0.0
    assert vmd_char(1, VonMisesParams(0.0, 2.0)) == pytest.approx(0.697775, abs=1e-6)


def test_bessel_ratio_series_oracle():
    assert bessel_ratio(0, 7.0) == 1.0
    assert bessel_ratio(3, 0.0) == 0.0
    exact = mpmath.besseli(1, 20) / mpmath.besseli(0, 20)
    assert bessel_ratio(1, 20.0) == pytest.approx(float(exact), rel=1e-12)


def test_bessel_ratio_no_overflow_at_large_kappa():
    r = bessel_ratios(30, 1e4)
    assert np.all(np.isfinite(r))
    assert np.all(np.diff(r) <= 0)
    exact = mpmath.besseli(5, 1e4) / mpmath.besseli(0, 1e4)
    assert r[5] == pytest.approx(float(exact), rel=1e-12)


@given(st.floats(0.0, 500.0))
def test_bessel_ratios_bounded_and_monotone(kappa):
    r = bessel_ratios(25, kappa)
    assert r[0] == 1.0
    assert np.all((r >= 0) & (r <= 1))
    assert np.all(np.diff(r) <= 1e-15)


@pytest.mark.parametrize(
    "density", [WrappedNormalParams(0.7, 0.01), WrappedNormalParams(-2.0, 3.0), VonMisesParams(0.3, 1.0),
                VonMisesParams(-1.0, 50.0)]
)
def test_quadrature_of_pdf_matches_characteristic_sequence(density):
    quad = circle_quadrature(100_000)
    rho = density.pdf(quad.nodes) * quad.weights
    n = np.arange(-20, 21)
    numeric = np.exp(1j * np.outer(n, quad.nodes)) @ rho
    assert np.max(np.abs(numeric - density.char(n))) < 1e-10


def test_characteristic_sequence_invariants():
    phi = CharacteristicSequence.von_mises(VonMisesParams(0.4, 6.0))
    n = np.arange(-15, 16)
    v = phi(n)
    assert v[15] == 1.0
    assert np.allclose(v[:15][::-1], np.conj(v[16:]))
    assert np.all(np.abs(v) <= 1.0)
    with pytest.raises(DomainError):
        phi(0.5)


# --- sampling ---


def test_sample_wnd_degenerate_and_deterministic():
    p = WrappedNormalParams(1.2, 1e-300)
    assert np.allclose(sample_wnd(np.random.default_rng(0), p, 10), 1.2)
    q = WrappedNormalParams(1.0, 0.25)
    a = sample_wnd(np.random.default_rng(5), q, 100)
    b = sample_wnd(np.random.default_rng(5), q, 100)
    assert np.array_equal(a, b)
    assert sample_wnd(np.random.default_rng(5), q, 0).size == 0


def test_sample_wnd_first_moment():
    lam = sample_wnd(np.random.default_rng(9), WrappedNormalParams(1.0, 0.25), 1_000_000)
    phi1 = empirical_char(lam, 1)(1)
    exact = np.exp(1j) * math.exp(-0.125)
    assert abs(abs(phi1) - abs(exact)) < 0.005
    assert abs(np.angle(phi1) - 1.0) < 0.005


def test_sample_vmd_uniform_limit():
    lam = sample_vmd(np.random.default_rng(3), VonMisesParams(0.0, 0.0), 1_000_000)
    assert abs(empirical_char(lam, 1)(1)) < 0.01


def test_sample_vmd_concentrated():
    lam = sample_vmd(np.random.default_rng(4), VonMisesParams(0.0, 30.0), 1_000_000)
    assert abs(empirical_char(lam, 1)(1) - bessel_ratio(1, 30.0)) < 0.005
    again = sample_vmd(np.random.default_rng(4), VonMisesParams(0.0, 30.0), 1_000_000)
    assert np.array_equal(lam, again)


@pytest.mark.parametrize("density", [WrappedNormalParams(-2.5, 0.8), VonMisesParams(2.9, 4.0)])
def test_sampler_low_orders_converge(density):
    rng = np.random.default_rng(11)
    lam = density.sample(rng, 1_000_000)
    emp = empirical_char(lam, 3).values(3)
    assert np.max(np.abs(emp - density.char(np.arange(4)))) < 5e-3


def test_sample_vmd_distribution_matches_cdf():
    from scipy import stats

    lam = sample_vmd(np.random.default_rng(6), VonMisesParams(0.5, 3.0), 20_000)
    assert stats.kstest(lam, stats.vonmises(3.0, loc=0.5).cdf).pvalue > 1e-3


# --- wrapped normal fit ---


def test_fit_recovers_wnd():
    fit = fit_wnd_to_char(CharacteristicSequence.wrapped_normal(WrappedNormalParams(0.3, 0.7)))
    assert fit.sigma2 == pytest.approx(0.7, abs=1e-8)
    assert fit.mu == pytest.approx(0.3, abs=1e-12)


def test_fit_to_von_mises_near_single_moment_match():
    fit = fit_wnd_to_char(CharacteristicSequence.von_mises(VonMisesParams(0.0, 20.0)))
    seed = 2 * math.log(special.iv(0, 20) / special.iv(1, 20))
    assert fit.sigma2 == pytest.approx(seed, rel=0.1)


def test_fit_rejects_degenerate_targets():
    uniform = CharacteristicSequence.from_values(np.r_[1.0, np.zeros(25)])
    with pytest.raises(FitDegenerateError):
        fit_wnd_to_char(uniform)
    point = CharacteristicSequence.from_values(np.ones(25))
    with pytest.raises(FitDegenerateError):
        fit_wnd_to_char(point)


def test_fit_minimizes_least_squares_objective():
    target = CharacteristicSequence.von_mises(VonMisesParams(0.0, 30.0))
    fit = fit_wnd_to_char(target)
    n = np.arange(1, 21)

    def cost(s2):
        return float(np.sum(np.abs(target(n) - np.exp(-n**2 * s2 / 2)) ** 2))

    grid = np.linspace(fit.sigma2 * 0.98, fit.sigma2 * 1.02, 201)
    assert cost(fit.sigma2) <= min(cost(g) for g in grid) + 1e-15

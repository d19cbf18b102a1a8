import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circpce.circular import VonMisesParams, WrappedNormalParams
from circpce.errors import DomainError, UnderdeterminedError
from circpce.expansion import fit_pce, total_degree_set, trig_moments_pce
from circpce.opuc import NormalizedHermite, NumericOpuc, RogersSzego
from circpce.sr import SrOptions, SrSurrogate, circular_stats_sr, evaluate_sr, fit_sr, sr_from_pce, trig_moments_sr


def _bases(p):
    return (RogersSzego.from_density(WrappedNormalParams(0.4, 0.5), p), NormalizedHermite(1.0, 0.3, p))


def _inputs(rng, bases, m):
    return np.column_stack([bases[0].density.sample(rng, m), bases[1].loc + bases[1].scale * rng.standard_normal(m)])


def test_rank_one_separable_function_is_recovered():
    rng = np.random.default_rng(0)
    bases = _bases(4)
    xi = _inputs(rng, bases, 200)
    u = np.exp(1j * xi[:, 0]) * (xi[:, 1] - 1.0) ** 2
    fit = fit_sr(xi, u, bases, r=1, p=4, opts=SrOptions(seed=1))
    fresh = _inputs(rng, bases, 100)
    truth = np.exp(1j * fresh[:, 0]) * (fresh[:, 1] - 1.0) ** 2
    # the 1e-10 Tikhonov shift leaves a bias of that order
    assert np.max(np.abs(fit(fresh) - truth)) < 1e-8
    assert fit.residual_history[-1] < 1e-9


def test_residual_history_is_monotone():
    rng = np.random.default_rng(1)
    bases = _bases(5)
    xi = _inputs(rng, bases, 300)
    u = np.exp(1j * xi[:, 0] * xi[:, 1])
    fit = fit_sr(xi, u, bases, r=3, p=5, opts=SrOptions(seed=2, max_sweeps=60))
    h = np.array(fit.residual_history)
    assert np.all(np.diff(h) <= 1e-10)
    assert h[-1] < h[0]
    assert fit.sweeps <= 60


def test_deterministic_under_seed():
    rng = np.random.default_rng(2)
    bases = _bases(3)
    xi = _inputs(rng, bases, 100)
    u = np.cos(xi[:, 0]) + xi[:, 1]
    a = fit_sr(xi, u, bases, 2, 3, SrOptions(seed=7))
    b = fit_sr(xi, u, bases, 2, 3, SrOptions(seed=7))
    assert np.array_equal(a.factors, b.factors)
    assert np.array_equal(a.weights, b.weights)


def test_factors_unit_norm_and_weights_positive():
    rng = np.random.default_rng(3)
    bases = _bases(3)
    xi = _inputs(rng, bases, 100)
    fit = fit_sr(xi, np.sin(xi[:, 0]) * xi[:, 1], bases, 2, 3, SrOptions(seed=0, max_sweeps=20))
    assert np.allclose(np.linalg.norm(fit.factors, axis=2), 1.0)
    assert np.all(fit.weights > 0)
    assert (fit.rank, fit.d, fit.p) == (2, 2, 3)


def test_underdetermined_and_argument_checks():
    bases = _bases(4)
    xi = _inputs(np.random.default_rng(4), bases, 9)
    with pytest.raises(UnderdeterminedError):
        fit_sr(xi, np.zeros(9), bases, r=2, p=4)
    with pytest.raises(DomainError):
        fit_sr(xi, np.zeros(9), bases, r=0, p=1)
    with pytest.raises(DomainError):
        fit_sr(xi, np.zeros(8), bases, r=1, p=1)
    with pytest.raises(DomainError):
        SrSurrogate(np.ones(2), np.zeros((1, 2, 3)), bases)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_rewrite_of_pce_is_exact(seed):
    rng = np.random.default_rng(seed)
    bases = _bases(3)
    s = total_degree_set(3, 2)
    xi = _inputs(rng, bases, 60)
    u = np.exp(1j * xi[:, 0]) * xi[:, 1] + xi[:, 1] ** 3
    pce = fit_pce(xi, u, bases, s)
    sr = sr_from_pce(pce)
    fresh = _inputs(rng, bases, 20)
    assert np.allclose(sr(fresh), pce(fresh)[:, 0], atol=1e-12)
    assert np.allclose(trig_moments_sr(sr), trig_moments_pce(pce), atol=1e-12)


@pytest.mark.parametrize("density", [WrappedNormalParams(-1.0, 0.2), VonMisesParams(2.5, 4.0)])
def test_identity_qoi_moments(density):
    p = 4
    basis = (RogersSzego.from_density(density, p) if isinstance(density, WrappedNormalParams)
             else NumericOpuc.from_density(density, p))
    xi = density.sample(np.random.default_rng(5), 40)[:, None]
    fit = fit_sr(xi, np.exp(1j * xi[:, 0]), (basis,), r=1, p=p, opts=SrOptions(seed=3))
    phi1, phi2 = trig_moments_sr(fit)
    assert abs(phi1 - density.char(1)) < 1e-8
    assert abs(phi2 - density.char(2)) < 1e-8
    summary = circular_stats_sr(fit)
    assert summary.phi1 == pytest.approx(phi1)
    with pytest.raises(DomainError):
        trig_moments_sr(fit, method="other")


def test_single_point_evaluation():
    bases = _bases(2)
    xi = _inputs(np.random.default_rng(6), bases, 40)
    fit = fit_sr(xi, xi[:, 1] + 0j, bases, 1, 2, SrOptions(seed=0))
    assert isinstance(evaluate_sr(fit, xi[0]), complex)
    assert evaluate_sr(fit, xi[0]) == pytest.approx(xi[0, 1], abs=1e-10)

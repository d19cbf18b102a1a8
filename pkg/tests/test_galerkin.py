import math

import numpy as np
import pytest
from scipy import integrate

from circpce.circular import CharacteristicSequence, VonMisesParams, WrappedNormalParams, fit_wnd_to_char
from circpce.errors import DomainError
from circpce.expansion import fit_pce, real_stats_pce, total_degree_set
from circpce.galerkin import (
    DecayProblem,
    convergence_experiment,
    decay_initial_coeffs,
    galerkin_operator,
    moments_from_coeffs,
    propagate_galerkin,
    reference_moments,
    relative_error,
    rk4_linear,
    write_convergence_csv,
)
from circpce.opuc import RogersSzego, TripleProducts, basis_for_density, circle_quadrature


def test_problem_validation():
    with pytest.raises(DomainError):
        DecayProblem(VonMisesParams(0, 1), step=0.0)


def test_initial_coefficients_reproduce_exp_i_xi():
    dens = VonMisesParams(0.7, 4.0)
    basis = basis_for_density(dens, 3)
    c_u, c_k = decay_initial_coeffs(basis, 3)
    x = np.linspace(-3, 3, 11)
    assert np.allclose(basis.evaluate(x) @ c_k, np.exp(1j * x), atol=1e-13)
    assert np.array_equal(c_u, [1, 0, 0, 0])


def test_rk4_matches_matrix_exponential():
    from scipy.linalg import expm

    op = np.array([[-1.0, 0.3j], [0.2, -0.5 + 1j]])
    c0 = np.array([1.0, 0.5j])
    assert np.allclose(rk4_linear(op, c0, 1.0, 1e-3), expm(op) @ c0, atol=1e-12)
    final, traj = rk4_linear(op, c0, 0.5, 0.1, dense=True)
    assert traj.shape == (6, 2) and np.array_equal(traj[-1], final)


def test_point_mass_limit_at_degree_zero():
    prob = DecayProblem(WrappedNormalParams(0.0, 1e-14))
    c = propagate_galerkin(prob, RogersSzego.from_density(prob.density, 1), 0)
    assert c[0] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_reference_moments_against_adaptive_quadrature():
    dens = VonMisesParams(0.0, 20.0)
    prob = DecayProblem(dens)
    mean, var = reference_moments(prob, 1000)

    def integrand(t, part):
        val = dens.pdf(t) * np.exp(-np.exp(1j * t))
        return val.real if part == 0 else val.imag

    re = integrate.quad(integrand, -math.pi, math.pi, args=(0,), epsabs=1e-14, limit=200)[0]
    im = integrate.quad(integrand, -math.pi, math.pi, args=(1,), epsabs=1e-14, limit=200)[0]
    m2 = integrate.quad(lambda t: dens.pdf(t) * abs(np.exp(-np.exp(1j * t))) ** 2, -math.pi, math.pi,
                        epsabs=1e-14, limit=200)[0]
    assert mean == pytest.approx(re + 1j * im, abs=1e-13)
    assert var == pytest.approx(m2 - abs(re + 1j * im) ** 2, abs=1e-13)


def test_concentrated_von_mises_reference_row():
    mean, var = reference_moments(DecayProblem(VonMisesParams(0.0, 20.0)), 1000)
    assert relative_error(mean, 0.36801304) < 5e-6
    assert relative_error(var, 7.3271366e-3) < 5e-6


@pytest.mark.parametrize(
    "density",
    [VonMisesParams(0.0, 20.0), VonMisesParams(0.0, 1.0),
     fit_wnd_to_char(CharacteristicSequence.von_mises(VonMisesParams(0.0, 20.0))),
     fit_wnd_to_char(CharacteristicSequence.von_mises(VonMisesParams(0.0, 1.0)))],
    ids=["vm-concentrated", "vm-diffuse", "wn-concentrated", "wn-diffuse"],
)
def test_convergence_by_degree_eight(density):
    rows = convergence_experiment(DecayProblem(density), p_range=range(1, 9), n_triple_nodes=20_000)
    by_p = {r[0]: r for r in rows}
    assert by_p[8][1] < 1e-6 and by_p[8][2] < 1e-6
    assert by_p[8][1] < by_p[2][1] / 10 and by_p[8][2] < by_p[2][2] / 10


def test_galerkin_agrees_with_regression_at_degree_eight():
    dens = VonMisesParams(0.5, 1.0)
    basis = basis_for_density(dens, 8)
    prob = DecayProblem(dens)
    c_gal = propagate_galerkin(prob, basis, 8)
    xi = dens.sample(np.random.default_rng(0), 400)[:, None]
    fit = fit_pce(xi, prob.solution(xi[:, 0]), (basis,), total_degree_set(8, 1))
    assert np.max(np.abs(fit.coeffs[:, 0] - c_gal)) < 1e-6
    m_gal, v_gal = moments_from_coeffs(c_gal)
    m_fit, v_fit = real_stats_pce(fit)
    assert abs(m_gal - m_fit) < 1e-6 and abs(v_gal - v_fit) < 1e-6


def test_operator_slices_shared_triple_tensor():
    dens = WrappedNormalParams(0.0, 0.4)
    basis = RogersSzego.from_density(dens, 6)
    triple = TripleProducts(basis, 6, quad=circle_quadrature(20_000)).tensor()
    prob = DecayProblem(dens)
    a = propagate_galerkin(prob, basis, 4, triple)
    b = propagate_galerkin(prob, basis, 4, triple[:5, :5, :5])
    assert np.array_equal(a, b)
    _, c_k = decay_initial_coeffs(basis, 4)
    assert galerkin_operator(triple[:5, :5, :5], c_k).shape == (5, 5)


def test_convergence_csv(tmp_path):
    path = tmp_path / "conv.csv"
    write_convergence_csv([(1, 0.1, 0.2, "x"), (2, 1e-3, 2e-3, "x")], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p,eps_mean,eps_var,density_case"
    assert lines[2] == "2,0.001,0.002,x"

"""Intrusive (Galerkin) propagation of du/dt = -k(xi) u with k = exp(i xi)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circular import VonMisesParams, WrappedNormalParams
from .errors import DomainError
from .opuc import CircleBasis, TripleProducts, basis_for_density, circle_quadrature, density_weights


@dataclass(frozen=True)
class DecayProblem:
    density: WrappedNormalParams | VonMisesParams
    u0: complex = 1.0
    t_final: float = 1.0
    step: float = 1e-3

    def __post_init__(self):
        if not self.step > 0 or not self.t_final >= 0:
            raise DomainError("need step > 0 and t_final >= 0")

    def solution(self, xi):
        return self.u0 * np.exp(-np.exp(1j * np.asarray(xi)) * self.t_final)


def decay_initial_coeffs(basis: CircleBasis, p: int):
    """Coefficients of u(0) = 1 and k = exp(i xi) in the basis.

    With z = exp(i(xi - mu)), psi_1 = (z - conj(eta_0)) / sqrt(1 - |eta_0|^2),
    so exp(i xi) = exp(i mu) (conj(eta_0) psi_0 + sqrt(1 - |eta_0|^2) psi_1).
    """
    c_u = np.zeros(p + 1, dtype=complex)
    c_u[0] = 1.0
    c_k = np.zeros(p + 1, dtype=complex)
    eta0 = complex(basis.verblunsky()[0]) if basis.max_degree > 0 else 0j
    rot = complex(math.cos(basis.mu), math.sin(basis.mu))
    c_k[0] = rot * eta0.conjugate()
    if p >= 1:
        c_k[1] = rot * math.sqrt(1.0 - abs(eta0) ** 2)
    return c_u, c_k


def galerkin_operator(triple: np.ndarray, c_k) -> np.ndarray:
    """L with dc_u/dt = L c_u, L[g, b] = -sum_a e[b, a, g] c_k[a]."""
    return -np.einsum("bag,a->gb", triple, np.asarray(c_k))


def rk4_linear(op: np.ndarray, c0, t_final: float, step: float, dense: bool = False):
    n_steps = max(0, int(round(t_final / step)))
    h = t_final / n_steps if n_steps else 0.0
    c = np.array(c0, dtype=complex)
    traj = [c.copy()] if dense else None
    for _ in range(n_steps):
        k1 = op @ c
        k2 = op @ (c + 0.5 * h * k1)
        k3 = op @ (c + 0.5 * h * k2)
        k4 = op @ (c + h * k3)
        c = c + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if dense:
            traj.append(c.copy())
    if dense:
        return c, np.array(traj)
    return c


def propagate_galerkin(problem: DecayProblem, basis: CircleBasis, p: int, triple=None, c_k=None, dense: bool = False):
    """Final coefficients of u after RK4 integration of the Galerkin system."""
    if triple is None:
        # e_000 = 1 for any normalized density, so p = 0 needs no quadrature
        triple = np.ones((1, 1, 1), dtype=complex) if p == 0 else TripleProducts(basis, p).tensor()
    triple = np.asarray(triple)[: p + 1, : p + 1, : p + 1]
    c_u, default_k = decay_initial_coeffs(basis, p)
    c_u *= problem.u0
    c_k = default_k if c_k is None else np.asarray(c_k, dtype=complex)
    return rk4_linear(galerkin_operator(triple, c_k), c_u, problem.t_final, problem.step, dense)


def moments_from_coeffs(c_u):
    """Mean c_0 and variance sum_{n >= 1} |c_n|^2."""
    c_u = np.asarray(c_u)
    return complex(c_u[0]), float(np.sum(np.abs(c_u[1:]) ** 2))


def reference_moments(problem: DecayProblem, n_nodes: int = 1000):
    """Mean and variance of u(t_final) by the uniform circle rule."""
    quad = circle_quadrature(n_nodes)
    w = density_weights(problem.density, quad)
    u = problem.solution(quad.nodes)
    mean = complex(np.sum(w * u))
    var = float(np.sum(w * np.abs(u - mean) ** 2))
    return mean, var


def relative_error(x, ref) -> float:
    return abs((x - ref) / ref)


def convergence_experiment(problem: DecayProblem, basis: CircleBasis | None = None, p_range=range(1, 11),
                           n_ref_nodes: int = 1000, n_triple_nodes: int = 100_000, case: str = ""):
    """Rows (p, eps_mean, eps_var, case) for each degree in ``p_range``."""
    p_range = list(p_range)
    p_max = max(p_range)
    if basis is None:
        basis = basis_for_density(problem.density, p_max)
    triple = TripleProducts(basis, p_max, problem.density, circle_quadrature(n_triple_nodes)).tensor()
    ref_mean, ref_var = reference_moments(problem, n_ref_nodes)
    rows = []
    for p in p_range:
        mean, var = moments_from_coeffs(propagate_galerkin(problem, basis, p, triple))
        eps_var = relative_error(var, ref_var) if ref_var != 0 else abs(var)
        rows.append((p, relative_error(mean, ref_mean), eps_var, case))
    return rows


def write_convergence_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "eps_mean", "eps_var", "density_case"])
        for p, em, ev, case in rows:
            writer.writerow([p, repr(float(em)), repr(float(ev)), case])

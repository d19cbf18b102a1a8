"""Separated representations fit by alternating least squares.

u(xi) ~ sum_l s_l prod_j f_j^l(xi_j), with f_j^l = sum_n c[l, j, n] psi_n(xi_j)
and each coefficient vector c[l, j] of unit 2-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .circular import CircularSummary, summary_from_phi1
from .errors import DomainError, UnderdeterminedError
from .expansion import PceSurrogate, _as_inputs


@dataclass
class SrOptions:
    tol: float = 1e-8
    max_sweeps: int = 200
    regularization: float = 1e-10
    seed: int = 0


@dataclass(eq=False)
class SrSurrogate:
    weights: np.ndarray  # (r,)
    factors: np.ndarray  # (r, d, p + 1) complex
    bases: tuple
    converged: bool = True
    sweeps: int = 0
    residual_history: list = field(default_factory=list)
    regularized: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.factors = np.asarray(self.factors, dtype=complex)
        self.bases = tuple(self.bases)
        if self.factors.ndim != 3 or self.factors.shape[0] != self.weights.shape[0]:
            raise DomainError("factors must have shape (r, d, p+1)")
        if self.factors.shape[1] != len(self.bases):
            raise DomainError("one basis per input dimension required")

    @property
    def rank(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.factors.shape[1]

    @property
    def p(self) -> int:
        return self.factors.shape[2] - 1

    def __call__(self, xi):
        return evaluate_sr(self, xi)


def _tables(xi: np.ndarray, bases, p: int) -> list[np.ndarray]:
    return [b.evaluate(xi[:, j], p) for j, b in enumerate(bases)]


def _factor_values(tables, factors) -> np.ndarray:
    """F[l, j, m] = f_j^l(xi_{j,m})."""
    return np.stack([tables[j] @ factors[:, j, :].T for j in range(len(tables))], axis=1).transpose(2, 1, 0)


def evaluate_sr(surrogate: SrSurrogate, xi) -> np.ndarray | complex:
    arr = _as_inputs(xi, surrogate.d)
    fv = _factor_values(_tables(arr, surrogate.bases, surrogate.p), surrogate.factors)
    out = surrogate.weights @ np.prod(fv, axis=1)
    single = np.ndim(xi) == 1 and np.size(xi) == surrogate.d
    return complex(out[0]) if single else out


def fit_sr(samples, values, bases: Sequence, r: int, p: int, opts: SrOptions | None = None) -> SrSurrogate:
    """Rank-r fit of a scalar QOI by alternating directional least squares.

    Each directional solve treats b_l = s_l c[l, k] as the unknown, solves
    the Tikhonov-regularized normal equations, then splits b_l back into a
    weight and a unit-norm factor.
    """
    opts = opts or SrOptions()
    if r < 1 or p < 0:
        raise DomainError("need r >= 1 and p >= 0")
    xi = _as_inputs(samples, len(bases))
    u = np.asarray(values, dtype=complex).reshape(-1)
    m, d = xi.shape
    n = p + 1
    if u.shape[0] != m:
        raise DomainError("values and samples disagree in length")
    if m < r * n:
        raise UnderdeterminedError(f"need M >= r(p+1) = {r * n}, got {m}")

    rng = np.random.default_rng(opts.seed)
    factors = rng.standard_normal((r, d, n)) + 1j * rng.standard_normal((r, d, n))
    factors /= np.linalg.norm(factors, axis=2, keepdims=True)
    rms = math.sqrt(float(np.mean(np.abs(u) ** 2)))
    weights = np.full(r, rms / r if rms > 0 else 1.0)

    tables = _tables(xi, bases, p)
    fv = _factor_values(tables, factors)
    unorm = float(np.linalg.norm(u)) or 1.0
    history = [float(np.linalg.norm(weights @ np.prod(fv, axis=1) - u)) / unorm]
    converged = False
    regularized = False
    sweep = 0
    for sweep in range(1, opts.max_sweeps + 1):
        start = history[-1]
        for k in range(d):
            others = np.prod(np.delete(fv, k, axis=1), axis=1)  # (r, M)
            a = (others.T[:, :, None] * tables[k][:, None, :]).reshape(m, r * n)
            gram = a.conj().T @ a
            rhs = a.conj().T @ u
            tik = opts.regularization * float(np.real(np.trace(gram))) / gram.shape[0]
            gram[np.diag_indices_from(gram)] += tik
            try:
                b = linalg.solve(gram, rhs, assume_a="her")
            except linalg.LinAlgError:
                regularized = True
                b = linalg.lstsq(gram, rhs)[0]
            b = b.reshape(r, n)
            norms = np.linalg.norm(b, axis=1)
            dead = norms == 0
            if np.any(dead):
                regularized = True
                b[dead] = 0
                b[dead, 0] = 1.0
                norms[dead] = 0.0
            weights = norms
            factors[:, k, :] = b / np.where(dead, 1.0, norms)[:, None]
            fv[:, k, :] = factors[:, k, :] @ tables[k].T
            history.append(float(np.linalg.norm(weights @ np.prod(fv, axis=1) - u)) / unorm)
        end = history[-1]
        if end < 1e-14 or abs(start - end) < opts.tol * max(start, 1e-300):
            converged = True
            break
    # zero weights are not allowed in the final representation
    weights = np.where(weights > 0, weights, np.finfo(float).tiny)
    return SrSurrogate(weights, factors, tuple(bases), converged, sweep, history, regularized)


def trig_moments_sr(surrogate: SrSurrogate, method: str = "pairing"):
    """phi1 = sum_l s_l prod_j c[l,j,0] and phi2 = E[u^2] from coefficients.

    ``"pairing"`` contracts each factor pair with E[psi_n psi_n'] so it is
    exact for complex circle bases; ``"plain"`` uses sum_n c c' directly.
    """
    s, c = surrogate.weights, surrogate.factors
    phi1 = complex(np.sum(s * np.prod(c[:, :, 0], axis=1)))
    cross = np.ones((surrogate.rank, surrogate.rank), dtype=complex)
    for j, basis in enumerate(surrogate.bases):
        cj = c[:, j, :]
        if method == "plain":
            cross *= cj @ cj.T
        elif method == "pairing":
            cross *= cj @ basis.pairing_matrix(surrogate.p) @ cj.T
        else:
            raise DomainError(f"unknown method {method!r}")
    phi2 = complex(s @ cross @ s)
    return phi1, phi2


def circular_stats_sr(surrogate: SrSurrogate) -> CircularSummary:
    phi1, _ = trig_moments_sr(surrogate)
    return summary_from_phi1(phi1)


def sr_from_pce(pce: PceSurrogate, qoi_index: int = 0) -> SrSurrogate:
    """Exact rank-P rewrite of a dense PCE: one rank-1 term per nonzero coefficient."""
    idx = pce.index_set.indices
    c = pce.coeffs[:, qoi_index]
    keep = np.flatnonzero(c != 0)
    if keep.size == 0:
        keep = np.array([0])
    p = int(idx.max())
    factors = np.zeros((keep.size, idx.shape[1], p + 1), dtype=complex)
    weights = np.abs(c[keep])
    for l, k in enumerate(keep):
        factors[l, np.arange(idx.shape[1]), idx[k]] = 1.0
        if weights[l] > 0:
            factors[l, 0] *= c[k] / weights[l]
    weights = np.where(weights > 0, weights, np.finfo(float).tiny)
    return SrSurrogate(weights, factors, pce.bases)

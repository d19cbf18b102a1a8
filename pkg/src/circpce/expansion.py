"""Non-intrusive polynomial chaos with mixed circle / real-line inputs.

Training inputs are an ``(M, d)`` real array: angles in radians for circle
dimensions, physical values for Hermite dimensions. Each basis carries its
own input transform (``mu`` for circle bases, ``loc``/``scale`` for Hermite).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np
from scipy import linalg

from .circular import CircularSummary, angle_difference, summary_from_phi1
from .errors import DomainError, RankDeficientError, UnderdeterminedError
from .opuc import Basis

RAD2DEG = 180.0 / math.pi


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    p: int
    d: int
    indices: np.ndarray

    def __len__(self):
        return self.indices.shape[0]

    def __iter__(self):
        return (tuple(int(a) for a in row) for row in self.indices)

    def position(self, alpha) -> int:
        hit = np.flatnonzero(np.all(self.indices == np.asarray(alpha), axis=1))
        if hit.size == 0:
            raise KeyError(alpha)
        return int(hit[0])


def _compositions(total: int, d: int):
    """All d-tuples summing to ``total``, lexicographically descending."""
    out = []
    for bars in combinations_with_replacement(range(d), total):
        alpha = [0] * d
        for j in bars:
            alpha[j] += 1
        out.append(tuple(alpha))
    return sorted(set(out), reverse=True)


def total_degree_set(p: int, d: int) -> MultiIndexSet:
    """Multi-indices with |alpha|_1 <= p in graded lexicographic order."""
    if p < 0 or d < 1:
        raise DomainError("need p >= 0 and d >= 1")
    rows = []
    for k in range(p + 1):
        rows.extend(_compositions(k, d))
    return MultiIndexSet(p, d, np.array(rows, dtype=int).reshape(-1, d))


def cardinality(p: int, d: int) -> int:
    return math.comb(p + d, d)


def _as_inputs(xi, d: int) -> np.ndarray:
    arr = np.asarray(xi)
    if arr.ndim == 1 and d == 1 and arr.size != 1:
        arr = arr[:, None]
    arr = np.atleast_2d(arr)
    if arr.shape[1] != d:
        raise DomainError(f"expected {d} input columns, got {arr.shape[1]}")
    return arr


def eval_multivariate(bases: Sequence[Basis], alpha, xi) -> np.ndarray | complex:
    """prod_j psi_{alpha_j}(xi_j) for one or many input vectors."""
    alpha = tuple(int(a) for a in alpha)
    xi_arr = _as_inputs(xi, len(bases))
    out = np.ones(xi_arr.shape[0], dtype=complex)
    for j, (basis, a) in enumerate(zip(bases, alpha)):
        out = out * basis.evaluate(xi_arr[:, j], a)[:, a]
    if np.ndim(xi) == 1 and len(bases) == np.size(xi):
        return complex(out[0])
    return out


def univariate_tables(samples, bases: Sequence[Basis], index_set: MultiIndexSet) -> list[np.ndarray]:
    xi = _as_inputs(samples, len(bases))
    degrees = index_set.indices.max(axis=0)
    return [b.evaluate(xi[:, j], int(degrees[j])) for j, b in enumerate(bases)]


def design_matrix(samples, bases: Sequence[Basis], index_set: MultiIndexSet) -> np.ndarray:
    """Psi[m, k] = psi_{alpha_k}(xi_m)."""
    if len(bases) != index_set.d:
        raise DomainError("one basis per input dimension required")
    tables = univariate_tables(samples, bases, index_set)
    out = np.ones((tables[0].shape[0], len(index_set)), dtype=complex)
    for j, table in enumerate(tables):
        out *= table[:, index_set.indices[:, j]]
    return out


@dataclass(eq=False)
class PceSurrogate:
    coeffs: np.ndarray
    bases: tuple
    index_set: MultiIndexSet
    residual_rms: np.ndarray | None = None
    qoi_names: list[str] | None = field(default=None)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim == 1:
            self.coeffs = self.coeffs[:, None]
        self.bases = tuple(self.bases)
        if self.coeffs.shape[0] != len(self.index_set):
            raise DomainError("coefficient rows must match the multi-index set")
        if len(self.bases) != self.index_set.d:
            raise DomainError("one basis per input dimension required")

    @property
    def n_qoi(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, xi):
        return evaluate(self, xi)


def fit_pce(samples, values, bases: Sequence[Basis], index_set: MultiIndexSet, solver: str = "qr") -> PceSurrogate:
    """Least-squares coefficients from M > P training samples.

    ``solver="qr"`` factors Psi directly; ``"normal"`` solves
    (Psi^H Psi) C = Psi^H U for comparison.
    """
    psi = design_matrix(samples, bases, index_set)
    u = np.asarray(values, dtype=complex)
    if u.ndim == 1:
        u = u[:, None]
    m, p = psi.shape
    if u.shape[0] != m:
        raise DomainError("values and samples disagree in length")
    if m <= p:
        raise UnderdeterminedError(f"need M > P, got M={m}, P={p}")
    if solver == "qr":
        q, r = np.linalg.qr(psi)
        diag = np.abs(np.diag(r))
        if diag.min() <= 1e-12 * diag.max():
            raise RankDeficientError(int(np.linalg.matrix_rank(psi)), p)
        coeffs = linalg.solve_triangular(r, q.conj().T @ u)
    elif solver == "normal":
        gram = psi.conj().T @ psi
        coeffs = linalg.solve(gram, psi.conj().T @ u, assume_a="her")
    else:
        raise DomainError(f"unknown solver {solver!r}")
    resid = psi @ coeffs - u
    rms = np.sqrt(np.mean(np.abs(resid) ** 2, axis=0))
    return PceSurrogate(coeffs, tuple(bases), index_set, rms)


def evaluate(surrogate: PceSurrogate, xi, chunk: int = 100_000) -> np.ndarray:
    """sum_alpha c_alpha psi_alpha(xi); shape (M, Q), or (Q,) for one input."""
    arr = _as_inputs(xi, surrogate.index_set.d)
    out = np.empty((arr.shape[0], surrogate.n_qoi), dtype=complex)
    for start in range(0, arr.shape[0], chunk):
        block = arr[start : start + chunk]
        out[start : start + chunk] = design_matrix(block, surrogate.bases, surrogate.index_set) @ surrogate.coeffs
    single = np.ndim(xi) == 1 and np.size(xi) == surrogate.index_set.d
    return out[0] if single else out


def pairing_gram(surrogate: PceSurrogate) -> np.ndarray:
    """E[psi_alpha psi_alpha'] over the index set, no conjugation."""
    idx = surrogate.index_set.indices
    out = np.ones((idx.shape[0], idx.shape[0]), dtype=complex)
    for j, basis in enumerate(surrogate.bases):
        g = basis.pairing_matrix(int(idx[:, j].max()))
        out *= g[idx[:, j][:, None], idx[:, j][None, :]]
    return out


def trig_moments_pce(surrogate: PceSurrogate, qoi_index: int = 0, method: str = "pairing"):
    """First two trigonometric moments of a circle-valued QOI z.

    phi1 = c_0. For phi2 = E[z^2], ``"pairing"`` contracts the coefficients
    with E[psi_alpha psi_alpha'], which is exact for any orthonormal basis;
    ``"plain"`` uses sum c_alpha^2, valid only when every basis is real.
    """
    c = surrogate.coeffs[:, qoi_index]
    phi1 = complex(c[0])
    if method == "plain":
        phi2 = complex(np.sum(c * c))
    elif method == "pairing":
        phi2 = complex(c @ pairing_gram(surrogate) @ c)
    else:
        raise DomainError(f"unknown method {method!r}")
    return phi1, phi2


def circular_stats_pce(surrogate: PceSurrogate, qoi_index: int = 0) -> CircularSummary:
    """Circular mean and std of a z-valued QOI from c_0 alone."""
    c0 = complex(surrogate.coeffs[0, qoi_index])
    if abs(c0) > 1.0 + 1e-8:
        warnings.warn(f"|c_0| = {abs(c0)} exceeds one; clamping", RuntimeWarning, stacklevel=2)
    return summary_from_phi1(c0)


def real_stats_pce(surrogate: PceSurrogate, qoi_index: int = 0):
    """Mean c_0 and variance sum_{alpha != 0} |c_alpha|^2."""
    c = surrogate.coeffs[:, qoi_index]
    return complex(c[0]), float(np.sum(np.abs(c[1:]) ** 2))


def rms_validation(surrogate, holdout_inputs, holdout_truth, kinds="complex") -> np.ndarray:
    """Per-QOI RMS error on held-out samples.

    ``kinds`` (one value or one per QOI):

    * ``"complex"``: |u_hat - u|
    * ``"angle"``: principal difference of Re(u_hat) and u, in degrees
    * ``"circle"``: |u_hat - u| for z-valued QOIs, scaled by 180/pi so it
      reads as degrees for small errors

    Holdout points must not overlap the training set; that is left to the caller.
    """
    pred = surrogate(holdout_inputs) if callable(surrogate) else evaluate(surrogate, holdout_inputs)
    pred = np.asarray(pred)
    if pred.ndim == 1:
        pred = pred[:, None]
    truth = np.asarray(holdout_truth)
    if truth.ndim == 1:
        truth = truth[:, None]
    q = pred.shape[1]
    if isinstance(kinds, str):
        kinds = [kinds] * q
    out = np.empty(q)
    for k, kind in enumerate(kinds):
        if kind == "complex":
            err = np.abs(pred[:, k] - truth[:, k])
        elif kind == "angle":
            err = np.abs(angle_difference(pred[:, k].real, truth[:, k].real)) * RAD2DEG
        elif kind == "circle":
            err = np.abs(pred[:, k] - truth[:, k]) * RAD2DEG
        else:
            raise DomainError(f"unknown error kind {kind!r}")
        out[k] = math.sqrt(float(np.mean(err * err)))
    return out


def coefficient_table(surrogate: PceSurrogate, qoi_index: int = 0):
    """(multi-indices, |c_alpha|) for inspecting sparsity."""
    return surrogate.index_set.indices.copy(), np.abs(surrogate.coeffs[:, qoi_index])


def mass_fraction(coeffs, fraction_of_terms: float = 0.1, skip_mean: bool = True) -> float:
    """Share of squared coefficient mass held by the largest terms."""
    c = np.abs(np.asarray(coeffs)) ** 2
    if skip_mean:
        c = c[1:]
    total = c.sum()
    if total == 0:
        return 1.0
    keep = max(1, int(math.floor(fraction_of_terms * c.size)))
    return float(np.sort(c)[::-1][:keep].sum() / total)

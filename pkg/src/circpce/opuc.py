"""Orthogonal polynomial engines.

Rogers-Szego polynomials (orthonormal under the wrapped normal), numerically
generated OPUC for any circular density with known moments, the Szego
recursion that evaluates both, normalized Hermite polynomials for inputs on
the real line, and uniform circle quadrature.

Inner products conjugate the first argument,
``<f, g> = sum_j w_j conj(f_j) g_j rho_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circular import (
    CharacteristicSequence,
    VonMisesParams,
    WrappedNormalParams,
    characteristic_of,
)
from .errors import (
    ConcentrationLimitError,
    DomainError,
    InvalidMeasureError,
    NormalizationError,
)

UNIT_CIRCLE_TOL = 1e-12
CONDITIONING_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class VerblunskySequence:
    """Coefficients eta_0..eta_{p-1} plus the norms ||psi'_n||, n = 1..p.

    ``margins`` holds 1 - |eta_n|^2 per step, the conditioning diagnostic.
    """

    eta: np.ndarray
    norms: np.ndarray = field(default=None)
    margins: np.ndarray = field(default=None)

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=complex).ravel()
        if np.any(np.abs(eta) >= 1.0):
            bad = int(np.argmax(np.abs(eta) >= 1.0))
            raise InvalidMeasureError(f"|eta_{bad}| = {abs(eta[bad])} >= 1")
        margins = 1.0 - np.abs(eta) ** 2
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "margins", margins)
        object.__setattr__(self, "norms", np.sqrt(np.cumprod(margins)))

    def __len__(self):
        return self.eta.size


# --- Rogers-Szego ---


def rs_verblunsky(n, q: float):
    """(-1)^n q^((n+1)/2)."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    n_arr = np.asarray(n)
    out = np.where(n_arr % 2 == 0, 1.0, -1.0) * q ** ((n_arr + 1) / 2.0)
    if np.ndim(n) == 0:
        return float(out)
    return out


def _q_pochhammer(q: float, n: int) -> np.ndarray:
    """(q;q)_k for k = 0..n by running product."""
    out = np.ones(n + 1)
    for k in range(1, n + 1):
        out[k] = out[k - 1] * (1.0 - q**k)
    return out


def rs_eval_explicit(n: int, z, q: float, digits: int | None = None):
    """Normalized Rogers-Szego polynomial from its q-binomial sum.

    The alternating sum cancels badly for q near 1 (about 1e-6 relative at
    q = exp(-0.05), n = 20 in doubles). When the ratio of summed term
    magnitudes to the result exceeds 1e3 the sum is redone with mpmath at a
    working precision covering the loss. ``digits`` forces that route.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    z = _on_circle(z)
    if digits is not None:
        return _rs_explicit_mp(n, z, q, digits)
    poch = _q_pochhammer(q, n)
    total = np.zeros(np.shape(z), dtype=complex)
    magnitude = 0.0
    for j in range(n + 1):
        term = (-1.0) ** (n + j) * poch[n] / (poch[j] * poch[n - j]) * q ** ((n - j) / 2.0)
        total = total + term * z**j
        magnitude += abs(term)
    smallest = float(np.min(np.abs(total))) if np.size(total) else 1.0
    loss = magnitude / max(smallest, 1e-300)
    if loss > 1e3:
        return _rs_explicit_mp(n, z, q, 20 + int(math.ceil(math.log10(loss))))
    out = total / math.sqrt(poch[n])
    if np.ndim(out) == 0:
        return complex(out)
    return out


def _rs_explicit_mp(n, z, q, digits):
    import mpmath

    with mpmath.workdps(digits):
        qm = mpmath.mpf(q)
        poch = [mpmath.mpf(1)]
        for k in range(1, n + 1):
            poch.append(poch[-1] * (1 - qm**k))
        coef = [
            (-1) ** (n + j) * poch[n] / (poch[j] * poch[n - j]) * qm ** (mpmath.mpf(n - j) / 2)
            for j in range(n + 1)
        ]
        scale = 1 / mpmath.sqrt(poch[n])
        flat = np.ravel(z)
        vals = np.empty(flat.size, dtype=complex)
        for i, zz in enumerate(flat):
            zm = mpmath.mpc(zz.real, zz.imag)
            vals[i] = complex(scale * mpmath.fsum(c * zm**j for j, c in enumerate(coef)))
    if np.ndim(z) == 0:
        return complex(vals[0])
    return vals.reshape(np.shape(z))


# --- Szego recursion ---


def _on_circle(z):
    z = np.asarray(z, dtype=complex)
    mod = np.abs(z)
    if np.any(np.abs(mod - 1.0) > UNIT_CIRCLE_TOL):
        raise DomainError("input must lie on the unit circle")
    return z / mod


def _eta_array(vs) -> np.ndarray:
    if isinstance(vs, VerblunskySequence):
        return vs.eta
    eta = np.asarray(vs, dtype=complex).ravel()
    if np.any(np.abs(eta) >= 1.0):
        raise InvalidMeasureError("Verblunsky coefficient with modulus >= 1")
    return eta


def szego_eval(vs, z, max_degree: int) -> np.ndarray:
    """Orthonormal psi_0..psi_p at ``z``; output shape ``z.shape + (p+1,)``."""
    eta = _eta_array(vs)
    if max_degree > eta.size:
        raise DomainError(f"degree {max_degree} needs {max_degree} Verblunsky coefficients")
    z = _on_circle(z)
    out = np.empty(z.shape + (max_degree + 1,), dtype=complex)
    out[..., 0] = 1.0
    phi = np.ones_like(z)
    phi_star = np.ones_like(z)
    norm2 = 1.0
    for n in range(max_degree):
        e = eta[n]
        phi, phi_star = z * phi - np.conj(e) * phi_star, phi_star - e * z * phi
        norm2 *= 1.0 - abs(e) ** 2
        out[..., n + 1] = phi / math.sqrt(norm2)
    return out


def szego_coefficients(vs, max_degree: int) -> np.ndarray:
    """Monomial coefficients of the orthonormal polynomials.

    Row n holds psi_n(z) = sum_k A[n, k] z^k.
    """
    eta = _eta_array(vs)
    a = np.zeros(max_degree + 1, dtype=complex)
    a[0] = 1.0
    b = a.copy()
    out = np.zeros((max_degree + 1, max_degree + 1), dtype=complex)
    out[0, 0] = 1.0
    norm2 = 1.0
    for n in range(max_degree):
        e = eta[n]
        za = np.roll(a, 1)
        za[0] = 0.0
        a, b = za - np.conj(e) * b, b - e * za
        norm2 *= 1.0 - abs(e) ** 2
        out[n + 1] = a / math.sqrt(norm2)
    return out


# --- numeric OPUC from moments ---


def verblunsky_from_char(phi: CharacteristicSequence, max_degree: int) -> VerblunskySequence:
    """Verblunsky coefficients of the measure with moments ``phi``.

    Levinson-type recursion on the monic polynomials: orthogonality of
    Phi_{n+1} to constants gives conj(eta_n) = sum_k a_k phi_{k+1} / E_n,
    with E_n = ||Phi_n||^2 = prod (1 - |eta_i|^2).
    """
    if max_degree < 1:
        raise DomainError("max_degree must be at least 1")
    m = phi.values(max_degree)
    a = np.zeros(max_degree + 1, dtype=complex)
    a[0] = 1.0
    energy = 1.0
    eta = np.empty(max_degree, dtype=complex)
    for n in range(max_degree):
        s = np.dot(a[: n + 1], m[1 : n + 2])
        e = np.conj(s / energy)
        margin = 1.0 - abs(e) ** 2
        if not margin >= CONDITIONING_FLOOR:
            raise ConcentrationLimitError(n, margin)
        a_star = np.conj(a[: n + 1][::-1])
        shifted = np.zeros_like(a)
        shifted[1 : n + 2] = a[: n + 1]
        shifted[: n + 1] -= np.conj(e) * a_star
        a = shifted
        energy *= margin
        eta[n] = e
    return VerblunskySequence(eta)


def _det_laplace(mat: np.ndarray) -> complex:
    n = mat.shape[0]
    if n == 1:
        return complex(mat[0, 0])
    if n == 2:
        return complex(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
    total = 0.0j
    for j in range(n):
        minor = np.delete(mat[1:], j, axis=1)
        total += (-1) ** j * mat[0, j] * _det_laplace(minor)
    return total


def verblunsky_from_determinants(phi: CharacteristicSequence, max_degree: int) -> np.ndarray:
    """Verblunsky coefficients from bordered Toeplitz determinants.

    Cofactor expansion, O(n!) work; intended for n <= 6 as a cross-check of
    :func:`verblunsky_from_char`. Rows of the moment block are
    (phi_{j-i})_j, the arrangement that makes psi'_n orthogonal under
    ``<conj f, g>``; it coincides with the transposed layout for real moments.
    """
    if max_degree > 6:
        raise DomainError("determinant route limited to max_degree <= 6")
    eta = np.empty(max_degree, dtype=complex)
    for n in range(max_degree):
        size = n + 1
        idx = np.arange(size)
        toeplitz = phi(idx[None, :] - idx[:, None])
        border = phi(np.arange(1, size + 1)[None, :] - idx[:, None])
        # psi'_{n+1}(0): cofactor of the (last row, first column) entry
        value0 = (-1) ** size * _det_laplace(border) / _det_laplace(toeplitz)
        eta[n] = -np.conj(value0)
    return eta


# --- quadrature and inner products ---


@dataclass(frozen=True, eq=False)
class CircleQuadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.nodes.size


def circle_quadrature(n_nodes: int) -> CircleQuadrature:
    """Midpoint rule theta_j = -pi + 2 pi (j + 1/2) / N, weights 2 pi / N."""
    if n_nodes < 1:
        raise DomainError("need at least one node")
    j = np.arange(n_nodes)
    nodes = -np.pi + 2.0 * np.pi * (j + 0.5) / n_nodes
    return CircleQuadrature(nodes, np.full(n_nodes, 2.0 * np.pi / n_nodes))


def _density_values(density, nodes):
    if hasattr(density, "pdf"):
        return np.asarray(density.pdf(nodes), dtype=float)
    if callable(density):
        return np.asarray(density(nodes), dtype=float)
    return np.asarray(density, dtype=float)


def _function_values(f, nodes):
    if callable(f):
        return np.asarray(f(nodes))
    return np.asarray(f)


def density_weights(density, quad: CircleQuadrature, tol: float = 1e-8) -> np.ndarray:
    """Quadrature weights times density, checked to integrate to one."""
    w = quad.weights * _density_values(density, quad.nodes)
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise NormalizationError(f"density integrates to {total} on the rule")
    return w


def weighted_inner(f, g, density, quad: CircleQuadrature) -> complex:
    """sum_j w_j conj(f(theta_j)) g(theta_j) rho(theta_j)."""
    w = density_weights(density, quad)
    fv = _function_values(f, quad.nodes)
    gv = _function_values(g, quad.nodes)
    return complex(np.sum(w * np.conj(fv) * gv))


# --- Hermite ---


def hermite_table(x, max_degree: int) -> np.ndarray:
    """He_n(x)/sqrt(n!) for n = 0..p, shape ``x.shape + (p+1,)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = x
    for n in range(1, max_degree):
        out[..., n + 1] = (x * out[..., n] - math.sqrt(n) * out[..., n - 1]) / math.sqrt(n + 1)
    return out


def hermite_eval(n: int, x):
    out = hermite_table(x, n)[..., n]
    if np.ndim(out) == 0:
        return float(out)
    return out


# --- basis descriptors ---


class Basis:
    """Univariate orthonormal basis for one input dimension."""

    domain = "real"
    max_degree: int

    def evaluate(self, x, degree: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def pairing_matrix(self, degree: int) -> np.ndarray:
        """E[psi_m psi_n] without conjugation, shape (degree+1, degree+1)."""
        raise NotImplementedError

    def _degree(self, degree):
        degree = self.max_degree if degree is None else degree
        if degree > self.max_degree:
            raise DomainError(f"degree {degree} exceeds basis max_degree {self.max_degree}")
        return degree


class CircleBasis(Basis):
    """OPUC basis evaluated at z = exp(i(lambda - mu)) for an angle input lambda."""

    domain = "circle"
    mu: float

    def verblunsky(self) -> np.ndarray:
        raise NotImplementedError

    def centered_moments(self, n_max: int) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x, degree=None):
        degree = self._degree(degree)
        x = np.asarray(x)
        if np.iscomplexobj(x):
            raise DomainError("circle bases take real angles; use evaluate_z for points on the circle")
        x = x.astype(float)
        if not np.all(np.isfinite(x)):
            raise DomainError("angle inputs must be finite")
        return szego_eval(self.verblunsky(), np.exp(1j * (x - self.mu)), degree)

    def evaluate_z(self, z, degree=None):
        """Evaluate at centered points z already on the unit circle."""
        return szego_eval(self.verblunsky(), z, self._degree(degree))

    def coefficients(self, degree=None) -> np.ndarray:
        return szego_coefficients(self.verblunsky(), self._degree(degree))

    def pairing_matrix(self, degree):
        a = self.coefficients(degree)
        m = self.centered_moments(2 * degree)
        k = np.arange(degree + 1)
        hankel = m[k[:, None] + k[None, :]]
        return a @ hankel @ a.T


@dataclass(frozen=True)
class RogersSzego(CircleBasis):
    q: float
    mu: float = 0.0
    max_degree: int = 20

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {self.q}")

    @classmethod
    def from_density(cls, density: WrappedNormalParams, max_degree: int = 20) -> "RogersSzego":
        return cls(q=density.q, mu=density.mu, max_degree=max_degree)

    @property
    def density(self) -> WrappedNormalParams:
        return WrappedNormalParams(self.mu, -math.log(self.q))

    def verblunsky(self):
        return rs_verblunsky(np.arange(self.max_degree), self.q).astype(complex)

    def centered_moments(self, n_max):
        n = np.arange(n_max + 1)
        return (self.q ** (0.5 * n * n)).astype(complex)

    def to_dict(self):
        return {"kind": "rogers-szego", "q": self.q, "mu": self.mu, "max_degree": self.max_degree}


class NumericOpuc(CircleBasis):
    """OPUC generated from a characteristic sequence.

    ``moments`` are the centered moments phi_n of lambda - mu, n = 0..2p,
    kept for the unconjugated pairing matrix. ``density`` is optional and
    only needed for quadrature-based products.
    """

    def __init__(self, verblunsky: VerblunskySequence, moments, mu: float = 0.0, density=None):
        self._vs = verblunsky
        self.moments = np.asarray(moments, dtype=complex)
        self.mu = float(mu)
        self.density = density
        self.max_degree = len(verblunsky)

    @classmethod
    def from_char(cls, phi: CharacteristicSequence, max_degree: int, mu: float = 0.0, density=None):
        centered = phi.rotated(mu)
        vs = verblunsky_from_char(centered, max_degree)
        n_mom = 2 * max_degree
        if centered.n_max is not None:
            n_mom = min(n_mom, centered.n_max)
        return cls(vs, centered.values(n_mom), mu, density)

    @classmethod
    def from_density(cls, density, max_degree: int) -> "NumericOpuc":
        return cls.from_char(characteristic_of(density), max_degree, density.mu, density)

    @property
    def verblunsky_sequence(self) -> VerblunskySequence:
        return self._vs

    def verblunsky(self):
        return self._vs.eta

    def centered_moments(self, n_max):
        if n_max >= self.moments.size:
            raise DomainError(f"moments known only to order {self.moments.size - 1}")
        return self.moments[: n_max + 1]

    def to_dict(self):
        out = {
            "kind": "numeric-opuc",
            "mu": self.mu,
            "max_degree": self.max_degree,
            "eta": [[float(e.real), float(e.imag)] for e in self._vs.eta],
            "moments": [[float(m.real), float(m.imag)] for m in self.moments],
        }
        if self.density is not None:
            out["density"] = density_to_dict(self.density)
        return out


@dataclass(frozen=True)
class NormalizedHermite(Basis):
    """Orthonormal Hermite basis of the standardized input (x - loc) / scale."""

    loc: float = 0.0
    scale: float = 1.0
    max_degree: int = 20

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    def evaluate(self, x, degree=None):
        degree = self._degree(degree)
        x = np.asarray(x)
        if np.iscomplexobj(x) or not np.all(np.isfinite(x)):
            raise DomainError("Hermite inputs must be finite reals")
        return hermite_table((x.astype(float) - self.loc) / self.scale, degree)

    def pairing_matrix(self, degree):
        return np.eye(degree + 1)

    def to_dict(self):
        return {"kind": "hermite", "loc": self.loc, "scale": self.scale, "max_degree": self.max_degree}


def density_to_dict(density) -> dict:
    if isinstance(density, WrappedNormalParams):
        return {"kind": "wnd", "mu": density.mu, "sigma2": density.sigma2}
    if isinstance(density, VonMisesParams):
        return {"kind": "vmd", "mu": density.mu, "kappa": density.kappa}
    raise TypeError(f"cannot serialize density {density!r}")


def density_from_dict(d: dict):
    if d["kind"] == "wnd":
        return WrappedNormalParams(d["mu"], d["sigma2"])
    if d["kind"] == "vmd":
        return VonMisesParams(d["mu"], d["kappa"])
    raise DomainError(f"unknown density kind {d['kind']!r}")


def basis_from_dict(d: dict) -> Basis:
    kind = d["kind"]
    if kind == "rogers-szego":
        return RogersSzego(d["q"], d["mu"], d["max_degree"])
    if kind == "hermite":
        return NormalizedHermite(d["loc"], d["scale"], d["max_degree"])
    if kind == "numeric-opuc":
        eta = np.array([complex(re, im) for re, im in d["eta"]])
        moments = np.array([complex(re, im) for re, im in d["moments"]])
        density = density_from_dict(d["density"]) if "density" in d else None
        return NumericOpuc(VerblunskySequence(eta), moments, d["mu"], density)
    raise DomainError(f"unknown basis kind {kind!r}")


def basis_for_density(density, max_degree: int) -> CircleBasis:
    """Rogers-Szego for a wrapped normal, numeric OPUC otherwise."""
    if isinstance(density, WrappedNormalParams):
        return RogersSzego.from_density(density, max_degree)
    return NumericOpuc.from_density(density, max_degree)


# --- triple products ---


class TripleProducts:
    """e[b, a, g] = sum_j w_j rho_j psi_b psi_a conj(psi_g), cached per key."""

    def __init__(self, basis: CircleBasis, degree: int, density=None, quad: CircleQuadrature | None = None):
        density = density if density is not None else basis.density
        if density is None:
            raise DomainError("triple products need the basis density")
        quad = quad if quad is not None else circle_quadrature(100_000)
        self.degree = degree
        self._w = density_weights(density, quad)
        self._psi = basis.evaluate(quad.nodes, degree)
        self._cache: dict[tuple[int, int, int], complex] = {}

    def __call__(self, beta: int, alpha: int, gamma: int) -> complex:
        if max(beta, alpha, gamma) > self.degree:
            raise DomainError("degree beyond the precomputed table")
        key = (min(beta, alpha), max(beta, alpha), gamma)
        if key not in self._cache:
            psi = self._psi
            self._cache[key] = complex(
                np.sum(self._w * psi[:, beta] * psi[:, alpha] * np.conj(psi[:, gamma]))
            )
        return self._cache[key]

    def tensor(self) -> np.ndarray:
        n = self.degree + 1
        out = np.zeros((n * n, n), dtype=complex)
        for start in range(0, self._w.size, 8192):
            psi = self._psi[start : start + 8192]
            w = self._w[start : start + 8192]
            pair = (psi[:, :, None] * psi[:, None, :]).reshape(-1, n * n) * w[:, None]
            out += pair.T @ np.conj(psi)
        return out.reshape(n, n, n)


def triple_product(beta, alpha, gamma, basis, density=None, quad=None) -> complex:
    degree = max(beta, alpha, gamma)
    return TripleProducts(basis, degree, density, quad)(beta, alpha, gamma)

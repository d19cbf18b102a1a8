"""Directional statistics on the unit circle.

Wrapped normal and von Mises densities, their characteristic sequences,
samplers, empirical moments, and the wrapped-normal fit used to pair the
two families.

Angles are plain floats (or float arrays) in radians. ``canonicalize``
maps them to the half-open interval (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import DomainError, FitDegenerateError, UndefinedMeanError

TWO_PI = 2.0 * np.pi


def canonicalize(theta):
    """Map angles to (-pi, pi].

    Works on scalars and arrays. ``-pi`` and ``3*pi`` both map to ``pi``.
    """
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("angle must be finite")
    out = np.mod(arr, TWO_PI)  # [0, 2pi)
    out = np.where(out > np.pi, out - TWO_PI, out)
    # the half-open convention sends the -pi boundary to +pi
    out = np.where(out <= -np.pi, out + TWO_PI, out)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def angle_difference(a, b):
    """Principal difference ``a - b`` in (-pi, pi]."""
    return canonicalize(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


@dataclass(frozen=True)
class WrappedNormalParams:
    mu: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "mu", canonicalize(float(self.mu)))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def q(self) -> float:
        """Rogers-Szego parameter exp(-sigma2)."""
        return math.exp(-self.sigma2)

    def pdf(self, theta):
        return wnd_pdf(theta, self)

    def char(self, n):
        return wnd_char(n, self)

    def sample(self, rng, count):
        return sample_wnd(rng, self, count)


@dataclass(frozen=True)
class VonMisesParams:
    mu: float
    kappa: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise DomainError(f"kappa must be non-negative, got {self.kappa}")
        object.__setattr__(self, "mu", canonicalize(float(self.mu)))
        object.__setattr__(self, "kappa", float(self.kappa))

    def pdf(self, theta):
        return vmd_pdf(theta, self)

    def char(self, n):
        return vmd_char(n, self)

    def sample(self, rng, count):
        return sample_vmd(rng, self, count)


@dataclass(frozen=True)
class CircularSummary:
    mean_direction: float
    circular_std: float
    phi1: complex


class CharacteristicSequence:
    """Fourier coefficients phi_n = E[exp(i n lambda)] of a circular density.

    ``positive`` returns phi_n for n >= 0 (vectorized); negative orders are
    filled in by conjugate symmetry. ``n_max`` bounds the orders available
    (None for analytic sequences).
    """

    def __init__(
        self,
        positive: Callable[[np.ndarray], np.ndarray],
        provenance: str = "custom",
        n_max: int | None = None,
    ):
        self._positive = positive
        self.provenance = provenance
        self.n_max = n_max

    def __call__(self, n):
        n_arr = np.asarray(n)
        if not np.issubdtype(n_arr.dtype, np.integer):
            if not np.all(n_arr == np.round(n_arr)):
                raise DomainError("characteristic orders must be integers")
            n_arr = n_arr.astype(int)
        absn = np.abs(n_arr)
        if self.n_max is not None and np.any(absn > self.n_max):
            raise DomainError(f"order beyond available n_max={self.n_max}")
        vals = np.asarray(self._positive(np.atleast_1d(absn).ravel()), dtype=complex)
        vals = vals.reshape(np.shape(absn))
        # phi_0 = 1 exactly; negative orders are conjugates
        vals = np.where(absn == 0, 1.0 + 0.0j, vals)
        vals = np.where(n_arr < 0, np.conj(vals), vals)
        if np.ndim(n) == 0:
            return complex(vals)
        return vals

    def values(self, n_max: int) -> np.ndarray:
        """phi_0 ... phi_{n_max} as an array."""
        return self(np.arange(n_max + 1))

    def rotated(self, delta: float) -> "CharacteristicSequence":
        """Sequence of lambda - delta (the density shifted by -delta)."""
        base = self._positive

        def positive(n):
            return np.asarray(base(n)) * np.exp(-1j * n * delta)

        return CharacteristicSequence(positive, self.provenance, self.n_max)

    @classmethod
    def from_values(cls, values, provenance: str = "custom") -> "CharacteristicSequence":
        vals = np.asarray(values, dtype=complex)
        return cls(lambda n: vals[n], provenance, n_max=len(vals) - 1)

    @classmethod
    def wrapped_normal(cls, params: WrappedNormalParams) -> "CharacteristicSequence":
        return cls(lambda n: wnd_char(n, params), "analytic-WND")

    @classmethod
    def von_mises(cls, params: VonMisesParams) -> "CharacteristicSequence":
        return cls(lambda n: vmd_char(n, params), "analytic-VMD")


def characteristic_of(density) -> CharacteristicSequence:
    if isinstance(density, WrappedNormalParams):
        return CharacteristicSequence.wrapped_normal(density)
    if isinstance(density, VonMisesParams):
        return CharacteristicSequence.von_mises(density)
    raise TypeError(f"no analytic characteristic sequence for {type(density).__name__}")


# --- empirical statistics ---


def circular_mean_std(samples) -> CircularSummary:
    """Mean direction and circular standard deviation of angle samples."""
    lam = np.asarray(samples, dtype=float).ravel()
    if lam.size == 0:
        raise DomainError("empty sample list")
    phi1 = complex(np.mean(np.exp(1j * lam)))
    if abs(phi1) < 1e-12:
        raise UndefinedMeanError("first trigonometric moment is zero")
    mean = math.atan2(phi1.imag, phi1.real)
    # 1 - R from half-angle sines keeps a point mass at exactly zero spread
    one_minus_r = float(np.mean(2.0 * np.sin(0.5 * (lam - mean)) ** 2))
    one_minus_r = min(max(one_minus_r, 0.0), 1.0 - 1e-300)
    std = math.sqrt(-2.0 * math.log1p(-one_minus_r))
    return CircularSummary(canonicalize(mean), std, phi1)


def summary_from_phi1(phi1: complex) -> CircularSummary:
    """Circular mean/std from a first trigonometric moment."""
    r = abs(phi1)
    if r < 1e-12:
        raise UndefinedMeanError("first trigonometric moment is zero")
    r = min(r, 1.0)
    return CircularSummary(
        canonicalize(math.atan2(phi1.imag, phi1.real)),
        math.sqrt(max(-2.0 * math.log(r), 0.0)),
        complex(phi1),
    )


def empirical_char(samples, n_max: int) -> CharacteristicSequence:
    lam = np.asarray(samples, dtype=float).ravel()
    if lam.size == 0:
        raise DomainError("empty sample list")
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    vals = np.array([np.mean(np.exp(1j * k * lam)) for k in range(n_max + 1)])
    vals[0] = 1.0
    return CharacteristicSequence.from_values(vals, provenance="empirical")


# --- densities ---


def _wnd_terms(sigma2: float) -> int:
    sigma = math.sqrt(sigma2)
    return int(math.ceil(9.0 * sigma / TWO_PI)) + 2


def wnd_pdf(theta, params: WrappedNormalParams):
    """Wrapped normal density.

    Direct wrapping sum for sigma2 <= 20, Fourier series above that.
    """
    d = canonicalize(np.asarray(theta, dtype=float) - params.mu)
    d = np.asarray(d, dtype=float)
    s2 = params.sigma2
    if s2 <= 20.0:
        kmax = _wnd_terms(s2)
        k = np.arange(-kmax, kmax + 1)
        x = d[..., None] + TWO_PI * k
        out = np.exp(-0.5 * x * x / s2).sum(axis=-1) / math.sqrt(TWO_PI * s2)
    else:
        nmax = max(1, int(math.ceil(math.sqrt(2.0 * 40.0 * math.log(10.0) / s2))))
        n = np.arange(1, nmax + 1)
        coef = np.exp(-0.5 * n * n * s2)
        out = (1.0 + 2.0 * np.cos(d[..., None] * n) @ coef) / TWO_PI
    if np.ndim(theta) == 0:
        return float(out)
    return out


def wnd_char(n, params: WrappedNormalParams):
    n_arr = np.asarray(n)
    out = np.exp(1j * params.mu * n_arr) * np.exp(-0.5 * n_arr * n_arr * params.sigma2)
    if np.ndim(n) == 0:
        return complex(out)
    return out


def vmd_pdf(theta, params: VonMisesParams):
    """Von Mises density, evaluated with exponentially scaled I_0."""
    d = np.asarray(theta, dtype=float) - params.mu
    k = params.kappa
    out = np.exp(k * (np.cos(d) - 1.0)) / (TWO_PI * special.i0e(k))
    if np.ndim(theta) == 0:
        return float(out)
    return out


@lru_cache(maxsize=256)
def _bessel_ratio_table(n_max: int, kappa: float) -> tuple:
    if kappa == 0.0:
        return (1.0,) + (0.0,) * n_max
    # Backward recurrence on r_k = I_k/I_{k-1}: r_k = 1 / (2k/kappa + r_{k+1}).
    # The start lies past the turning point k ~ kappa, where the map contracts fast.
    start = n_max + int(kappa + 10.0 * math.sqrt(kappa)) + 40
    nu = start + 0.5
    r = kappa / (nu + math.sqrt(nu * nu + kappa * kappa))
    ratios = [0.0] * (n_max + 1)
    for k in range(start, 0, -1):
        r = 1.0 / (2.0 * k / kappa + r)
        if k <= n_max:
            ratios[k] = r
    out = [1.0] * (n_max + 1)
    for k in range(1, n_max + 1):
        out[k] = out[k - 1] * ratios[k]
    return tuple(out)


def bessel_ratios(n_max: int, kappa: float) -> np.ndarray:
    """I_n(kappa)/I_0(kappa) for n = 0..n_max without overflow."""
    if n_max < 0 or kappa < 0:
        raise DomainError("need n_max >= 0 and kappa >= 0")
    return np.array(_bessel_ratio_table(int(n_max), float(kappa)))


def bessel_ratio(n: int, kappa: float) -> float:
    return float(bessel_ratios(n, kappa)[n])


def vmd_char(n, params: VonMisesParams):
    n_arr = np.asarray(n)
    absn = np.abs(n_arr).astype(int)
    table = bessel_ratios(int(absn.max(initial=0)), params.kappa)
    out = table[absn] * np.exp(1j * n_arr * params.mu)
    if np.ndim(n) == 0:
        return complex(out)
    return out


# --- sampling ---


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_wnd(rng, params: WrappedNormalParams, count: int) -> np.ndarray:
    """Wrap standard normal draws: canonicalize(xi * sigma + mu)."""
    rng = _as_generator(rng)
    xi = rng.standard_normal(int(count))
    return canonicalize(xi * params.sigma + params.mu) if count else np.empty(0)


def sample_vmd(rng, params: VonMisesParams, count: int) -> np.ndarray:
    """Best-Fisher rejection sampler with a wrapped Cauchy envelope."""
    rng = _as_generator(rng)
    count = int(count)
    k = params.kappa
    if count == 0:
        return np.empty(0)
    if k < 1e-12:
        return canonicalize(rng.uniform(-np.pi, np.pi, count))
    tau = 1.0 + math.sqrt(1.0 + 4.0 * k * k)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * k)
    r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(count)
    filled = 0
    while filled < count:
        batch = int((count - filled) * 1.4) + 16
        u1, u2, u3 = rng.random((3, batch))
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = k * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        theta = np.sign(u3[accept] - 0.5) * np.arccos(np.clip(f[accept], -1.0, 1.0))
        take = min(theta.size, count - filled)
        out[filled : filled + take] = theta[:take]
        filled += take
    return canonicalize(out + params.mu)


# --- fitting ---


def fit_wnd_to_char(target: CharacteristicSequence, n_fit: int = 20) -> WrappedNormalParams:
    """Wrapped normal closest to ``target`` in its first ``n_fit`` moments.

    The mean direction is read off phi_1; sigma2 minimizes
    sum_n |phi_n - exp(i mu n) exp(-n^2 sigma2 / 2)|^2 on [1e-8, 50].
    """
    phi1 = target(1)
    r1 = abs(phi1)
    if r1 < 1e-14 or r1 > 1.0 - 1e-15:
        raise FitDegenerateError(f"|phi_1| = {r1} admits no wrapped normal fit")
    mu = math.atan2(phi1.imag, phi1.real)
    n = np.arange(1, n_fit + 1)
    phi = target(n)
    rot = np.exp(1j * mu * n)

    def cost(s2):
        return float(np.sum(np.abs(phi - rot * np.exp(-0.5 * n * n * s2)) ** 2))

    res = optimize.minimize_scalar(
        cost, bounds=(1e-8, 50.0), method="bounded", options={"xatol": 1e-12, "maxiter": 500}
    )
    s2 = float(res.x)

    # polish with Newton steps on the derivative; the bounded search stalls near 1e-10
    def grad_hess(s):
        g = rot * np.exp(-0.5 * n * n * s)
        dg = -0.5 * n * n * g
        d2g = 0.25 * n**4 * g
        e = phi - g
        grad = -2.0 * np.sum(np.real(np.conj(e) * dg))
        hess = 2.0 * np.sum(np.abs(dg) ** 2) - 2.0 * np.sum(np.real(np.conj(e) * d2g))
        return grad, hess

    for _ in range(5):
        grad, hess = grad_hess(s2)
        if hess <= 0:
            break
        step = grad / hess
        trial = min(max(s2 - step, 1e-8), 50.0)
        if cost(trial) > cost(s2):
            break
        s2 = trial
        if abs(step) < 1e-15 * max(s2, 1.0):
            break
    return WrappedNormalParams(mu, s2)

"""Equinoctial elements, two-body + J2 dynamics and an ensemble integrator.

Direct equinoctial elements with retrograde factor +1:

    h = e sin(w + W),  k = e cos(w + W),  p = tan(i/2) sin W,  q = tan(i/2) cos W

and mean longitude lambda = M + w + W. Conversions follow the standard
Broucke-Cefola formulation via the eccentric longitude F, which solves
lambda = F + h cos F - k sin F. Units are km, km/s and seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circular import canonicalize
from .errors import DomainError, KeplerConvergenceError, PropagationError

MU_EARTH = 398600.4415
J2_EARTH = 0.00108248
R_EARTH = 6378.1363


@dataclass(frozen=True)
class ForceModel:
    mu: float = MU_EARTH
    j2: float = J2_EARTH
    r_earth: float = R_EARTH

    def __post_init__(self):
        if not (self.mu > 0 and self.j2 >= 0 and self.r_earth > 0):
            raise DomainError("force model constants must be positive")


TWO_BODY = ForceModel(j2=0.0)


@dataclass(frozen=True)
class EquinoctialState:
    a: float
    h: float
    k: float
    p: float
    q: float
    lam: float

    def __post_init__(self):
        if not self.a > 0 or self.h**2 + self.k**2 >= 1:
            raise DomainError("need a > 0 and h^2 + k^2 < 1")

    def to_array(self) -> np.ndarray:
        return np.array([self.a, self.h, self.k, self.p, self.q, self.lam])

    @classmethod
    def from_array(cls, arr) -> "EquinoctialState":
        return cls(*(float(x) for x in arr))


@dataclass(frozen=True)
class CartesianState:
    position: np.ndarray
    velocity: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.position, float), np.asarray(self.velocity, float)])

    @classmethod
    def from_array(cls, arr) -> "CartesianState":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[:3].copy(), arr[3:6].copy())


def mean_motion(a, mu: float = MU_EARTH):
    return np.sqrt(mu / np.asarray(a, dtype=float) ** 3)


def orbital_period(a, mu: float = MU_EARTH):
    return 2.0 * math.pi / mean_motion(a, mu)


def mean_longitude_twobody(lam0, a, dt, mu: float = MU_EARTH):
    """lambda0 + n dt mapped to (-pi, pi]."""
    return canonicalize(np.asarray(lam0, dtype=float) + mean_motion(a, mu) * dt)


def _frame(p, q):
    """Equinoctial basis vectors f, g, w as (..., 3) arrays."""
    p2, q2, pq = p * p, q * q, p * q
    s = 1.0 / (1.0 + p2 + q2)
    f = np.stack([1.0 - p2 + q2, 2.0 * pq, -2.0 * p], axis=-1) * s[..., None]
    g = np.stack([2.0 * pq, 1.0 + p2 - q2, 2.0 * q], axis=-1) * s[..., None]
    w = np.stack([2.0 * p, -2.0 * q, 1.0 - p2 - q2], axis=-1) * s[..., None]
    return f, g, w


def solve_kepler_equinoctial(lam, h, k, tol: float = 1e-14, max_iter: int = 50):
    """Eccentric longitude F with lam = F + h cos F - k sin F.

    Newton from F0 = lam. Returns (F, iterations) where iterations is the
    maximum over the batch.
    """
    lam, h, k = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (lam, h, k)))
    f_ecc = lam.copy()
    for it in range(1, max_iter + 1):
        sf, cf = np.sin(f_ecc), np.cos(f_ecc)
        step = (f_ecc + h * cf - k * sf - lam) / (1.0 - h * sf - k * cf)
        f_ecc = f_ecc - step
        if np.all(np.abs(step) < tol * np.maximum(1.0, np.abs(f_ecc))):
            return f_ecc, it
    raise KeplerConvergenceError(f"Kepler iteration did not converge in {max_iter} steps")


def equinoctial_to_cartesian_array(elems, mu: float = MU_EARTH) -> np.ndarray:
    """(..., 6) equinoctial -> (..., 6) position/velocity."""
    e = np.asarray(elems, dtype=float)
    a, h, k, p, q, lam = (e[..., i] for i in range(6))
    if np.any(a <= 0) or np.any(h * h + k * k >= 1):
        raise DomainError("elliptic elements required")
    f_ecc, _ = solve_kepler_equinoctial(lam, h, k)
    sf, cf = np.sin(f_ecc), np.cos(f_ecc)
    beta = 1.0 / (1.0 + np.sqrt(1.0 - h * h - k * k))
    n = np.sqrt(mu / a**3)
    r = a * (1.0 - k * cf - h * sf)
    x1 = a * ((1.0 - h * h * beta) * cf + h * k * beta * sf - k)
    y1 = a * ((1.0 - k * k * beta) * sf + h * k * beta * cf - h)
    xd = a * a * n / r * (h * k * beta * cf - (1.0 - h * h * beta) * sf)
    yd = a * a * n / r * ((1.0 - k * k * beta) * cf - h * k * beta * sf)
    f, g, _ = _frame(p, q)
    pos = x1[..., None] * f + y1[..., None] * g
    vel = xd[..., None] * f + yd[..., None] * g
    return np.concatenate([pos, vel], axis=-1)


def cartesian_to_equinoctial_array(states, mu: float = MU_EARTH) -> np.ndarray:
    """(..., 6) position/velocity -> (..., 6) equinoctial, lambda in (-pi, pi]."""
    s = np.asarray(states, dtype=float)
    r_vec, v_vec = s[..., :3], s[..., 3:6]
    r = np.linalg.norm(r_vec, axis=-1)
    if np.any(r == 0):
        raise DomainError("zero radius")
    v2 = np.sum(v_vec * v_vec, axis=-1)
    energy = 0.5 * v2 - mu / r
    if np.any(energy >= 0):
        raise DomainError("non-elliptic state")
    a = -mu / (2.0 * energy)
    hvec = np.cross(r_vec, v_vec)
    w = hvec / np.linalg.norm(hvec, axis=-1)[..., None]
    p = w[..., 0] / (1.0 + w[..., 2])
    q = -w[..., 1] / (1.0 + w[..., 2])
    evec = np.cross(v_vec, hvec) / mu - r_vec / r[..., None]
    f, g, _ = _frame(p, q)
    k = np.sum(evec * f, axis=-1)
    h = np.sum(evec * g, axis=-1)
    x1 = np.sum(r_vec * f, axis=-1)
    y1 = np.sum(r_vec * g, axis=-1)
    root = np.sqrt(1.0 - h * h - k * k)
    beta = 1.0 / (1.0 + root)
    cf = k + ((1.0 - k * k * beta) * x1 - h * k * beta * y1) / (a * root)
    sf = h + ((1.0 - h * h * beta) * y1 - h * k * beta * x1) / (a * root)
    f_ecc = np.arctan2(sf, cf)
    lam = canonicalize(f_ecc + h * np.cos(f_ecc) - k * np.sin(f_ecc))
    return np.stack([a, h, k, p, q, lam], axis=-1)


def equinoctial_to_cartesian(eq: EquinoctialState, mu: float = MU_EARTH) -> CartesianState:
    return CartesianState.from_array(equinoctial_to_cartesian_array(eq.to_array(), mu))


def cartesian_to_equinoctial(cs: CartesianState, mu: float = MU_EARTH) -> EquinoctialState:
    return EquinoctialState.from_array(cartesian_to_equinoctial_array(cs.to_array(), mu))


def acceleration_array(pos, fm: ForceModel = ForceModel()) -> np.ndarray:
    """Two-body plus J2 zonal acceleration for (..., 3) positions.

    The zonal term depends only on the distance from and height above the
    equatorial plane, so a rotation about the inertial z axis between the
    Earth-fixed and inertial frames leaves it unchanged.
    """
    pos = np.asarray(pos, dtype=float)
    x, y, z = pos[..., 0], pos[..., 1], pos[..., 2]
    r2 = x * x + y * y + z * z
    r = np.sqrt(r2)
    kep = -fm.mu / (r2 * r)
    if fm.j2 == 0.0:
        return pos * kep[..., None]
    zr2 = z * z / r2
    c = -1.5 * fm.j2 * fm.mu * fm.r_earth**2 / (r2 * r2 * r)
    ax = x * (kep + c * (1.0 - 5.0 * zr2))
    ay = y * (kep + c * (1.0 - 5.0 * zr2))
    az = z * (kep + c * (3.0 - 5.0 * zr2))
    return np.stack([ax, ay, az], axis=-1)


def acceleration(cs: CartesianState, fm: ForceModel = ForceModel()) -> np.ndarray:
    return acceleration_array(cs.position, fm)


def potential(pos, fm: ForceModel = ForceModel()):
    pos = np.asarray(pos, dtype=float)
    r = np.linalg.norm(pos, axis=-1)
    zr2 = pos[..., 2] ** 2 / r**2
    return -fm.mu / r + fm.mu * fm.j2 * fm.r_earth**2 / (2.0 * r**3) * (3.0 * zr2 - 1.0)


def energy(states, fm: ForceModel = ForceModel()):
    """Specific energy including the J2 potential (conserved under J2 dynamics)."""
    s = np.asarray(states, dtype=float)
    return 0.5 * np.sum(s[..., 3:6] ** 2, axis=-1) + potential(s[..., :3], fm)


def _derivative(y: np.ndarray, fm: ForceModel) -> np.ndarray:
    """State derivative for a component-major (6, N) array."""
    x, yy, z = y[0], y[1], y[2]
    r2 = x * x + yy * yy + z * z
    r = np.sqrt(r2)
    kep = -fm.mu / (r2 * r)
    out = np.empty_like(y)
    out[:3] = y[3:]
    if fm.j2 == 0.0:
        np.multiply(y[:3], kep, out=out[3:])
        return out
    zr2 = z * z / r2
    c = (-1.5 * fm.j2 * fm.mu * fm.r_earth**2) / (r2 * r2 * r)
    lat = kep + c * (1.0 - 5.0 * zr2)
    np.multiply(x, lat, out=out[3])
    np.multiply(yy, lat, out=out[4])
    np.multiply(z, lat + 2.0 * c, out=out[5])
    return out


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-12
    atol_pos: float = 1e-12
    atol_vel: float = 1e-15
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0
    max_steps: int = 10_000_000


def _rms(x: np.ndarray) -> np.ndarray:
    # explicit row sum keeps each column's result independent of the batch layout
    acc = x[0] * x[0]
    for row in x[1:]:
        acc = acc + row * row
    return np.sqrt(acc / x.shape[0])


def _initial_step(y, f0, dt, fm, scale):
    d0 = _rms(y / scale)
    d1 = _rms(f0 / scale)
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    h0 = np.minimum(h0, abs(dt))
    f1 = _derivative(y + h0 * f0, fm)
    d2 = _rms((f1 - f0) / scale) / h0
    dmax = np.maximum(d1, d2)
    h1 = np.where(dmax <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.maximum(dmax, 1e-300)) ** 0.2)
    return np.minimum(100 * h0, h1)


def propagate_batch(states, dt: float, fm: ForceModel = ForceModel(), opts: IntegratorOptions = IntegratorOptions(),
                    return_stats: bool = False):
    """Integrate an (N, 6) ensemble forward by dt seconds.

    Each member has its own adaptive step (Dormand-Prince 5(4), PI control),
    so results do not depend on which other members share the batch.
    """
    y0 = np.asarray(states, dtype=float)
    single = y0.ndim == 1
    y = np.array(np.atleast_2d(y0).T, order="C")  # (6, N)
    n = y.shape[1]
    if dt == 0 or n == 0:
        return y0.copy()
    if dt < 0:
        raise DomainError("backward propagation is not supported")
    atol = np.array([opts.atol_pos] * 3 + [opts.atol_vel] * 3)[:, None]
    t = np.zeros(n)
    f = _derivative(y, fm)
    h = _initial_step(y, f, dt, fm, atol + opts.rtol * np.abs(y))
    err_prev = np.ones(n)
    steps = np.zeros(n, dtype=int)
    rejected = np.zeros(n, dtype=int)
    active = np.arange(n)
    alpha, beta = 0.7 / 5.0, 0.4 / 5.0
    for _ in range(opts.max_steps):
        if active.size == 0:
            break
        full = active.size == n
        ya = y if full else y[:, active]
        fa = f if full else f[:, active]
        ta = t if full else t[active]
        ha = np.minimum(h if full else h[active], dt - ta)
        ks = [fa]
        for s in range(1, 7):
            incr = None
            for j, coef in enumerate(_A[s]):
                if coef != 0.0:
                    incr = coef * ks[j] if incr is None else incr + coef * ks[j]
            ks.append(_derivative(ya + ha * incr, fm))
        # the last stage is evaluated at the 5th-order solution (FSAL)
        incr = None
        for j in range(6):
            if _A[6][j] != 0.0:
                incr = _A[6][j] * ks[j] if incr is None else incr + _A[6][j] * ks[j]
        y_new = ya + ha * incr
        err_vec = None
        for j in range(7):
            if _E[j] != 0.0:
                err_vec = _E[j] * ks[j] if err_vec is None else err_vec + _E[j] * ks[j]
        err_vec *= ha
        scale = atol + opts.rtol * np.maximum(np.abs(ya), np.abs(y_new))
        err = _rms(err_vec / scale)
        ok = err <= 1.0
        safe_err = np.maximum(err, 1e-10)
        ep = err_prev if full else err_prev[active]
        factor = np.where(ok, np.clip(opts.safety * safe_err ** (-alpha) * ep**beta, opts.min_factor, opts.max_factor),
                          np.clip(opts.safety * safe_err ** (-0.2), opts.min_factor, 1.0))
        acc = active[ok]
        y[:, acc] = y_new[:, ok]
        f[:, acc] = ks[6][:, ok]
        t[acc] = np.where(ha[ok] >= dt - ta[ok], dt, ta[ok] + ha[ok])
        err_prev[acc] = safe_err[ok]
        steps[acc] += 1
        rejected[active[~ok]] += 1
        h_new = ha * factor
        h[active] = h_new
        bad = (~ok) & (h_new < 1e-10 * max(dt, 1.0))
        if np.any(bad):
            member = active[bad][0]
            raise PropagationError(f"step size underflow for member {member} at t = {t[member]!r} s")
        active = active[t[active] < dt]
    else:
        raise PropagationError("maximum step count exceeded")
    out = y[:, 0].copy() if single else np.ascontiguousarray(y.T)
    if return_stats:
        return out, {"steps": steps, "rejected": rejected}
    return out


def propagate_cartesian(cs: CartesianState, fm: ForceModel = ForceModel(), t_span=(0.0, 0.0),
                        opts: IntegratorOptions = IntegratorOptions()) -> CartesianState:
    dt = float(t_span[1] - t_span[0])
    return CartesianState.from_array(propagate_batch(cs.to_array(), dt, fm, opts))


def propagate_equinoctial_batch(elems, dt: float, fm: ForceModel = ForceModel(),
                                opts: IntegratorOptions = IntegratorOptions()) -> np.ndarray:
    """Equinoctial -> Cartesian -> integrate -> equinoctial for an (N, 6) ensemble."""
    elems = np.asarray(elems, dtype=float)
    if dt == 0:
        out = elems.copy()
        out[..., 5] = canonicalize(out[..., 5])
        return out
    cart = equinoctial_to_cartesian_array(elems, fm.mu)
    return cartesian_to_equinoctial_array(propagate_batch(cart, dt, fm, opts), fm.mu)


def propagate_equinoctial(eq: EquinoctialState, fm: ForceModel = ForceModel(), dt: float = 0.0,
                          opts: IntegratorOptions = IntegratorOptions()) -> EquinoctialState:
    return EquinoctialState.from_array(propagate_equinoctial_batch(eq.to_array(), dt, fm, opts))

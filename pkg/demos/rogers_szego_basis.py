"""Rogers-Szego basis for a wrapped normal input: Verblunsky coefficients, Gram check, and a 1-D fit."""

import math

import numpy as np

from circpce.circular import CharacteristicSequence, WrappedNormalParams
from circpce.expansion import fit_pce, total_degree_set, trig_moments_pce
from circpce.opuc import RogersSzego, circle_quadrature, density_weights, rs_verblunsky, verblunsky_from_char

dens = WrappedNormalParams(mu=0.4, sigma2=0.5)
q = math.exp(-dens.sigma2)

# analytic vs numeric (Levinson) Verblunsky coefficients of the centered density
numeric = verblunsky_from_char(CharacteristicSequence.wrapped_normal(dens).rotated(dens.mu), 6).eta
print("n  analytic eta      numeric eta")
for n, eta in enumerate(numeric):
    print(f"{n}  {rs_verblunsky(n, q):+.12f}  {eta.real:+.12f}")

basis = RogersSzego.from_density(dens, 6)
quad = circle_quadrature(20_000)
psi = basis.evaluate(quad.nodes)
gram = psi.conj().T @ (density_weights(dens, quad)[:, None] * psi)
print("max |Gram - I| =", np.max(np.abs(gram - np.eye(7))))

# identity response u = exp(i lambda): the surrogate moments reproduce the input ones
rng = np.random.default_rng(1)
lam = dens.sample(rng, 60)[:, None]
u = np.exp(1j * lam[:, 0])
fit = fit_pce(lam, u, (basis,), total_degree_set(6, 1))
phi1, phi2 = trig_moments_pce(fit)
print("phi1 from surrogate", phi1, "exact", dens.char(1))
print("phi2 from surrogate", phi2, "exact", dens.char(2))

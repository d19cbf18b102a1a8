"""Intrusive (Galerkin) PCE for du/dt = -exp(i xi) u with a von Mises input."""

from circpce.circular import CharacteristicSequence, VonMisesParams, fit_wnd_to_char
from circpce.galerkin import DecayProblem, convergence_experiment, reference_moments

for dens in (VonMisesParams(0.0, 20.0), fit_wnd_to_char(CharacteristicSequence.von_mises(VonMisesParams(0.0, 20.0)))):
    prob = DecayProblem(dens)
    mean, var = reference_moments(prob, 1000)
    print(f"{dens}: reference mean {mean:.10f}, variance {var:.8e}")
    for p, e_mean, e_var, _ in convergence_experiment(prob, p_range=range(1, 11), n_triple_nodes=20_000):
        print(f"  p={p:2d}  eps_mean={e_mean:.2e}  eps_var={e_var:.2e}")

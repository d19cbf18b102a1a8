import json

import numpy as np
import pytest

from circpce.circular import VonMisesParams, WrappedNormalParams
from circpce.errors import DomainError
from circpce.expansion import fit_pce, total_degree_set
from circpce.opuc import NormalizedHermite, NumericOpuc, RogersSzego
from circpce.serialize import load_surrogate, save_surrogate, surrogate_from_dict, surrogate_to_dict
from circpce.sr import SrOptions, fit_sr


@pytest.fixture
def mixed_data():
    rng = np.random.default_rng(0)
    bases = (RogersSzego.from_density(WrappedNormalParams(0.3, 0.4), 3),
             NumericOpuc.from_density(VonMisesParams(-1.0, 5.0), 3), NormalizedHermite(10.0, 2.0, 3))
    xi = np.column_stack([bases[0].density.sample(rng, 80), bases[1].density.sample(rng, 80),
                          10 + 2 * rng.standard_normal(80)])
    u = np.exp(1j * (xi[:, 0] + xi[:, 1])) * xi[:, 2]
    return bases, xi, u


def test_pce_round_trip_is_bit_exact(tmp_path, mixed_data):
    bases, xi, u = mixed_data
    fit = fit_pce(xi, np.column_stack([u, u.real]), bases, total_degree_set(3, 3))
    fit.qoi_names = ["u", "re"]
    path = tmp_path / "pce.json"
    save_surrogate(fit, path)
    back = load_surrogate(path)
    assert np.array_equal(back.coeffs, fit.coeffs)
    assert np.array_equal(back.index_set.indices, fit.index_set.indices)
    assert np.array_equal(back(xi), fit(xi))
    assert back.qoi_names == ["u", "re"]
    assert json.loads(path.read_text())["kind"] == "pce"


def test_sr_round_trip_is_bit_exact(tmp_path, mixed_data):
    bases, xi, u = mixed_data
    fit = fit_sr(xi, u, bases, 2, 3, SrOptions(seed=4, max_sweeps=10))
    path = tmp_path / "sr.json"
    save_surrogate(fit, path)
    back = load_surrogate(path)
    assert np.array_equal(back.factors, fit.factors)
    assert np.array_equal(back.weights, fit.weights)
    assert np.array_equal(back(xi), fit(xi))
    assert back.sweeps == fit.sweeps


def test_unknown_payloads_rejected():
    with pytest.raises(TypeError):
        surrogate_to_dict(object())
    with pytest.raises(DomainError):
        surrogate_from_dict({"kind": "spline", "bases": []})

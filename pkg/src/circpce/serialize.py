"""JSON envelopes for fitted surrogates.

Python's float repr is the shortest string that round-trips, so writing
floats through ``json`` is bit-exact for finite doubles. Complex numbers are
stored as ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DomainError
from .expansion import MultiIndexSet, PceSurrogate
from .opuc import basis_from_dict
from .sr import SrSurrogate

FORMAT_VERSION = 1


def _cplx(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _uncplx(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def surrogate_to_dict(surrogate) -> dict:
    if isinstance(surrogate, PceSurrogate):
        return {
            "kind": "pce",
            "version": FORMAT_VERSION,
            "p": surrogate.index_set.p,
            "d": surrogate.index_set.d,
            "indices": surrogate.index_set.indices.tolist(),
            "bases": [b.to_dict() for b in surrogate.bases],
            "coeffs": _cplx(surrogate.coeffs),
            "residual_rms": None if surrogate.residual_rms is None else np.asarray(surrogate.residual_rms).tolist(),
            "qoi_names": surrogate.qoi_names,
        }
    if isinstance(surrogate, SrSurrogate):
        return {
            "kind": "sr",
            "version": FORMAT_VERSION,
            "bases": [b.to_dict() for b in surrogate.bases],
            "weights": surrogate.weights.tolist(),
            "factors": _cplx(surrogate.factors),
            "converged": surrogate.converged,
            "sweeps": surrogate.sweeps,
        }
    raise TypeError(f"cannot serialize {type(surrogate).__name__}")


def surrogate_from_dict(d: dict):
    kind = d.get("kind")
    bases = tuple(basis_from_dict(b) for b in d["bases"])
    if kind == "pce":
        idx = np.asarray(d["indices"], dtype=int).reshape(-1, d["d"])
        rms = d.get("residual_rms")
        return PceSurrogate(
            _uncplx(d["coeffs"]).reshape(idx.shape[0], -1),
            bases,
            MultiIndexSet(d["p"], d["d"], idx),
            None if rms is None else np.asarray(rms),
            d.get("qoi_names"),
        )
    if kind == "sr":
        return SrSurrogate(
            np.asarray(d["weights"], dtype=float),
            _uncplx(d["factors"]),
            bases,
            converged=d.get("converged", True),
            sweeps=d.get("sweeps", 0),
        )
    raise DomainError(f"unknown surrogate kind {kind!r}")


def save_surrogate(surrogate, path) -> None:
    Path(path).write_text(json.dumps(surrogate_to_dict(surrogate), indent=1))


def load_surrogate(path):
    return surrogate_from_dict(json.loads(Path(path).read_text()))

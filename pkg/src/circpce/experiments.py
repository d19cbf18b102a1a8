"""Experiment configurations, runners and result tables behind the CLI."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .astro import ForceModel, IntegratorOptions, mean_longitude_twobody, orbital_period, propagate_equinoctial_batch
from .circular import (
    CharacteristicSequence,
    VonMisesParams,
    WrappedNormalParams,
    canonicalize,
    circular_mean_std,
    fit_wnd_to_char,
    sample_vmd,
    sample_wnd,
    summary_from_phi1,
)
from .errors import CircPceError, DomainError
from .expansion import (
    circular_stats_pce,
    fit_pce,
    mass_fraction,
    real_stats_pce,
    rms_validation,
    total_degree_set,
)
from .galerkin import DecayProblem, convergence_experiment, reference_moments
from .opuc import NormalizedHermite, NumericOpuc, RogersSzego, basis_for_density, circle_quadrature, density_weights
from .sr import SrOptions, circular_stats_sr, fit_sr

log = logging.getLogger(__name__)

DEG = math.pi / 180.0

# a [km], h, k, p, q, lambda [deg]
ORBIT_MEAN = (7444.0, -7.071e-2, 7.071e-2, 7.071e-1, 7.071e-1, 33.59)
ORBIT_STD = (20.0, 1e-3, 1e-3, 1e-3, 1e-3)
ELEMENT_NAMES = ("a", "h", "k", "p", "q", "lambda")

STREAM_TRAIN, STREAM_HOLDOUT, STREAM_MC, STREAM_SR = 0, 1, 2, 3


class ConfigError(CircPceError, ValueError):
    """Invalid experiment configuration."""


def substream(seed: int, stream: int, block: int = 0) -> np.random.Generator:
    """Independent generator for (seed, stream, block); reproducible in any order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, block)))


# --- configs ---


@dataclass
class OpucCheckConfig:
    kappas: list = field(default_factory=lambda: [1.0, 5.0, 10.0, 20.0, 50.0])
    max_degree: int = 8
    n_nodes: int = 100_000
    rs_sigma2: list = field(default_factory=lambda: [0.05, 1.0, 4.0])
    output: str = "results/opuc-check"


@dataclass
class DecayConfig:
    cases: list = field(default_factory=lambda: ["vm-concentrated", "wn-concentrated", "vm-diffuse", "wn-diffuse"])
    kappa_concentrated: float = 20.0
    kappa_diffuse: float = 1.0
    p_min: int = 1
    p_max: int = 10
    t_final: float = 1.0
    step: float = 1e-3
    u0: float = 1.0
    n_ref_nodes: int = 1000
    n_triple_nodes: int = 100_000
    n_fit: int = 20
    output: str = "results/decay"


@dataclass
class LambdaOnlyConfig:
    seed: int | None = None
    p: int = 10
    m: int = 250
    t_hours: float = 35.0
    sigma_lambda_deg: float = 1e-2
    n_mc: int = 10_000_000
    n_holdout: int = 1_000_000
    n_surrogate_samples: int = 1_000_000
    sr_rank: int = 2
    sr_tol: float = 1e-8
    sr_max_sweeps: int = 200
    sweep_hours: list = field(default_factory=list)
    sweep_n_mc: int = 1_000_000
    sweep_n_holdout: int = 100_000
    prior_mean: list = field(default_factory=lambda: list(ORBIT_MEAN))
    prior_std: list = field(default_factory=lambda: list(ORBIT_STD))
    mu: float = ForceModel.mu
    block: int = 1_000_000
    output: str = "results/orbit-lambda-only"


@dataclass
class SmaOnlyConfig:
    seed: int | None = None
    p_max: int = 10
    m: int = 40
    sigma_lambda_deg: float = 5.0
    n_periods: float = 10.0
    n_mc: int = 100_000
    n_holdout: int = 10_000
    prior_mean: list = field(default_factory=lambda: list(ORBIT_MEAN))
    mu: float = ForceModel.mu
    j2: float = ForceModel.j2
    r_earth: float = ForceModel.r_earth
    rtol: float = 1e-12
    block: int = 10_000
    hist_bins: int = 60
    output: str = "results/orbit-sma-only"


@dataclass
class FullConfig:
    seed: int | None = None
    case: str = "A"
    a_sigma_lambda_deg: float = 1e-2
    a_p: int = 6
    a_m: int = 2000
    a_t_hours: float = 36.0
    b_kappa: float = 30.0
    b_p: int = 5
    b_m: int = 2000
    b_t_hours: float = 24.0
    n_mc: int = 100_000
    n_holdout: int = 10_000
    prior_mean: list = field(default_factory=lambda: list(ORBIT_MEAN))
    prior_std: list = field(default_factory=lambda: list(ORBIT_STD))
    mu: float = ForceModel.mu
    j2: float = ForceModel.j2
    r_earth: float = ForceModel.r_earth
    rtol: float = 1e-12
    block: int = 10_000
    hist_bins: int = 60
    output: str = "results/orbit-full"


@dataclass
class SampleConfig:
    seed: int | None = None
    density: str = "wnd"
    mu_deg: float = 0.0
    sigma2: float = 1.0
    kappa: float = 1.0
    n: int = 1000
    output: str = "results/samples.csv"


CONFIGS = {
    "opuc-check": OpucCheckConfig,
    "decay": DecayConfig,
    "orbit-lambda-only": LambdaOnlyConfig,
    "orbit-sma-only": SmaOnlyConfig,
    "orbit-full": FullConfig,
    "sample": SampleConfig,
}
STOCHASTIC = {"orbit-lambda-only", "orbit-sma-only", "orbit-full", "sample"}


def build_config(experiment: str, data: dict | None = None, overrides: dict | None = None):
    """Validated config from a JSON object plus CLI overrides; unknown keys are rejected."""
    if experiment not in CONFIGS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cls = CONFIGS[experiment]
    merged = dict(data or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    merged.pop("experiment", None)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(merged) - names)
    if unknown:
        raise ConfigError(f"unknown config fields for {experiment}: {', '.join(unknown)}")
    cfg = cls(**merged)
    _validate(experiment, cfg)
    return cfg


def _validate(experiment, cfg):
    if experiment in STOCHASTIC:
        if cfg.seed is None:
            raise ConfigError("a seed is required for stochastic experiments")
        if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
            raise ConfigError("seed must be a 64-bit non-negative integer")
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in ("p", "p_max", "max_degree", "a_p", "b_p") and (not isinstance(v, int) or v < 0):
            raise ConfigError(f"{f.name} must be a non-negative integer")
        if f.name.startswith("n_") and f.name != "n_periods" and (not isinstance(v, int) or v < 0):
            raise ConfigError(f"{f.name} must be a non-negative integer")
    if experiment == "orbit-full" and cfg.case not in ("A", "B", "all"):
        raise ConfigError("case must be A, B or all")
    if experiment == "sample" and cfg.density not in ("wnd", "vmd"):
        raise ConfigError("density must be wnd or vmd")


def config_hash(cfg) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# --- result tables ---


@dataclass
class ResultTable:
    name: str
    columns: dict

    def __post_init__(self):
        lengths = {len(np.atleast_1d(v)) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DomainError(f"ragged columns in table {self.name}")

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def header(self) -> list[str]:
        out = []
        for name, col in self.columns.items():
            if np.iscomplexobj(np.asarray(col)):
                out += [f"{name}_re", f"{name}_im"]
            else:
                out.append(name)
        return out

    def rows(self):
        cols = [np.asarray(c) for c in self.columns.values()]
        for i in range(len(self)):
            row = []
            for col in cols:
                v = col[i]
                if np.iscomplexobj(col):
                    row += [repr(float(v.real)), repr(float(v.imag))]
                elif isinstance(v, (np.floating, float)):
                    row.append(repr(float(v)))
                else:
                    row.append(str(v.item() if hasattr(v, "item") else v))
            yield row

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            writer.writerows(self.rows())


@dataclass
class ExperimentResult:
    experiment: str
    config: object
    tables: dict
    summary: dict
    checks: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def metadata(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": dataclasses.asdict(self.config),
            "config_hash": config_hash(self.config),
            "seed": getattr(self.config, "seed", None),
            "versions": {
                "circpce": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "summary": _jsonable(self.summary),
            "checks": _jsonable(self.checks),
            "wall_time": self.wall_time,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for table in self.tables.values():
            table.write_csv(out / f"{table.name}.csv")
        (out / "metadata.json").write_text(json.dumps(self.metadata(), indent=1, sort_keys=True))
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _timed(fn):
    def wrapper(cfg):
        start = time.perf_counter()
        result = fn(cfg)
        result.wall_time = time.perf_counter() - start
        return result

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def rel_error(x, ref) -> float:
    return abs((x - ref) / ref)


def signed_rel(x, ref) -> float:
    return (x - ref) / ref


# --- OPUC stability ---


def orthogonality_errors(basis, density, max_degree: int, n_nodes: int) -> np.ndarray:
    """|sum w rho conj(psi_n) psi_{n+1}| for n = 0..max_degree-1."""
    quad = circle_quadrature(n_nodes)
    w = density_weights(density, quad)
    psi = basis.evaluate(quad.nodes, max_degree)
    return np.abs(np.einsum("j,jn,jn->n", w, np.conj(psi[:, :-1]), psi[:, 1:]))


@_timed
def run_opuc_check(cfg: OpucCheckConfig) -> ExperimentResult:
    family, param, degree, err = [], [], [], []
    for kappa in cfg.kappas:
        dens = VonMisesParams(0.0, kappa)
        basis = NumericOpuc.from_density(dens, cfg.max_degree + 1)
        e = orthogonality_errors(basis, dens, cfg.max_degree + 1, cfg.n_nodes)
        for n in range(cfg.max_degree + 1):
            family.append("vmd-numeric")
            param.append(float(kappa))
            degree.append(n)
            err.append(e[n])
    for s2 in cfg.rs_sigma2:
        dens = WrappedNormalParams(0.0, s2)
        basis = RogersSzego.from_density(dens, cfg.max_degree + 1)
        e = orthogonality_errors(basis, dens, cfg.max_degree + 1, cfg.n_nodes)
        for n in range(cfg.max_degree + 1):
            family.append("rogers-szego")
            param.append(float(math.exp(-s2)))
            degree.append(n)
            err.append(e[n])
    table = ResultTable("orthogonality", {
        "family": np.array(family), "parameter": np.array(param), "n": np.array(degree), "abs_inner": np.array(err),
    })
    err = np.array(err)
    fam = np.array(family)
    par, deg = np.array(param), np.array(degree)
    checks = {"rogers_szego_below_1e-10": bool(np.all(err[fam == "rogers-szego"] < 1e-10))}
    vm = fam == "vmd-numeric"
    if 1.0 in cfg.kappas:
        checks["vmd_kappa1_below_1e-8_for_n_le_5"] = bool(np.all(err[vm & (par == 1.0) & (deg <= 5)] < 1e-8))
    if len(cfg.kappas) > 1 and cfg.max_degree >= 5:
        at5 = err[vm & (deg == 5)]
        checks["vmd_error_grows_with_kappa_at_n5"] = bool(at5[-1] > at5[0] and np.polyfit(np.log(par[vm & (deg == 5)]), np.log(at5), 1)[0] > 0)
    return ExperimentResult("opuc-check", cfg, {"orthogonality": table}, {}, checks)


# --- decay ODE ---


def decay_density(case: str, cfg: DecayConfig):
    kappa = cfg.kappa_concentrated if case.endswith("concentrated") else cfg.kappa_diffuse
    vm = VonMisesParams(0.0, kappa)
    if case.startswith("vm"):
        return vm
    if case.startswith("wn"):
        return fit_wnd_to_char(CharacteristicSequence.von_mises(vm), cfg.n_fit)
    raise ConfigError(f"unknown decay case {case!r}")


@_timed
def run_decay(cfg: DecayConfig) -> ExperimentResult:
    conv_rows, ref_cols = [], {"density_case": [], "density": [], "parameter": [], "mu_u": [], "var_u": []}
    summary = {}
    for case in cfg.cases:
        dens = decay_density(case, cfg)
        problem = DecayProblem(dens, cfg.u0, cfg.t_final, cfg.step)
        mean, var = reference_moments(problem, cfg.n_ref_nodes)
        ref_cols["density_case"].append(case)
        ref_cols["density"].append("vmd" if isinstance(dens, VonMisesParams) else "wnd")
        ref_cols["parameter"].append(dens.kappa if isinstance(dens, VonMisesParams) else dens.sigma2)
        ref_cols["mu_u"].append(mean)
        ref_cols["var_u"].append(var)
        rows = convergence_experiment(problem, None, range(cfg.p_min, cfg.p_max + 1), cfg.n_ref_nodes,
                                      cfg.n_triple_nodes, case)
        conv_rows += rows
        summary[case] = {"mu_u": mean, "var_u": var, "eps_at_pmax": rows[-1][1:3]}
    conv = ResultTable("convergence", {
        "p": np.array([r[0] for r in conv_rows]),
        "eps_mean": np.array([r[1] for r in conv_rows]),
        "eps_var": np.array([r[2] for r in conv_rows]),
        "density_case": np.array([r[3] for r in conv_rows]),
    })
    refs = ResultTable("reference", {k: np.array(v) for k, v in ref_cols.items()})
    checks = {}
    for case in cfg.cases:
        sel = [r for r in conv_rows if r[3] == case and r[0] == 8]
        if sel:
            checks[f"{case}_eps_below_1e-6_at_p8"] = bool(sel[0][1] < 1e-6 and sel[0][2] < 1e-6)
    return ExperimentResult("decay", cfg, {"convergence": conv, "reference": refs}, summary, checks)


# --- orbit helpers ---


def _force(cfg) -> ForceModel:
    return ForceModel(cfg.mu, getattr(cfg, "j2", ForceModel.j2), getattr(cfg, "r_earth", ForceModel.r_earth))


def circular_stats_of(angles):
    s = circular_mean_std(angles)
    return s.mean_direction, s.circular_std


# --- lambda-only case ---


def _lambda_inputs(cfg: LambdaOnlyConfig, rng, n: int) -> np.ndarray:
    a = cfg.prior_mean[0] + cfg.prior_std[0] * rng.standard_normal(n)
    lam = cfg.prior_mean[5] * DEG + cfg.sigma_lambda_deg * DEG * rng.standard_normal(n)
    return np.column_stack([a, lam])


def _lambda_qoi(cfg, xi, t_hours):
    return mean_longitude_twobody(xi[:, 1], xi[:, 0], t_hours * 3600.0, cfg.mu)


def lambda_only_bases(cfg: LambdaOnlyConfig):
    herm_a = NormalizedHermite(cfg.prior_mean[0], cfg.prior_std[0], cfg.p)
    lam0, sig = cfg.prior_mean[5] * DEG, cfg.sigma_lambda_deg * DEG
    herm_l = NormalizedHermite(lam0, sig, cfg.p)
    rs = RogersSzego.from_density(WrappedNormalParams(lam0, sig * sig), cfg.p)
    return herm_a, herm_l, rs


def _lambda_mc(cfg, t_hours, n_mc, surrogates=()):
    """Monte Carlo phi1 of lambda(t) plus circular stats of surrogate angle samples.

    ``surrogates`` are evaluated on the first ``n_surrogate_samples`` MC inputs.
    """
    block_sums = []
    sur_sums = [[] for _ in surrogates]
    n_sur = min(cfg.n_surrogate_samples, n_mc)
    done = 0
    block = 0
    while done < n_mc:
        size = min(cfg.block, n_mc - done)
        xi = _lambda_inputs(cfg, substream(cfg.seed, STREAM_MC, block), size)
        lam = _lambda_qoi(cfg, xi, t_hours)
        block_sums.append(np.exp(1j * lam).sum())
        if done < n_sur:
            take = min(size, n_sur - done)
            for i, s in enumerate(surrogates):
                est = np.real(s(xi[:take])[:, 0])
                sur_sums[i].append(np.exp(1j * est).sum())
        done += size
        block += 1
    phi1 = complex(math.fsum(b.real for b in block_sums), math.fsum(b.imag for b in block_sums)) / n_mc
    sur_phi = [complex(math.fsum(v.real for v in s), math.fsum(v.imag for v in s)) / n_sur for s in sur_sums]
    return phi1, sur_phi


def lambda_only_exact_phi1(cfg: LambdaOnlyConfig, t_hours: float, n_nodes: int = 200) -> complex:
    """E[exp(i lambda(t))] by Gauss-Hermite quadrature over a.

    lambda(t) = lambda0 + n(a) t with independent Gaussian lambda0, so the
    lambda0 factor is the wrapped normal phi_1 and only the a integral is numeric.
    """
    x, w = np.polynomial.hermite_e.hermegauss(n_nodes)
    a = cfg.prior_mean[0] + cfg.prior_std[0] * x
    sig = cfg.sigma_lambda_deg * DEG
    phase = np.exp(1j * (cfg.prior_mean[5] * DEG + np.sqrt(cfg.mu / a**3) * t_hours * 3600.0))
    return complex(np.sum(w * phase) / math.sqrt(2.0 * math.pi) * math.exp(-0.5 * sig * sig))


def _fit_lambda_variants(cfg, xi_train, t_hours, bases):
    herm_a, herm_l, rs = bases
    ix = total_degree_set(cfg.p, 2)
    lam_t = _lambda_qoi(cfg, xi_train, t_hours)
    z_t = np.exp(1j * lam_t)
    sr_opts = SrOptions(cfg.sr_tol, cfg.sr_max_sweeps, seed=int(substream(cfg.seed, STREAM_SR).integers(2**32)))
    return {
        "pce-hermite-lambda": fit_pce(xi_train, lam_t, (herm_a, herm_l), ix),
        "pce-hermite-z": fit_pce(xi_train, z_t, (herm_a, herm_l), ix),
        "pce-rogers-szego-z": fit_pce(xi_train, z_t, (herm_a, rs), ix),
        "sr-hermite-z": fit_sr(xi_train, z_t, (herm_a, herm_l), cfg.sr_rank, cfg.p, sr_opts),
        "sr-rogers-szego-z": fit_sr(xi_train, z_t, (herm_a, rs), cfg.sr_rank, cfg.p, sr_opts),
    }


def _evaluate_lambda_variants(cfg, fits, t_hours, n_mc, n_holdout):
    angle_fits = {"pce-hermite-lambda": fits["pce-hermite-lambda"]}
    phi_mc, sur_phi = _lambda_mc(cfg, t_hours, n_mc, tuple(angle_fits.values()))
    mc = summary_from_phi1(phi_mc)
    xi_h = _lambda_inputs(cfg, substream(cfg.seed, STREAM_HOLDOUT), n_holdout)
    lam_h = _lambda_qoi(cfg, xi_h, t_hours)
    z_h = np.exp(1j * lam_h)
    out = {}
    for name, fit in fits.items():
        if name == "pce-hermite-lambda":
            stats = summary_from_phi1(sur_phi[0])
            rms = rms_validation(fit, xi_h, lam_h, "angle")[0]
        elif name.startswith("pce"):
            stats = circular_stats_pce(fit)
            rms = rms_validation(fit, xi_h, z_h, "circle")[0]
        else:
            stats = circular_stats_sr(fit)
            rms = rms_validation(fit, xi_h, z_h, "circle")[0]
        out[name] = {
            "mean_deg": stats.mean_direction / DEG,
            "std_deg": stats.circular_std / DEG,
            "rel_error_mean": rel_error(stats.mean_direction, mc.mean_direction),
            "rel_error_std": rel_error(stats.circular_std, mc.circular_std),
            "rms_deg": rms,
        }
    return mc, out


@_timed
def run_orbit_lambda_only(cfg: LambdaOnlyConfig) -> ExperimentResult:
    """Two-body lambda-only case: three PCE and two SR surrogates against Monte Carlo."""
    bases = lambda_only_bases(cfg)
    xi_train = _lambda_inputs(cfg, substream(cfg.seed, STREAM_TRAIN), cfg.m)
    fits = _fit_lambda_variants(cfg, xi_train, cfg.t_hours, bases)
    mc, perf = _evaluate_lambda_variants(cfg, fits, cfg.t_hours, cfg.n_mc, cfg.n_holdout)
    names = list(perf)
    table = ResultTable("performance", {
        "variant": np.array(names),
        "mean_deg": np.array([perf[n]["mean_deg"] for n in names]),
        "std_deg": np.array([perf[n]["std_deg"] for n in names]),
        "rel_error_mean": np.array([perf[n]["rel_error_mean"] for n in names]),
        "rel_error_std": np.array([perf[n]["rel_error_std"] for n in names]),
        "rms_deg": np.array([perf[n]["rms_deg"] for n in names]),
    })
    coef_cols = {"variant": [], "alpha_a": [], "alpha_lambda": [], "abs_c": []}
    for name in ("pce-hermite-lambda", "pce-hermite-z", "pce-rogers-szego-z"):
        fit = fits[name]
        for alpha, c in zip(fit.index_set.indices, np.abs(fit.coeffs[:, 0])):
            coef_cols["variant"].append(name)
            coef_cols["alpha_a"].append(int(alpha[0]))
            coef_cols["alpha_lambda"].append(int(alpha[1]))
            coef_cols["abs_c"].append(float(c))
    tables = {
        "performance": table,
        "coefficients": ResultTable("coefficients", {k: np.array(v) for k, v in coef_cols.items()}),
    }
    if cfg.sweep_hours:
        rows = {"t_hours": [], "variant": [], "rel_error_mean": [], "rel_error_std": [], "rms_deg": []}
        for t in cfg.sweep_hours:
            fits_t = _fit_lambda_variants(cfg, xi_train, t, bases)
            _, perf_t = _evaluate_lambda_variants(cfg, fits_t, t, cfg.sweep_n_mc, cfg.sweep_n_holdout)
            for name, vals in perf_t.items():
                rows["t_hours"].append(float(t))
                rows["variant"].append(name)
                for key in ("rel_error_mean", "rel_error_std", "rms_deg"):
                    rows[key].append(vals[key])
        tables["sweep"] = ResultTable("sweep", {k: np.array(v) for k, v in rows.items()})
    exact = summary_from_phi1(lambda_only_exact_phi1(cfg, cfg.t_hours))
    for name, fit in fits.items():
        if name.endswith("-z"):
            st = circular_stats_pce(fit) if name.startswith("pce") else circular_stats_sr(fit)
            perf[name]["rel_error_mean_exact"] = rel_error(st.mean_direction, exact.mean_direction)
            perf[name]["rel_error_std_exact"] = rel_error(st.circular_std, exact.circular_std)
    summary = {
        "mc_mean_deg": mc.mean_direction / DEG,
        "mc_std_deg": mc.circular_std / DEG,
        "exact_mean_deg": exact.mean_direction / DEG,
        "exact_std_deg": exact.circular_std / DEG,
        "variants": perf,
    }
    z_names = [n for n in names if n.endswith("-z")]
    checks = {
        "z_variants_rel_mean_le_1e-4": all(perf[n]["rel_error_mean"] <= 1e-4 for n in z_names),
        "z_variants_rel_std_le_3e-4": all(perf[n]["rel_error_std"] <= 3e-4 for n in z_names),
        "hermite_lambda_rms_4_orders_above_z": bool(
            perf["pce-hermite-lambda"]["rms_deg"] >= 1e4 * max(perf[n]["rms_deg"] for n in z_names)),
    }
    return ExperimentResult("orbit-lambda-only", cfg, tables, summary, checks)


# --- J2 ensembles ---


def propagate_elements(elems: np.ndarray, dt: float, fm: ForceModel, rtol: float, block: int) -> np.ndarray:
    """Propagate (N, 6) equinoctial elements (lambda in radians) in fixed blocks."""
    opts = IntegratorOptions(rtol=rtol)
    out = np.empty_like(elems)
    for start in range(0, elems.shape[0], block):
        stop = start + block
        out[start:stop] = propagate_equinoctial_batch(elems[start:stop], dt, fm, opts)
        log.info("propagated %d / %d", min(stop, out.shape[0]), out.shape[0])
    return out


# --- sma-only case ---


def _sma_inputs(cfg: SmaOnlyConfig, rng, n: int) -> np.ndarray:
    lam0, sig = cfg.prior_mean[5] * DEG, cfg.sigma_lambda_deg * DEG
    return canonicalize(sample_wnd(rng, WrappedNormalParams(lam0, sig * sig), n))


def _sma_elements(cfg: SmaOnlyConfig, lam: np.ndarray) -> np.ndarray:
    el = np.tile(np.array(cfg.prior_mean, dtype=float), (lam.size, 1))
    el[:, 5] = lam
    return el


def _sma_propagate(cfg, lam, fm, dt):
    return propagate_elements(_sma_elements(cfg, lam), dt, fm, cfg.rtol, cfg.block)[:, 0]


@_timed
def run_orbit_sma_only(cfg: SmaOnlyConfig) -> ExperimentResult:
    """J2 case with uncertain lambda only; QOI is the semimajor axis."""
    fm = _force(cfg)
    dt = cfg.n_periods * float(orbital_period(cfg.prior_mean[0], cfg.mu))
    lam0, sig = cfg.prior_mean[5] * DEG, cfg.sigma_lambda_deg * DEG
    basis = RogersSzego.from_density(WrappedNormalParams(lam0, sig * sig), cfg.p_max)

    lam_train = _sma_inputs(cfg, substream(cfg.seed, STREAM_TRAIN), cfg.m)
    a_train = _sma_propagate(cfg, lam_train, fm, dt)
    lam_hold = _sma_inputs(cfg, substream(cfg.seed, STREAM_HOLDOUT), cfg.n_holdout)
    a_hold = _sma_propagate(cfg, lam_hold, fm, dt)
    mc_blocks = []
    for b, start in enumerate(range(0, cfg.n_mc, cfg.block)):
        size = min(cfg.block, cfg.n_mc - start)
        lam = _sma_inputs(cfg, substream(cfg.seed, STREAM_MC, b), size)
        mc_blocks.append(_sma_propagate(cfg, lam, fm, dt))
    a_mc = np.concatenate(mc_blocks) if mc_blocks else np.empty(0)
    mc_mean = float(np.mean(a_mc)) if a_mc.size else float("nan")
    mc_std = float(np.std(a_mc)) if a_mc.size else float("nan")

    rows = {k: [] for k in ("p", "mean_a", "std_a", "eps_mean_mc", "eps_std_mc", "eps_mean_pce", "eps_std_pce",
                            "rms_real", "rms_imag", "rms_abs")}
    stats = {}
    for p in range(1, cfg.p_max + 1):
        fit = fit_pce(lam_train[:, None], a_train, (basis,), total_degree_set(p, 1))
        mean, var = real_stats_pce(fit)
        stats[p] = (mean, math.sqrt(var))
        diff = fit(lam_hold[:, None])[:, 0] - a_hold
        rows["p"].append(p)
        rows["mean_a"].append(mean)
        rows["std_a"].append(math.sqrt(var))
        rows["eps_mean_mc"].append(rel_error(mean, mc_mean))
        rows["eps_std_mc"].append(rel_error(math.sqrt(var), mc_std))
        rows["rms_real"].append(math.sqrt(float(np.mean(diff.real**2))))
        rows["rms_imag"].append(math.sqrt(float(np.mean(diff.imag**2))))
        rows["rms_abs"].append(math.sqrt(float(np.mean(np.abs(diff) ** 2))))
    base_mean, base_std = stats[cfg.p_max]
    for p in range(1, cfg.p_max + 1):
        rows["eps_mean_pce"].append(rel_error(stats[p][0], base_mean))
        rows["eps_std_pce"].append(rel_error(stats[p][1], base_std))
    hist, edges = np.histogram(a_mc, bins=cfg.hist_bins, density=True) if a_mc.size else (np.zeros(0), np.zeros(1))
    tables = {
        "convergence": ResultTable("convergence", {k: np.array(v) for k, v in rows.items()}),
        "histogram_a": ResultTable("histogram_a", {"bin_lo": edges[:-1], "bin_hi": edges[1:], "density": hist}),
    }
    summary = {"mc_mean_a": mc_mean, "mc_std_a": mc_std, "dt_seconds": dt}
    eps = np.array(rows["eps_std_mc"])
    eps_pce = np.array(rows["eps_std_pce"])[:-1]
    checks = {}
    if eps.size >= 6:
        checks["std_a_within_5e-3_for_p_ge_6"] = bool(np.all(eps[5:] < 5e-3))
    if eps_pce.size >= 3:
        slope = np.polyfit(np.arange(1, eps_pce.size + 1), np.log10(eps_pce), 1)[0]
        checks["pce_baseline_error_drops_3_orders"] = bool(slope < 0 and eps_pce[0] / eps_pce[-1] >= 1e3)
        rms_im = np.array(rows["rms_imag"])
        checks["imag_rms_decays"] = bool(rms_im[-1] < rms_im[0] / 10)
    return ExperimentResult("orbit-sma-only", cfg, tables, summary, checks)


# --- full-state case ---


def full_case_specs(cfg: FullConfig) -> list[dict]:
    specs = []
    if cfg.case in ("A", "all"):
        sig = cfg.a_sigma_lambda_deg * DEG
        specs.append({"name": "A-wnd", "density": WrappedNormalParams(cfg.prior_mean[5] * DEG, sig * sig),
                      "p": cfg.a_p, "m": cfg.a_m, "t_hours": cfg.a_t_hours})
    if cfg.case in ("B", "all"):
        vm = VonMisesParams(cfg.prior_mean[5] * DEG, cfg.b_kappa)
        wn = fit_wnd_to_char(CharacteristicSequence.von_mises(vm))
        for name, dens in (("B-wnd", wn), ("B-vmd", vm)):
            specs.append({"name": name, "density": dens, "p": cfg.b_p, "m": cfg.b_m, "t_hours": cfg.b_t_hours})
    return specs


def _full_inputs(cfg: FullConfig, density, rng, n: int) -> np.ndarray:
    mean = np.array(cfg.prior_mean[:5], dtype=float)
    std = np.array(cfg.prior_std, dtype=float)
    gauss = mean + std * rng.standard_normal((n, 5))
    if isinstance(density, WrappedNormalParams):
        lam = sample_wnd(rng, density, n)
    else:
        lam = sample_vmd(rng, density, n)
    return np.column_stack([gauss, canonicalize(lam)])


def full_bases(cfg: FullConfig, density, p: int):
    herm = [NormalizedHermite(cfg.prior_mean[j], cfg.prior_std[j], p) for j in range(5)]
    return tuple(herm) + (basis_for_density(density, p),)


def _as_qoi(elems: np.ndarray) -> np.ndarray:
    """Five real elements plus z = exp(i lambda)."""
    out = elems.astype(complex)
    out[:, 5] = np.exp(1j * elems[:, 5])
    return out


@_timed
def run_orbit_full(cfg: FullConfig) -> ExperimentResult:
    """All six elements uncertain; J2 propagation; sigma of each element vs Monte Carlo."""
    fm = _force(cfg)
    tables, summary, checks = {}, {}, {}
    for ci, spec in enumerate(full_case_specs(cfg)):
        name, dens, p, dt = spec["name"], spec["density"], spec["p"], spec["t_hours"] * 3600.0
        log.info("case %s: p=%d M=%d t=%.1f h", name, p, spec["m"], spec["t_hours"])
        bases = full_bases(cfg, dens, p)
        ix = total_degree_set(p, 6)
        stream_off = 10 * ci
        xi_train = _full_inputs(cfg, dens, substream(cfg.seed, STREAM_TRAIN + stream_off), spec["m"])
        u_train = _as_qoi(propagate_elements(xi_train, dt, fm, cfg.rtol, cfg.block))
        fit = fit_pce(xi_train, u_train, bases, ix)
        fit.qoi_names = list(ELEMENT_NAMES)

        xi_hold = _full_inputs(cfg, dens, substream(cfg.seed, STREAM_HOLDOUT + stream_off), cfg.n_holdout)
        u_hold = _as_qoi(propagate_elements(xi_hold, dt, fm, cfg.rtol, cfg.block))
        rms = rms_validation(fit, xi_hold, u_hold, ["complex"] * 5 + ["circle"]) if cfg.n_holdout else np.full(6, np.nan)

        mc = []
        for b, start in enumerate(range(0, cfg.n_mc, cfg.block)):
            size = min(cfg.block, cfg.n_mc - start)
            xi = _full_inputs(cfg, dens, substream(cfg.seed, STREAM_MC + stream_off, b), size)
            mc.append(propagate_elements(xi, dt, fm, cfg.rtol, cfg.block))
        mc = np.concatenate(mc) if mc else np.empty((0, 6))

        sig_pce, sig_mc, rel = [], [], []
        for j in range(6):
            if j < 5:
                s_pce = math.sqrt(real_stats_pce(fit, j)[1])
                s_mc = float(np.std(mc[:, j])) if mc.size else float("nan")
            else:
                s_pce = circular_stats_pce(fit, 5).circular_std
                s_mc = circular_mean_std(mc[:, 5]).circular_std if mc.size else float("nan")
            sig_pce.append(s_pce)
            sig_mc.append(s_mc)
            rel.append(signed_rel(s_pce, s_mc))
        tables[f"{name}_sigma"] = ResultTable(f"{name}_sigma", {
            "element": np.array(ELEMENT_NAMES), "sigma_pce": np.array(sig_pce), "sigma_mc": np.array(sig_mc),
            "rel_error": np.array(rel), "rms": np.asarray(rms),
        })
        coef = {"element": [], **{f"alpha_{e}": [] for e in ELEMENT_NAMES}, "abs_c": []}
        fractions = {}
        for j, el in enumerate(ELEMENT_NAMES):
            fractions[el] = mass_fraction(fit.coeffs[:, j], 0.1)
            for alpha, c in zip(ix.indices, np.abs(fit.coeffs[:, j])):
                coef["element"].append(el)
                for k, e in enumerate(ELEMENT_NAMES):
                    coef[f"alpha_{e}"].append(int(alpha[k]))
                coef["abs_c"].append(float(c))
        tables[f"{name}_coefficients"] = ResultTable(f"{name}_coefficients", {k: np.array(v) for k, v in coef.items()})
        if mc.size:
            for j, el in ((0, "a"), (5, "lambda")):
                vals = mc[:, j] / (DEG if j == 5 else 1.0)
                hist, edges = np.histogram(vals, bins=cfg.hist_bins, density=True)
                tables[f"{name}_histogram_{el}"] = ResultTable(
                    f"{name}_histogram_{el}", {"bin_lo": edges[:-1], "bin_hi": edges[1:], "density": hist})
        summary[name] = {"sigma_pce": sig_pce, "sigma_mc": sig_mc, "rel_error": rel, "rms": rms,
                         "top10pct_mass_fraction": fractions, "density": repr(dens)}
        checks[f"{name}_sigma_within_1e-2"] = bool(np.all(np.abs(rel) < 1e-2))
        checks[f"{name}_sparse_90pct_in_10pct"] = bool(all(v >= 0.9 for v in fractions.values()))
    return ExperimentResult("orbit-full", cfg, tables, summary, checks)


# --- sampling ---


@_timed
def run_sample(cfg: SampleConfig) -> ExperimentResult:
    rng = substream(cfg.seed, STREAM_MC)
    mu = cfg.mu_deg * DEG
    if cfg.density == "wnd":
        vals = sample_wnd(rng, WrappedNormalParams(mu, cfg.sigma2), cfg.n)
    else:
        vals = sample_vmd(rng, VonMisesParams(mu, cfg.kappa), cfg.n)
    vals = canonicalize(np.asarray(vals, dtype=float))
    table = ResultTable("samples", {"lambda": vals})
    return ExperimentResult("sample", cfg, {"samples": table}, {"n": cfg.n})


RUNNERS = {
    "opuc-check": run_opuc_check,
    "decay": run_decay,
    "orbit-lambda-only": run_orbit_lambda_only,
    "orbit-sma-only": run_orbit_sma_only,
    "orbit-full": run_orbit_full,
    "sample": run_sample,
}

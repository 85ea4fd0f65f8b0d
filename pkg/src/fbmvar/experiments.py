"""Experiment orchestration: configs, replication, checks and JSON reports.

Every experiment is a pure function of its :class:`ExperimentConfig`.
Replication ``i`` draws its path from stream ``(master_seed, i)`` and its
limit-law Gaussian from a separate lane of the same stream. Replications are
processed in fixed chunks of :data:`CHUNK_SIZE`, and chunk results are
concatenated in index order. Changing the worker count therefore changes
nothing in the output.
"""

from __future__ import annotations

import copy
import datetime as _dt
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import jsonschema
import numpy as np
from scipy import stats as sps

from . import covariance as cv
from . import limits as lim
from . import stattests as st
from . import testfunctions as tf
from . import variations as var
from .errors import DomainError
from .paths import BIFRACTIONAL, FBM, Generator, simulate_batch

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CHUNK_SIZE = 500

EXPERIMENTS = (
    "constants",
    "simulate",
    "thm11",
    "thm12",
    "lemma42",
    "lemma43",
    "trapezoid",
    "scaling_regimes",
    "kernel_check",
    "lemma31_bounds",
)

DEFAULT_THRESHOLDS = {
    "ks_min_pvalue": st.KS_MIN_PVALUE,
    "ecf_max_distance": st.ECF_MAX_DISTANCE,
    "moment_sigmas": st.MOMENT_SIGMAS,
    "covariance_sigmas": 4.0,
    "constant_tolerance": 1e-3,
    "tail_bound_max": 1e-5,
    "lemma31_slack": 1e-12,
    "lemma31_sup_bound": 2.0,
    "lemma31_double_sum_factor": 2.0,
    "kernel_max_error": 1e-4,
    "cubic_max_second_moment": 0.02,
    "trapezoid_sin_max_median": 0.05,
    "variance_rel_tol": 0.15,
    "kurtosis_min": 0.3,
}

# Reference values the constants are checked against (decimal restored).
C14_ANCHOR = 1.535
KAPPA_ANCHOR = 1.290

CSV_COLUMNS = "kind,n,f_name,seed,index,value,reference"


@dataclass
class ExperimentConfig:
    experiment: str
    hurst: float = 0.25
    n: int = 512
    M: int = 5000
    f_names: list = field(default_factory=lambda: ["square"])
    master_seed: int = 42
    output_path: str | None = None
    thresholds: dict = field(default_factory=dict)
    workers: int = 1
    checks: list = field(default_factory=list)
    n_ladder: list = field(default_factory=list)
    hurst_grid: list = field(default_factory=list)
    model: str = "fbm"
    generator: str = "circulant"
    csv_path: str | None = None
    label: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise DomainError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if isinstance(self.f_names, str):
            self.f_names = [s for s in self.f_names.split(",") if s]
        self.f_names = [tf.get(name).name for name in self.f_names]
        if not 0 <= int(self.master_seed) < 2**64:
            raise DomainError("master_seed must be an unsigned 64-bit integer")
        if self.n < 1 or self.M < 1 or self.workers < 1:
            raise DomainError("n, M and workers must be positive")
        if self.model not in ("fbm", "bifractional"):
            raise DomainError(f"model must be 'fbm' or 'bifractional', got {self.model!r}")
        Generator(self.generator)
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise DomainError(f"unknown threshold keys: {sorted(unknown)}")
        self.thresholds = {**DEFAULT_THRESHOLDS, **self.thresholds}
        if self.label is None:
            self.label = self.experiment

    def as_dict(self) -> dict:
        return _plain(asdict(self))


# Presets encode the acceptance parameters. run-all executes them in order.
RUN_ALL_JOBS = [
    ("constants", {"experiment": "constants", "f_names": []}),
    ("lemma31_bounds", {"experiment": "lemma31_bounds", "f_names": [],
                        "n_ladder": [16, 64, 256, 1024, 4096]}),
    ("kernel_check", {"experiment": "kernel_check", "f_names": [], "n": 8,
                      "hurst_grid": [0.1, 0.25, 0.4]}),
    ("simulate_covariance", {"experiment": "simulate", "f_names": [], "n": 64, "M": 100_000,
                             "generator": "cholesky", "checks": ["covariance"]}),
    ("simulate_generators", {"experiment": "simulate", "f_names": [], "n": 1024, "M": 10_000,
                             "checks": ["generator_ks"]}),
    ("thm11_moments", {"experiment": "thm11", "f_names": ["square"], "n": 512, "M": 20_000,
                       "checks": ["moments"]}),
    ("thm11_law", {"experiment": "thm11", "f_names": ["identity", "sin"], "n": 512, "M": 5000,
                   "checks": ["ks", "ecf"]}),
    ("thm12_law", {"experiment": "thm12", "f_names": ["square", "sin"], "n": 512, "M": 5000,
                   "checks": ["ks"]}),
    ("lemma42", {"experiment": "lemma42", "f_names": ["square", "cos"], "M": 10_000,
                 "n_ladder": [256, 1024, 4096], "checks": ["decreasing", "small"]}),
    ("lemma43", {"experiment": "lemma43", "f_names": ["one"], "n": 512, "M": 10_000,
                 "checks": ["variance", "ks", "stratified_ks"]}),
    ("trapezoid", {"experiment": "trapezoid", "f_names": ["identity", "square", "sin"], "M": 1000,
                   "n_ladder": [64, 256, 1024, 4096],
                   "checks": ["exact", "decreasing", "sin_median"]}),
    ("scaling_regimes", {"experiment": "scaling_regimes", "f_names": [], "M": 10_000,
                         "n_ladder": [1024, 4096], "hurst_grid": [0.4, 0.75, 0.8],
                         "checks": ["variance_stable", "kurtosis"]}),
]


def preset(experiment: str) -> dict:
    """Defaults for ``experiment <name>``: the first run-all job of that experiment."""
    for label, params in RUN_ALL_JOBS:
        if params["experiment"] == experiment:
            return {**copy.deepcopy(params), "label": label}
    raise DomainError(f"unknown experiment {experiment!r}")


def resolve_config(experiment: str, file_values: dict | None = None,
                   overrides: dict | None = None) -> ExperimentConfig:
    """Preset defaults, then config-file values, then command-line flags (flags win).

    ``None`` values in ``overrides`` mean "flag not given".
    """
    values = preset(experiment)
    names = {f.name for f in fields(ExperimentConfig)}
    thresholds = dict(values.pop("thresholds", {}))
    for layer in (file_values or {}, overrides or {}):
        layer = {k: v for k, v in layer.items() if v is not None}
        unknown = set(layer) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        thresholds.update(layer.pop("thresholds", {}))
        values.update(layer)
    values["experiment"] = experiment
    return ExperimentConfig(**values, thresholds=thresholds)


# ----------------------------------------------------------------------------
# reports


@dataclass
class Check:
    name: str
    kind: str  # moment | two_sample | bound | monotone | exact
    result: dict
    verdict: bool

    def as_dict(self) -> dict:
        return _plain(asdict(self))


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    checks: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    timestamp: str = ""
    samples: list = field(default_factory=list, repr=False)  # CSV rows, not serialized

    @property
    def verdict(self) -> bool:
        return all(c.verdict for c in self.checks)

    def add(self, name, kind, result, verdict):
        if hasattr(result, "as_dict"):
            result = result.as_dict()
        self.checks.append(Check(name, kind, result, bool(verdict)))

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.config.experiment,
            "label": self.config.label,
            "config": self.config.as_dict(),
            "checks": [c.as_dict() for c in self.checks],
            "constants": series_constants(),
            "diagnostics": _plain(self.diagnostics),
            "verdict": self.verdict,
            "wall_clock_seconds": self.wall_clock_seconds,
            "timestamp": self.timestamp,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(CSV_COLUMNS + "\n")
            for row in self.samples:
                fh.write(",".join("" if x is None else repr(x) if isinstance(x, float) else str(x)
                                  for x in row) + "\n")


_CHECK_SCHEMA = {
    "type": "object",
    "required": ["name", "kind", "result", "verdict"],
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": ["moment", "two_sample", "bound", "monotone", "exact"]},
        "result": {"type": "object"},
        "verdict": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_CONSTANT_SCHEMA = {
    "type": "object",
    "required": ["value", "radius", "tail_bound"],
    "properties": {
        "value": {"type": "number"},
        "radius": {"type": "integer", "minimum": 0},
        "tail_bound": {"type": "number", "minimum": 0},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "experiment report",
    "type": "object",
    "required": ["schema_version", "experiment", "label", "config", "checks", "constants",
                 "diagnostics", "verdict", "wall_clock_seconds", "timestamp"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "label": {"type": "string"},
        "config": {
            "type": "object",
            "required": [f.name for f in fields(ExperimentConfig)],
        },
        "checks": {"type": "array", "items": _CHECK_SCHEMA},
        "constants": {
            "type": "object",
            "required": ["C14", "kappa"],
            "properties": {"C14": _CONSTANT_SCHEMA, "kappa": _CONSTANT_SCHEMA},
        },
        "diagnostics": {"type": "object"},
        "verdict": {"type": "boolean"},
        "wall_clock_seconds": {"type": "number", "minimum": 0},
        "timestamp": {"type": "string"},
    },
    "additionalProperties": False,
}

RUN_ALL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "run-all report",
    "type": "object",
    "required": ["schema_version", "command", "master_seed", "reports", "verdict",
                 "wall_clock_seconds", "timestamp"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"const": "run-all"},
        "master_seed": {"type": "integer", "minimum": 0},
        "reports": {"type": "array", "items": REPORT_SCHEMA},
        "verdict": {"type": "boolean"},
        "wall_clock_seconds": {"type": "number", "minimum": 0},
        "timestamp": {"type": "string"},
    },
    "additionalProperties": False,
}

# Keys that legitimately differ between otherwise identical runs.
VOLATILE_KEYS = ("timestamp", "wall_clock_seconds")
VOLATILE_CONFIG_KEYS = ("output_path", "csv_path", "workers")


def validate_report(report: dict) -> None:
    schema = RUN_ALL_SCHEMA if report.get("command") == "run-all" else REPORT_SCHEMA
    jsonschema.validate(report, schema)


def numeric_content(report: dict) -> dict:
    """Copy of a report without timing, timestamp and output-location fields."""
    out = copy.deepcopy(report)

    def strip(d):
        for k in VOLATILE_KEYS:
            d.pop(k, None)
        for k in VOLATILE_CONFIG_KEYS:
            d.get("config", {}).pop(k, None)

    strip(out)
    for sub in out.get("reports", []):
        strip(sub)
    return out


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: dict, path) -> None:
    validate_report(report)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-friendly Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


@lru_cache(maxsize=1)
def _constants():
    return cv.constant_C14(), cv.constant_kappa()


def series_constants() -> dict:
    c14, kappa = _constants()
    return {"C14": c14.as_dict(), "kappa": kappa.as_dict()}


# ----------------------------------------------------------------------------
# replication machinery


def _chunks(M: int, offset: int = 0):
    return [np.arange(s, min(s + CHUNK_SIZE, M), dtype=np.int64) + offset
            for s in range(0, M, CHUNK_SIZE)]


def _replicate(task_fn, params: dict, M: int, workers: int, offset: int = 0) -> dict:
    """Run ``task_fn`` over fixed chunks of replication indices, concatenated in order."""
    tasks = [(params, idx) for idx in _chunks(M, offset)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(task_fn, tasks))
    else:
        parts = [task_fn(t) for t in tasks]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _model(name, hurst=0.25):
    return BIFRACTIONAL if name == "bifractional" else FBM(hurst)


def _batch(p, idx):
    model = _model(p.get("model", "fbm"), p.get("hurst", 0.25))
    generator = p.get("generator", "circulant")
    if model is BIFRACTIONAL:
        generator = Generator.CHOLESKY
    return simulate_batch(model, p["n"], p["seed"], idx, generator=generator)


# Task functions live at module level so a process pool can pickle them.


def _task_covariance(task):
    p, idx = task
    x = _batch(p, idx).values[:, 1:]
    prod = x[:, :, None] * x[:, None, :]
    return {"s1": prod.sum(axis=0)[None], "s2": (prod**2).sum(axis=0)[None]}


def _task_endpoint(task):
    p, idx = task
    return {"end": _batch(p, idx).values[:, -1]}


def _task_thm11(task):
    p, idx = task
    f = tf.get(p["f"])
    values = _batch(p, idx).values
    _, _, draw = lim.limit_draws(lim.Theorem.THM_1_1, values, f, p["seed"], idx)
    return {"stat": var.weighted_qv(values, f), "limit": draw}


def _task_thm12(task):
    p, idx = task
    f = tf.get(p["f"])
    values = _batch(p, idx).values
    _, _, draw = lim.limit_draws(lim.Theorem.THM_1_2, values, f, p["seed"], idx)
    return {"stat": var.midpoint_sum(values, tf.derivative_of(f)), "limit": draw}


def _task_cubic(task):
    p, idx = task
    return {"stat": var.cubic_correction(_batch(p, idx).values, tf.get(p["f"]))}


def _task_lemma43(task):
    p, idx = task
    f = tf.get(p["f"])
    values = _batch(p, idx).values
    _, _, draw = lim.limit_draws(lim.Theorem.LEMMA_4_3, values, f, p["seed"], idx)
    return {
        "stat": var.alternating_F(values, f),
        "limit": draw,
        "positive_half": values[:, p["n"] // 2] > 0,
    }


def _task_trapezoid(task):
    p, idx = task
    f = tf.get(p["f"])
    values = _batch(p, idx).values
    s = var.trapezoid_sum(values, tf.derivative_of(f))
    ref = f(values[:, -1]) - f(np.zeros(()))
    return {"stat": np.atleast_1d(s), "reference": ref}


def _task_unweighted(task):
    p, idx = task
    return {"stat": var.unweighted_qv(_batch(p, idx).values, p["hurst"])}


def _params(cfg: ExperimentConfig, **kw) -> dict:
    p = {"n": cfg.n, "seed": int(cfg.master_seed), "model": cfg.model,
         "generator": cfg.generator, "hurst": cfg.hurst}
    p.update(kw)
    return p


def _record(report, kind, n, f_name, cfg, values, reference=None, offset=0):
    seed = int(cfg.master_seed)
    ref = [None] * len(values) if reference is None else [float(r) for r in reference]
    report.samples.extend(
        (kind, n, f_name, seed, i + offset, float(v), r) for i, (v, r) in enumerate(zip(values, ref))
    )


def _wants(cfg, name) -> bool:
    return not cfg.checks or name in cfg.checks


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


# ----------------------------------------------------------------------------
# experiments


def run_constants(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    c14, kappa = _constants()
    for name, const, anchor in (("C14", c14, C14_ANCHOR), ("kappa", kappa, KAPPA_ANCHOR)):
        dev = abs(const.value - anchor)
        report.add(f"{name}_value", "bound",
                   {"value": const.value, "anchor": anchor, "deviation": dev,
                    "tolerance": th["constant_tolerance"]},
                   dev <= th["constant_tolerance"])
        report.add(f"{name}_tail_bound", "bound",
                   {"tail_bound": const.tail_bound, "max": th["tail_bound_max"],
                    "radius": const.partial_sum_radius},
                   const.tail_bound < th["tail_bound_max"])


def run_lemma31_bounds(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    slack = th["lemma31_slack"]

    # (i) |E B_r (B_t - B_s)| <= sqrt(t - s) on a 32^3 grid with s <= t
    g = np.linspace(0.0, 1.0, 32)
    r, s, t = np.meshgrid(g, g, g, indexing="ij")
    mask = s <= t
    lhs = np.abs(cv.covariance_fbm(0.25, r, t) - cv.covariance_fbm(0.25, r, s))[mask]
    excess = float(np.max(lhs - np.sqrt((t - s)[mask])))
    report.add("increment_covariance_bound", "bound",
               {"grid": 32, "max_excess": excess, "slack": slack}, excess <= slack)

    t_grid = np.linspace(0.0, 1.0, 100)
    sups, doubles, iv_excess = {}, {}, {}
    for n in cfg.n_ladder:
        sups[n] = float(np.max(np.abs(cv.eps_delta_table(0.25, t_grid, n)).sum(axis=1)))
        total, worst = 0.0, -math.inf
        for start in range(0, n, 256):
            j = np.arange(start, min(start + 256, n))
            block = cv.eps_delta_table(0.25, j / n, n)
            total += math.fsum(np.abs(block).ravel())
            c = block[np.arange(j.size), j]
            bound = (np.sqrt(j + 1.0) - np.sqrt(j)) / (2.0 * n)
            worst = max(worst, float(np.max(np.abs(c**2 - 0.25 / n) - bound)))
        doubles[n] = total
        iv_excess[n] = worst

    bound = th["lemma31_sup_bound"]
    report.add("sup_t_sum_bound", "bound",
               {"values": sups, "bound": bound, "t_points": t_grid.size},
               all(v <= bound for v in sups.values()))
    factor = th["lemma31_double_sum_factor"]
    report.add("double_sum_linear", "bound",
               {"ratio_to_n": {n: doubles[n] / n for n in doubles}, "factor": factor},
               all(doubles[n] <= factor * n for n in doubles))
    report.add("diagonal_square_bound", "bound",
               {"max_excess": iv_excess, "slack": slack},
               all(v <= slack for v in iv_excess.values()))
    report.diagnostics["sup_t_sum_derived_bound"] = {
        n: 1.5 + 0.5 / math.sqrt(n) for n in cfg.n_ladder
    }


def run_kernel_check(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    grid = np.arange(1, cfg.n + 1) / cfg.n
    errors = {}
    for h in cfg.hurst_grid:
        worst = 0.0
        for i, s in enumerate(grid):
            for t in grid[i:]:
                approx = cv.kernel_factorization(h, float(s), float(t))
                worst = max(worst, abs(approx - cv.covariance_fbm(h, float(s), float(t))))
        errors[h] = worst
    tol = cfg.thresholds["kernel_max_error"]
    report.add("factorization", "bound", {"max_error": errors, "grid": cfg.n, "tolerance": tol},
               all(e < tol for e in errors.values()))


def run_simulate(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    model = _model(cfg.model, cfg.hurst)
    if _wants(cfg, "covariance"):
        out = _replicate(_task_covariance, _params(cfg), cfg.M, cfg.workers)
        M = cfg.M
        s1, s2 = out["s1"].sum(axis=0), out["s2"].sum(axis=0)
        emp = s1 / M
        sd = np.sqrt(np.maximum(s2 / M - emp**2, 0.0) * M / (M - 1))
        grid = np.arange(1, cfg.n + 1) / cfg.n
        exact = model.covariance(grid[:, None], grid[None, :])
        z = np.abs(emp - exact) / (sd / math.sqrt(M))
        k = th["covariance_sigmas"]
        report.add("covariance", "bound",
                   {"max_abs_z": float(z.max()), "sigmas": k, "entries": int(z.size),
                    "max_abs_deviation": float(np.abs(emp - exact).max()),
                    "generator": cfg.generator},
                   z.max() <= k)
        t_idx = [cfg.n // 4 - 1, cfg.n // 2 - 1, 3 * cfg.n // 4 - 1, cfg.n - 1]
        report.diagnostics["variance_at_quarters"] = {
            "t": [float(grid[i]) for i in t_idx],
            "empirical": [float(emp[i, i]) for i in t_idx],
            "exact": [float(exact[i, i]) for i in t_idx],
        }
    if _wants(cfg, "generator_ks"):
        circ = _replicate(_task_endpoint, _params(cfg, generator="circulant"), cfg.M, cfg.workers)
        chol = _replicate(_task_endpoint, _params(cfg, generator="cholesky"), cfg.M, cfg.workers,
                          offset=cfg.M)
        res = st.ks_two_sample(circ["end"], chol["end"], th["ks_min_pvalue"])
        report.add("generator_ks", "two_sample", res, res.verdict)
        _record(report, "endpoint_circulant", cfg.n, "", cfg, circ["end"])
        _record(report, "endpoint_cholesky", cfg.n, "", cfg, chol["end"], offset=cfg.M)


def _two_sample_checks(cfg, report, f_name, stat, draws):
    th = cfg.thresholds
    if _wants(cfg, "ks"):
        res = st.ks_two_sample(stat, draws, th["ks_min_pvalue"])
        report.add(f"ks[{f_name}]", "two_sample", res, res.verdict)
    if _wants(cfg, "ecf"):
        res = st.ecf_distance(stat, draws, max_distance=th["ecf_max_distance"])
        report.add(f"ecf[{f_name}]", "two_sample", res, res.verdict)


def run_thm11(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    for name in cfg.f_names:
        f = tf.get(name)
        out = _replicate(_task_thm11, _params(cfg, f=name), cfg.M, cfg.workers)
        g, draws = out["stat"], out["limit"]
        _record(report, var.Kind.G_N.value, cfg.n, name, cfg, g, draws)
        if _wants(cfg, "moments"):
            mean_t, second_t = lim.moment_targets_thm32(f)
            k = th["moment_sigmas"]
            res = st.moment_check(g, mean_t, k)
            report.add(f"mean[{name}]", "moment", res, res.verdict)
            res = st.moment_check(g**2, second_t, k)
            report.add(f"second_moment[{name}]", "moment", res, res.verdict)
            report.diagnostics[f"finite_n_exact_mean[{name}]"] = lim.exact_mean_weighted_qv(f, cfg.n)
        _two_sample_checks(cfg, report, name, g, draws)


def run_thm12(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    if cfg.n % 2:
        raise DomainError("the midpoint experiment needs an even n")
    for name in cfg.f_names:
        out = _replicate(_task_thm12, _params(cfg, f=name), cfg.M, cfg.workers)
        _record(report, var.Kind.T_N.value, cfg.n, name, cfg, out["stat"], out["limit"])
        _two_sample_checks(cfg, report, name, out["stat"], out["limit"])
    if cfg.model == "bifractional":
        report.diagnostics["exploratory_model"] = "bifractional"


def run_lemma42(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    for name in cfg.f_names:
        m2, se = [], []
        for n in cfg.n_ladder:
            out = _replicate(_task_cubic, _params(cfg, n=n, f=name), cfg.M, cfg.workers)
            sq = out["stat"] ** 2
            m2.append(math.fsum(sq) / sq.size)
            se.append(float(np.std(sq, ddof=1)) / math.sqrt(sq.size))
            _record(report, var.Kind.CUBIC_CORRECTION.value, n, name, cfg, out["stat"])
        result = {"n": list(cfg.n_ladder), "second_moment": m2, "std_error": se}
        if _wants(cfg, "decreasing"):
            report.add(f"decreasing[{name}]", "monotone", result, _strictly_decreasing(m2))
        if _wants(cfg, "small"):
            cap = th["cubic_max_second_moment"]
            report.add(f"small[{name}]", "bound",
                       {"n": cfg.n_ladder[-1], "second_moment": m2[-1], "std_error": se[-1],
                        "max": cap},
                       m2[-1] < cap)


def run_lemma43(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    if cfg.n % 2:
        raise DomainError("the alternating statistic needs an even n")
    kappa = _constants()[1].value
    for name in cfg.f_names:
        f = tf.get(name)
        out = _replicate(_task_lemma43, _params(cfg, f=name), cfg.M, cfg.workers)
        F, draws, pos = out["stat"], out["limit"], out["positive_half"]
        _record(report, var.Kind.F_N.value, cfg.n, name, cfg, F, draws)
        if _wants(cfg, "variance"):
            target = kappa**2 * lim.integrated_gaussian_moment(lambda x: f(x) ** 2)
            # E F_n = 0 by symmetry, so the variance is the mean of F_n^2
            res = st.moment_check(F**2, target, th["moment_sigmas"])
            report.add(f"variance[{name}]", "moment", res, res.verdict)
            if name == "one":
                report.diagnostics["finite_n_exact_variance[one]"] = lim.exact_var_alternating_one(cfg.n)
        if _wants(cfg, "ks"):
            res = st.ks_two_sample(F, draws, th["ks_min_pvalue"])
            report.add(f"ks[{name}]", "two_sample", res, res.verdict)
        if _wants(cfg, "stratified_ks"):
            parts = {}
            for label, m in (("B_half>0", pos), ("B_half<=0", ~pos)):
                parts[label] = st.ks_two_sample(F[m], draws[m], th["ks_min_pvalue"])
            report.add(f"stratified_ks[{name}]", "two_sample",
                       {k: v.as_dict() for k, v in parts.items()},
                       all(v.verdict for v in parts.values()))


_LINEAR = ("zero", "one", "identity")


def run_trapezoid(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    for name in cfg.f_names:
        medians, maxima = [], []
        for n in cfg.n_ladder:
            out = _replicate(_task_trapezoid, _params(cfg, n=n, f=name), cfg.M, cfg.workers)
            err = np.abs(out["stat"] - out["reference"])
            medians.append(float(np.median(err)))
            maxima.append(float(err.max()))
            _record(report, var.Kind.S_N.value, n, name, cfg, out["stat"], out["reference"])
        result = {"n": list(cfg.n_ladder), "median_error": medians, "max_error": maxima}
        if name in _LINEAR:
            if _wants(cfg, "exact"):
                report.add(f"exact[{name}]", "exact", result, max(maxima) == 0.0)
            continue
        if _wants(cfg, "decreasing"):
            report.add(f"decreasing[{name}]", "monotone", result, _strictly_decreasing(medians))
        if name == "sin" and _wants(cfg, "sin_median"):
            cap = th["trapezoid_sin_max_median"]
            report.add("median_small[sin]", "bound",
                       {"n": cfg.n_ladder[-1], "median_error": medians[-1], "max": cap},
                       medians[-1] < cap)


def run_scaling_regimes(cfg: ExperimentConfig, report: ExperimentReport) -> None:
    th = cfg.thresholds
    for h in cfg.hurst_grid:
        variances, kurtoses, exact = [], [], []
        for n in cfg.n_ladder:
            out = _replicate(_task_unweighted, _params(cfg, n=n, hurst=h, model="fbm"),
                             cfg.M, cfg.workers)
            x = out["stat"]
            variances.append(float(np.var(x, ddof=1)))
            kurtoses.append(float(sps.kurtosis(x)))
            exact.append(var.exact_variance_unweighted_qv(h, n))
            _record(report, var.Kind.UNWEIGHTED_QV.value, n, f"H={h:g}", cfg, x)
        report.diagnostics[f"exact_variance[H={h:g}]"] = dict(zip(cfg.n_ladder, exact))
        result = {"n": list(cfg.n_ladder), "variance": variances, "excess_kurtosis": kurtoses}
        if h <= 0.75 + var.REGIME_TOL:
            if _wants(cfg, "variance_stable"):
                rel = abs(variances[0] - variances[-1]) / variances[-1]
                tol = th["variance_rel_tol"]
                report.add(f"variance_stable[H={h:g}]", "bound",
                           {**result, "relative_change": rel, "tolerance": tol}, rel <= tol)
        elif _wants(cfg, "kurtosis"):
            lo = th["kurtosis_min"]
            report.add(f"kurtosis[H={h:g}]", "bound", {**result, "min": lo},
                       all(k > lo for k in kurtoses))


_RUNNERS = {
    "constants": run_constants,
    "simulate": run_simulate,
    "thm11": run_thm11,
    "thm12": run_thm12,
    "lemma42": run_lemma42,
    "lemma43": run_lemma43,
    "trapezoid": run_trapezoid,
    "scaling_regimes": run_scaling_regimes,
    "kernel_check": run_kernel_check,
    "lemma31_bounds": run_lemma31_bounds,
}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    report = ExperimentReport(cfg)
    start = time.perf_counter()
    _RUNNERS[cfg.experiment](cfg, report)
    report.wall_clock_seconds = time.perf_counter() - start
    report.timestamp = _now()
    log.info("%s: verdict %s in %.1f s", cfg.label, report.verdict, report.wall_clock_seconds)
    return report


def run_all(master_seed: int = 42, workers: int = 1, file_values: dict | None = None,
            progress=None) -> tuple[dict, list]:
    """Run every preset job; returns the combined report dict and the job reports."""
    start = time.perf_counter()
    reports = []
    for label, params in RUN_ALL_JOBS:
        values = {**copy.deepcopy(params), "label": label, **(file_values or {}),
                  "master_seed": master_seed, "workers": workers}
        values.pop("experiment")
        cfg = resolve_config(params["experiment"], overrides=values)
        rep = run_experiment(cfg)
        if progress:
            progress(rep)
        reports.append(rep)
    combined = {
        "schema_version": SCHEMA_VERSION,
        "command": "run-all",
        "master_seed": int(master_seed),
        "reports": [r.as_dict() for r in reports],
        "verdict": all(r.verdict for r in reports),
        "wall_clock_seconds": time.perf_counter() - start,
        "timestamp": _now(),
    }
    return combined, reports

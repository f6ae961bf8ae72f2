"""Seeded sampling and the Monte Carlo replication protocol.

A run draws ``B`` samples of size ``n`` from a data-generating model, tests
each one against a null model and aggregates the outcomes.  Replication ``i``
always draws from its own stream, derived from ``(seed, i)`` alone, so results
do not depend on chunking, on worker count or on which other replications are
run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateSample,
    GrammarError,
    InvalidParam,
    NoCdf,
    NotSampleable,
    NotSymmetric,
    ReplicationError,
)
from .families import FunctionFamily, exact_T
from .influence import PLUGIN_WARNING, build_D, build_influence, jb_coefficients
from .moments import MomentModel, theoretical_ncem
from .stats import (
    TAILS,
    _chi2_gen_stat,
    _chi2_sym_stat,
    _jb_stat,
    _p_from_standardized,
    _T_from_ncems,
    chi2_upper_tail,
    kolmogorov_sf,
    ks_distance,
    min_sample_size,
    ncem_arrays,
)

__all__ = [
    "substream",
    "sample_model",
    "draw_matrix",
    "TestSpec",
    "parse_test",
    "SimulationConfig",
    "TestAggregate",
    "SimulationResult",
    "run_replications",
    "ALPHA",
    "CHUNK",
]

ALPHA = 0.05
# replications per vectorized block; fixed so results never depend on it
CHUNK = 250


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based (Philox) generator for replication ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_model(model: MomentModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent draws from a parametric model.

    Normal draws use numpy's ziggurat, double-exponential draws invert the
    exponential CDF and attach a fair random sign, and double-gamma draws
    take a gamma magnitude (Marsaglia-Tsang rejection, exact) with a fair
    random sign.
    """
    if model.name == "normal":
        m, sigma = model.params
        return m + sigma * rng.standard_normal(n)
    if model.name == "dexp":
        (lam,) = model.params
        u = 1.0 - rng.random(n)  # (0, 1]
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * (-np.log(u) / lam)
    if model.name == "dgamma":
        a, b = model.params
        mag = rng.gamma(a, 1.0 / b, n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * mag
    raise NotSampleable(f"cannot sample from {model.describe()}")


def draw_matrix(model: MomentModel, n: int, seed: int, indices: Sequence[int]) -> np.ndarray:
    """Rows are the samples of the given replication indices."""
    out = np.empty((len(indices), n))
    for row, i in enumerate(indices):
        out[row] = sample_model(model, n, substream(seed, int(i)))
    return out


@dataclass(frozen=True)
class TestSpec:
    """One test to run in every replication.

    ``kind`` is ``general``, ``chi2sym``, ``chi2gen``, ``jb`` or ``ks``;
    ``p`` is the order for the chi-square kinds.
    """

    __test__ = False

    kind: str
    p: Optional[int] = None

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.p}" if self.p is not None else self.kind


TEST_GRAMMAR = "general | chi2sym:<p> | chi2gen:<p> | jb | ks"


def parse_test(text: str) -> TestSpec:
    kind, _, rest = text.strip().lower().partition(":")
    if kind in ("general", "jb", "ks") and not rest:
        return TestSpec(kind)
    if kind in ("chi2sym", "chi2gen"):
        try:
            p = int(rest) if rest else 2
        except ValueError:
            p = 0
        if p >= 2:
            return TestSpec(kind, p)
    raise GrammarError(f"bad test {text!r}; grammar: {TEST_GRAMMAR}")


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    model_true: MomentModel
    model_null: MomentModel
    family: FunctionFamily
    k: int = 3
    n: int = 100
    B: int = 1000
    seed: int = 0
    tests: tuple[TestSpec, ...] = (TestSpec("general"),)
    tail: str = "two_sided_abs"
    variance_source: str = "exact"
    min_n: Optional[int] = None

    def validate(self) -> None:
        floor = min_sample_size(self.k) if self.min_n is None else self.min_n
        if self.n < floor:
            raise InvalidParam(f"n={self.n} is below the minimum {floor}")
        if self.B < 1:
            raise InvalidParam("B must be >= 1")
        if not self.model_true.sampleable:
            raise NotSampleable(f"cannot sample from {self.model_true.describe()}")
        if self.tail not in TAILS:
            raise InvalidParam(f"tail must be one of {TAILS}")
        if self.variance_source not in ("exact", "plugin"):
            raise InvalidParam("variance_source must be 'exact' or 'plugin'")
        if not 0 <= self.seed < 2**64:
            raise InvalidParam("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            "model_true": self.model_true.describe(),
            "model_null": self.model_null.describe(),
            "family": self.family.describe(),
            "k": self.k,
            "n": self.n,
            "B": self.B,
            "seed": self.seed,
            "tests": [t.label for t in self.tests],
            "tail": self.tail,
            "variance_source": self.variance_source,
        }


@dataclass
class TestAggregate:
    """Summary of one test over all replications.

    ``p_of_mean`` follows the replication protocol literally: the p-value of
    the mean statistic (mean standardized value for the general test).
    ``rejection_rate`` is the fraction of replications with p < 0.05.
    """

    __test__ = False

    test: str
    mean_statistic: float
    sd_statistic: float
    mean_standardized: Optional[float]
    sd_standardized: Optional[float]
    p_of_mean: float
    p_value_convention: str
    mean_p_value: float
    rejection_rate: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SimulationResult:
    config: dict
    tests: list[TestAggregate]
    warnings: list[str] = field(default_factory=list)
    # per-replication arrays keyed by "<test>/<quantity>"; not serialized
    values: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "results": [t.to_dict() for t in self.tests],
            "warnings": list(self.warnings),
        }

    def aggregate(self, label: str) -> TestAggregate:
        for t in self.tests:
            if t.test == label:
                return t
        raise KeyError(label)


def _prepare(cfg: SimulationConfig) -> dict:
    """Per-test constants computed once from the null model."""
    null = cfg.model_null
    prep: dict = {}
    for spec in cfg.tests:
        if spec.kind == "general":
            T = exact_T(cfg.family, cfg.k, null)
            if cfg.variance_source == "exact":
                s2 = build_influence(cfg.k, cfg.family, null).sigma2
                if not s2 > 0:
                    raise DegenerateSample(f"asymptotic variance is {s2!r}; the test is undefined")
                prep[spec.label] = (T, s2, None)
            else:
                prep[spec.label] = (T, None, build_D(cfg.k, cfg.family, null))
        elif spec.kind in ("chi2sym", "chi2gen"):
            if spec.kind == "chi2sym" and not null.is_symmetric:
                raise NotSymmetric(f"{null.describe()} has nonzero odd central moments")
            c = jb_coefficients(spec.p, null, check_singular=spec.kind == "chi2gen")
            prep[spec.label] = (c, theoretical_ncem(null, spec.p))
        elif spec.kind == "ks":
            if null.cdf is None:
                raise NoCdf(f"{null.describe()} has no distribution function")
        elif spec.kind != "jb":
            raise InvalidParam(f"unknown test kind {spec.kind!r}")
    return prep


def _max_order(cfg: SimulationConfig) -> int:
    k = 2
    for spec in cfg.tests:
        if spec.kind == "general":
            k = max(k, cfg.k)
        elif spec.p is not None:
            k = max(k, spec.p)
    return k


def _run_chunk(cfg: SimulationConfig, prep: dict, start: int, stop: int) -> dict[str, np.ndarray]:
    idx = np.arange(start, stop)
    X = draw_matrix(cfg.model_true, cfg.n, cfg.seed, idx)
    n = cfg.n
    flat = np.all(X == X[:, :1], axis=1)
    if np.any(flat):
        bad = int(idx[np.argmax(flat)])
        raise ReplicationError(bad, DegenerateSample("sample has zero variance"))
    b, a = ncem_arrays(X, _max_order(cfg))
    out: dict[str, np.ndarray] = {}
    for spec in cfg.tests:
        lab = spec.label
        if spec.kind == "general":
            T, s2, D = prep[lab]
            Tn = _T_from_ncems(b, a, cfg.family, cfg.k)
            if s2 is None:
                s2 = np.var(D(X), axis=1)
            root_n_dev = math.sqrt(n) * (Tn - T)
            t = root_n_dev / np.sqrt(s2)
            out[lab + "/statistic"] = Tn
            out[lab + "/root_n_deviation"] = root_n_dev
            out[lab + "/standardized"] = t
            out[lab + "/p_value"] = _p_from_standardized(t, cfg.tail)
        elif spec.kind in ("chi2sym", "chi2gen"):
            c, nc = prep[lab]
            db = b[:, spec.p] - nc.b
            da = a[:, spec.p] - nc.a
            if spec.kind == "chi2sym":
                stat = _chi2_sym_stat(n, db, da, c.bj, c.aj)
            else:
                stat = _chi2_gen_stat(n, db, da, c)
            out[lab + "/statistic"] = stat
            out[lab + "/p_value"] = chi2_upper_tail(stat)
        elif spec.kind == "jb":
            stat = _jb_stat(n, b[:, 2], a[:, 2])
            out[lab + "/statistic"] = stat
            out[lab + "/p_value"] = chi2_upper_tail(stat)
        elif spec.kind == "ks":
            stat = math.sqrt(n) * ks_distance(X, cfg.model_null.cdf)
            out[lab + "/statistic"] = stat
            out[lab + "/p_value"] = np.array([kolmogorov_sf(v) for v in stat])
    for key, v in out.items():
        bad = ~np.isfinite(v)
        if np.any(bad):
            i = int(idx[np.argmax(bad)])
            raise ReplicationError(i, ValueError(f"non-finite {key}"))
    return out


def _chunk_task(args):
    cfg, prep, start, stop = args
    return _run_chunk(cfg, prep, start, stop)


def _aggregate(cfg: SimulationConfig, values: dict[str, np.ndarray]) -> list[TestAggregate]:
    aggs = []
    for spec in cfg.tests:
        lab = spec.label
        stat = values[lab + "/statistic"]
        pv = values[lab + "/p_value"]
        sd = float(np.std(stat, ddof=1)) if stat.size > 1 else 0.0
        if spec.kind == "general":
            t = values[lab + "/standardized"]
            mt = float(np.mean(t))
            sdt = float(np.std(t, ddof=1)) if t.size > 1 else 0.0
            p_mean = float(_p_from_standardized(mt, cfg.tail))
            conv = cfg.tail
        else:
            mt = sdt = None
            m = float(np.mean(stat))
            p_mean = float(kolmogorov_sf(m) if spec.kind == "ks" else chi2_upper_tail(m))
            conv = "upper_tail"
        aggs.append(TestAggregate(
            lab, float(np.mean(stat)), sd, mt, sdt, p_mean, conv,
            float(np.mean(pv)), float(np.mean(pv < ALPHA)),
        ))
    return aggs


def run_replications(cfg: SimulationConfig, workers: int = 1) -> SimulationResult:
    """Run the replication protocol described by ``cfg``.

    Replications are processed in fixed blocks of :data:`CHUNK`; with
    ``workers > 1`` blocks are spread over processes.  Output is identical
    for any ``workers``.

    Raises
    ------
    ReplicationError
        If any replication fails; carries the failing replication index.
    """
    cfg.validate()
    prep = _prepare(cfg)
    bounds = [(s, min(s + CHUNK, cfg.B)) for s in range(0, cfg.B, CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_task, [(cfg, prep, s, e) for s, e in bounds]))
    else:
        parts = [_run_chunk(cfg, prep, s, e) for s, e in bounds]
    values = {key: np.concatenate([part[key] for part in parts]) for key in parts[0]}
    warnings = []
    if cfg.n < 30:
        warnings.append(f"small sample (n={cfg.n} < 30): asymptotic p-values are rough")
    if cfg.variance_source == "plugin" and any(s.kind == "general" for s in cfg.tests):
        warnings.append(PLUGIN_WARNING)
    return SimulationResult(cfg.to_dict(), _aggregate(cfg, values), warnings, values)

"""Seeded Monte Carlo runs over a grid of sample sizes.

Replication ``rep`` at sample size ``n`` draws its points from the stream
``Rng(seed, replication_stream(n, rep))``; nothing else feeds into it, so
results do not depend on the worker count or on scheduling.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ExperimentError, InsufficientReplications, NonpositiveValue, SpindleError
from .hull import convex_hull_ccw, hull_fast, hull_oracle, summarize
from .rng import Rng, replication_stream
from .shapes import ConvexDiscModel, model_from_spec, sample_uniform

log = logging.getLogger(__name__)

MAX_INCIDENT_RATE = 1e-3
DEFAULT_N_GRID = tuple(2**k for k in range(10, 18))
_CHUNK = 8

RECORD_FIELDS = ("n", "rep", "f0", "hull_area", "missed_area")
MOMENT_FIELDS = ("n", "M", "mean_f0", "se_mean_f0", "var_f0", "se_var_f0",
                 "mean_missed", "se_mean_missed", "var_missed", "se_var_missed")


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    r: float
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    reps: int = 100
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))

    def validate(self) -> ConvexDiscModel:
        """Check the invariants and return the model they refer to."""
        try:
            model = model_from_spec(self.model)
        except SpindleError as exc:
            raise ConfigError(str(exc)) from exc
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ConfigError(f"r must be positive, got {self.r!r}")
        # hulls exist for r >= r_M (the circle at r = rho is the classical case)
        if self.r < model.r_M:
            raise ConfigError(f"r <= r_M violated: r={self.r!r} is below r_M={model.r_M!r} "
                              f"of the {model.kind} model")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be a non-empty list of positive counts")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        return model

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        return d


@dataclass(frozen=True)
class SampleRecord:
    n: int
    rep: int
    f0: int
    hull_area: float
    missed_area: float


@dataclass(frozen=True)
class MomentEstimate:
    n: int
    M: int
    mean_f0: float
    se_mean_f0: float
    var_f0: float
    se_var_f0: float
    mean_missed: float
    se_mean_missed: float
    var_missed: float
    se_var_missed: float
    jk_se_var_f0: float = field(default=math.nan)
    jk_se_var_missed: float = field(default=math.nan)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    points_used: int

    def to_dict(self) -> dict:
        return asdict(self)


# simulation ---------------------------------------------------------------

def run_replication(model: ConvexDiscModel, r: float, n: int, rep: int, seed: int,
                    incidents: list | None = None) -> SampleRecord:
    rng = Rng(seed, replication_stream(n, rep))
    pts = sample_uniform(model, rng, n)
    local: list = []
    try:
        poly = hull_fast(pts, r, local)
    except SpindleError as exc:
        local.append({"reason": type(exc).__name__, "detail": str(exc)})
        log.warning("replication n=%d rep=%d failed (%s); re-running with the oracle", n, rep, exc)
        poly = hull_oracle(pts if n <= 600 else convex_hull_ccw(pts), r)
    if incidents is not None:
        incidents.extend({"n": n, "rep": rep, **item} for item in local)
    s = summarize(model, poly)
    return SampleRecord(n, rep, s.f0, s.hull_area, s.missed_area)


def _run_chunk(args):
    spec, r, seed, tasks = args
    model = model_from_spec(spec)
    incidents: list = []
    records = [run_replication(model, r, n, rep, seed, incidents) for n, rep in tasks]
    return records, incidents


def run_experiment(config: ExperimentConfig, incidents: list | None = None) -> list[SampleRecord]:
    """All replications of ``config``, sorted by (n, rep).

    Fails with ExperimentError when more than 0.1% of replications needed the
    oracle fallback; the incidents are still appended to ``incidents``.
    """
    config.validate()
    tasks = [(n, rep) for n in config.n_grid for rep in range(config.reps)]
    chunks = [(config.model, config.r, config.seed, tasks[i:i + _CHUNK])
              for i in range(0, len(tasks), _CHUNK)]
    found: list = []
    records: list[SampleRecord] = []
    if config.workers == 1:
        results = map(_run_chunk, chunks)
        for recs, inc in results:
            records.extend(recs)
            found.extend(inc)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for recs, inc in pool.map(_run_chunk, chunks):
                records.extend(recs)
                found.extend(inc)
    records.sort(key=lambda rec: (rec.n, rec.rep))
    found.sort(key=lambda item: (item["n"], item["rep"]))
    if incidents is not None:
        incidents.extend(found)
    affected = len({(item["n"], item["rep"]) for item in found})
    if affected > MAX_INCIDENT_RATE * len(tasks):
        raise ExperimentError(f"{affected} of {len(tasks)} replications needed the oracle fallback")
    return records


# estimation ---------------------------------------------------------------

def _jackknife_se_var(x: np.ndarray) -> float:
    m = len(x)
    if m < 3:
        return math.nan
    dev2 = (x - x.mean()) ** 2
    s2 = dev2.sum() / (m - 1)
    loo = ((m - 1) * s2 - m / (m - 1) * dev2) / (m - 2)
    return math.sqrt((m - 1) / m * float(np.sum((loo - loo.mean()) ** 2)))


def _moments(x: np.ndarray) -> tuple[float, float, float, float, float]:
    m = len(x)
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1))
    return mean, math.sqrt(var / m), var, var * math.sqrt(2.0 / (m - 1)), _jackknife_se_var(x)


def estimate_moments(records: Iterable[SampleRecord]) -> list[MomentEstimate]:
    """Mean and unbiased variance of f0 and missed area for every n.

    Standard errors: s / sqrt(M) for means and the normal-theory
    s^2 sqrt(2 / (M - 1)) for variances, with jackknife values alongside.
    """
    by_n: dict[int, list[SampleRecord]] = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(rec)
    out = []
    for n in sorted(by_n):
        group = sorted(by_n[n], key=lambda rec: rec.rep)
        if len(group) < 2:
            raise InsufficientReplications(f"n={n} has {len(group)} replication(s); need at least 2")
        f0 = np.array([rec.f0 for rec in group], dtype=float)
        missed = np.array([rec.missed_area for rec in group], dtype=float)
        mf, smf, vf, svf, jkf = _moments(f0)
        ma, sma, va, sva, jka = _moments(missed)
        out.append(MomentEstimate(n, len(group), mf, smf, vf, svf, ma, sma, va, sva, jkf, jka))
    return out


def fit_exponent(pairs: Sequence[tuple[float, float]], weights: Sequence[float] | None = None) -> FitResult:
    """Least-squares line through (log n, log value); optional weights."""
    if len(pairs) < 3:
        raise ValueError("need at least 3 points to fit an exponent")
    n = np.array([p[0] for p in pairs], dtype=float)
    v = np.array([p[1] for p in pairs], dtype=float)
    if np.any(v <= 0) or np.any(n <= 0):
        raise NonpositiveValue("log-log fit needs positive n and values")
    x, y = np.log(n), np.log(v)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = float(np.sum(w * (x - xm) ** 2))
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    sigma2 = float(np.sum(w * resid**2)) / (len(x) - 2)
    return FitResult(slope, intercept, math.sqrt(sigma2 / sxx), len(x))


def fit_moments(moments: Sequence[MomentEstimate], column: str, *, weighted: bool = False) -> FitResult:
    """Fit ``column`` (e.g. ``var_f0``) against n. With ``weighted``, use
    inverse variances of the log values from the matching ``se_`` column."""
    pairs = [(m.n, getattr(m, column)) for m in moments]
    weights = None
    if weighted:
        se = np.array([getattr(m, "se_" + column) for m in moments])
        val = np.array([v for _, v in pairs])
        weights = (val / se) ** 2
    return fit_exponent(pairs, weights)


# serialisation --------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def records_csv(records: Iterable[SampleRecord]) -> str:
    return _csv_text(RECORD_FIELDS, ((r.n, r.rep, r.f0, r.hull_area, r.missed_area) for r in records))


def moments_csv(moments: Iterable[MomentEstimate]) -> str:
    return _csv_text(MOMENT_FIELDS, ([getattr(m, f) for f in MOMENT_FIELDS] for m in moments))


def read_records_csv(text: str) -> list[SampleRecord]:
    rows = csv.DictReader(io.StringIO(text))
    return [SampleRecord(int(r["n"]), int(r["rep"]), int(r["f0"]), float(r["hull_area"]),
                         float(r["missed_area"])) for r in rows]


def read_moments_csv(text: str) -> list[MomentEstimate]:
    rows = csv.DictReader(io.StringIO(text))
    out = []
    for r in rows:
        out.append(MomentEstimate(int(r["n"]), int(r["M"]),
                                  *(float(r[f]) for f in MOMENT_FIELDS[2:])))
    return out

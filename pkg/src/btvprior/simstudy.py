"""Monte Carlo studies of the frequentist behaviour of posterior summaries.

Replication ``k`` draws a data set from the true model, fits one chain per
prior and records the credible intervals, medians, MAP estimates and the
Savage-Dickey Bayes factor.  Seeds are derived from ``(base_seed, k)``, and
results are stored in a table indexed by ``k``, so the report does not
depend on how replications are scheduled across workers.

Table layout
------------
One row per prior and parameter, columns::

    prior, parameter, coverage, map_q05, map_q50, map_q95,
    median_q05, median_q50, median_q95, bf01_median

``bf01_median`` is filled on the ``lambda`` rows only.  Numbers carry three
decimals.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BtvError, DomainError
from .inference import credible_interval, map_estimate, savage_dickey_bf
from .mcmc import PARAMETERS, ChainConfig, PosteriorSpec, run_chain
from .priors import LambdaPrior
from .rng import derive_seed, make_rng
from .skew_symmetric import SkewFamily, SkewSymmetricModel, family_from_name

__all__ = [
    "StudyConfig",
    "StudyRow",
    "StudyReport",
    "run_study",
    "emit_table",
    "parse_table",
    "TABLE_COLUMNS",
    "SCHEMA",
    "THREADS_ENV",
]

SCHEMA = "btvprior.study/1"
THREADS_ENV = "BTVPRIOR_THREADS"
TABLE_COLUMNS = (
    "prior", "parameter", "coverage",
    "map_q05", "map_q50", "map_q95",
    "median_q05", "median_q50", "median_q95",
    "bf01_median",
)
_QUANTILES = (0.05, 0.5, 0.95)
# per-replication record for one prior: lower x3, upper x3, median x3, map x3, bf
_WIDTH = 13


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        value = int(env)
        if value < 1:
            raise DomainError(f"{THREADS_ENV} must be >= 1")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class StudyConfig:
    """Settings of a simulation study.

    ``truth`` is ``(mu, sigma, lambda)``.  Each replication runs one chain
    per prior with ``retained`` draws after ``burn_in`` iterations and
    thinning ``thin``.  ``threads`` is the number of worker processes
    (``None`` reads ``BTVPRIOR_THREADS``, then the CPU count).
    """

    family: SkewFamily
    truth: tuple
    n: int
    replications: int
    priors: tuple
    retained: int = 1000
    burn_in: int = 2000
    thin: int = 5
    base_seed: int = 0
    level: float = 0.95
    threads: int | None = None

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", family_from_name(self.family))
        object.__setattr__(self, "truth", tuple(float(v) for v in self.truth))
        object.__setattr__(self, "priors", tuple(self.priors))
        if len(self.truth) != 3 or not self.truth[1] > 0:
            raise DomainError("truth must be (mu, sigma > 0, lambda)")
        if self.replications < 1:
            raise DomainError("need at least one replication")
        if self.n < 2:
            raise DomainError("sample size must be >= 2")
        if self.retained < 100:
            raise DomainError("need at least 100 retained draws per chain")
        if not self.priors:
            raise DomainError("need at least one prior")
        if not all(isinstance(p, LambdaPrior) for p in self.priors):
            raise DomainError("priors must be LambdaPrior instances")
        if not (0 < self.level < 1):
            raise DomainError("level must lie in (0, 1)")
        if self.threads is not None and self.threads < 1:
            raise DomainError("threads must be >= 1")

    def chain_config(self, seed) -> ChainConfig:
        return ChainConfig.for_retained(self.retained, self.burn_in, self.thin, seed)


@dataclass
class StudyRow:
    prior: str
    parameter: str
    coverage: float
    map_q: tuple
    median_q: tuple
    bf01_median: float | None = None

    def cells(self):
        return [self.prior, self.parameter, self.coverage, *self.map_q, *self.median_q, self.bf01_median]


@dataclass
class StudyReport:
    """Aggregated study results.

    ``records`` has shape ``(N, priors, 13)``: per replication and prior the
    interval bounds, medians and MAP of ``(mu, sigma, lambda)`` followed by
    the Bayes factor.  Failed replications are rows of NaN and are excluded
    from ``rows``.  ``wall_clock`` is informational and never serialised.
    """

    rows: list
    replications: int = 0
    failed: int = 0
    base_seed: int = 0
    meta: dict = field(default_factory=dict)
    records: np.ndarray | None = None
    wall_clock: float = 0.0

    def row(self, prior, parameter) -> StudyRow:
        for r in self.rows:
            if r.prior == prior and r.parameter == parameter:
                return r
        raise KeyError((prior, parameter))

    def coverage(self, prior, parameter="lambda"):
        return self.row(prior, parameter).coverage


def _replicate(config: StudyConfig, k: int):
    """Run replication ``k``; returns an array ``(priors, 13)`` or ``None``."""
    rep_seed = derive_seed(config.base_seed, k)
    mu, sigma, lam = config.truth
    model = SkewSymmetricModel(config.family, mu, sigma, lam)
    data = model.sample(config.n, rng=make_rng(rep_seed, 2))
    out = np.empty((len(config.priors), _WIDTH))
    try:
        for j, prior in enumerate(config.priors):
            spec = PosteriorSpec(config.family, data, prior)
            chain = run_chain(spec, config.chain_config(derive_seed(rep_seed, j + 1)))
            for c, p in enumerate(PARAMETERS):
                lo, hi = credible_interval(chain, p, config.level)
                out[j, c] = lo
                out[j, 3 + c] = hi
                out[j, 6 + c] = float(np.median(chain.column(p)))
            out[j, 9:12] = map_estimate(chain)
            try:
                out[j, 12] = savage_dickey_bf(chain, prior)
            except DomainError:
                out[j, 12] = np.nan
    except BtvError:
        return None
    return out


def _run_range(config, ks):
    return [(k, _replicate(config, k)) for k in ks]


def _aggregate(config: StudyConfig, records: np.ndarray) -> list:
    ok = ~np.all(np.isnan(records[:, 0, :12]), axis=1)
    good = records[ok]
    rows = []
    for j, prior in enumerate(config.priors):
        for c, p in enumerate(PARAMETERS):
            truth = config.truth[c]
            if good.shape[0] == 0:
                rows.append(StudyRow(str(prior), p, math.nan, (math.nan,) * 3, (math.nan,) * 3))
                continue
            lo, hi = good[:, j, c], good[:, j, 3 + c]
            cover = float(np.mean((lo <= truth) & (truth <= hi)))
            map_q = tuple(float(v) for v in np.quantile(good[:, j, 9 + c], _QUANTILES))
            med_q = tuple(float(v) for v in np.quantile(good[:, j, 6 + c], _QUANTILES))
            bf = None
            if p == "lambda":
                bfs = good[:, j, 12]
                bfs = bfs[~np.isnan(bfs)]
                bf = float(np.median(bfs)) if bfs.size else None
            rows.append(StudyRow(str(prior), p, cover, map_q, med_q, bf))
    return rows


def run_study(config: StudyConfig) -> StudyReport:
    """Run every replication and aggregate the results.

    Replications are dealt to worker processes round-robin (worker ``i``
    runs ``k = i, i + threads, ...``); with a single thread everything runs
    in-process.
    """
    start = time.perf_counter()
    N = config.replications
    threads = config.threads or default_threads()
    threads = max(1, min(threads, N))
    records = np.full((N, len(config.priors), _WIDTH), np.nan)
    if threads == 1:
        results = _run_range(config, range(N))
    else:
        blocks = [range(i, N, threads) for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_range, config, b) for b in blocks]
            results = [item for f in futures for item in f.result()]
    failed = 0
    for k, rec in results:
        if rec is None:
            failed += 1
        else:
            records[k] = rec
    rows = _aggregate(config, records)
    meta = {
        "family": str(config.family),
        "truth": list(config.truth),
        "n": config.n,
        "retained": config.retained,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "level": config.level,
    }
    return StudyReport(
        rows=rows,
        replications=N,
        failed=failed,
        base_seed=config.base_seed,
        meta=meta,
        records=records,
        wall_clock=time.perf_counter() - start,
    )


# -- serialisation ------------------------------------------------------------


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, str):
        return v
    return f"{v:.3f}"


def _round(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return float(f"{v:.3f}")


def emit_table(report: StudyReport, format="csv") -> str:
    """Serialise ``report`` as CSV or JSON text (see module docstring)."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(v) for v in row.cells()])
        return buf.getvalue()
    if format == "json":
        doc = {
            "schema": SCHEMA,
            "replications": report.replications,
            "failed": report.failed,
            "base_seed": report.base_seed,
            "config": report.meta,
            "columns": list(TABLE_COLUMNS),
            "rows": [
                {k: (v if isinstance(v, str) else _round(v)) for k, v in zip(TABLE_COLUMNS, row.cells())}
                for row in report.rows
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    raise DomainError(f"unknown table format {format!r}")


def parse_table(text: str, format="csv") -> list:
    """Inverse of :func:`emit_table`: a list of :class:`StudyRow`."""

    def build(cells):
        nums = [None if c in ("", None) else float(c) for c in cells[2:]]
        return StudyRow(cells[0], cells[1], nums[0], tuple(nums[1:4]), tuple(nums[4:7]), nums[7])

    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != TABLE_COLUMNS:
            raise DomainError("unexpected table header")
        return [build(r) for r in reader if r]
    if format == "json":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise DomainError("unexpected table schema")
        return [build([r[c] for c in TABLE_COLUMNS]) for r in doc["rows"]]
    raise DomainError(f"unknown table format {format!r}")

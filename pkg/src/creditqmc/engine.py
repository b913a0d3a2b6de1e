"""Scenario evaluation and convergence statistics.

A scenario is one point of the configured source: each coordinate is turned
into a standard normal, correlated, mapped to a final rating and the credit
revalued. The portfolio value is reported in normed units, 100 * value /
total face value.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .analytics import rank_by_risk
from .credit import Credit, MarketData, Rating, ratings_from_z, value_table
from .gaussian import cholesky, clamp_unit, uniform_to_normal
from .sequences import DigitalSequenceGenerator, HybridScheme, PseudoRandomStream

__all__ = [
    "METHODS",
    "ConvergenceSeries",
    "ScenarioContext",
    "SimulationConfig",
    "build_source",
    "percentile_estimate",
    "reference_percentile",
    "run_simulation",
    "running_statistics",
    "scenario_value",
    "simulate_values",
]

METHODS = ("mc", "qmc", "hybrid")
RECOVERY_STREAM = 1
REFERENCE_SCENARIOS = 50_000


@dataclass(frozen=True)
class SimulationConfig:
    method: str = "mc"
    scenarios: int = 1000
    qmc_dims: int = 0
    seed: int = 0
    recovery_mode: str = "fixed"
    correlation: np.ndarray | None = field(default=None, compare=False)
    record_stride: int | None = None
    bit_precision: int = 52
    qmc_skip: int = 1
    batch_size: int = 2048
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.scenarios < 1:
            raise ValueError(f"scenarios must be positive, got {self.scenarios}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.recovery_mode not in ("fixed", "stochastic"):
            raise ValueError(f"unknown recovery mode {self.recovery_mode!r}")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be positive")
        if self.qmc_skip < 0:
            raise ValueError("qmc_skip must be non-negative")
        if self.batch_size < 1 or self.workers < 1:
            raise ValueError("batch_size and workers must be positive")

    @property
    def stride(self) -> int:
        if self.record_stride is not None:
            return self.record_stride
        return max(self.scenarios // 500, 1)


@dataclass
class ConvergenceSeries:
    """Prefix statistics at checkpoints; ``values`` keeps every scenario value."""

    n: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    percentile: np.ndarray
    values: np.ndarray | None = None

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean", "std", "percentile"])
        for row in zip(self.n, self.mean, self.std, self.percentile):
            w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "ConvergenceSeries":
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            n=np.array([int(r["n"]) for r in rows]),
            mean=np.array([float(r["mean"]) for r in rows]),
            std=np.array([float(r["std"]) for r in rows]),
            percentile=np.array([float(r["percentile"]) for r in rows]),
        )


def percentile_estimate(values, n: int | None = None) -> float:
    """The floor(n/100)-th smallest of the first ``n`` values (1-based)."""
    arr = np.asarray(values, dtype=float)
    n = len(arr) if n is None else int(n)
    if n > len(arr):
        raise ValueError(f"asked for {n} values, only {len(arr)} given")
    if n < 100:
        raise ValueError(f"percentile estimate needs at least 100 values, got {n}")
    k = n // 100
    return float(np.partition(arr[:n], k - 1)[k - 1])


def running_statistics(values, stride: int):
    """Checkpoint arrays ``(n, mean, std, percentile)``; std is the population std.

    Checkpoints are every ``stride`` scenarios plus the final one. The
    percentile is NaN below 100 scenarios.
    """
    values = np.asarray(values, dtype=float)
    total = len(values)
    n = np.arange(stride, total + 1, stride)
    if len(n) == 0 or n[-1] != total:
        n = np.append(n, total)
    shift = values[0]
    d = values - shift
    cs = np.cumsum(d)[n - 1]
    cs2 = np.cumsum(d * d)[n - 1]
    m = cs / n
    mean = shift + m
    std = np.sqrt(np.maximum(cs2 / n - m * m, 0.0))
    pct = np.array([percentile_estimate(values, k) if k >= 100 else np.nan for k in n])
    return n, mean, std, pct


class ScenarioContext:
    """Per-portfolio lookup tables for fast batch evaluation."""

    def __init__(
        self,
        portfolio,
        market: MarketData,
        correlation=None,
        recovery_mode: str = "fixed",
        seed: int = 0,
        bit_precision: int = 52,
    ):
        self.credits: list[Credit] = list(portfolio)
        if not self.credits:
            raise ValueError("portfolio is empty")
        s = len(self.credits)
        self.market = market
        self.size = s
        self.total_face = float(sum(c.face_value for c in self.credits))
        self.values = np.array([value_table(c, market) for c in self.credits])
        self.rows = np.array([market.thresholds.row(c.rating) for c in self.credits])
        self.bit_precision = bit_precision
        self.factor = None
        if correlation is not None:
            corr = np.asarray(correlation, dtype=float)
            if corr.shape != (s, s):
                raise ValueError(f"correlation must be {s}x{s}, got {corr.shape}")
            if not np.array_equal(corr, np.eye(s)):
                self.factor = cholesky(corr)
        self.recovery_mode = recovery_mode
        self.face = np.array([c.face_value for c in self.credits])
        self.beta = np.array([market.recovery.beta_parameters(c.seniority) for c in self.credits])
        self.recovery_stream = PseudoRandomStream(seed, s, RECOVERY_STREAM)

    def ratings(self, u: np.ndarray) -> np.ndarray:
        z = uniform_to_normal(u, self.bit_precision)
        if self.factor is not None:
            z = z @ self.factor.T
        return ratings_from_z(z, self.rows)

    def evaluate(self, u: np.ndarray, start: int = 0) -> np.ndarray:
        """Normed portfolio values for the scenarios ``start .. start+len(u)-1``."""
        u = np.atleast_2d(u)
        if u.shape[1] != self.size:
            raise ValueError(f"point dimension {u.shape[1]} != portfolio size {self.size}")
        r = self.ratings(u)
        vals = self.values[np.arange(self.size)[None, :], r]
        if self.recovery_mode == "stochastic":
            hit = r == Rating.D
            if hit.any():
                draws = clamp_unit(self.recovery_stream.points(start, len(u)))
                _, cols = np.nonzero(hit)
                a, b = self.beta[cols, 0], self.beta[cols, 1]
                # zero-std seniorities have no Beta law; they keep the mean
                finite = ~np.isinf(a)
                frac = np.empty(len(cols))
                frac[finite] = stats.beta.ppf(draws[hit][finite], a[finite], b[finite])
                frac[~finite] = self.values[cols[~finite], Rating.D] / self.face[cols[~finite]]
                vals[hit] = frac * self.face[cols]
        return 100.0 * vals.sum(axis=1) / self.total_face


def scenario_value(point, context: ScenarioContext, index: int = 0) -> float:
    return float(context.evaluate(np.asarray(point, dtype=float)[None, :], index)[0])


def build_source(portfolio, config: SimulationConfig, market: MarketData):
    s = len(portfolio)
    if config.method == "mc":
        return PseudoRandomStream(config.seed, s)
    if config.method == "qmc":
        return DigitalSequenceGenerator(s, config.bit_precision, config.qmc_skip)
    if not 0 <= config.qmc_dims <= s:
        raise ValueError(f"hybrid qmc_dims must lie in [0, {s}], got {config.qmc_dims}")
    ranking = rank_by_risk(portfolio, config.qmc_dims, market)
    return HybridScheme(
        s, ranking.prefix, config.seed, config.bit_precision, qmc_skip=config.qmc_skip
    )


def simulate_values(portfolio, config: SimulationConfig, market: MarketData | None = None) -> np.ndarray:
    """All scenario values in index order.

    Batches cover fixed index ranges, so the result does not depend on the
    number of workers.
    """
    market = market or MarketData()
    portfolio = list(portfolio)
    source = build_source(portfolio, config, market)
    ctx = ScenarioContext(
        portfolio, market, config.correlation, config.recovery_mode, config.seed, config.bit_precision
    )
    total = config.scenarios
    starts = range(0, total, config.batch_size)

    def work(start: int) -> np.ndarray:
        count = min(config.batch_size, total - start)
        return ctx.evaluate(source.points(start, count), start)

    if config.workers == 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(work, starts))
    return np.concatenate(parts)


def run_simulation(portfolio, config: SimulationConfig, market: MarketData | None = None) -> ConvergenceSeries:
    values = simulate_values(portfolio, config, market)
    n, mean, std, pct = running_statistics(values, config.stride)
    return ConvergenceSeries(n, mean, std, pct, values)


def reference_percentile(
    portfolio,
    seed: int,
    market: MarketData | None = None,
    scenarios: int = REFERENCE_SCENARIOS,
    recovery_mode: str = "fixed",
    correlation=None,
    workers: int = 1,
) -> float:
    """Large-sample MC estimate of the 1st percentile."""
    config = SimulationConfig(
        method="mc", scenarios=scenarios, seed=seed, recovery_mode=recovery_mode,
        correlation=correlation, workers=workers,
    )
    return percentile_estimate(simulate_values(portfolio, config, market))

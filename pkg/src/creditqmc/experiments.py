"""Synthetic portfolios and the three showcase experiments."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .analytics import portfolio_exact_std, portfolio_expected_value, risk_profile
from .credit import Credit, MarketData, Rating, Seniority, portfolio_to_csv
from .engine import (
    METHODS,
    REFERENCE_SCENARIOS,
    ConvergenceSeries,
    SimulationConfig,
    reference_percentile,
    run_simulation,
)

__all__ = [
    "SHOWCASES",
    "ShowcaseSpec",
    "SyntheticPortfolioSpec",
    "generate_portfolio",
    "load_series",
    "read_reference",
    "run_experiment",
    "run_showcase",
    "save_portfolio",
    "write_reference",
]

# AAA, AA, A, BBB, BB, B, CCC
RATING_MIX = (0.05, 0.10, 0.25, 0.30, 0.17, 0.10, 0.03)
SENIORITY_MIX = {
    Seniority.SENIOR_SECURED: 0.15,
    Seniority.SENIOR_UNSECURED: 0.45,
    Seniority.SENIOR_SUBORDINATED: 0.20,
    Seniority.SUBORDINATED: 0.15,
    Seniority.JUNIOR_SUBORDINATED: 0.05,
}


@dataclass(frozen=True)
class ShowcaseSpec:
    name: str
    size: int
    scenarios: int
    qmc_dims: int


SHOWCASES = {
    "sc1": ShowcaseSpec("SC_I", 100, 1_000, 5),
    "sc2": ShowcaseSpec("SC_II", 500, 5_000, 25),
    "sc3": ShowcaseSpec("SC_III", 1_000, 10_000, 50),
}


@dataclass(frozen=True)
class SyntheticPortfolioSpec:
    size: int
    profile: str = "homogeneous"
    high_risk_count: int = 0
    seed: int = 0
    qmc_dims: int | None = None
    rating_mix: tuple[float, ...] = RATING_MIX
    maturity_range: tuple[int, int] = (1, 10)
    coupon_range: tuple[float, float] = (3.0, 8.0)
    face_range: tuple[float, float] = (500_000.0, 1_500_000.0)
    high_risk_face_multiple: tuple[float, float] = (5.0, 10.0)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"portfolio size must be positive, got {self.size}")
        if self.profile not in ("homogeneous", "inhomogeneous"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.profile == "inhomogeneous":
            if not 1 <= self.high_risk_count <= self.size:
                raise ValueError(
                    f"high_risk_count must lie in [1, {self.size}], got {self.high_risk_count}"
                )
            if self.qmc_dims is not None and self.high_risk_count > self.qmc_dims:
                raise ValueError("high_risk_count must not exceed the QMC dimensions")
        if len(self.rating_mix) != 7 or abs(sum(self.rating_mix) - 1.0) > 1e-9:
            raise ValueError("rating_mix needs 7 weights summing to 1")


def generate_portfolio(spec: SyntheticPortfolioSpec, market: MarketData | None = None) -> list[Credit]:
    """Reproducible test portfolio.

    Ratings follow ``spec.rating_mix``, maturities and coupons (0.25% steps)
    are uniform over their ranges, face values uniform in 1000 steps. For the
    inhomogeneous profile ``high_risk_count`` random positions become B or
    CCC, junior subordinated, with face value a 5-10x multiple of the median;
    a face value is raised further if needed so that every forced credit's
    risk profile strictly exceeds that of every other credit.
    """
    market = market or MarketData()
    rng = np.random.default_rng(spec.seed)
    s = spec.size
    ratings = rng.choice(7, size=s, p=spec.rating_mix)
    lo, hi = spec.maturity_range
    maturities = rng.integers(lo, hi + 1, size=s)
    steps = np.arange(spec.coupon_range[0], spec.coupon_range[1] + 1e-9, 0.25)
    coupons = rng.choice(steps, size=s)
    faces = 1000.0 * rng.integers(int(spec.face_range[0] // 1000), int(spec.face_range[1] // 1000) + 1, size=s)
    seniors = list(SENIORITY_MIX)
    sen_idx = rng.choice(len(seniors), size=s, p=list(SENIORITY_MIX.values()))

    credits = [
        Credit(float(faces[i]), float(coupons[i]), int(maturities[i]), Rating(int(ratings[i])),
               seniors[sen_idx[i]], id=f"C{i + 1:04d}")
        for i in range(s)
    ]
    if spec.profile == "homogeneous":
        return credits

    d = spec.high_risk_count
    forced = sorted(rng.choice(s, size=d, replace=False).tolist())
    median = float(np.median(faces))
    forced_ratings = rng.choice([Rating.B, Rating.CCC], size=d)
    multiples = rng.uniform(*spec.high_risk_face_multiple, size=d)
    forced_set = set(forced)
    rest_max = max(
        (risk_profile(c, market) for i, c in enumerate(credits) if i not in forced_set), default=0.0
    )
    for k, i in enumerate(forced):
        rating = Rating(int(forced_ratings[k]))
        face = 1000.0 * round(median * multiples[k] / 1000.0)
        probe = Credit(face, credits[i].coupon_pct, credits[i].maturity, rating,
                       Seniority.JUNIOR_SUBORDINATED)
        p = risk_profile(probe, market)
        if p <= rest_max:
            face = 1000.0 * math.ceil(face * rest_max / p * 1.05 / 1000.0)
        credits[i] = Credit(face, probe.coupon_pct, probe.maturity, rating,
                            Seniority.JUNIOR_SUBORDINATED, id=credits[i].id)
    return credits


def _fmt(x: float) -> str:
    return repr(float(x))


def write_reference(path, exact_mean: float, exact_std: float, theta: float, scenarios: int, seed: int) -> None:
    lines = [
        f"exact_mean={_fmt(exact_mean)}",
        f"exact_std={_fmt(exact_std)}",
        f"reference_percentile={_fmt(theta)}",
        f"reference_scenarios={scenarios}",
        f"reference_seed={seed}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_reference(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition("=")
        out[key] = int(val) if key in ("reference_scenarios", "reference_seed") else float(val)
    return out


def run_experiment(
    portfolio,
    out_dir,
    scenarios: int,
    qmc_dims: int,
    seed: int = 0,
    methods=METHODS,
    market: MarketData | None = None,
    recovery_mode: str = "fixed",
    correlation=None,
    reference_scenarios: int = REFERENCE_SCENARIOS,
    record_stride: int | None = None,
    workers: int = 1,
    name: str = "custom",
) -> dict:
    """Run the requested methods on one portfolio and write all outputs.

    Files: ``<method>.csv`` per method, ``reference.txt`` and
    ``summary.json``. MC and the pseudo-random part of the hybrid share
    ``seed``; the reference run uses ``seed + 1``.
    """
    market = market or MarketData()
    portfolio = list(portfolio)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    exact_mean = portfolio_expected_value(portfolio, market)
    if correlation is None or np.array_equal(np.asarray(correlation), np.eye(len(portfolio))):
        exact_std = portfolio_exact_std(portfolio, market, recovery_mode)
    else:
        exact_std = float("nan")
    ref_seed = (seed + 1) % 2**64
    theta = reference_percentile(
        portfolio, ref_seed, market, reference_scenarios, recovery_mode, correlation, workers
    )
    write_reference(out / "reference.txt", exact_mean, exact_std, theta, reference_scenarios, ref_seed)

    results = {}
    for method in methods:
        config = SimulationConfig(
            method=method, scenarios=scenarios, qmc_dims=qmc_dims if method == "hybrid" else 0,
            seed=seed, recovery_mode=recovery_mode, correlation=correlation,
            record_stride=record_stride, workers=workers,
        )
        series = run_simulation(portfolio, config, market)
        series.to_csv(out / f"{method}.csv")
        results[method] = {
            "final_mean": float(series.mean[-1]),
            "final_std": float(series.std[-1]),
            "final_percentile": float(series.percentile[-1]),
            "abs_error_mean": abs(float(series.mean[-1]) - exact_mean),
            "abs_error_std": abs(float(series.std[-1]) - exact_std),
            "abs_error_percentile": abs(float(series.percentile[-1]) - theta),
        }
    summary = {
        "showcase": name,
        "size": len(portfolio),
        "scenarios": scenarios,
        "qmc_dims": qmc_dims,
        "seed": seed,
        "reference_seed": ref_seed,
        "recovery_mode": recovery_mode,
        "exact_mean": exact_mean,
        "exact_std": exact_std,
        "reference_percentile": theta,
        "methods": results,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_showcase(spec: ShowcaseSpec, portfolio, out_dir, **kwargs) -> dict:
    portfolio = list(portfolio)
    if len(portfolio) != spec.size:
        raise ValueError(f"{spec.name} needs {spec.size} credits, portfolio has {len(portfolio)}")
    return run_experiment(
        portfolio, out_dir, spec.scenarios, spec.qmc_dims, name=spec.name, **kwargs
    )


def save_portfolio(portfolio, spec: SyntheticPortfolioSpec | None, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    portfolio_to_csv(portfolio, out / "portfolio.csv")
    if spec is not None:
        (out / "portfolio_spec.json").write_text(json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n")


def load_series(out_dir, method: str) -> ConvergenceSeries:
    return ConvergenceSeries.from_csv(Path(out_dir) / f"{method}.csv")

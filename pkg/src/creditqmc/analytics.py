"""Closed-form portfolio moments (independent credits) and risk ranking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .credit import Credit, MarketData, Rating, value_table

__all__ = [
    "ContractError",
    "PortfolioMoments",
    "RiskRanking",
    "credit_variance",
    "expected_credit_value",
    "portfolio_exact_std",
    "portfolio_expected_value",
    "portfolio_moments",
    "rank_by_risk",
    "risk_profile",
]


class ContractError(ValueError):
    """Called outside the domain where the closed form holds."""


@dataclass(frozen=True)
class PortfolioMoments:
    expected_value: float
    std_dev: float
    per_credit_expectations: tuple[float, ...]


@dataclass(frozen=True)
class RiskRanking:
    order: tuple[int, ...]
    profiles: tuple[float, ...]
    qmc_dims: int

    @property
    def prefix(self) -> tuple[int, ...]:
        return self.order[: self.qmc_dims]


def expected_credit_value(credit: Credit, market: MarketData) -> float:
    return float(market.probabilities(credit.rating) @ value_table(credit, market))


def credit_variance(
    credit: Credit, market: MarketData, recovery_mode: str = "fixed", literal: bool = False
) -> float:
    """Variance of one credit's horizon value (currency units squared).

    Law of total variance over the final rating; with stochastic recovery the
    default outcome also carries ``(std/100 * M)**2``. ``literal=True`` drops
    the ``p_D * (v_D - mu)**2`` term, which some references omit.
    """
    if recovery_mode not in ("fixed", "stochastic"):
        raise ValueError(f"unknown recovery mode {recovery_mode!r}")
    p = market.probabilities(credit.rating)
    v = value_table(credit, market)
    mu = float(p @ v)
    dev2 = (v - mu) ** 2
    if literal:
        dev2[Rating.D] = 0.0
    var = float(p @ dev2)
    if recovery_mode == "stochastic" or literal:
        sd = market.recovery.std(credit.seniority) / 100.0 * credit.face_value
        var += p[Rating.D] * sd * sd
    return var


def _check_portfolio(portfolio) -> list[Credit]:
    credits = list(portfolio)
    if not credits:
        raise ValueError("portfolio is empty")
    return credits


def portfolio_expected_value(portfolio, market: MarketData) -> float:
    """Normed expected horizon value, ``100 * sum E(A_i) / sum M_i``."""
    credits = _check_portfolio(portfolio)
    total_face = sum(c.face_value for c in credits)
    return 100.0 * sum(expected_credit_value(c, market) for c in credits) / total_face


def portfolio_exact_std(
    portfolio,
    market: MarketData,
    recovery_mode: str = "fixed",
    correlation=None,
    literal: bool = False,
) -> float:
    """Normed standard deviation; only defined for uncorrelated credits."""
    credits = _check_portfolio(portfolio)
    if correlation is not None:
        corr = np.asarray(correlation, dtype=float)
        if not np.array_equal(corr, np.eye(len(credits))):
            raise ContractError("exact variance is only available for the identity correlation")
    total_face = sum(c.face_value for c in credits)
    var = sum(credit_variance(c, market, recovery_mode, literal) for c in credits)
    return 100.0 * np.sqrt(var) / total_face


def portfolio_moments(portfolio, market: MarketData, recovery_mode: str = "fixed") -> PortfolioMoments:
    credits = _check_portfolio(portfolio)
    total_face = sum(c.face_value for c in credits)
    per_credit = tuple(100.0 * expected_credit_value(c, market) / total_face for c in credits)
    return PortfolioMoments(
        expected_value=float(sum(per_credit)),
        std_dev=portfolio_exact_std(credits, market, recovery_mode),
        per_credit_expectations=per_credit,
    )


def risk_profile(credit: Credit, market: MarketData) -> float:
    """Expected loss given default weighted by default probability."""
    rr = market.recovery.mean(credit.seniority)
    p_default = market.transitions.row(credit.rating)[Rating.D] / 100.0
    return (1.0 - rr / 100.0) * credit.face_value * p_default


def rank_by_risk(portfolio, qmc_dims: int, market: MarketData) -> RiskRanking:
    """Credits by descending risk profile; ties keep ascending index."""
    credits = _check_portfolio(portfolio)
    if not 0 <= qmc_dims <= len(credits):
        raise ValueError(f"qmc_dims must lie in [0, {len(credits)}], got {qmc_dims}")
    profiles = [risk_profile(c, market) for c in credits]
    order = sorted(range(len(credits)), key=lambda i: (-profiles[i], i))
    return RiskRanking(tuple(order), tuple(profiles), int(qmc_dims))

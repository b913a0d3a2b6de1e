"""Credits, market data, bond revaluation and rating thresholds."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import stats

from .gaussian import inverse_normal_cdf, normal_cdf

__all__ = [
    "BOUNDARY_RATINGS",
    "Credit",
    "DataError",
    "ForwardCurveSet",
    "INITIAL_RATINGS",
    "MarketData",
    "Rating",
    "RecoveryTable",
    "Seniority",
    "ThresholdTable",
    "TransitionMatrix",
    "compute_thresholds",
    "default_value",
    "draw_recovery",
    "forward_one_year",
    "load_portfolio_csv",
    "portfolio_to_csv",
    "present_value",
    "rating_from_z",
    "ratings_from_z",
    "value_table",
    "year_end_value",
]


class DataError(ValueError):
    """Input data is missing or inconsistent."""


class Rating(IntEnum):
    AAA = 0
    AA = 1
    A = 2
    BBB = 3
    BB = 4
    B = 5
    CCC = 6
    D = 7

    @classmethod
    def parse(cls, label: str) -> "Rating":
        label = label.strip()
        if label.lower() == "default":
            return cls.D
        try:
            return cls[label.upper()]
        except KeyError:
            raise DataError(f"unknown rating {label!r}") from None


INITIAL_RATINGS = tuple(r for r in Rating if r is not Rating.D)
# threshold boundaries in ascending order: Z_D <= Z_CCC <= ... <= Z_AA
BOUNDARY_RATINGS = (Rating.D, Rating.CCC, Rating.B, Rating.BB, Rating.BBB, Rating.A, Rating.AA)


class Seniority(str, Enum):
    SENIOR_SECURED = "SeniorSecured"
    SENIOR_UNSECURED = "SeniorUnsecured"
    SENIOR_SUBORDINATED = "SeniorSubordinated"
    SUBORDINATED = "Subordinated"
    JUNIOR_SUBORDINATED = "JuniorSubordinated"

    @classmethod
    def parse(cls, label: str) -> "Seniority":
        key = label.strip().replace(" ", "").lower()
        for s in cls:
            if s.value.lower() == key:
                return s
        raise DataError(f"unknown seniority {label!r}")


@dataclass(frozen=True)
class Credit:
    face_value: float
    coupon_pct: float
    maturity: int
    rating: Rating
    seniority: Seniority
    id: str = ""

    def __post_init__(self):
        if not self.face_value > 0:
            raise ValueError(f"face value must be positive, got {self.face_value}")
        if not self.coupon_pct >= 0:
            raise ValueError(f"coupon must be non-negative, got {self.coupon_pct}")
        if int(self.maturity) != self.maturity or self.maturity < 1:
            raise ValueError(f"maturity must be a positive integer, got {self.maturity}")
        if Rating(self.rating) is Rating.D:
            raise ValueError("a credit cannot start in default")
        object.__setattr__(self, "maturity", int(self.maturity))
        object.__setattr__(self, "rating", Rating(self.rating))
        object.__setattr__(self, "seniority", Seniority(self.seniority))


# --------------------------------------------------------------------------- #
# Market data                                                                 #
# --------------------------------------------------------------------------- #


def _data_text(name: str) -> str:
    return resources.files("creditqmc").joinpath(f"data/{name}").read_text()


def _read_csv(source) -> list[dict[str, str]]:
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text()
    elif isinstance(source, (str, Path)):
        raise DataError(f"file not found: {source}")
    else:
        text = source.read()
    return list(csv.DictReader(io.StringIO(text)))


class TransitionMatrix:
    """One-year migration probabilities in percent, 7 initial x 8 final ratings."""

    ROW_SUM_TOL = 0.01

    def __init__(self, percent):
        pct = np.array(percent, dtype=float)
        if pct.shape != (7, 8):
            raise DataError(f"transition matrix must be 7x8, got {pct.shape}")
        if np.any(pct < 0):
            raise DataError("transition probabilities must be non-negative")
        sums = pct.sum(axis=1)
        for r, total in zip(INITIAL_RATINGS, sums):
            if abs(total - 100.0) > self.ROW_SUM_TOL + 1e-9:
                raise DataError(f"row {r.name} sums to {total:.4f}%, expected 100 +/- 0.01")
        pct.setflags(write=False)
        self.percent = pct

    def row(self, rating: Rating) -> np.ndarray:
        return self.percent[Rating(rating)]

    @classmethod
    def from_csv(cls, source) -> "TransitionMatrix":
        rows = _read_csv(source)
        pct = np.full((7, 8), np.nan)
        for rec in rows:
            key = next(iter(rec))
            x = Rating.parse(rec[key])
            if x is Rating.D:
                raise DataError("transition file cannot contain a D row")
            for col, val in rec.items():
                if col == key:
                    continue
                pct[x, Rating.parse(col)] = float(val)
        if np.isnan(pct).any():
            raise DataError("transition file is missing entries")
        return cls(pct)

    @classmethod
    def default(cls) -> "TransitionMatrix":
        return cls.from_csv(io.StringIO(_data_text("transitions.csv")))


class RecoveryTable:
    """Recovery rate mean and standard deviation (percent of face) per seniority."""

    def __init__(self, stats_pct: dict):
        table = {}
        for sen, (mean, std) in stats_pct.items():
            sen = Seniority(sen)
            if not 0.0 <= mean <= 100.0:
                raise DataError(f"{sen.value}: mean recovery {mean} outside [0, 100]")
            if std < 0:
                raise DataError(f"{sen.value}: negative recovery std {std}")
            table[sen] = (float(mean), float(std))
        missing = set(Seniority) - set(table)
        if missing:
            raise DataError(f"recovery table lacks {sorted(s.value for s in missing)}")
        self._table = table
        for sen in table:
            self.beta_parameters(sen)  # feasibility check at load

    def mean(self, seniority: Seniority) -> float:
        return self._table[Seniority(seniority)][0]

    def std(self, seniority: Seniority) -> float:
        return self._table[Seniority(seniority)][1]

    def beta_parameters(self, seniority: Seniority) -> tuple[float, float]:
        """Moment-matched Beta(a, b) on [0, 1] for the recovery fraction."""
        mean, std = self._table[Seniority(seniority)]
        m, v = mean / 100.0, (std / 100.0) ** 2
        if v == 0.0:
            return (np.inf, np.inf)
        if not 0.0 < m < 1.0 or v >= m * (1.0 - m):
            raise DataError(
                f"{Seniority(seniority).value}: no Beta law with mean {mean}% and std {std}%"
            )
        k = m * (1.0 - m) / v - 1.0
        return (m * k, (1.0 - m) * k)

    @classmethod
    def from_csv(cls, source) -> "RecoveryTable":
        rows = _read_csv(source)
        try:
            data = {
                Seniority.parse(r["seniority"]): (float(r["mean_pct"]), float(r["std_pct"]))
                for r in rows
            }
        except KeyError as exc:
            raise DataError(f"recovery file missing column {exc}") from None
        return cls(data)

    @classmethod
    def default(cls) -> "RecoveryTable":
        return cls.from_csv(io.StringIO(_data_text("recovery.csv")))


class ForwardCurveSet:
    """Forward zero rates ``f^X_{0,t}`` per rating and integer maturity.

    Inputs are in percent; stored and returned as decimal fractions.
    """

    def __init__(self, rates_pct: dict):
        rates = {}
        for (rating, t), pct in rates_pct.items():
            if pct <= -100.0:
                raise DataError(f"rate {pct}% for ({Rating(rating).name}, {t}) is not above -100%")
            rates[(Rating(rating), int(t))] = float(pct) / 100.0
        self._rates = rates

    def rate(self, rating: Rating, maturity: int) -> float:
        try:
            return self._rates[(Rating(rating), int(maturity))]
        except KeyError:
            raise DataError(
                f"no forward rate for rating {Rating(rating).name}, maturity {maturity}"
            ) from None

    @property
    def max_maturity(self) -> int:
        return max(t for _, t in self._rates)

    @classmethod
    def flat(cls, rate_pct: float, max_maturity: int = 30) -> "ForwardCurveSet":
        return cls({(r, t): rate_pct for r in INITIAL_RATINGS for t in range(1, max_maturity + 1)})

    @classmethod
    def from_csv(cls, source) -> "ForwardCurveSet":
        rows = _read_csv(source)
        try:
            data = {
                (Rating.parse(r["rating"]), int(r["maturity"])): float(r["rate_pct"]) for r in rows
            }
        except KeyError as exc:
            raise DataError(f"curve file missing column {exc}") from None
        return cls(data)

    @classmethod
    def default(cls) -> "ForwardCurveSet":
        """Illustrative rating-ordered curves shipped with the package (not market data)."""
        return cls.from_csv(io.StringIO(_data_text("curves.csv")))


# --------------------------------------------------------------------------- #
# Valuation                                                                   #
# --------------------------------------------------------------------------- #


def present_value(credit: Credit, curves: ForwardCurveSet) -> float:
    c = credit.coupon_pct / 100.0 * credit.face_value
    t_max = credit.maturity
    pv = sum(c / (1.0 + curves.rate(credit.rating, l)) ** l for l in range(1, t_max))
    final = (1.0 + credit.coupon_pct / 100.0) * credit.face_value
    return pv + final / (1.0 + curves.rate(credit.rating, t_max)) ** t_max


def forward_one_year(curves: ForwardCurveSet, rating: Rating, maturity: int) -> float:
    """One-year-forward zero rate for horizon ``maturity``, as a decimal."""
    if maturity < 2:
        raise ValueError(f"forward rate needs maturity >= 2, got {maturity}")
    r1 = curves.rate(rating, 1)
    rt = curves.rate(rating, maturity)
    return ((1.0 + rt) ** maturity / (1.0 + r1)) ** (1.0 / (maturity - 1)) - 1.0


def year_end_value(credit: Credit, rating: Rating, curves: ForwardCurveSet) -> float:
    """Value at the horizon after migrating to ``rating`` (not D).

    The coupon paid at the horizon itself is not counted; for a one-year
    bond the whole final payment is.
    """
    if Rating(rating) is Rating.D:
        raise ValueError("year_end_value is undefined for D; use default_value")
    c = credit.coupon_pct / 100.0 * credit.face_value
    t_max = credit.maturity
    final = (1.0 + credit.coupon_pct / 100.0) * credit.face_value
    if t_max == 1:
        return final
    value = sum(
        c / (1.0 + forward_one_year(curves, rating, l)) ** (l - 1) for l in range(2, t_max)
    )
    return value + final / (1.0 + forward_one_year(curves, rating, t_max)) ** (t_max - 1)


def default_value(credit: Credit, recovery_pct: float) -> float:
    if not 0.0 <= recovery_pct <= 100.0:
        raise ValueError(f"recovery must lie in [0, 100], got {recovery_pct}")
    return recovery_pct / 100.0 * credit.face_value


def draw_recovery(seniority: Seniority, u, mode: str = "fixed", table: RecoveryTable | None = None):
    """Recovery rate in percent.

    ``fixed`` returns the seniority mean; ``stochastic`` returns the
    ``u``-quantile of the Beta law on [0, 100] with the tabled mean and std.
    """
    table = table or RecoveryTable.default()
    u_arr = np.asarray(u, dtype=float)
    if np.any(~(u_arr > 0.0) | ~(u_arr < 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    if mode == "fixed":
        out = np.full(u_arr.shape, table.mean(seniority))
    elif mode == "stochastic":
        a, b = table.beta_parameters(seniority)
        if np.isinf(a):
            out = np.full(u_arr.shape, table.mean(seniority))
        else:
            out = 100.0 * stats.beta.ppf(u_arr, a, b)
    else:
        raise ValueError(f"unknown recovery mode {mode!r}")
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- #
# Thresholds                                                                  #
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ThresholdTable:
    """Gaussian cut points, shape (7, 7): rows are initial ratings AAA..CCC,
    columns the boundaries Z_D, Z_CCC, Z_B, Z_BB, Z_BBB, Z_A, Z_AA."""

    z: np.ndarray

    def row(self, rating: Rating) -> np.ndarray:
        return self.z[Rating(rating)]

    def band_probabilities(self, rating: Rating) -> np.ndarray:
        """Probability of each final rating, indexed AAA..D like ``Rating``."""
        cdf = np.concatenate([[0.0], normal_cdf(self.row(rating)), [1.0]])
        by_band = np.diff(cdf)  # D, CCC, B, BB, BBB, A, AA, AAA
        return by_band[::-1].copy()


def compute_thresholds(transitions: TransitionMatrix) -> ThresholdTable:
    """Cut points from probabilities cumulated upward from default.

    Zero cumulative mass maps to -inf and full mass to +inf. When a row does
    not sum to exactly 100%, the residual ends up in the AAA band.
    """
    z = np.empty((7, 7))
    for x in INITIAL_RATINGS:
        pct = transitions.row(x)
        cum = np.cumsum([pct[b] for b in BOUNDARY_RATINGS]) / 100.0
        for k, p in enumerate(cum):
            if p <= 0.0:
                z[x, k] = -np.inf
            elif p >= 1.0:
                z[x, k] = np.inf
            else:
                z[x, k] = inverse_normal_cdf(p)
        if np.any(z[x, 1:] < z[x, :-1]):
            raise DataError(f"non-monotone thresholds for {x.name}")
    z.setflags(write=False)
    return ThresholdTable(z)


def rating_from_z(z: float, row) -> Rating:
    """Final rating for asset return ``z`` given one threshold row.

    D if z <= Z_D, CCC if Z_D < z <= Z_CCC, ..., AAA if z > Z_AA.
    """
    above = int(np.sum(np.asarray(row) < z))
    return Rating(7 - above)


def ratings_from_z(z: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Vectorized ``rating_from_z``: ``z`` is (n, s), ``rows`` is (s, 7)."""
    above = np.zeros(z.shape, dtype=np.intp)
    for k in range(rows.shape[1]):
        above += z > rows[:, k]
    return 7 - above


# --------------------------------------------------------------------------- #
# Bundles and files                                                           #
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class MarketData:
    transitions: TransitionMatrix = field(default_factory=TransitionMatrix.default)
    recovery: RecoveryTable = field(default_factory=RecoveryTable.default)
    curves: ForwardCurveSet = field(default_factory=ForwardCurveSet.default)

    @cached_property
    def thresholds(self) -> ThresholdTable:
        return compute_thresholds(self.transitions)

    def probabilities(self, rating: Rating) -> np.ndarray:
        """Final-rating probabilities implied by the thresholds (AAA..D)."""
        return self.thresholds.band_probabilities(rating)


def value_table(credit: Credit, market: MarketData) -> np.ndarray:
    """Horizon value for each final rating AAA..D; D uses the mean recovery."""
    out = np.empty(8)
    for y in INITIAL_RATINGS:
        out[y] = year_end_value(credit, y, market.curves)
    out[Rating.D] = default_value(credit, market.recovery.mean(credit.seniority))
    return out


PORTFOLIO_HEADER = ["id", "face_value", "coupon_pct", "maturity_years", "rating", "seniority"]


def load_portfolio_csv(source) -> list[Credit]:
    rows = _read_csv(source)
    if rows and list(rows[0].keys()) != PORTFOLIO_HEADER:
        raise DataError(f"portfolio header must be {','.join(PORTFOLIO_HEADER)}")
    credits = []
    for i, r in enumerate(rows):
        try:
            credits.append(
                Credit(
                    face_value=float(r["face_value"]),
                    coupon_pct=float(r["coupon_pct"]),
                    maturity=int(r["maturity_years"]),
                    rating=Rating.parse(r["rating"]),
                    seniority=Seniority.parse(r["seniority"]),
                    id=r["id"],
                )
            )
        except ValueError as exc:
            raise DataError(f"portfolio row {i + 1}: {exc}") from None
    if not credits:
        raise DataError("portfolio is empty")
    return credits


def portfolio_to_csv(credits, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PORTFOLIO_HEADER)
    for i, c in enumerate(credits):
        w.writerow([
            c.id or f"C{i + 1:04d}", repr(float(c.face_value)), repr(float(c.coupon_pct)),
            c.maturity, c.rating.name, c.seniority.value,
        ])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text

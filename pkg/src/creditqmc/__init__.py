"""CreditMetrics-style portfolio revaluation with MC, QMC and hybrid scenario sources."""

from .credit import (
    Credit,
    DataError,
    ForwardCurveSet,
    MarketData,
    Rating,
    RecoveryTable,
    Seniority,
    TransitionMatrix,
)
from .sequences import DigitalSequenceGenerator, HybridScheme, PseudoRandomStream

__version__ = "0.1.0"

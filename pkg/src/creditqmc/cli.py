"""Command-line entry point.

Exit codes: 0 success, 1 invalid arguments or configuration, 2 bad input data.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .credit import DataError, ForwardCurveSet, MarketData, RecoveryTable, TransitionMatrix, load_portfolio_csv
from .engine import METHODS
from .experiments import SHOWCASES, SyntheticPortfolioSpec, generate_portfolio, run_experiment, save_portfolio
from .gaussian import load_correlation_csv

log = logging.getLogger("creditqmc")

EXIT_OK, EXIT_VALIDATION, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="creditqmc", description="CreditMetrics simulation with MC, QMC and hybrid sequences.")
    p.add_argument("--method", choices=[*METHODS, "all"], default="all")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--portfolio", metavar="FILE", help="portfolio CSV")
    src.add_argument("--generate", choices=["homogeneous", "inhomogeneous"], help="synthesize a portfolio")
    p.add_argument("--size", type=int, help="credits in a generated portfolio")
    p.add_argument("--high-risk-count", type=int, help="forced high-risk credits (inhomogeneous)")
    p.add_argument("--portfolio-seed", type=int, help="generator seed (default: --seed)")
    p.add_argument("--showcase", choices=sorted(SHOWCASES))
    p.add_argument("--scenarios", type=int)
    p.add_argument("--qmc-dims", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--curves", metavar="FILE")
    p.add_argument("--transitions", metavar="FILE")
    p.add_argument("--recovery", metavar="FILE")
    p.add_argument("--recovery-mode", choices=["fixed", "stochastic"], default="fixed")
    p.add_argument("--correlation", metavar="FILE", help="square CSV, header row of credit ids")
    p.add_argument("--reference-scenarios", type=int, default=50_000)
    p.add_argument("--stride", type=int, help="checkpoint interval (default N/500)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _resolve(args, parser):
    """Fill size/scenarios/qmc-dims from the showcase, rejecting contradictions."""
    if args.showcase:
        sc = SHOWCASES[args.showcase]
        for flag, have, want in (
            ("--size", args.size, sc.size),
            ("--scenarios", args.scenarios, sc.scenarios),
            ("--qmc-dims", args.qmc_dims, sc.qmc_dims),
        ):
            if have is not None and have != want:
                parser.error(f"{flag}={have} contradicts showcase {args.showcase} ({want})")
        args.size, args.scenarios, args.qmc_dims = sc.size, sc.scenarios, sc.qmc_dims
    if args.scenarios is None:
        args.scenarios = 1000
    if args.qmc_dims is None:
        args.qmc_dims = 5
    if args.generate and args.size is None:
        parser.error("--generate needs --size or --showcase")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    _resolve(args, parser)
    try:
        market = MarketData(
            transitions=TransitionMatrix.from_csv(args.transitions) if args.transitions else TransitionMatrix.default(),
            recovery=RecoveryTable.from_csv(args.recovery) if args.recovery else RecoveryTable.default(),
            curves=ForwardCurveSet.from_csv(args.curves) if args.curves else ForwardCurveSet.default(),
        )
        spec = None
        if args.portfolio:
            portfolio = load_portfolio_csv(args.portfolio)
            if args.showcase and len(portfolio) != args.size:
                raise ValueError(f"showcase {args.showcase} needs {args.size} credits, file has {len(portfolio)}")
        else:
            high = args.high_risk_count
            if args.generate == "inhomogeneous" and high is None:
                high = min(args.qmc_dims, args.size)
            spec = SyntheticPortfolioSpec(
                size=args.size,
                profile=args.generate,
                high_risk_count=high or 0,
                seed=args.portfolio_seed if args.portfolio_seed is not None else args.seed,
                qmc_dims=args.qmc_dims if args.generate == "inhomogeneous" else None,
            )
            portfolio = generate_portfolio(spec, market)
        correlation = None
        if args.correlation:
            correlation = load_correlation_csv(args.correlation, [c.id for c in portfolio])
        methods = METHODS if args.method == "all" else (args.method,)
        save_portfolio(portfolio, spec, args.out)
        log.info("running %s on %d credits, N=%d", ",".join(methods), len(portfolio), args.scenarios)
        summary = run_experiment(
            portfolio, args.out, args.scenarios, args.qmc_dims, seed=args.seed, methods=methods,
            market=market, recovery_mode=args.recovery_mode, correlation=correlation,
            reference_scenarios=args.reference_scenarios, record_stride=args.stride,
            workers=args.workers, name=SHOWCASES[args.showcase].name if args.showcase else "custom",
        )
    except DataError as exc:
        print(f"creditqmc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OverflowError) as exc:
        print(f"creditqmc: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    print(f"exact mean {summary['exact_mean']:.6f}  exact std {summary['exact_std']:.6f}  "
          f"reference 1% level {summary['reference_percentile']:.6f}")
    for method, r in summary["methods"].items():
        print(f"{method:>6}: |mean err| {r['abs_error_mean']:.6f}  |std err| {r['abs_error_std']:.6f}  "
              f"|pct err| {r['abs_error_percentile']:.6f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

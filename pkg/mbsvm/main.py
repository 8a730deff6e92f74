import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from mbsvm.config import settings
from mbsvm.core.dataset import load_dataset, normalize, save_dataset
from mbsvm.core.errors import ConfigError, MbsvmError
from mbsvm.core.reference import ReferenceCache
from mbsvm.harness.cli import build_parser, build_spec, sigma_source
from mbsvm.harness.synthetic import generate_synthetic
from mbsvm.harness.workflow import SolveWorkflow, SweepWorkflow, resolve_sigma, sigma_report
from mbsvm.harness.trace import format_float
from mbsvm.utils.logging import setup_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TARGET_NOT_REACHED = 2


def _solve(args: argparse.Namespace) -> int:
    spec = build_spec(args)
    if len(spec.solvers) != 1:
        raise ConfigError("solve runs exactly one solver")
    outcome = SolveWorkflow(spec, auto_iters=args.iters == "auto").run()
    result = outcome.result
    report = result.report
    print(f"solver = {spec.solvers[0].kind.value}")
    print(f"iterations = {result.iterations}")
    print(f"primal = {format_float(report.primal)}")
    print(f"dual = {format_float(report.dual)}")
    print(f"gap = {format_float(report.gap)}")
    if report.test_error is not None:
        print(f"test_error = {format_float(report.test_error)}")
    if result.beta_final is not None:
        print(f"beta = {format_float(result.beta_final)}")
    print(f"target_reached = {'true' if result.reached else 'false'}")
    if spec.solvers[0].stop_on_target and not result.reached:
        return EXIT_TARGET_NOT_REACHED
    return EXIT_OK


def _sweep(args: argparse.Namespace) -> int:
    spec = build_spec(args)
    cache = ReferenceCache(settings.REFERENCE_CACHE)
    workers = args.max_workers or settings.MAX_WORKERS
    rows = SweepWorkflow(spec, cache=cache, max_workers=workers, auto_iters=args.iters == "auto").run()
    print("solver,b,beta_b_over_b,iterations,final_subopt")
    for row in rows:
        iterations = row.iterations if row.reached else "not reached"
        print(f"{row.solver.value},{row.b},{row.beta_b_over_b:.6g},{iterations},{row.final_subopt:.3e}")
    return EXIT_OK


def _sigma(args: argparse.Namespace) -> int:
    if not args.train:
        raise ConfigError("--train is required")
    ds = load_dataset(args.train)
    if not args.no_normalize:
        ds = normalize(ds)
    estimate = resolve_sigma(ds, sigma_source(args), args.seed or 0)
    print(sigma_report(ds, estimate, args.batch_list or []))
    return EXIT_OK


def _synth(args: argparse.Namespace) -> int:
    ds = generate_synthetic(args.kind, args.n, args.d, seed=args.seed, sigma_target=args.sigma_target,
                            label_noise=args.label_noise)
    save_dataset(ds, args.out)
    print(f"wrote {ds.n} examples (d = {ds.dim}) to {args.out}")
    return EXIT_OK


COMMANDS = {
    "solve": _solve,
    "sweep": _sweep,
    "sigma": _sigma,
    "synth": _synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        setup_logging(settings.LOG_LEVEL, settings.LOG_FILE)
        logging.error(str(e))
        return EXIT_ERROR

    setup_logging(args.log_level or settings.LOG_LEVEL, args.log_file or settings.LOG_FILE)
    try:
        return COMMANDS[args.command](args)
    except (MbsvmError, ValidationError, OSError) as e:
        logging.error(f"{args.command} failed: {e}")
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())

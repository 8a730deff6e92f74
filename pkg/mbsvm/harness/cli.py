import argparse
from typing import Dict, List, Optional

from pydantic import ValidationError

from mbsvm.core.errors import ConfigError
from mbsvm.core.models import AveragingMode, ExperimentSpec, SigmaSource, SolverConfig, SolverKind
from mbsvm.harness.synthetic import SYNTHETIC_KINDS

# regularization used with the public benchmark datasets of the same names
PRESETS: Dict[str, float] = {
    "cov": 1e-5,
    "rcv1": 1e-4,
    "astro-ph": 5e-5,
    "news20": 1.25e-4,
}


class ArgumentParser(argparse.ArgumentParser):
    """Raises ConfigError on usage errors so that every usage problem exits with code 1."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _iters(text: str):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got '{text}'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("iterations must be positive")
    return value


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--train", help="LIBSVM training file (.zst allowed)")
    p.add_argument("--test", help="LIBSVM test file")
    p.add_argument("--test-fraction", type=float, help="hold out this fraction of --train as test data")
    p.add_argument("--no-normalize", action="store_true", help="do not scale examples into the unit ball")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--sigma-sq", type=float, help="use this sigma^2 instead of estimating it")
    p.add_argument("--sigma-exact", action="store_true", help="compute sigma^2 with a dense SVD (small data)")


def _add_solver_args(p: argparse.ArgumentParser, many: bool):
    kinds = ", ".join(kind.value for kind in SolverKind)
    p.add_argument("--solver", help=f"{'comma-separated solvers' if many else 'solver'}: {kinds}")
    p.add_argument("--lambda", dest="lam", type=float, help="regularization parameter")
    p.add_argument("--preset", choices=sorted(PRESETS), help="take lambda from a dataset preset")
    p.add_argument("--iters", type=_iters, help="iteration budget T, or 'auto' for the convergence schedule")
    p.add_argument("--epsilon", type=float, help="target gap (solve) or primal suboptimality (sweep)")
    p.add_argument("--beta-override", type=float, help="use this beta instead of beta_b")
    p.add_argument("--gamma", type=float, help="beta smoothing of the aggressive solver (default 0.95)")
    p.add_argument("--averaging", choices=[mode.value for mode in AveragingMode])
    p.add_argument("--checkpoint-every", type=int, help="iterations between objective evaluations")
    p.add_argument("--workers", type=int, help="threads sharing each mini-batch")
    p.add_argument("--deterministic-reduction", action="store_true",
                   help="fixed reduction order and no wall-clock column, for byte-identical traces")
    p.add_argument("--spec", help="JSON experiment spec; explicit flags override it")
    p.add_argument("--out", help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="mbsvm", description="Mini-batch primal and dual solvers for linear SVMs.")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", help="also write the log to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="train one solver and write its trace")
    _add_data_args(solve)
    _add_solver_args(solve, many=False)
    solve.add_argument("--batch", type=int, help="mini-batch size b (default 1)")
    solve.add_argument("--stop-on-target", action="store_true",
                       help="stop once the gap reaches --epsilon; exit 2 if it never does")

    sweep = sub.add_parser("sweep", help="iterations to a target suboptimality across batch sizes")
    _add_data_args(sweep)
    _add_solver_args(sweep, many=True)
    sweep.add_argument("--batch-list", type=_int_list, help="comma-separated batch sizes")
    sweep.add_argument("--max-workers", type=int, help="parallel sweep cells")

    sigma = sub.add_parser("sigma", help="estimate sigma^2 and tabulate beta_b")
    _add_data_args(sigma)
    sigma.add_argument("--batch-list", type=_int_list, help="batch sizes for the beta_b table")

    synth = sub.add_parser("synth", help="write a synthetic LIBSVM dataset")
    synth.add_argument("--kind", choices=SYNTHETIC_KINDS, required=True)
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--d", type=int)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--sigma-target", type=float, help="target sigma^2 (gaussian)")
    synth.add_argument("--label-noise", type=float, default=0.0, help="label flip probability (gaussian)")
    synth.add_argument("--out", required=True)
    return parser


def _solver_overrides(args: argparse.Namespace) -> dict:
    lam = args.lam
    if args.preset is not None:
        if lam is not None:
            raise ConfigError("--lambda and --preset are mutually exclusive")
        lam = PRESETS[args.preset]
    overrides = {
        "lambda_": lam,
        "max_iters": args.iters if isinstance(args.iters, int) else None,
        "beta_override": args.beta_override,
        "gamma": args.gamma,
        "averaging": args.averaging,
        "seed": args.seed,
        "checkpoint_every": args.checkpoint_every,
        "workers": args.workers,
        "b": getattr(args, "batch", None),
    }
    if args.deterministic_reduction:
        overrides["deterministic_reduction"] = True
    if getattr(args, "stop_on_target", False):
        overrides["stop_on_target"] = True
    return {key: value for key, value in overrides.items() if value is not None}


def sigma_source(args: argparse.Namespace, base: Optional[SigmaSource] = None) -> SigmaSource:
    if args.sigma_sq is not None and args.sigma_exact:
        raise ConfigError("--sigma-sq and --sigma-exact are mutually exclusive")
    if args.sigma_sq is not None:
        return SigmaSource(mode="override", value=args.sigma_sq)
    if args.sigma_exact:
        return SigmaSource(mode="exact_small_n")
    return base or SigmaSource()


def build_spec(args: argparse.Namespace) -> ExperimentSpec:
    """Merges ``--spec`` JSON (when given) with the explicit flags of a solve or sweep command."""
    try:
        if args.spec:
            with open(args.spec, "r", encoding="utf-8") as f:
                base = ExperimentSpec.model_validate_json(f.read())
        else:
            base = None

        overrides = _solver_overrides(args)
        if args.solver is not None:
            kinds = [part.strip() for part in args.solver.split(",") if part.strip()]
            solvers = [SolverConfig.model_validate({"kind": kind, **overrides}) for kind in kinds]
        elif base is not None:
            solvers = [SolverConfig.model_validate({**cfg.model_dump(), **overrides}) for cfg in base.solvers]
        else:
            raise ConfigError("--solver is required")

        data = base.model_dump() if base is not None else {}
        data["solvers"] = solvers
        if args.train is not None:
            data["train_path"] = args.train
        if args.test is not None:
            data["test_path"] = args.test
        if args.test_fraction is not None:
            data["test_fraction"] = args.test_fraction
        if args.epsilon is not None:
            data["epsilon_target"] = args.epsilon
        if args.out is not None:
            data["output_path"] = args.out
        if args.seed is not None:
            data["seed"] = args.seed
        if args.no_normalize:
            data["normalize"] = False
        if getattr(args, "batch_list", None) is not None:
            data["b_values"] = args.batch_list
        data["sigma_sq_source"] = sigma_source(args, base.sigma_sq_source if base is not None else None)
        if "train_path" not in data:
            raise ConfigError("--train is required")
        return ExperimentSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from None

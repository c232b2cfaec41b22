"""Command line interface.

Exit codes: 0 on success, 1 on parse or configuration errors, 2 when a
solver diverges.
"""
import argparse
import gzip
import logging
import sys

from . import bench
from .adaptive import ScheduleConfig, default_m0, default_zeta
from .data import ParseError, convert_mnist_idx, dump_libsvm, load_libsvm
from .data import make_synthetic, shuffle
from .optim import AdamConfig, DivergenceError, GDConfig

logger = logging.getLogger("adaptive_erm")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2

# option name -> (type, default); shared by the command line and config files
RUN_OPTIONS = {
    "method": (str, None),
    "data": (str, None),
    "ref": (str, None),
    "output": (str, None),
    "seed": (int, None),
    "alpha": (float, 0.5),
    "zeta": (float, None),
    "m0": (int, None),
    "growth": (float, 2.0),
    "stage0_multiplier": (int, 3),
    "eval_stride": (int, 1),
    "budget": (int, None),
    "step_size": (float, None),
    "eta": (float, 0.01),
    "beta1": (float, 0.9),
    "beta2": (float, 0.999),
    "epsilon": (float, 1e-8),
    "batch_size": (int, 5),
    "n_features": (int, None),
    "run_id": (str, None),
}


class ConfigError(ValueError):
    pass


def _open_binary(path):
    return gzip.open(path, "rb") if str(path).endswith(".gz") else open(path, "rb")


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in RUN_OPTIONS:
                raise ConfigError(f"{path}:{lineno}: bad config line {line!r}")
            typ = RUN_OPTIONS[key][0]
            try:
                out[key] = typ(value.strip())
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}") from None
    return out


def _resolve(args):
    opts = read_config(args.config) if args.config else {}
    for key, (_, default) in RUN_OPTIONS.items():
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
        opts.setdefault(key, default)
    for key in ("method", "data", "ref", "output", "seed"):
        if opts[key] is None:
            raise ConfigError(f"missing required option {key!r}")
    if opts["method"] not in bench.METHODS:
        raise ConfigError(f"unknown method {opts['method']!r}")
    return opts


def cmd_convert_mnist(args):
    with _open_binary(args.images) as fi, _open_binary(args.labels) as fl:
        data = convert_mnist_idx(fi, fl, args.pos, args.neg)
    with open(args.output, "w") as f:
        dump_libsvm(data, f)
    logger.info("wrote %d samples to %s", data.n_samples, args.output)


def cmd_make_synthetic(args):
    data = make_synthetic(args.n_samples, args.n_features, args.seed,
                          noise=args.noise, weight_seed=args.weight_seed)
    with open(args.output, "w") as f:
        dump_libsvm(data, f)


def cmd_reference(args):
    data = load_libsvm(args.data, n_features=args.n_features)
    ref = bench.compute_reference(data, threshold=args.threshold,
                                  max_iters=args.max_iters)
    if ref.stale:
        logger.warning("gradient norm %.3g above threshold %.3g after %d "
                       "iterations", ref.grad_norm_at_star, args.threshold,
                       ref.iterations_used)
    bench.save_reference(ref, args.output)
    print(f"L_star={ref.L_star!r} grad_norm={ref.grad_norm_at_star:.3e} "
          f"iterations={ref.iterations_used} stale={ref.stale}")


def cmd_run(args):
    opts = _resolve(args)
    method = opts["method"]
    solver = "adam" if method in ("adam", "adaadam") else "gd"
    data = load_libsvm(opts["data"], n_features=opts["n_features"])
    ref = bench.load_reference(opts["ref"])
    data = shuffle(data, opts["seed"])
    n = data.n_samples
    schedule = ScheduleConfig(
        alpha=opts["alpha"],
        zeta=default_zeta(solver) if opts["zeta"] is None else opts["zeta"],
        m0=default_m0(n) if opts["m0"] is None else opts["m0"],
        growth=opts["growth"],
        stage0_multiplier=opts["stage0_multiplier"],
    )
    if solver == "gd":
        opt_cfg = None if opts["step_size"] is None else GDConfig(opts["step_size"])
    else:
        opt_cfg = AdamConfig(beta1=opts["beta1"], beta2=opts["beta2"],
                             eta=opts["eta"], epsilon=opts["epsilon"],
                             batch_size=opts["batch_size"],
                             shuffle_seed=opts["seed"])
    records = bench.run_experiment(
        data, method, schedule, opt_cfg, ref,
        eval_stride=opts["eval_stride"], budget=opts["budget"],
        run_id=opts["run_id"] or f"{method}-seed{opts['seed']}")
    with open(opts["output"], "w", newline="") as f:
        bench.emit_csv(records, f)
    last = records[-1]
    print(f"{method}: {len(records)} records, grad_evals={last.grad_evals} "
          f"suboptimality={last.suboptimality:.6e}")


def cmd_compare(args):
    runs = {}
    for path in args.traces:
        with open(path, newline="") as f:
            for rec in bench.read_csv(f):
                runs.setdefault(rec.run_id, []).append(rec)
    names = list(runs)
    width = max([12] + [len(n) for n in names])
    print("level".ljust(10) + "".join(n.rjust(width + 2) for n in names))
    for level in args.levels:
        cells = []
        for name in names:
            hit = bench.first_crossing(runs[name], level)
            cells.append(("-" if hit is None else str(hit)).rjust(width + 2))
        print(f"{level:<10.3g}" + "".join(cells))


def build_parser():
    p = argparse.ArgumentParser(
        prog="adaptive-erm",
        description="Adaptive sample-size ERM experiments on logistic regression.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert-mnist", help="IDX images/labels to binary LIBSVM")
    c.add_argument("images")
    c.add_argument("labels")
    c.add_argument("--pos", type=int, default=0)
    c.add_argument("--neg", type=int, default=8)
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_convert_mnist)

    c = sub.add_parser("make-synthetic", help="write a synthetic logistic dataset")
    c.add_argument("-n", "--n-samples", type=int, default=4096)
    c.add_argument("-d", "--n-features", type=int, default=20)
    c.add_argument("--noise", type=float, default=1.0)
    c.add_argument("--weight-seed", type=int, default=None,
                   help="seed for the true weight vector; defaults to --seed")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_make_synthetic)

    c = sub.add_parser("reference", help="compute the reference optimum")
    c.add_argument("data")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--threshold", type=float, default=1e-10)
    c.add_argument("--max-iters", type=int, default=1_000_000)
    c.add_argument("--n-features", type=int)
    c.set_defaults(func=cmd_reference)

    c = sub.add_parser("run", help="run one method and write a CSV trace")
    c.add_argument("--config", help="flat key = value file; flags override it")
    c.add_argument("--method", choices=bench.METHODS)
    c.add_argument("--data")
    c.add_argument("--ref")
    c.add_argument("-o", "--output")
    for key, (typ, _) in RUN_OPTIONS.items():
        if key in ("method", "data", "ref", "output"):
            continue
        c.add_argument("--" + key.replace("_", "-"), type=typ, dest=key)
    c.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="first-crossing grad_evals per level")
    c.add_argument("--traces", nargs="+", required=True)
    c.add_argument("--levels", nargs="+", type=float,
                   default=[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ParseError, ConfigError, bench.ReferenceMismatchError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

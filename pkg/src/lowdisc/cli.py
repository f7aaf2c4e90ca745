"""Command-line entry point.

Subcommands: ``points gen``, ``points train``, ``points reorder``,
``disc``, ``plan``, ``bench``, ``report``.  Diagnostics go to stderr;
data goes to files or stdout, never mixed.

Exit codes: 0 success, 2 usage error (argparse), 3 missing input file,
4 malformed input file or bad value inside one, 1 any other failure.
Heavy imports happen inside handlers so environment variables set by the
wrapper (thread pools, BLAS) take effect first.
"""

from __future__ import annotations

import argparse
import os
import sys

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_FORMAT = 4

ENV_THREADS = "LOWDISC_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(ENV_THREADS, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowdisc",
        description="Low-discrepancy point sets and pre-sampled roadmap planning.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker threads for parallel-capable commands "
        f"(default: ${ENV_THREADS} or 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    points = sub.add_parser("points", help="generate, train, or reorder point sets")
    psub = points.add_subparsers(dest="points_command", required=True)

    gen = psub.add_parser("gen", help="write a generated point set")
    gen.add_argument("--sampler", required=True, choices=["uniform", "halton", "sobol", "grid"])
    gen.add_argument("--n", type=int, required=True, help="number of points")
    gen.add_argument("--d", type=int, required=True, help="dimension")
    gen.add_argument("--seed", type=int, default=0, help="uniform sampler seed")
    gen.add_argument("--start", type=int, default=1, help="sequence start index (1-based)")
    gen.add_argument("--out", help="output file (default: stdout)")
    gen.set_defaults(handler=cmd_points_gen)

    train = psub.add_parser("train", help="optimize a point set and write the best")
    train.add_argument("--n", type=int, required=True)
    train.add_argument("--d", type=int, required=True)
    train.add_argument("--epochs", type=int, default=1000)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--batch", type=int, default=8)
    train.add_argument("--knn", type=int, default=8, help="neighbors in the input graph")
    train.add_argument("--hidden", type=int, default=64)
    train.add_argument("--layers", type=int, default=3)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--loss", choices=["l2", "hickernell"], default="hickernell")
    train.add_argument("--squash", choices=["sigmoid", "clamp"], default="sigmoid")
    train.add_argument(
        "--direct",
        action="store_true",
        help="skip the network; gradient-descend the coordinates directly",
    )
    train.add_argument(
        "--out",
        required=True,
        help="output directory: one point-set file per batch member plus trace.csv",
    )
    train.set_defaults(handler=cmd_points_train)

    reorder = psub.add_parser("reorder", help="greedy prefix-quality reordering")
    reorder.add_argument("input", help="point-set file")
    reorder.add_argument("--out", help="output file (default: stdout)")
    reorder.set_defaults(handler=cmd_points_reorder)

    disc = sub.add_parser("disc", help="evaluate a discrepancy metric on a point file")
    disc.add_argument(
        "--metric",
        required=True,
        choices=["l2", "hickernell", "star", "star-lb", "dispersion"],
    )
    disc.add_argument("input", help="point-set file")
    disc.add_argument("--samples", type=int, default=4096, help="star-lb corner samples")
    disc.add_argument("--seed", type=int, default=0, help="star-lb sampling seed")
    disc.add_argument("--resolution", type=int, default=32, help="dispersion grid cells/axis")
    disc.set_defaults(handler=cmd_disc)

    plan = sub.add_parser("plan", help="run one roadmap plan")
    plan.add_argument("--env", required=True, help="environment descriptor (JSON)")
    plan.add_argument(
        "--sampler",
        required=True,
        help="uniform | halton | sobol | grid | file:PATH",
    )
    plan.add_argument("--n", type=int, required=True)
    plan.add_argument("--rule", required=True, help="radius:R | knn:K | theory:ALPHA")
    plan.add_argument("--seed", type=int, default=0, help="seed (uniform) or start index (qmc)")
    plan.add_argument("--dump-path", help="write the solution path, unit-cube scaled")
    plan.set_defaults(handler=cmd_plan)

    bench = sub.add_parser(
        "bench", help="run a benchmark config; append results.csv and render reports"
    )
    bench.add_argument("--config", required=True, help="experiment config (JSON)")
    bench.add_argument("--out", default="bench-out", help="output directory")
    bench.add_argument("--no-png", action="store_true", help="skip PNG figures")
    bench.set_defaults(handler=cmd_bench)

    report = sub.add_parser("report", help="render table and charts from a results CSV")
    report.add_argument("--in", dest="input", required=True, help="results CSV")
    report.add_argument("--out", default="report", help="output directory")
    report.add_argument("--no-png", action="store_true", help="skip PNG figures")
    report.set_defaults(handler=cmd_report)

    return parser


def _write_points(ps, out_path) -> None:
    from lowdisc.pointset import format_points, save_points

    if out_path:
        save_points(ps, out_path)
    else:
        sys.stdout.write(format_points(ps))


def cmd_points_gen(args) -> int:
    from lowdisc.pointset import sample_uniform, sukharev_grid
    from lowdisc import qmc

    if args.sampler == "uniform":
        ps = sample_uniform(args.n, args.d, args.seed)
    elif args.sampler == "grid":
        k = round(args.n ** (1.0 / args.d))
        if k**args.d != args.n:
            raise ValueError(f"grid sampler needs n = k^d; {args.n} is not a power")
        ps = sukharev_grid(k, args.d)
    else:
        ps = getattr(qmc, args.sampler)(args.n, args.d, start=args.start)
    _write_points(ps, args.out)
    return EXIT_OK


def cmd_points_train(args) -> int:
    from lowdisc.mpmc import TrainConfig, loss, optimize_direct, train
    from lowdisc.pointset import save_points

    cfg = TrainConfig(
        n=args.n,
        d=args.d,
        epochs=args.epochs,
        seed=args.seed,
        batch=args.batch,
        k=args.knn,
        h=args.hidden,
        layers=args.layers,
        lr=args.lr,
        loss_kind=args.loss,
        squash=args.squash,
    )
    os.makedirs(args.out, exist_ok=True)
    if args.direct:
        best = optimize_direct(cfg)
        save_points(best, os.path.join(args.out, "member_00.txt"))
        print(f"direct best {args.loss} loss: {loss(best, args.loss):.10g}", file=sys.stderr)
        return EXIT_OK
    _, best_sets, rep = train(cfg)
    for i, ps in enumerate(best_sets):
        save_points(ps, os.path.join(args.out, f"member_{i:02d}.txt"))
    with open(os.path.join(args.out, "trace.csv"), "w") as fh:
        fh.write("epoch,loss,best_loss\n")
        for epoch, (cur, best_so_far) in enumerate(zip(rep.trace, rep.best_trace)):
            fh.write(f"{epoch},{cur:.17g},{best_so_far:.17g}\n")
    losses = [loss(ps, args.loss) for ps in best_sets]
    gc = "skipped" if rep.grad_check_error is None else f"{rep.grad_check_error:.3g}"
    print(
        f"trained {cfg.epochs} epochs, best {args.loss} loss {min(losses):.10g}, "
        f"grad check {gc}, {rep.wall_time_s:.1f}s",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_points_reorder(args) -> int:
    from lowdisc.pointset import greedy_reorder, load_points

    ps = load_points(args.input)
    _write_points(greedy_reorder(ps), args.out)
    return EXIT_OK


def cmd_disc(args) -> int:
    from lowdisc import discrepancy as disc
    from lowdisc.pointset import load_points

    ps = load_points(args.input)
    if args.metric in ("l2", "hickernell"):
        fn = disc.l2_warnock if args.metric == "l2" else disc.hickernell_l2
        value = fn(ps)
        # the closed forms produce the square; print that
        print(f"{args.metric} {value.squared:.17g} {value.exactness}")
    elif args.metric == "star":
        value = disc.star_discrepancy_exact(ps)
        print(f"star {value.value:.17g} {value.exactness}")
    elif args.metric == "star-lb":
        value = disc.star_discrepancy_lower_bound(ps, samples=args.samples, seed=args.seed)
        print(f"star-lb {value.value:.17g} {value.exactness}")
    else:
        value = disc.dispersion_linf(ps, resolution=args.resolution)
        print(f"dispersion {value.value:.17g} {value.exactness}")
    return EXIT_OK


def cmd_plan(args) -> int:
    from lowdisc.envs import load_environment
    from lowdisc.planner import parse_rule, plan
    from lowdisc.pointset import PointSet, unscale_from_bounds

    env = load_environment(args.env)
    result = plan(env, args.sampler, args.n, parse_rule(args.rule), seed=args.seed)
    cost = "-" if result.cost is None else f"{result.cost:.17g}"
    print(
        f"success={int(result.success)} cost={cost} "
        f"valid_milestones={result.n_valid_milestones} "
        f"validity_checks={result.validity_checks} "
        f"edge_checks={result.edge_checks} wall_ms={result.wall_ms:.3f}"
    )
    if args.dump_path:
        if not result.success:
            print("no path to dump", file=sys.stderr)
            return EXIT_INTERNAL
        unit = unscale_from_bounds(result.path_points, env.bounds)
        _write_points(
            PointSet(unit, provenance=f"plan path env={args.env}"), args.dump_path
        )
    return EXIT_OK


def cmd_bench(args) -> int:
    from lowdisc.bench import (
        load_config,
        read_records,
        render_report,
        run_experiment,
        write_records,
    )

    cfg = load_config(args.config)
    records = run_experiment(cfg, threads=args.threads)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "results.csv")
    write_records(csv_path, records)
    print(f"appended {len(records)} records to {csv_path}", file=sys.stderr)
    paths = render_report(read_records(csv_path), args.out, pngs=not args.no_png)
    for kind, path in paths.items():
        print(f"{kind}: {path}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    from lowdisc.bench import read_records, render_report

    records = read_records(args.input)
    paths = render_report(records, args.out, pngs=not args.no_png)
    for kind, path in paths.items():
        print(f"{kind}: {path}", file=sys.stderr)
    return EXIT_OK


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = _default_threads()
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.handler(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_FORMAT
    except Exception as exc:  # pragma: no cover - catch-all for the exit code map
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

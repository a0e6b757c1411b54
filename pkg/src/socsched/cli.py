"""Command line: ``socsched gen | run | train | bench``.

Exit status is 0 on success, 2 for usage errors (bad flags or values) and 3
for runtime failures (missing or malformed files, scheduler aborts).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import DEFAULT_GEN_SEED, DEFAULT_MODEL, DEFAULT_TYPE_EXEC_SCALE, SimConfig
from .platform import MalformedCatalogError, PeProfile, Platform, default_platform

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

log = logging.getLogger("socsched")


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _gamma(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"gamma must lie in [0, 1], got {v}")
    return v


def _sim_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--config", help="JSON file with catalog, platform, horizon, scale, queue_capacity, seed")
    g.add_argument("--catalog", help="job-type catalog JSON")
    g.add_argument("--platform", help="platform JSON")
    g.add_argument("--horizon", type=int)
    g.add_argument("--scale", type=float, help="mean inter-arrival time in clocks")
    g.add_argument("--queue-capacity", type=int)
    g.add_argument("--seed", type=int)


def resolve_config(args) -> SimConfig:
    cfg = SimConfig.from_file(args.config) if args.config else SimConfig()
    overrides = {
        k: getattr(args, k) for k in ("catalog", "platform", "horizon", "scale", "queue_capacity", "seed")
        if getattr(args, k, None) is not None
    }
    for k in ("catalog", "platform"):
        if k in overrides:
            overrides[k] = str(Path(overrides[k]).resolve())
    cfg = replace(cfg, **overrides)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _load(cfg: SimConfig):
    from .workload import validate_catalog

    catalog = cfg.load_catalog()
    platform = cfg.load_platform()
    bad = {jt: vs for jt, vs in validate_catalog(catalog, set(platform.pe_types)).items() if vs}
    if bad:
        raise MalformedCatalogError(f"{cfg.catalog}: invalid job types {sorted(bad)}")
    return catalog, platform


# ---- gen -------------------------------------------------------------------------------------


def cmd_gen(args) -> int:
    from .workload import GeneratorParams, generate_catalog, validate_catalog

    if args.types < 1 or args.tasks < 1 or args.pe_types < 1:
        raise UsageError("--types, --tasks and --pe-types must all be >= 1")
    if args.type_exec_scale is not None:
        scale = tuple(args.type_exec_scale)
    elif args.pe_types == len(DEFAULT_TYPE_EXEC_SCALE):
        scale = DEFAULT_TYPE_EXEC_SCALE
    else:
        scale = None
    try:
        params = GeneratorParams(p_edge=args.p_edge, type_exec_scale=scale)
        catalog = generate_catalog(args.seed, args.types, args.tasks, args.pe_types, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.pe_types == 3:
        platform = default_platform()
    else:
        pes = [PeProfile(k, k, 1.0, 0.1) for k in range(args.pe_types)]
        platform = Platform(pes, [[0 if i == j else 4 for j in range(args.pe_types)] for i in range(args.pe_types)])

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog.save(out / "catalog.json")
    platform.save(out / "platform.json")
    cfg = SimConfig(catalog="catalog.json", platform="platform.json")
    cfg.save(out / "config.json")
    problems = {jt: vs for jt, vs in validate_catalog(catalog, set(platform.pe_types)).items() if vs}
    print(f"wrote {out / 'catalog.json'}: {len(catalog)} job types, {catalog.max_tasks} tasks max")
    print(f"wrote {out / 'platform.json'}: {platform.num_pes} PEs")
    if problems:
        for jt, vs in problems.items():
            for v in vs:
                print(f"job type {jt}: {v.kind}: {v.detail}")
        return EXIT_RUNTIME
    print("validation: ok")
    return EXIT_OK


# ---- run -------------------------------------------------------------------------------------


def _model_path(args, required: bool):
    if args.model is not None:
        return Path(args.model)
    return DEFAULT_MODEL if required else None


def cmd_run(args) -> int:
    from .bench import make_scheduler
    from .kernel import run
    from .report import SUMMARY_HEADER, run_metadata, summary_row, write_json, write_rows, write_trace

    cfg = resolve_config(args)
    model = _model_path(args, args.scheduler == "neural")
    sched = make_scheduler(args.scheduler, model, greedy=not args.sample)
    catalog, platform = _load(cfg)
    trace = run(catalog, platform, sched, horizon=cfg.horizon, scale=cfg.scale,
                queue_capacity=cfg.queue_capacity, seed=cfg.seed)
    row = summary_row(trace, args.scheduler)
    out = Path(args.out_dir)
    write_trace(trace, out)
    write_rows([row], out / "summary.csv", SUMMARY_HEADER)
    write_json(run_metadata("run", cfg.to_dict(), scheduler=args.scheduler,
                            model=None if model is None else str(model), sample=args.sample,
                            digest=row["digest"]), out / "run.json")
    print(",".join(SUMMARY_HEADER[:-2]))
    print(",".join(str(row[k]) for k in SUMMARY_HEADER[:-2]))
    return EXIT_OK


# ---- train -----------------------------------------------------------------------------------


def cmd_train(args) -> int:
    from .report import run_metadata, write_json
    from .training import TrainConfig, train

    cfg = resolve_config(args)
    tc = TrainConfig(
        episodes=args.episodes, gamma=args.gamma, eim_mode=args.eim_mode, eim_anchor=args.eim_anchor,
        eim_attribution=args.eim_attribution, focus_context=args.focus_context, horizon=cfg.horizon,
        scale=cfg.scale, queue_capacity=cfg.queue_capacity, seed=cfg.seed, eval_every=args.log_every,
    )
    try:
        tc.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    catalog, platform = _load(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = Path(args.model) if args.model else out / "model.ckpt"
    net, curve = train(tc, catalog, platform, curve_path=out / "curve.csv", checkpoint_path=ckpt)
    write_json(run_metadata("train", cfg.to_dict(), train=tc.to_dict(), checkpoint=str(ckpt),
                            episodes_run=len(curve)), out / "run.json")
    last = curve[-1]
    print(f"trained {len(curve)} episodes; last latency {last['avg_latency']:.1f}, checkpoint {ckpt}")
    return EXIT_OK


# ---- bench -----------------------------------------------------------------------------------


def cmd_bench(args) -> int:
    from .bench import sweep
    from .report import AGGREGATE_HEADER, SUMMARY_HEADER, aggregate, run_metadata, write_json, write_rows

    cfg = resolve_config(args)
    if args.scale is not None:
        raise UsageError("bench sweeps --scales; use --scales instead of --scale")
    names = args.schedulers
    model = _model_path(args, "neural" in names)
    catalog, platform = _load(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = range(cfg.seed, cfg.seed + args.seeds)
    rows = sweep(catalog, platform, names, args.scales, seeds, horizon=cfg.horizon,
                 queue_capacity=cfg.queue_capacity, model=model,
                 trace_dir=out / "traces" if args.traces else None, workers=args.workers)
    agg = aggregate(rows)
    write_rows(rows, out / "report.csv", SUMMARY_HEADER)
    write_rows(agg, out / "aggregate.csv", AGGREGATE_HEADER)
    write_json(run_metadata("bench", cfg.to_dict(), schedulers=list(names), scales=list(args.scales),
                            seeds=list(seeds), model=None if model is None else str(model)), out / "run.json")
    print(f"{'scheduler':<8} {'scale':>6} {'latency':>10} {'+-':>8} {'energy':>10} {'failed':>6}")
    for a in agg:
        print(f"{a['scheduler']:<8} {a['scale']:>6g} {a['avg_latency_mean']:>10.1f} {a['avg_latency_std']:>8.1f} "
              f"{a['total_energy_mean']:>10.1f} {a['failed']:>6}")
    return EXIT_OK


# ---- entry -----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .bench import BENCH_SCALES, BENCH_SEEDS, SCHEDULER_NAMES
    from .eim import ANCHORS, ATTRIBUTIONS, MODES

    parser = argparse.ArgumentParser(prog="socsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate catalog and platform files")
    g.add_argument("--seed", type=int, default=DEFAULT_GEN_SEED)
    g.add_argument("--types", type=int, default=5)
    g.add_argument("--tasks", type=int, default=10)
    g.add_argument("--pe-types", type=int, default=3)
    g.add_argument("--p-edge", type=float, default=0.4)
    g.add_argument("--type-exec-scale", type=float, nargs="+")
    g.add_argument("--out-dir", default=".")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="simulate one episode")
    _sim_flags(r)
    r.add_argument("--scheduler", choices=SCHEDULER_NAMES, default="heft")
    r.add_argument("--model", help=f"policy checkpoint for --scheduler neural (default {DEFAULT_MODEL.name})")
    r.add_argument("--sample", action="store_true", help="sample neural actions instead of taking the argmax")
    r.add_argument("--out-dir", default="run_out")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("train", help="train the neural scheduler")
    _sim_flags(t)
    t.add_argument("--episodes", type=_positive_int, default=5000)
    t.add_argument("--gamma", type=_gamma, default=0.999)
    t.add_argument("--eim-mode", choices=MODES, default="span")
    t.add_argument("--eim-anchor", choices=ANCHORS, default="decision")
    t.add_argument("--eim-attribution", choices=ATTRIBUTIONS, default="own-job")
    t.add_argument("--focus-context", action=argparse.BooleanOptionalAction, default=True)
    t.add_argument("--model", help="checkpoint path to write (default <out-dir>/model.ckpt)")
    t.add_argument("--log-every", type=int, default=100)
    t.add_argument("--out-dir", default="train_out")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("bench", help="sweep schedulers x scales x seeds")
    _sim_flags(b)
    b.add_argument("--schedulers", nargs="+", choices=SCHEDULER_NAMES, default=list(SCHEDULER_NAMES))
    b.add_argument("--scales", type=float, nargs="+", default=list(BENCH_SCALES))
    b.add_argument("--seeds", type=_positive_int, default=BENCH_SEEDS, help="number of seeds, starting at --seed")
    b.add_argument("--model", help="policy checkpoint for the neural scheduler")
    b.add_argument("--traces", action="store_true", help="also write every episode's trace files")
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--out-dir", default="bench_out")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"socsched {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"socsched {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

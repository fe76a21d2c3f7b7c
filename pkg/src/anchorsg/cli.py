"""Command line front end: generate, inspect, solve, bench.

Exit codes: 0 success, 1 solver failure (limits, numerical trouble),
2 input error (bad flags, unreadable or invalid files).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench, easg, exact, o2uct, warehouse


def _write_json(doc, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _print_json(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"grid must look like 4x4, got {text!r}") from None
    if rows < 2 or cols < 2:
        raise ValueError("grid must be at least 2x2")
    return rows, cols


def cmd_generate(args) -> int:
    grid = _parse_grid(args.grid)
    params = warehouse.GenParams(rounds=args.rounds)
    spec = warehouse.generate(args.seed, grid, params)
    warehouse.save_spec(spec, args.out)
    game = warehouse.compile_game(spec)
    print(
        f"wrote {args.out}: {len(spec.vertices)} vertices, "
        f"{len(spec.targets)} targets, rounds={spec.rounds}, "
        f"histories={game.num_nodes}"
    )
    return 0


def cmd_inspect(args) -> int:
    game = bench.load_game_file(args.game)
    info = game.counts()
    info["bucket"] = bench.bucket_of(game)
    info["valid"] = True
    if args.json:
        _print_json(info)
    else:
        for key, value in info.items():
            print(f"{key}: {value}")
    return 0


def _solve_dispatch(game, args):
    if args.method == "bnb":
        return exact.solve_bnb(game, args.alpha)
    if args.method == "multilp":
        return exact.solve_multilp(game, args.alpha)
    if args.method == "easg":
        cfg = easg.EasgConfig(
            population=args.pop,
            crossover_prob=args.pc,
            mutation_prob=args.pm,
            pressure=args.pressure,
            elites=args.elite,
            max_generations=args.gens,
            stagnation=args.stagnation,
            alpha=args.alpha,
            at_mode=args.at_mode,
            seed=args.seed,
        )
        return easg.run(game, cfg)
    cfg = o2uct.O2uctConfig(
        max_positive=args.max_positive,
        eps=args.eps,
        eps_window=args.eps_window,
        max_feasibility=args.max_feasibility,
        uct_c=args.uct_c,
        alpha=args.alpha,
        at_mode=args.at_mode,
        seed=args.seed,
    )
    return o2uct.run(game, cfg)


def cmd_solve(args) -> int:
    exact_method = args.method in ("bnb", "multilp")
    if exact_method and args.at_mode == "exact":
        raise ValueError(
            "the sequence-form model only supports --at-mode linear; "
            "use easg or o2uct for the exact distortion"
        )
    if args.dump_lp and not exact_method:
        raise ValueError("--dump-lp needs --method bnb or multilp")
    game = bench.load_game_file(args.game)
    if args.dump_lp:
        with open(args.dump_lp, "w") as fh:
            fh.write(exact.dump_model(game, args.alpha))
    result = _solve_dispatch(game, args)
    doc = result.to_dict(game, include_timing=False)
    if args.out:
        _write_json(doc, args.out)
    if args.json:
        _print_json(doc)
    else:
        print(f"method: {result.method}  alpha: {result.alpha}")
        print(f"leader utility: {result.leader_utility:.6f}")
        print(f"follower perceived utility: {result.follower_utility:.6f}")
        for key in sorted(result.stats):
            print(f"{key}: {result.stats[key]}")
    return 0


def cmd_bench(args) -> int:
    cfg = bench.load_config(args.config)
    records = bench.run(cfg)
    os.makedirs(args.out, exist_ok=True)
    bench.save_records(records, os.path.join(args.out, "records.json"))
    rows, notes = bench.aggregate(records)
    bench.emit(rows, "csv", os.path.join(args.out, "aggregate.csv"))
    bench.emit(rows, "json", os.path.join(args.out, "aggregate.json"))
    games = {gid: bench.build_game(spec) for gid, spec in cfg.games}
    for line in notes:
        print(f"note: {line}", file=sys.stderr)
    for line in bench.audit(records, games):
        print(f"audit mismatch: {line}", file=sys.stderr)
    print(f"wrote {len(records)} records, {len(rows)} aggregate rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchorsg",
        description="Sequential security games against an anchoring-biased attacker",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a warehouse game")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", default="4x4")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("inspect", help="validate a game file and print sizes")
    p.add_argument("game")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("solve", help="solve a game file")
    p.add_argument("--game", required=True)
    p.add_argument("--method", required=True, choices=("bnb", "multilp", "easg", "o2uct"))
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--at-mode", choices=("linear", "exact"), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.add_argument("--dump-lp", metavar="FILE")
    p.add_argument("--pop", type=int, default=30)
    p.add_argument("--gens", type=int, default=1000)
    p.add_argument("--stagnation", type=int, default=20)
    p.add_argument("--pc", type=float, default=0.8)
    p.add_argument("--pm", type=float, default=0.5)
    p.add_argument("--pressure", type=float, default=0.9)
    p.add_argument("--elite", type=int, default=2)
    p.add_argument("--uct-c", type=float, default=0.7)
    p.add_argument("--max-positive", type=int, default=5000)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--eps-window", type=int, default=500)
    p.add_argument("--max-feasibility", type=int, default=10000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))

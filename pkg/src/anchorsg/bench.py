"""Benchmark harness: seeded sweeps, bucket grouping, aggregate reports.

Games are grouped into decade buckets by history count. Stochastic solvers
run once per seed, exact solvers once. Every run is wall-clock capped;
timeouts are recorded at the cap and excluded from payoff statistics.
Records keep the serialized strategies so results can be audited end to
end against a fresh evaluation.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import easg, exact, o2uct
from .efg import (
    FOLLOWER,
    LEADER,
    Game,
    build_game,
    expected_utilities,
    pure_to_realization,
)
from .lp import ResourceLimit
from .results import plan_from_jsonable, pure_from_jsonable
from .warehouse import compile_game, spec_from_dict

WORKERS_ENV = "ANCHORSG_WORKERS"
DETERMINISTIC = ("bnb", "multilp")
SOLVERS = ("bnb", "multilp", "easg", "o2uct")

AGG_COLUMNS = (
    "bucket",
    "solver",
    "alpha",
    "games",
    "runs",
    "ok",
    "timeout",
    "failed",
    "mean_utility",
    "stddev_utility",
    "max_utility",
    "mean_time_ms",
)


def bucket_of_size(n: int) -> int:
    if n < 1:
        raise ValueError("history count must be positive")
    return 10 ** int(math.floor(math.log10(n) + 0.5))


def bucket_of(game: Game) -> int:
    return bucket_of_size(game.num_nodes)


@dataclass
class BenchRecord:
    game_id: str
    histories: int
    bucket: int
    solver: str
    alpha: float
    seed: int
    status: str  # ok | timeout | failed
    leader_utility: float | None = None
    wall_time_ms: float | None = None
    leader_realization: list | None = None
    follower_strategy: dict | None = None
    error: str | None = None

    def key(self) -> tuple:
        return (self.game_id, self.solver, self.alpha, self.seed)

    def to_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "histories": self.histories,
            "bucket": self.bucket,
            "solver": self.solver,
            "alpha": self.alpha,
            "seed": self.seed,
            "status": self.status,
            "leader_utility": self.leader_utility,
            "wall_time_ms": self.wall_time_ms,
            "leader_realization": self.leader_realization,
            "follower_strategy": self.follower_strategy,
            "error": self.error,
        }


def record_from_dict(data: dict) -> BenchRecord:
    return BenchRecord(**data)


@dataclass
class BenchConfig:
    games: list  # (game id, extensive-form spec dict) pairs
    solvers: tuple = SOLVERS
    alphas: tuple = (0.0,)
    seeds: int = 10
    time_cap_s: float = 600.0

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if self.time_cap_s < 0:
            raise ValueError("time cap must be non-negative")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers: {sorted(unknown)}")


def seeds_for(solver: str, cfg: BenchConfig) -> int:
    return 1 if solver in DETERMINISTIC else cfg.seeds


def load_game_file(path: str) -> Game:
    """Load either a compiled game file or a warehouse description."""
    with open(path) as fh:
        data = json.load(fh)
    if "nodes" in data:
        return build_game(data)
    return compile_game(spec_from_dict(data))


def load_config(path: str) -> BenchConfig:
    with open(path) as fh:
        data = json.load(fh)
    allowed = {"games", "solvers", "alphas", "seeds", "time_cap_s"}
    extra = set(data) - allowed
    if extra:
        raise ValueError(f"unknown config fields: {sorted(extra)}")
    base = os.path.dirname(os.path.abspath(path))
    games = []
    for entry in data["games"]:
        gpath = entry if os.path.isabs(entry) else os.path.join(base, entry)
        game = load_game_file(gpath)
        games.append((os.path.splitext(os.path.basename(entry))[0], game.to_spec()))
    return BenchConfig(
        games=games,
        solvers=tuple(data.get("solvers", SOLVERS)),
        alphas=tuple(float(a) for a in data.get("alphas", (0.0,))),
        seeds=int(data.get("seeds", 10)),
        time_cap_s=float(data.get("time_cap_s", 600.0)),
    )


def _solve_one(game: Game, solver: str, alpha: float, seed: int, deadline: float):
    if solver == "bnb":
        return exact.solve_bnb(game, alpha, deadline=deadline)
    if solver == "multilp":
        return exact.solve_multilp(game, alpha, deadline=deadline)
    if solver == "easg":
        return easg.run(game, easg.EasgConfig(alpha=alpha, seed=seed), deadline)
    if solver == "o2uct":
        return o2uct.run(game, o2uct.O2uctConfig(alpha=alpha, seed=seed), deadline)
    raise ValueError(f"unknown solver {solver!r}")


def _run_task(task: tuple) -> BenchRecord:
    game_id, spec, solver, alpha, seed, cap = task
    game = build_game(spec)
    record = BenchRecord(
        game_id=game_id,
        histories=game.num_nodes,
        bucket=bucket_of(game),
        solver=solver,
        alpha=alpha,
        seed=seed,
        status="ok",
    )
    start = time.perf_counter()
    try:
        result = _solve_one(game, solver, alpha, seed, time.monotonic() + cap)
    except ResourceLimit:
        record.status = "timeout"
        record.wall_time_ms = cap * 1e3  # report capped time, not measured
        return record
    except Exception as exc:  # noqa: BLE001 - sweep must survive bad runs
        record.status = "failed"
        record.wall_time_ms = (time.perf_counter() - start) * 1e3
        record.error = f"{type(exc).__name__}: {exc}"
        return record
    rd = result.to_dict(game)
    record.leader_utility = result.leader_utility
    record.wall_time_ms = (time.perf_counter() - start) * 1e3
    record.leader_realization = rd["leader_realization"]
    record.follower_strategy = rd["follower_strategy"]
    return record


def run(cfg: BenchConfig) -> list[BenchRecord]:
    tasks = [
        (game_id, spec, solver, alpha, seed, cfg.time_cap_s)
        for game_id, spec in cfg.games
        for solver in cfg.solvers
        for alpha in cfg.alphas
        for seed in range(seeds_for(solver, cfg))
    ]
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    records.sort(key=BenchRecord.key)
    return records


def aggregate(records: list[BenchRecord]) -> tuple[list[dict], list[str]]:
    """Per-(bucket, solver, alpha) rows; groups with no ok runs noted."""
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict[tuple, list[BenchRecord]] = {}
    for rec in sorted(records, key=BenchRecord.key):
        groups.setdefault((rec.bucket, rec.solver, rec.alpha), []).append(rec)
    rows: list[dict] = []
    notes: list[str] = []
    for (bucket, solver, alpha), recs in sorted(groups.items()):
        ok = [r for r in recs if r.status == "ok"]
        row = {
            "bucket": bucket,
            "solver": solver,
            "alpha": alpha,
            "games": len({r.game_id for r in recs}),
            "runs": len(recs),
            "ok": len(ok),
            "timeout": sum(r.status == "timeout" for r in recs),
            "failed": sum(r.status == "failed" for r in recs),
        }
        if not ok:
            notes.append(
                f"bucket {bucket} solver {solver} alpha {alpha}: no ok runs, skipped"
            )
            continue
        by_game: dict[str, list[float]] = {}
        for r in ok:
            by_game.setdefault(r.game_id, []).append(r.leader_utility)
        # per-game stddev over seeds / per-game max, then averaged over games
        stds = [float(np.std(v)) for v in by_game.values()]
        maxes = [max(v) for v in by_game.values()]
        row["mean_utility"] = float(np.mean([r.leader_utility for r in ok]))
        row["stddev_utility"] = float(np.mean(stds))
        row["max_utility"] = float(np.mean(maxes))
        row["mean_time_ms"] = float(np.mean([r.wall_time_ms for r in recs]))
        rows.append(row)
    return rows, notes


def audit(records: list[BenchRecord], games: dict[str, Game], tol: float = 1e-6) -> list[str]:
    """Re-evaluate stored strategies; report records that do not reproduce."""
    problems = []
    for rec in records:
        if rec.status != "ok":
            continue
        game = games[rec.game_id]
        plan = plan_from_jsonable(game, LEADER, rec.leader_realization)
        response = pure_from_jsonable(game, FOLLOWER, rec.follower_strategy)
        ul, _ = expected_utilities(game, plan, pure_to_realization(game, response))
        if abs(ul - rec.leader_utility) > tol:
            problems.append(
                f"{rec.game_id}/{rec.solver}/a={rec.alpha}/s={rec.seed}: "
                f"stored {rec.leader_utility} vs recomputed {ul}"
            )
    return problems


def emit(rows: list[dict], fmt: str, path: str) -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=AGG_COLUMNS)
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")


def read_rows(path: str) -> list[dict]:
    """Parse an emitted report back into typed rows (round-trip checks)."""
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    with open(path, newline="") as fh:
        out = []
        for raw in csv.DictReader(fh):
            row: dict = {}
            for col in AGG_COLUMNS:
                v = raw[col]
                if col in ("bucket", "games", "runs", "ok", "timeout", "failed"):
                    row[col] = int(v)
                elif col == "solver":
                    row[col] = v
                else:
                    row[col] = float(v)
            out.append(row)
        return out


def save_records(records: list[BenchRecord], path: str) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in records], fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_records(path: str) -> list[BenchRecord]:
    with open(path) as fh:
        return [record_from_dict(d) for d in json.load(fh)]

"""Warehouse pursuit games on a grid: generator, JSON i/o, tree compiler.

A warehouse is a connected subgraph of a rectangular grid made of a corridor
path plus storage rooms hanging off it. A defender and an attacker each
occupy one vertex. Each round the defender moves first (stay or step to an
adjacent vertex), then the attacker; neither observes the other, so each
player's information sets are exactly their own position histories. After
both have moved: same vertex ends the game as an interception (this
includes the attacker stepping onto an occupied target), attacker alone on
a target ends it as a successful attack, and when the round budget runs out
the game ends with zero payoffs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .efg import FOLLOWER, LEADER, Game, build_game


class ParseError(ValueError):
    """Malformed or inconsistent warehouse description."""


@dataclass(frozen=True)
class Target:
    vertex: str
    attacker_reward: float
    defender_penalty: float


@dataclass
class WarehouseSpec:
    grid: tuple[int, int]
    vertices: list[dict]  # id, kind, intercept_defender_reward, intercept_attacker_penalty
    edges: list[tuple[str, str]]
    defender_start: str
    attacker_start: str
    targets: list[Target]
    rounds: int

    def vertex_ids(self) -> list[str]:
        return [v["id"] for v in self.vertices]

    def neighbors(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {v["id"]: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {k: sorted(set(v)) for k, v in adj.items()}


@dataclass
class GenParams:
    rounds: int = 3
    corridor_len: tuple[int, int] = (5, 8)
    room_prob: float = 0.5
    max_rooms: int = 5
    n_targets: tuple[int, int] = (2, 4)
    defender_reward: tuple[float, float] = (0.5, 1.0)
    attacker_penalty: tuple[float, float] = (-1.0, -0.5)
    target_reward: tuple[float, float] = (0.5, 1.0)
    target_penalty: tuple[float, float] = (-1.0, -0.5)


_VERTEX_KEYS = {"id", "kind", "intercept_defender_reward", "intercept_attacker_penalty"}
_TARGET_KEYS = {"vertex", "attacker_reward", "defender_penalty"}
_TOP_KEYS = {"grid", "vertices", "edges", "defender_start", "attacker_start", "targets", "rounds"}


def validate_spec(spec: WarehouseSpec) -> None:
    ids = spec.vertex_ids()
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate vertex ids")
    known = set(ids)
    for a, b in spec.edges:
        if a not in known or b not in known:
            raise ParseError(f"edge ({a}, {b}) references an unknown vertex")
        if a == b:
            raise ParseError(f"self-loop at vertex {a}")
    for v in spec.vertices:
        if v.get("kind") not in ("corridor", "storage"):
            raise ParseError(f"vertex {v.get('id')}: kind must be corridor or storage")
        if not v["intercept_defender_reward"] > 0:
            raise ParseError(
                f"vertex {v['id']}: interception must reward the defender (> 0)"
            )
        if not v["intercept_attacker_penalty"] < 0:
            raise ParseError(
                f"vertex {v['id']}: interception must penalize the attacker (< 0)"
            )
    if spec.defender_start not in known:
        raise ParseError(f"defender start {spec.defender_start} unknown")
    if spec.attacker_start not in known:
        raise ParseError(f"attacker start {spec.attacker_start} unknown")
    if spec.defender_start == spec.attacker_start:
        raise ParseError("defender and attacker must start on different vertices")
    if not spec.targets:
        raise ParseError("at least one target is required")
    for t in spec.targets:
        if t.vertex not in known:
            raise ParseError(f"target vertex {t.vertex} unknown")
        if not t.attacker_reward > 0:
            raise ParseError(f"target {t.vertex}: attacker reward must be > 0")
        if not t.defender_penalty < 0:
            raise ParseError(f"target {t.vertex}: defender penalty must be < 0")
    if spec.attacker_start in {t.vertex for t in spec.targets}:
        raise ParseError("attacker may not start on a target")
    if spec.rounds < 1:
        raise ParseError("rounds must be at least 1")
    # connectivity
    adj = spec.neighbors()
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if seen != known:
        raise ParseError(f"graph is disconnected; {sorted(known - seen)[:3]} unreachable")


def spec_to_dict(spec: WarehouseSpec) -> dict:
    return {
        "grid": list(spec.grid),
        "vertices": [dict(v) for v in spec.vertices],
        "edges": [list(e) for e in spec.edges],
        "defender_start": spec.defender_start,
        "attacker_start": spec.attacker_start,
        "targets": [
            {
                "vertex": t.vertex,
                "attacker_reward": t.attacker_reward,
                "defender_penalty": t.defender_penalty,
            }
            for t in spec.targets
        ],
        "rounds": spec.rounds,
    }


def spec_from_dict(data: dict) -> WarehouseSpec:
    extra = set(data) - _TOP_KEYS
    if extra:
        raise ParseError(f"unknown fields: {sorted(extra)}")
    missing = _TOP_KEYS - set(data)
    if missing:
        raise ParseError(f"missing fields: {sorted(missing)}")
    for v in data["vertices"]:
        bad = set(v) - _VERTEX_KEYS
        if bad:
            raise ParseError(f"vertex {v.get('id')}: unknown fields {sorted(bad)}")
        if set(v) != _VERTEX_KEYS:
            raise ParseError(f"vertex {v.get('id')}: missing fields")
    targets = []
    for t in data["targets"]:
        bad = set(t) - _TARGET_KEYS
        if bad:
            raise ParseError(f"target {t.get('vertex')}: unknown fields {sorted(bad)}")
        targets.append(
            Target(t["vertex"], float(t["attacker_reward"]), float(t["defender_penalty"]))
        )
    spec = WarehouseSpec(
        grid=tuple(int(x) for x in data["grid"]),
        vertices=[dict(v) for v in data["vertices"]],
        edges=[tuple(e) for e in data["edges"]],
        defender_start=data["defender_start"],
        attacker_start=data["attacker_start"],
        targets=targets,
        rounds=int(data["rounds"]),
    )
    validate_spec(spec)
    return spec


def save_spec(spec: WarehouseSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_spec(path: str) -> WarehouseSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    return spec_from_dict(data)


def generate(
    seed: int, grid: tuple[int, int] = (4, 4), params: GenParams | None = None
) -> WarehouseSpec:
    """Seeded random warehouse: corridor walk, attached rooms, scored targets."""
    params = params or GenParams()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 0x77]))
    rows, cols = grid
    if rows * cols < 4:
        raise ParseError("grid too small to host a warehouse")

    def cell_id(r: int, c: int) -> str:
        return f"r{r}c{c}"

    def grid_neighbors(r: int, c: int) -> list[tuple[int, int]]:
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols:
                out.append((rr, cc))
        return out

    lo, hi = params.corridor_len
    want = int(rng.integers(lo, hi + 1))
    want = min(want, rows * cols)
    # self-avoiding corridor walk; retry from a fresh cell if it jams early
    for _ in range(64):
        r = int(rng.integers(rows))
        c = int(rng.integers(cols))
        path = [(r, c)]
        while len(path) < want:
            options = [p for p in grid_neighbors(*path[-1]) if p not in path]
            if not options:
                break
            path.append(tuple(options[int(rng.integers(len(options)))]))
        if len(path) >= max(4, lo):
            break
    corridor = path
    corridor_set = set(corridor)

    rooms: list[tuple[int, int, tuple[int, int]]] = []  # (r, c, anchor)
    taken = set(corridor)
    for cell in corridor:
        if len(rooms) >= params.max_rooms:
            break
        options = [p for p in grid_neighbors(*cell) if p not in taken]
        if options and rng.random() < params.room_prob:
            pick = tuple(options[int(rng.integers(len(options)))])
            rooms.append((pick[0], pick[1], cell))
            taken.add(pick)

    vertices = []
    edges: list[tuple[str, str]] = []
    for r, c in corridor:
        vertices.append((cell_id(r, c), "corridor"))
    for i in range(len(corridor) - 1):
        edges.append((cell_id(*corridor[i]), cell_id(*corridor[i + 1])))
    for r, c, anchor in rooms:
        vertices.append((cell_id(r, c), "storage"))
        edges.append((cell_id(r, c), cell_id(*anchor)))

    def sample(rlohi: tuple[float, float]) -> float:
        return round(float(rng.uniform(*rlohi)), 2)

    vertex_dicts = [
        {
            "id": vid,
            "kind": kind,
            "intercept_defender_reward": sample(params.defender_reward),
            "intercept_attacker_penalty": sample(params.attacker_penalty),
        }
        for vid, kind in vertices
    ]

    corridor_ids = [cell_id(r, c) for r, c in corridor]
    room_ids = [cell_id(r, c) for r, c, _ in rooms]
    tlo, thi = params.n_targets
    n_targets = int(rng.integers(tlo, thi + 1))
    pool = list(room_ids)
    if len(pool) < n_targets:
        spare = [v for v in corridor_ids if v not in pool]
        order = rng.permutation(len(spare))
        # keep two corridor cells free for the starts
        budget = max(0, len(corridor_ids) - 2)
        pool = pool + [spare[int(i)] for i in order[:budget]]
    picked = sorted(pool[: min(n_targets, len(pool))]) if pool else [corridor_ids[0]]
    targets = [
        Target(v, sample(params.target_reward), sample(params.target_penalty))
        for v in picked
    ]

    # place the defender where it can contest the targets and the attacker
    # as far from the defender as the corridor allows, so routes are armed
    adjacency = {v: [] for v, _ in vertices}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)

    def bfs_dist(src: str) -> dict[str, int]:
        dist = {src: 0}
        queue = [src]
        while queue:
            cur = queue.pop(0)
            for nb in adjacency[cur]:
                if nb not in dist:
                    dist[nb] = dist[cur] + 1
                    queue.append(nb)
        return dist

    target_set = {t.vertex for t in targets}
    dist_to = {v: bfs_dist(v) for v in target_set}
    def_pool = [v for v in corridor_ids if v not in target_set]
    defender_start = min(
        def_pool, key=lambda v: (max(dist_to[t][v] for t in target_set), v)
    )
    from_def = bfs_dist(defender_start)
    att_pool = [
        v
        for v in corridor_ids
        if v != defender_start and v not in target_set
    ]
    far = max(from_def[v] for v in att_pool)
    candidates = [v for v in att_pool if from_def[v] == far]
    attacker_start = candidates[int(rng.integers(len(candidates)))]

    spec = WarehouseSpec(
        grid=(rows, cols),
        vertices=vertex_dicts,
        edges=edges,
        defender_start=defender_start,
        attacker_start=attacker_start,
        targets=targets,
        rounds=params.rounds,
    )
    validate_spec(spec)
    return spec


def compile_game(spec: WarehouseSpec, rounds: int | None = None) -> Game:
    """Unroll a warehouse into a validated extensive-form game.

    Compilation is payoff-linear: it only copies spec payoffs onto leaves,
    so scaling or negating the spec's payoffs scales the compiled leaves.
    """
    horizon = spec.rounds if rounds is None else int(rounds)
    if horizon < 1:
        raise ParseError("rounds must be at least 1")
    adj = spec.neighbors()
    intercept = {
        v["id"]: (v["intercept_defender_reward"], v["intercept_attacker_penalty"])
        for v in spec.vertices
    }
    target = {t.vertex: (t.defender_penalty, t.attacker_reward) for t in spec.targets}

    nodes: list[dict] = []
    counter = [0]

    def fresh(parent: str | None, action: str | None) -> dict:
        nid = f"n{counter[0]}"
        counter[0] += 1
        node = {"id": nid, "parent": parent, "incoming_action": action}
        nodes.append(node)
        return node

    def moves(vertex: str) -> list[str]:
        return ["stay"] + [f"go:{v}" for v in adj[vertex]]

    def dest(vertex: str, action: str) -> str:
        return vertex if action == "stay" else action.split(":", 1)[1]

    def defender_turn(
        parent: str | None, action: str | None, d_hist: tuple, a_hist: tuple
    ) -> None:
        node = fresh(parent, action)
        node.update(
            player=LEADER,
            infoset="d|" + "/".join(d_hist),
            actions=moves(d_hist[-1]),
        )
        for mv in node["actions"]:
            attacker_turn(node["id"], mv, d_hist + (dest(d_hist[-1], mv),), a_hist)

    def attacker_turn(
        parent: str, action: str, d_hist: tuple, a_hist: tuple
    ) -> None:
        node = fresh(parent, action)
        node.update(
            player=FOLLOWER,
            infoset="a|" + "/".join(a_hist),
            actions=moves(a_hist[-1]),
        )
        for mv in node["actions"]:
            outcome(node["id"], mv, d_hist, a_hist + (dest(a_hist[-1], mv),))

    def outcome(parent: str, action: str, d_hist: tuple, a_hist: tuple) -> None:
        d, a = d_hist[-1], a_hist[-1]
        t = len(a_hist) - 1  # completed rounds
        if d == a:
            leaf = fresh(parent, action)
            leaf["payoffs"] = list(intercept[a])
        elif a in target:
            leaf = fresh(parent, action)
            leaf["payoffs"] = [target[a][0], target[a][1]]
        elif t >= horizon:
            leaf = fresh(parent, action)
            leaf["payoffs"] = [0.0, 0.0]
        else:
            defender_turn(parent, action, d_hist, a_hist)

    defender_turn(None, None, (spec.defender_start,), (spec.attacker_start,))
    return build_game(
        {"players": [LEADER, FOLLOWER], "root": nodes[0]["id"], "nodes": nodes}
    )

"""Independent oracles for the test suite.

Everything in here recomputes results from first principles: plain tree
recursion over the node arrays, explicit enumeration, and brute-force
search. None of it shares code with the sequence-form machinery it checks.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from anchorsg.efg import FOLLOWER, LEADER, Game, PureStrategy, build_game

# -- path table ----------------------------------------------------------


def leaf_paths(game: Game) -> list[tuple[int, list, list, float, float]]:
    """(leaf node, leader (iid, a) pairs, follower pairs, ul, uf) per leaf."""
    out = []

    def walk(k: int, lpairs: list, fpairs: list) -> None:
        if game.payoffs[k] is not None:
            ul, uf = game.payoffs[k]
            out.append((k, list(lpairs), list(fpairs), ul, uf))
            return
        pairs = lpairs if game.players[k] == LEADER else fpairs
        for a, child in enumerate(game.children[k]):
            pairs.append((game.node_infoset[k], a))
            walk(child, lpairs, fpairs)
            pairs.pop()

    walk(game.root, [], [])
    return out


def count_nodes(game: Game) -> tuple[int, int]:
    """(all nodes, leaves) by plain recursion."""

    def walk(k: int) -> tuple[int, int]:
        if game.payoffs[k] is not None:
            return 1, 1
        n, z = 1, 0
        for child in game.children[k]:
            cn, cz = walk(child)
            n += cn
            z += cz
        return n, z

    return walk(game.root)


# -- expected utilities ---------------------------------------------------


def behavior_prob(probs: dict, pairs: list) -> float:
    p = 1.0
    for iid, a in pairs:
        p *= float(probs[iid][a])
    return p


def walk_expected(game: Game, bl: dict, bf: dict) -> tuple[float, float]:
    """Expected utilities for per-infoset distributions, straight recursion."""
    ul = uf = 0.0
    for _, lpairs, fpairs, vl, vf in leaf_paths(game):
        p = behavior_prob(bl, lpairs) * behavior_prob(bf, fpairs)
        ul += p * vl
        uf += p * vf
    return ul, uf


def pure_dist(game: Game, mapping: dict) -> dict:
    """One-hot distributions for a (possibly reduced) strategy mapping.

    Infosets the reduced strategy leaves out are off-path; they get uniform
    rows so tree walks never miss a key (their products are zeroed anyway).
    """
    player = game.infosets[next(iter(mapping))].player
    out = {}
    for iset in game.infosets_of[player]:
        a = mapping.get(iset.id)
        if a is None:
            out[iset.id] = np.full(len(iset.actions), 1.0 / len(iset.actions))
        else:
            row = np.zeros(len(iset.actions))
            row[a] = 1.0
            out[iset.id] = row
    return out


def mc_expected(
    game: Game, bl: dict, bf: dict, n: int, rng: np.random.Generator
) -> tuple[float, float, float]:
    """Monte Carlo rollout estimate: (ul, uf, standard error scale)."""
    tl = np.empty(n)
    tf = np.empty(n)
    for i in range(n):
        k = game.root
        while game.payoffs[k] is None:
            probs = bl if game.players[k] == LEADER else bf
            row = np.asarray(probs[game.node_infoset[k]], dtype=float)
            a = int(rng.choice(len(row), p=row / row.sum()))
            k = game.children[k][a]
        tl[i], tf[i] = game.payoffs[k]
    return float(tl.mean()), float(tf.mean()), float(tl.std() / math.sqrt(n))


# -- reduced strategy enumeration ----------------------------------------


def enum_reduced(game: Game, player: str) -> list[dict]:
    """All reduced pure strategies, by frontier recursion over the tree."""

    def first_own(k: int) -> list[int]:
        if game.payoffs[k] is not None:
            return []
        if game.players[k] == player:
            return [k]
        out = []
        for child in game.children[k]:
            out.extend(first_own(child))
        return out

    def expand(frontier: list[int], mapping: dict) -> list[dict]:
        if not frontier:
            return [dict(mapping)]
        # all frontier nodes of one infoset act together (perfect recall)
        iid = game.node_infoset[frontier[0]]
        nodes = [k for k in frontier if game.node_infoset[k] == iid]
        rest = [k for k in frontier if game.node_infoset[k] != iid]
        out = []
        for a in range(len(game.actions[nodes[0]])):
            nxt = list(rest)
            for k in nodes:
                nxt.extend(first_own(game.children[k][a]))
            mapping[iid] = a
            out.extend(expand(nxt, mapping))
            del mapping[iid]
        return out

    return expand(first_own(game.root), {})


# -- distortion by hand ---------------------------------------------------


def hand_weights(game: Game, bl: dict, alpha: float, mode: str) -> dict[int, float]:
    """Distorted leader weight per leaf node, from the path products."""
    out = {}
    for leaf, lpairs, _, _, _ in leaf_paths(game):
        if mode == "exact":
            w = 1.0
            for iid, a in lpairs:
                m = len(game.infosets[iid].actions)
                w *= (1.0 - alpha) * float(bl[iid][a]) + alpha / m
        else:
            plain = behavior_prob(bl, lpairs)
            if lpairs:
                iid, a = lpairs[-1]
                m = len(game.infosets[iid].actions)
                head = behavior_prob(bl, lpairs[:-1])
                w = (1.0 - alpha) * plain + (alpha / m) * head
            else:
                w = 1.0
        out[leaf] = w
    return out


def brute_distorted_br(
    game: Game, bl: dict, alpha: float, mode: str
) -> tuple[dict, float, float]:
    """(best follower mapping, perceived value, leader value) by enumeration.

    Applies the same sequential pick rule as the solvers: strictly higher
    perceived value wins, near-ties (1e-9) go to the higher leader value,
    remaining ties keep the earlier strategy.
    """
    weights = hand_weights(game, bl, alpha, mode)
    paths = leaf_paths(game)
    pick = None
    for mapping in enum_reduced(game, FOLLOWER):
        perceived = actual = 0.0
        for leaf, lpairs, fpairs, vl, vf in paths:
            if all(mapping.get(iid) == a for iid, a in fpairs):
                perceived += weights[leaf] * vf
                actual += behavior_prob(bl, lpairs) * vl
        if (
            pick is None
            or perceived > pick[1] + 1e-9
            or (perceived > pick[1] - 1e-9 and actual > pick[2] + 1e-9)
        ):
            pick = (mapping, perceived, actual)
    return pick


# -- single-shot SSE grid oracle ------------------------------------------


def simplex_grid(m: int, ticks: int) -> np.ndarray:
    """All length-m nonnegative integer vectors summing to ticks, / ticks."""
    if m == 1:
        return np.ones((1, 1))
    rows = []
    for combo in itertools.combinations(range(ticks + m - 1), m - 1):
        parts = []
        prev = -1
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        parts.append(ticks + m - 2 - prev)
        rows.append(parts)
    return np.asarray(rows, dtype=float) / ticks


def grid_sse(game: Game, step: float, alpha: float = 0.0) -> float:
    """Best leader utility over a simplex grid of one-infoset commitments.

    Only for games where the leader acts once (a single infoset). The
    follower best response uses distorted perception at the given alpha
    with leader-favorable tie-breaks, matching the solver convention.
    """
    lsets = game.infosets_of[LEADER]
    assert len(lsets) <= 1, "grid oracle needs a single leader infoset"
    if not lsets:
        mapping, _, actual = brute_distorted_br(game, {}, alpha, "linear")
        return actual
    m = len(lsets[0].actions)
    paths = leaf_paths(game)
    responses = enum_reduced(game, FOLLOWER)

    # per response: leader-action-indexed payoff sums + rootless constants
    vf_sum = np.zeros((len(responses), m))
    vl_sum = np.zeros((len(responses), m))
    cf = np.zeros(len(responses))
    cl = np.zeros(len(responses))
    for r, mapping in enumerate(responses):
        for _, lpairs, fpairs, vl, vf in paths:
            if not all(mapping.get(i) == a for i, a in fpairs):
                continue
            if lpairs:
                vf_sum[r, lpairs[0][1]] += vf
                vl_sum[r, lpairs[0][1]] += vl
            else:
                cf[r] += vf
                cl[r] += vl

    q = simplex_grid(m, int(round(1.0 / step)))
    w = (1.0 - alpha) * q + alpha / m
    perceived = w @ vf_sum.T + cf  # grid x response
    actual = q @ vl_sum.T + cl
    top = perceived.max(axis=1, keepdims=True)
    banked = np.where(perceived >= top - 1e-9, actual, -np.inf).max(axis=1)
    return float(banked.max())


# -- LP oracles -----------------------------------------------------------


def lp_vertex_opt(lp) -> float | None:
    """Maximum objective over all basic feasible points, or None if empty.

    Equality rows are always active; the remaining active set is chosen
    among inequality rows and variable bounds. Exponential, tiny LPs only.
    """
    n = lp.n
    rows = [(dict(coeffs), rel, rhs) for coeffs, rel, rhs in lp.rows]
    eq = [i for i, r in enumerate(rows) if r[1] == "="]
    ineq = [i for i, r in enumerate(rows) if r[1] != "="]

    def row_vec(i: int) -> np.ndarray:
        v = np.zeros(n)
        for j, c in rows[i][0].items():
            v[j] = c
        return v

    def feasible(x: np.ndarray) -> bool:
        if (x < lp.lo - 1e-7).any() or (x > lp.hi + 1e-7).any():
            return False
        for coeffs, rel, rhs in rows:
            v = sum(c * x[j] for j, c in coeffs.items())
            if rel == "<=" and v > rhs + 1e-7:
                return False
            if rel == ">=" and v < rhs - 1e-7:
                return False
            if rel == "=" and abs(v - rhs) > 1e-7:
                return False
        return True

    best = None
    need = n - len(eq)
    for k in range(0, min(need, len(ineq)) + 1):
        for active in itertools.combinations(ineq, k):
            fixed = need - k
            for vars_at in itertools.combinations(range(n), fixed):
                for sides in itertools.product((0, 1), repeat=fixed):
                    A = np.zeros((n, n))
                    b = np.zeros(n)
                    r = 0
                    for i in eq + list(active):
                        A[r] = row_vec(i)
                        b[r] = rows[i][2]
                        r += 1
                    ok = True
                    for j, s in zip(vars_at, sides):
                        bound = lp.hi[j] if s else lp.lo[j]
                        if not np.isfinite(bound):
                            ok = False
                            break
                        A[r, j] = 1.0
                        b[r] = bound
                        r += 1
                    if not ok:
                        continue
                    try:
                        x = np.linalg.solve(A, b)
                    except np.linalg.LinAlgError:
                        continue
                    if feasible(x):
                        val = float(lp.c @ x)
                        if best is None or val > best:
                            best = val
    return best


# -- tiny game builders ---------------------------------------------------


def smallest_game(payoffs=((1.0, 0.0), (0.0, 1.0))) -> Game:
    """One leader decision, two leaves."""
    nodes = [
        {
            "id": "root",
            "parent": None,
            "incoming_action": None,
            "player": LEADER,
            "infoset": "L0",
            "actions": ["a", "b"],
        },
        {"id": "za", "parent": "root", "incoming_action": "a", "payoffs": list(payoffs[0])},
        {"id": "zb", "parent": "root", "incoming_action": "b", "payoffs": list(payoffs[1])},
    ]
    return build_game({"players": [LEADER, FOLLOWER], "root": "root", "nodes": nodes})


def bimatrix_game(ul: np.ndarray, uf: np.ndarray) -> Game:
    """Leader commits to a row, follower picks a column without looking."""
    ul = np.asarray(ul, dtype=float)
    uf = np.asarray(uf, dtype=float)
    m, n = ul.shape
    nodes = [
        {
            "id": "root",
            "parent": None,
            "incoming_action": None,
            "player": LEADER,
            "infoset": "L0",
            "actions": [f"r{i}" for i in range(m)],
        }
    ]
    for i in range(m):
        nodes.append(
            {
                "id": f"f{i}",
                "parent": "root",
                "incoming_action": f"r{i}",
                "player": FOLLOWER,
                "infoset": "F0",
                "actions": [f"c{j}" for j in range(n)],
            }
        )
        for j in range(n):
            nodes.append(
                {
                    "id": f"z{i}_{j}",
                    "parent": f"f{i}",
                    "incoming_action": f"c{j}",
                    "payoffs": [float(ul[i, j]), float(uf[i, j])],
                }
            )
    return build_game({"players": [LEADER, FOLLOWER], "root": "root", "nodes": nodes})


def leader_chain_game(m1: int = 2, m2: int = 3, payoffs=None) -> Game:
    """Leader acts twice in a row; exposes length-2 sequences."""
    rng = np.random.default_rng(0)
    nodes = [
        {
            "id": "root",
            "parent": None,
            "incoming_action": None,
            "player": LEADER,
            "infoset": "L0",
            "actions": [f"a{i}" for i in range(m1)],
        }
    ]
    for i in range(m1):
        nodes.append(
            {
                "id": f"n{i}",
                "parent": "root",
                "incoming_action": f"a{i}",
                "player": LEADER,
                "infoset": f"L1_{i}",
                "actions": [f"b{j}" for j in range(m2)],
            }
        )
        for j in range(m2):
            if payoffs is None:
                pay = [float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))]
            else:
                pay = list(payoffs[i][j])
            nodes.append(
                {
                    "id": f"z{i}_{j}",
                    "parent": f"n{i}",
                    "incoming_action": f"b{j}",
                    "payoffs": pay,
                }
            )
    return build_game({"players": [LEADER, FOLLOWER], "root": "root", "nodes": nodes})


def two_stage_game() -> Game:
    """Leader, then follower (blind), then leader again; both sides mix.

    Small enough for exhaustive oracles but deep enough that linear and
    exact distortion genuinely differ and both players have real infosets.
    """
    rng = np.random.default_rng(7)
    nodes = [
        {
            "id": "root",
            "parent": None,
            "incoming_action": None,
            "player": LEADER,
            "infoset": "L0",
            "actions": ["x", "y"],
        }
    ]
    for i, la in enumerate(("x", "y")):
        nodes.append(
            {
                "id": f"f{i}",
                "parent": "root",
                "incoming_action": la,
                "player": FOLLOWER,
                "infoset": "F0",
                "actions": ["p", "q"],
            }
        )
        for j, fa in enumerate(("p", "q")):
            nodes.append(
                {
                    "id": f"l{i}{j}",
                    "parent": f"f{i}",
                    "incoming_action": fa,
                    "player": LEADER,
                    "infoset": f"L1_{i}",
                    "actions": ["u", "v"],
                }
            )
            for k, ba in enumerate(("u", "v")):
                nodes.append(
                    {
                        "id": f"z{i}{j}{k}",
                        "parent": f"l{i}{j}",
                        "incoming_action": ba,
                        "payoffs": [
                            round(float(rng.uniform(-1, 1)), 2),
                            round(float(rng.uniform(-1, 1)), 2),
                        ],
                    }
                )
    return build_game({"players": [LEADER, FOLLOWER], "root": "root", "nodes": nodes})


def full_behavior(game: Game, player: str, rng: np.random.Generator) -> dict:
    """Random interior distribution at every infoset of the player."""
    return {
        iset.id: rng.dirichlet(np.ones(len(iset.actions)))
        for iset in game.infosets_of[player]
    }


def as_pure_strategy(game: Game, mapping: dict) -> PureStrategy:
    return PureStrategy.from_mapping(FOLLOWER, mapping)

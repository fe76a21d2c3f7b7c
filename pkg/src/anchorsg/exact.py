"""Exact leader-commitment solvers over the sequence form.

The model maximizes the leader's expected utility subject to the follower
playing a best response under anchoring-distorted perception (linear weight
form). Follower optimality is encoded with one value variable per follower
infoset (plus a root value) and slack variables that are forced to zero on
played sequences:

    v[I(sf)] = s[sf] + sum_{I' under sf} v[I'] + sum_z uf(z) * w(lseq(z))

where the perceived weight of a non-empty leader sequence is linear in the
leader's realization plan, w(sl) = (1-alpha) r(sl) + (alpha/M) r(init(sl)),
and w(empty) = r(empty) = 1. With alpha = 0 this collapses to the plain
undistorted best-response encoding.

Two drivers share the model: a branch-and-bound run over the binary
follower sequence variables, and an enumeration that solves one LP per
follower reduced pure strategy and keeps the best.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import anchoring
from .efg import (
    FOLLOWER,
    LEADER,
    Game,
    PureStrategy,
    RealizationPlan,
    behavior_to_realization,
    count_reduced_strategies,
    expected_utilities,
    pure_to_realization,
    realization_to_behavior,
    reduced_strategies,
    strategy_sequence_ids,
)
from .lp import (
    EnumerationCapExceeded,
    LinearProgram,
    MilpModel,
    ResourceLimit,
    lp_to_text,
    solve_lp,
    solve_milp,
)
from .results import SolveResult

DEFAULT_ENUM_CAP = 200_000


@dataclass
class SequenceFormModel:
    game: Game
    alpha: float
    big_m: float
    lp: LinearProgram
    binaries: list[int]
    rl0: int
    rf0: int
    v0: int  # root value column; infoset values follow in declaration order
    s0: int
    p0: int

    @property
    def milp(self) -> MilpModel:
        return MilpModel(self.lp, self.binaries)


def big_m_bound(game: Game, alpha: float) -> float:
    """Safe slack bound for the follower optimality rows.

    Perceived weights of the leader sequences cut by one follower strategy
    can sum past 1 when alpha > 0 (each leader depth level adds at most
    alpha), so the plain payoff range is scaled by that mass bound.
    """
    if game.num_leaves == 0:
        return 1.0
    depth = max((len(s.moves) for s in game.table(LEADER).seqs), default=0)
    mass = 1.0 + alpha * depth
    hi = max(0.0, float(game.leaf_uf.max()))
    lo = min(0.0, float(game.leaf_uf.min()))
    return mass * (hi - lo) + 1.0


def _perceived_payoff_terms(game: Game, alpha: float) -> list[dict[int, float]]:
    """Per follower sequence: leader-plan coefficients of its leaf payoffs."""
    tl = game.table(LEADER)
    nf = len(game.table(FOLLOWER))
    terms: list[dict[int, float]] = [dict() for _ in range(nf)]
    for z in range(game.num_leaves):
        t = int(game.leaf_fseq[z])
        sl = int(game.leaf_lseq[z])
        u = float(game.leaf_uf[z])
        row = terms[t]
        if sl == 0:
            row[0] = row.get(0, 0.0) + u
        else:
            row[sl] = row.get(sl, 0.0) + (1.0 - alpha) * u
            par = int(tl.parent[sl])
            row[par] = row.get(par, 0.0) + (alpha / int(tl.m_last[sl])) * u
    return terms


def _infoset_pos(game: Game) -> dict[str, int]:
    got = getattr(game, "_follower_infoset_pos", None)
    if got is None:
        got = {iset.id: k for k, iset in enumerate(game.infosets_of[FOLLOWER])}
        game._follower_infoset_pos = got
    return got


def build_model(game: Game, alpha: float) -> SequenceFormModel:
    alpha = anchoring.check_alpha(alpha)
    tl, tf = game.table(LEADER), game.table(FOLLOWER)
    nl, nf = len(tl), len(tf)
    n_if = len(game.infosets_of[FOLLOWER])
    nz = game.num_leaves
    rl0, rf0 = 0, nl
    v0 = nl + nf
    s0 = v0 + 1 + n_if
    p0 = s0 + nf
    lp = LinearProgram(p0 + nz)

    for j in range(rl0, rl0 + nl):
        lp.set_bounds(j, 0.0, 1.0)
    for j in range(rf0, rf0 + nf):
        lp.set_bounds(j, 0.0, 1.0)
    lp.set_bounds(rl0, 1.0, 1.0)
    lp.set_bounds(rf0, 1.0, 1.0)
    for j in range(v0, v0 + 1 + n_if):
        lp.set_bounds(j, -np.inf, np.inf)
    big_m = big_m_bound(game, alpha)
    lp.set_bounds(s0, 0.0, 0.0)  # the empty sequence is always played
    for t in range(1, nf):
        lp.set_bounds(s0 + t, 0.0, np.inf)
    for z in range(nz):
        lp.set_bounds(p0 + z, 0.0, np.inf)

    for player, base, table in ((LEADER, rl0, tl), (FOLLOWER, rf0, tf)):
        for iset in game.infosets_of[player]:
            coeffs = {base + iset.own_seq: 1.0}
            for a in range(len(iset.actions)):
                sid = table.action_seq[(iset.id, a)]
                coeffs[base + sid] = coeffs.get(base + sid, 0.0) - 1.0
            lp.add_constraint(coeffs, "=", 0.0)

    terms = _perceived_payoff_terms(game, alpha)
    pos = _infoset_pos(game)
    for t in range(nf):
        coeffs: dict[int, float] = {}
        vc = v0 if t == 0 else v0 + 1 + pos[tf.last_infoset[t]]
        coeffs[vc] = coeffs.get(vc, 0.0) + 1.0
        coeffs[s0 + t] = coeffs.get(s0 + t, 0.0) - 1.0
        for iid in tf.children_infosets[t]:
            cc = v0 + 1 + pos[iid]
            coeffs[cc] = coeffs.get(cc, 0.0) - 1.0
        for sl, coef in terms[t].items():
            coeffs[rl0 + sl] = coeffs.get(rl0 + sl, 0.0) - coef
        lp.add_constraint(coeffs, "=", 0.0)

    for t in range(1, nf):
        lp.add_constraint({s0 + t: 1.0, rf0 + t: big_m}, "<=", big_m)

    for z in range(nz):
        lp.add_constraint({p0 + z: 1.0, rl0 + int(game.leaf_lseq[z]): -1.0}, "<=", 0.0)
        lp.add_constraint({p0 + z: 1.0, rf0 + int(game.leaf_fseq[z]): -1.0}, "<=", 0.0)
    lp.add_constraint({p0 + z: 1.0 for z in range(nz)}, "=", 1.0)

    lp.set_objective({p0 + z: float(game.leaf_ul[z]) for z in range(nz)})
    binaries = list(range(rf0, rf0 + nf))
    return SequenceFormModel(
        game, alpha, big_m, lp, binaries, rl0, rf0, v0, s0, p0
    )


def _clean_plan(game: Game, raw: np.ndarray) -> RealizationPlan:
    """Round LP dust off a leader plan by a behavior round trip."""
    plan = RealizationPlan(LEADER, np.clip(raw, 0.0, 1.0))
    return behavior_to_realization(game, realization_to_behavior(game, plan))


def _follower_from_values(game: Game, rf: np.ndarray) -> PureStrategy:
    t = game.table(FOLLOWER)
    choices: dict[str, int] = {}
    stack = list(t.children_infosets[0])
    while stack:
        iid = stack.pop()
        iset = game.infosets[iid]
        vals = [rf[t.action_seq[(iid, a)]] for a in range(len(iset.actions))]
        a = int(np.argmax(vals))
        choices[iid] = a
        stack.extend(t.children_infosets[t.action_seq[(iid, a)]])
    return PureStrategy.from_mapping(FOLLOWER, choices)


def _package(
    game: Game,
    method: str,
    alpha: float,
    plan: RealizationPlan,
    follower: PureStrategy,
    stats: dict,
) -> SolveResult:
    weights = anchoring.distorted_weights_linear(game, plan, alpha)
    perceived, _ = anchoring.strategy_values(game, plan, weights, follower)
    ul, _ = expected_utilities(game, plan, pure_to_realization(game, follower))
    return SolveResult(
        method=method,
        alpha=alpha,
        at_mode="linear",
        leader_plan=plan,
        leader_behavior=realization_to_behavior(game, plan),
        follower_strategy=follower,
        leader_utility=float(ul),
        follower_utility=float(perceived),
        stats=stats,
    )


def solve_bnb(
    game: Game,
    alpha: float,
    deadline: float | None = None,
    node_cap: int | None = None,
) -> SolveResult:
    """Globally optimal commitment via branch and bound on the full model."""
    start = time.monotonic()
    if deadline is not None and time.monotonic() > deadline:
        raise ResourceLimit("time budget exhausted before solving started")
    model = build_model(game, alpha)
    sol = solve_milp(model.milp, deadline=deadline, node_cap=node_cap)
    if sol.status != "optimal":
        raise RuntimeError(f"sequence-form model unexpectedly {sol.status}")
    nl = len(game.table(LEADER))
    nf = len(game.table(FOLLOWER))
    plan = _clean_plan(game, sol.x[model.rl0 : model.rl0 + nl])
    follower = _follower_from_values(game, sol.x[model.rf0 : model.rf0 + nf])
    stats = {
        "wall_time_ms": (time.monotonic() - start) * 1000.0,
        "lp_solves": sol.lp_solves,
        "bnb_nodes": sol.nodes,
        "objective": float(sol.objective),
    }
    return _package(game, "bnb", alpha, plan, follower, stats)


def _fixed_response_lp(
    game: Game,
    big_m: float,
    terms: list[dict[int, float]],
    played: set[int],
) -> tuple[LinearProgram, int, list[int]]:
    """LP over leader plans that make one fixed follower strategy optimal."""
    tl, tf = game.table(LEADER), game.table(FOLLOWER)
    nl, nf = len(tl), len(tf)
    n_if = len(game.infosets_of[FOLLOWER])
    v0 = nl
    s0 = v0 + 1 + n_if
    leaves = [z for z in range(game.num_leaves) if int(game.leaf_fseq[z]) in played]
    p0 = s0 + nf
    lp = LinearProgram(p0 + len(leaves))

    for j in range(nl):
        lp.set_bounds(j, 0.0, 1.0)
    lp.set_bounds(0, 1.0, 1.0)
    for j in range(v0, v0 + 1 + n_if):
        lp.set_bounds(j, -np.inf, np.inf)
    for t in range(nf):
        lp.set_bounds(s0 + t, 0.0, 0.0 if t in played else big_m)
    for k in range(len(leaves)):
        lp.set_bounds(p0 + k, 0.0, np.inf)

    for iset in game.infosets_of[LEADER]:
        coeffs = {iset.own_seq: 1.0}
        for a in range(len(iset.actions)):
            sid = tl.action_seq[(iset.id, a)]
            coeffs[sid] = coeffs.get(sid, 0.0) - 1.0
        lp.add_constraint(coeffs, "=", 0.0)

    pos = _infoset_pos(game)
    for t in range(nf):
        coeffs: dict[int, float] = {}
        vc = v0 if t == 0 else v0 + 1 + pos[tf.last_infoset[t]]
        coeffs[vc] = coeffs.get(vc, 0.0) + 1.0
        coeffs[s0 + t] = coeffs.get(s0 + t, 0.0) - 1.0
        for iid in tf.children_infosets[t]:
            cc = v0 + 1 + pos[iid]
            coeffs[cc] = coeffs.get(cc, 0.0) - 1.0
        for sl, coef in terms[t].items():
            coeffs[sl] = coeffs.get(sl, 0.0) - coef
        lp.add_constraint(coeffs, "=", 0.0)

    for k, z in enumerate(leaves):
        lp.add_constraint({p0 + k: 1.0, int(game.leaf_lseq[z]): -1.0}, "<=", 0.0)
    lp.add_constraint({p0 + k: 1.0 for k in range(len(leaves))}, "=", 1.0)
    lp.set_objective({p0 + k: float(game.leaf_ul[z]) for k, z in enumerate(leaves)})
    return lp, p0, leaves


def solve_multilp(
    game: Game,
    alpha: float,
    enum_cap: int = DEFAULT_ENUM_CAP,
    deadline: float | None = None,
) -> SolveResult:
    """One LP per follower reduced pure strategy; keep the best inducible one.

    Ties in the LP objective break by the recomputed expected leader utility
    and then by enumeration order, which is deterministic.
    """
    start = time.monotonic()
    alpha = anchoring.check_alpha(alpha)
    n_strats = count_reduced_strategies(game, FOLLOWER)
    if n_strats > enum_cap:
        raise EnumerationCapExceeded(
            f"{n_strats} follower strategies exceed the cap of {enum_cap}"
        )
    big_m = big_m_bound(game, alpha)
    terms = _perceived_payoff_terms(game, alpha)
    best: tuple[float, float, RealizationPlan, PureStrategy] | None = None
    lp_solves = 0
    infeasible = 0
    nl = len(game.table(LEADER))
    for ps in reduced_strategies(game, FOLLOWER):
        if deadline is not None and time.monotonic() > deadline:
            raise ResourceLimit("time budget exhausted during enumeration")
        played = set(strategy_sequence_ids(game, ps))
        lp, _, _ = _fixed_response_lp(game, big_m, terms, played)
        sol = solve_lp(lp)
        lp_solves += 1
        if sol.status == "infeasible":
            infeasible += 1
            continue
        if sol.status != "optimal":
            raise RuntimeError(f"fixed-response LP unexpectedly {sol.status}")
        plan = _clean_plan(game, sol.x[:nl])
        true_ul, _ = expected_utilities(game, plan, pure_to_realization(game, ps))
        if (
            best is None
            or sol.objective > best[0] + 1e-9
            or (sol.objective > best[0] - 1e-9 and true_ul > best[1] + 1e-9)
        ):
            best = (sol.objective, true_ul, plan, ps)
    if best is None:
        raise RuntimeError("no follower strategy is inducible; model is inconsistent")
    stats = {
        "wall_time_ms": (time.monotonic() - start) * 1000.0,
        "lp_solves": lp_solves,
        "strategies": n_strats,
        "infeasible_strategies": infeasible,
        "objective": float(best[0]),
    }
    return _package(game, "multilp", alpha, best[2], best[3], stats)


def dump_model(game: Game, alpha: float) -> str:
    return lp_to_text(build_model(game, alpha).lp)

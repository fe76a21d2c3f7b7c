"""Sampling-based solver: UCT over follower strategies, hill-climbed leader.

The outer loop samples a follower reduced pure strategy from a UCT tree
whose nodes fix actions at follower infosets in depth-first order. For each
sampled strategy the leader plan is adjusted in two phases of accept/reject
mixing steps toward random pure strategies: feasibility passes raise the
strategy's perceived-utility margin over the follower's current distorted
best response until it becomes (weakly) optimal, then positive passes
improve the leader's undistorted payoff while keeping it optimal. The
leader utility reached for the sample is backpropagated as the UCT reward.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import anchoring
from .efg import (
    FOLLOWER,
    LEADER,
    BehaviorStrategy,
    Game,
    PureStrategy,
    RealizationPlan,
    behavior_to_realization,
    pure_to_realization,
    random_reduced_strategy,
    realization_to_behavior,
    response_values,
    strategy_leaf_mask,
    uniform_behavior,
)
from .lp import ResourceLimit
from .results import SolveResult
from .rng import substream

MARGIN_TOL = 1e-9

# consecutive aborted samples before the run gives up on the whole game
ABORT_STREAK = 50

# bisection depth when projecting an infeasible pull back onto the
# best-response face along the segment toward a feasible anchor
REPAIR_BISECTIONS = 8


@dataclass
class UctNode:
    """Partial follower strategy; pending[0] is the next infoset to fix."""

    pending: tuple[str, ...]
    visits: int = 0
    total: float = 0.0
    children: dict[int, "UctNode"] = field(default_factory=dict)

    def mean(self) -> float:
        return self.total / self.visits if self.visits else 0.0


@dataclass
class O2uctConfig:
    max_positive: int = 5000
    eps: float = 1e-5
    eps_window: int = 500
    max_feasibility: int = 10000
    uct_c: float = 0.7
    step0: float = 0.3
    step_decay: float = 0.999
    step_floor: float = 1e-3
    patience: int = 20
    alpha: float = 0.0
    at_mode: str = "linear"
    seed: int = 0

    def __post_init__(self):
        for name in ("max_positive", "eps_window", "max_feasibility", "patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.eps <= 0 or self.step0 <= 0 or self.step_floor <= 0:
            raise ValueError("eps and step sizes must be positive")
        if not 0 < self.step_decay <= 1:
            raise ValueError("step_decay must lie in (0, 1]")
        anchoring.check_alpha(self.alpha)
        if self.at_mode not in anchoring.MODES:
            raise ValueError(f"at_mode must be one of {anchoring.MODES}")


def new_tree(game: Game) -> UctNode:
    return UctNode(pending=tuple(game.table(FOLLOWER).children_infosets[0]))


def sample_follower(
    tree: UctNode, game: Game, rng: np.random.Generator, c_uct: float
) -> tuple[PureStrategy, list[UctNode]]:
    """Descend by UCB1, expand one node, finish uniformly at random."""
    t = game.table(FOLLOWER)
    node = tree
    path = [tree]
    choices: dict[str, int] = {}
    while node.pending:
        iid = node.pending[0]
        n_actions = len(game.infosets[iid].actions)
        fresh = [a for a in range(n_actions) if a not in node.children]
        if fresh:
            a = fresh[int(rng.integers(len(fresh)))]
            opened = tuple(t.children_infosets[t.action_seq[(iid, a)]])
            child = UctNode(pending=opened + node.pending[1:])
            node.children[a] = child
            choices[iid] = a
            path.append(child)
            node = child
            break
        logn = math.log(max(node.visits, 1))
        a = max(
            range(n_actions),
            key=lambda k: (
                node.children[k].mean()
                + c_uct * math.sqrt(logn / node.children[k].visits),
                -k,
            ),
        )
        choices[iid] = a
        node = node.children[a]
        path.append(node)
    # uniform completion below the frontier, no nodes created
    stack = list(node.pending)
    while stack:
        iid = stack.pop(0)
        a = int(rng.integers(len(game.infosets[iid].actions)))
        choices[iid] = a
        stack = list(t.children_infosets[t.action_seq[(iid, a)]]) + stack
    return PureStrategy.from_mapping(FOLLOWER, choices), path


def backpropagate(path: list[UctNode], reward: float) -> None:
    for node in path:
        node.visits += 1
        node.total += reward


@dataclass
class _Assessment:
    margin: float  # perceived value of the target strategy minus the BR's
    response_ul: float  # leader's undistorted utility against the BR
    target_ul: float  # leader's undistorted utility against the target


def _target_leaves(game: Game, target: PureStrategy) -> np.ndarray:
    """Leaf indices consistent with the target, cached; the climbs score
    thousands of plans against one fixed strategy."""
    cache = getattr(game, "_target_leaf_ids", None)
    if cache is None:
        cache = {}
        game._target_leaf_ids = cache
    got = cache.get(target.choices)
    if got is None:
        got = np.flatnonzero(strategy_leaf_mask(game, target))
        cache[target.choices] = got
    return got


def _assess(
    game: Game, plan: RealizationPlan, target: PureStrategy, alpha: float, mode: str
) -> _Assessment:
    w = anchoring.distorted_weights(game, plan, alpha, mode)
    perceived = w.probs[game.leaf_lseq] * game.leaf_uf
    actual = plan.probs[game.leaf_lseq] * game.leaf_ul
    _, br_value, br_ul = response_values(game, perceived, actual)
    ids = _target_leaves(game, target)
    target_value = float(perceived[ids].sum())
    target_ul = float(actual[ids].sum())
    return _Assessment(target_value - br_value, br_ul, target_ul)


def _mix(plan: RealizationPlan, pure: RealizationPlan, step: float) -> RealizationPlan:
    return RealizationPlan(LEADER, (1.0 - step) * plan.probs + step * pure.probs)


def _random_plan(game: Game, rng: np.random.Generator) -> RealizationPlan:
    """Dirichlet-behavior leader plan; rays toward these span the polytope."""
    probs = {
        iset.id: rng.dirichlet(np.ones(len(iset.actions)))
        for iset in game.infosets_of[LEADER]
    }
    return behavior_to_realization(game, BehaviorStrategy(LEADER, probs))


def _swing_plan(
    game: Game,
    plan: RealizationPlan,
    rng: np.random.Generator,
    reset: bool = False,
) -> RealizationPlan:
    """Copy of the plan with one infoset's behavior collapsed on one action.

    Mixing toward it trades probability between actions at a single infoset
    while leaving the rest of the plan alone, the coordinate move that global
    vertex pulls cannot express. With reset=True the swung infoset's whole
    subtree goes uniform as well, a fresh start for the newly weighted branch.
    """
    t = game.table(LEADER)
    isets = game.infosets_of[LEADER]
    # uniform over depths first so shallow commitments move as often as
    # the (far more numerous) deep ones
    depths = sorted({s.depth for s in isets})
    d = depths[int(rng.integers(len(depths)))]
    layer = [s for s in isets if s.depth == d]
    iset = layer[int(rng.integers(len(layer)))]
    b = realization_to_behavior(game, plan)
    swung = np.zeros(len(iset.actions))
    swung[int(rng.integers(len(iset.actions)))] = 1.0
    b.probs[iset.id] = swung
    if reset:
        stack = [
            t.action_seq[(iset.id, a)] for a in range(len(iset.actions))
        ]
        while stack:
            sid = stack.pop()
            for jid in t.children_infosets[sid]:
                k = len(game.infosets[jid].actions)
                b.probs[jid] = np.full(k, 1.0 / k)
                stack.extend(t.action_seq[(jid, a)] for a in range(k))
    return behavior_to_realization(game, b)


def climb_target(game: Game, target: PureStrategy) -> RealizationPlan:
    """Leader's pure best reply to the fixed follower strategy.

    Pulling the plan toward this vertex is the steepest payoff direction
    available to the positive pass; feasibility is repaired separately.
    """
    t = game.table(LEADER)
    reach = pure_to_realization(game, target).probs[game.leaf_fseq]
    imm = np.zeros(len(t))
    np.add.at(imm, game.leaf_lseq, reach * game.leaf_ul)
    memo: dict[str, tuple[float, int]] = {}

    def seq_value(sid: int) -> float:
        v = imm[sid]
        for iid in t.children_infosets[sid]:
            v += iset_value(iid)[0]
        return v

    def iset_value(iid: str) -> tuple[float, int]:
        got = memo.get(iid)
        if got is not None:
            return got
        pick = None
        for a in range(len(game.infosets[iid].actions)):
            v = seq_value(t.action_seq[(iid, a)])
            if pick is None or v > pick[0] + 1e-12:
                pick = (v, a)
        memo[iid] = pick
        return pick

    seq_value(0)
    choices: dict[str, int] = {}
    queue = list(t.children_infosets[0])
    while queue:
        iid = queue.pop()
        a = memo[iid][1]
        choices[iid] = a
        queue.extend(t.children_infosets[t.action_seq[(iid, a)]])
    return pure_to_realization(game, PureStrategy.from_mapping(LEADER, choices))


def feasibility_pass(
    game: Game,
    plan: RealizationPlan,
    target: PureStrategy,
    alpha: float,
    mode: str,
    step: float,
    rng: np.random.Generator,
    current: _Assessment | None = None,
) -> tuple[RealizationPlan, _Assessment, bool]:
    """One margin hill-climb step; accepts only strict improvement."""
    if current is None:
        current = _assess(game, plan, target, alpha, mode)
    pure = pure_to_realization(game, random_reduced_strategy(game, LEADER, rng))
    candidate = _mix(plan, pure, step)
    trial = _assess(game, candidate, target, alpha, mode)
    if trial.margin > current.margin:
        return candidate, trial, True
    return plan, current, False


def positive_pass(
    game: Game,
    plan: RealizationPlan,
    target: PureStrategy,
    alpha: float,
    mode: str,
    step: float,
    rng: np.random.Generator,
    current: _Assessment | None = None,
    pull: RealizationPlan | None = None,
) -> tuple[RealizationPlan, _Assessment, bool]:
    """One payoff step; accepted only if the target stays a best response.

    The pull vertex is the cached steepest-payoff plan half the time and a
    random pure plan otherwise. Payoff is linear along the pull ray, so a
    pull that gains payoff but overshoots the best-response margin is cut
    back to the face by bisecting the mixing weight: the margin is concave
    in it and the current plan end is feasible. Riding rays up to the face
    is what lets the climb slide along a binding constraint instead of
    stalling the moment it becomes active.
    """
    if current is None:
        current = _assess(game, plan, target, alpha, mode)
    kind = rng.random()
    if pull is not None and kind < 0.2:
        pure = pull
    elif kind < 0.4:
        pure = pure_to_realization(game, random_reduced_strategy(game, LEADER, rng))
    elif kind < 0.6:
        pure = _swing_plan(game, plan, rng)
    elif kind < 0.8:
        pure = _swing_plan(game, plan, rng, reset=True)
    elif kind < 0.9:
        pure = _random_plan(game, rng)
    else:
        pure = behavior_to_realization(game, uniform_behavior(game, LEADER))
    candidate = _mix(plan, pure, step)
    trial = _assess(game, candidate, target, alpha, mode)
    if trial.margin >= -MARGIN_TOL:
        if trial.target_ul > current.target_ul:
            return candidate, trial, True
        return plan, current, False
    if trial.target_ul <= current.target_ul:
        return plan, current, False
    lo, lo_state = 0.0, None
    hi = step
    for _ in range(REPAIR_BISECTIONS):
        mid = 0.5 * (lo + hi)
        fixed = _mix(plan, pure, mid)
        attempt = _assess(game, fixed, target, alpha, mode)
        if attempt.margin >= -MARGIN_TOL:
            lo, lo_state = mid, attempt
        else:
            hi = mid
    if lo_state is not None and lo_state.target_ul > current.target_ul:
        return _mix(plan, pure, lo), lo_state, True
    return plan, current, False


def run(game: Game, cfg: O2uctConfig, deadline: float | None = None) -> SolveResult:
    t0 = time.perf_counter()
    if deadline is not None and time.monotonic() >= deadline:
        raise ResourceLimit("deadline exhausted before the first sample")
    rng = substream(cfg.seed, "o2uct")
    penalty = float(game.leaf_ul.min()) - 1.0

    best_plan = behavior_to_realization(game, uniform_behavior(game, LEADER))
    start = anchoring.distorted_best_response(game, best_plan, cfg.alpha, cfg.at_mode)
    best_ul = start[2]

    tree = new_tree(game)
    samples = 0
    positive_total = 0
    feasibility_total = 0
    aborted_run = 0
    anchor_value = best_ul
    anchor_pass = 0
    stop = None
    # per-strategy resume points: the climb for a strategy picks up where
    # its previous sample ended instead of re-climbing from the incumbent
    witnesses: dict[tuple, tuple[RealizationPlan, float]] = {}
    pulls: dict[tuple, RealizationPlan] = {}
    hopeless: set[tuple] = set()

    while stop is None:
        if deadline is not None and time.monotonic() >= deadline:
            raise ResourceLimit("deadline exhausted while sampling")
        target, path = sample_follower(tree, game, rng, cfg.uct_c)
        samples += 1
        key = target.choices
        if key in hopeless:
            backpropagate(path, penalty)
            aborted_run += 1
            if aborted_run >= ABORT_STREAK:
                stop = "infeasible-strategy"
            continue
        pull = pulls.get(key)
        if pull is None:
            pull = pulls[key] = climb_target(game, target)
        seen = witnesses.get(key)
        plan = best_plan.copy() if seen is None else seen[0].copy()
        # kick the start off the previous path so resumed climbs can leave
        # the basin they converged into; monotone passes cannot cross a
        # payoff valley, so the jumps across have to happen here
        kick = rng.random()
        if kick < 0.35:
            jump = _swing_plan(game, plan, rng, reset=True)
        elif kick < 0.55:
            jump = _swing_plan(game, plan, rng)
        elif kick < 0.75:
            jump = _random_plan(game, rng)
        elif kick < 0.9:
            jump = pure_to_realization(
                game, random_reduced_strategy(game, LEADER, rng)
            )
        else:
            jump = pull
        plan = _mix(plan, jump, rng.uniform(0.1, 0.9))
        state = _assess(game, plan, target, cfg.alpha, cfg.at_mode)
        if state.response_ul > best_ul:
            best_plan, best_ul = plan, state.response_ul

        step = cfg.step0
        consecutive_feas = 0
        infeasible = False
        while state.margin < -MARGIN_TOL:
            if consecutive_feas >= cfg.max_feasibility:
                infeasible = True
                break
            plan, state, ok = feasibility_pass(
                game, plan, target, cfg.alpha, cfg.at_mode, step, rng, state
            )
            consecutive_feas += 1
            feasibility_total += 1
            if ok:
                if state.response_ul > best_ul:
                    best_plan, best_ul = plan, state.response_ul
            else:
                step = max(step * cfg.step_decay, cfg.step_floor)

        if infeasible:
            # strategy cannot be induced: punish it in the tree and move on;
            # a long unbroken streak of such samples ends the run instead
            hopeless.add(key)
            backpropagate(path, penalty)
            aborted_run += 1
            if aborted_run >= ABORT_STREAK:
                stop = "infeasible-strategy"
            continue

        aborted_run = 0
        step = cfg.step0
        rejects = 0
        while rejects < cfg.patience and stop is None:
            if positive_total >= cfg.max_positive:
                stop = "positive-pass-cap"
                break
            plan, state, ok = positive_pass(
                game, plan, target, cfg.alpha, cfg.at_mode, step, rng, state, pull
            )
            positive_total += 1
            if ok:
                rejects = 0
                if state.response_ul > best_ul:
                    best_plan, best_ul = plan, state.response_ul
            else:
                rejects += 1
                step = max(step * cfg.step_decay, cfg.step_floor)
        if seen is None or state.target_ul > seen[1]:
            witnesses[key] = (plan.copy(), state.target_ul)
        backpropagate(path, witnesses[key][1])
        if stop is None and samples - anchor_pass >= cfg.eps_window:
            if best_ul - anchor_value < cfg.eps:
                stop = "stalled"
            anchor_value = best_ul
            anchor_pass = samples

    response, perceived, actual = anchoring.distorted_best_response(
        game, best_plan, cfg.alpha, cfg.at_mode
    )
    return SolveResult(
        method="o2uct",
        alpha=cfg.alpha,
        at_mode=cfg.at_mode,
        leader_plan=best_plan,
        leader_behavior=realization_to_behavior(game, best_plan),
        follower_strategy=response,
        leader_utility=actual,
        follower_utility=perceived,
        stats={
            "samples": samples,
            "positive_passes": positive_total,
            "feasibility_passes": feasibility_total,
            "stop": stop,
            "wall_time_ms": (time.perf_counter() - t0) * 1e3,
        },
    )

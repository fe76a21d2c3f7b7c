"""UCT sampling, the two adjustment passes, and full solver runs."""

from __future__ import annotations

import numpy as np
import pytest

from anchorsg import anchoring
from anchorsg.efg import (
    FOLLOWER,
    LEADER,
    BehaviorStrategy,
    PureStrategy,
    behavior_to_realization,
    pure_to_realization,
    expected_utilities,
    reduced_strategies,
    uniform_behavior,
)
from anchorsg.exact import (
    _fixed_response_lp,
    _perceived_payoff_terms,
    big_m_bound,
    solve_bnb,
    solve_multilp,
)
from anchorsg.lp import solve_lp
from anchorsg.o2uct import (
    O2uctConfig,
    _assess,
    backpropagate,
    climb_target,
    feasibility_pass,
    new_tree,
    positive_pass,
    run,
    sample_follower,
)
from anchorsg.efg import strategy_sequence_ids
from anchorsg.rng import substream

import helpers


def uniform_plan(game):
    return behavior_to_realization(game, uniform_behavior(game, LEADER))


def strategy_lp_optimum(game, target, alpha):
    """LP optimum of leader utility subject to the target being a BR."""
    played = set(strategy_sequence_ids(game, target))
    lp, _, _ = _fixed_response_lp(
        game, big_m_bound(game, alpha), _perceived_payoff_terms(game, alpha), played
    )
    return solve_lp(lp)


# -- sampling ----------------------------------------------------------------


def test_no_follower_moves_yields_empty_strategy(smallest):
    tree = new_tree(smallest)
    ps, path = sample_follower(tree, smallest, substream(0, "t"), 0.7)
    assert ps.choices == ()
    assert path == [tree]


def test_unvisited_children_expanded_first(two_stage):
    tree = new_tree(two_stage)
    rng = substream(1, "t")
    seen = set()
    for _ in range(2):
        ps, path = sample_follower(tree, two_stage, rng, 0.7)
        backpropagate(path, 0.0)
        seen.add(ps.action("F0"))
    # two actions at the lone infoset: the second sample may not revisit
    assert seen == {0, 1}
    assert set(tree.children) == {0, 1}


def test_equal_rewards_keep_both_arms_alive(two_stage):
    tree = new_tree(two_stage)
    rng = substream(2, "t")
    for _ in range(200):
        _, path = sample_follower(tree, two_stage, rng, 0.7)
        backpropagate(path, 1.0)
    assert tree.visits == 200
    share = tree.children[0].visits / 200
    assert 0.25 <= share <= 0.75


def test_root_visits_equal_samples(medium_warehouse):
    tree = new_tree(medium_warehouse)
    rng = substream(3, "t")
    n = 60
    for k in range(n):
        ps, path = sample_follower(tree, medium_warehouse, rng, 0.7)
        backpropagate(path, float(k % 5))
        assert path[0] is tree
    assert tree.visits == n
    assert sum(c.visits for c in tree.children.values()) == n


def test_sampled_strategies_are_valid_reduced(medium_warehouse):
    tree = new_tree(medium_warehouse)
    rng = substream(4, "t")
    t = medium_warehouse.table(FOLLOWER)
    for _ in range(40):
        ps, path = sample_follower(tree, medium_warehouse, rng, 0.7)
        backpropagate(path, 0.0)
        seen = set()
        stack = list(t.children_infosets[0])
        while stack:
            iid = stack.pop()
            seen.add(iid)
            stack.extend(t.children_infosets[t.action_seq[(iid, ps.action(iid))]])
        assert seen == set(ps.as_dict())


# -- feasibility pass ---------------------------------------------------------


def flip_game():
    """Column c1 needs commitment: it is only a BR under enough r1 mass."""
    ul = np.array([[1.0, 0.0], [0.0, 2.0]])
    uf = np.array([[1.0, 0.0], [0.0, 2.0]])
    return helpers.bimatrix_game(ul, uf)


def target_column(game, j):
    return PureStrategy.from_mapping(FOLLOWER, {"F0": j})


def test_accepted_feasibility_step_strictly_raises_margin():
    game = flip_game()
    target = target_column(game, 1)
    plan = behavior_to_realization(
        game, BehaviorStrategy(LEADER, {"L0": np.array([0.99, 0.01])})
    )
    rng = substream(5, "t")
    state = _assess(game, plan, target, 0.0, "linear")
    assert state.margin < 0
    accepted = 0
    for _ in range(200):
        new_plan, new_state, ok = feasibility_pass(
            game, plan, target, 0.0, "linear", 0.05, rng, state
        )
        if ok:
            assert new_state.margin > state.margin
            accepted += 1
        else:
            assert new_plan is plan
        plan, state = new_plan, new_state
    assert accepted > 0


def test_feasibility_reaches_inducible_margin():
    game = flip_game()
    target = target_column(game, 1)
    # the oracle agrees the strategy is inducible at all
    assert strategy_lp_optimum(game, target, 0.0).status == "optimal"
    plan = behavior_to_realization(
        game, BehaviorStrategy(LEADER, {"L0": np.array([0.95, 0.05])})
    )
    rng = substream(6, "t")
    state = _assess(game, plan, target, 0.0, "linear")
    steps = 0
    while state.margin < 0 and steps < 10_000:
        plan, state, _ = feasibility_pass(
            game, plan, target, 0.0, "linear", 0.05, rng, state
        )
        steps += 1
    assert state.margin >= 0, f"margin still {state.margin} after {steps} steps"
    assert steps < 10_000


def test_margin_zero_for_rational_br(two_stage):
    plan = uniform_plan(two_stage)
    br, _, _ = anchoring.distorted_best_response(two_stage, plan, 0.0, "linear")
    state = _assess(two_stage, plan, br, 0.0, "linear")
    assert state.margin >= -1e-9


# -- positive pass -------------------------------------------------------------


def test_rejected_positive_step_leaves_plan_untouched():
    game = flip_game()
    target = target_column(game, 0)
    plan = uniform_plan(game)
    rng = substream(7, "t")
    state = _assess(game, plan, target, 0.0, "linear")
    before = plan.probs.copy()
    for _ in range(50):
        new_plan, new_state, ok = positive_pass(
            game, plan, target, 0.0, "linear", 0.2, rng, state
        )
        if ok:
            assert new_state.target_ul > state.target_ul
            plan, state = new_plan, new_state
            before = plan.probs.copy()
        else:
            assert new_plan is plan
            assert np.array_equal(plan.probs, before)


def test_positive_climb_approaches_lp_optimum():
    game = flip_game()
    alpha = 0.0
    target = target_column(game, 1)
    want = strategy_lp_optimum(game, target, alpha)
    assert want.status == "optimal"
    rng = substream(8, "t")
    plan = uniform_plan(game)
    state = _assess(game, plan, target, alpha, "linear")
    for _ in range(10_000):
        if state.margin >= 0:
            break
        plan, state, _ = feasibility_pass(
            game, plan, target, alpha, "linear", 0.05, rng, state
        )
    pull = climb_target(game, target)
    step = 0.3
    for _ in range(3000):
        plan, state, ok = positive_pass(
            game, plan, target, alpha, "linear", step, rng, state, pull
        )
        if not ok:
            step = max(step * 0.999, 1e-3)
    assert state.target_ul >= want.objective - 0.05


def test_climb_target_is_leader_best_reply(two_stage, rng):
    for ps in reduced_strategies(two_stage, FOLLOWER):
        plan = climb_target(two_stage, ps)
        got, _ = expected_utilities(
            two_stage, plan, pure_to_realization(two_stage, ps)
        )
        best = max(
            expected_utilities(
                two_stage,
                pure_to_realization(two_stage, lead),
                pure_to_realization(two_stage, ps),
            )[0]
            for lead in reduced_strategies(two_stage, LEADER)
        )
        assert got == pytest.approx(best, abs=1e-12)


# -- full runs ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        O2uctConfig(max_positive=0)
    with pytest.raises(ValueError):
        O2uctConfig(eps=0.0)
    with pytest.raises(ValueError):
        O2uctConfig(step_decay=0.0)
    with pytest.raises(ValueError):
        O2uctConfig(alpha=-0.2)
    with pytest.raises(ValueError):
        O2uctConfig(at_mode="wrong")


def fast_cfg(**kw):
    base = dict(max_positive=400, eps_window=120, seed=0)
    base.update(kw)
    return O2uctConfig(**base)


def test_single_follower_strategy_reduces_to_climbing():
    game = helpers.leader_chain_game(3, 3)
    want = solve_bnb(game, 0.0).leader_utility
    res = run(game, fast_cfg())
    assert res.leader_utility >= want - 0.05
    assert res.leader_utility <= want + 1e-6
    assert res.follower_strategy.choices == ()


def test_run_seed_determinism(small_warehouse):
    cfg = fast_cfg(alpha=0.3, seed=9)
    a = run(small_warehouse, cfg)
    b = run(small_warehouse, cfg)
    assert a.leader_utility == b.leader_utility
    assert np.array_equal(a.leader_plan.probs, b.leader_plan.probs)
    assert a.stats["samples"] == b.stats["samples"]
    assert a.stats["stop"] == b.stats["stop"]


def test_run_never_beats_exact_and_reevaluates(small_warehouse):
    alpha = 0.3
    opt = solve_multilp(small_warehouse, alpha).leader_utility
    res = run(small_warehouse, fast_cfg(alpha=alpha, seed=1))
    assert res.leader_utility <= opt + 1e-6
    _, perceived, actual = anchoring.distorted_best_response(
        small_warehouse, res.leader_plan, alpha, "linear"
    )
    assert res.leader_utility == pytest.approx(actual, abs=1e-9)
    assert res.follower_utility == pytest.approx(perceived, abs=1e-9)


def test_run_quality_on_small_game(small_warehouse):
    alpha = 0.3
    opt = solve_multilp(small_warehouse, alpha).leader_utility
    res = run(small_warehouse, O2uctConfig(alpha=alpha, seed=3))
    assert res.leader_utility >= opt - 0.05


def test_noninducible_strategy_never_returned():
    # column c1 is strictly dominated in perceived utility for any weights
    ul = np.array([[0.0, 5.0], [0.0, 5.0]])
    uf = np.array([[1.0, 0.0], [2.0, 1.0]])
    game = helpers.bimatrix_game(ul, uf)
    bad = target_column(game, 1)
    assert strategy_lp_optimum(game, bad, 0.0).status == "infeasible"
    for seed in range(4):
        res = run(game, fast_cfg(seed=seed))
        assert res.follower_strategy.action("F0") == 0


def test_stop_reasons_are_reported(small_warehouse):
    res = run(small_warehouse, fast_cfg(alpha=0.3, seed=2))
    assert res.stats["stop"] in ("positive-pass-cap", "stalled", "infeasible-strategy")
    assert res.stats["samples"] >= 1
    assert res.stats["positive_passes"] <= 400

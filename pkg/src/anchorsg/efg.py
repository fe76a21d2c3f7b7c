"""Two-player extensive-form games in sequence form.

Games are finite trees without chance nodes. Player "leader" commits to a
mixed/behavior strategy, player "follower" responds. Imperfect information
is modelled with information sets; both players have perfect recall.

A sequence is the ordered list of (infoset, action) pairs one player has
played on the path to a node. Realization plans assign probabilities to
sequences; they are the linear representation used by every solver here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

LEADER = "leader"
FOLLOWER = "follower"
PLAYERS = (LEADER, FOLLOWER)

# comparison tolerance for probabilities / utility ties
TOL = 1e-9


class GameError(ValueError):
    """Base class for malformed game descriptions."""


class CycleDetected(GameError):
    """Node graph is not a tree rooted at the declared root."""


class InfosetPlayerMismatch(GameError):
    """Two nodes in one information set belong to different players."""


class InfosetActionMismatch(GameError):
    """Two nodes in one information set disagree on available actions."""


class PerfectRecallViolation(GameError):
    """Nodes in one information set have different own-move histories."""


class EmptySequence(GameError):
    """init() of the empty sequence is undefined."""


@dataclass(frozen=True)
class Sequence:
    """One player's own (infoset id, action index) history, root to node."""

    player: str
    moves: tuple[tuple[str, int], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.moves

    def extended(self, infoset: str, action: int) -> "Sequence":
        return Sequence(self.player, self.moves + ((infoset, action),))

    def __repr__(self) -> str:  # compact, used in error messages
        body = ",".join(f"{i}:{a}" for i, a in self.moves) or "()"
        return f"Seq[{self.player}:{body}]"


def init(sigma: Sequence) -> Sequence:
    """Drop the final move of a sequence. Undefined for the empty one."""
    if sigma.is_empty:
        raise EmptySequence("init() of the empty sequence is undefined")
    return Sequence(sigma.player, sigma.moves[:-1])


@dataclass(frozen=True)
class InfoSet:
    id: str
    player: str
    actions: tuple[str, ...]
    nodes: tuple[int, ...]
    own_seq: int  # sequence id of the player's history entering this set
    depth: int  # own moves made before acting here, plus one


@dataclass
class SeqTable:
    """Per-player sequence index. Id 0 is always the empty sequence.

    Ids are created in depth-first tree order, so parent[s] < s for every
    non-empty sequence; loops that fill plans in id order see parents first.
    """

    player: str
    seqs: list[Sequence]
    ids: dict[Sequence, int]
    parent: np.ndarray  # parent[0] = -1
    last_infoset: list  # infoset id of the final move, None for id 0
    last_action: np.ndarray
    m_last: np.ndarray  # action count of the final move's infoset, 1 for id 0
    infoset_seq: dict[str, int]  # infoset id -> own sequence id
    action_seq: dict[tuple[str, int], int]  # (infoset, action) -> sequence id
    children_infosets: list[list[str]]  # seq id -> infosets whose own seq is it

    def __len__(self) -> int:
        return len(self.seqs)


@dataclass(frozen=True)
class PureStrategy:
    """A reduced pure strategy: actions only at own-reachable infosets."""

    player: str
    choices: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "_map", dict(self.choices))

    @classmethod
    def from_mapping(cls, player: str, mapping: Mapping[str, int]) -> "PureStrategy":
        return cls(player, tuple(sorted(mapping.items())))

    def action(self, infoset: str) -> int:
        return self._map[infoset]

    def get(self, infoset: str, default=None):
        return self._map.get(infoset, default)

    def as_dict(self) -> dict[str, int]:
        return dict(self._map)


@dataclass
class BehaviorStrategy:
    """Per-infoset action distributions."""

    player: str
    probs: dict[str, np.ndarray]


@dataclass
class MixedStrategy:
    """Distribution over reduced pure strategies."""

    player: str
    entries: tuple[tuple[PureStrategy, float], ...]


@dataclass
class RealizationPlan:
    """Probability of realizing each own sequence, aligned to the SeqTable."""

    player: str
    probs: np.ndarray

    def copy(self) -> "RealizationPlan":
        return RealizationPlan(self.player, self.probs.copy())

    def as_mapping(self, game: "Game") -> dict[Sequence, float]:
        table = game.table(self.player)
        return {table.seqs[i]: float(p) for i, p in enumerate(self.probs)}


class Game:
    """Validated game tree plus derived sequence-form tables."""

    def __init__(self, node_specs: list[dict], root_id: str):
        self._build(node_specs, root_id)

    # -- construction ---------------------------------------------------

    def _build(self, node_specs: list[dict], root_id: str) -> None:
        ids = [ns["id"] for ns in node_specs]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise GameError(f"duplicate node ids: {dup[:5]}")
        index = {ns["id"]: k for k, ns in enumerate(node_specs)}
        if root_id not in index:
            raise GameError(f"declared root {root_id!r} does not exist")

        n = len(node_specs)
        self.node_ids = ids
        self.parent = np.full(n, -1, dtype=np.int64)
        self.players: list = [None] * n
        self.node_infoset: list = [None] * n
        self.actions: list = [()] * n
        self.payoffs: list = [None] * n
        children: list[dict[int, int]] = [dict() for _ in range(n)]

        for k, ns in enumerate(node_specs):
            if ns.get("payoffs") is not None:
                po = ns["payoffs"]
                if len(po) != 2:
                    raise GameError(f"node {ns['id']}: payoffs must be a pair")
                self.payoffs[k] = (float(po[0]), float(po[1]))
            else:
                if ns.get("player") not in PLAYERS:
                    raise GameError(
                        f"node {ns['id']}: player must be one of {PLAYERS}"
                    )
                if not ns.get("actions"):
                    raise GameError(f"node {ns['id']}: decision node without actions")
                if ns.get("infoset") in (None, ""):
                    raise GameError(f"node {ns['id']}: decision node without infoset")
                self.players[k] = ns["player"]
                self.node_infoset[k] = str(ns["infoset"])
                self.actions[k] = tuple(str(a) for a in ns["actions"])
                if len(set(self.actions[k])) != len(self.actions[k]):
                    raise GameError(f"node {ns['id']}: duplicate action labels")

        self.root = index[root_id]
        for k, ns in enumerate(node_specs):
            par = ns.get("parent")
            act = ns.get("incoming_action")
            if par is None:
                if k != self.root:
                    raise GameError(
                        f"node {ns['id']} has no parent but is not the root"
                    )
                if act is not None:
                    raise GameError("root must not declare an incoming action")
                continue
            if par not in index:
                raise GameError(f"node {ns['id']}: unknown parent {par!r}")
            p = index[par]
            if self.payoffs[p] is not None:
                raise GameError(f"node {ns['id']}: parent {par!r} is a leaf")
            if act not in self.actions[p]:
                raise GameError(
                    f"node {ns['id']}: action {act!r} not offered by parent {par!r}"
                )
            ai = self.actions[p].index(act)
            if ai in children[p]:
                raise GameError(f"node {par!r}: action {act!r} has two children")
            self.parent[k] = p
            children[p][ai] = k

        # every action of a decision node must lead somewhere
        for k in range(n):
            if self.payoffs[k] is None and len(children[k]) != len(self.actions[k]):
                missing = [
                    a
                    for i, a in enumerate(self.actions[k])
                    if i not in children[k]
                ]
                raise GameError(
                    f"node {self.node_ids[k]}: actions without children {missing}"
                )
        self.children = [
            [kids[i] for i in range(len(self.actions[k]))]
            for k, kids in enumerate(children)
        ]

        # reachability doubles as the tree/cycle check: n nodes, each non-root
        # with one parent, all reachable from the root => no cycles
        seen = np.zeros(n, dtype=bool)
        stack = [self.root]
        order = []
        while stack:
            k = stack.pop()
            if seen[k]:
                raise CycleDetected(f"node {self.node_ids[k]} reached twice")
            seen[k] = True
            order.append(k)
            stack.extend(reversed(self.children[k]))
        if not seen.all():
            lost = self.node_ids[int(np.flatnonzero(~seen)[0])]
            raise CycleDetected(f"node {lost} is not reachable from the root")

        self._build_infosets()
        self._build_sequences()

    def _build_infosets(self) -> None:
        groups: dict[str, list[int]] = {}
        for k in range(len(self.node_ids)):
            if self.payoffs[k] is None:
                groups.setdefault(self.node_infoset[k], []).append(k)
        self._infoset_nodes = groups
        for iid, members in groups.items():
            players = {self.players[k] for k in members}
            if len(players) > 1:
                raise InfosetPlayerMismatch(
                    f"infoset {iid}: players {sorted(players)} mixed"
                )
            acts = {self.actions[k] for k in members}
            if len(acts) > 1:
                raise InfosetActionMismatch(
                    f"infoset {iid}: action lists differ across nodes"
                )

    def _build_sequences(self) -> None:
        n = len(self.node_ids)
        tables: dict[str, SeqTable] = {}
        for p in PLAYERS:
            empty = Sequence(p)
            tables[p] = SeqTable(
                player=p,
                seqs=[empty],
                ids={empty: 0},
                parent=np.array([-1]),
                last_infoset=[None],
                last_action=np.array([-1]),
                m_last=np.array([1]),
                infoset_seq={},
                action_seq={},
                children_infosets=[[]],
            )
        parents_tmp: dict[str, list[int]] = {p: [-1] for p in PLAYERS}
        last_inf: dict[str, list] = {p: [None] for p in PLAYERS}
        last_act: dict[str, list[int]] = {p: [-1] for p in PLAYERS}

        node_seq = np.zeros((n, 2), dtype=np.int64)
        infosets: dict[str, InfoSet] = {}
        order_by_player: dict[str, list[str]] = {p: [] for p in PLAYERS}

        stack = [self.root]
        while stack:
            k = stack.pop()
            if self.payoffs[k] is not None:
                continue
            p = self.players[k]
            pi = PLAYERS.index(p)
            t = tables[p]
            iid = self.node_infoset[k]
            own = int(node_seq[k][pi])
            if iid in t.infoset_seq:
                if t.infoset_seq[iid] != own:
                    raise PerfectRecallViolation(
                        f"infoset {iid}: own histories differ "
                        f"({t.seqs[t.infoset_seq[iid]]} vs {t.seqs[own]})"
                    )
            else:
                t.infoset_seq[iid] = own
                t.children_infosets[own].append(iid)
                order_by_player[p].append(iid)
            for ai in range(len(self.actions[k])):
                child = self.children[k][ai]
                ext_key = (iid, ai)
                sid = t.action_seq.get(ext_key)
                if sid is None:
                    seq = t.seqs[own].extended(iid, ai)
                    sid = len(t.seqs)
                    t.seqs.append(seq)
                    t.ids[seq] = sid
                    t.action_seq[ext_key] = sid
                    t.children_infosets.append([])
                    parents_tmp[p].append(own)
                    last_inf[p].append(iid)
                    last_act[p].append(ai)
                node_seq[child][pi] = sid
                node_seq[child][1 - pi] = node_seq[k][1 - pi]
            # push children in reverse so they pop in action order
            for child in reversed(self.children[k]):
                stack.append(child)

        for p in PLAYERS:
            t = tables[p]
            t.parent = np.array(parents_tmp[p], dtype=np.int64)
            t.last_infoset = last_inf[p]
            t.last_action = np.array(last_act[p], dtype=np.int64)
            m = [1] * len(t.seqs)
            for sid in range(1, len(t.seqs)):
                members = self._infoset_nodes[last_inf[p][sid]]
                m[sid] = len(self.actions[members[0]])
            t.m_last = np.array(m, dtype=np.int64)

        for p in PLAYERS:
            t = tables[p]
            for iid in order_by_player[p]:
                members = tuple(self._infoset_nodes[iid])
                own = t.infoset_seq[iid]
                infosets[iid] = InfoSet(
                    id=iid,
                    player=p,
                    actions=self.actions[members[0]],
                    nodes=members,
                    own_seq=own,
                    depth=len(t.seqs[own].moves) + 1,
                )

        self.tables = tables
        self.node_seq = node_seq
        self.infosets = infosets
        self.infosets_of = {
            p: [infosets[i] for i in order_by_player[p]] for p in PLAYERS
        }

        leaf_idx = [k for k in range(n) if self.payoffs[k] is not None]
        self.leaf_nodes = np.array(leaf_idx, dtype=np.int64)
        self.leaf_lseq = node_seq[leaf_idx, 0]
        self.leaf_fseq = node_seq[leaf_idx, 1]
        self.leaf_ul = np.array([self.payoffs[k][0] for k in leaf_idx])
        self.leaf_uf = np.array([self.payoffs[k][1] for k in leaf_idx])

        pair_map: dict[tuple[int, int], int] = {}
        for z, (ls, fs) in enumerate(zip(self.leaf_lseq, self.leaf_fseq)):
            key = (int(ls), int(fs))
            if key in pair_map:
                raise GameError(
                    "two leaves share the same sequence pair; payoffs over "
                    "sequence pairs would be ambiguous"
                )
            pair_map[key] = z
        self.pair_leaf = pair_map

    # -- simple accessors ------------------------------------------------

    def table(self, player: str) -> SeqTable:
        return self.tables[player]

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def num_leaves(self) -> int:
        return len(self.leaf_nodes)

    def counts(self) -> dict[str, int]:
        return {
            "nodes": self.num_nodes,
            "leaves": self.num_leaves,
            "leader_infosets": len(self.infosets_of[LEADER]),
            "follower_infosets": len(self.infosets_of[FOLLOWER]),
            "leader_sequences": len(self.tables[LEADER]),
            "follower_sequences": len(self.tables[FOLLOWER]),
        }

    def to_spec(self) -> dict:
        nodes = []
        for k, nid in enumerate(self.node_ids):
            par = self.parent[k]
            ns: dict = {"id": nid}
            if par < 0:
                ns["parent"] = None
                ns["incoming_action"] = None
            else:
                ai = self.children[par].index(k)
                ns["parent"] = self.node_ids[par]
                ns["incoming_action"] = self.actions[par][ai]
            if self.payoffs[k] is not None:
                ns["payoffs"] = list(self.payoffs[k])
            else:
                ns["player"] = self.players[k]
                ns["infoset"] = self.node_infoset[k]
                ns["actions"] = list(self.actions[k])
            nodes.append(ns)
        return {
            "players": list(PLAYERS),
            "root": self.node_ids[self.root],
            "nodes": nodes,
        }


_NODE_KEYS = {"id", "parent", "incoming_action", "player", "infoset", "actions", "payoffs"}


def build_game(spec: dict) -> Game:
    """Build and validate a game from a parsed description.

    Unknown fields anywhere are rejected so silent typos cannot change the
    game being solved.
    """
    extra = set(spec) - {"players", "root", "nodes"}
    if extra:
        raise GameError(f"unknown top-level fields: {sorted(extra)}")
    if list(spec.get("players", [])) != list(PLAYERS):
        raise GameError(f'players must be {list(PLAYERS)}')
    nodes = spec.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise GameError("nodes must be a non-empty list")
    for ns in nodes:
        bad = set(ns) - _NODE_KEYS
        if bad:
            raise GameError(f"node {ns.get('id')!r}: unknown fields {sorted(bad)}")
        if "id" not in ns:
            raise GameError("every node needs an id")
        if ("payoffs" in ns) == ("actions" in ns):
            raise GameError(
                f"node {ns['id']!r}: exactly one of payoffs/actions required"
            )
    return Game(nodes, spec.get("root"))


def load_game(path: str) -> Game:
    with open(path) as fh:
        return build_game(json.load(fh))


# -- sequence-level operations -----------------------------------------


def sequences(game: Game, player: str) -> list[Sequence]:
    return list(game.table(player).seqs)


def g(game: Game, player: str, sigma_l: Sequence, sigma_f: Sequence) -> float:
    """Leaf payoff for a jointly-terminal sequence pair, 0 if incompatible."""
    tl, tf = game.table(LEADER), game.table(FOLLOWER)
    try:
        key = (tl.ids[sigma_l], tf.ids[sigma_f])
    except KeyError as exc:
        raise GameError(f"unknown sequence {exc.args[0]!r}") from None
    z = game.pair_leaf.get(key)
    if z is None:
        return 0.0
    return float(game.leaf_ul[z] if player == LEADER else game.leaf_uf[z])


def uniform_behavior(game: Game, player: str) -> BehaviorStrategy:
    probs = {
        iset.id: np.full(len(iset.actions), 1.0 / len(iset.actions))
        for iset in game.infosets_of[player]
    }
    return BehaviorStrategy(player, probs)


def behavior_to_realization(game: Game, b: BehaviorStrategy) -> RealizationPlan:
    t = game.table(b.player)
    r = np.zeros(len(t))
    r[0] = 1.0
    for sid in range(1, len(t)):
        row = b.probs[t.last_infoset[sid]]
        r[sid] = r[t.parent[sid]] * row[t.last_action[sid]]
    return RealizationPlan(b.player, r)


def realization_to_behavior(game: Game, r: RealizationPlan) -> BehaviorStrategy:
    """Behavior strategy with matching realization; uniform where flow is 0."""
    t = game.table(r.player)
    probs: dict[str, np.ndarray] = {}
    for iset in game.infosets_of[r.player]:
        inflow = r.probs[iset.own_seq]
        row = np.array(
            [r.probs[t.action_seq[(iset.id, a)]] for a in range(len(iset.actions))]
        )
        if inflow > 1e-12:
            row = np.clip(row, 0.0, None) / inflow
            s = row.sum()
            row = row / s if s > 0 else np.full_like(row, 1.0 / len(row))
        else:
            row = np.full(len(iset.actions), 1.0 / len(iset.actions))
        probs[iset.id] = row
    return BehaviorStrategy(r.player, probs)


def strategy_sequence_ids(game: Game, ps: PureStrategy) -> list[int]:
    """Ids of the sequences a reduced pure strategy realizes (incl. empty)."""
    t = game.table(ps.player)
    out = [0]
    stack = list(t.children_infosets[0])
    while stack:
        iid = stack.pop()
        a = ps.get(iid)
        if a is None:
            raise GameError(f"strategy missing a choice at reachable infoset {iid}")
        sid = t.action_seq[(iid, a)]
        out.append(sid)
        stack.extend(t.children_infosets[sid])
    return out


def pure_to_realization(game: Game, ps: PureStrategy) -> RealizationPlan:
    r = np.zeros(len(game.table(ps.player)))
    r[strategy_sequence_ids(game, ps)] = 1.0
    return RealizationPlan(ps.player, r)


def mixed_to_realization(game: Game, m: MixedStrategy) -> RealizationPlan:
    r = np.zeros(len(game.table(m.player)))
    for ps, p in m.entries:
        r[strategy_sequence_ids(game, ps)] += p
    return RealizationPlan(m.player, r)


def mixed_to_behavior(game: Game, m: MixedStrategy) -> BehaviorStrategy:
    return realization_to_behavior(game, mixed_to_realization(game, m))


def strategy_leaf_mask(game: Game, ps: PureStrategy) -> np.ndarray:
    """Boolean mask over leaves consistent with a follower/leader strategy."""
    pi = PLAYERS.index(ps.player)
    consistent = np.zeros(len(game.table(ps.player)), dtype=bool)
    consistent[strategy_sequence_ids(game, ps)] = True
    leaf_seq = game.leaf_lseq if pi == 0 else game.leaf_fseq
    return consistent[leaf_seq]


def validate_plan(game: Game, r: RealizationPlan, tol: float = TOL) -> None:
    t = game.table(r.player)
    if abs(r.probs[0] - 1.0) > tol:
        raise GameError("empty sequence must have realization 1")
    if (r.probs < -tol).any() or (r.probs > 1 + tol).any():
        raise GameError("realization probabilities must lie in [0, 1]")
    for iset in game.infosets_of[r.player]:
        inflow = r.probs[iset.own_seq]
        if inflow <= tol:
            continue
        out = sum(
            r.probs[t.action_seq[(iset.id, a)]] for a in range(len(iset.actions))
        )
        if abs(out - inflow) > max(tol, 1e-7 * inflow):
            raise GameError(
                f"flow not conserved at infoset {iset.id}: {inflow} vs {out}"
            )


def expected_utilities(
    game: Game, leader_plan: RealizationPlan, follower_plan: RealizationPlan
) -> tuple[float, float]:
    w = leader_plan.probs[game.leaf_lseq] * follower_plan.probs[game.leaf_fseq]
    return float(w @ game.leaf_ul), float(w @ game.leaf_uf)


# -- follower best response --------------------------------------------


@dataclass
class _ResponseStruct:
    order: list[int]  # infoset positions, each subtree before its owner
    act_seqs: list[list[int]]  # action sequence ids per infoset position
    own_seq: list[int]
    pos: dict[str, int]


def _response_struct(game: Game) -> _ResponseStruct:
    got = getattr(game, "_response_cache", None)
    if got is not None:
        return got
    t = game.table(FOLLOWER)
    isets = game.infosets_of[FOLLOWER]
    pos = {s.id: k for k, s in enumerate(isets)}
    act = [[t.action_seq[(s.id, a)] for a in range(len(s.actions))] for s in isets]

    order: list[int] = []

    def visit(sid: int) -> None:
        for iid in t.children_infosets[sid]:
            k = pos[iid]
            for child in act[k]:
                visit(child)
            order.append(k)

    visit(0)
    struct = _ResponseStruct(order, act, [s.own_seq for s in isets], pos)
    game._response_cache = struct
    return struct


def response_values(
    game: Game, perceived_leaf: np.ndarray, actual_leaf: np.ndarray
) -> tuple[list[int], float, float]:
    """Values-only best response against fixed per-leaf weights.

    Returns (action per infoset, root perceived value, root actual value)
    with the action list indexed like game.infosets_of[FOLLOWER]. This is
    the hot path for the samplers, which score thousands of plans per
    second and only rarely need the strategy object itself.
    """
    struct = _response_struct(game)
    nf = len(game.table(FOLLOWER))
    vf = np.bincount(game.leaf_fseq, weights=perceived_leaf, minlength=nf).tolist()
    vl = np.bincount(game.leaf_fseq, weights=actual_leaf, minlength=nf).tolist()
    choice = [0] * len(struct.act_seqs)
    for k in struct.order:
        sids = struct.act_seqs[k]
        pick = 0
        bf = vf[sids[0]]
        bl = vl[sids[0]]
        for j in range(1, len(sids)):
            f = vf[sids[j]]
            if f > bf + TOL or (f > bf - TOL and vl[sids[j]] > bl + TOL):
                pick, bf, bl = j, f, vl[sids[j]]
        choice[k] = pick
        own = struct.own_seq[k]
        vf[own] += bf
        vl[own] += bl
    return choice, vf[0], vl[0]


def response_dp(
    game: Game, perceived_leaf: np.ndarray, actual_leaf: np.ndarray
) -> tuple[PureStrategy, float, float]:
    """Best follower strategy against fixed per-leaf weights.

    perceived_leaf drives the follower's choice (their possibly distorted
    view); actual_leaf is what the leader banks. Ties in the perceived value
    break toward the higher actual value, then the lower action index, the
    commitment convention used throughout.
    """
    struct = _response_struct(game)
    choice, total_f, total_l = response_values(game, perceived_leaf, actual_leaf)
    t = game.table(FOLLOWER)
    choices: dict[str, int] = {}
    queue = list(t.children_infosets[0])
    while queue:
        iid = queue.pop()
        a = choice[struct.pos[iid]]
        choices[iid] = a
        queue.extend(t.children_infosets[t.action_seq[(iid, a)]])
    return PureStrategy.from_mapping(FOLLOWER, choices), total_f, total_l


def best_response(
    game: Game, leader_plan: RealizationPlan
) -> tuple[PureStrategy, float, float]:
    """Follower best response to a leader realization plan.

    Returns (strategy, follower value, leader value under that response).
    """
    w = leader_plan.probs[game.leaf_lseq]
    return response_dp(game, w * game.leaf_uf, w * game.leaf_ul)


# -- reduced pure strategy enumeration ----------------------------------


def count_reduced_strategies(game: Game, player: str) -> int:
    t = game.table(player)
    memo: dict[str, int] = {}

    def count_iset(iid: str) -> int:
        if iid in memo:
            return memo[iid]
        iset = game.infosets[iid]
        total = 0
        for a in range(len(iset.actions)):
            prod = 1
            for cid in t.children_infosets[t.action_seq[(iid, a)]]:
                prod *= count_iset(cid)
            total += prod
        memo[iid] = total
        return total

    total = 1
    for iid in t.children_infosets[0]:
        total *= count_iset(iid)
    return total


def reduced_strategies(
    game: Game, player: str, cap: int | None = None
) -> Iterator[PureStrategy]:
    """Yield all reduced pure strategies in depth-first infoset order."""
    if cap is not None:
        n = count_reduced_strategies(game, player)
        if n > cap:
            from .lp import EnumerationCapExceeded

            raise EnumerationCapExceeded(
                f"{n} reduced pure strategies exceed the cap of {cap}"
            )
    t = game.table(player)

    def expand(pending: tuple[str, ...]) -> Iterator[dict[str, int]]:
        if not pending:
            yield {}
            return
        iid, rest = pending[0], pending[1:]
        iset = game.infosets[iid]
        for a in range(len(iset.actions)):
            opened = tuple(t.children_infosets[t.action_seq[(iid, a)]])
            for sub in expand(opened + rest):
                out = {iid: a}
                out.update(sub)
                yield out

    for mapping in expand(tuple(t.children_infosets[0])):
        yield PureStrategy.from_mapping(player, mapping)


def random_reduced_strategy(
    game: Game, player: str, rng: np.random.Generator
) -> PureStrategy:
    t = game.table(player)
    choices: dict[str, int] = {}
    stack = list(t.children_infosets[0])
    while stack:
        iid = stack.pop()
        iset = game.infosets[iid]
        a = int(rng.integers(len(iset.actions)))
        choices[iid] = a
        stack.extend(t.children_infosets[t.action_seq[(iid, a)]])
    return PureStrategy.from_mapping(player, choices)

"""Flattened, enumerated game trees.

Every game in this package is small enough to enumerate, so exact evaluation,
coverage and sequence-form bookkeeping all run on a breadth-first array
encoding of the full tree. Children of a node are contiguous and whole depth
levels are contiguous, which lets reach probabilities and backward induction
run one numpy operation per level.

Decisions are addressed by *sequence index* (``sa``): a flat index over one
player's (infostate, action) pairs, ``offset[I] + a``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .exceptions import ValidationError
from .games import CHANCE, TERMINAL, Game


@dataclass
class PlayerIndex:
    """Infostates of one player, in first-visit (breadth-first) order."""

    keys: list
    index: dict
    n_actions: np.ndarray
    offset: np.ndarray
    parent_sa: np.ndarray  # own previous decision, -1 at the first decision
    depth: np.ndarray  # tree depth of the infostate's histories
    action_names: list

    @property
    def n_states(self):
        return len(self.keys)

    @property
    def n_sa(self):
        return int(self.offset[-1] + self.n_actions[-1]) if self.keys else 0

    @cached_property
    def sa_state(self):
        return np.repeat(np.arange(self.n_states), self.n_actions)

    def sa(self, key, action):
        return int(self.offset[self.index[key]] + action)

    def sa_pairs(self):
        """(key, action) for every sequence index, in order."""
        return [(k, a) for k, n in zip(self.keys, self.n_actions) for a in range(n)]

    def own_sequence(self, key):
        """The (key, action) pairs this player took before reaching ``key``."""
        seq = []
        sa = self.parent_sa[self.index[key]]
        state_of = self.sa_state
        while sa >= 0:
            s = state_of[sa]
            seq.append((self.keys[s], int(sa - self.offset[s])))
            sa = self.parent_sa[s]
        return seq[::-1]


class GameTree:
    """Array encoding of a full game tree (see module docstring)."""

    def __init__(self, game: Game):
        self.game = game
        player, parent, action, chance_prob = [], [], [], []
        infostate, sa, returns0, child_start, child_count, depth = [], [], [], [], [], []
        keys = ([], [])
        index = ({}, {})
        n_actions = ([], [])
        parent_sa = ([], [])
        own_depth = ([], [])
        names = ([], [])

        queue = deque([(game.initial_state(), -1, -1, 0.0, -1, (-1, -1), 0)])
        node = 0
        while queue:
            state, par, act, cprob, edge_sa, last_sa, d = queue.popleft()
            player.append(0)
            parent.append(par)
            action.append(act)
            chance_prob.append(cprob)
            sa.append(edge_sa)
            depth.append(d)
            if game.is_terminal(state):
                r = game.returns(state)
                if abs(r[0] + r[1]) > 1e-12:
                    raise ValidationError(f"{game.name}: non zero-sum terminal {state.history}")
                player[-1] = TERMINAL
                infostate.append(-1)
                returns0.append(r[0])
                child_start.append(0)
                child_count.append(0)
                node += 1
                continue
            p = game.current_player(state)
            player[-1] = p
            returns0.append(0.0)
            n_children = len(game.action_names(state))
            child_start.append(node + len(queue) + 1)
            child_count.append(n_children)
            if p == CHANCE:
                infostate.append(-1)
                for a, prob in game.chance_outcomes(state):
                    queue.append((game.apply(state, a), node, a, prob, -1, last_sa, d + 1))
            else:
                key = game.infostate_key(state, p)
                i = index[p].get(key)
                if i is None:
                    i = len(keys[p])
                    index[p][key] = i
                    keys[p].append(key)
                    n_actions[p].append(n_children)
                    parent_sa[p].append(last_sa[p])
                    own_depth[p].append(d)
                    names[p].append(game.action_names(state))
                elif n_actions[p][i] != n_children or parent_sa[p][i] != last_sa[p] or own_depth[p][i] != d:
                    raise ValidationError(
                        f"{game.name}: infostate {key!r} is inconsistent across histories "
                        "(action set, own history or depth differ)"
                    )
                infostate.append(i)
                # offsets are assigned after enumeration; store (player, state, action)
                for a in range(n_children):
                    new_last = list(last_sa)
                    new_last[p] = ("sa", i, a)
                    queue.append((game.apply(state, a), node, a, 0.0, ("sa", i, a), tuple(new_last), d + 1))
            node += 1

        self.players = []
        for p in (0, 1):
            na = np.asarray(n_actions[p], dtype=np.int64)
            off = np.zeros(len(na), dtype=np.int64)
            if len(na):
                off[1:] = np.cumsum(na)[:-1]
            self.players.append(
                PlayerIndex(
                    keys=keys[p],
                    index=index[p],
                    n_actions=na,
                    offset=off,
                    parent_sa=np.array([_resolve(x, off) for x in parent_sa[p]], dtype=np.int64),
                    depth=np.asarray(own_depth[p], dtype=np.int64),
                    action_names=names[p],
                )
            )

        self.player = np.asarray(player, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.action = np.asarray(action, dtype=np.int64)
        self.chance_prob = np.asarray(chance_prob, dtype=float)
        self.infostate = np.asarray(infostate, dtype=np.int64)
        self.returns0 = np.asarray(returns0, dtype=float)
        self.child_start = np.asarray(child_start, dtype=np.int64)
        self.child_count = np.asarray(child_count, dtype=np.int64)
        self.depth = np.asarray(depth, dtype=np.int64)
        parent_player = np.where(self.parent >= 0, self.player[np.maximum(self.parent, 0)], TERMINAL)
        self.sa = np.array(
            [
                _resolve(x, self.players[pp].offset) if pp in (0, 1) else -1
                for x, pp in zip(sa, parent_player)
            ],
            dtype=np.int64,
        )
        self.parent_player = parent_player
        self.terminals = np.flatnonzero(self.player == TERMINAL)
        bounds = np.flatnonzero(np.diff(self.depth)) + 1
        self.levels = np.split(np.arange(len(self.player)), bounds)

    @property
    def n_nodes(self):
        return len(self.player)

    def child(self, node, action):
        return int(self.child_start[node] + action)

    def node_key(self, node):
        p = self.player[node]
        return self.players[p].keys[self.infostate[node]]

    # -- reach ----------------------------------------------------------------

    def edge_probs(self, seq_probs, include=(True, True), chance=True):
        """Per-node probability of the edge leading into it.

        ``seq_probs[p]`` is player p's behavior as a flat array over sequence
        indices. Excluded contributors get probability one.
        """
        edge = np.ones(self.n_nodes)
        if chance:
            mask = self.parent_player == CHANCE
            edge[mask] = self.chance_prob[mask]
        for p in (0, 1):
            if include[p]:
                mask = self.parent_player == p
                edge[mask] = seq_probs[p][self.sa[mask]]
        return edge

    def reach(self, edge):
        """Product of edge probabilities from the root to every node."""
        reach = np.ones(self.n_nodes)
        for level in self.levels[1:]:
            reach[level] = reach[self.parent[level]] * edge[level]
        return reach

    def sequence_form(self, player, probs):
        """Realization-weighted action probabilities x(s) * pi(a|s) for one player."""
        idx = self.players[player]
        seq = np.empty(idx.n_sa)
        if not idx.keys:
            return seq
        state_of = idx.sa_state
        x_state = np.ones(idx.n_states)
        for d in np.unique(idx.depth):
            states = np.flatnonzero(idx.depth == d)
            par = idx.parent_sa[states]
            x_state[states] = np.where(par >= 0, seq[np.maximum(par, 0)], 1.0)
            sas = np.flatnonzero(np.isin(state_of, states))
            seq[sas] = x_state[state_of[sas]] * probs[sas]
        return seq

    def realization(self, player, probs):
        """x(s) for every infostate of ``player``."""
        idx = self.players[player]
        seq = self.sequence_form(player, probs)
        par = idx.parent_sa
        return np.where(par >= 0, seq[np.maximum(par, 0)], 1.0)


def _resolve(x, offset):
    if isinstance(x, tuple):
        return int(offset[x[1]] + x[2])
    return int(x)


@lru_cache(maxsize=16)
def get_tree(game: Game) -> GameTree:
    """Enumerate ``game`` once; trees are immutable and shared."""
    return GameTree(game)


def normalize_sequence(idx: PlayerIndex, seq):
    """Per-infostate normalization of sequence-form values; zero mass gives uniform."""
    if not idx.keys:
        return np.empty(0)
    state_of = idx.sa_state
    mass = np.add.reduceat(seq, idx.offset)
    uniform = 1.0 / idx.n_actions
    safe = np.where(mass > 0, mass, 1.0)
    return np.where(mass[state_of] > 0, seq / safe[state_of], uniform[state_of])


def segment_argmax(values, idx: PlayerIndex, tol=0.0):
    """First action per infostate within ``tol`` of the infostate maximum."""
    seg_max = np.maximum.reduceat(values, idx.offset)
    state_of = idx.sa_state
    ok = values >= seg_max[state_of] - tol
    pos = np.where(ok, np.arange(len(values)), len(values))
    return np.minimum.reduceat(pos, idx.offset) - idx.offset

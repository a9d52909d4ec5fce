"""Exact expected values, best responses, NashConv and fictitious play.

All computations are full-tree passes over :class:`~offfsp.tree.GameTree`.
Best responses aggregate counterfactual (chance x opponent) reach-weighted
action values per responder infostate and take the argmax bottom-up; ties go
to the lowest action id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .games import TERMINAL, Game
from .policy import BehaviorPolicy, profile_to_flat
from .tree import GameTree, get_tree, normalize_sequence, segment_argmax

BR_TOL = 1e-9


@dataclass
class BestResponseResult:
    policy: BehaviorPolicy
    value: float
    responder: int


@dataclass
class NashConvReport:
    total: float
    per_player_gain: tuple
    br_values: tuple = field(default=())
    profile_values: tuple = field(default=())


def _tree(game) -> GameTree:
    return game if isinstance(game, GameTree) else get_tree(game)


# -- flat-array kernels ----------------------------------------------------------


def expected_value_flat(tree, flats):
    edge = tree.edge_probs(flats)
    reach = tree.reach(edge)
    t = tree.terminals
    v0 = float(np.dot(reach[t], tree.returns0[t]))
    return np.array([v0, -v0])


def best_response_flat(tree, opp_probs, responder, tol=BR_TOL):
    """Pure best response as (action per responder infostate, value)."""
    opp = 1 - responder
    flats = [None, None]
    flats[opp] = opp_probs
    edge = tree.edge_probs(flats, include=(opp == 0, opp == 1))
    cf_reach = tree.reach(edge)
    idx = tree.players[responder]
    sign = 1.0 if responder == 0 else -1.0
    v = np.where(tree.player == TERMINAL, sign * tree.returns0, 0.0)
    q = np.zeros(idx.n_sa)
    best = np.zeros(idx.n_states, dtype=np.int64)
    for level in reversed(tree.levels[1:]):
        par = tree.parent[level]
        lo = par[0]  # parents of one level are a contiguous node range
        is_resp = tree.parent_player[level] == responder
        other = ~is_resp
        if other.any():
            acc = np.bincount(par[other] - lo, weights=edge[level[other]] * v[level[other]])
            v[lo : lo + len(acc)] += acc
        if not is_resp.any():
            continue
        ch = level[is_resp]
        chp = par[is_resp]
        q += np.bincount(tree.sa[ch], weights=cf_reach[chp] * v[ch], minlength=idx.n_sa)
        states = np.unique(tree.infostate[chp])
        best[states] = segment_argmax(q, idx, tol)[states]
        chosen = tree.action[ch] == best[tree.infostate[chp]]
        v[chp[chosen]] = v[ch[chosen]]
    return best, float(v[0])


def one_hot(idx, actions):
    flat = np.zeros(idx.n_sa)
    if idx.n_states:
        flat[idx.offset + actions] = 1.0
    return flat


def nash_conv_flat(tree, flats, tol=BR_TOL):
    values = expected_value_flat(tree, flats)
    br = [best_response_flat(tree, flats[1 - p], p, tol)[1] for p in (0, 1)]
    gains = tuple(float(br[p] - values[p]) for p in (0, 1))
    return NashConvReport(sum(gains), gains, tuple(br), tuple(float(x) for x in values))


# -- public API ----------------------------------------------------------------


def expected_value(game, profile):
    """Exact per-player expected payoff of ``profile`` (uniform fallback applies)."""
    tree = _tree(game)
    return expected_value_flat(tree, profile_to_flat(tree, profile))


def best_response(game, opponent: BehaviorPolicy, responder: int, tol=BR_TOL) -> BestResponseResult:
    tree = _tree(game)
    idx = tree.players[responder]
    best, value = best_response_flat(tree, opponent.to_flat(tree, 1 - responder), responder, tol)
    policy = BehaviorPolicy.from_flat(tree, responder, one_hot(idx, best))
    return BestResponseResult(policy, value, responder)


def nash_conv(game, profile, tol=BR_TOL) -> NashConvReport:
    """Sum over players of the best-response gain against ``profile``."""
    tree = _tree(game)
    return nash_conv_flat(tree, profile_to_flat(tree, profile), tol)


def fp_solve(game: Game, iterations: int, checkpoint_every: int = 1, tol=BR_TOL):
    """Fictitious play with exact best responses and the 1/k mixing schedule.

    Both players best-respond to the previous average simultaneously; the
    average is kept in sequence form so mixing is realization-equivalent.
    Returns ``[(k, profile), ...]`` at every ``checkpoint_every`` iterations
    and at the final one.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")
    tree = _tree(game)
    idxs = tree.players
    avg = [normalize_sequence(idx, np.zeros(idx.n_sa)) for idx in idxs]
    avg_seq = [np.zeros(idx.n_sa) for idx in idxs]
    out = []
    for k in range(1, iterations + 1):
        brs = [one_hot(idxs[p], best_response_flat(tree, avg[1 - p], p, tol)[0]) for p in (0, 1)]
        for p in (0, 1):
            avg_seq[p] = (k - 1) / k * avg_seq[p] + tree.sequence_form(p, brs[p]) / k
            avg[p] = normalize_sequence(idxs[p], avg_seq[p])
        if k % checkpoint_every == 0 or k == iterations:
            out.append((k, tuple(BehaviorPolicy.from_flat(tree, p, avg[p]) for p in (0, 1))))
    return out


def simulate_returns(game, profile, n_episodes, rng):
    """Player-0 returns of ``n_episodes`` sampled plays (vectorized over episodes)."""
    tree = _tree(game)
    flats = profile_to_flat(tree, profile)
    edge = tree.edge_probs(flats)
    node = np.zeros(n_episodes, dtype=np.int64)
    active = tree.player[node] != TERMINAL
    while active.any():
        cur = node[active]
        start, count = tree.child_start[cur], tree.child_count[cur]
        u = rng.random(len(cur))
        acc = np.zeros(len(cur))
        skip = np.zeros(len(cur), dtype=np.int64)
        for j in range(int(count.max()) - 1):
            acc += np.where(j < count, edge[np.minimum(start + j, tree.n_nodes - 1)], 0.0)
            skip += (j < count - 1) & (u >= acc)
        node[active] = start + skip
        active = tree.player[node] != TERMINAL
    return tree.returns0[node]

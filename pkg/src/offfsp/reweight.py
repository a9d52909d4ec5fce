"""Opponent importance weights over a player's dataset, and weighted resampling.

Changing the opponent from the empirical behavior policy to a target policy
only changes the opponent's own action probabilities along a trajectory;
chance and the learning player's own probabilities cancel. The weight of a
tuple is therefore the ratio of the opponent's realization probabilities of
its actions up to the tuple's anchor. Weights are used as resampling
probabilities, never as loss multipliers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dataset import PlayerDataset, project
from .exceptions import DegenerateDatasetError, OffFSPError
from .games import CHANCE
from .policy import BehaviorPolicy
from .tree import get_tree


class EstimatorConsistencyError(OffFSPError, RuntimeError):
    """An observed action has zero empirical probability."""


@dataclass
class WeightedPlayerDataset:
    """A :class:`PlayerDataset` with one resampling weight per tuple."""

    base: PlayerDataset
    weights: np.ndarray
    _alias: tuple = field(default=None, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.base):
            raise ValueError(f"{len(self.weights)} weights for {len(self.base)} tuples")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and non-negative")

    def __len__(self):
        return len(self.base)

    @property
    def owner(self):
        return self.base.owner

    @property
    def total(self):
        """Normalization Z = sum of weights."""
        return float(self.weights.sum())

    @property
    def probabilities(self):
        z = self.total
        if z <= 0:
            raise DegenerateDatasetError("all tuple weights are zero: target opponent is off the data's support")
        return self.weights / z

    def alias_table(self):
        if self._alias is None:
            self._alias = _kernels.build_alias(self.probabilities)
        return self._alias

    def to_csv(self, path):
        """Dump (trajectory index, tuple index, weight) rows for inspection."""
        a = self.base.arrays
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trajectory", "tuple", "weight"])
            for t, pos, wt in zip(a["traj"], a["pos"], self.weights):
                w.writerow([int(t), int(pos), repr(float(wt))])


def _projection(d, player):
    if isinstance(d, PlayerDataset):
        if d.owner != player:
            raise ValueError(f"projection belongs to player {d.owner}, not {player}")
        return d
    cache = d.__dict__.setdefault("_projections", {})
    if player not in cache:
        cache[player] = project(d, player)
    return cache[player]


def opponent_ratio(trajectory, tuple_index, target_opp: BehaviorPolicy, empirical_opp: BehaviorPolicy, owner, game=None):
    """Importance weight of the owner's ``tuple_index``-th tuple, event by event.

    Multiplies target / empirical probabilities over the opponent's decisions
    up to the tuple's anchor. Chance events contribute a factor of one.
    """
    opp = 1 - owner
    mine = trajectory.decisions(owner)
    if not 0 <= tuple_index < len(mine):
        raise IndexError(f"trajectory has {len(mine)} tuples for player {owner}")
    stop = len(trajectory.events) if tuple_index == len(mine) - 1 else mine[tuple_index + 1]
    tree = get_tree(game) if game is not None else None
    w = 1.0
    for e in trajectory.events[:stop]:
        if e.actor == CHANCE or e.actor != opp:
            continue
        n = None
        if tree is not None:
            n = int(tree.players[opp].n_actions[tree.players[opp].index[e.key]])
        b = empirical_opp.prob(e.key, e.action, n)
        if b <= 0:
            raise EstimatorConsistencyError(
                f"observed opponent action {e.action} at {e.key!r} has empirical probability 0"
            )
        w *= target_opp.prob(e.key, e.action, n) / b
    return w


def behavior_denominators(pd: PlayerDataset, empirical_flat):
    """Opponent empirical realization probability up to each tuple's anchor."""
    a = pd.arrays
    ptr, opp_sa = a["opp_ptr"], a["opp_sa"]
    probs = empirical_flat[opp_sa]
    if np.any(probs <= 0):
        raise EstimatorConsistencyError("an observed opponent action has empirical probability 0")
    # tuples with no opponent move before the anchor keep weight one
    out = np.ones(len(pd))
    lengths = np.diff(ptr)
    for L in np.unique(lengths):
        if L == 0:
            continue
        rows = np.flatnonzero(lengths == L)
        prod = np.ones(len(rows))
        for j in range(L):
            prod *= probs[ptr[rows] + j]
        out[rows] = prod
    return out


def anchor_sequences(pd: PlayerDataset):
    """Opponent sequence index at each tuple's anchor (-1 if none)."""
    a = pd.arrays
    ptr, opp_sa = a["opp_ptr"], a["opp_sa"]
    last = np.full(len(pd), -1, dtype=np.int64)
    has = ptr[1:] > ptr[:-1]
    last[has] = opp_sa[ptr[1:][has] - 1]
    return last


def generate_data(d_E, player, opp_values, empirical_opp, clip=np.inf, denominators=None) -> WeightedPlayerDataset:
    """Reweight player ``player``'s projection of ``d_E`` toward a target opponent.

    ``opp_values`` are the target opponent's sequence-form values
    x(s) * pi(a|s), either as a flat array over the opponent's sequence
    indices or as a ``{(key, action): value}`` mapping; the anchored value is
    the weight's numerator as is. The denominator is the empirical
    opponent's realization probability along the trajectory.
    """
    pd = _projection(d_E, player)
    tree = get_tree(pd.game)
    opp_idx = tree.players[1 - player]
    if isinstance(opp_values, dict):
        flat = np.zeros(opp_idx.n_sa)
        for (key, a), v in opp_values.items():
            flat[opp_idx.sa(key, a)] = v
        opp_values = flat
    if denominators is None:
        emp = empirical_opp if isinstance(empirical_opp, np.ndarray) else empirical_opp.to_flat(tree, 1 - player)
        denominators = behavior_denominators(pd, emp)
    anchor = anchor_sequences(pd)
    numer = np.where(anchor >= 0, opp_values[np.maximum(anchor, 0)], 1.0)
    w = numer / denominators
    if np.isfinite(clip):
        w = np.minimum(w, clip)
    return WeightedPlayerDataset(pd, w)


def resample_indices(wd: WeightedPlayerDataset, size, rng):
    """Tuple indices drawn i.i.d. with probability w / Z (alias method)."""
    if size < 1:
        raise ValueError("batch size must be >= 1")
    prob, alias = wd.alias_table()
    return _kernels.sample_alias(prob, alias, rng.random(size))


def resample_batch(wd: WeightedPlayerDataset, batch_size, rng):
    """``batch_size`` tuples drawn with replacement with probability w / Z."""
    idx = resample_indices(wd, batch_size, rng)
    flat = [t for traj in wd.base.trajectories for t in traj.tuples]
    return [flat[i] for i in idx]

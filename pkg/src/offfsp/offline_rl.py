"""Tabular offline-RL best-response learners.

Learners consume a :class:`~offfsp.reweight.WeightedPlayerDataset` through
weighted resampling. Q-learning, CQL and discrete BCQ extract a greedy
(pure) policy; CRR extracts an advantage-filtered cloning policy; BC is the
closed-form weighted action frequency.

Tables are dense over the owner's (infostate, action) pairs of the game
tree. An infostate counts as *seen* once it has carried positive sampling
weight; unseen infostates get the uniform policy.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np

from . import _kernels
from .dataset import TERMINAL_KEY
from .exceptions import DegenerateDatasetError, ValidationError
from .policy import BehaviorPolicy
from .tree import get_tree, normalize_sequence, segment_argmax

ALGORITHMS = ("bc", "qlearning", "cql", "bcq", "crr")

# Conservatism strength per game. Leduc uses the mix-dataset value; pass
# cql_alpha=0.5 for population datasets.
DEFAULT_CQL_ALPHA = {
    "leduc": 2.0,
    "large_kuhn": 0.1,
    "oshi_zumo": 0.01,
    "rps": 0.03,
    "rps_asym": 0.03,
    "kuhn": 0.1,
}

# Step size per game. Matrix games put hundreds of batch hits on each entry,
# so a smaller step keeps the greedy response from chasing sampling noise.
DEFAULT_LEARNING_RATE = {"rps": 1e-4, "rps_asym": 1e-4}


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str = "cql"
    learning_rate: float | None = None
    batch_size: int = 1024
    steps: int = 1000
    target_update_every: int = 100
    gamma: float = 1.0
    cql_alpha: float | None = None
    bcq_threshold: float = 0.1
    crr_beta: float = 1.0
    crr_ratio_bound: float = 20.0
    crr_mode: str = "exponential"
    weight_clip: float = float("inf")

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.learning_rate is not None and not 0 < self.learning_rate <= 1:
            raise ValidationError("learning_rate must lie in (0, 1]")
        for name in ("batch_size", "target_update_every", "crr_beta", "crr_ratio_bound", "weight_clip"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError("gamma must lie in [0, 1]")
        if not 0.0 <= self.bcq_threshold <= 1.0:
            raise ValidationError("bcq_threshold must lie in [0, 1]")
        if self.cql_alpha is not None and self.cql_alpha < 0:
            raise ValidationError("cql_alpha must be >= 0")
        if self.crr_mode != "exponential":
            raise ValidationError("only the exponential CRR mode is supported")

    def lr_for(self, game_name):
        if self.learning_rate is not None:
            return self.learning_rate
        return DEFAULT_LEARNING_RATE.get(game_name, 1e-3)

    def alpha_for(self, game_name):
        if self.cql_alpha is not None:
            return self.cql_alpha
        return DEFAULT_CQL_ALPHA.get(game_name, 0.1)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown learner keys: {sorted(unknown)}")
        return cls(**data)

    def with_(self, **changes):
        return replace(self, **changes)


class QTable:
    """Action values over one player's (infostate, action) pairs; 0 by default."""

    def __init__(self, game, player, values=None, seen=None):
        self.tree = get_tree(game)
        self.game = self.tree.game
        self.player = player
        idx = self.index
        self.values = np.zeros(idx.n_sa) if values is None else np.array(values, dtype=float)
        self.seen = np.zeros(idx.n_states, dtype=bool) if seen is None else np.array(seen, dtype=bool)
        self.steps_done = 0

    @property
    def index(self):
        return self.tree.players[self.player]

    def copy(self):
        q = QTable(self.game, self.player, self.values, self.seen)
        q.steps_done = self.steps_done
        return q

    def get(self, key, action):
        return float(self.values[self.index.sa(key, action)])

    def set(self, key, action, value):
        self.values[self.index.sa(key, action)] = value
        self.seen[self.index.index[key]] = True

    def row(self, key):
        idx = self.index
        i = idx.index[key]
        return self.values[idx.offset[i] : idx.offset[i] + idx.n_actions[i]]

    @classmethod
    def from_dict(cls, game, player, table):
        q = cls(game, player)
        for key, row in table.items():
            for a, v in enumerate(row):
                q.set(key, a, v)
        return q

    def to_dict(self):
        idx = self.index
        return {idx.keys[i]: [float(v) for v in self.row(idx.keys[i])] for i in np.flatnonzero(self.seen)}

    def to_csv(self, path):
        idx = self.index
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["infostate", "action", "value"])
            for i in np.flatnonzero(self.seen):
                for a in range(idx.n_actions[i]):
                    w.writerow([idx.keys[i], a, repr(float(self.values[idx.offset[i] + a]))])

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))


@dataclass
class LearnedPolicy:
    """Flat per-sequence probabilities of one player plus provenance."""

    game: object
    player: int
    flat: np.ndarray
    algorithm: str = ""
    iteration: int = 0
    meta: dict = field(default_factory=dict)

    @cached_property
    def policy(self) -> BehaviorPolicy:
        return BehaviorPolicy.from_flat(get_tree(self.game), self.player, self.flat)

    def probs(self, key):
        return self.policy.probs(key)


# -- batch-level steps ----------------------------------------------------------


def _batch_arrays(q: QTable, batch):
    idx = q.index
    sa, state, reward, nxt = [], [], [], []
    for t in batch:
        s = idx.index[t.state]
        state.append(s)
        sa.append(idx.offset[s] + t.action)
        reward.append(t.reward)
        nxt.append(-1 if t.next_state == TERMINAL_KEY else idx.index[t.next_state])
    return (
        np.asarray(sa, dtype=np.int64),
        np.asarray(state, dtype=np.int64),
        np.asarray(reward, dtype=float),
        np.asarray(nxt, dtype=np.int64),
    )


def _step(qtable, target_qtable, batch, gamma, lr, alpha, mask=None):
    if not len(batch):
        raise ValueError("batch must be non-empty")
    out = qtable.copy()
    sa, state, reward, nxt = _batch_arrays(out, batch)
    idx = out.index
    boot = np.ones(idx.n_sa, dtype=np.bool_) if mask is None else mask
    draws = np.arange(len(sa), dtype=np.int64)
    _kernels.batch_update(
        out.values, target_qtable.values, draws, np.ones(len(sa), dtype=np.int64), sa, state, reward, nxt, idx.offset, idx.n_actions,
        boot, float(gamma), float(lr), float(alpha), _kernels.make_work(idx.n_sa, idx.n_states),
    )
    out.seen[state] = True
    return out


def td_step(qtable, target_qtable, batch, gamma, lr):
    """Minibatch TD step toward r + gamma * max Q_target(s').

    Each tuple is one update Q(s, a) += lr * (target - Q(s, a)). An entry hit
    by c tuples takes the closed form of c such updates toward their mean
    target, so a one-tuple batch is exactly the textbook update and any
    lr <= 1 is stable.
    """
    return _step(qtable, target_qtable, batch, gamma, lr, 0.0)


def cql_step(qtable, target_qtable, batch, gamma, lr, alpha):
    """:func:`td_step` plus the gradient of the conservative penalty at each tuple.

    The penalty logsumexp_a Q(s, a) - Q(s, a_data) over legal actions lowers
    every action by lr * alpha * softmax and raises the data action by
    lr * alpha.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return _step(qtable, target_qtable, batch, gamma, lr, alpha)


# -- policy extraction ------------------------------------------------------------


def weighted_counts(wd):
    idx = get_tree(wd.base.game).players[wd.owner]
    return np.bincount(wd.base.arrays["sa"], weights=wd.weights, minlength=idx.n_sa)


def learn_bc(wd) -> LearnedPolicy:
    """pi(a|s) = weighted count(s, a) / weighted count(s); uniform where unseen."""
    if wd.total <= 0:
        raise DegenerateDatasetError("cannot clone an all-zero-weight dataset")
    tree = get_tree(wd.base.game)
    counts = weighted_counts(wd)
    flat = normalize_sequence(tree.players[wd.owner], counts)
    return LearnedPolicy(wd.base.game, wd.owner, flat, "bc")


def bcq_mask(empirical: BehaviorPolicy, s, threshold):
    """Actions whose empirical probability ratio to the most frequent exceeds ``threshold``.

    With ``threshold == 0`` this is exactly the set of observed actions.
    """
    if s not in empirical:
        raise KeyError(f"infostate {s!r} is not in the data; the BCQ mask is undefined there")
    p = np.asarray(empirical[s])
    ratio = p / p.max()
    return {a for a in range(len(p)) if ratio[a] > threshold}


def _bcq_flat_mask(idx, probs, seen, threshold):
    seg_max = np.maximum.reduceat(probs, idx.offset)[idx.sa_state]
    ratio = probs / np.where(seg_max > 0, seg_max, 1.0)
    allowed = ratio > threshold
    return allowed | ~seen[idx.sa_state]


def greedy_policy(qtable: QTable, mask_source=None) -> LearnedPolicy:
    """Argmax per seen infostate (lowest id on ties); uniform where unseen.

    ``mask_source`` is a boolean array over sequence indices restricting the
    argmax to allowed actions.
    """
    idx = qtable.index
    vals = qtable.values
    if mask_source is not None:
        vals = np.where(mask_source, vals, -np.inf)
    flat = normalize_sequence(idx, np.zeros(idx.n_sa))
    if idx.n_states:
        best = segment_argmax(vals, idx)
        seen = np.flatnonzero(qtable.seen)
        rows = np.zeros(idx.n_sa)
        rows[idx.offset[seen] + best[seen]] = 1.0
        in_seen = qtable.seen[idx.sa_state]
        flat = np.where(in_seen, rows, flat)
    return LearnedPolicy(qtable.game, qtable.player, flat, "greedy")


def crr_policy(qtable: QTable, wd, beta, ratio_bound) -> LearnedPolicy:
    """Advantage-filtered weighted cloning; the exponential filter is clipped to [1/b, b] with b = ``ratio_bound``."""
    idx = qtable.index
    counts = weighted_counts(wd)
    bc = normalize_sequence(idx, counts)
    baseline = np.add.reduceat(bc * qtable.values, idx.offset)[idx.sa_state]
    adv = qtable.values - baseline
    cap = np.log(ratio_bound)
    filt = np.exp(np.clip(adv / beta, -cap, cap))
    return LearnedPolicy(qtable.game, qtable.player, normalize_sequence(idx, counts * filt), "crr")


# -- full learner -----------------------------------------------------------------


def unique_tuples(wd):
    """Collapse identical (s, a, r, s') tuples; returns (sa, state, reward, next_state, probability)."""
    a = wd.base.arrays
    keep = wd.weights > 0
    rows = np.stack([a["sa"][keep], a["next_state"][keep], a["reward"][keep].view(np.int64)], axis=1)
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=wd.weights[keep], minlength=len(uniq))
    sa = uniq[:, 0].copy()
    state = get_tree(wd.base.game).players[wd.owner].sa_state[sa]
    return sa, state, uniq[:, 2].copy().view(np.float64), uniq[:, 1].copy(), mass / mass.sum()


def _train(q: QTable, wd, cfg: LearnerConfig, rng, alpha, boot_mask):
    idx = q.index
    sa, state, reward, nxt, probs = unique_tuples(wd)
    prob, alias = _kernels.build_alias(probs)
    target = q.values.copy()
    seed = int(rng.integers(2**31 - 1))
    _kernels.train(
        q.values, target, probs, prob, alias, seed, cfg.batch_size, cfg.steps, q.steps_done,
        cfg.target_update_every, sa, state, reward, nxt,
        idx.offset, idx.n_actions, boot_mask, float(cfg.gamma), float(cfg.lr_for(wd.base.game.name)), float(alpha),
        _kernels.make_work(idx.n_sa, idx.n_states),
    )
    q.steps_done += cfg.steps
    q.seen[np.unique(state)] = True


def learn_best_response(wd, warm_start: QTable | None, cfg: LearnerConfig, rng):
    """Approximate best response from resampled data: returns (policy, table).

    The table is updated in place when ``warm_start`` is given, so successive
    calls continue the same learner (step counter included).
    """
    game = wd.base.game
    q = warm_start if warm_start is not None else QTable(game, wd.owner)
    idx = q.index
    if cfg.algorithm == "bc":
        return learn_bc(wd), q
    if cfg.steps == 0:
        return greedy_policy(q), q
    if wd.total <= 0:
        raise DegenerateDatasetError("all tuple weights are zero: target opponent is off the data's support")
    alpha = 0.0
    if cfg.algorithm in ("cql", "crr"):
        alpha = cfg.alpha_for(game.name)
    boot_mask = np.ones(idx.n_sa, dtype=np.bool_)
    if cfg.algorithm == "bcq":
        counts = weighted_counts(wd)
        seen = np.add.reduceat(counts, idx.offset) > 0
        boot_mask = _bcq_flat_mask(idx, normalize_sequence(idx, counts), seen, cfg.bcq_threshold)
    _train(q, wd, cfg, rng, alpha, boot_mask)
    if not q.is_finite():
        raise FloatingPointError("Q-table diverged (non-finite values); lower the learning rate")
    if cfg.algorithm == "crr":
        pol = crr_policy(q, wd, cfg.crr_beta, cfg.crr_ratio_bound)
    else:
        pol = greedy_policy(q, boot_mask if cfg.algorithm == "bcq" else None)
    pol.algorithm = cfg.algorithm
    return pol, q

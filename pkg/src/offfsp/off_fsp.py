"""Offline fictitious self-play.

Each iteration reweights both players' projections of a fixed dataset toward
the opponent's current average policy, learns an approximate best response
per player with an offline-RL learner, and folds both responses into the
averages with weight 1 / k. The empirical behavior policy of the data is the
opponent model of the first iteration only.

Averages are kept in sequence form, which makes the update
realization-equivalent to the uniform mixture of the member policies.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import GameDataset, empirical_behavior_policy
from .exceptions import ValidationError
from .games import make_game
from .offline_rl import LearnerConfig, QTable, learn_bc, learn_best_response
from .policy import BehaviorPolicy, profile_to_flat
from .reweight import WeightedPlayerDataset, _projection, behavior_denominators, generate_data
from .solver import nash_conv_flat
from .tree import get_tree, normalize_sequence

FORMAT_VERSION = 1


@dataclass(frozen=True)
class OffFSPConfig:
    iterations: int = 100
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    eval_every: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.eval_every < 1:
            raise ValidationError("eval_every must be >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        learner = LearnerConfig.from_dict(data.pop("learner", {}))
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(learner=learner, **data)


def lambda_mix(alpha, x_prev, x_br):
    """Weight of the new best response at an infostate when mixing in sequence form.

    lambda = alpha * x_br / ((1 - alpha) * x_prev + alpha * x_br); where both
    reaches vanish the state is unreachable and lambda = alpha.
    """
    x_prev = np.asarray(x_prev, dtype=float)
    x_br = np.asarray(x_br, dtype=float)
    num = alpha * x_br
    den = (1 - alpha) * x_prev + num
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), alpha)


class AveragePolicyStore:
    """Both players' average policies in sequence form, x(s) * pi(a|s), plus the iteration count.

    The store starts from an initial profile with ``k = 0``. Update ``k``
    mixes with weight 1 / k, so the first update replaces the initial
    profile and after K updates the average is the uniform mixture of the K
    best responses.
    """

    def __init__(self, game, flats, k=0):
        self.tree = get_tree(game)
        self.game = self.tree.game
        self.seq = [self.tree.sequence_form(p, np.asarray(flats[p], dtype=float)) for p in (0, 1)]
        self.k = k

    @property
    def behavior(self):
        return [normalize_sequence(self.tree.players[p], self.seq[p]) for p in (0, 1)]

    def profile(self):
        behavior = self.behavior
        return tuple(BehaviorPolicy.from_flat(self.tree, p, behavior[p]) for p in (0, 1))

    def to_dict(self):
        behavior = self.behavior
        return {
            "format": FORMAT_VERSION,
            "kind": "store",
            "game": self.game.name,
            "params": self.game.params,
            "k": self.k,
            "players": [
                {key: list(map(float, behavior[p][off : off + n])) for key, off, n in _rows(self.tree, p)}
                for p in (0, 1)
            ],
            "sequence_form": [list(map(float, s)) for s in self.seq],
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("kind") != "store" or doc.get("format") != FORMAT_VERSION:
            raise ValidationError(f"not a format-{FORMAT_VERSION} average-policy store")
        game = make_game(doc["game"], **doc.get("params", {}))
        tree = get_tree(game)
        store = cls(game, [BehaviorPolicy(doc["players"][p]).to_flat(tree, p) for p in (0, 1)], int(doc["k"]))
        seq = [np.asarray(s, dtype=float) for s in doc["sequence_form"]]
        if [len(s) for s in seq] != [idx.n_sa for idx in tree.players]:
            raise ValidationError("sequence-form arrays do not match the game")
        store.seq = seq
        return store

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def update_average_policy(store: AveragePolicyStore, brs, k=None):
    """Fold one best response per player (flat arrays) into ``store`` with weight 1 / k.

    ``k`` defaults to ``store.k + 1``. Both players are updated from the
    previous store, which is modified in place and returned.
    """
    k = store.k + 1 if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    for p in (0, 1):
        store.seq[p] = (k - 1) / k * store.seq[p] + store.tree.sequence_form(p, np.asarray(brs[p], dtype=float)) / k
    store.k = k
    return store


def behavior_from_store(store: AveragePolicyStore):
    """Per-state normalization of the store (zero mass gives uniform)."""
    return store.profile()


def evaluate_aggregate(store: AveragePolicyStore):
    return nash_conv_flat(store.tree, store.behavior)


def _rows(tree, p):
    idx = tree.players[p]
    return zip(idx.keys, idx.offset, idx.n_actions)


@dataclass
class PolicyCollection:
    """Member policies of the average with their mixing weights.

    Entries are ``(label, iteration, flat0, flat1)``; the initial profile has
    iteration 0. Weights follow the 1 / k schedule, which gives the initial
    profile weight 0 once any best response was added.
    """

    game: object
    entries: list = field(default_factory=list)
    weights: np.ndarray = field(default_factory=lambda: np.empty(0))

    def add(self, label, k, flats):
        entry = (label, k, np.asarray(flats[0], dtype=float).copy(), np.asarray(flats[1], dtype=float).copy())
        if not self.entries:
            self.weights = np.ones(1)
        else:
            alpha = 1.0 / k
            self.weights = np.append((1 - alpha) * self.weights, alpha)
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)

    def mixture(self, player):
        """Realization-equivalent behavior policy of the weighted mixture."""
        tree = get_tree(self.game)
        seq = sum(w * tree.sequence_form(player, e[2 + player]) for w, e in zip(self.weights, self.entries))
        return normalize_sequence(tree.players[player], seq)

    def to_dict(self):
        tree = get_tree(self.game)
        return {
            "format": FORMAT_VERSION,
            "kind": "collection",
            "game": self.game.name,
            "params": self.game.params,
            "entries": [
                {
                    "label": label,
                    "iteration": k,
                    "weight": float(w),
                    "players": [BehaviorPolicy.from_flat(tree, p, flats[p]).to_dict() for p in (0, 1)],
                }
                for (label, k, *flats), w in zip(self.entries, self.weights)
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("kind") != "collection" or doc.get("format") != FORMAT_VERSION:
            raise ValidationError(f"not a format-{FORMAT_VERSION} policy collection")
        game = make_game(doc["game"], **doc.get("params", {}))
        tree = get_tree(game)
        col = cls(game)
        for e in doc["entries"]:
            flats = [BehaviorPolicy.from_dict(e["players"][p]).to_flat(tree, p) for p in (0, 1)]
            col.entries.append((e["label"], int(e["iteration"]), *flats))
        col.weights = np.array([e["weight"] for e in doc["entries"]], dtype=float)
        return col

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)


def checkpoint_collection(collection: PolicyCollection, every: int) -> PolicyCollection:
    """Keep the initial entry, entries at multiples of ``every`` and the last; renormalize weights."""
    if every < 1:
        raise ValueError("every must be >= 1")
    n = len(collection)
    keep = [i for i, e in enumerate(collection.entries) if e[1] == 0 or e[1] % every == 0 or i == n - 1]
    out = PolicyCollection(collection.game, [collection.entries[i] for i in keep])
    w = collection.weights[keep]
    total = w.sum()
    out.weights = w / total if total > 0 else np.full(len(keep), 1.0 / len(keep))
    return out


@dataclass
class IterationRecord:
    k: int
    br_value_0: float
    br_value_1: float
    nash_conv: float
    t_reweight_ms: float
    t_learn_ms: float
    t_eval_ms: float


@dataclass
class RunReport:
    records: list = field(default_factory=list)
    final_nash_conv: float = float("nan")

    def to_csv(self, path, timing=True):
        """Per-iteration rows; ``timing=False`` drops the wall-clock columns so the file is reproducible."""
        names = [n for n in IterationRecord.__dataclass_fields__ if timing or not n.startswith("t_")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for r in self.records:
                w.writerow([getattr(r, n) if isinstance(getattr(r, n), int) else repr(float(getattr(r, n))) for n in names])

    @property
    def nash_conv_curve(self):
        return [(r.k, r.nash_conv) for r in self.records if not np.isnan(r.nash_conv)]


@dataclass
class OffFSPResult:
    store: AveragePolicyStore
    report: RunReport
    collection: PolicyCollection | None
    q_tables: tuple

    @property
    def profile(self):
        return self.store.profile()

    @property
    def nash_conv(self):
        return self.report.final_nash_conv


def empirical_flats(d_E):
    tree = get_tree(d_E.game)
    return profile_to_flat(tree, empirical_behavior_policy(d_E))


def run_off_fsp(d_E: GameDataset, config: OffFSPConfig = OffFSPConfig(), keep_collection=False, callback=None):
    """Run Off-FSP on ``d_E``; returns an :class:`OffFSPResult`.

    Randomness (resampling only) comes from one generator seeded by
    ``config.seed``, so runs are reproducible bit for bit.
    """
    if not len(d_E):
        raise ValidationError("dataset is empty")
    game = d_E.game
    tree = get_tree(game)
    cfg = config.learner
    rng = np.random.default_rng(config.seed)
    emp = empirical_flats(d_E)
    denominators = [behavior_denominators(_projection(d_E, p), emp[1 - p]) for p in (0, 1)]
    store = AveragePolicyStore(game, emp)
    collection = PolicyCollection(game) if keep_collection else None
    if collection is not None:
        collection.add("behavior", 0, emp)
    q_tables = [QTable(game, p) for p in (0, 1)]
    report = RunReport()
    for k in range(1, config.iterations + 1):
        t0 = time.perf_counter()
        wds = [
            generate_data(d_E, p, store.seq[1 - p], emp[1 - p], clip=cfg.weight_clip, denominators=denominators[p])
            for p in (0, 1)
        ]
        t1 = time.perf_counter()
        brs = []
        for p in (0, 1):
            pol, q_tables[p] = learn_best_response(wds[p], q_tables[p], cfg, rng)
            brs.append(pol.flat)
        t2 = time.perf_counter()
        update_average_policy(store, brs, k)
        if collection is not None:
            collection.add(f"br{k}", k, brs)
        nc = float("nan")
        br_vals = (float("nan"), float("nan"))
        if k % config.eval_every == 0 or k == config.iterations:
            rep = evaluate_aggregate(store)
            nc, br_vals = rep.total, rep.br_values
        t3 = time.perf_counter()
        rec = IterationRecord(k, br_vals[0], br_vals[1], nc, 1e3 * (t1 - t0), 1e3 * (t2 - t1), 1e3 * (t3 - t2))
        report.records.append(rec)
        if callback is not None:
            callback(rec)
    report.final_nash_conv = report.records[-1].nash_conv
    return OffFSPResult(store, report, collection, tuple(q_tables))


# -- single-shot baselines ------------------------------------------------------


def run_baseline(d_E: GameDataset, learner: LearnerConfig, seed=0):
    """One offline learner per player on the unweighted data; returns (flats, NashConv).

    With ``algorithm="bc"`` this is behavior cloning; otherwise each player
    learns a best response to the opponents that generated the data.
    """
    tree = get_tree(d_E.game)
    rng = np.random.default_rng(seed)
    flats = []
    for p in (0, 1):
        pd = _projection(d_E, p)
        wd = WeightedPlayerDataset(pd, pd.weights)
        if learner.algorithm == "bc":
            flats.append(learn_bc(wd).flat)
        else:
            flats.append(learn_best_response(wd, None, learner, rng)[0].flat)
    return flats, nash_conv_flat(tree, flats).total

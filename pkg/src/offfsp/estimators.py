"""Estimator-style wrappers: fit a strategy profile on a dataset, then query it.

All estimators follow the scikit-learn conventions: constructor arguments
are hyperparameters only, ``fit`` learns from a :class:`GameDataset` (or a
dataset file path) and sets trailing-underscore attributes, and
``get_params`` / ``set_params`` / ``clone`` work as usual.

``predict_proba`` takes infostate keys and returns one probability vector
per key; ``predict`` returns the most likely action; ``score`` is minus the
exact NashConv of the fitted profile, so higher is better.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import dataset as ds
from .exceptions import ValidationError
from .off_fsp import OffFSPConfig, run_off_fsp
from .offline_rl import LearnerConfig, learn_bc, learn_best_response
from .policy import profile_from_flat
from .reweight import WeightedPlayerDataset, _projection
from .solver import nash_conv_flat
from .tree import get_tree


def check_dataset(X) -> ds.GameDataset:
    """Accept a GameDataset or a path to a saved one; reject empty datasets."""
    if isinstance(X, (str, Path)):
        X = ds.load(X)
    if not isinstance(X, ds.GameDataset):
        raise ValidationError(f"expected a GameDataset or a dataset path, got {type(X).__name__}")
    if not len(X):
        raise ValidationError("dataset is empty")
    return X


def check_keys(keys):
    if isinstance(keys, str):
        raise ValidationError("pass a sequence of infostate keys, not a single string")
    return list(keys)


def _learner_config(est, **overrides):
    params = {name: getattr(est, name) for name in LearnerConfig.__dataclass_fields__ if hasattr(est, name)}
    params.update(overrides)
    return LearnerConfig(**params)


class _ProfileMixin:
    """Queries shared by every estimator holding a fitted profile in ``flats_``."""

    def _lookup(self, key):
        check_is_fitted(self, "flats_")
        for p in (0, 1):
            idx = self.tree_.players[p]
            i = idx.index.get(key)
            if i is not None:
                return self.flats_[p][idx.offset[i] : idx.offset[i] + idx.n_actions[i]]
        raise KeyError(f"{key!r} is not an infostate of {self.tree_.game.name}")

    def predict_proba(self, keys):
        return [self._lookup(k).copy() for k in check_keys(keys)]

    def predict(self, keys):
        return np.array([int(np.argmax(self._lookup(k))) for k in check_keys(keys)], dtype=np.int64)

    @property
    def profile_(self):
        check_is_fitted(self, "flats_")
        return profile_from_flat(self.tree_, self.flats_)

    def nash_conv(self):
        check_is_fitted(self, "flats_")
        return nash_conv_flat(self.tree_, self.flats_).total

    def score(self, X=None, y=None):
        """Minus the NashConv of the fitted profile (``X`` is ignored)."""
        return -self.nash_conv()


class BehaviorCloning(_ProfileMixin, BaseEstimator):
    """Per-player weighted action frequencies of the data."""

    def fit(self, X, y=None):
        d = check_dataset(X)
        self.tree_ = get_tree(d.game)
        self.flats_ = []
        for p in (0, 1):
            pd = _projection(d, p)
            self.flats_.append(learn_bc(WeightedPlayerDataset(pd, pd.weights)).flat)
        return self


class OfflineBestResponse(_ProfileMixin, BaseEstimator):
    """Single-agent offline RL: each player learns against the data's opponents."""

    def __init__(
        self,
        algorithm="cql",
        learning_rate=None,
        batch_size=1024,
        steps=1000,
        target_update_every=100,
        gamma=1.0,
        cql_alpha=None,
        bcq_threshold=0.1,
        crr_beta=1.0,
        crr_ratio_bound=20.0,
        seed=0,
    ):
        self.algorithm = algorithm
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.steps = steps
        self.target_update_every = target_update_every
        self.gamma = gamma
        self.cql_alpha = cql_alpha
        self.bcq_threshold = bcq_threshold
        self.crr_beta = crr_beta
        self.crr_ratio_bound = crr_ratio_bound
        self.seed = seed

    def fit(self, X, y=None):
        d = check_dataset(X)
        cfg = _learner_config(self)
        rng = np.random.default_rng(self.seed)
        self.tree_ = get_tree(d.game)
        self.flats_, self.q_tables_ = [], []
        for p in (0, 1):
            pd = _projection(d, p)
            pol, q = learn_best_response(WeightedPlayerDataset(pd, pd.weights), None, cfg, rng)
            self.flats_.append(pol.flat)
            self.q_tables_.append(q)
        return self


class OffFSP(OfflineBestResponse):
    """Offline fictitious self-play on a fixed dataset."""

    def __init__(
        self,
        iterations=100,
        algorithm="cql",
        learning_rate=None,
        batch_size=1024,
        steps=1000,
        target_update_every=100,
        gamma=1.0,
        cql_alpha=None,
        bcq_threshold=0.1,
        crr_beta=1.0,
        crr_ratio_bound=20.0,
        weight_clip=float("inf"),
        eval_every=10,
        seed=0,
    ):
        super().__init__(
            algorithm=algorithm,
            learning_rate=learning_rate,
            batch_size=batch_size,
            steps=steps,
            target_update_every=target_update_every,
            gamma=gamma,
            cql_alpha=cql_alpha,
            bcq_threshold=bcq_threshold,
            crr_beta=crr_beta,
            crr_ratio_bound=crr_ratio_bound,
            seed=seed,
        )
        self.iterations = iterations
        self.weight_clip = weight_clip
        self.eval_every = eval_every

    def fit(self, X, y=None):
        d = check_dataset(X)
        config = OffFSPConfig(
            iterations=self.iterations, learner=_learner_config(self), eval_every=self.eval_every, seed=self.seed
        )
        result = run_off_fsp(d, config)
        self.tree_ = get_tree(d.game)
        self.store_ = result.store
        self.report_ = result.report
        self.q_tables_ = list(result.q_tables)
        self.flats_ = result.store.behavior
        self.nash_conv_ = result.nash_conv
        return self

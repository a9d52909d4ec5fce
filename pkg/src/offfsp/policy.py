"""Behavior policies, strategy profiles and realization plans."""

from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .exceptions import MissingInfostateError, ValidationError

PROB_TOL = 1e-9
FORMAT_VERSION = 1


class BehaviorPolicy(Mapping):
    """Map from infostate key to a probability vector over legal actions.

    Keys the table does not define fall back to the uniform distribution
    unless ``strict`` is set, in which case looking them up raises
    :class:`MissingInfostateError`.
    """

    def __init__(self, table=None, strict=False):
        self.strict = strict
        self._table = {}
        for key, probs in (table or {}).items():
            self._table[key] = _check_probs(key, probs)

    def __getitem__(self, key):
        return self._table[key]

    def __iter__(self):
        return iter(self._table)

    def __len__(self):
        return len(self._table)

    def __repr__(self):
        return f"BehaviorPolicy({len(self)} infostates, strict={self.strict})"

    def __eq__(self, other):
        if not isinstance(other, BehaviorPolicy) or self.keys() != other.keys():
            return False
        return all(np.array_equal(self[k], other[k]) for k in self)

    __hash__ = None

    def probs(self, key, n_actions=None):
        """Distribution at ``key``, with the uniform fallback for unknown keys."""
        p = self._table.get(key)
        if p is None:
            if self.strict or n_actions is None:
                raise MissingInfostateError(f"policy does not define infostate {key!r}")
            return np.full(n_actions, 1.0 / n_actions)
        if n_actions is not None and len(p) != n_actions:
            raise ValidationError(f"infostate {key!r}: policy has {len(p)} actions, game has {n_actions}")
        return p

    def prob(self, key, action, n_actions=None):
        return float(self.probs(key, n_actions)[action])

    @classmethod
    def deterministic(cls, actions, n_actions):
        """Pure policy from ``{key: action}`` and ``{key: n}`` (or one shared n)."""
        table = {}
        for key, a in actions.items():
            n = n_actions[key] if isinstance(n_actions, Mapping) else n_actions
            v = np.zeros(n)
            v[a] = 1.0
            table[key] = v
        return cls(table)

    # -- tree conversion -----------------------------------------------------

    def to_flat(self, tree, player):
        """Probabilities as a flat array over the player's sequence indices."""
        idx = tree.players[player]
        if self.strict:
            missing = [k for k in idx.keys if k not in self._table]
            if missing:
                self.probs(missing[0])
        out = 1.0 / idx.n_actions[idx.sa_state]
        for key in self._table:
            i = idx.index.get(key)
            if i is not None:
                off, n = idx.offset[i], int(idx.n_actions[i])
                out[off : off + n] = self.probs(key, n)
        return out

    @classmethod
    def from_flat(cls, tree, player, flat, mask=None):
        """Inverse of :meth:`to_flat`; ``mask`` selects which infostates to keep."""
        idx = tree.players[player]
        table = {}
        for i, (key, off, n) in enumerate(zip(idx.keys, idx.offset, idx.n_actions)):
            if mask is None or mask[i]:
                table[key] = np.array(flat[off : off + n], dtype=float)
        return cls(table)

    # -- serialization ---------------------------------------------------------

    def to_dict(self):
        return {k: [float(x) for x in v] for k, v in self._table.items()}

    @classmethod
    def from_dict(cls, data, strict=False):
        return cls({k: np.asarray(v, dtype=float) for k, v in data.items()}, strict=strict)


def _check_probs(key, probs):
    p = np.array(probs, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise ValidationError(f"infostate {key!r}: probabilities must be a non-empty vector")
    if np.any(p < -PROB_TOL) or not np.all(np.isfinite(p)):
        raise ValidationError(f"infostate {key!r}: negative or non-finite probability {p}")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"infostate {key!r}: probabilities sum to {p.sum()!r}, not 1")
    p = np.clip(p, 0.0, None)
    p.setflags(write=False)
    return p


def uniform_policy():
    """Empty non-strict policy: uniform everywhere."""
    return BehaviorPolicy()


def uniform_profile():
    return (uniform_policy(), uniform_policy())


def realization_plan(policy, sequence):
    """Probability the owner's own actions produce ``sequence``.

    ``sequence`` is a list of ``(key, action)`` pairs taken by one player;
    chance and opponent moves are not part of it. Policies only defining
    the visited keys work in strict mode; otherwise the uniform fallback
    needs the action count, so pass ``(key, action, n_actions)`` triples.
    """
    x = 1.0
    for item in sequence:
        key, action = item[0], item[1]
        n = item[2] if len(item) > 2 else None
        x *= policy.prob(key, action, n)
    return x


def profile_to_flat(tree, profile):
    return [profile[p].to_flat(tree, p) for p in (0, 1)]


def profile_from_flat(tree, flats):
    return tuple(BehaviorPolicy.from_flat(tree, p, flats[p]) for p in (0, 1))


def save_profile(profile, path, game=None, extra=None):
    doc = {"format": FORMAT_VERSION, "kind": "profile", "game": game, "players": [p.to_dict() for p in profile]}
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_profile(path):
    """Read a profile written by :func:`save_profile`; returns (profile, document)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a JSON policy file ({exc})") from None
    if doc.get("kind") != "profile" or doc.get("format") != FORMAT_VERSION or len(doc.get("players", [])) != 2:
        raise ValidationError(f"{path}: expected a format-{FORMAT_VERSION} profile document")
    return tuple(BehaviorPolicy.from_dict(p) for p in doc["players"]), doc

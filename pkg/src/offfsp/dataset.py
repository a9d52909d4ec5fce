"""Trajectory datasets: sampling, recipes, per-player projection and persistence.

A :class:`GameDataset` holds whole-game trajectories. :func:`project` turns it
into one player's view, a :class:`PlayerDataset` of ``(s, a, r, s')`` tuples.
Rewards are zero except on a player's last tuple, which carries the episode
return. Each tuple also records its *anchor*: the index of the opponent's
latest decision event before the player's next decision (or before the end
of the game for the last tuple), which is where opponent reweighting stops.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DatasetFormatError, ValidationError
from .games import CHANCE, TERMINAL, Game, make_game
from .policy import BehaviorPolicy, profile_to_flat
from .tree import get_tree

FORMAT_VERSION = 1
TERMINAL_KEY = "<terminal>"


@dataclass(frozen=True)
class Event:
    """One move of a trajectory: a player decision or a chance outcome."""

    actor: int
    action: int
    key: str | None = None
    prob: float | None = None


@dataclass(frozen=True)
class ExtensiveTrajectory:
    events: tuple
    returns: tuple

    def __len__(self):
        return len(self.events)

    def decisions(self, player):
        return [i for i, e in enumerate(self.events) if e.actor == player]


@dataclass
class GameDataset:
    game: Game
    trajectories: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def game_name(self):
        return self.game.name

    def validate(self):
        """Replay every trajectory through the game tree; raises on mismatch."""
        tree = get_tree(self.game)
        for i, traj in enumerate(self.trajectories):
            _replay(tree, traj, i)
        return self


@dataclass(frozen=True)
class PlayerTuple:
    state: str
    action: int
    reward: float
    next_state: str
    anchor: int


@dataclass(frozen=True)
class PlayerTrajectory:
    owner: int
    source: int
    tuples: tuple

    def __len__(self):
        return len(self.tuples)


@dataclass
class CoverageReport:
    terminal_coverage: float
    infostate_action_coverage: float
    terminals_covered: int
    terminals_total: int
    pairs_covered: int
    pairs_total: int
    n_trajectories: int

    def to_csv(self, path):
        row = self.__dict__
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(row))
            writer.writeheader()
            writer.writerow(row)


class PlayerDataset:
    """One player's projection of a :class:`GameDataset`.

    Alongside the readable :class:`PlayerTrajectory` list it keeps flat
    arrays over all tuples (indices into the game tree) used by reweighting
    and learning. The source dataset is referenced, never copied.
    """

    def __init__(self, owner, source, trajectories, arrays, weights=None):
        self.owner = owner
        self.source = source
        self.trajectories = trajectories
        self.arrays = arrays
        n = len(arrays["sa"])
        self.weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        if len(self.weights) != n:
            raise ValidationError(f"{len(self.weights)} weights for {n} tuples")
        if np.any(self.weights < 0):
            raise ValidationError("tuple weights must be non-negative")
        if n and not np.any(self.weights > 0):
            raise ValidationError("at least one tuple weight must be positive")
        self.avg_values = {}

    def __len__(self):
        return len(self.arrays["sa"])

    @property
    def game(self):
        return self.source.game

    def tuples(self):
        for traj in self.trajectories:
            yield from traj.tuples


# -- sampling ----------------------------------------------------------------------


def _walk(tree, flats, rng):
    node = 0
    events = []
    while tree.player[node] != TERMINAL:
        p = int(tree.player[node])
        start, count = int(tree.child_start[node]), int(tree.child_count[node])
        if p == CHANCE:
            probs = tree.chance_prob[start : start + count]
        else:
            idx = tree.players[p]
            off = idx.offset[tree.infostate[node]]
            probs = flats[p][off : off + count]
        a = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
        a = min(a, count - 1)
        while probs[a] <= 0:  # guard against landing on a zero-probability edge
            a -= 1
        if p == CHANCE:
            events.append(Event(CHANCE, a, None, float(probs[a])))
        else:
            events.append(Event(p, a, tree.node_key(node)))
        node = start + a
    r0 = float(tree.returns0[node])
    return ExtensiveTrajectory(tuple(events), (r0, -r0 if r0 else 0.0))


def _traj_rng(seed, i):
    return np.random.default_rng([seed, i])


def sample_dataset(game, profile, n_trajectories, seed):
    """``n_trajectories`` i.i.d. episodes of ``profile``; reproducible from ``seed``."""
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    tree = get_tree(game)
    flats = profile_to_flat(tree, profile)
    trajs = [_walk(tree, flats, _traj_rng(seed, i)) for i in range(n_trajectories)]
    return GameDataset(game, trajs, {"recipe": "sample", "seed": seed})


def sample_mix_dataset(game, expert, random_profile, expert_ratio, n, seed):
    """Each episode is played entirely by ``expert`` with prob ``expert_ratio``."""
    if not 0.0 <= expert_ratio <= 1.0:
        raise ValueError("expert_ratio must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    tree = get_tree(game)
    flats = [profile_to_flat(tree, random_profile), profile_to_flat(tree, expert)]
    trajs, n_expert = [], 0
    for i in range(n):
        rng = _traj_rng(seed, i)
        use_expert = rng.random() < expert_ratio
        n_expert += use_expert
        trajs.append(_walk(tree, flats[use_expert], rng))
    meta = {"recipe": f"mix:{expert_ratio}", "seed": seed, "expert_ratio": expert_ratio, "n_expert": n_expert}
    return GameDataset(game, trajs, meta)


def sample_population_dataset(game, population, n, seed):
    """Each seat independently draws its policy uniformly from ``population``."""
    if not population:
        raise ValueError("population must be non-empty")
    if n < 1:
        raise ValueError("n must be >= 1")
    tree = get_tree(game)
    flats = [profile_to_flat(tree, prof) for prof in population]
    trajs = []
    for i in range(n):
        rng = _traj_rng(seed, i)
        seats = rng.integers(len(population), size=2)
        trajs.append(_walk(tree, [flats[seats[0]][0], flats[seats[1]][1]], rng))
    meta = {"recipe": f"population:{len(population)}", "seed": seed, "population_size": len(population)}
    return GameDataset(game, trajs, meta)


def largest_remainder(probs, n):
    """Integer counts summing to ``n`` closest to ``n * probs``."""
    probs = np.asarray(probs, dtype=float)
    exact = probs / probs.sum() * n
    counts = np.floor(exact + 1e-9).astype(np.int64)
    short = n - counts.sum()
    if short > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _path_events(tree, node):
    path = []
    while tree.parent[node] >= 0:
        path.append(node)
        node = tree.parent[node]
    events = []
    for child in reversed(path):
        par = tree.parent[child]
        p = int(tree.player[par])
        a = int(tree.action[child])
        if p == CHANCE:
            events.append(Event(CHANCE, a, None, float(tree.chance_prob[child])))
        else:
            events.append(Event(p, a, tree.node_key(par)))
    return tuple(events)


def _terminal_trajectory(tree, node):
    r0 = float(tree.returns0[node])
    return ExtensiveTrajectory(_path_events(tree, node), (r0, -r0 if r0 else 0.0))


def exact_proportion_dataset(game, profile, n, seed=None):
    """Deterministic dataset whose trajectory frequencies match ``profile``.

    Expected counts are rounded with the largest-remainder rule; when they
    are integral the dataset is real-equivalent by construction. ``seed``
    only shuffles the trajectory order.
    """
    tree = get_tree(game)
    reach = tree.reach(tree.edge_probs(profile_to_flat(tree, profile)))
    terms = tree.terminals
    counts = largest_remainder(reach[terms], n)
    trajs = []
    for node, c in zip(terms, counts):
        if c:
            traj = _terminal_trajectory(tree, node)
            trajs.extend([traj] * int(c))
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(trajs))
        trajs = [trajs[i] for i in order]
    return GameDataset(game, trajs, {"recipe": "exact", "seed": seed})


def make_rps_d1(n=1000, seed=0, exact=True):
    """Both players (0.6, 0.2, 0.2); exact proportions unless ``exact=False``."""
    game = make_game("rps")
    prof = (BehaviorPolicy({"p0": [0.6, 0.2, 0.2]}), BehaviorPolicy({"p1": [0.6, 0.2, 0.2]}))
    if exact:
        d = exact_proportion_dataset(game, prof, n, seed)
    else:
        d = sample_dataset(game, prof, n, seed)
    d.metadata["recipe"] = "d1"
    return d


# Joint counts for the asymmetric dataset. Rows: player 0 Rock, Paper,
# Scissors; columns: player 1 Rock, Paper, Scissors, Rock2. The one Rock2
# sample is (Scissors, Rock2).
D2_COUNTS = np.array(
    [
        [111, 111, 111, 0],
        [111, 111, 111, 0],
        [111, 111, 111, 1],
    ]
)


def make_rps_d2(seed=0):
    """Partially covered asymmetric-RPS dataset with a single Rock2 cell."""
    game = make_game("rps_asym")
    tree = get_tree(game)
    trajs = []
    for a0 in range(3):
        for a1 in range(4):
            node = tree.child(tree.child(0, a0), a1)
            trajs.extend([_terminal_trajectory(tree, node)] * int(D2_COUNTS[a0, a1]))
    order = np.random.default_rng(seed).permutation(len(trajs))
    return GameDataset(game, [trajs[i] for i in order], {"recipe": "d2", "seed": seed})


# -- projection and estimators --------------------------------------------------


def project(d: GameDataset, player: int) -> PlayerDataset:
    """Player ``player``'s tuples from every trajectory, time indices relabeled."""
    tree = get_tree(d.game)
    own = tree.players[player]
    opp = tree.players[1 - player]
    trajs = []
    cols = {k: [] for k in ("traj", "pos", "state", "sa", "reward", "next_state", "anchor")}
    opp_ptr = [0]
    opp_sa = []
    for ti, traj in enumerate(d.trajectories):
        events = traj.events
        mine = traj.decisions(player)
        tuples = []
        for t, e_idx in enumerate(mine):
            last = t == len(mine) - 1
            stop = len(events) if last else mine[t + 1]
            anchor = -1
            prefix = []
            for j in range(stop):
                e = events[j]
                if e.actor == 1 - player:
                    anchor = j
                    prefix.append(opp.sa(e.key, e.action))
            ev = events[e_idx]
            nxt = TERMINAL_KEY if last else events[mine[t + 1]].key
            reward = float(traj.returns[player]) if last else 0.0
            tuples.append(PlayerTuple(ev.key, ev.action, reward, nxt, anchor))
            cols["traj"].append(ti)
            cols["pos"].append(t)
            cols["state"].append(own.index[ev.key])
            cols["sa"].append(own.sa(ev.key, ev.action))
            cols["reward"].append(reward)
            cols["next_state"].append(-1 if last else own.index[nxt])
            cols["anchor"].append(anchor)
            opp_sa.extend(prefix)
            opp_ptr.append(len(opp_sa))
        trajs.append(PlayerTrajectory(player, ti, tuple(tuples)))
    arrays = {k: np.asarray(v, dtype=float if k == "reward" else np.int64) for k, v in cols.items()}
    arrays["opp_ptr"] = np.asarray(opp_ptr, dtype=np.int64)
    arrays["opp_sa"] = np.asarray(opp_sa, dtype=np.int64)
    return PlayerDataset(player, d, trajs, arrays)


def empirical_behavior_policy(d: GameDataset):
    """Counting estimator count(s, a) / count(s) over all decision events.

    Infostates absent from ``d`` are absent from the returned policies.
    """
    tree = get_tree(d.game)
    counts = [np.zeros(idx.n_sa) for idx in tree.players]
    for traj in d.trajectories:
        for e in traj.events:
            if e.actor != CHANCE:
                counts[e.actor][tree.players[e.actor].sa(e.key, e.action)] += 1
    return tuple(counts_to_policy(tree, p, counts[p]) for p in (0, 1))


def counts_to_policy(tree, player, counts):
    idx = tree.players[player]
    if not idx.keys:
        return BehaviorPolicy()
    totals = np.add.reduceat(counts, idx.offset)
    seen = totals > 0
    probs = counts / np.where(totals > 0, totals, 1.0)[idx.sa_state]
    return BehaviorPolicy.from_flat(tree, player, probs, mask=seen)


def coverage_report(d: GameDataset) -> CoverageReport:
    tree = get_tree(d.game)
    terminals = set()
    pairs = set()
    for traj in d.trajectories:
        node = 0
        for e in traj.events:
            if e.actor != CHANCE:
                pairs.add((e.actor, tree.sa[tree.child(node, e.action)]))
            node = tree.child(node, e.action)
        terminals.add(node)
    n_terms = len(tree.terminals)
    n_pairs = sum(idx.n_sa for idx in tree.players)
    return CoverageReport(
        terminal_coverage=len(terminals) / n_terms,
        infostate_action_coverage=len(pairs) / n_pairs,
        terminals_covered=len(terminals),
        terminals_total=n_terms,
        pairs_covered=len(pairs),
        pairs_total=n_pairs,
        n_trajectories=len(d),
    )


# -- persistence ---------------------------------------------------------------


def _replay(tree, traj, i):
    node = 0
    for j, e in enumerate(traj.events):
        p = tree.player[node]
        where = f"trajectory {i}, event {j}"
        if p == TERMINAL:
            raise ValidationError(f"{where}: game already ended")
        if e.actor != p:
            raise ValidationError(f"{where}: actor {e.actor} but player {p} is to move")
        if not 0 <= e.action < tree.child_count[node]:
            raise ValidationError(f"{where}: illegal action {e.action}")
        if p == CHANCE:
            expected = tree.chance_prob[tree.child(node, e.action)]
            if e.prob is not None and abs(e.prob - expected) > 1e-9:
                raise ValidationError(f"{where}: chance probability {e.prob} != {expected}")
        elif e.key != tree.node_key(node):
            raise ValidationError(f"{where}: infostate {e.key!r} != {tree.node_key(node)!r}")
        node = tree.child(node, e.action)
    if tree.player[node] != TERMINAL:
        raise ValidationError(f"trajectory {i}: ends before a terminal state")
    r0 = tree.returns0[node]
    if abs(traj.returns[0] - r0) > 1e-9 or abs(traj.returns[1] + r0) > 1e-9:
        raise ValidationError(f"trajectory {i}: returns {traj.returns} do not replay ({r0}, {-r0})")


def save(d: GameDataset, path):
    """Write JSON Lines: one header object, then one trajectory per line."""
    header = {
        "format": FORMAT_VERSION,
        "kind": "dataset",
        "game": d.game.name,
        "params": d.game.params,
        "n_trajectories": len(d),
        "metadata": d.metadata,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for traj in d.trajectories:
            events = [[e.actor, e.action, e.key, e.prob] for e in traj.events]
            fh.write(json.dumps({"events": events, "returns": list(traj.returns)}) + "\n")


def load(path, game=None):
    """Read a dataset written by :func:`save` and replay-validate it.

    ``game`` (a name or :class:`Game`) asserts which game the file must hold.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise DatasetFormatError("empty file", line=1)
    header = _parse(lines[0], 1)
    if header.get("kind") != "dataset" or header.get("format") != FORMAT_VERSION:
        raise DatasetFormatError(f"not a format-{FORMAT_VERSION} dataset header", line=1)
    if game is not None:
        expected = game if isinstance(game, str) else game.name
        if header["game"] != expected:
            raise ValidationError(f"{path}: dataset is for {header['game']!r}, expected {expected!r}")
    g = make_game(header["game"], **header.get("params", {}))
    if isinstance(game, Game) and g != game:
        raise ValidationError(f"{path}: game parameters {g.params} differ from {game.params}")
    trajs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = _parse(line, lineno)
        try:
            events = tuple(Event(int(a), int(b), c, None if p is None else float(p)) for a, b, c, p in obj["events"])
            traj = ExtensiveTrajectory(events, tuple(float(r) for r in obj["returns"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError(f"malformed trajectory ({exc})", line=lineno) from None
        trajs.append(traj)
    if len(trajs) != header["n_trajectories"]:
        raise DatasetFormatError(
            f"header promises {header['n_trajectories']} trajectories, found {len(trajs)}", line=len(lines)
        )
    return GameDataset(g, trajs, header.get("metadata", {})).validate()


def _parse(line, lineno):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON ({exc.msg})", line=lineno) from None
    if not isinstance(obj, dict):
        raise DatasetFormatError("expected a JSON object", line=lineno)
    return obj

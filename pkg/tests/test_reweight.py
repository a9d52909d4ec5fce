import numpy as np
import pytest

from offfsp import dataset as ds
from offfsp.exceptions import DegenerateDatasetError
from offfsp.games import make_game
from offfsp.policy import BehaviorPolicy, uniform_profile
from offfsp.reweight import (
    EstimatorConsistencyError,
    WeightedPlayerDataset,
    generate_data,
    opponent_ratio,
    resample_batch,
    resample_indices,
)
from offfsp.tree import get_tree

from . import oracles


def test_reweighting_recovers_online_distribution_on_kuhn(rng):
    game = make_game("kuhn")
    tree = get_tree(game)
    d = ds.exact_proportion_dataset(game, uniform_profile(), 4800)
    emp = ds.empirical_behavior_policy(d)
    for _ in range(3):
        target = BehaviorPolicy(oracles.random_behavior(game, 1, rng))
        store = tree.sequence_form(1, target.to_flat(tree, 1))
        wd = generate_data(d, 0, store, emp[1])
        got = oracles.reweighted_tuple_distribution(wd)
        want = oracles.online_tuple_distribution(game, BehaviorPolicy(), target, 0)
        assert oracles.l1(got, want) < 1e-12


def test_array_and_event_routes_agree(rng):
    game = make_game("leduc")
    tree = get_tree(game)
    d = ds.sample_dataset(game, uniform_profile(), 300, seed=5)
    emp = ds.empirical_behavior_policy(d)
    target = BehaviorPolicy(oracles.random_behavior(game, 0, rng))
    wd = generate_data(d, 1, tree.sequence_form(0, target.to_flat(tree, 0)), emp[0])
    k = 0
    for traj in d:
        for i in range(len(traj.decisions(1))):
            w = opponent_ratio(traj, i, target, emp[0], owner=1, game=game)
            assert wd.weights[k] == pytest.approx(w, rel=1e-12)
            k += 1
    assert k == len(wd)


def test_dict_numerator_equals_array_numerator():
    game = make_game("rps")
    d = ds.make_rps_d1()
    emp = ds.empirical_behavior_policy(d)
    a = generate_data(d, 0, np.array([0.2, 0.3, 0.5]), emp[1])
    b = generate_data(d, 0, {("p1", 0): 0.2, ("p1", 1): 0.3, ("p1", 2): 0.5}, emp[1])
    assert np.array_equal(a.weights, b.weights)
    # RPS: weight = target(a1) / 0.6 or / 0.2
    assert sorted(set(np.round(a.weights, 12))) == sorted({round(0.2 / 0.6, 12), round(0.3 / 0.2, 12), round(0.5 / 0.2, 12)})
    assert game.name == "rps"


def test_identity_reweighting_gives_unit_weights():
    d = ds.make_rps_d1()
    emp = ds.empirical_behavior_policy(d)
    wd = generate_data(d, 1, emp[0].to_flat(get_tree(d.game), 0), emp[0])
    assert np.allclose(wd.weights, 1.0)


def test_clip_caps_weights():
    d = ds.make_rps_d1()
    emp = ds.empirical_behavior_policy(d)
    wd = generate_data(d, 0, np.array([0.0, 0.0, 1.0]), emp[1], clip=2.0)
    assert wd.weights.max() == 2.0


def test_zero_support_target_is_degenerate():
    d = ds.make_rps_d2()
    emp = ds.empirical_behavior_policy(d)
    wd = generate_data(d, 0, np.array([0.0, 0.0, 0.0, 1.0]), emp[1])
    # Rock2 was seen once, so this target still has support
    assert wd.total > 0
    wd = WeightedPlayerDataset(wd.base, np.zeros(len(wd)))
    with pytest.raises(DegenerateDatasetError):
        wd.probabilities


def test_zero_empirical_probability_is_inconsistent():
    d = ds.make_rps_d1()
    bad = BehaviorPolicy({"p1": [1.0, 0.0, 0.0]})
    with pytest.raises(EstimatorConsistencyError):
        generate_data(d, 0, np.ones(3) / 3, bad)
    with pytest.raises(EstimatorConsistencyError):
        opponent_ratio(next(t for t in d if t.events[1].action == 1), 0, bad, bad, owner=0)


def test_resampling_frequencies_follow_weights():
    d = ds.make_rps_d1()
    emp = ds.empirical_behavior_policy(d)
    wd = generate_data(d, 0, np.array([0.0, 1.0, 0.0]), emp[1])
    idx = resample_indices(wd, 20000, np.random.default_rng(0))
    chosen = wd.base.arrays["traj"][idx]
    assert all(d.trajectories[i].events[1].action == 1 for i in chosen[:500])
    batch = resample_batch(wd, 64, np.random.default_rng(1))
    assert len(batch) == 64 and all(t.reward in (1.0, 0.0, -1.0) for t in batch)


def test_resampling_is_unbiased_for_mixed_weights():
    d = ds.make_rps_d1()
    emp = ds.empirical_behavior_policy(d)
    wd = generate_data(d, 0, np.array([0.5, 0.25, 0.25]), emp[1])
    idx = resample_indices(wd, 200_000, np.random.default_rng(3))
    acts = np.array([d.trajectories[i].events[1].action for i in wd.base.arrays["traj"][idx]])
    freq = np.bincount(acts, minlength=3) / len(acts)
    assert np.allclose(freq, [0.5, 0.25, 0.25], atol=0.01)

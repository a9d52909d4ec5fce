"""End-to-end acceptance checks, one test per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion with the measured numbers.
"""

import json
import time

import numpy as np
import pytest

from offfsp import dataset as ds
from offfsp.cli import build_dataset, main
from offfsp.games import GAMES, make_game
from offfsp.off_fsp import AveragePolicyStore, OffFSPConfig, behavior_from_store, run_baseline, run_off_fsp, update_average_policy
from offfsp.offline_rl import LearnerConfig, QTable, bcq_mask, cql_step, crr_policy, learn_bc, learn_best_response, td_step
from offfsp.policy import BehaviorPolicy, uniform_profile
from offfsp.reweight import WeightedPlayerDataset, _projection, generate_data
from offfsp.solver import expected_value_flat, fp_solve, nash_conv, nash_conv_flat, simulate_returns
from offfsp.tree import get_tree

from . import oracles

SEEDS = range(5)


def unit(d, player):
    pd = _projection(d, player)
    return WeightedPlayerDataset(pd, pd.weights)


def off_fsp_median(d, learner, iterations, seeds):
    finals = [
        run_off_fsp(d, OffFSPConfig(iterations=iterations, learner=learner, eval_every=iterations, seed=s)).nash_conv
        for s in seeds
    ]
    return float(np.median(finals)), finals


def random_flats(tree, rng):
    flats = []
    for idx in tree.players:
        g = rng.gamma(1.0, size=idx.n_sa)
        flats.append(g / np.add.reduceat(g, idx.offset)[idx.sa_state])
    return flats


@pytest.mark.criterion(1, "RPS D1 analytic anchors")
def test_rps_d1_anchors(record_property):
    t0 = time.perf_counter()
    d = ds.make_rps_d1()
    bc = [learn_bc(unit(d, p)).flat for p in (0, 1)]
    assert bc[0].tolist() == [0.6, 0.2, 0.2] and bc[1].tolist() == [0.6, 0.2, 0.2]
    rep = nash_conv_flat(get_tree(d.game), bc)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"BC {bc[0].tolist()}, gains {rep.per_player_gain}, NashConv {rep.total:.12f}")
    assert rep.per_player_gain == pytest.approx((0.4, 0.4), abs=1e-9)
    assert rep.total == pytest.approx(0.8, abs=1e-9)
    assert elapsed < 1.0


@pytest.mark.criterion(2, "Off-FSP-CQL on RPS D1 below 0.1 in 500 iterations")
def test_off_fsp_cql_on_d1(record_property):
    t0 = time.perf_counter()
    med, finals = off_fsp_median(ds.make_rps_d1(), LearnerConfig(), 500, SEEDS)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"median NashConv {med:.4f} over seeds {[round(f, 4) for f in finals]}")
    assert med < 0.1
    assert elapsed < 120


@pytest.mark.criterion(3, "RPS D2 separation, Q-learning minus CQL >= 0.3")
def test_partial_coverage_separation_on_d2(record_property):
    t0 = time.perf_counter()
    d = ds.make_rps_d2()
    q_med, q_all = off_fsp_median(d, LearnerConfig(algorithm="qlearning"), 500, SEEDS)
    c_med, c_all = off_fsp_median(d, LearnerConfig(algorithm="cql"), 500, SEEDS)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"qlearning {q_med:.4f} {[round(f, 3) for f in q_all]}, cql {c_med:.4f} {[round(f, 3) for f in c_all]}")
    assert q_med - c_med >= 0.3
    assert elapsed < 240


@pytest.mark.criterion(4, "Kuhn reweighting reproduces the online tuple distribution")
def test_reweighting_oracle_on_kuhn(record_property):
    t0 = time.perf_counter()
    game = make_game("kuhn")
    tree = get_tree(game)
    d = ds.exact_proportion_dataset(game, uniform_profile(), 4800)
    emp = ds.empirical_behavior_policy(d)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(20):
        player = i % 2
        target = BehaviorPolicy(oracles.random_behavior(game, 1 - player, rng, 0.5))
        store = tree.sequence_form(1 - player, target.to_flat(tree, 1 - player))
        wd = generate_data(d, player, store, emp[1 - player])
        got = oracles.reweighted_tuple_distribution(wd)
        want = oracles.online_tuple_distribution(game, emp[player], target, player)
        worst = max(worst, oracles.l1(got, want))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max L1 over 20 targets {worst:.2e}")
    assert worst < 1e-9
    assert elapsed < 30


@pytest.mark.criterion(5, "realization equivalence of mixtures on Kuhn, K <= 3")
def test_realization_equivalence(record_property):
    game = make_game("kuhn")
    tree = get_tree(game)
    rng = np.random.default_rng(7)
    worst = 0.0
    for K in (1, 2, 3):
        members = [[BehaviorPolicy(oracles.random_behavior(game, p, rng, 0.5)) for p in (0, 1)] for _ in range(K)]
        store = AveragePolicyStore(game, [np.full(idx.n_sa, 0.5) for idx in tree.players])
        for m in members:
            update_average_policy(store, [m[p].to_flat(tree, p) for p in (0, 1)])
        mixed = behavior_from_store(store)
        for p in (0, 1):
            got = oracles.sequence_realizations(game, p, mixed[p])
            want = {}
            for m in members:
                for seq, x in oracles.sequence_realizations(game, p, m[p]).items():
                    want[seq] = want.get(seq, 0.0) + x / K
            assert set(got) == set(want)
            worst = max(worst, max(abs(got[s] - want[s]) for s in want))
    record_property("detail", f"max realization error {worst:.2e}")
    assert worst < 1e-9


@pytest.mark.criterion(6, "exact-solver suite")
def test_exact_solver_suite(record_property):
    rng = np.random.default_rng(11)
    lowest = {}
    for name in sorted(GAMES):
        tree = get_tree(make_game(name))
        lowest[name] = min(nash_conv_flat(tree, random_flats(tree, rng)).total for _ in range(1000))
    rps = make_game("rps")
    uniform_nc = nash_conv(rps, uniform_profile()).total
    final = fp_solve(rps, 500, checkpoint_every=500)[-1][1]
    linf = max(np.abs(final[p].probs(f"p{p}", 3) - 1 / 3).max() for p in (0, 1))
    z = {}
    for name in ("kuhn", "leduc"):
        tree = get_tree(make_game(name))
        flats = random_flats(tree, rng)
        prof = tuple(BehaviorPolicy.from_flat(tree, p, flats[p]) for p in (0, 1))
        r = simulate_returns(tree.game, prof, 100_000, rng)
        z[name] = abs(r.mean() - expected_value_flat(tree, flats)[0]) / (r.std() / np.sqrt(len(r)))
    record_property(
        "detail",
        f"min NashConv {min(lowest.values()):.3e}, uniform RPS {uniform_nc}, fp L-inf {linf:.4f}, "
        f"MC z-scores {', '.join(f'{k} {v:.2f}' for k, v in z.items())}",
    )
    assert all(v >= 0 for v in lowest.values())
    assert uniform_nc == 0.0
    assert linf < 0.05
    assert all(v < 3 for v in z.values())


@pytest.mark.criterion(7, "Leduc mix:0 ordering, Off-FSP-CQL below BC and single-agent CQL")
def test_leduc_ordering(record_property):
    t0 = time.perf_counter()
    game = make_game("leduc")
    learner = LearnerConfig()
    off, bc, sa = [], [], []
    for seed in range(3):
        d = build_dataset(game, "mix:0", 10_000, seed)
        off.append(run_off_fsp(d, OffFSPConfig(iterations=200, learner=learner, eval_every=200, seed=seed)).nash_conv)
        bc.append(run_baseline(d, learner.with_(algorithm="bc"), seed)[1])
        sa.append(run_baseline(d, learner, seed)[1])
    med = {k: float(np.median(v)) for k, v in (("off_fsp_cql", off), ("bc", bc), ("single_agent_cql", sa))}
    elapsed = time.perf_counter() - t0
    record_property("detail", ", ".join(f"{k} {v:.3f}" for k, v in med.items()))
    assert med["off_fsp_cql"] < med["bc"]
    assert med["off_fsp_cql"] < med["single_agent_cql"]
    assert elapsed < 1800


@pytest.mark.criterion(8, "learner unit suite")
def test_learner_unit_suite(record_property, tmp_path):
    kuhn = make_game("kuhn")
    rng = np.random.default_rng(5)
    # CQL with alpha = 0 is the plain TD step, bit for bit
    batch = [ds.PlayerTuple("p0|Q|", a % 2, float(rng.normal()), "p0|Q|pb", -1) for a in range(7)]
    batch.append(ds.PlayerTuple("p0|Q|pb", 1, 1.0, ds.TERMINAL_KEY, -1))
    q = QTable(kuhn, 0, values=rng.normal(size=12))
    target = QTable(kuhn, 0, values=rng.normal(size=12))
    assert np.array_equal(cql_step(q, target, batch, 0.9, 0.05, 0.0).values, td_step(q, target, batch, 0.9, 0.05).values)
    # BCQ mask examples
    assert bcq_mask(BehaviorPolicy({"p0": [0.6, 0.2, 0.2]}), "p0", 0.1) == {0, 1, 2}
    assert bcq_mask(BehaviorPolicy({"p0": [0.98, 0.02, 0.0]}), "p0", 0.1) == {0}
    assert bcq_mask(BehaviorPolicy({"p0": [0.98, 0.02, 0.0]}), "p0", 0.0) == {0, 1}
    # CRR with a unit ratio bound is weighted behavior cloning
    d = ds.sample_dataset(kuhn, uniform_profile(), 400, seed=1)
    pd = _projection(d, 1)
    wd = WeightedPlayerDataset(pd, rng.uniform(0.1, 3.0, size=len(pd)))
    q1 = QTable(kuhn, 1, values=rng.normal(size=12) * 5)
    assert np.allclose(crr_policy(q1, wd, 0.5, 1.0).flat, learn_bc(wd).flat, rtol=0, atol=1e-15)
    # determinism: learners and whole runs
    for algorithm in ("qlearning", "cql", "bcq", "crr"):
        cfg = LearnerConfig(algorithm=algorithm, steps=200)
        a = learn_best_response(unit(ds.make_rps_d1(), 0), None, cfg, np.random.default_rng(9))[1]
        b = learn_best_response(unit(ds.make_rps_d1(), 0), None, cfg, np.random.default_rng(9))[1]
        assert a.values.tobytes() == b.values.tobytes()
    cfg = {"game": "kuhn", "recipe": "exact", "n_trajectories": 240, "iterations": 5, "learner": {"steps": 100}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    for name in ("a", "b"):
        assert main(["run", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / name)]) == 0
    same = [f for f in ("report.csv", "store.json", "summary.csv") if (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()]
    record_property("detail", f"byte-identical run outputs: {', '.join(same)}")
    assert len(same) == 3

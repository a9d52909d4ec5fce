import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from offfsp import dataset as ds
from offfsp.estimators import BehaviorCloning, OfflineBestResponse, OffFSP
from offfsp.exceptions import ValidationError
from offfsp.games import make_game
from offfsp.policy import uniform_profile


def test_behavior_cloning_on_d1():
    est = BehaviorCloning().fit(ds.make_rps_d1())
    assert est.predict_proba(["p0", "p1"])[0].tolist() == pytest.approx([0.6, 0.2, 0.2])
    assert est.predict(["p0", "p1"]).tolist() == [0, 0]
    assert est.score() == pytest.approx(-0.8, abs=1e-12)


def test_fit_from_a_path(tmp_path):
    ds.save(ds.make_rps_d1(), tmp_path / "d1.jsonl")
    est = BehaviorCloning().fit(str(tmp_path / "d1.jsonl"))
    assert est.nash_conv() == pytest.approx(0.8, abs=1e-12)


def test_params_and_clone():
    est = OffFSP(iterations=7, cql_alpha=0.5, seed=3)
    params = est.get_params()
    assert params["iterations"] == 7 and params["cql_alpha"] == 0.5 and params["seed"] == 3
    assert params["learning_rate"] is None
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(iterations=2)
    assert twin.iterations == 2 and est.iterations == 7


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        OffFSP().predict(["p0"])
    with pytest.raises(ValidationError):
        BehaviorCloning().fit([1, 2, 3])
    with pytest.raises(ValidationError):
        BehaviorCloning().fit(ds.GameDataset(make_game("rps"), []))
    est = BehaviorCloning().fit(ds.make_rps_d1())
    with pytest.raises(ValidationError):
        est.predict("p0")
    with pytest.raises(KeyError):
        est.predict(["nope"])
    with pytest.raises(ValidationError):
        OffFSP(algorithm="dqn").fit(ds.make_rps_d1())


def test_single_agent_best_response_exploits_d1():
    est = OfflineBestResponse(algorithm="qlearning", steps=500).fit(ds.make_rps_d1())
    assert est.predict(["p0", "p1"]).tolist() == [1, 1]
    assert len(est.q_tables_) == 2
    assert est.nash_conv() == pytest.approx(2.0, abs=1e-12)


def test_off_fsp_estimator_matches_the_runner():
    from offfsp.off_fsp import OffFSPConfig, run_off_fsp
    from offfsp.offline_rl import LearnerConfig

    d = ds.exact_proportion_dataset(make_game("kuhn"), uniform_profile(), 480)
    est = OffFSP(iterations=5, steps=50, eval_every=5, seed=1).fit(d)
    res = run_off_fsp(d, OffFSPConfig(iterations=5, learner=LearnerConfig(steps=50), eval_every=5, seed=1))
    assert est.nash_conv_ == res.nash_conv
    assert est.score() == pytest.approx(-res.nash_conv, abs=1e-12)
    for p in (0, 1):
        assert np.array_equal(est.flats_[p], res.store.behavior[p])
    assert est.store_.k == 5 and len(est.report_.records) == 5
    probs = est.predict_proba(["p0|K|", "p1|J|b"])
    assert all(v.sum() == pytest.approx(1.0) for v in probs)
    assert est.profile_[0]["p0|K|"] == pytest.approx(probs[0])

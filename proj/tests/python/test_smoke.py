import math

import pytest

import feame


def test_simulate_and_estimate():
    ys = feame.simulate("FinMix+1", 2000, 4, 7)
    assert len(ys) == 2000 and all(len(y) == 4 for y in ys)
    assert ys == feame.simulate("FinMix+1", 2000, 4, 7)
    est = feame.estimate(ys)
    assert est["converged"]
    assert abs(est["theta"]["beta"][0] - 1.0) < 0.3
    assert est["T"] == 4


def test_weights_table():
    t = feame.weights(4, 1.0)
    w = {tuple(e["s"]): e["w"] for e in t["entries"]}
    assert w[(0, 0, 1)] == pytest.approx((math.e - 1) / 2, rel=1e-12)
    c = feame.weights(4, 1.0, closed_form=True)
    assert [e["w"] for e in c["entries"]] == pytest.approx([e["w"] for e in t["entries"]], rel=1e-10, abs=1e-14)


def test_true_ame():
    assert feame.true_ame(1.0, "NoUH+1") == pytest.approx(0.2311, abs=1e-4)
    het = {"kind": "finite_mixture", "points": [-1.0, 0.5], "probs": [0.3, 0.7]}
    assert feame.true_ame(1.0, het) == pytest.approx(0.2059, abs=1e-4)


def test_ame_estimators_agree():
    ys = feame.simulate("FinMix+1", 3000, 4, 11)
    a3 = feame.ame1(ys, 1.0)
    aw = feame.ame1_from_weights(ys, 1.0)
    assert abs(a3 - 0.2059) < 0.05
    assert abs(aw - 0.2059) < 0.05
    assert feame.ame_n(ys, 1.0, 1) == pytest.approx(a3)
    p11 = feame.avg_transition(ys, [[0, 0], [0, 1.0]], 1)
    p00 = feame.avg_transition(ys, [[0, 0], [0, 1.0]], 0)
    assert p11 + p00 - 1 == pytest.approx(a3, abs=1e-12)


def test_re_mle_and_hausman():
    ys = feame.simulate("FinMix-1", 3000, 4, 5)
    nouh = feame.re_mle(ys, "nouh")
    assert nouh["model"] == "nouh" and nouh["converged"]
    h = feame.hausman((0.1, 0.02), (0.0, 0.01))
    assert h["valid"] and h["statistic"] == pytest.approx(1.0)
    assert h["p_value"] == pytest.approx(0.3173, abs=1e-4)


def test_errors():
    with pytest.raises(feame.IdentificationError):
        feame.estimate([[0, 0, 0, 0], [1, 1, 1, 1]])
    with pytest.raises(ValueError):
        feame.simulate("Nope+1", 10, 4, 1)


def test_small_experiment():
    res = feame.run_experiment({"dgp": "FinMix(-1)", "N": 300, "T": 4, "R": 3, "estimators": ["fe", "nouh"], "seed": 2})
    assert res["estimators"]["fe"]["n"] == 3


def test_nouh_initial_condition():
    ys = feame.simulate("FinMix-1", 3000, 4, 9)
    cond = feame.re_mle(ys, model="nouh")
    joint = feame.re_mle(ys, model="nouh", initial="joint")
    assert cond["initial_condition"] == "conditional"
    assert joint["initial_condition"] == "joint" and len(joint["initial_probs"]) == 1
    assert cond["beta"] != joint["beta"]

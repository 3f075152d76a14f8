import numpy as np
import pytest
from hypothesis import given, strategies as st

from biglearn_gmm.errors import LengthMismatch
from biglearn_gmm.gmm import GmmParams, log_likelihood, standard_normal
from biglearn_gmm.metrics import MetricsReport, ari, assign_clusters, contingency, evaluate, mean_joint_ll, nmi

from oracles import ari_bruteforce, nmi_plugin, partitions

labelings = st.lists(st.integers(0, 3), min_size=2, max_size=30)


def test_nmi_examples():
    assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0, abs=1e-15)
    assert nmi([0, 0, 1, 1], [0, 0, 0, 0]) == 0.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)
    assert nmi([0, 0, 0], [1, 1, 1]) == 0.0


def test_ari_examples():
    assert ari([0, 0, 1, 1, 2], [5, 5, 3, 3, 9]) == 1.0
    assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == -0.5
    assert ari([0, 1], [0, 0]) == 0.0


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        nmi([0, 1], [0, 1, 1])
    with pytest.raises(LengthMismatch):
        ari([0, 1], [0])


def test_contingency_table():
    np.testing.assert_array_equal(contingency([0, 0, 1, 2], [5, 7, 7, 7]), [[1, 1], [0, 1], [0, 1]])


@pytest.mark.parametrize("n", range(2, 6))
def test_exhaustive_small_oracle(n):
    parts = list(partitions(n))
    for t in parts:
        for p in parts:
            assert ari(t, p) == ari_bruteforce(t, p)
            assert abs(nmi(t, p) - nmi_plugin(t, p)) < 1e-12


@given(labelings, st.data())
def test_relabeling_invariance(truth, data):
    pred = data.draw(st.lists(st.integers(0, 3), min_size=len(truth), max_size=len(truth)))
    perm = data.draw(st.permutations(range(4)))
    relabeled = [perm[v] for v in pred]
    assert ari(truth, pred) == ari(truth, relabeled)
    assert nmi(truth, pred) == pytest.approx(nmi(truth, relabeled), abs=1e-12)
    assert nmi(truth, pred) == pytest.approx(nmi(pred, truth), abs=1e-12)


@given(labelings, st.data())
def test_ranges_and_oracles(truth, data):
    pred = data.draw(st.lists(st.integers(0, 3), min_size=len(truth), max_size=len(truth)))
    v = nmi(truth, pred)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(nmi_plugin(truth, pred), abs=1e-12)
    a = ari(truth, pred)
    assert a <= 1.0
    assert a == ari_bruteforce(truth, pred)


@given(labelings)
def test_self_agreement(labels):
    assert ari(labels, labels) == 1.0
    if len(set(labels)) > 1:
        assert nmi(labels, labels) == pytest.approx(1.0, abs=1e-12)


def test_ari_expectation_zero_under_independence():
    rng = np.random.default_rng(0)
    vals = [ari(rng.integers(0, 3, 60), rng.integers(0, 4, 60)) for _ in range(3000)]
    assert abs(np.mean(vals)) < 3 * np.std(vals) / np.sqrt(len(vals))


def test_assign_clusters():
    assert np.all(assign_clusters(standard_normal(2), np.random.default_rng(0).normal(size=(9, 2))) == 0)
    m = GmmParams([0.5, 0.5], [[-10.0], [10.0]], np.ones((2, 1, 1)))
    np.testing.assert_array_equal(assign_clusters(m, [[10.0], [-10.0]]), [1, 0])
    assert assign_clusters(m, [[0.0]])[0] == 0


def test_mean_joint_ll():
    m = GmmParams([0.3, 0.7], [[-1.0], [2.0]], [[[1.0]], [[0.5]]])
    assert mean_joint_ll(m, [[0.4]]) == pytest.approx(log_likelihood(m, [0.4]), abs=1e-15)
    assert mean_joint_ll(standard_normal(1), [[0.0]]) == pytest.approx(-0.9189385, abs=1e-7)
    X = np.random.default_rng(1).normal(size=(10, 1))
    assert mean_joint_ll(m, np.vstack([X, X])) == pytest.approx(mean_joint_ll(m, X), abs=1e-13)
    with pytest.raises(ValueError):
        mean_joint_ll(m, np.zeros((0, 1)))


def test_evaluate_and_report():
    m = GmmParams([0.5, 0.5], [[-10.0], [10.0]], np.ones((2, 1, 1)))
    X = np.array([[-10.0], [-9.0], [9.5], [10.0]])
    rep = evaluate(m, X, [3, 3, 1, 1])
    assert rep.nmi == pytest.approx(1.0) and rep.ari == 1.0 and rep.kl is None
    assert set(rep.to_dict()) == {"nmi", "ari", "joint_ll", "kl"}
    assert evaluate(m, X).nmi is None
    assert MetricsReport(0.5, 0.25, -1.0, 0.1).to_json() == '{"ari": 0.25, "joint_ll": -1.0, "kl": 0.1, "nmi": 0.5}'

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import _sse, kmeans_subset_oracle, kmeans_threshold_oracle
from robustfl.aggregators import ClientUpdate
from robustfl.detector import detection_metrics, kmeans2_1d, score_updates, select_benign
from robustfl.errors import DimensionMismatch, UnknownClientId

score_lists = st.lists(st.floats(0, 1e3, allow_nan=False), min_size=1, max_size=64)


def split_cost(scores, sc, lc):
    near = [s for s in scores if abs(s - sc) <= abs(s - lc)]
    far = [s for s in scores if abs(s - sc) > abs(s - lc)]
    return sum(_sse(g) for g in (near, far) if g)


def test_score_examples():
    ups = [ClientUpdate(0, [3.0, 4.0]), ClientUpdate(1, [0.0, 0.0])]
    assert score_updates(ups, np.zeros(2)) == [(0, 5.0), (1, 0.0)]
    assert score_updates(list(reversed(ups)), np.zeros(2)) == [(1, 0.0), (0, 5.0)]
    with pytest.raises(DimensionMismatch):
        score_updates(ups, np.zeros(3))


@pytest.mark.parametrize("scores, sc, lc", [
    ([0.4] * 5, 0.4, 0.4),
    ([0.1, 0.12, 0.9, 1.0], 0.11, 0.95),
    ([0.0, 0.0, 10.0], 0.0, 10.0),
])
def test_kmeans_examples(scores, sc, lc):
    got = kmeans2_1d(scores, seed=0)
    assert got == pytest.approx((sc, lc), abs=1e-15)


@given(score_lists)
def test_kmeans_equals_threshold_optimum(scores):
    sc, lc = kmeans2_1d(scores, seed=0)
    cost, osc, olc = kmeans_threshold_oracle(scores)
    assert sc <= lc
    assert (sc, lc) == (osc, olc)


@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=2, max_size=9))
def test_threshold_split_is_global_optimum(scores):
    sc, lc = kmeans2_1d(scores)
    if sc == lc:
        assert len(set(scores)) == 1
        return
    best = kmeans_subset_oracle(scores)
    assert kmeans_threshold_oracle(scores)[0] == best
    assert float(split_cost(scores, sc, lc)) == pytest.approx(float(best), rel=1e-9, abs=1e-12)


def test_select_benign_examples():
    assert select_benign([(0, 0.12)], 0.11, 0.95).benign_ids == {0}
    assert select_benign([(4, 1.0)], 0.0, 2.0).malicious_ids == {4}
    rep = select_benign([(0, 0.3), (1, 9.0)], 0.5, 0.5)
    assert rep.benign_ids == {0, 1} and not rep.malicious_ids


@given(score_lists)
def test_report_invariants_and_monotonicity(scores):
    pairs = list(enumerate(scores))
    sc, lc = kmeans2_1d(scores)
    rep = select_benign(pairs, sc, lc)
    assert rep.sc <= rep.lc
    assert rep.benign_ids | rep.malicious_ids == set(range(len(scores)))
    assert not rep.benign_ids & rep.malicious_ids
    assert rep.benign_ids
    worst_benign = max(scores[i] for i in rep.benign_ids)
    assert all(i in rep.benign_ids for i, s in pairs if s <= worst_benign)


@st.composite
def separated(draw):
    d = draw(st.floats(0.01, 1.0))
    D = draw(st.floats(3.0001, 20.0)) * d
    n_good = draw(st.integers(1, 15))
    n_bad = draw(st.integers(1, 15))
    dim = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2**31))
    return d, D, n_good, n_bad, dim, seed


def _at_distance(rng, centre, r):
    v = rng.standard_normal(centre.size)
    return centre + r * v / np.linalg.norm(v)


@given(separated())
def test_separation_property(case):
    d, D, n_good, n_bad, dim, seed = case
    rng = np.random.default_rng(seed)
    forecast = rng.standard_normal(dim)
    ups = [ClientUpdate(i, _at_distance(rng, forecast, rng.uniform(0, d))) for i in range(n_good)]
    bad = set(range(n_good, n_good + n_bad))
    ups += [ClientUpdate(i, _at_distance(rng, forecast, rng.uniform(D, D + d))) for i in bad]
    scores = score_updates(ups, forecast)
    rep = select_benign(scores, *kmeans2_1d([s for _, s in scores]))
    assert rep.malicious_ids == bad


def test_detection_metrics_examples():
    assert detection_metrics({3, 5}, {3, 5}) == (1.0, 1.0, 1.0)
    p, r, f1 = detection_metrics({3}, {3, 5})
    assert (p, r) == (1.0, 0.5) and f1 == pytest.approx(2 / 3)
    assert detection_metrics(set(), set()) == (1.0, 1.0, 1.0)
    assert detection_metrics({1}, {2}) == (0.0, 0.0, 0.0)
    rep = select_benign([(0, 0.1), (1, 5.0), (2, 5.1)], 0.1, 5.05)
    assert detection_metrics(rep, {1, 2}) == (1.0, 1.0, 1.0)
    with pytest.raises(UnknownClientId):
        detection_metrics(rep, {7})

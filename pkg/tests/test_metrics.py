import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualnoise.ensemble import report_from_probs
from dualnoise.errors import UndefinedMetricError
from dualnoise.metrics import accuracy, auroc, filter_quality


def pair_count_auroc(scores, flags):
    """O(n^2) oracle: P(positive scores below negative), ties worth 1/2."""
    pos = [s for s, f in zip(scores, flags) if f]
    neg = [s for s, f in zip(scores, flags) if not f]
    wins = sum(1.0 if p < q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


scored = st.integers(2, 50).flatmap(
    lambda n: st.tuples(
        st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.9]) | st.floats(0, 1), min_size=n, max_size=n),
        # one positive and one negative guaranteed, then shuffled
        st.lists(st.booleans(), min_size=n - 2, max_size=n - 2).flatmap(
            lambda rest: st.permutations([True, False, *rest])),
    )
)


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy(np.eye(4), [0, 1, 2, 3]) == 1.0

    def test_all_wrong(self):
        assert accuracy(np.eye(4), [1, 2, 3, 0]) == 0.0

    def test_three_of_four(self):
        assert accuracy(np.eye(4), [0, 1, 2, 0]) == 0.75

    def test_ties_go_to_lowest_index(self):
        assert accuracy(np.array([[0.5, 0.5]]), [0]) == 1.0


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 1.0

    def test_all_tied(self):
        assert auroc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5

    def test_small_example(self):
        scores, flags = [0.1, 0.4, 0.3, 0.9], [1, 0, 1, 0]
        # both flagged samples score below both unflagged ones
        assert pair_count_auroc(scores, flags) == 1.0
        assert auroc(scores, flags) == 1.0

    def test_mixed_example(self):
        scores, flags = [0.1, 0.4, 0.3, 0.9], [1, 0, 0, 1]
        assert pair_count_auroc(scores, flags) == 0.5
        assert auroc(scores, flags) == 0.5

    def test_degenerate(self):
        with pytest.raises(UndefinedMetricError):
            auroc([0.1, 0.2], [0, 0])

    @given(scored)
    def test_matches_pair_counting(self, case):
        scores, flags = case
        assert abs(auroc(scores, flags) - pair_count_auroc(scores, flags)) <= 1e-12

    @given(scored)
    def test_monotone_transform_invariance(self, case):
        scores, flags = case
        s = np.array(scores)
        # arbitrary strictly increasing map on the distinct values; exact, so no ties merge or split
        levels = np.unique(s)
        new_levels = np.cumsum(np.random.default_rng(len(s)).uniform(0.1, 5.0, size=levels.size)) - 7
        t = new_levels[np.searchsorted(levels, s)]
        assert auroc(t, flags) == pytest.approx(auroc(s, flags), abs=1e-12)

    @given(scored)
    def test_negation_complements(self, case):
        scores, flags = case
        s = np.array(scores)
        if len(set(scores)) == len(scores):
            assert auroc(s, flags) + auroc(-s, flags) == pytest.approx(1.0, abs=1e-12)


class TestFilterQuality:
    def _report(self):
        probs = np.array([[[0.9, 0.1], [0.2, 0.8], [0.5, 0.5], [0.7, 0.3]]])
        return report_from_probs(probs, labels=[0, 0, 1, 0])

    def test_perfect_label_detector(self):
        rep = self._report()
        # l_con = (0.9, 0.2, 0.5, 0.7); flips at the two lowest
        a_l, a_m = filter_quality(rep, [0, 1, 1, 0], [0, 0, 1, 0])
        assert a_l == 1.0
        assert a_m == 1.0  # m_con = (0.9, 0.8, 0.5, 0.7)

    def test_no_noisy_samples(self):
        with pytest.raises(UndefinedMetricError):
            filter_quality(self._report(), [0, 0, 0, 0], [0, 1, 0, 0])

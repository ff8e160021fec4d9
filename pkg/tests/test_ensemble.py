import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualnoise import nn
from dualnoise.ensemble import (
    Ensemble,
    confidence_report,
    decompose,
    init_ensemble,
    l_con,
    label_confidence,
    m_con,
    max_confidence,
    mi_loss_and_grad,
    uncertainty_decomposition,
    vote,
)
from dualnoise.errors import ConfigError
from helpers import FD_RTOL, max_rel_error, numeric_grads, random_net_shape


def h(*ps):
    return -math.fsum(p * math.log(p) for p in ps if p > 0)


def bias_only_member(row):
    """A net whose output is ``row`` for every input (zero weights, log-prob biases)."""
    net = nn.zero_net((2, len(row)))
    net.biases[0][:] = np.log(np.maximum(row, 1e-300))
    return net


@st.composite
def member_stacks(draw, max_m=5, max_b=6, max_c=6):
    m = draw(st.integers(1, max_m))
    b = draw(st.integers(1, max_b))
    c = draw(st.integers(2, max_c))
    logits = draw(st.lists(st.floats(-20, 20), min_size=m * b * c, max_size=m * b * c))
    return nn.softmax(np.array(logits).reshape(m, b, c))


class TestVote:
    def test_single_member_equals_forward(self, rng):
        net = nn.init_net((3, 5, 4), rng)
        x = rng.normal(size=(7, 3))
        assert np.array_equal(vote(Ensemble([net]), x), nn.forward(net, x))

    def test_two_opposed_members(self):
        ens = Ensemble([bias_only_member(np.array([1.0, 0.0])), bias_only_member(np.array([0.0, 1.0]))])
        np.testing.assert_allclose(vote(ens, np.zeros((1, 2))), [[0.5, 0.5]], atol=1e-12)

    def test_permutation_invariant(self, rng):
        ens = init_ensemble((4, 6, 3), 5, seed=3)
        x = rng.normal(size=(9, 4))
        perm = Ensemble([ens.members[i] for i in (3, 0, 4, 1, 2)])
        np.testing.assert_allclose(vote(perm, x), vote(ens, x), rtol=0, atol=1e-15)
        np.testing.assert_allclose(m_con(perm, x), m_con(ens, x), rtol=0, atol=1e-15)

    def test_empty_ensemble(self):
        with pytest.raises(ConfigError):
            Ensemble([])

    def test_members_independently_initialized(self):
        ens = init_ensemble((4, 6, 3), 3, seed=0)
        assert not np.array_equal(ens.members[0].weights[0], ens.members[1].weights[0])
        again = init_ensemble((4, 6, 3), 3, seed=0)
        assert all(np.array_equal(a.weights[0], b.weights[0]) for a, b in zip(ens.members, again.members))


class TestConfidence:
    def test_lcon_one_hot(self):
        assert label_confidence(np.array([[0.0, 1.0, 0.0]]), [1])[0] == 1.0

    def test_lcon_uniform_100(self):
        assert label_confidence(np.full((2, 100), 0.01), [5, 99]) == pytest.approx([0.01, 0.01])

    def test_lcon_hand_average(self):
        ens = Ensemble([bias_only_member(np.array([0.6, 0.4])), bias_only_member(np.array([0.2, 0.8]))])
        assert l_con(ens, np.zeros((1, 2)), [0])[0] == pytest.approx((0.6 + 0.2) / 2, abs=1e-12)

    def test_lcon_label_out_of_range(self):
        with pytest.raises(IndexError):
            label_confidence(np.full((1, 3), 1 / 3), [3])

    def test_mcon_values(self):
        assert max_confidence(np.full((1, 10), 0.1))[0] == pytest.approx(0.1)
        assert max_confidence(np.array([[0.0, 1.0]]))[0] == 1.0
        assert max_confidence(np.array([[0.2, 0.5, 0.3]]))[0] == 0.5

    @given(member_stacks())
    def test_mcon_at_least_uniform(self, probs):
        mean = probs.mean(axis=0)
        assert np.all(max_confidence(mean) >= 1.0 / probs.shape[2] - 1e-12)


class TestDecomposition:
    def test_identical_members(self, rng):
        net = nn.init_net((3, 4, 5), rng)
        ens = Ensemble([net, net.copy(), net.copy()])
        total, data, model = uncertainty_decomposition(ens, rng.normal(size=(6, 3)))
        np.testing.assert_allclose(model, 0.0, atol=1e-9)
        np.testing.assert_allclose(total, data, atol=1e-9)

    def test_maximal_disagreement(self):
        probs = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
        total, data, model = decompose(probs)
        assert total[0] == pytest.approx(math.log(2), abs=1e-9)
        assert data[0] == pytest.approx(0.0, abs=1e-9)
        assert model[0] == pytest.approx(math.log(2), abs=1e-9)

    def test_scalar_oracle(self):
        total_o = h(0.6, 0.4)
        data_o = (h(0.7, 0.3) + h(0.5, 0.5)) / 2
        assert total_o == pytest.approx(0.673012, abs=1e-6)
        assert h(0.7, 0.3) == pytest.approx(0.610864, abs=1e-6)
        assert data_o == pytest.approx(0.652006, abs=1e-6)
        assert total_o - data_o == pytest.approx(0.021006, abs=1e-6)
        total, data, model = decompose(np.array([[[0.7, 0.3]], [[0.5, 0.5]]]))
        assert total[0] == pytest.approx(total_o, abs=1e-12)
        assert data[0] == pytest.approx(data_o, abs=1e-12)
        assert model[0] == pytest.approx(total_o - data_o, abs=1e-12)

    @given(member_stacks())
    def test_identity_and_nonnegativity(self, probs):
        total, data, model = decompose(probs)
        assert np.all(np.abs(total - data - model) <= 1e-9)
        assert np.all(model >= -1e-9)

    @given(member_stacks(), st.randoms())
    def test_permutation_invariance(self, probs, rnd):
        order = list(range(probs.shape[0]))
        rnd.shuffle(order)
        for a, b in zip(decompose(probs), decompose(probs[order])):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_report_fields(self, rng):
        ens = init_ensemble((3, 8, 4), 3, seed=1)
        x = rng.normal(size=(5, 3))
        rep = confidence_report(ens, x, labels=[0, 1, 2, 3, 0])
        np.testing.assert_allclose(rep.total_unc, rep.data_unc + rep.model_unc, atol=1e-12)
        assert rep.l_con.shape == rep.m_con.shape == (5,)
        assert np.all((rep.l_con >= 0) & (rep.l_con <= 1))


class TestMiLoss:
    def test_single_member_is_zero(self, rng):
        ens = init_ensemble((3, 5, 4), 1, seed=0)
        loss, grads = mi_loss_and_grad(ens, 0, rng.normal(size=(6, 3)))
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert all(np.allclose(g, 0.0, atol=1e-15) for g in grads.params())

    def _fd_check(self, ens, m, x):
        def loss(net):
            members = list(ens.members)
            members[m] = net
            probs = np.stack([nn.forward(k, x) for k in members])
            return float(decompose(probs)[2].mean())

        value, grads = mi_loss_and_grad(ens, m, x)
        assert value == pytest.approx(loss(ens.members[m]), abs=1e-15)
        numeric = numeric_grads(loss, ens.members[m].copy())
        return max_rel_error(grads.params(), numeric)

    def test_identical_members_stationary(self, rng):
        net = nn.init_net((3, 6, 4), rng)
        ens = Ensemble([net, net.copy()])
        x = rng.normal(size=(5, 3))
        loss, grads = mi_loss_and_grad(ens, 0, x)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert max(np.abs(g).max() for g in grads.params()) < 1e-12
        assert self._fd_check(ens, 0, x) < FD_RTOL

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(500 + seed)
        dims = random_net_shape(rng)
        M = int(rng.integers(2, 5))
        ens = init_ensemble(dims, M, seed=seed)
        x = rng.normal(size=(5, dims[0]))
        assert self._fd_check(ens, int(rng.integers(M)), x) < FD_RTOL

    def test_only_member_m_gradient(self, rng):
        ens = init_ensemble((3, 6, 4), 3, seed=2)
        x = rng.normal(size=(4, 3))
        _, g0 = mi_loss_and_grad(ens, 0, x)
        # member 1's own gradient is a different object built from member 1's backward pass
        _, g1 = mi_loss_and_grad(ens, 1, x)
        assert g0.params()[0].shape == ens.members[0].weights[0].shape
        assert not np.allclose(g0.params()[0], g1.params()[0])

    def test_bad_index(self, rng):
        ens = init_ensemble((3, 4), 2, seed=0)
        with pytest.raises(IndexError):
            mi_loss_and_grad(ens, 2, rng.normal(size=(2, 3)))

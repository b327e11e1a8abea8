import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtgcn.linalg import row_softmax
from mtgcn.losses import consistency_loss, overall_loss, pseudo_label_loss, supervised_loss
from mtgcn.pseudo import PseudoSet, certainty_weights, select_top_t

from conftest import random_probs, split_from_labeled


def make_set(indices, targets, weights):
    return PseudoSet(np.array(indices), np.array(targets), np.array(weights, dtype=float))


def fd_logits(fn, z, h=1e-6):
    g = np.zeros_like(z)
    for idx in np.ndindex(z.shape):
        old = z[idx]
        z[idx] = old + h
        up = fn(row_softmax(z))
        z[idx] = old - h
        down = fn(row_softmax(z))
        z[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


class TestSupervised:
    def test_perfect(self):
        p = np.eye(3)
        loss, _ = supervised_loss(p, np.array([0, 1, 2]), np.array([0, 1, 2]))
        assert loss == 0.0

    def test_uniform_closed_form(self):
        p = np.full((30, 7), 1 / 7)
        labels = np.arange(30) % 7
        loss, _ = supervised_loss(p, np.arange(14), labels)
        assert loss == pytest.approx(14 * math.log(7), abs=1e-10)

    def test_empty(self):
        loss, dz = supervised_loss(np.full((3, 2), 0.5), np.array([], dtype=int), np.zeros(3, int))
        assert loss == 0.0 and not dz.any()

    def test_gradient(self, rng):
        z = rng.normal(size=(6, 3))
        labels = rng.integers(0, 3, size=6)
        labeled = np.array([0, 2, 5])
        _, dz = supervised_loss(row_softmax(z), labeled, labels)
        fd = fd_logits(lambda p: supervised_loss(p, labeled, labels)[0], z)
        np.testing.assert_allclose(dz, fd, atol=1e-6)
        assert not dz[[1, 3, 4]].any()


class TestPseudoLabel:
    def test_empty(self):
        loss, dz = pseudo_label_loss(np.full((3, 2), 0.5), PseudoSet.empty())
        assert loss == 0.0 and not dz.any()

    def test_exact_match(self):
        loss, _ = pseudo_label_loss(np.array([[0.0, 1.0], [0.5, 0.5]]), make_set([0], [1], [1.0]))
        assert loss == 0.0

    def test_hand_evaluated(self):
        p = np.full((5, 2), 0.5)
        s = make_set([0, 2, 4], [0, 1, 1], [0.5, 1.0, 0.25])
        loss, _ = pseudo_label_loss(p, s)
        assert loss == pytest.approx((0.5 + 1.0 + 0.25) / 3 * math.log(2), rel=1e-15)

    def test_gradient(self, rng):
        z = rng.normal(size=(6, 3))
        s = make_set([1, 3, 4], [2, 0, 0], [0.3, 0.9, 0.6])
        _, dz = pseudo_label_loss(row_softmax(z), s)
        fd = fd_logits(lambda p: pseudo_label_loss(p, s)[0], z)
        np.testing.assert_allclose(dz, fd, atol=1e-7)


class TestConsistency:
    def test_self_is_zero(self, rng):
        p = random_probs(rng, 5, 4)
        loss, dz = consistency_loss(p, p, make_set([0, 3], [0, 0], [1, 1]))
        assert loss == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(dz, 0, atol=1e-12)

    @pytest.mark.parametrize("eps", [1e-3, 1e-6, 1e-9])
    def test_near_one_hot_peer(self, eps):
        peer = np.array([[1 - eps, eps]])
        loss, _ = consistency_loss(np.array([[0.5, 0.5]]), peer, make_set([0], [0], [1]))
        closed = (1 - eps) * math.log((1 - eps) / 0.5) + eps * math.log(eps / 0.5)
        assert loss == pytest.approx(closed, rel=1e-12)
        assert loss == pytest.approx(math.log(2), abs=eps * (abs(math.log(eps)) + 2))

    def test_gradient_identity(self, rng):
        p1, p2 = random_probs(rng, 7, 3), random_probs(rng, 7, 3)
        s = make_set([0, 4, 6], [0, 1, 2], [1, 1, 1])
        _, dz = consistency_loss(p1, p2, s)
        np.testing.assert_allclose(dz[s.indices], p1[s.indices] - p2[s.indices], atol=1e-12)
        assert not dz[[1, 2, 3, 5]].any()

    def test_gradient(self, rng):
        z = rng.normal(size=(5, 4))
        peer = random_probs(rng, 5, 4)
        s = make_set([0, 2], [1, 3], [1, 1])
        _, dz = consistency_loss(row_softmax(z), peer, s)
        fd = fd_logits(lambda p: consistency_loss(p, peer, s)[0], z)
        np.testing.assert_allclose(dz, fd, atol=1e-7)

    @given(st.integers(1, 10), st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_nonnegative(self, n, k, seed):
        rng = np.random.default_rng(seed)
        p1, p2 = random_probs(rng, n, k, 5), random_probs(rng, n, k, 5)
        assert consistency_loss(p1, p2, make_set(range(n), [0] * n, [1] * n))[0] >= 0


class TestOverall:
    def test_empty_peer_set(self, rng):
        p = random_probs(rng, 6, 3)
        labels = rng.integers(0, 3, 6)
        rep, dz = overall_loss(p, np.array([0, 1]), labels, p, PseudoSet.empty())
        sup, sdz = supervised_loss(p, np.array([0, 1]), labels)
        assert rep.total == sup and rep.pseudo == rep.consistency == 0
        np.testing.assert_array_equal(dz, sdz)

    def test_all_zero(self):
        p = np.eye(3)[[0, 1, 2, 1]] * (1 - 2e-300) + 1e-300
        rep, _ = overall_loss(p, np.array([0]), np.array([0, 1, 2, 1]), p, make_set([1, 3], [1, 1], [1, 1]))
        assert rep.total == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 10), st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_additivity_and_support(self, n, k, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(n, k))
        p, peer = row_softmax(z), random_probs(rng, n, k)
        labels = rng.integers(0, k, n)
        split = split_from_labeled(n, [0])
        s = select_top_t(peer, split, 2)
        rep, dz = overall_loss(p, split.labeled, labels, peer, s)
        parts = [
            supervised_loss(p, split.labeled, labels),
            pseudo_label_loss(p, s),
            consistency_loss(p, peer, s),
        ]
        assert rep.total == rep.sup + rep.pseudo + rep.consistency
        assert all(v >= 0 and np.isfinite(v) for v in (rep.sup, rep.pseudo, rep.consistency))
        np.testing.assert_array_equal(dz, parts[0][1] + parts[1][1] + parts[2][1])
        outside = np.setdiff1d(np.arange(n), np.concatenate([split.labeled, s.indices]))
        assert not dz[outside].any()

    def test_gradient(self, rng):
        n, k = 8, 3
        z = rng.normal(size=(n, k))
        peer = random_probs(rng, n, k)
        labels = rng.integers(0, k, n)
        split = split_from_labeled(n, [0, 1])
        s = select_top_t(peer, split, 2)
        assert len(s)
        _, dz = overall_loss(row_softmax(z), split.labeled, labels, peer, s)
        fd = fd_logits(lambda p: overall_loss(p, split.labeled, labels, peer, s)[0].total, z)
        np.testing.assert_allclose(dz, fd, atol=1e-5)
        np.testing.assert_allclose(s.weights, certainty_weights(peer[s.indices]))

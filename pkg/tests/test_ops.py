"""Reference operations against independent brute-force oracles."""

import math

import numpy as np
import pytest

from entgrid import AnnotatedDocument, build_grid, ValidationError
from entgrid.ops import (
    conv1d_transitions,
    conv2d_transitions,
    hinge_rank_loss,
    linear_score,
    lookup,
    maxpool1d,
    maxpool2d,
    relu,
)


# ------------------------------------------------------------------ oracles


def conv1d_oracle(L, weights, biases):
    """Naive triple loop: filters x windows x window elements."""
    I, J, d = L.shape
    m = weights.shape[0] // d
    N = weights.shape[1]
    seq = [L[i, j] for j in range(J) for i in range(I)]
    out = np.zeros((N, I * J - m + 1))
    for f in range(N):
        for t in range(I * J - m + 1):
            total = biases[f]
            for offset in range(m):
                for dd in range(d):
                    total += weights[offset * d + dd, f] * seq[t + offset][dd]
            out[f, t] = max(0.0, total)
    return out


def conv2d_oracle(L, weights, biases, n):
    I, J, P, d = L.shape
    m = weights.shape[0] // (n * d)
    N = weights.shape[1]
    stacked = L.reshape(I * J, P, d)
    out = np.zeros((N, I * J - m + 1, P - n + 1))
    for f in range(N):
        for r in range(I * J - m + 1):
            for c in range(P - n + 1):
                total = biases[f]
                for a in range(m):
                    for b in range(n):
                        for dd in range(d):
                            total += weights[(a * n + b) * d + dd, f] * stacked[r + a, c + b, dd]
                out[f, r, c] = max(0.0, total)
    return out


def maxpool1d_oracle(x, l):
    return np.array([max(x[i : i + l]) for i in range(0, len(x), l)])


def maxpool2d_oracle(x, l, w):
    rows = math.ceil(x.shape[0] / l)
    cols = math.ceil(x.shape[1] / w)
    out = np.zeros((rows, cols))
    for r in range(rows):
        for c in range(cols):
            block = [
                x[i, j]
                for i in range(r * l, min((r + 1) * l, x.shape[0]))
                for j in range(c * w, min((c + 1) * w, x.shape[1]))
            ]
            out[r, c] = max(block)
    return out


# ------------------------------------------------------------------- lookup


class TestLookup:
    def test_pad_index_is_zero_vector(self):
        M = np.arange(12, dtype=np.float64).reshape(4, 3)
        M[0] = 0.0
        out = lookup(np.array([[0]]), M)
        np.testing.assert_array_equal(out[0, 0], np.zeros(3))

    def test_single_cell_identity(self):
        M = np.random.default_rng(0).normal(size=(5, 4))
        out = lookup(np.array([[2]]), M)
        np.testing.assert_array_equal(out[0, 0], M[2])

    def test_conversation_tensor_shape(self):
        M = np.zeros((6, 300))
        idx = np.zeros((1, 8, 3), dtype=np.int32)
        assert lookup(idx, M).shape == (1, 8, 3, 300)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            lookup(np.array([5]), np.zeros((3, 2)))


# -------------------------------------------------------------- convolution


class TestConv1d:
    def test_lease_doc_feature_map_length(self, lease_doc):
        grid = build_grid(lease_doc)  # 4 sentences x 16 entities
        rng = np.random.default_rng(1)
        d, m, N = 5, 3, 2
        L = rng.normal(size=(grid.num_sentences, grid.num_entities, d))
        out = conv1d_transitions(L, rng.normal(size=(m * d, N)), np.zeros(N))
        assert out.shape == (N, 62)

    def test_zero_input_zero_bias_gives_zero(self):
        out = conv1d_transitions(np.zeros((3, 2, 4)), np.ones((8, 3)), np.zeros(3))
        np.testing.assert_array_equal(out, np.zeros((3, 5)))

    def test_single_window_matches_direct_formula(self):
        rng = np.random.default_rng(2)
        L = rng.normal(size=(2, 1, 3))
        w = rng.normal(size=(6, 1))
        b = rng.normal(size=1)
        out = conv1d_transitions(L, w, b)
        window = np.concatenate([L[0, 0], L[1, 0]])
        assert out.shape == (1, 1)
        np.testing.assert_allclose(out[0, 0], max(0.0, window @ w[:, 0] + b[0]), atol=1e-12)

    def test_filter_longer_than_grid_rejected(self):
        with pytest.raises(ValidationError):
            conv1d_transitions(np.zeros((2, 1, 3)), np.zeros((9, 1)), np.zeros(1))

    def test_matches_oracle_on_random_inputs(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            I, J, d = rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 4)
            m = int(rng.integers(1, I * J + 1))
            N = int(rng.integers(1, 4))
            L = rng.normal(size=(I, J, d))
            w = rng.normal(size=(m * d, N))
            b = rng.normal(size=N)
            np.testing.assert_allclose(
                conv1d_transitions(L, w, b), conv1d_oracle(L, w, b), atol=1e-10
            )


class TestConv2d:
    def test_registry_shape(self):
        # single entity, depth 8, 3 paths; 2x2 filter -> 7x2 map
        rng = np.random.default_rng(4)
        L = rng.normal(size=(1, 8, 3, 4))
        out = conv2d_transitions(L, rng.normal(size=(2 * 2 * 4, 5)), np.zeros(5), n=2)
        assert out.shape == (5, 7, 2)

    def test_width_one_reduces_to_conv1d_per_path(self):
        rng = np.random.default_rng(5)
        I, J, P, d, m, N = 2, 3, 2, 3, 2, 4
        L = rng.normal(size=(I, J, P, d))
        w = rng.normal(size=(m * d, N))
        b = rng.normal(size=N)
        out = conv2d_transitions(L, w, b, n=1)
        for p in range(P):
            column = conv1d_transitions(L[:, :, p, :], w, b)
            np.testing.assert_allclose(out[:, :, p], column, atol=1e-12)

    def test_all_pad_window_outputs_relu_bias(self):
        L = np.zeros((1, 4, 2, 3))  # zero embeddings stand in for padding cells
        b = np.array([0.7, -0.5])
        out = conv2d_transitions(L, np.ones((2 * 1 * 3, 2)), b, n=1)
        np.testing.assert_allclose(out[0], 0.7)
        np.testing.assert_allclose(out[1], 0.0)

    def test_filter_wider_than_paths_rejected(self):
        with pytest.raises(ValidationError, match="filter wider than path count"):
            conv2d_transitions(np.zeros((1, 4, 2, 3)), np.zeros((2 * 3 * 3, 1)), np.zeros(1), n=3)

    def test_matches_oracle_on_random_inputs(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            I, J, P, d = rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 3)
            m = int(rng.integers(1, I * J + 1))
            n = int(rng.integers(1, P + 1))
            N = int(rng.integers(1, 3))
            L = rng.normal(size=(I, J, P, d))
            w = rng.normal(size=(m * n * d, N))
            b = rng.normal(size=N)
            np.testing.assert_allclose(
                conv2d_transitions(L, w, b, n=n), conv2d_oracle(L, w, b, n), atol=1e-10
            )


# ------------------------------------------------------------------ pooling


class TestMaxPool:
    def test_even_windows(self):
        np.testing.assert_array_equal(maxpool1d([1, 5, 3, 2, 8, 4], 3), [5, 8])

    def test_partial_final_window(self):
        np.testing.assert_array_equal(maxpool1d([1, 5, 3, 2, 8], 3), [5, 8])

    def test_global_2d_pool(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(7, 2))
        out = maxpool2d(x, 7, 2)
        assert out.shape == (1, 1)
        assert out[0, 0] == x.max()

    def test_pool_length_one_is_identity(self):
        x = np.array([3.0, -1.0, 2.0])
        np.testing.assert_array_equal(maxpool1d(x, 1), x)

    def test_matches_oracle_1d(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            size = int(rng.integers(1, 30))
            l = int(rng.integers(1, 12))
            x = rng.normal(size=size)
            np.testing.assert_allclose(maxpool1d(x, l), maxpool1d_oracle(x, l), atol=1e-12)

    def test_matches_oracle_2d(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            shape = (int(rng.integers(1, 12)), int(rng.integers(1, 8)))
            l, w = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            x = rng.normal(size=shape)
            np.testing.assert_allclose(maxpool2d(x, l, w), maxpool2d_oracle(x, l, w), atol=1e-12)


# ------------------------------------------------------------ score & hinge


class TestScoreAndLoss:
    def test_zero_features_give_bias(self):
        assert linear_score(np.zeros(4), np.ones(4), 0.25) == 0.25

    def test_dot_product(self):
        assert linear_score([2.0, 3.0], [1.0, 1.0], 0.0) == 5.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            linear_score([1.0, 2.0], [1.0], 0.0)

    def test_hinge_satisfied_margin(self):
        assert hinge_rank_loss(2.0, 0.5) == 0.0

    def test_hinge_violated_margin(self):
        assert hinge_rank_loss(0.3, 0.5) == pytest.approx(1.2)

    def test_hinge_tie(self):
        assert hinge_rank_loss(1.7, 1.7) == 1.0

    def test_relu_nonnegative(self):
        rng = np.random.default_rng(10)
        assert (relu(rng.normal(size=100)) >= 0).all()

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from subspace_lab.dataset import LabeledDataset
from subspace_lab.errors import DomainError, ShapeError
from subspace_lab.graph import (
    DOT,
    WeightScheme,
    all_pairs_graph,
    heat_width,
    kronecker_lift,
    laplacian,
    mean_graph,
    pair_weight,
    weight_matrix,
    within_class_graph,
)

from oracles import dot_weight_loop, heat_weight_loop, mean_sq_distance_loop, pairwise_objective

SCHEMES = [DOT, WeightScheme("heat-kernel"), WeightScheme("binary", k=2)]


def test_pair_weight_examples():
    heat1 = WeightScheme("heat-kernel", t=1.0)
    assert pair_weight([3.0, -1.0], [3.0, -1.0], heat1) == 1.0
    assert pair_weight([1.0, 0.0], [0.0, 1.0], DOT) == 0.0
    assert pair_weight([0.0, 0.0], [1.0, 0.0], heat1) == pytest.approx(math.exp(-1), rel=1e-15)
    assert round(pair_weight([0, 0], [1, 0], heat1), 4) == 0.3679


def test_pair_weight_length_mismatch():
    with pytest.raises(ShapeError):
        pair_weight([1.0, 2.0], [1.0], DOT)


def test_scheme_validation_and_parse():
    with pytest.raises(ValueError):
        WeightScheme("heat-kernel", t=0.0)
    with pytest.raises(ValueError):
        WeightScheme("binary", k=0)
    assert WeightScheme.parse("heat-kernel:0.5") == WeightScheme("heat-kernel", t=0.5)
    assert WeightScheme.parse("binary:7").k == 7
    s = WeightScheme("binary", k=3)
    assert WeightScheme.from_dict(s.to_dict()) == s


def _two_class(rng, n=(4, 5), m=3):
    labels = np.repeat([1, 2], n)
    perm = rng.permutation(labels.size)
    return LabeledDataset(rng.random((m, labels.size)), labels[perm])


@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: s.kind)
def test_within_class_cross_entries_zero(scheme):
    ds = _two_class(np.random.default_rng(0))
    g, blocks = within_class_graph(ds, scheme)
    diff = ds.labels[:, None] != ds.labels[None, :]
    assert np.all(g.S[diff] == 0.0)
    # class-contiguous ordering is exactly block diagonal
    order = np.argsort(ds.labels, kind="stable")
    Sp = g.S[np.ix_(order, order)]
    k = np.count_nonzero(ds.labels == 1)
    assert not Sp[:k, k:].any() and not Sp[k:, :k].any()
    assert [b[0].tolist() for b in blocks] == [idx.tolist() for idx in ds.class_indices()]


def test_one_sample_per_class_is_empty():
    ds = LabeledDataset(np.random.default_rng(1).random((3, 4)), [1, 2, 3, 4])
    for scheme in SCHEMES:
        g, _ = within_class_graph(ds, scheme)
        assert not g.S.any()


def test_within_class_dot_matches_loop():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((3, 4))
    labels = np.array([1, 2, 1, 2])
    g, _ = within_class_graph(LabeledDataset(X, labels), DOT)
    for i in range(4):
        for j in range(4):
            want = dot_weight_loop(X, i, j) if labels[i] == labels[j] and i != j else 0.0
            assert g.S[i, j] == pytest.approx(want, abs=1e-14)


def test_within_class_heat_width_is_global():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((2, 6))
    labels = np.array([1, 1, 1, 2, 2, 2])
    t = mean_sq_distance_loop(X)
    assert heat_width(X) == pytest.approx(t, rel=1e-12)
    g, _ = within_class_graph(LabeledDataset(X, labels), WeightScheme("heat-kernel"))
    assert g.S[0, 1] == pytest.approx(heat_weight_loop(X, 0, 1, t), rel=1e-12)


def test_mean_graph_examples():
    assert not mean_graph(np.array([[1.0], [2.0]]), DOT).S.any()
    U = np.array([[1.0, 1.0], [2.0, 2.0]])
    B = mean_graph(U, WeightScheme("heat-kernel")).S
    assert B[0, 1] == 1.0 and B[1, 0] == 1.0
    rng = np.random.default_rng(4)
    U = rng.standard_normal((4, 3))
    B = mean_graph(U, DOT).S
    for i in range(3):
        for j in range(3):
            want = 0.0 if i == j else dot_weight_loop(U, i, j)
            assert B[i, j] == pytest.approx(want, abs=1e-14)


def test_mean_graph_binary_fully_connected():
    U = np.random.default_rng(5).random((2, 9))
    B = mean_graph(U, WeightScheme("binary", k=1)).S
    assert np.array_equal(B, 1.0 - np.eye(9))


def test_binary_knn_is_symmetric_union():
    X = np.array([[0.0, 1.0, 2.0, 10.0]])
    S = weight_matrix(X, WeightScheme("binary", k=1))
    # 3 picks 2 as its neighbour, so the edge appears in both directions
    assert S[3, 2] == S[2, 3] == 1.0
    assert S[0, 1] == 1.0 and S[0, 3] == 0.0


def test_dot_product_clamped():
    X = np.array([[1.0, -1.0], [0.0, 0.1]])
    S = weight_matrix(X, DOT)
    assert S[0, 1] == 0.0


def test_laplacian_examples():
    lap = laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_array_equal(lap.D, np.eye(2))
    np.testing.assert_array_equal(lap.L, [[1.0, -1.0], [-1.0, 1.0]])
    assert not laplacian(np.zeros((3, 3))).L.any()


def test_laplacian_row_sums_direct():
    rng = np.random.default_rng(6)
    S = rng.random((5, 5))
    S = S + S.T
    np.fill_diagonal(S, 0)
    L = laplacian(S).L
    for row in L:
        assert abs(sum(row)) < 1e-10 * (1 + S.max())


def test_kronecker_examples():
    K = kronecker_lift(np.array([[1.0, -1.0], [-1.0, 1.0]]), 2)
    I2 = np.eye(2)
    np.testing.assert_array_equal(K, np.block([[I2, -I2], [-I2, I2]]))
    np.testing.assert_array_equal(kronecker_lift(np.eye(2), 3), np.eye(6))


def test_kronecker_index_enumeration():
    L = np.random.default_rng(7).standard_normal((3, 3))
    m = 2
    K = kronecker_lift(L, m)
    for i in range(3):
        for j in range(3):
            for k in range(m):
                for kk in range(m):
                    want = L[i, j] if k == kk else 0.0
                    assert K[i * m + k, j * m + kk] == want


def test_kronecker_errors():
    with pytest.raises(DomainError):
        kronecker_lift(np.eye(2), 0)
    with pytest.raises(ShapeError):
        kronecker_lift(np.ones((2, 3)), 2)


finite = st.floats(-10, 10, allow_nan=False, width=64)


@settings(max_examples=60, deadline=None)
@given(X=arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 12)), elements=finite),
       which=st.sampled_from(range(3)))
def test_graph_properties(X, which):
    S = all_pairs_graph(X, SCHEMES[which]).S
    assert np.array_equal(S, S.T)
    assert np.all(S >= 0) and not np.diag(S).any()
    L = laplacian(S).L
    assert np.max(np.abs(L.sum(axis=1))) < 1e-10 * (1 + np.max(np.abs(S)))
    ev = np.linalg.eigvalsh(L)
    assert ev.min() >= -1e-8 * max(ev.max(), 0.0) - 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_quadratic_form_identity(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 8), rng.integers(2, 15)
    X = rng.standard_normal((m, n))
    S = rng.random((n, n))
    S = (S + S.T) / 2
    w = rng.standard_normal(m)
    L = laplacian(S).L
    lhs = pairwise_objective((w @ X)[None, :], S)
    rhs = 2 * w @ X @ L @ X.T @ w
    assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), abs(rhs), 1e-300)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_kronecker_quadratic_form_identity(seed):
    rng = np.random.default_rng(seed)
    n_img, h, w_ = rng.integers(2, 6), rng.integers(1, 5), rng.integers(1, 5)
    imgs = [rng.standard_normal((h, w_)) for _ in range(n_img)]
    G = np.vstack(imgs)
    S = rng.random((n_img, n_img))
    S = (S + S.T) / 2
    w = rng.standard_normal(w_)
    T = kronecker_lift(laplacian(S).L, h)
    lhs = pairwise_objective([g @ w for g in imgs], S)
    rhs = 2 * w @ G.T @ T @ G @ w
    assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), abs(rhs), 1e-300)

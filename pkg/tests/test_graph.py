import struct

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from relab.errors import ConfigError, DataError, DegenerateInputError, FormatError, IsolatedNodeError
from relab.graph import (
    AffinityGraph,
    auto_k,
    build_affinity,
    load_graph,
    normalize,
    save_graph,
)

HEADER = struct.Struct("<4sIQQ")


def dense(graph):
    return graph.matrix.toarray()


def csr_graph(matrix):
    matrix = sp.csr_matrix(np.asarray(matrix, dtype=np.float64))
    return AffinityGraph(n=matrix.shape[0], matrix=matrix)


def relg_bytes(n, indptr, indices, values, magic=b"RELG", version=1):
    nnz = len(values)
    body = (
        np.asarray(indptr, dtype="<u8").tobytes()
        + np.asarray(indices, dtype="<u8").tobytes()
        + np.asarray(values, dtype="<f8").tobytes()
    )
    return HEADER.pack(magic, version, n, nnz) + body


class TestBuildAffinity:
    def test_identical_directions(self):
        A = dense(build_affinity(np.array([[1.0, 0.0], [2.0, 0.0]]), gamma=3.0))
        np.testing.assert_array_equal(A, [[0.0, 1.0], [1.0, 0.0]])

    def test_orthogonal_directions(self):
        A = dense(build_affinity(np.array([[1.0, 0.0], [0.0, 1.0]]), gamma=3.0))
        np.testing.assert_array_equal(A, np.zeros((2, 2)))

    def test_cosine_cubed_at_45_degrees(self):
        X = np.array([[1.0, 0.0], [1.0, 1.0]])
        A = dense(build_affinity(X, gamma=3.0))
        # cos(45 deg)^3 = (sqrt(2)/2)^3 = 2^(-3/2)
        expected = 2.0 ** -1.5
        np.testing.assert_allclose(A[0, 1], expected, rtol=1e-12)
        np.testing.assert_allclose(A[1, 0], expected, rtol=1e-12)

    def test_negative_cosine_clamped_to_zero(self):
        A = dense(build_affinity(np.array([[1.0, 0.0], [-1.0, 0.0]]), gamma=3.0))
        np.testing.assert_array_equal(A, np.zeros((2, 2)))

    def test_invariants_on_random_input(self, rng):
        X = rng.standard_normal((30, 5))
        A = dense(build_affinity(X))
        assert np.array_equal(A, A.T)
        assert np.all(np.diag(A) == 0)
        assert np.all(A >= 0)

    def test_scale_invariance_exact(self, rng):
        X = rng.standard_normal((15, 4))
        A1 = dense(build_affinity(X))
        A2 = dense(build_affinity(4.0 * X))
        assert np.array_equal(A1, A2)

    def test_permutation_equivariance(self, rng):
        X = rng.standard_normal((12, 3))
        perm = rng.permutation(12)
        A = dense(build_affinity(X))
        A_perm = dense(build_affinity(X[perm]))
        np.testing.assert_allclose(A_perm, A[np.ix_(perm, perm)], atol=1e-12)

    def test_topk_with_full_k_matches_dense(self, rng):
        X = rng.standard_normal((20, 4))
        A_dense = dense(build_affinity(X))
        A_sparse = dense(build_affinity(X, k=19))
        np.testing.assert_allclose(A_sparse, A_dense, atol=1e-12)

    def test_topk_keeps_at_most_k_per_row_before_symmetrization(self, rng):
        X = rng.standard_normal((25, 3))
        graph = build_affinity(X, k=4)
        A = dense(graph)
        assert np.array_equal(A, A.T)
        assert np.all(np.diag(A) == 0)
        # max-symmetrization can raise a row's count above k, never double it
        assert (A > 0).sum(axis=1).max() <= 2 * 4 + 1

    def test_k_out_of_range(self, rng):
        X = rng.standard_normal((5, 3))
        with pytest.raises(ConfigError):
            build_affinity(X, k=5)
        with pytest.raises(ConfigError):
            build_affinity(X, k=0)

    def test_gamma_must_be_positive(self, rng):
        with pytest.raises(ConfigError):
            build_affinity(rng.standard_normal((4, 2)), gamma=0.0)

    def test_zero_norm_row_rejected(self):
        X = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateInputError):
            build_affinity(X)

    def test_auto_k_thresholds(self):
        assert auto_k(2000) is None
        assert auto_k(2001) == 50

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1),
           scale=st.sampled_from([0.25, 0.5, 2.0, 8.0]))
    def test_scale_invariance_property(self, seed, scale):
        X = np.random.default_rng(seed).standard_normal((10, 3))
        assert np.array_equal(dense(build_affinity(X)),
                              dense(build_affinity(scale * X)))


class TestNormalize:
    def test_unit_degrees(self):
        g = normalize(csr_graph([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_array_equal(g.degrees, [1.0, 1.0])
        np.testing.assert_array_equal(g.s.toarray(), [[0.0, 1.0], [1.0, 0.0]])

    def test_degree_two_rescales_to_one(self):
        g = normalize(csr_graph([[0.0, 2.0], [2.0, 0.0]]))
        np.testing.assert_array_equal(g.degrees, [2.0, 2.0])
        np.testing.assert_allclose(g.s.toarray(), [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)

    def test_three_node_path(self):
        A = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]
        g = normalize(csr_graph(A))
        np.testing.assert_array_equal(g.degrees, [1.0, 2.0, 1.0])
        S = g.s.toarray()
        # S_01 = 1/sqrt(1*2)
        np.testing.assert_allclose(S[0, 1], 2.0 ** -0.5, rtol=1e-12)
        np.testing.assert_allclose(S[1, 2], 2.0 ** -0.5, rtol=1e-12)
        assert S[0, 2] == 0.0

    def test_symmetry(self, rng):
        X = rng.standard_normal((20, 4))
        g = normalize(build_affinity(X))
        diff = np.abs(g.s.toarray() - g.s.toarray().T).max()
        assert diff < 1e-12

    def test_isolated_node_reported(self):
        A = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        with pytest.raises(IsolatedNodeError) as excinfo:
            normalize(csr_graph(A))
        assert excinfo.value.node_indices == [2]

    def test_spectral_radius_at_most_one(self, rng):
        for n in (10, 60, 200):
            X = rng.standard_normal((n, 6))
            g = normalize(build_affinity(X))
            eigvals = np.linalg.eigvalsh(g.s.toarray())
            assert eigvals.max() <= 1.0 + 1e-6
            assert eigvals.min() >= -1.0 - 1e-6


class TestGraphIO:
    def test_round_trip(self, tmp_path, rng):
        X = rng.standard_normal((15, 4))
        graph = build_affinity(X)
        path = tmp_path / "g.relg"
        save_graph(path, graph)
        loaded = load_graph(path)
        assert loaded.n == graph.n
        np.testing.assert_array_equal(loaded.matrix.toarray(), graph.matrix.toarray())

    def test_save_then_save_is_stable(self, tmp_path, rng):
        X = rng.standard_normal((10, 3))
        graph = build_affinity(X)
        first = tmp_path / "a.relg"
        second = tmp_path / "b.relg"
        save_graph(first, graph)
        save_graph(second, load_graph(first))
        assert first.read_bytes() == second.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "g.relg"
        path.write_bytes(relg_bytes(2, [0, 1, 2], [1, 0], [1.0, 1.0], magic=b"XXXX"))
        with pytest.raises(FormatError):
            load_graph(path)

    def test_body_length_mismatch(self, tmp_path):
        path = tmp_path / "g.relg"
        raw = relg_bytes(2, [0, 1, 2], [1, 0], [1.0, 1.0])
        path.write_bytes(raw[:-4])
        with pytest.raises(FormatError):
            load_graph(path)

    def test_column_index_out_of_range(self, tmp_path):
        path = tmp_path / "g.relg"
        path.write_bytes(relg_bytes(2, [0, 1, 2], [5, 0], [1.0, 1.0]))
        with pytest.raises(FormatError):
            load_graph(path)

    def test_negative_value_rejected(self, tmp_path):
        path = tmp_path / "g.relg"
        path.write_bytes(relg_bytes(2, [0, 1, 2], [1, 0], [-1.0, -1.0]))
        with pytest.raises(DataError):
            load_graph(path)

    def test_asymmetric_rejected(self, tmp_path):
        path = tmp_path / "g.relg"
        path.write_bytes(relg_bytes(2, [0, 1, 1], [1], [1.0]))
        with pytest.raises(DataError):
            load_graph(path)

    def test_nonzero_diagonal_rejected(self, tmp_path):
        path = tmp_path / "g.relg"
        path.write_bytes(relg_bytes(2, [0, 1, 2], [0, 1], [1.0, 1.0]))
        with pytest.raises(DataError):
            load_graph(path)

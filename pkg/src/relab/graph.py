"""Cosine-power affinity graphs and their symmetric degree normalization.

The affinity between two samples is their cosine similarity clamped at zero
and raised to a sharpening exponent (gamma, default 3), with a zero
diagonal. Dense construction is the reference semantics; an optional top-k
sparse mode keeps the k strongest neighbors per node and symmetrizes with
an elementwise max.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, DegenerateInputError, FormatError, IsolatedNodeError
from .fileio import atomic_write, _open_for_read

DEFAULT_GAMMA = 3.0
# Dense N^2 storage is kept up to this many nodes; above it the CLI defaults
# to top-k sparsification.
DENSE_NODE_LIMIT = 2000
DEFAULT_SPARSE_K = 50

RELG_MAGIC = b"RELG"
RELG_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")  # magic, version, n, nnz

_BLOCK_ROWS = 256


@dataclass
class AffinityGraph:
    """Symmetric nonnegative affinity matrix with zero diagonal (CSR).

    gamma and k record how the graph was built (k is None for dense
    construction); they are construction metadata and are not stored in
    graph files.
    """

    n: int
    matrix: sp.csr_matrix
    gamma: float | None = None
    k: int | None = None


@dataclass
class NormalizedGraph:
    """Degree-normalized affinity S = D^{-1/2} A D^{-1/2} plus the degrees."""

    n: int
    s: sp.csr_matrix
    degrees: np.ndarray


def auto_k(n):
    """Default sparsification: dense up to DENSE_NODE_LIMIT nodes, else top-k."""
    return None if n <= DENSE_NODE_LIMIT else DEFAULT_SPARSE_K


def _unit_rows(X):
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    zero = norms < 1e-12
    if np.any(zero):
        raise DegenerateInputError(
            f"row {int(np.flatnonzero(zero)[0])} has zero norm; cosine affinity undefined"
        )
    return X / norms[:, None]


def build_affinity(X, gamma=DEFAULT_GAMMA, k=None):
    """Build the affinity graph over the rows of X.

    Dense mode (k=None): A_ij = max(0, cos(x_i, x_j))^gamma off the
    diagonal. Sparse mode: each node keeps its k largest affinities (ties
    broken toward lower column index), then A is symmetrized entrywise as
    max(A_ij, A_ji).
    """
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    V = _unit_rows(X)
    n = V.shape[0]
    if k is not None:
        if not 1 <= k < n:
            raise ConfigError(f"k must satisfy 1 <= k < n_samples={n}, got {k}")
        matrix = _topk_affinity(V, float(gamma), int(k))
    else:
        sims = V @ V.T
        sims = np.maximum(sims, sims.T)  # force exact symmetry
        np.clip(sims, 0.0, None, out=sims)
        np.fill_diagonal(sims, 0.0)
        matrix = sp.csr_matrix(np.power(sims, gamma))
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return AffinityGraph(n=n, matrix=matrix, gamma=float(gamma), k=k)


def _topk_affinity(V, gamma, k):
    n = V.shape[0]
    rows = []
    cols = []
    vals = []
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        sims = V[start:stop] @ V.T
        np.clip(sims, 0.0, None, out=sims)
        sims[np.arange(start, stop) - start, np.arange(start, stop)] = 0.0
        for i in range(stop - start):
            row = sims[i]
            # Stable sort on the negated row: equal affinities keep
            # ascending column order, so the kept set is deterministic.
            top = np.argsort(-row, kind="stable")[:k]
            keep = top[row[top] > 0.0]
            rows.append(np.full(keep.size, start + i, dtype=np.int64))
            cols.append(keep.astype(np.int64))
            vals.append(np.power(row[keep], gamma))
    rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    vals = np.concatenate(vals) if vals else np.empty(0, dtype=np.float64)
    directed = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return directed.maximum(directed.T).tocsr()


def normalize(graph):
    """Symmetrically normalize an affinity graph: S = D^{-1/2} A D^{-1/2}.

    Raises IsolatedNodeError listing every node whose degree (row sum)
    is zero.
    """
    A = graph.matrix
    degrees = np.asarray(A.sum(axis=1)).ravel()
    isolated = np.flatnonzero(degrees <= 0.0)
    if isolated.size:
        raise IsolatedNodeError(isolated.tolist())
    dinv = 1.0 / np.sqrt(degrees)
    scaler = sp.diags(dinv)
    S = (scaler @ A @ scaler).tocsr()
    return NormalizedGraph(n=graph.n, s=S, degrees=degrees)


def save_graph(path, graph):
    """Write an affinity graph in the RELG binary format (CSR, little-endian)."""
    A = graph.matrix.tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    n = A.shape[0]
    nnz = A.nnz
    with atomic_write(path) as handle:
        handle.write(_HEADER.pack(RELG_MAGIC, RELG_VERSION, n, nnz))
        handle.write(A.indptr.astype("<u8").tobytes())
        handle.write(A.indices.astype("<u8").tobytes())
        handle.write(A.data.astype("<f8").tobytes())


def load_graph(path):
    """Read a RELG file back into an AffinityGraph, validating its invariants."""
    with _open_for_read(path) as handle:
        raw = handle.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, nnz = _HEADER.unpack_from(raw)
    if magic != RELG_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {RELG_MAGIC!r}")
    if version != RELG_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 1:
        raise FormatError(f"{path}: header declares empty graph")
    expected = (n + 1) * 8 + nnz * 8 + nnz * 8
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise FormatError(
            f"{path}: body is {len(body)} bytes, header implies {expected}"
        )
    offset = 0
    indptr = np.frombuffer(body, dtype="<u8", count=n + 1, offset=offset).astype(np.int64)
    offset += (n + 1) * 8
    indices = np.frombuffer(body, dtype="<u8", count=nnz, offset=offset).astype(np.int64)
    offset += nnz * 8
    values = np.frombuffer(body, dtype="<f8", count=nnz, offset=offset).astype(np.float64)

    if indptr[0] != 0 or indptr[-1] != nnz or np.any(np.diff(indptr) < 0):
        raise FormatError(f"{path}: corrupt CSR row offsets")
    if nnz and (indices.min() < 0 or indices.max() >= n):
        raise FormatError(f"{path}: column index out of range")
    A = sp.csr_matrix((values, indices, indptr), shape=(n, n))
    if not np.all(np.isfinite(A.data)):
        raise DataError(f"{path}: non-finite affinity value")
    if np.any(A.data < 0):
        raise DataError(f"{path}: negative affinity value")
    if np.any(A.diagonal() != 0):
        raise DataError(f"{path}: affinity diagonal must be zero")
    if (A != A.T).nnz != 0:
        raise DataError(f"{path}: affinity matrix is not symmetric")
    A.sum_duplicates()
    A.eliminate_zeros()
    return AffinityGraph(n=int(n), matrix=A)

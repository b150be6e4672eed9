"""Seed-label diffusion over a normalized graph, plus a 1-NN baseline.

Diffusion solves (I - alpha*S) F = Y one class column at a time with
conjugate gradient (the system is symmetric positive definite for
alpha < 1), then decodes labels as the row-wise argmax of F. The nearest
neighbor baseline skips the graph entirely and copies each sample's
cosine-closest seed label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError, FormatError, SolverError
from .features import l2_normalize
from .fileio import atomic_write, dump_json_line, load_jsonl

DEFAULT_ALPHA = 0.99
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000


@dataclass
class SeedLabels:
    """The initial supervision: sample index -> class index, plus C."""

    assignments: dict[int, int]
    n_classes: int

    def __post_init__(self):
        if self.n_classes < 1:
            raise ConfigError(f"n_classes must be >= 1, got {self.n_classes}")
        for idx, cls in self.assignments.items():
            if idx < 0:
                raise ConfigError(f"seed index {idx} is negative")
            if not 0 <= cls < self.n_classes:
                raise ConfigError(
                    f"seed class {cls} out of range for {self.n_classes} classes"
                )

    def __len__(self):
        return len(self.assignments)

    def sorted_items(self):
        return sorted(self.assignments.items())

    def indices(self):
        return np.array(sorted(self.assignments), dtype=np.int64)

    def per_class_indices(self):
        """Seed indices grouped by class, ascending within each class."""
        groups = {c: [] for c in range(self.n_classes)}
        for idx, cls in self.sorted_items():
            groups[cls].append(idx)
        return groups


@dataclass
class DiffusionResult:
    """Diffusion scores and their argmax decoding.

    scores is None when the result was reconstructed from a propagated
    labels file, which stores labels and retrieval scores but not F.
    zero_rows lists samples with no diffusion mass at all (disconnected
    from every seed); they decode to class 0 by the tie rule.
    """

    scores: np.ndarray | None
    labels: np.ndarray
    retrieval_score: np.ndarray
    alpha: float
    residual: float
    zero_rows: list[int] = field(default_factory=list)


def load_seeds(path):
    """Read a seeds JSON file: {"n_classes": C, "seeds": [{"index", "class"}...]}."""
    try:
        with open(path, "rb") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "n_classes" not in data or "seeds" not in data:
        raise FormatError(f"{path}: seeds file needs 'n_classes' and 'seeds' keys")
    assignments = {}
    for entry in data["seeds"]:
        if not isinstance(entry, dict) or "index" not in entry or "class" not in entry:
            raise FormatError(f"{path}: each seed needs 'index' and 'class'")
        idx, cls = entry["index"], entry["class"]
        if not isinstance(idx, int) or not isinstance(cls, int):
            raise FormatError(f"{path}: seed index/class must be integers")
        if idx in assignments:
            raise FormatError(f"{path}: duplicate seed index {idx}")
        assignments[idx] = cls
    try:
        return SeedLabels(assignments=assignments, n_classes=int(data["n_classes"]))
    except ConfigError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_seeds(path, seeds):
    """Write seeds in the JSON format load_seeds reads."""
    doc = {
        "n_classes": seeds.n_classes,
        "seeds": [{"index": i, "class": c} for i, c in seeds.sorted_items()],
    }
    with atomic_write(path) as handle:
        handle.write(json.dumps(doc, indent=2).encode("ascii"))
        handle.write(b"\n")


def build_label_matrix(seeds, n):
    """One-hot N x C matrix: row i is the seed class of sample i, else zeros."""
    Y = np.zeros((n, seeds.n_classes), dtype=np.float64)
    for idx, cls in seeds.assignments.items():
        if idx >= n:
            raise DataError(f"seed index {idx} out of range for {n} samples")
        Y[idx, cls] = 1.0
    return Y


def _cg(matvec, b, tol, max_iter):
    """Conjugate gradient for SPD systems; relative residual convergence.

    Returns (x, relative_residual, iterations); x is None when max_iter was
    exhausted before reaching tol.
    """
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, 0.0, 0
    r = b.copy()
    d = r.copy()
    rs = float(r @ r)
    for iteration in range(1, max_iter + 1):
        Ad = matvec(d)
        step = rs / float(d @ Ad)
        x = x + step * d
        r = r - step * Ad
        rs_next = float(r @ r)
        if np.sqrt(rs_next) <= tol * bnorm:
            return x, np.sqrt(rs_next) / bnorm, iteration
        d = r + (rs_next / rs) * d
        rs = rs_next
    return None, np.sqrt(rs) / bnorm, max_iter


def diffuse(graph, Y, alpha=DEFAULT_ALPHA, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
            seeds=None):
    """Solve (I - alpha*S) F = Y and decode labels from F.

    One CG solve per class column; each column's relative residual must
    reach tol within max_iter iterations or SolverError is raised carrying
    the final residual. When seeds are given, decoded labels are forced to
    the seed classes (retrieval scores stay the row maxima of F).
    """
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must satisfy 0 <= alpha < 1, got {alpha}")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != graph.n:
        raise DataError(f"label matrix shape {Y.shape} does not match graph n={graph.n}")
    S = graph.s

    def matvec(x):
        return x - alpha * (S @ x)

    F = np.empty_like(Y)
    residual = 0.0
    for c in range(Y.shape[1]):
        x, rel, _ = _cg(matvec, Y[:, c], tol, max_iter)
        if x is None:
            raise SolverError(
                f"diffusion did not converge for class {c} after {max_iter} "
                f"iterations (relative residual {rel:.3e})",
                residual=rel,
            )
        F[:, c] = x
        residual = max(residual, rel)

    zero_rows = np.flatnonzero(~F.any(axis=1)).tolist()
    if seeds is not None:
        labels, retrieval = estimate_labels(F, seeds)
    else:
        labels = np.argmax(F, axis=1)
        retrieval = F.max(axis=1)
    return DiffusionResult(
        scores=F,
        labels=labels,
        retrieval_score=retrieval,
        alpha=float(alpha),
        residual=residual,
        zero_rows=zero_rows,
    )


def estimate_labels(F, seeds):
    """Decode labels from diffusion scores: row argmax, seeds forced.

    Ties go to the lowest class index; every seed sample gets its seed
    class regardless of F. Returns (labels, retrieval_score) where the
    retrieval score is the row maximum of F.
    """
    F = np.asarray(F, dtype=np.float64)
    labels = np.argmax(F, axis=1)
    retrieval = F.max(axis=1)
    for idx, cls in seeds.assignments.items():
        if idx >= F.shape[0]:
            raise DataError(f"seed index {idx} out of range for {F.shape[0]} samples")
        labels[idx] = cls
    return labels, retrieval


def nn_propagate(X, seeds):
    """Label every sample with the class of its cosine-nearest seed.

    Ties between equally close seeds go to the lowest seed index; seed
    samples keep their own class. Returns (labels, nearest_cosine).
    """
    if len(seeds) == 0:
        raise DegenerateInputError("nearest-neighbor propagation needs at least one seed")
    V = l2_normalize(X)
    seed_idx = seeds.indices()
    if seed_idx[-1] >= V.shape[0]:
        raise DataError(
            f"seed index {int(seed_idx[-1])} out of range for {V.shape[0]} samples"
        )
    seed_cls = np.array([seeds.assignments[int(i)] for i in seed_idx], dtype=np.int64)
    sims = V @ V[seed_idx].T
    nearest = np.argmax(sims, axis=1)  # first max = lowest seed index on ties
    labels = seed_cls[nearest]
    score = sims[np.arange(V.shape[0]), nearest]
    labels[seed_idx] = seed_cls
    score[seed_idx] = 1.0
    return labels, score


def save_propagated(path, labels, retrieval_score, seeds):
    """Write per-sample propagation records as JSON lines."""
    seed_set = set(seeds.assignments)
    with atomic_write(path) as handle:
        for i in range(len(labels)):
            record = {
                "index": i,
                "label": int(labels[i]),
                "retrieval_score": float(retrieval_score[i]),
                "is_seed": i in seed_set,
            }
            handle.write(dump_json_line(record).encode("ascii"))
            handle.write(b"\n")


def load_propagated(path):
    """Read a propagated-labels file back into (labels, retrieval, is_seed)."""
    records = load_jsonl(path)
    if not records:
        raise FormatError(f"{path}: no records")
    n = len(records)
    labels = np.empty(n, dtype=np.int64)
    retrieval = np.empty(n, dtype=np.float64)
    is_seed = np.zeros(n, dtype=bool)
    seen = set()
    for record in records:
        try:
            i = record["index"]
            labels_i = record["label"]
            score_i = record["retrieval_score"]
            seed_i = record["is_seed"]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: malformed propagation record: {record!r}") from exc
        if not 0 <= i < n or i in seen:
            raise FormatError(f"{path}: sample index {i} duplicated or out of range")
        seen.add(i)
        labels[i] = labels_i
        retrieval[i] = score_i
        is_seed[i] = bool(seed_i)
    return labels, retrieval, is_seed

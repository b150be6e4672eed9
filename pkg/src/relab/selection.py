"""Reliable-set selection from noisy propagated labels.

A linear softmax probe is trained on the propagated labels with a constant
high learning rate; easy (clean) samples fit early while a high learning
rate resists memorizing the noisy ones, so a per-sample cross-entropy loss
averaged over the final training epochs ranks label trustworthiness. The
reliable set keeps all seeds plus, per class, the lowest-loss candidates
up to an exact per-class budget. Ranking by diffusion retrieval score is
available as an alternative trust measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError, FormatError, TrainingDivergedError
from .fileio import atomic_write, dump_json_line, load_jsonl

ORIGIN_SEED = "seed"
ORIGIN_BOOTSTRAPPED = "bootstrapped"


@dataclass
class ProbeConfig:
    """Training schedule for the loss-tracing probe."""

    epochs: int = 60
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 128
    average_window: int = 30
    rng_seed: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 1 <= self.average_window <= self.epochs:
            raise ConfigError(
                f"average_window must lie in [1, epochs={self.epochs}], "
                f"got {self.average_window}"
            )
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class LossTrace:
    """Per-sample cross-entropy per epoch, plus the last-window average."""

    per_epoch_losses: np.ndarray  # epochs x N
    averaged_loss: np.ndarray  # N


@dataclass
class ReliableEntry:
    index: int
    label: int
    origin: str  # "seed" | "bootstrapped"
    score: float  # avg_loss or retrieval_score, per the selection strategy


@dataclass
class ReliableSet:
    """The extended labeled set: seeds plus per-class trusted candidates."""

    entries: list[ReliableEntry]
    per_class_count: np.ndarray
    target_per_class: int
    score_kind: str  # "avg_loss" | "retrieval_score"
    warnings: list[str] = field(default_factory=list)

    def indices(self):
        return np.array([e.index for e in self.entries], dtype=np.int64)

    def labels(self):
        return np.array([e.label for e in self.entries], dtype=np.int64)


def _log_softmax(Z):
    shifted = Z - Z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def train_probe(X, labels, cfg, n_classes=None):
    """Train a linear softmax probe with SGD+momentum; record per-sample losses.

    The loss of every sample is evaluated once per epoch at epoch end over
    the full set (no augmentation, no batch-order noise), and averaged_loss
    is the mean over the final cfg.average_window epochs. Deterministic
    given cfg.rng_seed: the rng drives only the batch shuffling.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, d = X.shape
    if labels.shape != (n,):
        raise DataError(f"labels shape {labels.shape} does not match {n} samples")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite entries")
    if np.unique(labels).size < 2:
        raise DegenerateInputError("probe training needs at least 2 distinct classes")
    c = int(n_classes) if n_classes is not None else int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= c:
        raise DataError(f"label out of range for {c} classes")

    rng = np.random.default_rng(cfg.rng_seed)
    W = np.zeros((d, c))
    b = np.zeros(c)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    rows = np.arange(n)

    trace = np.empty((cfg.epochs, n))
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            Xb = X[batch]
            P = np.exp(_log_softmax(Xb @ W + b))
            P[np.arange(batch.size), labels[batch]] -= 1.0
            P /= batch.size
            vW = cfg.momentum * vW - cfg.learning_rate * (Xb.T @ P)
            vb = cfg.momentum * vb - cfg.learning_rate * P.sum(axis=0)
            W += vW
            b += vb
        log_probs = _log_softmax(X @ W + b)
        losses = -log_probs[rows, labels]
        if not np.all(np.isfinite(losses)):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch} (learning rate too high?)"
            )
        trace[epoch] = losses

    averaged = trace[-cfg.average_window:].mean(axis=0)
    return LossTrace(per_epoch_losses=trace, averaged_loss=averaged)


def _select_balanced(labels, scores, seeds, n_r, descending, score_kind):
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    n = labels.shape[0]
    c = seeds.n_classes
    if n_r % c != 0:
        raise ConfigError(f"n_r={n_r} is not divisible by n_classes={c}")
    target = n_r // c
    seed_groups = seeds.per_class_indices()
    largest = max((len(g) for g in seed_groups.values()), default=0)
    if target < largest:
        raise ConfigError(
            f"n_r/C={target} is below the largest per-class seed count {largest}"
        )
    for idx in seeds.assignments:
        if idx >= n:
            raise DataError(f"seed index {idx} out of range for {n} samples")

    is_seed = np.zeros(n, dtype=bool)
    is_seed[list(seeds.assignments)] = True

    entries = []
    warnings = []
    per_class = np.zeros(c, dtype=np.int64)
    key = -scores if descending else scores
    for cls in range(c):
        for idx in seed_groups[cls]:
            entries.append(ReliableEntry(int(idx), cls, ORIGIN_SEED, float(scores[idx])))
        slots = target - len(seed_groups[cls])
        candidates = np.flatnonzero((labels == cls) & ~is_seed)
        ranked = candidates[np.lexsort((candidates, key[candidates]))]
        chosen = ranked[:slots]
        if chosen.size < slots:
            warnings.append(
                f"class {cls}: only {chosen.size} candidate(s) for {slots} slot(s)"
            )
        for idx in chosen:
            entries.append(
                ReliableEntry(int(idx), cls, ORIGIN_BOOTSTRAPPED, float(scores[idx]))
            )
        per_class[cls] = len(seed_groups[cls]) + chosen.size

    return ReliableSet(
        entries=entries,
        per_class_count=per_class,
        target_per_class=target,
        score_kind=score_kind,
        warnings=warnings,
    )


def select_reliable(trace, labels, seeds, n_r):
    """Class-balanced small-loss selection.

    Per class: all seeds, then the candidates with that propagated label in
    ascending averaged-loss order (ties to the lower sample index) until
    n_r/C entries are reached. Classes short on candidates are filled as
    far as possible and recorded in warnings.
    """
    return _select_balanced(
        labels, trace.averaged_loss, seeds, n_r, descending=False, score_kind="avg_loss"
    )


def select_by_retrieval_score(result, seeds, n_r):
    """Selection baseline ranking candidates by descending diffusion score."""
    return _select_balanced(
        result.labels,
        result.retrieval_score,
        seeds,
        n_r,
        descending=True,
        score_kind="retrieval_score",
    )


def save_reliable(path, rset):
    """Write a reliable set as JSON lines plus a trailing summary record."""
    with atomic_write(path) as handle:
        for entry in rset.entries:
            record = {
                "index": entry.index,
                "class": entry.label,
                "origin": entry.origin,
                rset.score_kind: entry.score,
            }
            handle.write(dump_json_line(record).encode("ascii"))
            handle.write(b"\n")
        summary = {
            "summary": True,
            "score_kind": rset.score_kind,
            "target_per_class": rset.target_per_class,
            "per_class_count": rset.per_class_count.tolist(),
            "warnings": rset.warnings,
        }
        handle.write(dump_json_line(summary).encode("ascii"))
        handle.write(b"\n")


def load_reliable(path):
    """Read a reliable-set file back into a ReliableSet."""
    records = load_jsonl(path)
    if not records or "summary" not in records[-1]:
        raise FormatError(f"{path}: missing trailing summary record")
    summary = records[-1]
    score_kind = summary.get("score_kind", "avg_loss")
    entries = []
    for record in records[:-1]:
        try:
            entries.append(
                ReliableEntry(
                    index=int(record["index"]),
                    label=int(record["class"]),
                    origin=str(record["origin"]),
                    score=float(record[score_kind]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed entry: {record!r}") from exc
    return ReliableSet(
        entries=entries,
        per_class_count=np.asarray(summary["per_class_count"], dtype=np.int64),
        target_per_class=int(summary["target_per_class"]),
        score_kind=score_kind,
        warnings=list(summary.get("warnings", [])),
    )

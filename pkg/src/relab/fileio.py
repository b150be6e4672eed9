"""Atomic file writing and the small JSON-based interchange formats.

Binary formats (feature and graph files) live next to the code that owns
them in :mod:`relab.features` and :mod:`relab.graph`; this module holds the
write-temp-then-rename primitive they all share, plus readers/writers for
the JSON truth file and JSON-lines record streams.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager

import numpy as np

from .errors import FormatError


@contextmanager
def atomic_write(path, mode="wb"):
    """Open a temporary file and rename it onto `path` on success.

    Interrupted or failing writers leave no partial artifact behind: the
    temp file lives in the destination directory (so the final rename is
    atomic on POSIX) and is removed if the body raises.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        # mkstemp creates 0600; give the artifact ordinary umask permissions.
        umask = os.umask(0)
        os.umask(umask)
        os.fchmod(fd, 0o666 & ~umask)
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def _open_for_read(path):
    try:
        return open(path, "rb")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def save_truth(path, labels):
    """Write ground-truth class indices as a JSON array."""
    payload = json.dumps([int(c) for c in labels]).encode("ascii")
    with atomic_write(path) as handle:
        handle.write(payload)
        handle.write(b"\n")


def load_truth(path):
    """Read a JSON array of class indices into an int array."""
    with _open_for_read(path) as handle:
        raw = handle.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, list) or not all(isinstance(c, int) for c in data):
        raise FormatError(f"{path}: truth file must be a JSON array of integers")
    if any(c < 0 for c in data):
        raise FormatError(f"{path}: truth file contains negative class indices")
    return np.asarray(data, dtype=np.int64)


def dump_json_line(record):
    """Serialize one record the way every JSON-lines writer here does."""
    return json.dumps(record, separators=(", ", ": "))


def save_jsonl(path, records):
    """Write an iterable of dict records as one JSON object per line."""
    with atomic_write(path) as handle:
        for record in records:
            handle.write(dump_json_line(record).encode("ascii"))
            handle.write(b"\n")


def load_jsonl(path):
    """Read a JSON-lines file into a list of dicts."""
    records = []
    with _open_for_read(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
    return records


def save_json(path, obj):
    """Write a single JSON document (pretty-printed, stable key order)."""
    payload = json.dumps(obj, indent=2, sort_keys=True).encode("ascii")
    with atomic_write(path) as handle:
        handle.write(payload)
        handle.write(b"\n")

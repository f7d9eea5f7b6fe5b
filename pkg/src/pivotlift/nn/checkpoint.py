"""Checkpoint files: JSON header, separator line, raw float64 payload.

Layout:
    line 1: "pivotlift-checkpoint v1\n"
    line 2: json.dumps(meta) + "\n"   (meta carries a "arrays" manifest:
            list of [name, shape] in payload order, plus caller extras)
    line 3: "---\n"
    then  : each array's float64 little-endian bytes, C order, in
            manifest order.

Everything that affects bytes is pinned (key order, separators), so
identical state writes identical files.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import CheckpointError

MAGIC = "pivotlift-checkpoint v1"


def save_checkpoint(path, arrays, extra=None):
    """arrays: ordered (name, ndarray) pairs. extra: JSON-able dict."""
    meta = dict(extra or {})
    manifest = []
    seen = set()
    for name, arr in arrays:
        if name in seen:
            raise CheckpointError(f"duplicate array name {name!r}")
        seen.add(name)
        manifest.append([name, list(np.asarray(arr).shape)])
    meta["arrays"] = manifest
    header = json.dumps(meta, sort_keys=True, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write((MAGIC + "\n").encode())
        fh.write((header + "\n").encode())
        fh.write(b"---\n")
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (arrays, meta): arrays is an ordered list of (name, ndarray)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        line1, rest = blob.split(b"\n", 1)
    except ValueError:
        raise CheckpointError(f"{path}: truncated header")
    if line1.decode(errors="replace") != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    try:
        line2, rest = rest.split(b"\n", 1)
        sep, payload = rest.split(b"\n", 1)
    except ValueError:
        raise CheckpointError(f"{path}: truncated header")
    if sep != b"---":
        raise CheckpointError(f"{path}: malformed header separator")
    try:
        meta = json.loads(line2.decode())
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: bad metadata json: {e}")
    manifest = meta.get("arrays")
    if not isinstance(manifest, list):
        raise CheckpointError(f"{path}: metadata missing array manifest")
    arrays = []
    off = 0
    for entry in manifest:
        name, shape = entry
        shape = tuple(int(n) for n in shape)
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        chunk = payload[off:off + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"{path}: payload truncated at array {name!r}")
        arr = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(shape)
        arrays.append((name, arr))
        off += nbytes
    if off != len(payload):
        raise CheckpointError(
            f"{path}: {len(payload) - off} trailing bytes after last array"
        )
    return arrays, meta

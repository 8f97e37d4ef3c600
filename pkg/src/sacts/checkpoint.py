"""Self-describing binary container for model checkpoints.

Layout: a magic string, an 8-byte little-endian header length, a JSON
header (metadata plus an array manifest of name/dtype/shape), then the raw
little-endian array bytes in manifest order.  Writing is bytewise
deterministic: identical metadata and arrays produce identical files, which
the zip-based numpy containers (embedded timestamps) do not guarantee.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"SACTSCKPT1\n"


def save_checkpoint(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write metadata and named arrays to ``path``."""
    manifest = []
    blobs = []
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        shape = list(arr.shape)  # before ascontiguousarray promotes 0-d to 1-d
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        manifest.append({"name": name, "dtype": arr.dtype.str, "shape": shape})
        blobs.append(arr.tobytes())
    header = json.dumps(
        {"meta": meta, "arrays": manifest}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read back metadata and arrays written by :func:`save_checkpoint`."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a sacts checkpoint")
    offset = len(MAGIC)
    header_len = int.from_bytes(raw[offset : offset + 8], "little")
    offset += 8
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
    offset += header_len

    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(
            raw[offset : offset + nbytes], dtype=dtype
        ).reshape(shape).copy()
        offset += nbytes
    return header["meta"], arrays

"""Binary embedding archives.

Layout (all integers little-endian):

    magic   4 bytes  "XVD1"
    version u8       1
    dim     u32
    count   u64
    records, ``count`` times:
        key_len u16
        key     key_len bytes, UTF-8
        vector  dim * float32

Vectors are stored float32 and widened to float64 in memory.  Writes are
atomic (temp file + rename) so an interrupted run never leaves a truncated
file that later parses.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingSet
from .errors import DataError, FormatError

MAGIC = b"XVD1"
VERSION = 1
HEADER = struct.Struct("<4sBIQ")
KEY_LEN = struct.Struct("<H")


def write_atomic(path: str | Path, payload: bytes) -> None:
    """Write bytes to a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_archive(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Serialize an embedding set, preserving key order."""
    chunks = [HEADER.pack(MAGIC, VERSION, embeddings.dim, len(embeddings))]
    for key, vec in embeddings.items():
        key_bytes = key.encode("utf-8")
        if len(key_bytes) > 0xFFFF:
            raise DataError(f"key too long to serialize: '{key[:40]}...'")
        chunks.append(KEY_LEN.pack(len(key_bytes)))
        chunks.append(key_bytes)
        chunks.append(np.asarray(vec, dtype="<f4").tobytes())
    write_atomic(path, b"".join(chunks))


def read_archive(path: str | Path) -> EmbeddingSet:
    """Parse an archive; any truncation or corruption raises with the offset."""
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes, need {HEADER.size})")
    magic, version, dim, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version} at offset 4")
    if dim < 1:
        raise FormatError(f"{path}: invalid dim {dim} at offset 5")
    out = EmbeddingSet(dim)
    offset = HEADER.size
    vec_bytes = 4 * dim
    for i in range(count):
        if offset + KEY_LEN.size > len(data):
            raise FormatError(f"{path}: truncated at record {i}, offset {offset}")
        (key_len,) = KEY_LEN.unpack_from(data, offset)
        offset += KEY_LEN.size
        if offset + key_len + vec_bytes > len(data):
            raise FormatError(f"{path}: truncated at record {i}, offset {offset}")
        try:
            key = data[offset : offset + key_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: bad key encoding at offset {offset}: {exc}") from exc
        offset += key_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vec_bytes
        if key in out:
            raise FormatError(f"{path}: duplicate key '{key}' at record {i}")
        out.add(key, vec)
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after {count} records")
    return out

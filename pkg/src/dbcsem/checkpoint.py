"""Binary checkpoint format for named tensor collections.

Layout: magic "DBCSEM01", u32 tensor count, then per tensor:
u16 name length, UTF-8 name, u8 rank, u32 per-dim extents, raw
little-endian float32 data in row-major order. Round-trips bit-exactly
at float32 precision.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"DBCSEM01"


class CheckpointError(ValueError):
    pass


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        a = np.ascontiguousarray(arr, dtype=np.float32)
        out += struct.pack("<H", len(raw))
        out += raw
        out += struct.pack("<B", a.ndim)
        for d in a.shape:
            out += struct.pack("<I", d)
        out += a.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {buf[:8]!r}")
    off = 8
    (count,) = struct.unpack_from("<I", buf, off)
    off += 4
    tensors: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", buf, off)
            off += 2
            name = buf[off : off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<B", buf, off)
            off += 1
            dims = struct.unpack_from(f"<{rank}I", buf, off)
            off += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(buf, dtype="<f4", count=n, offset=off).reshape(dims)
            off += 4 * n
            tensors[name] = arr.astype(np.float64)
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated or corrupt ({exc})") from exc
    if off != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - off} trailing bytes")
    return tensors

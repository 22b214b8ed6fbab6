"""Binary and text file formats used across the pipeline.

* THOF tensor files: magic ``THOF``, u32 rank, u32 extents, little-endian
  float32 payload in row-major order.
* THOW checkpoints: magic ``THOW``, u32 entry count, then per entry a u32
  name length, UTF-8 name, u32 rank, u32 extents and a float32 payload.
* Binary PGM (P5) masks, nonzero means foreground.
* Minimal OBJ meshes (``v``/``f`` records only).
* JSON-lines records.
"""

import json
import struct
from pathlib import Path

import numpy as np

THOF_MAGIC = b"THOF"
THOW_MAGIC = b"THOW"


class FormatError(ValueError):
    """A file did not parse as the expected format."""


# ---------------------------------------------------------------------------
# THOF tensors
# ---------------------------------------------------------------------------

def _pack_tensor(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.float32)  # keep 0-d shapes intact
    head = struct.pack("<I", arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr).astype("<f4").tobytes()


def _unpack_tensor(buf: bytes, off: int, where: str):
    if off + 4 > len(buf):
        raise FormatError(f"{where}: truncated tensor header")
    (rank,) = struct.unpack_from("<I", buf, off)
    off += 4
    if rank > 8:
        raise FormatError(f"{where}: implausible tensor rank {rank}")
    if off + 4 * rank > len(buf):
        raise FormatError(f"{where}: truncated extents")
    shape = struct.unpack_from(f"<{rank}I", buf, off)
    off += 4 * rank
    count = int(np.prod(shape, dtype=np.int64)) if rank else 1
    nbytes = 4 * count
    if off + nbytes > len(buf):
        raise FormatError(f"{where}: truncated payload (want {nbytes} bytes)")
    arr = np.frombuffer(buf, dtype="<f4", count=count, offset=off).reshape(shape)
    return arr.astype(np.float32), off + nbytes


def save_tensor(path, arr: np.ndarray) -> None:
    """Write a float32 tensor as a THOF file."""
    Path(path).write_bytes(THOF_MAGIC + _pack_tensor(arr))


def load_tensor(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:4] != THOF_MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}, expected {THOF_MAGIC!r}")
    arr, off = _unpack_tensor(buf, 4, str(path))
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} trailing bytes")
    return arr


# ---------------------------------------------------------------------------
# THOW checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path, tensors: dict) -> None:
    """Write a name -> float32 tensor map as a THOW file (names sorted)."""
    parts = [THOW_MAGIC, struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(_pack_tensor(tensors[name]))
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> dict:
    buf = Path(path).read_bytes()
    if buf[:4] != THOW_MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}, expected {THOW_MAGIC!r}")
    if len(buf) < 8:
        raise FormatError(f"{path}: truncated entry count")
    (count,) = struct.unpack_from("<I", buf, 4)
    off = 8
    out = {}
    for i in range(count):
        if off + 4 > len(buf):
            raise FormatError(f"{path}: truncated name length (entry {i})")
        (nlen,) = struct.unpack_from("<I", buf, off)
        off += 4
        if off + nlen > len(buf):
            raise FormatError(f"{path}: truncated name (entry {i})")
        name = buf[off:off + nlen].decode("utf-8")
        off += nlen
        arr, off = _unpack_tensor(buf, off, f"{path}:{name}")
        out[name] = arr
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} trailing bytes")
    return out


# ---------------------------------------------------------------------------
# PGM masks (P5)
# ---------------------------------------------------------------------------

def save_pgm(path, mask: np.ndarray) -> None:
    """Write a 2-D mask as binary PGM; nonzero pixels become 255."""
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    data = np.where(mask != 0, 255, 0).astype(np.uint8)
    h, w = data.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def load_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed between them
    tokens = []
    off = 0
    while len(tokens) < 4:
        if off >= len(buf):
            raise FormatError(f"{path}: truncated PGM header")
        ch = buf[off:off + 1]
        if ch == b"#":
            while off < len(buf) and buf[off:off + 1] != b"\n":
                off += 1
        elif ch.isspace():
            off += 1
        else:
            start = off
            while off < len(buf) and not buf[off:off + 1].isspace():
                off += 1
            tokens.append(buf[start:off])
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise FormatError(f"{path}: 16-bit PGM not supported (maxval {maxval})")
    off += 1  # single whitespace byte after maxval
    if len(buf) - off < w * h:
        raise FormatError(f"{path}: truncated PGM payload")
    return np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=off).reshape(h, w).copy()


# ---------------------------------------------------------------------------
# OBJ meshes
# ---------------------------------------------------------------------------

def save_obj(path, verts: np.ndarray, faces=None) -> None:
    lines = []
    for v in np.asarray(verts, dtype=np.float64):
        # repr of a Python float round-trips exactly
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    if faces is not None:
        for f in np.asarray(faces, dtype=np.int64):
            lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_obj(path):
    """Parse v/f records; returns (verts float64 (N,3), faces int (F,3) or None)."""
    verts = []
    faces = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                if len(idx) < 3:
                    raise ValueError("face with fewer than 3 vertices")
                # fan-triangulate polygons
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        except (ValueError, IndexError) as e:
            raise FormatError(f"{path}:{lineno}: bad OBJ record {line!r} ({e})") from e
    if not verts:
        raise FormatError(f"{path}: no vertices found")
    v = np.asarray(verts, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64) if faces else None
    if f is not None and (f.min() < 0 or f.max() >= len(v)):
        raise FormatError(f"{path}: face index out of range")
    return v, f


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------

def save_jsonl(path, rows) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def load_jsonl(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def save_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())

"""Binary model container.

Layout (little-endian)::

    b"ARCA"  u32 version
    u32 n    n bytes of UTF-8 JSON holding the NetConfig
    u32 count
    count x ( u32 len, name bytes, u32 rank, rank x u64 dims, f64 data row-major )
"""
import dataclasses
import json
import struct

import numpy as np

from ..errors import LoadError
from .model import TENSOR_NAMES, ModelParams, NetConfig

MAGIC = b"ARCA"
FORMAT_VERSION = 1


def dumps_model(params: ModelParams) -> bytes:
    cfg = dataclasses.asdict(params.cfg)
    cfg["scenarios"] = list(cfg["scenarios"])
    blob = json.dumps(cfg, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(blob)), blob,
             struct.pack("<I", len(TENSOR_NAMES))]
    for name in TENSOR_NAMES:
        arr = np.ascontiguousarray(params.tensors[name], dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise LoadError("truncated model file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads_model(data: bytes) -> ModelParams:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise LoadError("not a model file (bad magic)")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise LoadError(f"unsupported model format version {version}")
    (n,) = r.unpack("<I")
    try:
        cfg_dict = json.loads(r.take(n).decode("utf-8"))
        cfg_dict["scenarios"] = tuple(cfg_dict["scenarios"])
        cfg = NetConfig(**cfg_dict)
    except (ValueError, TypeError, KeyError) as exc:
        raise LoadError(f"bad config block: {exc}") from None
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (ln,) = r.unpack("<I")
        name = r.take(ln).decode("utf-8")
        (rank,) = r.unpack("<I")
        dims = r.unpack(f"<{rank}Q") if rank else ()
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        arr = np.frombuffer(r.take(8 * size), dtype="<f8").reshape(dims).astype(np.float64)
        tensors[name] = arr
    if r.pos != len(data):
        raise LoadError("trailing bytes after last tensor")
    try:
        return ModelParams(cfg, tensors)
    except ValueError as exc:
        raise LoadError(str(exc)) from None


def save_model(params: ModelParams, path):
    with open(path, "wb") as fh:
        fh.write(dumps_model(params))


def load_model(path) -> ModelParams:
    try:
        with open(path, "rb") as fh:
            return loads_model(fh.read())
    except OSError as exc:
        raise LoadError(f"cannot read model {path}: {exc}") from None

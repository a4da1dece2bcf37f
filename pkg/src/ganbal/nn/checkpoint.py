"""GBCK parameter container.

Layout (little-endian)::

    b"GBCK" | version u32 | count u32
    per parameter: name_len u16 | name utf-8 | rank u8 | extents u32 * rank | values

Version 1 stores float32 values, version 2 stores float64 values; the
layout is otherwise identical.
"""
import os
import struct
from collections import OrderedDict

import numpy as np

MAGIC = b"GBCK"
_DTYPE_BY_VERSION = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_VERSION_BY_DTYPE = {np.dtype("float32"): 1, np.dtype("float64"): 2}


class CheckpointError(ValueError):
    pass


def save_arrays(path, arrays):
    arrays = OrderedDict(arrays)
    dtypes = {np.asarray(a).dtype for a in arrays.values()}
    if len(dtypes) > 1:
        raise CheckpointError(f"mixed dtypes in checkpoint: {sorted(map(str, dtypes))}")
    dt = dtypes.pop() if dtypes else np.dtype("float32")
    if dt not in _VERSION_BY_DTYPE:
        raise CheckpointError(f"unsupported dtype {dt}")
    version = _VERSION_BY_DTYPE[dt]
    le = _DTYPE_BY_VERSION[version]
    chunks = [MAGIC, struct.pack("<II", version, len(arrays))]
    for name, a in arrays.items():
        a = np.asarray(a)
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", a.ndim))
        chunks.append(struct.pack(f"<{a.ndim}I", *a.shape))
        chunks.append(np.ascontiguousarray(a, dtype=le).tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(b"".join(chunks))
    os.replace(tmp, path)


def load_arrays(path):
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {buf[:4]!r}")
    version, count = struct.unpack_from("<II", buf, 4)
    if version not in _DTYPE_BY_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    dt = _DTYPE_BY_VERSION[version]
    off = 12
    out = OrderedDict()
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", buf, off)
            off += 2
            name = buf[off : off + n].decode("utf-8")
            off += n
            (rank,) = struct.unpack_from("<B", buf, off)
            off += 1
            shape = struct.unpack_from(f"<{rank}I", buf, off)
            off += 4 * rank
            size = int(np.prod(shape, dtype=np.int64))
            nbytes = size * dt.itemsize
            if off + nbytes > len(buf):
                raise CheckpointError(f"{path}: truncated data for {name!r}")
            a = np.frombuffer(buf, dtype=dt, count=size, offset=off).reshape(shape)
            off += nbytes
            out[name] = a.astype(dt.newbyteorder("="))
    except struct.error as e:
        raise CheckpointError(f"{path}: truncated header ({e})") from None
    if off != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - off} trailing bytes")
    return out


def save_params(path, params):
    save_arrays(path, params.snapshot())


def load_params(path, params):
    params.load(load_arrays(path))
    return params

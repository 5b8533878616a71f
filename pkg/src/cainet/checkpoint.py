"""Binary checkpoint format for named parameter sets.

Layout (all integers little-endian u32):

    magic   8 bytes  b"CAINETCK"
    version u32      currently 1
    then, for each parameter in ascending name order:
        name_len u32
        name     name_len bytes, utf-8
        rank     u32
        extents  rank * u32
        data     prod(extents) * 4 bytes, little-endian float32

There is no count field; readers parse records until end of file, so a
truncated file is detected as a short read. Round-trips are bit-exact.
"""

import struct

import numpy as np

MAGIC = b"CAINETCK"
VERSION = 1


class CheckpointError(ValueError):
    """Bad magic, version, or truncated record."""


def save_checkpoint(path, params):
    """Write a name->Parameter (or name->ndarray) mapping to ``path``."""
    items = []
    for name in sorted(params):
        p = params[name]
        arr = p.tensor.data if hasattr(p, "tensor") else p
        # asarray keeps rank 0 intact (ascontiguousarray would promote it
        # to rank 1); tobytes() below emits C order whatever the layout.
        items.append((name, np.asarray(arr, dtype="<f4")))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        for name, arr in items:
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return buf


def load_checkpoint(path):
    """Read a checkpoint into an ordered dict of name -> float32 ndarray."""
    out = {}
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"bad checkpoint magic {magic!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        while True:
            head = fh.read(4)
            if not head:
                break
            if len(head) != 4:
                raise CheckpointError("truncated checkpoint at record header")
            (name_len,) = struct.unpack("<I", head)
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(fh, 4, "rank"))
            shape = struct.unpack(f"<{rank}I",
                                  _read_exact(fh, 4 * rank, "extents"))
            count = int(np.prod(shape, dtype=np.int64)) if rank else 1
            raw = _read_exact(fh, 4 * count, f"data of {name!r}")
            out[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    return out


def assign_parameters(params, state, strict=True):
    """Copy arrays from ``state`` into matching Parameters.

    With ``strict`` every parameter must be present with matching extents;
    otherwise only the intersection is loaded. Returns the loaded names.
    """
    loaded = []
    for name, p in params.items():
        if name not in state:
            if strict:
                raise CheckpointError(f"checkpoint missing parameter {name!r}")
            continue
        arr = state[name]
        if tuple(arr.shape) != tuple(p.tensor.data.shape):
            raise CheckpointError(
                f"checkpoint extents {arr.shape} for {name!r} do not match "
                f"model extents {p.tensor.data.shape}")
        p.tensor.data = arr.astype(p.tensor.data.dtype)
        p.m = np.zeros_like(p.tensor.data)
        p.v = np.zeros_like(p.tensor.data)
        p.step = 0
        loaded.append(name)
    return loaded

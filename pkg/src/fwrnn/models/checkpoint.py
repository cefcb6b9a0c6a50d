"""ParamSet checkpoints.

Binary layout (all integers little-endian)::

    magic      8 bytes   b"FWRNNCK1"
    meta_len   uint32    length of the UTF-8 JSON model spec that follows
    meta       bytes     {"cell", "input_dim", "hidden_dim", "output_dim", "n_layers"}
    n_params   uint32
    repeated n_params times:
        name_len  uint16, name (UTF-8), ndim uint32, dims uint64 * ndim
    body       float64 little-endian, every parameter row-major in header order

The text dump writes one ``name shape`` line per parameter followed by its
values in ``repr`` form, which round-trips float64 exactly.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .params import ModelSpec, ParamSet

MAGIC = b"FWRNNCK1"


class CheckpointError(ValueError):
    pass


def dumps(params: ParamSet) -> bytes:
    buf = io.BytesIO()
    meta = json.dumps(asdict(params.spec), sort_keys=True).encode("utf-8")
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    buf.write(struct.pack("<I", len(params.arrays)))
    for name, arr in params.items():
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    for arr in params.arrays.values():
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return buf.getvalue()


def loads(data: bytes) -> ParamSet:
    view = memoryview(data)
    if bytes(view[:8]) != MAGIC:
        raise CheckpointError("not a parameter checkpoint (bad magic)")
    pos = 8
    try:
        (meta_len,) = struct.unpack_from("<I", view, pos)
        pos += 4
        spec = ModelSpec(**json.loads(bytes(view[pos:pos + meta_len]).decode("utf-8")))
        pos += meta_len
        (count,) = struct.unpack_from("<I", view, pos)
        pos += 4
        header = []
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", view, pos)
            pos += 2
            name = bytes(view[pos:pos + name_len]).decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<I", view, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}Q", view, pos)
            pos += 8 * ndim
            header.append((name, tuple(int(d) for d in shape)))
        arrays = {}
        for name, shape in header:
            n = int(np.prod(shape))
            if pos + 8 * n > len(view):
                raise CheckpointError(f"checkpoint truncated inside parameter {name}")
            arrays[name] = np.frombuffer(view, dtype="<f8", count=n, offset=pos).reshape(shape).astype(np.float64)
            pos += 8 * n
    except struct.error as exc:
        raise CheckpointError(f"checkpoint header truncated: {exc}") from None
    if pos != len(view):
        raise CheckpointError(f"{len(view) - pos} trailing bytes after checkpoint body")
    return ParamSet(spec, arrays)


def save(params: ParamSet, path) -> None:
    Path(path).write_bytes(dumps(params))


def load(path) -> ParamSet:
    return loads(Path(path).read_bytes())


def text_dump(params: ParamSet) -> str:
    lines = [f"# {json.dumps(asdict(params.spec), sort_keys=True)}"]
    for name, arr in params.items():
        lines.append(f"{name} {'x'.join(str(d) for d in arr.shape)}")
        lines.append(" ".join(repr(float(v)) for v in arr.ravel()))
    return "\n".join(lines) + "\n"


def text_load(text: str) -> ParamSet:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise CheckpointError("text dump lacks its model header")
    spec = ModelSpec(**json.loads(lines[0][2:]))
    arrays = {}
    body = lines[1:]
    for i in range(0, len(body), 2):
        name, dims = body[i].split()
        shape = tuple(int(d) for d in dims.split("x"))
        values = [float(v) for v in body[i + 1].split()] if i + 1 < len(body) else []
        arrays[name] = np.array(values, dtype=np.float64).reshape(shape)
    return ParamSet(spec, arrays)

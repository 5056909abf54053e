"""Binary model persistence.

Layout (all integers unsigned 32-bit little-endian)::

    b"HDCN" | version | header length | header JSON (utf-8)
    layer count
    per layer: type code | tensor count
        per tensor: ndim | dims... | float64 LE data, row-major

The JSON header carries the layer configs, the input shape, the encoding
map (when the model consumes integer codes) and free-form run metadata.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .ingest import EncodingMap
from .nn import Network, layer_from_config

MAGIC = b"HDCN"
VERSION = 1
TYPE_CODES = {"embedding": 1, "dropout": 2, "conv1d": 3, "relu": 4, "global_max_pool": 5, "dense": 6, "sigmoid": 7}
CODE_TYPES = {v: k for k, v in TYPE_CODES.items()}


class ModelFileError(ValueError):
    pass


def dumps(net: Network, encoding: EncodingMap | None = None, meta: dict | None = None) -> bytes:
    header = {
        "input_shape": list(net.input_shape),
        "layers": [{"kind": l.kind, "config": l.config()} for l in net.layers],
        "encoding": encoding.to_dict() if encoding is not None else None,
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    out = [MAGIC, struct.pack("<II", VERSION, len(hbytes)), hbytes, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        out.append(struct.pack("<II", TYPE_CODES[layer.kind], len(layer.params)))
        for arr in layer.params.values():
            out.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
            out.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFileError("truncated model file")
        chunk = self.data[self.pos: self.pos + n]
        self.pos += n
        return chunk

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals[0] if count == 1 else vals


def loads(data: bytes):
    """Return ``(network, encoding or None, meta)``."""
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise ModelFileError("bad magic: not an HDCN model file")
    version = r.u32()
    if version != VERSION:
        raise ModelFileError(f"unsupported model file version {version}")
    try:
        header = json.loads(r.take(r.u32()).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"corrupt header: {exc}") from None
    n_layers = r.u32()
    if n_layers != len(header["layers"]):
        raise ModelFileError("layer count disagrees with header")
    layers = []
    for spec in header["layers"]:
        code, n_tensors = r.u32(2)
        if CODE_TYPES.get(code) != spec["kind"]:
            raise ModelFileError(f"layer type code {code} does not match {spec['kind']!r}")
        layer = layer_from_config(spec["kind"], spec["config"])
        if n_tensors != len(layer.params):
            raise ModelFileError(f"{spec['kind']} layer expects {len(layer.params)} tensors, file has {n_tensors}")
        for name, expected in list(layer.params.items()):
            ndim = r.u32()
            shape = tuple(r.u32(ndim)) if ndim > 1 else (r.u32(),) if ndim == 1 else ()
            if shape != expected.shape:
                raise ModelFileError(f"{spec['kind']}.{name}: shape {shape} != {expected.shape}")
            count = int(np.prod(shape))
            layer.params[name] = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
        layers.append(layer)
    if r.pos != len(data):
        raise ModelFileError("trailing bytes after last layer")
    enc = EncodingMap.from_dict(header["encoding"]) if header["encoding"] is not None else None
    return Network(layers, header["input_shape"]), enc, header["meta"]


def save(path, net: Network, encoding: EncodingMap | None = None, meta: dict | None = None) -> None:
    Path(path).write_bytes(dumps(net, encoding, meta))


def load(path):
    return loads(Path(path).read_bytes())

"""Self-describing binary checkpoints.

Layout: magic line, 8-byte little-endian header length, canonical JSON
header (layer specs, input shape, seed, array manifest), then the raw
little-endian float64 arrays in manifest order.  Canonical JSON plus fixed
array order makes saving deterministic down to the byte.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import Network

__all__ = ["MAGIC", "save_checkpoint", "load_checkpoint"]

MAGIC = b"trendlab-checkpoint-v1\n"


def _manifest(net: Network) -> list[dict]:
    entries = []
    for i, layer in enumerate(net.layers):
        for name in sorted(layer.weights):
            entries.append(
                {"layer": i, "name": name, "shape": list(layer.weights[name].shape)}
            )
    return entries


def save_checkpoint(net: Network, path: str | Path) -> None:
    header = {
        "input_shape": list(net.input_shape),
        "seed": net.seed,
        "layers": net.specs(),
        "arrays": _manifest(net),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<Q", len(header_bytes))
    blob += header_bytes
    for entry in header["arrays"]:
        arr = net.layers[entry["layer"]].weights[entry["name"]]
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path) -> Network:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    off = len(MAGIC)
    (header_len,) = struct.unpack_from("<Q", raw, off)
    off += 8
    header = json.loads(raw[off : off + header_len].decode("utf-8"))
    off += header_len

    net = Network.from_specs(
        header["layers"], tuple(header["input_shape"]), header["seed"]
    )
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        off += count * 8
        np.copyto(net.layers[entry["layer"]].weights[entry["name"]], arr)
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes after weight data")
    return net

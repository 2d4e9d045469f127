"""Checkpoint container for MLPs and SNP models.

Layout on disk::

    b"SNPINR-CKPT\\n"
    uint32 little-endian header length
    header: UTF-8 JSON, sorted keys
    payload: little-endian float64 values, per layer weights then biases,
             in layer order (SNP: encoder layers, then each head)

The header stores the format version, model kind, layer shapes, activation,
creation seed, the payload value count and its SHA-256 digest, so any
truncation or corruption is caught on load.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .model import Activation, Layer, SineMLP
from .training import SnpModel

MAGIC = b"SNPINR-CKPT\n"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Raised when a checkpoint file cannot be trusted."""


def _layers_payload(layers) -> tuple[list[list[int]], bytes]:
    shapes, chunks = [], []
    for l in layers:
        shapes.append(list(l.weights.shape))
        chunks.append(np.ascontiguousarray(l.weights, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(l.biases, dtype="<f8").tobytes())
    return shapes, b"".join(chunks)


def _encode(header: dict, payload: bytes) -> bytes:
    header = dict(header, version=FORMAT_VERSION, payload_values=len(payload) // 8,
                  sha256=hashlib.sha256(payload).hexdigest())
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + struct.pack("<I", len(hbytes)) + hbytes + payload


def dumps(obj, seed: int | None = None) -> bytes:
    if isinstance(obj, SineMLP):
        shapes, payload = _layers_payload(obj.layers)
        header = {"kind": "mlp", "shapes": shapes}
    elif isinstance(obj, SnpModel):
        shapes, payload = _layers_payload(list(obj.encoder) + list(obj.decoders))
        header = {"kind": "snp", "shapes": shapes, "n_encoder": len(obj.encoder)}
    else:
        raise TypeError(f"cannot checkpoint {type(obj).__name__}")
    header.update(activation=obj.activation.kind, omega=obj.activation.omega, seed=seed)
    return _encode(header, payload)


def save_checkpoint(obj, path, seed: int | None = None) -> None:
    Path(path).write_bytes(dumps(obj, seed))


def loads(data: bytes):
    """Inverse of :func:`dumps`; returns ``(model, header)``."""
    if not data.startswith(MAGIC):
        raise CheckpointError("not a checkpoint file (bad magic)")
    off = len(MAGIC)
    if len(data) < off + 4:
        raise CheckpointError("truncated checkpoint header")
    (hlen,) = struct.unpack("<I", data[off:off + 4])
    off += 4
    try:
        header = json.loads(data[off:off + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')!r}")
    payload = data[off + hlen:]
    if len(payload) != 8 * header["payload_values"]:
        raise CheckpointError(
            f"payload holds {len(payload)} bytes, expected {8 * header['payload_values']}")
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise CheckpointError("payload checksum mismatch")

    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    layers, pos = [], 0
    for out_dim, in_dim in header["shapes"]:
        w = values[pos:pos + out_dim * in_dim].reshape(out_dim, in_dim).copy()
        pos += out_dim * in_dim
        b = values[pos:pos + out_dim].copy()
        pos += out_dim
        layers.append(Layer(w, b))
    if pos != values.size:
        raise CheckpointError("layer shapes do not account for the payload")

    act = Activation(header["activation"], header["omega"])
    if header["kind"] == "mlp":
        return SineMLP(layers, act), header
    if header["kind"] == "snp":
        n = header["n_encoder"]
        return SnpModel(layers[:n], layers[n:], act), header
    raise CheckpointError(f"unknown checkpoint kind {header['kind']!r}")


def load_checkpoint(path):
    model, _ = loads(Path(path).read_bytes())
    return model

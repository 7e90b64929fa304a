"""Binary model checkpoints.

Layout, all little-endian: magic ``AKD1``, uint32 layer count, then per layer
uint32 rows, uint32 cols, rows*cols float64 weights in row-major order, cols
float64 biases.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CheckpointError

MAGIC = b"AKD1"


def save_layers(path, layers) -> None:
    """Write [(weights, bias), ...] with weights (rows, cols) and bias (cols,)."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(layers)))
        for weights, bias in layers:
            weights = np.ascontiguousarray(weights, dtype="<f8")
            bias = np.ascontiguousarray(bias, dtype="<f8").reshape(-1)
            rows, cols = weights.shape
            if bias.shape[0] != cols:
                raise CheckpointError(f"bias length {bias.shape[0]} does not match {cols} columns")
            fh.write(struct.pack("<II", rows, cols))
            fh.write(weights.tobytes(order="C"))
            fh.write(bias.tobytes())


def load_layers(path):
    """Read the layer list back; raises CheckpointError on malformed files."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:4]!r}")
    offset = 4

    def take(count):
        nonlocal offset
        if offset + count > len(blob):
            raise CheckpointError(f"{path}: truncated at byte {offset}")
        piece = blob[offset : offset + count]
        offset += count
        return piece

    (n_layers,) = struct.unpack("<I", take(4))
    layers = []
    for _ in range(n_layers):
        rows, cols = struct.unpack("<II", take(8))
        weights = np.frombuffer(take(8 * rows * cols), dtype="<f8").reshape(rows, cols).copy()
        bias = np.frombuffer(take(8 * cols), dtype="<f8").copy()
        layers.append((weights, bias))
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    for (w_prev, _), (w_next, _) in zip(layers, layers[1:]):
        if w_prev.shape[1] != w_next.shape[0]:
            raise CheckpointError(
                f"{path}: layer widths do not chain ({w_prev.shape} then {w_next.shape})"
            )
    return layers

"""Flat parameter storage with a per-layer shape table, plus checkpoints."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CHECKPOINT_VERSION = 1

Layout = list[tuple[str, tuple[int, ...]]]


class FlatVector:
    """A flat float64 vector addressable by named, shaped slices."""

    def __init__(self, layout: Layout, values: np.ndarray | None = None):
        self.layout = layout
        self._offsets: dict[str, tuple[int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in layout:
            size = int(np.prod(shape)) if shape else 1
            self._offsets[name] = (offset, shape)
            offset += size
        self.size = offset
        if values is None:
            self.values = np.zeros(offset, dtype=np.float64)
        else:
            values = np.asarray(values, dtype=np.float64)
            if values.shape != (offset,):
                raise ValueError(f"expected flat shape ({offset},), got {values.shape}")
            self.values = values

    def view(self, name: str) -> np.ndarray:
        offset, shape = self._offsets[name]
        size = int(np.prod(shape)) if shape else 1
        return self.values[offset : offset + size].reshape(shape)

    def names(self) -> list[str]:
        return [name for name, _ in self.layout]

    def copy(self) -> "FlatVector":
        return type(self)(self.layout, self.values.copy())


class GradientSet(FlatVector):
    """Gradients with the same layout as the parameters they refer to."""


class ParameterSet(FlatVector):
    """Trainable weights plus the optimizer's moment accumulators."""

    def __init__(self, layout: Layout, values: np.ndarray | None = None):
        super().__init__(layout, values)
        self.m = np.zeros(self.size, dtype=np.float64)
        self.v = np.zeros(self.size, dtype=np.float64)
        self.step_count = 0
        self.skipped_updates = 0

    def zero_grads(self) -> GradientSet:
        return GradientSet(self.layout)

    def copy(self) -> "ParameterSet":
        dup = ParameterSet(self.layout, self.values.copy())
        dup.m = self.m.copy()
        dup.v = self.v.copy()
        dup.step_count = self.step_count
        dup.skipped_updates = self.skipped_updates
        return dup


def glorot_init(layout: Layout, seed: int) -> ParameterSet:
    """Uniform +/- sqrt(6/(fan_in+fan_out)) for matrices, zeros for biases."""
    rng = np.random.default_rng(seed)
    params = ParameterSet(layout)
    for name, shape in layout:
        if len(shape) < 2:
            continue  # biases stay zero
        fan_out = shape[0]
        fan_in = int(np.prod(shape[1:]))
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.view(name)[...] = rng.uniform(-bound, bound, size=shape)
    return params


def save_checkpoint(params: ParameterSet, path: str | Path, meta: dict | None = None) -> None:
    """Versioned JSON checkpoint; float round-trip is bit-exact."""
    blob = {
        "version": CHECKPOINT_VERSION,
        "layout": [[name, list(shape)] for name, shape in params.layout],
        "values": params.values.tolist(),
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(blob), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[ParameterSet, dict]:
    blob = json.loads(Path(path).read_text(encoding="utf-8"))
    if blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob.get('version')!r}")
    layout: Layout = [(name, tuple(shape)) for name, shape in blob["layout"]]
    params = ParameterSet(layout, np.asarray(blob["values"], dtype=np.float64))
    return params, blob.get("meta", {})

"""Named parameter storage with matching gradient slots."""

from __future__ import annotations

import json
from typing import Dict, Iterator, Tuple

import numpy as np


class ParameterSet:
    """Ordered map of named float64 arrays, each paired with a gradient array.

    Layers register their weights here and accumulate gradients into
    ``grads``; optimizers read both and reset the gradients afterwards.
    """

    def __init__(self, arch: str = "dense"):
        self.arch = arch
        self.values: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}

    def add(self, name: str, value) -> np.ndarray:
        if name in self.values:
            raise KeyError(f"duplicate parameter name {name!r}")
        arr = np.array(value, dtype=np.float64)
        self.values[name] = arr
        self.grads[name] = np.zeros_like(arr)
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.values.items())

    @property
    def size(self) -> int:
        return int(sum(v.size for v in self.values.values()))

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def copy_from(self, other: "ParameterSet") -> None:
        """Overwrite values in place with ``other``'s (hard copy, same layout required)."""
        if list(other.values) != list(self.values):
            raise KeyError("parameter layouts differ")
        for name, v in other.values.items():
            if v.shape != self.values[name].shape:
                raise ValueError(f"shape mismatch for {name}: {v.shape} vs {self.values[name].shape}")
            self.values[name][...] = v

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.values.items()}

    def load_snapshot(self, snap: Dict[str, np.ndarray]) -> None:
        for name, v in snap.items():
            self.values[name][...] = v

    def to_dict(self) -> dict:
        # Python's float repr is the shortest round-tripping decimal, so JSON is bit-exact.
        return {
            "arch": self.arch,
            "params": {
                name: {"shape": list(v.shape), "data": v.ravel().tolist()}
                for name, v in self.values.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSet":
        ps = cls(d.get("arch", "dense"))
        for name, entry in d["params"].items():
            ps.add(name, np.array(entry["data"], dtype=np.float64).reshape(entry["shape"]))
        return ps

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "ParameterSet":
        return cls.from_dict(json.loads(s))

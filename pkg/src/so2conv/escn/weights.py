"""Parameter layout, seeded initialization and weight files.

Linear layers store ``weight`` as ``(out, in)`` and act as ``x @ weight.T + bias``.

Two file formats are supported:

* JSON (``.json``): ``{"format", "config", "arrays": [{"name", "shape",
  "data"}]}`` with ``data`` flattened in C order and floats written in
  shortest round-trip form, so binary64 values survive exactly.
* NumPy ``.npz``: one little-endian float64 array per name plus a
  ``__config__`` entry holding the JSON config.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from so2conv.escn.config import ModelConfig

FORMAT = "so2conv-escn-weights/1"
PATHS = ("source", "target")


def _linear(shapes: OrderedDict, name: str, n_in: int, n_out: int, bias: bool = True):
    shapes[f"{name}.weight"] = (n_out, n_in)
    if bias:
        shapes[f"{name}.bias"] = (n_out,)


def _mlp3(shapes: OrderedDict, name: str, n_in: int, width: int, n_out: int):
    _linear(shapes, f"{name}.fc1", n_in, width)
    _linear(shapes, f"{name}.fc2", width, width)
    _linear(shapes, f"{name}.fc3", width, n_out)


def parameter_shapes(config: ModelConfig) -> OrderedDict:
    """Name -> shape for every array of the model, in a fixed order."""
    L, M, C, H, E = config.lmax, config.mmax, config.channels, config.hidden, config.edge_channels
    z = config.max_atomic_number + 1
    shapes: OrderedDict = OrderedDict()
    shapes["node_embedding"] = (z, C)
    shapes["edge.source_embedding"] = (z, E)
    shapes["edge.target_embedding"] = (z, E)
    _linear(shapes, "edge.rbf", config.num_rbf, E)
    for k in range(config.layers):
        _linear(shapes, f"layer{k}.edge.fc1", E, E)
        _linear(shapes, f"layer{k}.edge.fc2", E, 2 * (M + 1) * H)
        for path in PATHS:
            for m in range(M + 1):
                n = (L + 1 - m) * C
                base = f"layer{k}.so2.{path}.m{m}"
                shapes[f"{base}.down_a"] = (H, n)
                if m:
                    shapes[f"{base}.down_b"] = (H, n)
                shapes[f"{base}.up_a"] = (n, H)
                if m:
                    shapes[f"{base}.up_b"] = (n, H)
        _mlp3(shapes, f"layer{k}.agg", 2 * C, C, C)
    _mlp3(shapes, "energy", C, C, 1)
    _mlp3(shapes, "force", C, C, 1)
    return shapes


def _fan_in(name: str, shape: tuple, shapes: OrderedDict) -> int:
    if name.endswith("embedding"):
        return 1
    if name.endswith(".bias"):
        return shapes[name[: -len("bias")] + "weight"][1]
    return shape[-1]


@dataclass(frozen=True)
class ModelWeights:
    config: ModelConfig
    arrays: OrderedDict

    def __post_init__(self):
        expected = parameter_shapes(self.config)
        if list(self.arrays) != list(expected):
            missing = sorted(set(expected) - set(self.arrays))
            extra = sorted(set(self.arrays) - set(expected))
            raise ValueError(f"weight names do not match config: missing {missing[:3]}, extra {extra[:3]}")
        for name, shape in expected.items():
            if self.arrays[name].shape != shape:
                raise ValueError(f"{name} has shape {self.arrays[name].shape}, expected {shape}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> "ModelWeights":
        """Uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``; embedding tables use ``fan_in = 1``."""
        rng = np.random.default_rng(seed)
        shapes = parameter_shapes(config)
        arrays = OrderedDict()
        for name, shape in shapes.items():
            bound = 1.0 / np.sqrt(_fan_in(name, shape, shapes))
            arrays[name] = rng.uniform(-bound, bound, size=shape)
        return cls(config, arrays)

    def num_parameters(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def save(self, path) -> None:
        path = Path(path)
        if path.suffix == ".npz":
            payload = {name: a.astype("<f8") for name, a in self.arrays.items()}
            payload["__config__"] = np.array(json.dumps(self.config.to_dict()))
            with open(path, "wb") as fh:
                np.savez(fh, **payload)
            return
        doc = {
            "format": FORMAT,
            "config": self.config.to_dict(),
            "arrays": [
                {"name": name, "shape": list(a.shape), "data": a.ravel().tolist()}
                for name, a in self.arrays.items()
            ],
        }
        path.write_text(_dump(doc))

    @classmethod
    def load(cls, path) -> "ModelWeights":
        path = Path(path)
        if path.suffix == ".npz":
            with np.load(path, allow_pickle=False) as data:
                config = ModelConfig.from_dict(json.loads(str(data["__config__"])))
                arrays = OrderedDict(
                    (name, np.array(data[name], dtype=float)) for name in parameter_shapes(config)
                    if name in data
                )
            return cls(config, arrays)
        doc = json.loads(path.read_text())
        if doc.get("format") != FORMAT:
            raise ValueError(f"{path} is not a {FORMAT} file")
        config = ModelConfig.from_dict(doc["config"])
        arrays = OrderedDict()
        for entry in doc["arrays"]:
            shape = tuple(entry["shape"])
            values = np.array([float(v) for v in entry["data"]], dtype=float)
            if values.size != int(np.prod(shape)):
                raise ValueError(f"{entry['name']}: {values.size} values for shape {shape}")
            arrays[entry["name"]] = values.reshape(shape)
        return cls(config, arrays)


def _dump(doc: dict) -> str:
    # one array per line keeps large files diffable without pretty-printing every float
    head = {k: v for k, v in doc.items() if k != "arrays"}
    lines = [json.dumps(head)[:-1] + ', "arrays": [']
    rows = [json.dumps(entry) for entry in doc["arrays"]]
    lines.append(",\n".join(rows))
    lines.append("]}")
    return "\n".join(lines) + "\n"

"""Named parameter storage and the binary checkpoint format."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .tensor import Tensor

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "params.bin"
META_NAME = "meta.json"


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None, dtype=np.float64):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    shape = (fan_in, fan_out) if shape is None else shape
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class ParameterStore:
    """Ordered collection of trainable leaves addressed by dotted names."""

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name!r}")
        arr = np.array(value, dtype=self.dtype)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"parameter {name!r} has non-finite entries")
        t = Tensor(arr, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    def prefixed(self, prefix: str) -> dict[str, Tensor]:
        return {k: v for k, v in self._params.items() if k.startswith(prefix)}

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def num_values(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self._params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for k, t in self._params.items():
            arr = np.asarray(state[k])
            if arr.shape != t.data.shape:
                raise ValueError(f"{k}: shape {arr.shape} != {t.data.shape}")
            t.data = arr.astype(self.dtype, copy=True)

    def copy(self) -> "ParameterStore":
        other = ParameterStore(self.dtype)
        for k, t in self._params.items():
            other.add(k, t.data)
        return other


def save_checkpoint(store: ParameterStore, directory, metadata: Optional[dict] = None) -> Path:
    """Write ``manifest.json`` + little-endian ``params.bin`` (+ ``meta.json``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    le = store.dtype.newbyteorder("<")
    with open(directory / BLOB_NAME, "wb") as fh:
        for name, t in store.items():
            raw = np.ascontiguousarray(t.data, dtype=le).tobytes()
            fh.write(raw)
            entries.append({"name": name, "shape": list(t.data.shape), "offset": offset,
                            "dtype": le.str})
            offset += len(raw)
    (directory / MANIFEST_NAME).write_text(json.dumps({"parameters": entries}, indent=1))
    if metadata is not None:
        (directory / META_NAME).write_text(json.dumps(metadata, indent=1, sort_keys=True))
    return directory


def _checkpoint_dir(path) -> Path:
    path = Path(path)
    return path.parent if path.is_file() else path


def load_arrays(path) -> dict[str, np.ndarray]:
    directory = _checkpoint_dir(path)
    manifest = json.loads((directory / MANIFEST_NAME).read_text())
    blob = (directory / BLOB_NAME).read_bytes()
    out = {}
    for e in manifest["parameters"]:
        dt = np.dtype(e["dtype"])
        n = int(np.prod(e["shape"])) if e["shape"] else 1
        arr = np.frombuffer(blob, dtype=dt, count=n, offset=e["offset"])
        out[e["name"]] = arr.reshape(e["shape"]).astype(dt.newbyteorder("="))
    return out


def load_metadata(path) -> dict:
    meta = _checkpoint_dir(path) / META_NAME
    return json.loads(meta.read_text()) if meta.exists() else {}

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from ..corpus.vocab import Vocabulary
from ..diffcore import load_arrays, load_metadata, save_checkpoint
from ..model import Model, ModelConfig

VOCAB_NAME = "vocab.json"


def save_model(model: Model, directory, vocab: Optional[Vocabulary] = None,
               metadata: Optional[dict] = None) -> Path:
    meta = dict(metadata or {})
    meta["model"] = model.config.to_dict()
    meta["vocab_size"] = model.vocab_size
    meta["dtype"] = model.dtype.name
    out = save_checkpoint(model.store, directory, meta)
    if vocab is not None:
        vocab.save(Path(directory) / VOCAB_NAME)
    return out


def load_model(path) -> tuple[Model, Optional[Vocabulary], dict]:
    meta = load_metadata(path)
    if "model" not in meta:
        raise ValueError(f"{path}: checkpoint metadata lacks a model configuration")
    directory = Path(path) if Path(path).is_dir() else Path(path).parent
    model = Model(ModelConfig.from_dict(meta["model"]), int(meta["vocab_size"]),
                  dtype=np.dtype(meta.get("dtype", "float64")))
    model.store.load_state(load_arrays(directory))
    vocab_file = directory / VOCAB_NAME
    vocab = Vocabulary.load(vocab_file) if vocab_file.exists() else None
    return model, vocab, meta

"""JSON checkpoints.

Floats are written with Python's shortest round-trip repr, so a saved model
reloads bit-for-bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from ..corpus import FeatureInventory
from ..errors import InputError
from .train import DTYPES, TrainConfig, Transducer, build_model
from .vocab import Vocabulary

FORMAT = "wugscope-transducer"
VERSION = 1


def to_dict(model: Transducer) -> dict:
    params = {}
    for name, tensor in model.net.state_dict().items():
        arr = tensor.detach().cpu().to(torch.float64).numpy()
        params[name] = {"shape": list(arr.shape), "values": arr.reshape(-1).tolist()}
    return {
        "format": FORMAT,
        "version": VERSION,
        "vocabulary": {"chars": list(model.vocab.chars), "features": list(model.vocab.features.features)},
        "config": model.config.to_dict(),
        "manifest": model.manifest,
        "history": model.history,
        "parameters": params,
    }


def from_dict(data: dict) -> Transducer:
    if data.get("format") != FORMAT or data.get("version") != VERSION:
        raise InputError("not a wugscope transducer checkpoint (or unsupported version)")
    vocab = Vocabulary(tuple(data["vocabulary"]["chars"]), FeatureInventory(tuple(data["vocabulary"]["features"])))
    config = TrainConfig(**data["config"])
    model = build_model(vocab, config)
    dtype = DTYPES[config.dtype]
    state = {}
    for name, entry in data["parameters"].items():
        arr = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        state[name] = torch.from_numpy(arr).to(dtype)
    model.net.load_state_dict(state)
    model.net.eval()
    model.manifest = data.get("manifest", {})
    model.history = data.get("history", [])
    return model


def dumps(model: Transducer) -> str:
    return json.dumps(to_dict(model), sort_keys=True)


def save(model: Transducer, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load(path) -> Transducer:
    return from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

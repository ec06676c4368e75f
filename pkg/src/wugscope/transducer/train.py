from __future__ import annotations

import copy
import hashlib
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
import torch

from ..errors import ConfigError, InputError, NumericError
from .model import Batch, HardMonotonicTransducer, collate
from .vocab import Vocabulary, encode_example

log = logging.getLogger(__name__)

DTYPES = {"float64": torch.float64, "float32": torch.float32}


class Example(NamedTuple):
    lemma: str
    slot: frozenset
    form: str


@dataclass(frozen=True)
class TrainConfig:
    embed_dim: int = 64
    hidden_dim: int = 128
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    clip_norm: float = 5.0
    seed: int = 0
    init_scale: float = 0.3
    dtype: str = "float64"

    def __post_init__(self):
        for name in ("embed_dim", "hidden_dim", "batch_size", "patience"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if not (self.learning_rate > 0 and self.clip_norm > 0 and self.init_scale > 0):
            raise ConfigError("learning_rate, clip_norm and init_scale must be positive")
        if self.dtype not in DTYPES:
            raise ConfigError(f"dtype must be one of {sorted(DTYPES)}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Transducer:
    """Learned parameters together with the vocabulary and config that shaped them."""

    vocab: Vocabulary
    config: TrainConfig
    net: HardMonotonicTransducer
    manifest: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def parameters(self) -> dict[str, np.ndarray]:
        return {k: v.detach().cpu().numpy().copy() for k, v in self.net.state_dict().items()}

    def encode(self, examples: Iterable) -> list:
        return [encode_example(self.vocab, e[0], e[1], e[2]) for e in examples]

    def batch(self, examples: Sequence) -> Batch:
        return collate(self.encode(examples), self.vocab.n_features, self.net.dtype)


def build_model(vocab: Vocabulary, config: TrainConfig) -> Transducer:
    """Fresh transducer with parameters drawn uniformly from ±init_scale."""
    torch.set_num_threads(1)
    net = HardMonotonicTransducer(vocab.size, vocab.n_features, config.embed_dim, config.hidden_dim)
    net = net.to(DTYPES[config.dtype])
    gen = torch.Generator().manual_seed(config.seed)
    with torch.no_grad():
        for p in net.parameters():
            p.copy_(torch.rand(p.shape, generator=gen, dtype=p.dtype) * 2 * config.init_scale - config.init_scale)
    return Transducer(vocab, config, net)


def data_hash(examples: Iterable) -> str:
    h = hashlib.sha256()
    for lemma, slot, form in sorted((e[0], ";".join(sorted(e[1])), e[2]) for e in examples):
        h.update(f"{lemma}\t{form}\t{slot}\n".encode())
    return h.hexdigest()


def _check_finite(model: Transducer):
    for name, p in model.net.named_parameters():
        if not torch.isfinite(p).all():
            raise NumericError(f"non-finite values in parameter {name}")


def score(model: Transducer, examples: Sequence, batch_size: int = 256) -> np.ndarray:
    """Exact log p(form | lemma, slot) for every (lemma, slot, form) example."""
    _check_finite(model)
    out = []
    model.net.eval()
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            chunk = examples[start : start + batch_size]
            out.append(model.net(model.batch(chunk)).to(torch.float64).numpy())
    if not out:
        return np.zeros(0)
    return np.concatenate(out)


def forward_logprob(model: Transducer, lemma: str, slot: Iterable[str], target: str) -> float:
    """Log-probability of one target string, summed over all monotonic alignments."""
    return float(score(model, [(lemma, frozenset(slot), target)])[0])


def loss_and_gradient(model: Transducer, examples: Sequence) -> tuple[float, dict[str, np.ndarray]]:
    """Negative mean log-likelihood and its exact gradient for every parameter."""
    if not examples:
        raise InputError("empty batch")
    net = model.net
    net.zero_grad(set_to_none=False)
    loss = -net(model.batch(examples)).mean()
    if not torch.isfinite(loss):
        raise NumericError(f"non-finite loss {loss.item()}")
    loss.backward()
    grads = {name: p.grad.detach().numpy().copy() for name, p in net.named_parameters()}
    return float(loss.item()), grads


def _mean_loglik(model: Transducer, encoded: list, batch_size: int) -> float:
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(encoded), batch_size):
            b = collate(encoded[start : start + batch_size], model.vocab.n_features, model.net.dtype)
            total += float(model.net(b).sum())
    return total / len(encoded)


def train(
    train_data: Sequence,
    dev_data: Sequence,
    config: TrainConfig = TrainConfig(),
    vocab: Vocabulary | None = None,
) -> Transducer:
    """Fit by minibatch Adam; keep the epoch with the best dev log-likelihood.

    The alphabet and feature inventory come from the training examples only,
    so held-out characters fall back to UNK.
    """
    if not train_data or not dev_data:
        raise InputError("training and dev sets must be non-empty")
    train_data = [Example(*e) for e in train_data]
    dev_data = [Example(*e) for e in dev_data]
    vocab = vocab or Vocabulary.build(train_data)
    model = build_model(vocab, config)
    model.manifest = {"train_sha256": data_hash(train_data), "dev_sha256": data_hash(dev_data),
                      "n_train": len(train_data), "n_dev": len(dev_data)}
    if config.max_epochs == 0:
        return model

    net = model.net
    enc_train = model.encode(train_data)
    enc_dev = model.encode(dev_data)
    gen = torch.Generator().manual_seed(config.seed + 1)
    opt = torch.optim.Adam(net.parameters(), lr=config.learning_rate)

    best_ll = -math.inf
    best_state = copy.deepcopy(net.state_dict())
    stale = 0
    for epoch in range(config.max_epochs):
        net.train()
        order = torch.randperm(len(enc_train), generator=gen).tolist()
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            chunk = [enc_train[i] for i in order[start : start + config.batch_size]]
            batch = collate(chunk, vocab.n_features, net.dtype)
            opt.zero_grad()
            loss = -net(batch).mean()
            if not torch.isfinite(loss):
                raise NumericError(f"training diverged at epoch {epoch}: loss={loss.item()}")
            loss.backward()
            torch.nn.utils.clip_grad_norm_(net.parameters(), config.clip_norm)
            opt.step()
            total += loss.item() * len(chunk)
        net.eval()
        dev_ll = _mean_loglik(model, enc_dev, 256)
        model.history.append({"epoch": epoch, "train_loss": total / len(enc_train), "dev_loglik": dev_ll})
        log.debug("epoch %d train %.4f dev %.4f", epoch, total / len(enc_train), dev_ll)
        if dev_ll > best_ll:
            best_ll = dev_ll
            best_state = copy.deepcopy(net.state_dict())
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    net.load_state_dict(best_state)
    net.eval()
    _check_finite(model)
    return model

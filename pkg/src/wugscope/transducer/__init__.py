"""Probabilistic inflection model p(form | lemma, slot)."""

from .checkpoint import load, save
from .decode import accuracy, decode, decode_batch
from .model import HardMonotonicTransducer, forward_dp
from .train import (
    Example,
    TrainConfig,
    Transducer,
    build_model,
    forward_logprob,
    loss_and_gradient,
    score,
    train,
)
from .vocab import BOS, EOS, PAD, UNK, Vocabulary, encode_example

__all__ = [
    "BOS", "EOS", "PAD", "UNK", "Example", "HardMonotonicTransducer", "TrainConfig",
    "Transducer", "Vocabulary", "accuracy", "build_model", "decode", "decode_batch",
    "encode_example", "forward_dp", "forward_logprob", "load", "loss_and_gradient",
    "save", "score", "train",
]

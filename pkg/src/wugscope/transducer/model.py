"""Character-level transducer with exact hard monotonic attention.

The decoder state at output step j depends only on the previously emitted
characters (never on the alignment), so the sum over monotonic alignments
factorizes into a forward recurrence over source positions:

    alpha[j][i] = emit(w_j | i, s_j) * sum_{i' <= i} trans(i | i', s_j) * alpha[j-1][i']

with alpha[0] concentrated on the BOS position.  Everything is kept in log
space.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .vocab import BOS, EOS, PAD, EncodedExample

# Masked log-scores use a large finite negative instead of -inf so that
# logsumexp over fully masked entries still has finite gradients.
NEG = -1e30


@dataclass
class Batch:
    src: torch.Tensor  # (B, n) long
    src_len: torch.Tensor  # (B,)
    feats: torch.Tensor  # (B, F) multi-hot
    tgt: torch.Tensor | None  # (B, T) long, EOS-terminated, PAD after
    tgt_len: torch.Tensor | None

    def __len__(self):
        return self.src.shape[0]


def collate(examples: Sequence[EncodedExample], n_features: int, dtype=torch.float64) -> Batch:
    B = len(examples)
    n = max(len(e.src) for e in examples)
    src = np.full((B, n), PAD, dtype=np.int64)
    for b, e in enumerate(examples):
        src[b, : len(e.src)] = e.src
    rows = [b for b, e in enumerate(examples) for _ in e.features]
    cols = [f for e in examples for f in e.features]
    feats = torch.zeros((B, n_features), dtype=dtype)
    if rows:
        feats[rows, cols] = 1.0
    src_len = torch.tensor([len(e.src) for e in examples])
    tgt = tgt_len = None
    if all(e.tgt is not None for e in examples):
        T = max(len(e.tgt) for e in examples)
        tgt_np = np.full((B, T), PAD, dtype=np.int64)
        for b, e in enumerate(examples):
            tgt_np[b, : len(e.tgt)] = e.tgt
        tgt = torch.from_numpy(tgt_np)
        tgt_len = torch.tensor([len(e.tgt) for e in examples])
    src = torch.from_numpy(src)
    return Batch(src, src_len, feats, tgt, tgt_len)


@dataclass
class Encoded:
    """Per-source-position quantities shared by every decoding step."""

    states: torch.Tensor  # (B, n, 2H)
    tag: torch.Tensor  # (B, E)
    emit_src: torch.Tensor  # (B, n, A)
    keys: torch.Tensor  # (B, n, A)
    pair: torch.Tensor  # (B, n, n) source-source part of the transition score
    allowed: torch.Tensor  # (n, n) bool, i >= i'
    valid: torch.Tensor  # (B, n) bool

    def select(self, rows: torch.Tensor) -> "Encoded":
        return Encoded(
            self.states[rows], self.tag[rows], self.emit_src[rows], self.keys[rows],
            self.pair[rows], self.allowed, self.valid[rows],
        )


class HardMonotonicTransducer(nn.Module):
    def __init__(self, vocab_size: int, n_features: int, embed_dim: int = 64, hidden_dim: int = 128):
        super().__init__()
        E, H = embed_dim, hidden_dim
        A = hidden_dim
        self.vocab_size = vocab_size
        self.n_features = n_features
        self.embed = nn.Embedding(vocab_size, E)
        self.tag_proj = nn.Linear(max(n_features, 1), E)
        self.encoder = nn.LSTM(E, H, batch_first=True, bidirectional=True)
        self.decoder = nn.LSTM(2 * E, H, batch_first=True)
        self.emit_dec = nn.Linear(H, A)
        self.emit_enc = nn.Linear(2 * H, A, bias=False)
        self.emit_tag = nn.Linear(E, A, bias=False)
        self.emit_out = nn.Linear(A, vocab_size)
        self.trans_query = nn.Linear(H, A, bias=False)
        self.trans_from = nn.Linear(2 * H, A, bias=False)
        self.trans_key = nn.Linear(2 * H, A)
        mask = torch.zeros(vocab_size, dtype=torch.bool)
        mask[PAD] = True
        mask[BOS] = True
        self.register_buffer("output_mask", mask, persistent=False)

    @property
    def dtype(self):
        return self.embed.weight.dtype

    def encode(self, batch: Batch) -> Encoded:
        x = self.embed(batch.src)
        packed = pack_padded_sequence(x, batch.src_len, batch_first=True, enforce_sorted=False)
        out, _ = self.encoder(packed)
        states, _ = pad_packed_sequence(out, batch_first=True, total_length=batch.src.shape[1])
        feats = batch.feats.to(self.dtype)
        if self.n_features == 0:
            feats = torch.zeros(feats.shape[0], 1, dtype=self.dtype)
        tag = torch.tanh(self.tag_proj(feats))
        keys = self.trans_key(states)
        pair = torch.einsum("bpa,bia->bpi", self.trans_from(states), keys)
        n = states.shape[1]
        idx = torch.arange(n)
        allowed = idx[None, :] >= idx[:, None]
        valid = idx[None, :] < batch.src_len[:, None]
        return Encoded(states, tag, self.emit_enc(states), keys, pair, allowed, valid)

    def decoder_inputs(self, prev: torch.Tensor, tag: torch.Tensor) -> torch.Tensor:
        """prev: (B, T) previous output symbols."""
        e = self.embed(prev)
        return torch.cat([e, tag[:, None, :].expand(-1, prev.shape[1], -1)], dim=-1)

    def scores(self, enc: Encoded, dec: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Log emission (B, T, n, V) and log transition (B, T, n, n) tables.

        ``dec`` holds decoder states (B, T, H).  Transition rows are indexed by
        the previous position i', columns by the next position i.
        """
        hidden = torch.tanh(
            self.emit_dec(dec)[:, :, None, :]
            + enc.emit_src[:, None, :, :]
            + self.emit_tag(enc.tag)[:, None, None, :]
        )
        logits = self.emit_out(hidden).masked_fill(self.output_mask, NEG)
        log_emit = torch.log_softmax(logits, dim=-1)

        q = torch.einsum("bta,bia->bti", self.trans_query(dec), enc.keys)
        t = q[:, :, None, :] + enc.pair[:, None, :, :]
        ok = enc.allowed[None, None, :, :] & enc.valid[:, None, None, :]
        log_trans = torch.log_softmax(t.masked_fill(~ok, NEG), dim=-1)
        return log_emit, log_trans

    def lattice(self, batch: Batch) -> tuple[torch.Tensor, torch.Tensor]:
        """Gold-symbol emission scores (B, T, n) and transitions (B, T, n, n)."""
        enc = self.encode(batch)
        B = len(batch)
        prev = torch.cat([torch.full((B, 1), BOS, dtype=torch.long), batch.tgt[:, :-1]], dim=1)
        dec, _ = self.decoder(self.decoder_inputs(prev, enc.tag))
        log_emit, log_trans = self.scores(enc, dec)
        gold = log_emit.gather(3, batch.tgt[:, :, None, None].expand(-1, -1, log_emit.shape[2], 1))
        return gold.squeeze(-1), log_trans

    def forward(self, batch: Batch) -> torch.Tensor:
        """Exact log p(target | lemma, slot) for each example, shape (B,)."""
        log_emit, log_trans = self.lattice(batch)
        return forward_dp(log_emit, log_trans, batch.tgt_len)


def initial_alpha(B: int, n: int, dtype=torch.float64) -> torch.Tensor:
    alpha = torch.full((B, n), NEG, dtype=dtype)
    alpha[:, 0] = 0.0
    return alpha


def advance(alpha: torch.Tensor, log_trans: torch.Tensor) -> torch.Tensor:
    """log sum_{i'} alpha[i'] * trans(i | i'); shapes (B, n), (B, n, n) -> (B, n)."""
    return torch.logsumexp(alpha[:, :, None] + log_trans, dim=1)


def forward_dp(log_emit, log_trans, tgt_len, return_alpha: bool = False):
    """Forward recurrence over the alignment lattice.

    log_emit: (B, T, n) log-probability of the gold symbol at each step/position.
    log_trans: (B, T, n, n) log transition probabilities for each step.
    Returns log-probabilities (B,), and optionally the lattice (B, T + 1, n).
    """
    B, T, n = log_emit.shape
    alpha = initial_alpha(B, n, log_emit.dtype)
    columns = [alpha]
    for j in range(T):
        alpha = log_emit[:, j] + advance(alpha, log_trans[:, j])
        columns.append(alpha)
    lattice = torch.stack(columns, dim=1)
    final = lattice[torch.arange(B), tgt_len]
    logp = torch.logsumexp(final, dim=-1)
    if return_alpha:
        return logp, lattice
    return logp

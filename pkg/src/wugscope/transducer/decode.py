"""Beam search whose hypothesis scores are exact prefix log-probabilities.

Each hypothesis carries its forward column over source positions, so
extending it by one symbol costs one lattice step and the summed column is
the exact probability of the prefix.  Prefix probabilities never increase,
which makes "best finished >= best alive" a safe stopping rule.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import torch

from ..errors import ConfigError, InputError
from .model import NEG, advance, collate, initial_alpha
from .train import Transducer, _check_finite
from .vocab import BOS, EOS, encode_example

FAILED = None


def max_length(lemma: str) -> int:
    return 2 * len(lemma) + 10


def decode(model: Transducer, lemma: str, slot, beam_width: int = 4) -> tuple[str | None, float]:
    """Best non-empty EOS-terminated string and its exact log-probability.

    Returns ``(None, -inf)`` when no hypothesis terminates within the length cap.
    """
    return decode_batch(model, [(lemma, frozenset(slot))], beam_width)[0]


def decode_batch(
    model: Transducer, queries: Sequence, beam_width: int = 4, batch_size: int = 64
) -> list[tuple[str | None, float]]:
    if beam_width < 1:
        raise ConfigError("beam_width must be >= 1")
    _check_finite(model)
    out = []
    for start in range(0, len(queries), batch_size):
        out.extend(_beam(model, queries[start : start + batch_size], beam_width))
    return out


@torch.no_grad()
def _beam(model: Transducer, queries: Sequence, K: int) -> list[tuple[str | None, float]]:
    net, vocab = model.net, model.vocab
    net.eval()
    for q in queries:
        if not q[0]:
            raise InputError("empty lemma")
    encoded = [encode_example(vocab, q[0], q[1], None) for q in queries]
    batch = collate(encoded, vocab.n_features, net.dtype)
    enc = net.encode(batch)
    B, n = batch.src.shape
    V = vocab.size
    caps = [max_length(q[0]) for q in queries]

    # Rows are laid out example-major: row b * K + k.
    rows = torch.arange(B).repeat_interleave(K)
    enc = enc.select(rows)
    alpha = initial_alpha(B * K, n, net.dtype)
    score = torch.full((B, K), NEG, dtype=torch.float64)
    score[:, 0] = 0.0
    prev = torch.full((B * K,), BOS, dtype=torch.long)
    state = None
    prefixes: list[list[list[int]]] = [[[] for _ in range(K)] for _ in range(B)]
    best: list[tuple[float, list[int] | None]] = [(-math.inf, None) for _ in range(B)]
    done = [False] * B

    for step in range(max(caps) + 1):
        dec, state = net.decoder(net.decoder_inputs(prev[:, None], enc.tag), state)
        log_emit, log_trans = net.scores(enc, dec)
        mid = advance(alpha, log_trans[:, 0])  # (BK, n)
        ext = log_emit[:, 0] + mid[:, :, None]  # (BK, n, V)
        cand = torch.logsumexp(ext, dim=1).to(torch.float64)  # (BK, V)
        live = (score.reshape(-1) > NEG / 2)[:, None]
        cand = torch.where(live, cand, torch.full_like(cand, NEG))
        cand[:, net.output_mask] = NEG
        if step == 0:
            cand[:, EOS] = NEG  # forms are never empty
        cand = cand.reshape(B, K * V)

        top_all, idx_all = cand.topk(K, dim=1)
        no_eos = cand.clone()
        no_eos[:, EOS::V] = NEG
        top_alive, idx_alive = no_eos.topk(K, dim=1)

        new_rows = []
        new_prefixes = []
        for b in range(B):
            if done[b]:
                new_rows.extend([b * K] * K)
                new_prefixes.append([[] for _ in range(K)])
                continue
            for s, j in zip(top_all[b].tolist(), idx_all[b].tolist()):
                if s <= NEG / 2:
                    break
                k, c = divmod(j, V)
                if c == EOS and s > best[b][0]:
                    best[b] = (s, prefixes[b][k])
            picks = []
            for s, j in zip(top_alive[b].tolist(), idx_alive[b].tolist()):
                k, c = divmod(j, V)
                picks.append((k, c, s))
            alive_best = picks[0][2] if picks and picks[0][2] > NEG / 2 else -math.inf
            if step >= caps[b] or alive_best == -math.inf or best[b][0] >= alive_best:
                done[b] = True
            new_rows.extend(b * K + k for k, _, _ in picks)
            new_prefixes.append([prefixes[b][k] + [c] for k, c, _ in picks])
            score[b] = torch.tensor([s if not done[b] else NEG for _, _, s in picks], dtype=torch.float64)
            for slot, (k, c, _) in enumerate(picks):
                prev[b * K + slot] = c
        if all(done):
            break
        sel = torch.tensor(new_rows)
        chars = prev.clone()
        alpha = ext[sel, :, chars]
        state = tuple(h[:, sel] for h in state)
        prefixes = new_prefixes
        score[torch.tensor(done)] = NEG

    results = []
    for b in range(B):
        s, ids = best[b]
        if ids is None:
            results.append((FAILED, -math.inf))
        else:
            results.append((vocab.decode_ids(ids), s))
    return results


def accuracy(model: Transducer, examples: Sequence, beam_width: int = 4) -> float:
    """Fraction of (lemma, slot, form) examples whose decoded string equals the form."""
    if not examples:
        raise InputError("accuracy needs a non-empty test set")
    decoded = decode_batch(model, [(e[0], e[1]) for e in examples], beam_width)
    hits = sum(1 for (pred, _), e in zip(decoded, examples) if pred is not None and pred == e[2])
    return hits / len(examples)

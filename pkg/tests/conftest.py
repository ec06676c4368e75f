import itertools

import numpy as np
import pytest
import torch

from wugscope.corpus import FeatureInventory
from wugscope.transducer import TrainConfig, Vocabulary, build_model

ALPHABET = "abc"
SLOTS = (frozenset({"V", "PST"}), frozenset({"V", "PRS", "3SG"}))


def tiny_model(seed=0, embed_dim=4, hidden_dim=3, init_scale=1.0):
    """Untrained model over a 3-letter alphabet; large init spreads probabilities out."""
    vocab = Vocabulary(tuple(ALPHABET), FeatureInventory.from_slots(SLOTS))
    cfg = TrainConfig(embed_dim=embed_dim, hidden_dim=hidden_dim, seed=seed, init_scale=init_scale)
    return build_model(vocab, cfg)


def strings(max_len, alphabet=ALPHABET, min_len=1):
    for k in range(min_len, max_len + 1):
        for t in itertools.product(alphabet, repeat=k):
            yield "".join(t)


def monotonic_paths(n_src, steps):
    """All position sequences a_1..a_T with 0 <= a_1 <= ... <= a_T < n_src (a_0 = 0)."""
    return list(itertools.combinations_with_replacement(range(n_src), steps))


def brute_force_logprob(log_emit, log_trans, src_len, tgt_len):
    """Sum over every monotonic alignment path, one path at a time."""
    e = log_emit.detach().numpy()
    t = log_trans.detach().numpy()
    total = -np.inf
    for path in monotonic_paths(src_len, tgt_len):
        prev, s = 0, 0.0
        for j, i in enumerate(path):
            s += t[j, prev, i] + e[j, i]
            prev = i
        total = np.logaddexp(total, s)
    return total


@pytest.fixture
def model():
    return tiny_model(seed=3)


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

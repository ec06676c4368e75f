"""Lexeme-level cross-validation splits.

All forms of a lexeme live in the same split, so a model evaluated on the
test split has never seen any form of the lexemes it is scored on.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .errors import ConfigError, ParseError
from .rng import PRNG_ID, SplitMix64


@dataclass(frozen=True)
class SplitAssignment:
    k: int
    assignment: dict
    seed: int = 0
    prng: str = PRNG_ID

    def members(self, split: int) -> list[str]:
        return [lex for lex, s in self.assignment.items() if s == split]

    def sizes(self) -> list[int]:
        out = [0] * self.k
        for s in self.assignment.values():
            out[s] += 1
        return out


@dataclass(frozen=True)
class Fold:
    index: int
    test_split: int
    dev_split: int
    train_splits: tuple[int, ...]


def assign_splits(lexemes: Iterable[str], k: int = 10, seed: int = 0) -> SplitAssignment:
    """Shuffle lexemes with a seeded SplitMix64 stream and deal them round-robin."""
    order = list(dict.fromkeys(lexemes))
    if k < 3:
        raise ConfigError(f"need at least 3 splits (train/dev/test), got k={k}")
    if len(order) < k:
        raise ConfigError(f"{len(order)} lexemes cannot fill {k} splits")
    SplitMix64(seed).shuffle(order)
    assignment = {lex: i % k for i, lex in enumerate(order)}
    return SplitAssignment(k, assignment, seed)


def folds(sa: SplitAssignment) -> list[Fold]:
    """Fold i tests on split i and tunes on split (i + 1) mod k."""
    out = []
    for i in range(sa.k):
        dev = (i + 1) % sa.k
        train = tuple(s for s in range(sa.k) if s not in (i, dev))
        out.append(Fold(i, i, dev, train))
    return out


def fold_lexemes(sa: SplitAssignment, fold: Fold) -> tuple[list[str], list[str], list[str]]:
    """(train, dev, test) lexeme lists for one fold, in assignment order."""
    train_set = set(fold.train_splits)
    train, dev, test = [], [], []
    for lex, s in sa.assignment.items():
        if s == fold.test_split:
            test.append(lex)
        elif s == fold.dev_split:
            dev.append(lex)
        elif s in train_set:
            train.append(lex)
    return train, dev, test


def write_manifest(sa: SplitAssignment) -> str:
    header = json.dumps({"k": sa.k, "seed": sa.seed, "prng": sa.prng}, sort_keys=True)
    body = "".join(f"{lex}\t{s}\n" for lex, s in sa.assignment.items())
    return f"# {header}\n{body}"


def read_manifest(lines: Sequence[str] | str) -> SplitAssignment:
    if isinstance(lines, str):
        lines = lines.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError("split manifest lacks its JSON header", 1)
    meta = json.loads(lines[0][1:])
    assignment = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 2 or not parts[1].isdigit():
            raise ParseError("expected lexeme<TAB>split_index", lineno)
        idx = int(parts[1])
        if idx >= meta["k"]:
            raise ParseError(f"split index {idx} out of range", lineno)
        assignment[parts[0]] = idx
    return SplitAssignment(meta["k"], assignment, meta.get("seed", 0), meta.get("prng", PRNG_ID))

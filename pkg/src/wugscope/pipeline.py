"""End-to-end procedure: ingest, prepare, split, train and score per fold, analyze.

Every stage writes its own files under ``<out>/<language>/`` so the CLI can
resume from any of them.  ``run_pipeline`` chains the stages in memory and
writes the same files along the way.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import Prediction, write_collapsed, write_predictions, write_scores, write_text
from .corpus import FrequencyTable, format_slot, parse_frequency, parse_unimorph, serialize_frequency, serialize_unimorph
from .cvsplit import SplitAssignment, assign_splits, fold_lexemes, folds, write_manifest
from .errors import InputError, WugscopeError
from .irregularity import CLAMP_BOUND, EPSILON, UndefinedScore, iota_from_logprob, iota_lexeme, language_average
from .prep import CollapsedParadigm, Derivation, collapse, find_derivations, format_derivations
from .stats import (
    Exclusions,
    FormScore,
    aic_log_odds,
    build_observations,
    compare_models,
    likelihood_ratio_test,
    pearson,
    spearman,
)
from .transducer import TrainConfig, Transducer, decode_batch, score, train
from .transducer import checkpoint

log = logging.getLogger(__name__)


class StageError(WugscopeError):
    def __init__(self, stage: str, language: str | None, cause: Exception):
        self.stage = stage
        self.language = language
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        where = f" [{language}]" if language else ""
        super().__init__(f"stage {stage}{where} failed: {cause}")


@dataclass(frozen=True)
class LanguageInput:
    name: str
    unimorph: Path
    freq: Path
    gold: Path | None = None
    filter_derived: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    languages: tuple[LanguageInput, ...]
    out: Path = Path("wugscope-out")
    folds: int = 10
    seed: int = 0
    train: TrainConfig = TrainConfig()
    beam: int = 4
    threshold: float = 0.75
    jobs: int = 1
    normalization: str = "NFC"

    def provenance(self) -> dict:
        """Everything that can change results; output dir and job count excluded."""
        return {
            "languages": [
                {"name": l.name, "unimorph": str(l.unimorph), "freq": str(l.freq),
                 "gold": None if l.gold is None else str(l.gold), "filter_derived": l.filter_derived}
                for l in self.languages
            ],
            "folds": self.folds,
            "seed": self.seed,
            "train": self.train.to_dict(),
            "beam": self.beam,
            "threshold": self.threshold,
            "normalization": self.normalization,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.provenance(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class LanguageData:
    name: str
    paradigms: dict[str, CollapsedParadigm]
    freq: FrequencyTable
    derivations: list[Derivation] = field(default_factory=list)
    n_input_lexemes: int = 0


@dataclass
class LanguageResult:
    name: str
    scores: list[FormScore]
    predictions: list[Prediction]
    fold_accuracy: list[float]
    models: list[dict] = field(default_factory=list)  # checkpoint dicts, fold order

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    @property
    def pooled_accuracy(self) -> float:
        return sum(p.correct for p in self.predictions) / len(self.predictions)


# -- preparation ---------------------------------------------------------------

def prepare_language(name: str, raw: Mapping, freq: FrequencyTable, filter_enabled: bool = True) -> LanguageData:
    """Collapse syncretism, then drop derived lexemes (unless disabled for this language)."""
    collapsed = {lex: collapse(p) for lex, p in raw.items()}
    derivations = find_derivations(collapsed.values()) if filter_enabled else []
    derived = {d.lexeme for d in derivations}
    kept = {lex: p for lex, p in collapsed.items() if lex not in derived}
    return LanguageData(name, kept, freq, derivations, len(raw))


def load_language(spec: LanguageInput, normalization: str = "NFC") -> LanguageData:
    raw = parse_unimorph(Path(spec.unimorph).read_text(encoding="utf-8"), normalization, str(spec.unimorph))
    freq = parse_frequency(Path(spec.freq).read_text(encoding="utf-8"), normalization, str(spec.freq))
    return prepare_language(spec.name, raw, freq, spec.filter_derived)


def inflected_examples(paradigms: Mapping[str, CollapsedParadigm], lexemes: Sequence[str]) -> list[tuple]:
    """(lemma, merged slot, form) for every non-lemma cell of the given lexemes."""
    out = []
    for lex in lexemes:
        p = paradigms[lex]
        out.extend((p.lemma, slot, form) for slot, form in p.inflected())
    return out


# -- cross-validation ----------------------------------------------------------

@dataclass(frozen=True)
class FoldTask:
    language: str
    fold: int
    train: list
    dev: list
    test: list  # (lexeme, lemma, merged slot, form)


def fold_tasks(data: LanguageData, sa: SplitAssignment) -> list[FoldTask]:
    tasks = []
    for fold in folds(sa):
        train_lex, dev_lex, test_lex = fold_lexemes(sa, fold)
        test_rows = []
        for lex in test_lex:
            p = data.paradigms[lex]
            test_rows.extend((lex, p.lemma, slot, form) for slot, form in p.inflected())
        tasks.append(FoldTask(
            data.name, fold.index,
            inflected_examples(data.paradigms, train_lex),
            inflected_examples(data.paradigms, dev_lex),
            test_rows,
        ))
    return tasks


def evaluate_fold(task: FoldTask, model: Transducer, beam: int) -> dict:
    """Score and decode the held-out rows of one fold."""
    queries = [(lemma, slot, form) for _, lemma, slot, form in task.test]
    log_p = score(model, queries) if queries else np.zeros(0)
    decoded = decode_batch(model, [(q[0], q[1]) for q in queries], beam) if queries else []
    scores, preds = [], []
    for (lexeme, lemma, slot, form), lp, (pred, pred_lp) in zip(task.test, log_p, decoded):
        lp = float(min(lp, 0.0))
        scores.append(FormScore(task.language, lexeme, slot, form, lp, iota_from_logprob(lp).value))
        preds.append(Prediction(task.language, task.fold, lexeme, slot, form, pred, float(pred_lp)))
    return {"fold": task.fold, "scores": scores, "predictions": preds}


def _train_and_evaluate(args) -> dict:
    task, train_config, beam = args
    model = train(task.train, task.dev, train_config)
    outcome = evaluate_fold(task, model, beam)
    outcome["checkpoint"] = checkpoint.to_dict(model)
    return outcome


def fold_accuracies(predictions: Sequence[Prediction]) -> list[float]:
    """Per-fold accuracy in fold order; folds without test forms are skipped."""
    hits: dict[int, list[int]] = {}
    for p in predictions:
        hits.setdefault(p.fold, []).append(int(p.correct))
    return [sum(h) / len(h) for _, h in sorted(hits.items())]


def merge_outcomes(language: str, outcomes: Sequence[dict]) -> LanguageResult:
    outcomes = sorted(outcomes, key=lambda o: o["fold"])
    scores = [s for o in outcomes for s in o["scores"]]
    preds = [p for o in outcomes for p in o["predictions"]]
    scores.sort(key=lambda s: (s.lexeme, format_slot(s.slot)))
    preds.sort(key=lambda p: (p.lexeme, format_slot(p.slot)))
    return LanguageResult(language, scores, preds, fold_accuracies(preds),
                          [o["checkpoint"] for o in outcomes if "checkpoint" in o])


def cross_validate(
    data: LanguageData, sa: SplitAssignment, train_config: TrainConfig, beam: int = 4, jobs: int = 1
) -> LanguageResult:
    """Train one model per fold and score the fold's held-out lexemes.

    Each lexeme is in exactly one test split, so each form is scored once, by a
    model that never saw any form of its lexeme.
    """
    work = [(t, train_config, beam) for t in fold_tasks(data, sa)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_train_and_evaluate, work))
    else:
        outcomes = [_train_and_evaluate(w) for w in work]
    return merge_outcomes(data.name, outcomes)


# -- analysis ------------------------------------------------------------------

def _correlation(x, y) -> dict:
    try:
        r, p = pearson(x, y)
    except InputError as exc:
        return {"n": len(x), "r": None, "p": None, "note": str(exc)}
    return {"n": len(x), "r": r, "p": p}


def _pooled(obs) -> dict:
    try:
        full, null = compare_models(obs)
    except InputError as exc:
        return {"n": len(obs), "note": str(exc)}
    stat, df, p = likelihood_ratio_test(full, null)
    return {
        "n": len(obs),
        "beta0": full.beta0,
        "beta1": full.beta1,
        "varcomps": {"re_cov": full.re_cov.tolist(), "residual": float(full.residual_var)},
        "loglik": float(full.loglik),
        "aic": float(full.aic),
        "converged": full.converged,
        "null": null.to_dict(),
        "lrt_chi2": float(stat),
        "lrt_df": df,
        "lrt_p": float(p),
        "aic_log_odds": float(aic_log_odds(full, null)),
    }


def lexeme_scores(data: LanguageData, scores: Sequence[FormScore]) -> dict[str, float]:
    by_lex: dict[str, dict] = {}
    for s in scores:
        by_lex.setdefault(s.lexeme, {})[s.slot] = s.iota
    out = {}
    for lex, form_scores in by_lex.items():
        try:
            out[lex] = iota_lexeme(data.paradigms[lex], form_scores).value
        except UndefinedScore:
            continue
    return out


def analyze(
    data: Mapping[str, LanguageData],
    results: Mapping[str, LanguageResult],
    threshold: float = 0.75,
) -> dict:
    """Accuracy table for every language; irregularity statistics for those passing the gate."""
    languages = {}
    included = []
    for name in sorted(results):
        res, d = results[name], data[name]
        n_forms = len(res.scores)
        acc = res.accuracy if res.fold_accuracy else 0.0
        entry = {
            "accuracy": acc,
            "accuracy_pooled": res.pooled_accuracy if res.predictions else 0.0,
            "fold_accuracy": res.fold_accuracy,
            "fold_accuracy_var": float(np.var(res.fold_accuracy)) if res.fold_accuracy else 0.0,
            "lexemes": len(d.paradigms),
            "forms": n_forms,
            "forms_per_lexeme": n_forms / len(d.paradigms) if d.paradigms else 0.0,
            "derived_removed": len({x.lexeme for x in d.derivations}),
            "included": acc >= threshold,
        }
        if entry["included"]:
            included.append(name)
        languages[name] = entry

    freqs = {n: data[n].freq for n in results}
    paradigms = {n: data[n].paradigms for n in results}
    all_scores = [s for n in sorted(results) for s in results[n].scores]
    exclusions = {}
    pooled = {}
    for level in ("form", "lexeme"):
        exc = Exclusions()
        obs = build_observations(all_scores, freqs, level, included, paradigms, exc)
        exclusions[level] = exc.to_dict()
        for name in included:
            languages[name][f"{level}_level"] = _correlation(*obs.for_language(name))
        pooled[level] = _pooled(obs)

    for name in included:
        languages[name]["avg_iota"] = language_average([s.iota for s in results[name].scores])
        languages[name]["avg_iota_lexeme"] = (
            float(np.mean(list(lexeme_scores(data[name], results[name].scores).values())))
            if results[name].scores else None
        )
    return {"languages": languages, "included": included, "pooled": pooled, "exclusions": exclusions}


def validate(scores: Sequence[FormScore], gold: Mapping[str, float], data: LanguageData | None = None,
             level: str = "auto") -> dict:
    """Spearman correlation between irregularity and gold labels over shared keys.

    Keys are matched against forms (form level) or lexemes (lexeme level, which
    needs the paradigms).  ``auto`` picks whichever level shares more keys.
    """
    form_iota = {s.form: s.iota for s in scores}
    lex_iota = lexeme_scores(data, scores) if data is not None else {}
    if level == "auto":
        level = "lexeme" if len(gold.keys() & lex_iota.keys()) > len(gold.keys() & form_iota.keys()) else "form"
    table = lex_iota if level == "lexeme" else form_iota
    keys = sorted(gold.keys() & table.keys())
    if not keys:
        raise InputError("gold labels share no keys with the scored units")
    rho, p = spearman([table[k] for k in keys], [gold[k] for k in keys])
    return {"level": level, "n": len(keys), "rho": rho, "p": p}


# -- orchestration -------------------------------------------------------------

def provenance_block(config: PipelineConfig) -> dict:
    from .rng import PRNG_ID

    return {
        "version": __version__,
        "config_hash": config.config_hash(),
        "config": config.provenance(),
        "prng": PRNG_ID,
        "epsilon": EPSILON,
        "iota_bound": CLAMP_BOUND,
        "log_base": "e",
        "estimation": "ML",
        "lemma_cells": "excluded from training, scoring and all irregularity statistics",
        "accuracy_gate": "mean of per-fold accuracies >= threshold",
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_language_stage_files(out: Path, data: LanguageData, raw_text: str | None = None) -> None:
    d = out / data.name
    if raw_text is not None:
        write_text(d / "paradigms.tsv", raw_text)
    write_text(d / "freq.tsv", serialize_frequency(data.freq))
    write_text(d / "collapsed.tsv", write_collapsed(data.paradigms.values()))
    write_text(d / "derived.tsv", format_derivations(data.derivations))


def write_result_files(out: Path, result: LanguageResult) -> None:
    d = out / result.name
    write_text(d / "scores.tsv", write_scores(result.scores))
    write_text(d / "predictions.tsv", write_predictions(result.predictions))
    for i, ck in enumerate(result.models):
        write_text(d / "models" / f"fold{i}.json", json.dumps(ck, sort_keys=True))


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage for every language and return the analysis report."""
    if not config.languages:
        raise InputError("no input languages configured")
    out = Path(config.out)
    data, results = {}, {}
    for spec in config.languages:
        name = spec.name
        try:
            raw = parse_unimorph(Path(spec.unimorph).read_text(encoding="utf-8"),
                                 config.normalization, str(spec.unimorph))
            freq = parse_frequency(Path(spec.freq).read_text(encoding="utf-8"),
                                   config.normalization, str(spec.freq))
        except (OSError, WugscopeError) as exc:
            raise StageError("ingest", name, exc) from exc
        try:
            d = prepare_language(name, raw, freq, spec.filter_derived)
        except WugscopeError as exc:
            raise StageError("prep", name, exc) from exc
        write_language_stage_files(out, d, serialize_unimorph(raw.values()))
        try:
            sa = assign_splits(list(d.paradigms), config.folds, config.seed)
        except WugscopeError as exc:
            raise StageError("split", name, exc) from exc
        write_text(out / name / "splits.tsv", write_manifest(sa))
        try:
            res = cross_validate(d, sa, config.train, config.beam, config.jobs)
        except WugscopeError as exc:
            raise StageError("train/score", name, exc) from exc
        write_result_files(out, res)
        data[name], results[name] = d, res

    try:
        report = analyze(data, results, config.threshold)
    except WugscopeError as exc:
        raise StageError("analyze", None, exc) from exc
    report["provenance"] = provenance_block(config)
    validation = {}
    for spec in config.languages:
        if spec.gold is not None:
            gold = _read_gold(spec.gold)
            try:
                validation[spec.name] = validate(results[spec.name].scores, gold, data[spec.name])
            except InputError as exc:
                validation[spec.name] = {"note": str(exc)}
    if validation:
        report["validation"] = validation
    write_text(out / "report.json", dumps_report(report))
    return report


def _read_gold(path) -> dict[str, float]:
    from .artifacts import read_gold

    return read_gold(Path(path).read_text(encoding="utf-8"), str(path))

"""Command-line entry point.

Each stage reads and writes files under ``--out`` (one directory per
language) so a run can be resumed from any stage::

    ingest -> prep -> split -> train -> score -> analyze -> report

``run`` does all of them in one go.  Exit codes: 0 success, 1 input error,
2 numeric or convergence failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .artifacts import read_collapsed, read_gold, read_predictions, read_scores, write_predictions, write_scores, write_text
from .config import build_config, format_config, resolve
from .corpus import parse_frequency, parse_unimorph, serialize_frequency, serialize_unimorph
from .cvsplit import assign_splits, read_manifest, write_manifest
from .errors import ConfigError, InputError, WugscopeError
from .figures import render_figures
from .pipeline import (
    LanguageData,
    LanguageResult,
    PipelineConfig,
    StageError,
    analyze,
    dumps_report,
    evaluate_fold,
    fold_tasks,
    merge_outcomes,
    prepare_language,
    provenance_block,
    run_pipeline,
    validate,
    write_language_stage_files,
)
from .prep import parse_derivations
from .synth import SynthConfig, generate
from .transducer import checkpoint, train

log = logging.getLogger("wugscope")


# -- argument plumbing -----------------------------------------------------------

def _pairs(values, flag: str) -> dict[str, str]:
    """NAME=PATH pairs; a bare PATH is named after its file stem."""
    out = {}
    for v in values or ():
        name, sep, path = v.partition("=")
        if not sep:
            name, path = Path(v).stem.split(".")[0], v
        if not name or not path:
            raise ConfigError(f"{flag} expects NAME=PATH, got {v!r}")
        out[name] = path
    return out


def _overrides(args) -> dict[str, str]:
    o: dict[str, str] = {}
    inputs = _pairs(getattr(args, "input", None), "--input")
    freqs = _pairs(getattr(args, "freq", None), "--freq")
    golds = _pairs(getattr(args, "gold", None), "--gold")
    # a bare --freq/--gold with a single --input belongs to that language
    if len(inputs) == 1:
        (only,) = inputs
        for table in (freqs, golds):
            for name in list(table):
                if name not in inputs and len(table) == 1:
                    table[only] = table.pop(name)
    for name, path in inputs.items():
        o[f"language.{name}.input"] = path
    for name, path in freqs.items():
        o[f"language.{name}.freq"] = path
    for name, path in golds.items():
        o[f"language.{name}.gold"] = path
    for name in getattr(args, "no_filter", None) or ():
        o[f"language.{name}.filter_derived"] = "false"
    for flag in ("folds", "seed", "threshold", "beam", "jobs", "out", "normalization"):
        value = getattr(args, flag, None)
        if value is not None:
            o[flag] = str(value)
    for item in getattr(args, "set", None) or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        o[key.strip()] = value.strip()
    return o


def load_config(args, require_languages: bool = False) -> PipelineConfig:
    text = None
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    settings = resolve(text, os.environ, _overrides(args))
    return build_config(settings, require_languages)


def _language_names(config: PipelineConfig, needed: str) -> list[str]:
    """Configured languages, else every language directory holding ``needed``."""
    if config.languages:
        return [l.name for l in config.languages]
    out = Path(config.out)
    names = sorted(p.parent.name for p in out.glob(f"*/{needed}"))
    if not names:
        raise InputError(f"no language under {out} has {needed}; run the earlier stages first")
    return names


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _load_data(config: PipelineConfig, name: str) -> LanguageData:
    d = Path(config.out) / name
    paradigms = read_collapsed(_read(d / "collapsed.tsv"), str(d / "collapsed.tsv"))
    freq = parse_frequency(_read(d / "freq.tsv"), "none", str(d / "freq.tsv"))
    derived = d / "derived.tsv"
    derivations = parse_derivations(_read(derived)) if derived.exists() else []
    return LanguageData(name, paradigms, freq, derivations, len(paradigms))


def _staged(stage: str, name: str | None, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except (WugscopeError, OSError) as exc:
        raise StageError(stage, name, exc) from exc


# -- stages ------------------------------------------------------------------

def cmd_ingest(args) -> None:
    config = load_config(args, require_languages=True)
    for lang in config.languages:
        def step(lang=lang):
            raw = parse_unimorph(_read(lang.unimorph), config.normalization, str(lang.unimorph))
            freq = parse_frequency(_read(lang.freq), config.normalization, str(lang.freq))
            d = Path(config.out) / lang.name
            write_text(d / "paradigms.tsv", serialize_unimorph(raw.values()))
            write_text(d / "freq.tsv", serialize_frequency(freq))
            print(f"{lang.name}: {len(raw)} lexemes, {len(freq)} frequency entries")
        _staged("ingest", lang.name, step)


def cmd_prep(args) -> None:
    config = load_config(args)
    filters = {l.name: l.filter_derived for l in config.languages}
    for name in _language_names(config, "paradigms.tsv"):
        def step(name=name):
            d = Path(config.out) / name
            raw = parse_unimorph(_read(d / "paradigms.tsv"), "none", str(d / "paradigms.tsv"))
            freq = parse_frequency(_read(d / "freq.tsv"), "none", str(d / "freq.tsv"))
            data = prepare_language(name, raw, freq, filters.get(name, True))
            write_language_stage_files(Path(config.out), data)
            print(f"{name}: {len(data.paradigms)} lexemes kept, {len(data.derivations)} derivations removed")
        _staged("prep", name, step)


def cmd_split(args) -> None:
    config = load_config(args)
    for name in _language_names(config, "collapsed.tsv"):
        def step(name=name):
            data = _load_data(config, name)
            sa = assign_splits(list(data.paradigms), config.folds, config.seed)
            write_text(Path(config.out) / name / "splits.tsv", write_manifest(sa))
            print(f"{name}: {config.folds} splits of sizes {sa.sizes()}")
        _staged("split", name, step)


def _tasks(config: PipelineConfig, name: str):
    data = _load_data(config, name)
    sa = read_manifest(_read(Path(config.out) / name / "splits.tsv"))
    return fold_tasks(data, sa)


def cmd_train(args) -> None:
    config = load_config(args)
    for name in _language_names(config, "splits.tsv"):
        def step(name=name):
            for task in _tasks(config, name):
                if args.fold is not None and task.fold != args.fold:
                    continue
                model = train(task.train, task.dev, config.train)
                path = Path(config.out) / name / "models" / f"fold{task.fold}.json"
                path.parent.mkdir(parents=True, exist_ok=True)
                checkpoint.save(model, path)
                print(f"{name}: fold {task.fold} trained ({len(model.history)} epochs)")
        _staged("train", name, step)


def cmd_score(args) -> None:
    config = load_config(args)
    for name in _language_names(config, "splits.tsv"):
        def step(name=name):
            outcomes = []
            for task in _tasks(config, name):
                model = checkpoint.load(Path(config.out) / name / "models" / f"fold{task.fold}.json")
                outcomes.append(evaluate_fold(task, model, config.beam))
            res = merge_outcomes(name, outcomes)
            d = Path(config.out) / name
            write_text(d / "scores.tsv", write_scores(res.scores))
            write_text(d / "predictions.tsv", write_predictions(res.predictions))
            print(f"{name}: {len(res.scores)} forms scored, accuracy {res.accuracy:.4f}")
        _staged("score", name, step)


def cmd_analyze(args) -> None:
    config = load_config(args)
    data, results = {}, {}
    for name in _language_names(config, "scores.tsv"):
        def step(name=name):
            d = Path(config.out) / name
            data[name] = _load_data(config, name)
            scores = read_scores(_read(d / "scores.tsv"), str(d / "scores.tsv"))
            preds = read_predictions(_read(d / "predictions.tsv"), str(d / "predictions.tsv"))
            results[name] = merge_outcomes(name, [{"fold": 0, "scores": scores, "predictions": preds}])
        _staged("analyze", name, step)
    report = _staged("analyze", None, analyze, data, results, config.threshold)
    report["provenance"] = provenance_block(config)
    write_text(Path(config.out) / "report.json", dumps_report(report))
    print_accuracy_table(report)


def cmd_report(args) -> None:
    config = load_config(args)
    path = Path(config.out) / "report.json"
    report = json.loads(_read(path))
    paths = render_figures(report, Path(config.out) / "figures")
    print_accuracy_table(report)
    for p in paths:
        print(p)


def cmd_run(args) -> None:
    config = load_config(args, require_languages=True)
    out = Path(config.out)
    write_text(out / "config.resolved", format_config(config))
    report = run_pipeline(config)
    render_figures(report, out / "figures")
    print_accuracy_table(report)


def cmd_synth(args) -> None:
    suffixes = tuple(args.suffixes.split(",")) if args.suffixes else None
    cfg = SynthConfig(
        n_lexemes=args.lexemes, n_slots=args.slots, alphabet_size=args.alphabet,
        suffixes=suffixes, n_suppletive=args.suppletive, coupling=args.coupling,
        zipf_s=args.zipf, seed=args.seed if args.seed is not None else 0,
        n_subregular=args.subregular,
    )
    lang = generate(cfg)
    paths = lang.write(args.out or ".", args.name)
    for kind, path in paths.items():
        print(f"{kind}\t{path}")


def cmd_validate(args) -> None:
    scores = read_scores(_read(Path(args.scores)), args.scores)
    gold = read_gold(_read(Path(args.gold_file)), args.gold_file)
    data = None
    if args.collapsed:
        paradigms = read_collapsed(_read(Path(args.collapsed)), args.collapsed)
        data = LanguageData("", paradigms, None)
    result = validate(scores, gold, data, args.level)
    print(f"level={result['level']}\tn={result['n']}\trho={result['rho']:.6f}\tp={result['p']:.6g}")


def print_accuracy_table(report: dict) -> None:
    print("language\taccuracy\tlexemes\tforms\tforms/lexeme\tincluded\tavg_iota")
    for name, e in sorted(report["languages"].items()):
        avg = e.get("avg_iota")
        avg = "-" if avg is None else f"{avg:.4f}"
        print(f"{name}\t{e['accuracy']:.4f}\t{e['lexemes']}\t{e['forms']}\t"
              f"{e['forms_per_lexeme']:.2f}\t{'yes' if e['included'] else 'no'}\t{avg}")


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wugscope", description="Wug-test irregularity pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--input", action="append", metavar="NAME=PATH", help="UniMorph TSV (repeatable)")
    common.add_argument("--freq", action="append", metavar="NAME=PATH", help="frequency TSV (repeatable)")
    common.add_argument("--gold", action="append", metavar="NAME=PATH", help="gold irregularity labels")
    common.add_argument("--no-filter", action="append", metavar="NAME", help="keep derived lexemes for NAME")
    common.add_argument("--folds", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--beam", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--normalization")
    common.add_argument("--out")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="any config key, e.g. train.max_epochs=20")

    for name, fn, help_text in (
        ("ingest", cmd_ingest, "parse and normalize inputs"),
        ("prep", cmd_prep, "collapse syncretism, remove derived lexemes"),
        ("split", cmd_split, "assign lexemes to cross-validation splits"),
        ("train", cmd_train, "train one model per fold"),
        ("score", cmd_score, "score and decode held-out forms"),
        ("analyze", cmd_analyze, "accuracy gate and frequency statistics"),
        ("report", cmd_report, "render figures from report.json"),
        ("run", cmd_run, "all stages end to end"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        if name == "train":
            p.add_argument("--fold", type=int, help="train only this fold")

    p = sub.add_parser("synth", help="write a synthetic language")
    p.add_argument("--out")
    p.add_argument("--name", default="synth")
    p.add_argument("--seed", type=int)
    p.add_argument("--lexemes", type=int, default=300)
    p.add_argument("--slots", type=int, default=6)
    p.add_argument("--alphabet", type=int, default=10)
    p.add_argument("--suffixes", help="comma-separated, one per slot")
    p.add_argument("--suppletive", type=int, default=0)
    p.add_argument("--subregular", type=int, default=0)
    p.add_argument("--coupling", default="uniform", choices=("uniform", "high-frequency"))
    p.add_argument("--zipf", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="Spearman correlation of scores with gold labels")
    p.add_argument("--scores", required=True, help="scores.tsv from the score stage")
    p.add_argument("--gold", dest="gold_file", required=True, help="key<TAB>label file")
    p.add_argument("--collapsed", help="collapsed.tsv, enables lexeme-level keys")
    p.add_argument("--level", default="auto", choices=("auto", "form", "lexeme"))
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except WugscopeError as exc:
        print(f"wugscope: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"wugscope: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

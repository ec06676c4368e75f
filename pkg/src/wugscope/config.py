"""Flat ``key = value`` configuration with environment overrides.

Keys::

    seed, folds, beam, threshold, jobs, out, normalization
    train.<field>                       any TrainConfig field
    language.<name>.input / .freq / .gold / .filter_derived

Precedence, lowest first: built-in defaults, config file, environment,
command-line flags.  An environment variable is the key upper-cased with
dots written as double underscores, prefixed ``WUGSCOPE_``; for example
``WUGSCOPE_TRAIN__MAX_EPOCHS=20`` or ``WUGSCOPE_LANGUAGE__EN__INPUT=en.tsv``.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Mapping
from pathlib import Path

from .corpus import NORMALIZATIONS
from .errors import ConfigError
from .pipeline import LanguageInput, PipelineConfig
from .transducer import TrainConfig

ENV_PREFIX = "WUGSCOPE_"
TOP_KEYS = ("seed", "folds", "beam", "threshold", "jobs", "out", "normalization")
LANGUAGE_KEYS = ("input", "freq", "gold", "filter_derived")
TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def parse_config(text: str, name: str = "<config>") -> dict[str, str]:
    settings = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{name}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        check_key(key)
        settings[key] = value
    return settings


def check_key(key: str) -> None:
    parts = key.split(".")
    if len(parts) == 1 and key in TOP_KEYS:
        return
    if len(parts) == 2 and parts[0] == "train" and parts[1] in TRAIN_FIELDS:
        return
    if len(parts) == 3 and parts[0] == "language" and parts[1] and parts[2] in LANGUAGE_KEYS:
        return
    raise ConfigError(f"unknown configuration key {key!r}")


def env_settings(environ: Mapping[str, str]) -> dict[str, str]:
    out = {}
    for var, value in environ.items():
        if not var.startswith(ENV_PREFIX):
            continue
        key = var[len(ENV_PREFIX):].lower().replace("__", ".")
        check_key(key)
        out[key] = value
    return out


def resolve(file_text: str | None = None, environ: Mapping[str, str] | None = None,
            overrides: Mapping[str, str] | None = None) -> dict[str, str]:
    settings: dict[str, str] = {}
    if file_text is not None:
        settings.update(parse_config(file_text))
    if environ is not None:
        settings.update(env_settings(environ))
    for key, value in (overrides or {}).items():
        check_key(key)
        settings[key] = value
    return settings


def _number(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not a valid {kind.__name__}") from None


def _bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: {value!r} is not a boolean")


def build_config(settings: Mapping[str, str], require_languages: bool = True) -> PipelineConfig:
    train_kwargs = {}
    for key, value in settings.items():
        if key.startswith("train."):
            field = key[len("train."):]
            kind = {"int": int, "float": float}.get(TRAIN_FIELDS[field], str)
            train_kwargs[field] = _number(key, value, kind) if kind is not str else value

    langs: dict[str, dict[str, str]] = {}
    for key, value in settings.items():
        if key.startswith("language."):
            _, name, attr = key.split(".")
            langs.setdefault(name, {})[attr] = value
    languages = []
    for name in sorted(langs):
        entry = langs[name]
        if "input" not in entry or "freq" not in entry:
            raise ConfigError(f"language {name!r} needs both input and freq paths")
        languages.append(LanguageInput(
            name, Path(entry["input"]), Path(entry["freq"]),
            Path(entry["gold"]) if entry.get("gold") else None,
            _bool(f"language.{name}.filter_derived", entry.get("filter_derived", "true")),
        ))
    if require_languages and not languages:
        raise ConfigError("no languages configured (use --input NAME=PATH and --freq NAME=PATH)")

    config = PipelineConfig(
        tuple(languages),
        out=Path(settings.get("out", "wugscope-out")),
        folds=_number("folds", settings.get("folds", "10"), int),
        seed=_number("seed", settings.get("seed", "0"), int),
        train=TrainConfig(**train_kwargs),
        beam=_number("beam", settings.get("beam", "4"), int),
        threshold=_number("threshold", settings.get("threshold", "0.75"), float),
        jobs=_number("jobs", settings.get("jobs", "1"), int),
        normalization=settings.get("normalization", "NFC"),
    )
    check_config(config)
    return config


def check_config(config: PipelineConfig) -> None:
    if not 0 < config.threshold <= 1:
        raise ConfigError("threshold must lie in (0, 1]")
    if config.folds < 3:
        raise ConfigError("folds must be >= 3")
    if config.beam < 1:
        raise ConfigError("beam must be >= 1")
    if config.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if config.normalization not in NORMALIZATIONS:
        raise ConfigError(f"normalization must be one of {sorted(NORMALIZATIONS)}")
    names = [l.name for l in config.languages]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate language names")
    paths = [p for l in config.languages for p in (l.unimorph, l.freq, l.gold) if p is not None]
    if len({str(Path(p).resolve()) for p in paths}) != len(paths):
        raise ConfigError("input paths must be distinct")


def format_config(config: PipelineConfig) -> str:
    """The fully resolved configuration in the same flat format."""
    lines = [
        f"seed = {config.seed}",
        f"folds = {config.folds}",
        f"beam = {config.beam}",
        f"threshold = {config.threshold!r}",
        f"jobs = {config.jobs}",
        f"out = {config.out}",
        f"normalization = {config.normalization}",
    ]
    for key, value in config.train.to_dict().items():
        lines.append(f"train.{key} = {value!r}" if isinstance(value, float) else f"train.{key} = {value}")
    for lang in config.languages:
        lines.append(f"language.{lang.name}.input = {lang.unimorph}")
        lines.append(f"language.{lang.name}.freq = {lang.freq}")
        if lang.gold is not None:
            lines.append(f"language.{lang.name}.gold = {lang.gold}")
        lines.append(f"language.{lang.name}.filter_derived = {str(lang.filter_derived).lower()}")
    return "\n".join(lines) + "\n"

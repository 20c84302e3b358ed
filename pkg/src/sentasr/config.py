"""Flat key=value run configuration with one section per module.

Sections: frontend, encoder, augment, model, train, synth. Values are
coerced by the target dataclass field's annotation; "none" (any case)
means None, and tuple fields take comma-separated numbers. CLI overrides
arrive as "section.key=value" strings and win over file values.
"""

import configparser
import dataclasses

from .augment import SpecAugmentPolicy
from .encoder import EncoderConfig
from .errors import ConfigError
from .frontend import FrontendConfig
from .model import DecoderConfig
from .synthcorpus import SynthConfig
from .train import TrainConfig

SECTIONS = {
    "frontend": FrontendConfig,
    "encoder": EncoderConfig,
    "augment": SpecAugmentPolicy,
    "model": DecoderConfig,
    "train": TrainConfig,
    "synth": SynthConfig,
}


def _coerce(name, ann, raw):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    try:
        if ann is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if ann is int:
            return int(raw)
        if ann is float:
            return float(raw)
        if ann is tuple:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if all(p.lstrip("+-").isdigit() for p in parts):
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {e}") from e


def _field_map(cls):
    return {f.name: f for f in dataclasses.fields(cls)}


def load_config(path=None, overrides=()):
    """Build all section configs from an optional file plus overrides."""
    raw = {name: {} for name in SECTIONS}
    if path is not None:
        cp = configparser.ConfigParser()
        read = cp.read(path, encoding="utf-8")
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in cp.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in cp.items(section):
                raw[section][key] = value
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"override must look like section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        raw[section][key.strip()] = value

    out = {}
    use_augment = False
    for section, cls in SECTIONS.items():
        fields = _field_map(cls)
        kwargs = {}
        for key, value in raw[section].items():
            if section == "train" and key == "augment":
                use_augment = _coerce("train.augment", bool, value) or False
                continue
            if key not in fields:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kwargs[key] = _coerce(f"{section}.{key}", fields[key].type, value)
        try:
            out[section] = cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid [{section}] config: {e}") from e
    if use_augment:
        out["train"].augment = out["augment"]
    return out


def resolved_config(cfgs):
    """JSON-ready snapshot of every section, for run.json."""
    out = {}
    for name, cfg in cfgs.items():
        d = dataclasses.asdict(cfg)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        out[name] = d
    return out

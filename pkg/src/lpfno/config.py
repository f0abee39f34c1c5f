"""YAML config files with ``KEY=VALUE`` overrides.

Every command reads one mapping.  Keys are checked against the command's
schema so a typo fails loudly with the key name instead of being ignored.
Dotted override keys reach into nested mappings (``model_config.n_e=32``).
"""
from __future__ import annotations

import copy
from pathlib import Path

import yaml


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got {type(doc).__name__}")
    return doc


def parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form KEY=VALUE")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r}: cannot parse value: {exc}") from exc
    return key.split("."), value


def apply_overrides(doc: dict, overrides) -> dict:
    """Return a copy of ``doc`` with every ``KEY=VALUE`` applied in order."""
    doc = copy.deepcopy(doc)
    for text in overrides or ():
        keys, value = parse_override(text)
        node = doc
        for k in keys[:-1]:
            child = node.setdefault(k, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {text!r}: {k!r} is not a mapping")
            node = child
        node[keys[-1]] = value
    return doc


def check_keys(doc: dict, allowed, where="config"):
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown {where} key {key!r}; known keys: {sorted(allowed)}")


def dump(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=True)

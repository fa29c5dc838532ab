"""Flat dotted-key run configuration.

Grammar, one entry per line::

    # comment
    key.sub = value

Values are read as JSON when they parse (numbers, ``true``/``false``, quoted
strings, lists, objects) and kept as bare strings otherwise.  Keys must be
unique.  The family is given either as ``family = gp`` plus ``family.k = 2``
or as ``family = {"family": "gp", "k": 2}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .families import Family, family_from_dict

EXPERIMENTS = ("census", "tmtp", "walks", "cheeger", "percolation-sweep", "forests", "psn",
               "phases-report")

KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*(\.[A-Za-z_][A-Za-z0-9_\-]*)*$")


class ConfigError(ValueError):
    pass


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(value)
    return out


@dataclass
class RunConfig:
    experiment: str
    family: Family
    radius: int
    seed: int
    output: str
    max_vertices: int = 2_000_000
    replicas: int = 200
    workers: int = 1
    options: dict[str, Any] = field(default_factory=dict)
    raw: dict[str, Any] = field(default_factory=dict)

    def opt(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)


def _family(raw: dict[str, Any]) -> Family:
    fam = raw.get("family")
    if isinstance(fam, dict):
        desc = dict(fam)
    elif isinstance(fam, str):
        desc = {"family": fam}
        for k, v in raw.items():
            if k.startswith("family."):
                sub = k[len("family."):]
                _nest(desc, sub.split("."), v)
    else:
        raise ConfigError("missing key 'family'")
    try:
        return family_from_dict(desc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _nest(d: dict, path: list[str], value: Any) -> None:
    for p in path[:-1]:
        d = d.setdefault(p, {})
    d[path[-1]] = value


def _int(raw: dict, key: str, default=None, lo: int = 0, hi: int | None = None) -> int:
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    v = raw[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{key!r} must be an integer")
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(f"{key!r} out of range")
    return v


def from_dict(raw: dict[str, Any]) -> RunConfig:
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; valid ids: {', '.join(EXPERIMENTS)}")
    core = {"experiment", "family", "radius", "seed", "output", "budget.vertices",
            "budget.replicas", "workers"}
    options = {k: v for k, v in raw.items() if k not in core and not k.startswith("family.")}
    return RunConfig(
        experiment=exp,
        family=_family(raw),
        radius=_int(raw, "radius"),
        seed=_int(raw, "seed", hi=(1 << 64) - 1),
        output=str(raw.get("output", f"runs/{exp}")),
        max_vertices=_int(raw, "budget.vertices", 2_000_000, lo=1),
        replicas=_int(raw, "budget.replicas", 200, lo=1),
        workers=_int(raw, "workers", 1, lo=1),
        options=options,
        raw=raw,
    )


def load(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return from_dict(parse_text(text))

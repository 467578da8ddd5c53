"""Experiment configuration read from an INI file.

Sections (all optional; defaults describe the Holder model on the unit disk)::

    [run]       seed, out, format
    [majorant]  kind = power | identity | power-log | inverse-log-square | tabulated
                alpha, cap, path, expect = regular | nonregular, deltas = comma list
    [domain]    kind = ball | ellipse | ellipsoid, dim, radius, a1, a2, a3
    [family]    kind = normal | tilted | bent, half_width, angle_deg, beta
    [function]  kind = constant | coordinate | saddle | cubic | poisson | fundamental | holder
                alpha, value, xi, y  (points as comma lists)
    [budgets]   samples, sphere_points
    [bands]     delta0, delta1, delta_floor, s_min, s_max
    [verify]    r, R, grid, angle_deg, a_frac, s_max, n_s, n_points, lambdas

Every estimator seed is ``derive_seed(master_seed, command_index, k)``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from harmreg.errors import ConfigError

SECTIONS = ("run", "majorant", "domain", "family", "function", "budgets", "bands", "verify")

DEFAULTS = {
    "run": {"seed": "0", "out": "results", "format": "json"},
    "majorant": {"kind": "power", "alpha": "0.5"},
    "domain": {"kind": "ball", "dim": "2", "radius": "1.0"},
    "family": {"kind": "tilted", "half_width": "0.5", "angle_deg": "30"},
    "function": {"kind": "holder", "alpha": "0.5"},
    "budgets": {"samples": "8192"},
    "bands": {"delta0": "0.05", "delta1": "0.1"},
    "verify": {},
}

FORMATS = ("json", "csv", "both")
OUTPUT_KEYS = ("out", "format")


@dataclass
class ExperimentConfig:
    sections: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def number(self, section: str, key: str, default=None, kind=float):
        raw = self.get(section, key)
        if raw is None:
            if default is None:
                raise ConfigError(f"[{section}] {key} is required")
            return kind(default)
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None

    def numbers(self, section: str, key: str, default=None) -> list[float]:
        raw = self.get(section, key)
        if raw is None:
            if default is None:
                raise ConfigError(f"[{section}] {key} is required")
            return list(default)
        try:
            return [float(v) for v in str(raw).replace(";", ",").split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a list of numbers") from None

    @property
    def seed(self) -> int:
        seed = self.number("run", "seed", 0, int)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return seed

    @property
    def dim(self) -> int:
        return self.number("domain", "dim", 2, int)

    def echo(self) -> dict:
        """Every setting except where and how the report is written, so runs
        that differ only in output location produce identical reports."""
        out = {name: dict(sorted(self.sections[name].items())) for name in sorted(self.sections)}
        for key in OUTPUT_KEYS:
            out.get("run", {}).pop(key, None)
        return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read ``path`` on top of the defaults, then apply ``{section: {key: value}}`` overrides."""
    sections = {name: dict(values) for name, values in DEFAULTS.items()}
    source = "<defaults>"
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for name in parser.sections():
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}] in {path}")
            sections[name].update(parser[name])
        source = str(path)
    for name, values in (overrides or {}).items():
        sections.setdefault(name, {}).update({k: str(v) for k, v in values.items() if v is not None})
    fmt = sections["run"].get("format", "json")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")
    return ExperimentConfig(sections, source)

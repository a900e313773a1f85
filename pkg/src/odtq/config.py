"""Run configuration: INI-style ``key = value`` files with sections.

Quantities carry their unit in the key suffix, e.g. ``depth_mK = 1.0`` or
``waist_um = 2.1``; any listed suffix is accepted for a quantity. Grids are
a comma-separated list or ``linspace(start, stop, n)`` /
``logspace(start, stop, n)`` (endpoints in the key's unit, geometric
spacing for logspace).

Sources are layered: preset, then ``--config`` file, then environment
variables named ``ODTQ__<SECTION>__<KEY>`` (case-insensitive).
"""
from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import core

PRESETS = ("fig2", "fig3", "fig4", "blue-lattice")
ENV_PREFIX = "ODTQ__"

_ENERGY = {"J": 1.0, "mK": core.mK_to_J(1.0), "uK": core.uK_to_J(1.0)}
_TEMPERATURE = {"K": 1.0, "mK": 1e-3, "uK": 1e-6}
_LENGTH = {"m": 1.0, "um": 1e-6, "nm": 1e-9}
_ANGULAR = {"rad_s": 1.0, "hz": 2 * math.pi, "khz": 2 * math.pi * 1e3,
            "mhz": 2 * math.pi * 1e6}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6}

_GRID = re.compile(r"^\s*(linspace|logspace)\s*\(([^)]*)\)\s*$")


class ConfigError(ValueError):
    def __init__(self, section, key, message):
        self.section, self.key = section, key
        where = f"[{section}]" + (f" {key}" if key else "")
        super().__init__(f"{where}: {message}")


def _parser():
    return configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                     interpolation=None)


def preset_text(name):
    if name not in PRESETS:
        raise ConfigError("preset", None, f"unknown preset {name!r}; "
                          f"choose from {', '.join(PRESETS)}")
    return resources.files("odtq").joinpath(
        f"data/presets/{name}.ini").read_text(encoding="utf-8")


def load(preset=None, path=None, text=None, environ=None):
    """Layer the sources into one :class:`RunConfig`.

    A later layer giving a quantity in another unit replaces the earlier
    value instead of clashing with it.
    """
    merged = _parser()
    layers = []
    try:
        if preset:
            layers.append((preset_text(preset), f"preset:{preset}"))
        if path:
            with open(path, encoding="utf-8") as fh:
                layers.append((fh.read(), str(path)))
        if text:
            layers.append((text, "<text>"))
        for body, source in layers:
            layer = _parser()
            layer.read_string(body, source=source)
            _merge(merged, layer)
    except configparser.Error as exc:
        raise ConfigError("file", None, str(exc).replace("\n", " ")) from None
    environ = os.environ if environ is None else environ
    layer = _parser()
    for name, value in sorted(environ.items()):
        if not name.upper().startswith(ENV_PREFIX):
            continue
        parts = name[len(ENV_PREFIX):].split("__")
        if len(parts) != 2:
            continue
        section, key = parts[0].lower().replace("_", "-"), parts[1]
        if not layer.has_section(section):
            layer.add_section(section)
        # configparser lowercases keys, so unit suffixes match any case
        layer[section][key] = value
    _merge(merged, layer)
    return RunConfig(merged)


_SUFFIXES = sorted({u.lower() for table in (_ENERGY, _TEMPERATURE, _LENGTH,
                                             _ANGULAR, _TIME) for u in table},
                   key=len, reverse=True)


def _base(key):
    for suffix in _SUFFIXES:
        if key.endswith("_" + suffix):
            return key[:-len(suffix) - 1]
    return None


def _merge(target, layer):
    for section in layer.sections():
        if not target.has_section(section):
            target.add_section(section)
        earlier = list(target[section])
        for key, value in layer.items(section, raw=True):
            base = _base(key)
            if base is not None:
                for old in earlier:
                    if old != key and _base(old) == base:
                        target.remove_option(section, old)
            target[section][key] = value


@dataclass
class RunConfig:
    parser: configparser.ConfigParser

    def has(self, section, key=None):
        if not self.parser.has_section(section):
            return False
        return key is None or self.parser.has_option(section, key)

    def raw(self, section, key, default=None):
        if self.has(section, key):
            return self.parser.get(section, key).strip()
        return default

    def _find(self, section, base, units):
        found = [(s, self.raw(section, f"{base}_{s}")) for s in units
                 if self.has(section, f"{base}_{s}")]
        if len(found) > 1:
            raise ConfigError(section, base, "given in more than one unit")
        return found[0] if found else (None, None)

    def number(self, section, key, default=None):
        raw = self.raw(section, key)
        if raw in (None, ""):
            if default is None:
                raise ConfigError(section, key, "missing")
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(section, key, f"not a number: {raw!r}") from None

    def boolean(self, section, key, default=False):
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ConfigError(section, key, str(exc)) from None

    def quantity(self, section, base, units, default=None, required=True):
        unit, raw = self._find(section, base, units)
        if unit is None:
            if default is not None or not required:
                return default
            raise ConfigError(section, base, "missing (give it with one of "
                              f"the suffixes {', '.join(units)})")
        try:
            return float(raw) * units[unit]
        except ValueError:
            raise ConfigError(section, f"{base}_{unit}",
                              f"not a number: {raw!r}") from None

    def grid(self, section, base, units, required=True):
        unit, raw = self._find(section, base, units)
        key = f"{base}_{unit}"
        if unit is None:
            if not required:
                return None
            raise ConfigError(section, base, "missing grid")
        try:
            values = parse_grid(raw)
        except ValueError as exc:
            raise ConfigError(section, key, str(exc)) from None
        values = values * units[unit]
        if values.size > 1 and np.any(np.diff(values) <= 0):
            raise ConfigError(section, key, "grid must be strictly increasing")
        return values

    def integers(self, section, key, count=3, default=None):
        raw = self.raw(section, key)
        if raw is None:
            if default is None:
                raise ConfigError(section, key, "missing")
            return default
        try:
            values = tuple(int(v) for v in raw.split(","))
        except ValueError:
            raise ConfigError(section, key, "expected integers") from None
        if len(values) != count:
            raise ConfigError(section, key, f"expected {count} values")
        if any(v < 0 for v in values):
            raise ConfigError(section, key, "values must be >= 0")
        return values

    def triple(self, section, base, units, required=True):
        unit, raw = self._find(section, base, units)
        if unit is None:
            if not required:
                return None
            raise ConfigError(section, base, "missing")
        try:
            values = [float(v) * units[unit] for v in raw.split(",")]
        except ValueError:
            raise ConfigError(section, f"{base}_{unit}",
                              "expected numbers") from None
        if len(values) == 1:
            values = values * 3
        if len(values) != 3:
            raise ConfigError(section, f"{base}_{unit}",
                              "expected one or three values")
        return tuple(values)


def parse_grid(text):
    match = _GRID.match(text)
    if match:
        kind, args = match.groups()
        parts = [p.strip() for p in args.split(",")]
        if len(parts) != 3:
            raise ValueError(f"{kind} takes (start, stop, n)")
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("grid needs at least one point")
        if kind == "linspace":
            return np.linspace(start, stop, n)
        if start <= 0 or stop <= 0:
            raise ValueError("logspace endpoints must be > 0")
        return np.geomspace(start, stop, n)
    try:
        values = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ValueError(f"cannot parse grid {text!r}") from None
    if values.size == 0:
        raise ValueError("empty grid")
    return values


# -- domain objects

def build_species(cfg, species_file=None):
    key = cfg.raw("species", "preset", "cs-1064")
    try:
        species = core.get_species(key, species_file)
    except KeyError as exc:
        raise ConfigError("species", "preset", exc.args[0]) from None
    except (OSError, ValueError) as exc:
        raise ConfigError("species", "preset", str(exc)) from None
    if cfg.has("species", "eta"):
        try:
            species = species.with_eta(cfg.number("species", "eta"))
        except ValueError as exc:
            raise ConfigError("species", "eta", str(exc)) from None
    return species


def build_trap(cfg, depth=None):
    kind = cfg.raw("trap", "kind", "red")
    try:
        if kind == "red":
            waist_y = cfg.quantity("trap", "waist_y", _LENGTH, required=False)
            return core.RedGaussian(
                wavelength=cfg.quantity("trap", "wavelength", _LENGTH),
                waist=cfg.quantity("trap", "waist", _LENGTH),
                depth=depth if depth is not None else cfg.quantity(
                    "trap", "depth", _ENERGY),
                waist_y=waist_y)
        if kind == "blue":
            heights = cfg.triple("trap", "barrier_heights", _ENERGY,
                                 required=False)
            ratios = None
            if cfg.has("trap", "barrier_ratios"):
                ratios = _plain_triple(cfg, "trap", "barrier_ratios")
            bottom = depth if depth is not None else cfg.quantity(
                "trap", "bottom", _ENERGY, default=0.0)
            return core.BlueLattice(
                periods=cfg.triple("trap", "periods", _LENGTH),
                bottom=bottom, barrier_ratios=ratios, barrier_heights=heights)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("trap", None, str(exc)) from None
    raise ConfigError("trap", "kind", f"expected 'red' or 'blue', got {kind!r}")


def _plain_triple(cfg, section, key):
    raw = cfg.raw(section, key)
    try:
        values = [float(v) for v in raw.split(",")]
    except ValueError:
        raise ConfigError(section, key, "expected numbers") from None
    if len(values) == 1:
        values = values * 3
    if len(values) != 3:
        raise ConfigError(section, key, "expected one or three values")
    return tuple(values)


ENERGY, TEMPERATURE, LENGTH, ANGULAR, TIME = (_ENERGY, _TEMPERATURE, _LENGTH,
                                              _ANGULAR, _TIME)

"""Command-line front end.

Every subcommand reads a layered configuration (``--preset``, ``--config``,
``ODTQ__SECTION__KEY`` environment overrides), computes its table in full,
and only then writes it, so a failure never leaves partial output behind.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext

import numpy as np

from . import coherence, config, core, gate, magic, spectrum
from ._backend import BACKEND
from .io import INFINITE, format_float, write_record, write_table

ENV_DEFAULTS = {
    "preset": "ODTQ_PRESET",
    "config": "ODTQ_CONFIG",
    "format": "ODTQ_FORMAT",
    "output": "ODTQ_OUTPUT",
    "tail_eps": "ODTQ_TAIL_EPS",
    "threads": "ODTQ_THREADS",
    "species_file": "ODTQ_SPECIES_FILE",
}


class Result:
    """A finished table (or record) waiting to be written."""

    def __init__(self, columns=None, rows=None, record=None, meta=None):
        self.columns, self.rows = columns, rows
        self.record, self.meta = record, meta or {}


def _tail_eps(args, cfg):
    if args.tail_eps is not None:
        return args.tail_eps
    return cfg.number("thermal", "tail_eps", spectrum.DEFAULT_TAIL_EPS)


def _executor(args):
    if args.threads and args.threads > 1:
        return ThreadPoolExecutor(max_workers=args.threads)
    return nullcontext(None)


def _temperature(cfg):
    return cfg.quantity("thermal", "temperature", config.TEMPERATURE)


# -- subcommands

def cmd_dfs_scan(args, cfg):
    species = config.build_species(cfg, args.species_file)
    trap = config.build_trap(cfg)
    depths = cfg.grid("scan", "depth", config.ENERGY)
    intensity = cfg.boolean("scan", "intensity")
    state = temperature = None
    if cfg.has("scan", "state"):
        state = spectrum.VibrationalState.of(*cfg.integers("scan", "state"))
    elif cfg.has("thermal"):
        temperature = _temperature(cfg)
    try:
        table = spectrum.dfs_vs_depth_scan(
            species, trap, depths, state=state, temperature=temperature,
            tail_eps=_tail_eps(args, cfg), intensity=intensity)
    except ValueError as exc:
        raise config.ConfigError("scan", None, str(exc)) from None
    columns, rows = table.columns, table.rows
    if args.no_quantization:
        keep = [i for i, c in enumerate(columns) if c != "dfs_quantized_rad_s"]
        columns = tuple(columns[i] for i in keep)
        rows = [tuple(r[i] for i in keep) for r in rows]
    quantized = table.column("dfs_quantized_rad_s")
    peak = int(np.argmax(quantized))
    meta = {"species": species.name,
            "peak_depth_mK": table.rows[peak][1],
            "state": list(state) if state is not None else None,
            "temperature_K": temperature}
    return Result(columns, rows, meta=meta)


def cmd_gate_error(args, cfg):
    species = config.build_species(cfg, args.species_file)
    trap = config.build_trap(cfg)
    temps = cfg.grid("thermal", "temperatures", config.TEMPERATURE,
                     required=False)
    if temps is None:
        temps = np.array([_temperature(cfg)])
    rabis = cfg.grid("drive", "rabi", config.ANGULAR)
    if np.any(rabis <= 0):
        raise config.ConfigError("drive", "rabi", "Rabi frequencies must be > 0")
    with _executor(args) as pool:
        rows = gate.gate_error_scan(species, trap, temps, rabis,
                                    tail_eps=_tail_eps(args, cfg),
                                    executor=pool)
    return Result(("rabi_rad_s", "temperature_K", "fidelity", "infidelity"),
                  rows, meta={"species": species.name})


RAMSEY_COLUMNS = ("t_s", "w_exact_eq19", "w_approx_eq20a", "w_approx_eq20b",
                  "envelope_bound")


def _ramsey_setup(args, cfg):
    species = config.build_species(cfg, args.species_file)
    trap = config.build_trap(cfg)
    temperature = _temperature(cfg)
    base = cfg.quantity("ramsey", "base_detuning", config.ANGULAR,
                        default=core.kHz_to_rad_s(1.0))
    rc = coherence.ramsey_config(species, trap, temperature, base,
                                 _tail_eps(args, cfg))
    return species, trap, temperature, rc


def cmd_ramsey(args, cfg):
    species, trap, temperature, rc = _ramsey_setup(args, cfg)
    if args.sequence:
        with open(args.sequence, encoding="utf-8") as fh:
            try:
                segments = coherence.parse_sequence(fh.read())
            except ValueError as exc:
                raise config.ConfigError("sequence", args.sequence,
                                         str(exc)) from None
        w = coherence.simulate_sequence(segments, rc)
        return Result(("segments", "w_final"), [(len(segments), w)])
    times = cfg.grid("ramsey", "time", config.TIME)
    if np.any(times < 0):
        raise config.ConfigError("ramsey", "time", "times must be >= 0")

    def row(t):
        return (float(t),
                float(coherence.ramsey_thermal_exact(rc, t)),
                float(coherence.ramsey_short_time(rc, t, "per-axis")),
                float(coherence.ramsey_short_time(rc, t, "isotropic")),
                float(coherence.envelope_bound(rc, t)))

    with _executor(args) as pool:
        rows = list((pool.map if pool else map)(row, times))
    meta = {"T2star_s": coherence.dephasing_time_T2star(species.eta,
                                                        temperature),
            "mean_occupation": list(rc.ensemble.mean_occupation),
            "deltas_rad_s": list(rc.deltas)}
    tolerance = cfg.number("ramsey", "revival_tolerance", 1e-9)
    revival = coherence.revival_time(rc.deltas, tolerance)
    if revival is not None:
        meta["revival_time_s"] = revival
    scrambling = cfg.quantity("ramsey", "scrambling_time", config.TIME,
                              required=False)
    if scrambling is not None:
        # vibrational states are assumed scrambled past this time; rows
        # beyond it show the coherent prediction only
        meta["scrambling_time_s"] = scrambling
        meta["rows_beyond_scrambling"] = int(np.sum(times > scrambling))
    return Result(RAMSEY_COLUMNS, rows, meta=meta)


def cmd_t2(args, cfg):
    species = config.build_species(cfg, args.species_file)
    trap = config.build_trap(cfg)
    temperature = _temperature(cfg)
    sigma = cfg.quantity("noise", "depth_sigma", config.ENERGY, default=0.0)
    state = spectrum.VibrationalState.of(
        *cfg.integers("noise", "state", default=(0, 0, 0)))
    record = {
        "species": species.name,
        "eta": species.eta,
        "temperature_K": temperature,
        "T2star_prefactor": coherence.T2STAR_PREFACTOR,
        "T2star_s": coherence.dephasing_time_T2star(species.eta, temperature),
        "depth_sigma_J": sigma,
        "sigma_dfs_rad_s": coherence.dfs_sigma(species.eta, sigma),
        "T2prime_s": coherence.homogeneous_T2(species.eta, sigma),
    }
    if isinstance(trap, core.RedGaussian) and sigma > 0:
        fluct = coherence.dfs_fluctuation_red(species, trap, state, sigma)
        record["red_shift_per_sigma_rad_s"] = fluct.full
        record["red_shift_per_sigma_linear_rad_s"] = fluct.linear
    heights = cfg.triple("noise", "barrier_heights", config.ENERGY,
                         required=False)
    if isinstance(trap, core.BlueLattice) and heights is not None:
        lattice = core.BlueLattice(periods=trap.periods, bottom=0.0,
                                   barrier_heights=heights)
        changes = cfg.triple("noise", "barrier_changes", config.ENERGY)
        blue = coherence.dfs_fluctuation_blue(species, lattice, state, changes)
        record["blue_shift_rad_s"] = blue.shift
        record["blue_suppression"] = blue.suppression
    return Result(record=record)


PAIRINGS = ("same-state", "radial", "axial", "radial-exact", "axial-exact",
            "blue-ground")
MAGIC_COLUMNS = ("pairing", "species", "trap_kind", "wavelength_m", "waist_m",
                 "periods_m", "barrier_ratios", "U_magic_J", "U_magic_mK",
                 "dfs_at_magic_rad_s", "stationarity_residual",
                 "barrier_height_J")


def _magic_row(name, species, trap, result):
    if isinstance(trap, core.RedGaussian):
        trap_cols = ("red", trap.wavelength, trap.waist, None, None)
    else:
        trap_cols = ("blue", None, None,
                     " ".join(format_float(d) for d in trap.periods),
                     " ".join(format_float(a) for a in trap.barrier_ratios))
    barrier = max(result.barrier_heights) if result.barrier_heights else None
    return (name, species.name) + trap_cols + (
        result.depth, core.J_to_mK(result.depth), result.dfs_at_magic,
        result.stationarity_residual, barrier)


def cmd_magic(args, cfg):
    species = config.build_species(cfg, args.species_file)
    raw = cfg.raw("magic", "pairings", "same-state")
    names = [p.strip() for p in raw.split(",") if p.strip()]
    unknown = [n for n in names if n not in PAIRINGS]
    if unknown:
        raise config.ConfigError("magic", "pairings",
                                 f"unknown pairing(s) {unknown}; choose from "
                                 f"{', '.join(PAIRINGS)}")
    rows = []
    for name in names:
        if name == "blue-ground":
            trap = config.build_trap(cfg)
            if not isinstance(trap, core.BlueLattice):
                raise config.ConfigError("magic", "pairings",
                                         "blue-ground needs [trap] kind = blue")
            q = magic.MagicQuery(species, trap, magic.BlueGround())
            result = magic.magic_depth_blue(q)
        else:
            trap = config.build_trap(cfg)
            if not isinstance(trap, core.RedGaussian):
                raise config.ConfigError("magic", "pairings",
                                         f"{name} needs [trap] kind = red")
            exact = name.endswith("-exact")
            if name == "same-state":
                state = spectrum.VibrationalState.of(
                    *cfg.integers("magic", "state", default=(0, 0, 0)))
                q = magic.MagicQuery(species, trap, magic.SameState(state))
                result = magic.magic_depth_same_state(q)
            elif name.startswith("radial"):
                q = magic.MagicQuery(species, trap, magic.RadialSideband())
                result = magic.magic_depth_radial_sideband(q, exact=exact)
            else:
                q = magic.MagicQuery(species, trap, magic.AxialSideband())
                result = magic.magic_depth_axial_sideband(q, exact=exact)
        rows.append(_magic_row(name, species, trap, result))
    return Result(MAGIC_COLUMNS, rows)


def cmd_species(args, cfg):
    try:
        table = core.load_species(args.species_file)
    except (OSError, ValueError) as exc:
        raise config.ConfigError("species", None, str(exc)) from None
    rows = [(key, s.name, s.mass / core.AMU,
             s.hyperfine_splitting / (2 * math.pi), s.eta,
             None if s.trap_wavelength is None else s.trap_wavelength * 1e9)
            for key, s in sorted(table.items())]
    return Result(("key", "species", "mass_amu", "hyperfine_hz", "eta",
                   "trap_wavelength_nm"), rows)


COMMANDS = {
    "dfs-scan": (cmd_dfs_scan, "DFS versus trap depth, with and without "
                 "vibrational quantization"),
    "gate-error": (cmd_gate_error, "thermal pi/2 gate error over a "
                   "(temperature, Rabi) grid"),
    "ramsey": (cmd_ramsey, "thermal Ramsey fringe (closed form, short-time "
               "forms, envelope)"),
    "t2": (cmd_t2, "dephasing times and intensity-noise sensitivity"),
    "magic": (cmd_magic, "magic trap depths for the configured pairings"),
    "species": (cmd_species, "list species presets"),
}


def _env(name, cast=str):
    value = os.environ.get(ENV_DEFAULTS[name])
    if value in (None, ""):
        return None
    return cast(value)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=_env("config"))
    common.add_argument("--preset", choices=config.PRESETS,
                        default=_env("preset"))
    common.add_argument("--format", choices=("csv", "json"),
                        default=_env("format") or "csv")
    common.add_argument("--output", metavar="PATH", default=_env("output"))
    common.add_argument("--tail-eps", type=float, metavar="X",
                        default=_env("tail_eps", float))
    common.add_argument("--threads", type=int, metavar="N",
                        default=_env("threads", int) or 1)
    common.add_argument("--species-file", metavar="PATH",
                        default=_env("species_file"))

    parser = argparse.ArgumentParser(
        prog="odtq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s 0.1.0 ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text,
                           description=help_text)
        if name == "dfs-scan":
            p.add_argument("--no-quantization", action="store_true",
                           help="omit the vibrational-state column")
        if name == "ramsey":
            p.add_argument("--sequence", metavar="FILE",
                           help="simulate a pulse sequence instead of a scan")
    return parser


def _emit(result, args):
    buf = io.StringIO()
    if result.record is not None:
        write_record(result.record, buf)
    else:
        write_table(result.columns, result.rows, buf, args.format,
                    meta=result.meta)
        if args.format == "csv":
            for key, value in result.meta.items():
                if value is not None and not isinstance(value, (list, dict)):
                    text = format_float(value) if isinstance(
                        value, float) else str(value)
                    print(f"# {key}={text}", file=sys.stderr)
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); not an error
            devnull = os.open(os.devnull, os.O_WRONLY)
            os.dup2(devnull, sys.stdout.fileno())


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tail_eps is not None and not 0 < args.tail_eps < 1:
        parser.error("--tail-eps must lie in (0, 1)")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    func = COMMANDS[args.command][0]
    try:
        cfg = config.load(preset=args.preset, path=args.config)
        result = func(args, cfg)
    except config.ConfigError as exc:
        print(f"odtq {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"odtq {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, gate.IntegrationError) as exc:
        print(f"odtq {args.command}: computation failed: {exc}",
              file=sys.stderr)
        return 1
    _emit(result, args)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())


__all__ = ["main", "build_parser", "INFINITE"]

"""Units, constants, atom species and trap geometry.

Everything is strict SI internally: J, kg, m, s and rad/s. Depths and
temperatures quoted "in mK" are energies divided by k_B; the helpers below
convert at the edges.
"""
from __future__ import annotations

import configparser
import math
import os
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    k_B: float
    c: float


CODATA = PhysicalConstants(hbar=_sc.hbar, k_B=_sc.k, c=_sc.c)

HBAR = CODATA.hbar
K_B = CODATA.k_B
C_LIGHT = CODATA.c
AMU = _sc.atomic_mass


# -- unit helpers

def mK_to_J(value):
    return value * 1e-3 * K_B


def uK_to_J(value):
    return value * 1e-6 * K_B


def J_to_mK(energy):
    return energy / K_B * 1e3


def J_to_uK(energy):
    return energy / K_B * 1e6


def kHz_to_rad_s(value):
    return 2.0 * math.pi * value * 1e3


def MHz_to_rad_s(value):
    return 2.0 * math.pi * value * 1e6


def rad_s_to_kHz(omega):
    return omega / (2.0 * math.pi) / 1e3


def rad_s_to_MHz(omega):
    return omega / (2.0 * math.pi) / 1e6


def wavelength_to_omega(wavelength):
    """Angular frequency (rad/s) of light with the given vacuum wavelength."""
    return 2.0 * math.pi * C_LIGHT / wavelength


# -- species

@dataclass(frozen=True)
class AtomSpecies:
    """An atom together with the detuning ratio of one trap wavelength.

    ``eta`` is |omega_hfs / Delta| for the trap laser in use. It is stored,
    never derived implicitly; see :func:`eta_from_transition`. ``eta == 0``
    is accepted as the degenerate "no differential shift" limit.
    """

    name: str
    mass: float
    hyperfine_splitting: float
    eta: float
    trap_wavelength: float | None = None
    line_wavelength: float | None = None
    linewidth: float | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass!r}")
        if not self.hyperfine_splitting > 0:
            raise ValueError("hyperfine_splitting must be > 0")
        if not 0 <= self.eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta!r}")
        for name in ("trap_wavelength", "line_wavelength", "linewidth"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0 when given")

    def with_eta(self, eta):
        return replace(self, eta=eta)


def eta_from_transition(hyperfine_splitting, trap_wavelength,
                        transition_wavelength):
    """|omega_hfs / Delta| for one reference transition.

    Delta is the trap laser detuning from ``transition_wavelength``.
    """
    delta = wavelength_to_omega(trap_wavelength) - wavelength_to_omega(
        transition_wavelength)
    if delta == 0:
        raise ValueError("trap laser is resonant with the reference line")
    return abs(hyperfine_splitting / delta)


def eta_from_lines(hyperfine_splitting, trap_wavelength, lines):
    """Detuning ratio for several lines weighted by relative strength.

    ``lines`` is a sequence of ``(wavelength, weight)``; the effective
    detuning is ``1/Delta_eff = sum(weight / Delta_i)``. For alkali D1/D2
    pairs the scalar weights are 1/3 and 2/3.
    """
    inverse = 0.0
    for wavelength, weight in lines:
        delta = wavelength_to_omega(trap_wavelength) - wavelength_to_omega(
            wavelength)
        inverse += weight / delta
    if inverse == 0:
        raise ValueError("effective detuning is infinite")
    return abs(hyperfine_splitting * inverse)


SPECIES_FORMAT_VERSION = 1


def _species_from_section(key, section):
    def optional(name, scale):
        raw = section.get(name)
        return None if raw is None else float(raw) * scale

    try:
        return AtomSpecies(
            name=section.get("species", key),
            mass=float(section["mass_amu"]) * AMU,
            hyperfine_splitting=2.0 * math.pi * float(section["hyperfine_hz"]),
            eta=float(section["eta"]),
            trap_wavelength=optional("trap_wavelength_nm", 1e-9),
            line_wavelength=optional("line_wavelength_nm", 1e-9),
            linewidth=optional("linewidth_mhz", 2.0 * math.pi * 1e6),
        )
    except KeyError as exc:
        raise ValueError(f"species block [{key}] is missing {exc}") from None


def parse_species_text(text, source="<string>"):
    """Parse a species preset file into ``{key: AtomSpecies}``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text, source=source)
    version = parser.get("meta", "format_version", fallback=None)
    if version is None or int(version) != SPECIES_FORMAT_VERSION:
        raise ValueError(
            f"{source}: unsupported species format_version {version!r}")
    return {key: _species_from_section(key, parser[key])
            for key in parser.sections() if key != "meta"}


def load_species(path=None):
    """Load the shipped presets, then the optional user file on top.

    The user file comes from ``path`` or the ``ODTQ_SPECIES_FILE``
    environment variable; its blocks override shipped ones with equal keys.
    """
    shipped = resources.files("odtq").joinpath("data/species.ini")
    table = parse_species_text(shipped.read_text(encoding="utf-8"),
                               source=str(shipped))
    extra = path or os.environ.get("ODTQ_SPECIES_FILE")
    if extra:
        extra = Path(extra)
        table.update(parse_species_text(extra.read_text(encoding="utf-8"),
                                        source=str(extra)))
    return table


def get_species(key, path=None):
    table = load_species(path)
    try:
        return table[key]
    except KeyError:
        raise KeyError(f"unknown species preset {key!r}; "
                       f"available: {', '.join(sorted(table))}") from None


# -- traps

def rayleigh_length(waist, wavelength):
    if not waist > 0 or not wavelength > 0:
        raise ValueError("waist and wavelength must be > 0")
    return math.pi * waist ** 2 / wavelength


@dataclass(frozen=True)
class RedGaussian:
    """Focused red-detuned Gaussian beam; ``depth`` is |U_min| in J.

    ``waist_y`` makes the beam elliptical; by default it equals ``waist``.
    """

    wavelength: float
    waist: float
    depth: float
    waist_y: float | None = None

    def __post_init__(self):
        if not self.wavelength > 0 or not self.waist > 0:
            raise ValueError("wavelength and waist must be > 0")
        if self.waist_y is not None and not self.waist_y > 0:
            raise ValueError("waist_y must be > 0")
        if not self.depth > 0:
            raise ValueError(f"depth must be > 0, got {self.depth!r}")
        if self.rayleigh_length <= max(self.waist, self.waists[1]):
            warnings.warn("Rayleigh length does not exceed the waist; the "
                          "paraxial trap frequencies are unreliable",
                          stacklevel=3)

    @property
    def waists(self):
        return (self.waist, self.waist if self.waist_y is None else self.waist_y)

    @property
    def rayleigh_length(self):
        wx, wy = self.waists
        return math.pi * wx * wy / self.wavelength

    @property
    def reference_depth(self):
        return self.depth

    def with_depth(self, depth):
        return replace(self, depth=depth)


@dataclass(frozen=True)
class BlueLattice:
    """Blue-detuned 3D lattice site.

    ``bottom`` is the residual potential U0 at the site (0 for a perfectly
    aligned lattice). Barrier heights come either from ``barrier_ratios``
    (U_q = alpha_q * U0) or directly from ``barrier_heights``.
    """

    periods: tuple
    bottom: float = 0.0
    barrier_ratios: tuple | None = None
    barrier_heights: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "periods", _triple(self.periods, "periods"))
        if any(not d > 0 for d in self.periods):
            raise ValueError("lattice periods must be > 0")
        if not self.bottom >= 0:
            raise ValueError("bottom potential must be >= 0")
        if self.barrier_ratios is not None:
            ratios = _triple(self.barrier_ratios, "barrier_ratios")
            if any(not a > 1 for a in ratios):
                raise ValueError("barrier ratios must be > 1")
            object.__setattr__(self, "barrier_ratios", ratios)
        if self.barrier_heights is not None:
            if self.barrier_ratios is not None:
                raise ValueError(
                    "give either barrier_ratios or barrier_heights, not both")
            heights = _triple(self.barrier_heights, "barrier_heights")
            if any(not u > 0 for u in heights):
                raise ValueError("barrier heights must be > 0")
            object.__setattr__(self, "barrier_heights", heights)

    @property
    def barriers(self):
        """Barrier heights U_q in J."""
        if self.barrier_heights is not None:
            return self.barrier_heights
        if self.barrier_ratios is None or self.bottom == 0:
            raise ValueError("lattice barriers undefined: set barrier_heights "
                             "or a nonzero bottom with barrier_ratios")
        return tuple(a * self.bottom for a in self.barrier_ratios)

    @property
    def reference_depth(self):
        return self.bottom

    def with_depth(self, depth):
        if self.barrier_ratios is None:
            raise ValueError("scanning the bottom potential needs "
                             "barrier_ratios")
        return replace(self, bottom=depth)


def _triple(values, name):
    values = tuple(float(v) for v in values)
    if len(values) != 3:
        raise ValueError(f"{name} needs three entries (x, y, z)")
    return values


def trap_frequencies(species, trap):
    """Harmonic oscillation frequencies (omega_x, omega_y, omega_z) in rad/s."""
    m = species.mass
    if isinstance(trap, RedGaussian):
        root = math.sqrt(trap.depth / m)
        wx, wy = trap.waists
        zr = trap.rayleigh_length
        return (2.0 / wx * root, 2.0 / wy * root, math.sqrt(2.0) / zr * root)
    if isinstance(trap, BlueLattice):
        return tuple(math.sqrt(2.0) * math.pi / d * math.sqrt(u / m)
                     for d, u in zip(trap.periods, trap.barriers))
    raise TypeError(f"unsupported trap type {type(trap).__name__}")


def light_shift(intensity, detuning, linewidth, resonance):
    """Two-level ground-state light shift in J.

    Red detuning (``detuning < 0``) gives a negative, trapping shift.
    """
    if detuning == 0:
        raise ValueError("resonant light has no dispersive shift")
    if not linewidth > 0 or not resonance > 0:
        raise ValueError("linewidth and resonance must be > 0")
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    return (3.0 * math.pi * C_LIGHT ** 2 / (2.0 * resonance ** 3)
            * (linewidth / detuning) * intensity)


def intensity_for_depth(depth, detuning, linewidth, resonance):
    """Inverse of :func:`light_shift` for the magnitude of the shift."""
    per_intensity = abs(light_shift(1.0, detuning, linewidth, resonance))
    return depth / per_intensity


def species_line(species):
    """(linewidth, resonance, detuning) of the species' reference line.

    Used only for the intensity axis of depth scans.
    """
    if None in (species.line_wavelength, species.linewidth,
                species.trap_wavelength):
        raise ValueError(f"species {species.name!r} carries no line data "
                         "for the intensity conversion")
    resonance = wavelength_to_omega(species.line_wavelength)
    detuning = wavelength_to_omega(species.trap_wavelength) - resonance
    return species.linewidth, resonance, detuning

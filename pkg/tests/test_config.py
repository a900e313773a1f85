import math

import numpy as np
import pytest

from odtq import config, core


def test_parse_grid_forms():
    np.testing.assert_array_equal(config.parse_grid("1, 2, 5"), [1, 2, 5])
    np.testing.assert_allclose(config.parse_grid("linspace(0, 1, 5)"),
                               [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(config.parse_grid("logspace(1, 100, 3)"), [1, 10, 100])
    for bad in ("linspace(0, 1)", "logspace(0, 1, 3)", "a, b", ""):
        with pytest.raises(ValueError):
            config.parse_grid(bad)


def test_grid_units_and_order():
    cfg = config.load(text="[drive]\nrabi_khz = 1, 2\n[scan]\ndepth_mK = 2, 1\n")
    np.testing.assert_allclose(cfg.grid("drive", "rabi", config.ANGULAR),
                               [2 * math.pi * 1e3, 4 * math.pi * 1e3])
    with pytest.raises(config.ConfigError, match=r"\[scan\] depth_mK"):
        cfg.grid("scan", "depth", config.ENERGY)


def test_presets_build():
    for name in config.PRESETS:
        cfg = config.load(preset=name, environ={})
        config.build_species(cfg)
        config.build_trap(cfg)


def test_environment_layer():
    cfg = config.load(preset="fig2", environ={"ODTQ__TRAP__WAIST_UM": "3.0",
                                              "UNRELATED": "1"})
    assert config.build_trap(cfg).waist == pytest.approx(3e-6)


def test_trap_errors_are_config_errors():
    cfg = config.load(text="[trap]\nkind = red\nwavelength_nm = 1064\n"
                      "waist_um = -2\ndepth_mK = 1\n", environ={})
    with pytest.raises(config.ConfigError, match=r"\[trap\]"):
        config.build_trap(cfg)
    cfg = config.load(text="[trap]\nkind = green\n", environ={})
    with pytest.raises(config.ConfigError, match="kind"):
        config.build_trap(cfg)


def test_species_eta_override():
    cfg = config.load(text="[species]\npreset = cs-1064\neta = 3e-4\n", environ={})
    assert config.build_species(cfg).eta == 3e-4
    cfg = config.load(text="[species]\npreset = nope\n", environ={})
    with pytest.raises(config.ConfigError, match="available"):
        config.build_species(cfg)


def test_blue_trap_from_config():
    lattice = config.build_trap(config.load(preset="blue-lattice", environ={}))
    assert isinstance(lattice, core.BlueLattice)
    assert lattice.barrier_ratios == (400.0, 400.0, 400.0)
    assert lattice.bottom == pytest.approx(core.uK_to_J(0.16))


def test_malformed_file():
    with pytest.raises(config.ConfigError, match=r"\[file\]"):
        config.load(text="no section header\n", environ={})

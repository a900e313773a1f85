import io
import json
import math

import numpy as np
import pytest

from odtq import cli, coherence, config, core, spectrum
from odtq.io import read_csv


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return read_csv(io.StringIO(text))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in list(cli.ENV_DEFAULTS.values()):
        monkeypatch.delenv(name, raising=False)


def test_dfs_scan_preset_peak(capsys):
    code, out, _ = run(capsys, "dfs-scan", "--preset", "fig4")
    assert code == 0
    columns, rows = table(out)
    assert columns == ["depth_J", "depth_mK", "dfs_quantized_rad_s",
                       "dfs_classical_rad_s", "intensity_W_m2"]
    q = [r[2] for r in rows]
    peak = rows[int(np.argmax(q))][1]
    assert peak == pytest.approx(0.14, rel=0.05)
    assert out.splitlines()[1].split(",")[0] == "6.90324500e-29"


def test_dfs_scan_without_quantization(capsys):
    code, out, _ = run(capsys, "dfs-scan", "--preset", "fig4", "--no-quantization")
    assert code == 0
    columns, rows = table(out)
    assert "dfs_quantized_rad_s" not in columns
    ratio = [r[2] / r[0] for r in rows]
    assert max(ratio) - min(ratio) <= 1e-8 * abs(ratio[0])


def test_csv_and_json_encode_same_numbers(capsys):
    _, csv_out, _ = run(capsys, "dfs-scan", "--preset", "fig4")
    _, json_out, _ = run(capsys, "dfs-scan", "--preset", "fig4", "--format", "json")
    columns, rows = table(csv_out)
    doc = json.loads(json_out)
    assert doc["columns"] == columns
    assert doc["rows"] == rows
    assert doc["meta"]["species"] == "Cs-133"


def test_csv_dialect(capsys):
    _, out, _ = run(capsys, "species")
    assert "\r" not in out
    assert out.endswith("\n")
    assert out.startswith("key,species,mass_amu")


def test_gate_error_preset_ordering(capsys):
    code, out, _ = run(capsys, "gate-error", "--preset", "fig2")
    assert code == 0
    columns, rows = table(out)
    assert columns == ["rabi_rad_s", "temperature_K", "fidelity", "infidelity"]
    assert len(rows) == 60
    by_t = {}
    for rabi, t, _, inf in rows:
        by_t.setdefault(t, []).append(inf)
    cold, mid, hot = (by_t[t] for t in sorted(by_t))
    for series in (cold, mid, hot):
        assert all(a > b for a, b in zip(series, series[1:]))
    assert all(h > m > c for h, m, c in zip(hot, mid, cold))


def test_gate_error_zero_temperature(capsys, monkeypatch):
    monkeypatch.setenv("ODTQ__THERMAL__TEMPERATURES_UK", "0")
    code, out, _ = run(capsys, "gate-error", "--preset", "fig2")
    assert code == 0
    _, rows = table(out)
    assert all(r[3] < 1e-12 for r in rows)


def test_tail_eps_doubling_keeps_printed_digits(capsys):
    _, a, _ = run(capsys, "gate-error", "--preset", "fig2")
    _, b, _ = run(capsys, "gate-error", "--preset", "fig2", "--tail-eps", "2e-6")
    assert a == b


def test_thread_count_does_not_change_output(capsys):
    _, one, _ = run(capsys, "gate-error", "--preset", "fig2")
    _, four, _ = run(capsys, "gate-error", "--preset", "fig2", "--threads", "4")
    assert one == four
    _, r1, _ = run(capsys, "ramsey", "--preset", "fig3")
    _, r4, _ = run(capsys, "ramsey", "--preset", "fig3", "--threads", "4")
    assert r1 == r4


def test_ramsey_columns_and_start(capsys):
    code, out, err = run(capsys, "ramsey", "--preset", "fig3")
    assert code == 0
    columns, rows = table(out)
    assert columns == list(cli.RAMSEY_COLUMNS)
    assert rows[0] == [0.0, 1.0, 1.0, 1.0, 1.0]
    assert "# T2star_s=9.17" in err


def test_ramsey_envelope_at_t2star(capsys, tmp_path, cs, red_trap):
    # a drive detuning that cancels the mean shift makes the short-time
    # columns equal to their envelope
    ens = spectrum.build_ensemble(cs, red_trap, 15e-6)
    deltas = spectrum.differential_trap_frequency(cs, red_trap)
    shift = sum(m * d for m, d in zip(ens.mean_occupation, deltas))
    t2 = coherence.dephasing_time_T2star(cs.eta, 15e-6)
    cfg = tmp_path / "t2.ini"
    cfg.write_text(f"[ramsey]\nbase_detuning_rad_s = {-shift!r}\n"
                   f"time_ms = 0, {t2 * 1e3!r}\n")
    code, out, err = run(capsys, "ramsey", "--preset", "fig3", "--config", str(cfg))
    assert code == 0, err
    _, rows = table(out)
    for value in rows[1][2:4]:
        assert 1 / math.e - 0.05 <= value <= 1 / math.e + 0.05


def test_unit_change_in_later_layer_replaces_value(tmp_path):
    cfg = config.load(preset="fig2", text="[trap]\ndepth_uK = 500\n")
    assert cfg.quantity("trap", "depth", config.ENERGY) == pytest.approx(core.uK_to_J(500))
    with pytest.raises(config.ConfigError):
        config.load(text="[trap]\ndepth_uK = 1\ndepth_mK = 1\n").quantity(
            "trap", "depth", config.ENERGY)


def test_ramsey_revival_meta(capsys, tmp_path):
    cfg = tmp_path / "r.ini"
    cfg.write_text("[ramsey]\ntime_ms = 0, 1\nrevival_tolerance = 1e-3\n")
    _, _, err = run(capsys, "ramsey", "--preset", "fig3", "--config", str(cfg))
    assert "# revival_time_s=" in err
    cfg.write_text("[ramsey]\ntime_ms = 0, 1\nrevival_tolerance = 1e-9\n"
                   "[trap]\nwaist_y_um = 2.3\n")
    _, _, err = run(capsys, "ramsey", "--preset", "fig3", "--config", str(cfg),
                    "--format", "json")
    rev = coherence.revival_time(spectrum.differential_trap_frequency(
        core.get_species("cs-1064"),
        core.RedGaussian(1064e-9, 2.1e-6, core.mK_to_J(1), waist_y=2.3e-6)), 1e-9)
    _, out, _ = run(capsys, "ramsey", "--preset", "fig3", "--config", str(cfg),
                    "--format", "json")
    meta = json.loads(out)["meta"]
    assert ("revival_time_s" in meta) == (rev is not None)


def test_ramsey_sequence_file(capsys, tmp_path):
    seq = tmp_path / "echo.seq"
    tp = math.pi / 2e11
    seq.write_text(f"pulse 1e11 {tp!r}\nfree 0.009\npulse 1e11 {2 * tp!r}\n"
                   f"free 0.009\npulse 1e11 {tp!r}\n")
    code, out, _ = run(capsys, "ramsey", "--preset", "fig3", "--sequence", str(seq))
    assert code == 0
    _, rows = table(out)
    assert abs(rows[0][1]) == pytest.approx(1.0, abs=1e-6)


def test_t2_record(capsys):
    code, out, _ = run(capsys, "t2", "--preset", "fig3")
    assert code == 0
    rec = json.loads(out)
    assert rec["T2star_prefactor"] == pytest.approx(1.5137, abs=1e-4)
    assert rec["T2star_s"] == pytest.approx(9.2e-3, rel=5e-3)
    code, out, _ = run(capsys, "t2", "--preset", "blue-lattice")
    rec = json.loads(out)
    assert rec["T2prime_s"] == "infinite"
    assert 0 < rec["blue_suppression"] < 1e-2


def test_magic_rows(capsys):
    _, out, _ = run(capsys, "magic", "--preset", "fig4")
    columns, rows = table(out)
    row = dict(zip(columns, rows[0]))
    assert row["U_magic_mK"] == pytest.approx(0.14, rel=0.05)
    _, out, _ = run(capsys, "magic", "--preset", "blue-lattice")
    columns, rows = table(out)
    row = dict(zip(columns, rows[0]))
    assert row["U_magic_J"] / 1.380649e-29 == pytest.approx(0.16, rel=0.1)
    assert row["barrier_height_J"] / 1.380649e-29 == pytest.approx(65, rel=0.1)
    for r in rows:
        assert dict(zip(columns, r))["stationarity_residual"] < 1e-6


def test_bad_config_exit_code_and_no_output(capsys, tmp_path):
    target = tmp_path / "out.csv"
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[drive]\nrabi_khz = 5, 1\n")
    code, out, err = run(capsys, "gate-error", "--preset", "fig2", "--config",
                         str(cfg), "--output", str(target))
    assert code == 2
    assert out == ""
    assert "[drive] rabi_khz" in err
    assert not target.exists()


def test_missing_field_diagnostic(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[trap]\nkind = red\nwavelength_nm = 1064\n")
    code, _, err = run(capsys, "gate-error", "--config", str(cfg))
    assert code == 2
    assert "[trap] waist" in err


def test_unknown_pairing(capsys):
    code, _, err = run(capsys, "magic", "--preset", "fig2")
    assert code == 0
    code, _, err = run(capsys, "magic", "--preset", "blue-lattice",
                       "--species-file", "/nonexistent.ini")
    assert code == 2


def test_env_overrides(capsys, monkeypatch, tmp_path):
    target = tmp_path / "o.json"
    monkeypatch.setenv("ODTQ_PRESET", "fig4")
    monkeypatch.setenv("ODTQ_FORMAT", "json")
    monkeypatch.setenv("ODTQ_OUTPUT", str(target))
    code, out, _ = run(capsys, "magic")
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["columns"][0] == "pairing"
    monkeypatch.setenv("ODTQ__MAGIC__STATE", "0, 0, 0")
    run(capsys, "magic")
    row = json.loads(target.read_text())["rows"][0]
    assert row[8] == pytest.approx(2.3e-7, rel=0.1)


def test_output_deterministic_across_runs(capsys):
    _, a, _ = run(capsys, "magic", "--preset", "fig4")
    _, b, _ = run(capsys, "magic", "--preset", "fig4")
    assert a == b

import hashlib

import numpy as np
import pytest

from diraclab import formats
from diraclab.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, main
from diraclab.config import ConfigError, load_preset, parse_config, preset_names, preset_text, serialize_config
from diraclab.dynamics import Frame

# pinned from the first run that passed the numeric acceptance checks
FIG3_M0_HEATMAP_SHA256 = "a10ee2becd58afdb98cea1e0db5abab473fd0b8cdde8ce1a3eed33c213e7e242"

REQUIRED_PRESETS = ("fig3_m0", "fig3_m05", "fig3_m1", "scalar_bound", "dirac_oscillator", "conclusion_ion", "sweep_default")


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_fig3_m05_values():
    cfg = load_preset("fig3_m05")
    assert cfg.kind == "klein"
    assert (cfg["m"], cfg["v_el"], cfg["c"], cfg["hbar"]) == (0.5, 1.0, 1.0, 1.0)


def test_empty_file_lists_required_keys():
    errs = errors_of("")
    text = "\n".join(map(str, errs))
    assert "kind" in text and "n_points" in text and "t_final" in text


def test_duplicate_key_reports_both_lines():
    errs = errors_of("kind = klein\nm = 0.5\n\nm = 1.0\n")
    dup = [e for e in errs if "duplicate" in e.message]
    assert len(dup) == 1 and dup[0].line == 4
    assert "lines 2 and 4" in dup[0].message


def test_all_errors_are_collected():
    text = preset_text("fig3_m1") + "colour = blue\nomega = 1.0\n"
    text = text.replace("n_points = 2048", "n_points = 1000").replace("dt = ", "dt = fast#")
    errs = errors_of(text)
    messages = "\n".join(map(str, errs))
    assert "unknown key 'colour'" in messages
    assert "does not apply" in messages
    assert "n_points" in messages
    assert "dt" in messages
    lines = text.splitlines()
    for e in errs:
        assert e.line >= 1
        assert lines[e.line - 1].split("=")[0].strip() in e.message


def test_type_error_has_line():
    errs = errors_of("kind = spectrum\nspectrum_kind = jc\nm = heavy\nomega = 1\nn_max = 64\n")
    assert [e.line for e in errs] == [3]


@pytest.mark.parametrize("name", preset_names())
def test_presets_round_trip(name):
    cfg = load_preset(name)
    text = serialize_config(cfg)
    again = parse_config(text, name)
    assert again == cfg
    assert serialize_config(again) == text


def test_preset_completeness():
    assert set(REQUIRED_PRESETS) <= set(preset_names())
    with pytest.raises(ConfigError):
        load_preset("no_such_preset")


def test_frames_csv_shape(tmp_path):
    frames = [Frame(t, np.array([0.1, 0.2]), np.array([0.3, 0.4]), 1.0, 0.0) for t in (0.0, 0.5)]
    path = tmp_path / "frames.csv"
    formats.write_frames_csv(frames, np.array([-1.0, 1.0]), path)
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert lines[0] == "t,x,density,upper_density,lower_density"
    assert lines[1] == "0,-1,0.4,0.1,0.3"
    assert lines[4] == "0.5,1,0.6,0.2,0.4"


def test_uniform_heatmap(tmp_path):
    frames = [Frame(t, np.full(7, 0.25), np.full(7, 0.25), 1.0, 0.0) for t in range(3)]
    path = tmp_path / "h.ppm"
    formats.write_heatmap_ppm(frames, path)
    w, h, gray = formats.read_ppm(path)
    assert (w, h) == (7, 3)
    assert np.all(gray == gray[0, 0]) and gray[0, 0] == 255


def test_spectrum_csv(tmp_path):
    path = tmp_path / "s.csv"
    formats.write_spectrum_csv([1.0, -1.0], path)
    assert path.read_text() == "index,eigenvalue\n0,-1\n1,1\n"


def test_output_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(formats.OutputError, match="file"):
        formats.write_spectrum_csv([1.0], blocker / "s.csv")


def test_invalid_config_exit_2_without_outputs(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("kind = klein\nm = -\n")
    out = tmp_path / "out"
    assert main(["klein", "--config", str(cfg), "--out", str(out)]) == EXIT_INVALID
    assert not out.exists()
    assert "line 2" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.cfg"), "--out", str(out)]) == EXIT_INVALID
    assert main(["spectrum", "--preset", "fig3_m1", "--out", str(out)]) == EXIT_INVALID
    assert not out.exists()


def test_klein_fig3_m1(tmp_path, capsys):
    out = tmp_path / "m1"
    assert main(["klein", "--preset", "fig3_m1", "--out", str(out), "--serial"]) == EXIT_OK
    line = capsys.readouterr().out
    value = float(line.split("transmission=")[1].split()[0])
    assert abs(value - 0.043) < 0.01
    assert (out / "frames.csv").exists() and (out / "heatmap.ppm").exists()


def test_spectrum_dirac_oscillator(tmp_path, capsys):
    out = tmp_path / "do"
    assert main(["spectrum", "--preset", "dirac_oscillator", "--out", str(out)]) == EXIT_OK
    rows = (out / "spectrum.csv").read_text().splitlines()
    assert rows[0] == "index,eigenvalue"
    values = np.array([float(r.split(",")[1]) for r in rows[1:]])
    assert np.min(np.abs(values - np.sqrt(2))) < 1e-8  # n = 1 level at mc^2 = hbar omega = 1
    assert np.min(np.abs(values - 2.0)) < 1e-8  # n = 3
    assert "max deviation" in capsys.readouterr().out


def test_conclusion_ion_preset_aborts(tmp_path, capsys):
    out = tmp_path / "ion"
    assert main(["ion", "--preset", "conclusion_ion", "--out", str(out)]) == EXIT_NUMERIC
    assert "truncation leak" in capsys.readouterr().err
    assert not out.exists()


def test_fig3_m0_golden_and_determinism(tmp_path):
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["klein", "--preset", "fig3_m0", "--out", str(out), "--serial"]) == EXIT_OK
        digests.append({name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in ("frames.csv", "heatmap.ppm")})
    assert digests[0] == digests[1]
    assert digests[0]["heatmap.ppm"] == FIG3_M0_HEATMAP_SHA256
    _, _, gray = formats.read_ppm(tmp_path / "a" / "heatmap.ppm")
    # massless packet: one ridge, each late row has a single bright region
    last = gray[-1] > 128
    assert np.count_nonzero(np.diff(last.astype(int)) == 1) == 1

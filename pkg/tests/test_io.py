import math
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdyn.ecg import EcgEvent
from qdyn.features import BeatFeatures
from qdyn.frame import SignalFrame
from qdyn.io import (
    ConfigError,
    format_config,
    format_number,
    load_config,
    parse_config,
    pgm_bytes,
    read_csv,
    read_frame_csv,
    read_pgm,
    write_beats_csv,
    write_csv,
    write_frame_csv,
    write_pgm,
)
from qdyn.raster import EscapeGrid, GridSpec, render_escape_grid

HEADER_2x2 = b"P5\n2 2\n255\n"
EXAMPLE_CFG = Path(__file__).resolve().parents[1] / "configs" / "ecg_example.cfg"


def test_parse_config_examples():
    assert parse_config("[ecg]\nomega = 6.2831853\n").ecg["omega"] == pytest.approx(2 * math.pi, rel=1e-7)
    esc = parse_config("[escape]\nmode = polar\nk = 1\n").escape
    assert esc == {"mode": "polar", "k": 1.0}
    cfg = parse_config("[ecg]\nevent = R 0.0 1.2 0.1\n")
    assert cfg.events == [EcgEvent("R", 0.0, 1.2, 0.1)]


def test_parse_config_comments_and_blank_lines():
    cfg = parse_config("# header\n\n[system]  # trailing\na = 0.5 # half\nsteps = 10\n")
    assert cfg.system == {"a": 0.5, "steps": 10}


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("[escape]\nk = 1\nk = 2\n", 3, "duplicate key"),
        ("[escape]\nzoom = 3\n", 2, "unknown key"),
        ("[system]\na = 1.2.3\n", 2, "bad value"),
        ("[system]\na = inf\n", 2, "non-finite"),
        ("[system]\nsteps = 1.5\n", 2, "bad value"),
        ("[escape]\nmode = spiral\n", 2, "expected one of"),
        ("[plot]\n", 1, "unknown section"),
        ("a = 1\n", 1, "outside any section"),
        ("[ecg]\n\nevent = R 0 1\n", 3, "event needs"),
        ("[ecg]\nevent = R 0 1 -0.1\n", 2, "bad event"),
        ("[escape\n", 1, "malformed section"),
        ("[escape]\njust words\n", 2, "key = value"),
    ],
)
def test_parse_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")
    assert fragment in str(info.value)


def test_shipped_example_config_parses():
    cfg = load_config(EXAMPLE_CFG)
    p = cfg.ecg_params()
    assert [e.label for e in p.events] == ["P", "Q", "R", "S", "T"]
    assert p.noise_sd == 0.025
    assert cfg.feature_config().onset_offset == -0.1


def test_ecg_params_require_events():
    with pytest.raises(ConfigError):
        parse_config("[ecg]\nomega = 1\n").ecg_params()


finite = st.floats(allow_nan=False, allow_infinity=False)


@given(finite, finite, st.integers(1, 10**6), st.sampled_from(["polar", "abs-polar", "sign"]), st.floats(-3, 3))
def test_config_round_trip_is_a_fixed_point(k, a, steps, mode, theta):
    text = (
        f"[escape]\nmode = {mode}\nk = {k!r}\n[system]\na = {a!r}\nsteps = {steps}\n"
        f"[ecg]\nform = unweighted\nevent = T {theta!r} {a!r} 0.5\n"
        "[features]\necg_channel = z\n"
    )
    cfg = parse_config(text)
    once = format_config(cfg)
    assert parse_config(once) == cfg
    assert format_config(parse_config(once)) == once


def grid(cells, iters=30):
    cells = np.asarray(cells, dtype=np.int32)
    return EscapeGrid(GridSpec(pixels=cells.shape[0], iters=iters), cells)


def test_pgm_examples():
    assert pgm_bytes(grid([[0, 0], [0, 0]])) == HEADER_2x2 + bytes([255] * 4)
    assert pgm_bytes(grid([[0, 1], [7, 0]])) == HEADER_2x2 + bytes([255, 0, 0, 255])
    g = EscapeGrid(GridSpec(pixels=2, iters=30), np.array([[1, 30], [0, 15]], dtype=np.int32))
    assert pgm_bytes(g, "grayscale")[-4:] == bytes([0, 200, 255, (200 * 14) // 29])
    with pytest.raises(ValueError):
        pgm_bytes(g, "color")


def test_pgm_grayscale_single_iteration_budget():
    g = EscapeGrid(GridSpec(pixels=2, iters=1), np.array([[1, 0], [1, 1]], dtype=np.int32))
    assert pgm_bytes(g, "grayscale")[-4:] == bytes([0, 255, 0, 0])


def test_pgm_file_round_trip(tmp_path):
    g = render_escape_grid(GridSpec(pixels=40))
    path = tmp_path / "g.pgm"
    write_pgm(g, "binary", path)
    assert path.read_bytes() == pgm_bytes(g)
    assert np.array_equal(read_pgm(path) == 255, g.bounded)


def test_pgm_bytes_identical_across_thread_counts():
    spec = GridSpec(pixels=80, mode="abs-polar")
    assert pgm_bytes(render_escape_grid(spec, workers=1), "grayscale") == pgm_bytes(
        render_escape_grid(spec, workers=8), "grayscale"
    )


def test_format_number():
    assert format_number(None) == "nan"
    assert format_number(3) == "3"
    assert format_number(np.int32(7)) == "7"
    assert format_number(0.1) == "0.10000000000000001"
    assert float(format_number(1 / 3)) == 1 / 3


def test_frame_csv_header_and_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    f = SignalFrame(2000.0, {"x": rng.normal(size=50), "y": rng.normal(size=50), "z": rng.normal(size=50)})
    path = tmp_path / "f.csv"
    write_frame_csv(f, path)
    text = path.read_text()
    assert text.startswith("t,x,y,z\n") and "\r" not in text
    header, data = read_csv(path)
    assert header == ["t", "x", "y", "z"]
    for i, name in enumerate("xyz", start=1):
        assert np.array_equal(data[:, i], f[name])
    back = read_frame_csv(path)
    assert back.sample_rate == pytest.approx(2000.0, rel=1e-12)
    assert np.array_equal(back["z"], f["z"])


def test_frame_csv_without_time_needs_rate(tmp_path):
    path = tmp_path / "bare.csv"
    write_csv(path, ["z"], [(1.0,), (2.0,)])
    with pytest.raises(ValueError, match="sample rate"):
        read_frame_csv(path)
    assert read_frame_csv(path, 100.0).sample_rate == 100.0


def test_beats_csv_schema(tmp_path):
    path = tmp_path / "beats.csv"
    write_beats_csv([BeatFeatures(0.5, 0.45), BeatFeatures(1.5, 1.45, 1.55, 1.0, 60.0, 0.1)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_r_peak,rr,hr,r_onset,b_point,pep"
    assert lines[1] == "0.5,nan,nan,0.45000000000000001,nan,nan"


def test_write_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "e.csv", ["a"], [])


@given(st.lists(finite, min_size=1, max_size=20))
def test_csv_values_round_trip_bit_exactly(values):
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "v.csv")
        write_csv(path, ["v"], [(v,) for v in values])
        _, data = read_csv(path)
    assert data[:, 0].tolist() == [float(v) for v in values]

import shutil

import pytest

from attenuator_lab._csvio import compare_csv, format_value, read_csv, read_tolerances, render_csv
from attenuator_lab.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, GOLDEN_FILES, _golden_dir, main

SMALL_FIG1 = ["fig1", "--n-list", "10,20", "--lambda-step", "0.1"]


def test_fig1_small_run(tmp_path):
    assert main(SMALL_FIG1 + ["--out", str(tmp_path)]) == EXIT_OK
    cols, rows = read_csv(tmp_path / "fig1.csv")
    assert cols[:4] == ["N", "n", "lambda", "icoh_bits"]
    assert len(rows) == 2 * 11
    assert all(float(r[3]) == 0.0 for r in rows if float(r[2]) == 0.5)
    text = (tmp_path / "fig1.csv").read_text()
    assert text.startswith("# attenuator_lab")
    assert "cutoff policy" in text


def test_threads_do_not_change_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(SMALL_FIG1 + ["--out", str(a), "--threads", "1"]) == EXIT_OK
    assert main(SMALL_FIG1 + ["--out", str(b), "--threads", "4"]) == EXIT_OK
    assert (a / "fig1.csv").read_bytes() == (b / "fig1.csv").read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["fig1", "--n-list", ""],
        ["fig1", "--lambda-min", "0.8", "--lambda-max", "0.2"],
        ["inset", "--alpha-list", "1,x"],
        ["inset", "--alpha-list", "-1"],
        ["convergence", "--n-list", "400,100"],
        ["protocol", "--preset", "cascade", "--cutoff-tail-tol", "1e-8"],
        ["protocol", "--preset", "cascade", "--k-list", "3"],
        ["protocol", "--model", "exponential"],
        ["nonsense"],
    ],
)
def test_usage_errors(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "nonsense" else argv) == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "inset.cfg"
    cfg.write_text("# small grid\nN_points = 4\nalpha-list = 1\nN_max = 2\n")
    assert main(["inset", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    assert len(read_csv(tmp_path / "inset.csv")[1]) == 4
    assert main(["inset", "--config", str(cfg), "--N-points", "6", "--out", str(tmp_path)]) == EXIT_OK
    assert len(read_csv(tmp_path / "inset.csv")[1]) == 6
    bad = tmp_path / "bad.cfg"
    bad.write_text("no_such_key = 3\n")
    assert main(["inset", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["inset", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == EXIT_IO


def test_convergence_single_n(tmp_path):
    assert main(["convergence", "--n-list", "100", "--out", str(tmp_path)]) == EXIT_OK
    assert len(read_csv(tmp_path / "convergence.csv")[1]) == 1


def test_protocol_grid_rows_and_rate(tmp_path):
    argv = ["protocol", "--lambda-list", "0.3", "--nu-list", "0", "--n-list", "2", "--k-list", "2,3",
            "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    cols, rows = read_csv(tmp_path / "protocol.csv")
    assert len(rows) == 2
    for r, k in zip(rows, (2, 3)):
        icoh, rate = float(r[cols.index("icoh_bits")]), float(r[cols.index("rate_bits")])
        assert rate == pytest.approx(icoh / (k + 1), rel=1e-10)
        assert float(r[cols.index("trace_dist")]) <= float(r[cols.index("bound")])


def test_plot_is_reproducible(tmp_path):
    pytest.importorskip("matplotlib")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(SMALL_FIG1 + ["--plot", "--out", str(a)]) == EXIT_OK
    assert main(SMALL_FIG1 + ["--plot", "--out", str(b)]) == EXIT_OK
    svg = a / "fig1.svg"
    assert svg.read_text().lstrip().startswith("<?xml")
    assert svg.read_bytes() == (b / "fig1.svg").read_bytes()


def test_missing_goldens(tmp_path):
    assert main(["verify", "--golden-dir", str(tmp_path), "--skip-checks"]) == EXIT_IO


def test_packaged_goldens_present():
    g = _golden_dir(None)
    for name in GOLDEN_FILES + ("tolerances.txt",):
        assert (g / name).is_file()


def test_perturbed_golden_fails(tmp_path):
    golden = tmp_path / "golden"
    shutil.copytree(_golden_dir(None), golden)
    path = golden / "convergence.csv"
    lines = path.read_text().splitlines()
    first = next(i for i, ln in enumerate(lines) if ln and ln[0].isdigit())
    fields = lines[first].split(",")
    fields[-1] = format_value(float(fields[-1]) * 1.01)
    lines[first] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    assert main(["verify", "--golden-dir", str(golden), "--skip-checks", "--threads", "8"]) == EXIT_NUMERIC


def test_compare_csv_respects_tolerances(tmp_path):
    cols = ["x", "y"]
    (tmp_path / "a.csv").write_text(render_csv(cols, [(1.0, 2.0)]))
    (tmp_path / "b.csv").write_text(render_csv(cols, [(1.0 + 1e-9, 2.0)]))
    (tmp_path / "tol.txt").write_text("a.csv * 1e-8\n")
    tol = read_tolerances(tmp_path / "tol.txt")
    assert compare_csv("a.csv", tmp_path / "a.csv", tmp_path / "b.csv", tol) == []
    assert compare_csv("a.csv", tmp_path / "a.csv", tmp_path / "b.csv", {}) != []


def test_format_value():
    assert format_value(-0.0) == "0"
    assert format_value(float("nan")) == "nan"
    assert format_value(3) == "3"
    assert format_value(True) == "1"
    assert format_value(1 / 3) == "0.333333333333"


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "attenuator_lab", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "attenuator" in out.stdout

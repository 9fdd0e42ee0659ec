import csv
import json
import math
import subprocess
import sys

import pytest

from snakewalk import cli

SMALL = {
    "spectra": ["--n", "4", "--K", "256"],
    "eta": ["--n", "6", "--K", "1024"],
    "evolve-line": ["--n", "4", "--t", "40"],
    "tree-spectra": ["--n", "4", "--K", "256"],
    "packet": ["--n", "4", "--sigma", "0.25", "--t", "10"],
    "span": ["--n-max", "6", "--K", "256"],
    "scatter": ["--K", "512"],
    "mu-span": ["--n", "4"],
    "glued-run": ["--samples", "20"],
}


def run(tmp_path, command, *extra):
    code = cli.main([command, *SMALL[command], "--out", str(tmp_path), *extra])
    assert code == 0
    with open(tmp_path / f"{command}.csv") as fh:
        rows = list(csv.reader(fh))
    with open(tmp_path / f"{command}.json") as fh:
        side = json.load(fh)
    return rows, side


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_subcommand_writes_table_and_sidecar(tmp_path, command):
    rows, side = run(tmp_path, command)
    header = rows[0]
    assert header == side["columns"]
    assert len(rows) > 1 and all(len(r) == len(header) for r in rows[1:])
    assert side["config"]["command"] == command
    assert "out" not in side["config"]
    assert side["version"]


def test_spectra_has_n_plus_one_bands(tmp_path):
    code = cli.main(["spectra", "--n", "8", "--out", str(tmp_path)])
    assert code == 0
    side = json.loads((tmp_path / "spectra.json").read_text())
    assert side["summary"]["bands"] == 9
    assert sum(c.startswith("lambda_") for c in side["columns"]) == 9


def test_scatter_summary(tmp_path):
    _, side = run(tmp_path, "scatter")
    step = 2 * math.pi / 512
    assert abs(side["summary"]["argmax_transmission"] - 1.5 * math.pi) <= step
    assert abs(side["summary"]["argmin_effective_length"] - 1.5 * math.pi) <= step


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["glued-run", "--samples", "20", "--out", str(d)]) == 0
    assert (a / "glued-run.csv").read_bytes() == (b / "glued-run.csv").read_bytes()
    assert (a / "glued-run.json").read_bytes() == (b / "glued-run.json").read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "c.cfg"
    conf.write_text("# spectra settings\n[spectra]\nn = 3\nK = 256\nname = \"fromconf\"\n")
    assert cli.main(["spectra", "--config", str(conf), "--out", str(tmp_path)]) == 0
    side = json.loads((tmp_path / "fromconf.json").read_text())
    assert side["config"]["n"] == 3 and side["config"]["K"] == 256
    assert cli.main(["spectra", "--config", str(conf), "--n", "2", "--out", str(tmp_path)]) == 0
    side = json.loads((tmp_path / "fromconf.json").read_text())
    assert side["config"]["n"] == 2


def test_unknown_config_key_is_an_error(tmp_path, capsys):
    conf = tmp_path / "c.cfg"
    conf.write_text("bogus = 1\n")
    assert cli.main(["scatter", "--config", str(conf), "--out", str(tmp_path)]) == 1
    rec = json.loads(capsys.readouterr().out)
    assert rec["error"] == "ValueError"


def test_env_outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("SNAKEWALK_OUTDIR", str(tmp_path / "env"))
    assert cli.main(["scatter", "--K", "256"]) == 0
    assert (tmp_path / "env" / "scatter.csv").exists()


def test_error_record_and_exit_code(tmp_path, capsys):
    code = cli.main(["eta", "--n", "5", "--out", str(tmp_path)])
    assert code == 1
    rec = json.loads(capsys.readouterr().out)
    assert rec["error"] == "PreconditionError" and rec["command"] == "eta"


def test_svg_and_json_formats(tmp_path):
    assert cli.main(["scatter", "--K", "256", "--format", "svg", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scatter.svg").read_text().startswith("<svg")
    assert cli.main(["scatter", "--K", "256", "--format", "json", "--name", "s",
                     "--out", str(tmp_path)]) == 0
    assert len(json.loads((tmp_path / "s.json").read_text())["rows"]) == 256
    assert cli.main(["scatter", "--format", "xml", "--out", str(tmp_path)]) == 1


def test_angle_parser():
    assert cli._angle("3pi/2") == pytest.approx(1.5 * math.pi)
    assert cli._angle("pi") == pytest.approx(math.pi)
    assert cli._angle("7*pi/6") == pytest.approx(7 * math.pi / 6)
    assert cli._angle("-pi/2") == pytest.approx(-math.pi / 2)
    assert cli._angle("4.5") == 4.5


def test_glued_run_summary(tmp_path):
    _, side = run(tmp_path, "glued-run")
    s = side["summary"]
    assert s["config"]["packet"]["x0"] == -2
    assert len(side["records"]) == 20
    assert s["bridging_samples"] == sum(r["bridging"] for r in side["records"])


def test_console_script_entry(tmp_path):
    out = subprocess.run([sys.executable, "-m", "snakewalk.cli", "scatter", "--K", "256",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip().endswith("scatter.json")

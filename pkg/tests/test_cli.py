"""Config handling, exit codes and artifacts of the command line."""

import json
import subprocess
import sys

import pytest

from hormander import cli
from hormander.cli import ConfigError, load_config, main

def _disc(centre):
    # unit disc at (centre, 0) inside a box with margin
    c = centre
    return {
        "box": [[str(c - 1.25), str(c + 1.25)], ["-5/4", "5/4"]],
        "mask": [
            {"c": str(c * c - 1), "e": [0, 0]},
            {"c": str(-2 * c), "e": [1, 0]},
            {"c": "1", "e": [2, 0]},
            {"c": "1", "e": [0, 2]},
        ],
    }


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _field_system_json():
    from hormander import systems

    return systems.grushin2d().to_json()


def _custom(tmp_path, centre, **extra):
    doc = {"field_system": _field_system_json(), "domain": _disc(centre), "resolution": 12, "K": 6,
           "checks": ["indices", "characteristic", "thm2"]}
    doc.update(extra)
    return _write(tmp_path, doc)


# -- config validation -----------------------------------------------------------


def test_bundled_config_resolves():
    cfg = load_config({"bundled": "grushin2d"}, {"K": 30, "resolution": 16})
    assert cfg.K == 30 and cfg.resolution == (16, 16) and cfg.trace_K >= 30


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"bundled": "grushin2d", "colour": 1}, "unknown config keys"),
        ({"bundled": "nope"}, "unknown bundled"),
        ({"bundled": "grushin2d", "checks": ["magic"]}, "unknown checks"),
        ({"bundled": "grushin2d", "resolution": [8, 8, 8]}, "does not match"),
        ({"bundled": "grushin2d", "tol": -1}, "tol must be positive"),
        ({"bundled": "grushin2d", "K": 0}, "K must be"),
        ({"field_system": {"dim": 2}}, "needs 'bundled'"),
    ],
)
def test_config_errors(doc, match):
    with pytest.raises(ConfigError, match=match):
        load_config(doc)


@pytest.mark.parametrize("doc", [{"bundled": "grushin2d", "colour": 1}, {"bundled": "grushin2d", "K": "many"}])
def test_schema_violation_exits_2(tmp_path, capsys, doc):
    assert main(["verify", "--config", _write(tmp_path, doc)]) == cli.EXIT_SCHEMA
    assert "error:" in capsys.readouterr().err


def test_unreadable_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["analyze", "--config", str(bad)]) == cli.EXIT_SCHEMA
    bad.write_text("[1, 2]")
    assert main(["analyze", "--config", str(bad)]) == cli.EXIT_SCHEMA


def test_empty_interior_exits_2(capsys):
    assert main(["assemble", "--bundled", "laplacian2d", "--resolution", "2"]) == cli.EXIT_SCHEMA


def test_K_beyond_the_grid_exits_2(capsys):
    assert main(["eigs", "--bundled", "grushin2d", "--resolution", "8", "-k", "40"]) == cli.EXIT_SCHEMA
    assert "raise the resolution" in capsys.readouterr().err


# -- commands --------------------------------------------------------------------


def test_analyze_example82(tmp_path):
    out = tmp_path / "analysis.json"
    assert main(["analyze", "--bundled", "example82", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["nu_tilde"] == 4 and doc["n"] == 3
    assert doc["H"]["verdict"] == "positive"
    assert doc["nu_agree"] is True


def test_assemble_writes_triplets(tmp_path):
    out = tmp_path / "A.txt"
    assert main(["assemble", "--bundled", "laplacian2d", "--resolution", "4", "--out", str(out)]) == 0
    rows = [line.split() for line in out.read_text().splitlines()]
    assert len(rows) == 9 * 1 + 12 * 2  # diagonal plus both off-diagonal halves of the 3x3 stencil
    assert all(len(r) == 3 for r in rows)


def test_eigs_then_verify_from_spectrum(tmp_path):
    spec = tmp_path / "spectrum.csv"
    assert main(["eigs", "--bundled", "grushin2d", "--resolution", "24", "-k", "5", "--out", str(spec)]) == 0
    assert spec.read_text().splitlines()[0] == "k,lambda,residual"
    report = tmp_path / "report.json"
    code = main(["verify", "--bundled", "grushin2d", "--resolution", "24", "-k", "5", "--checks", "thm2",
                 "--spectrum", str(spec), "--out", str(report)])
    doc = json.loads(report.read_text())
    assert [c["name"] for c in doc["checks"]] == ["thm2"]
    assert code == (0 if doc["checks"][0]["pass"] else 1)


def test_trace_command(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["trace", "--bundled", "grushin2d", "--resolution", "32", "-k", "60", "--trace-k", "120",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,Z" and len(lines) == 41


def test_small_run_writes_all_artifacts(tmp_path):
    out = tmp_path / "run"
    code = main(["run", "--bundled", "grushin2d", "--resolution", "32", "-k", "60", "--trace-k", "120",
                 "--checks", "indices", "thm2", "thm4", "thm5", "supnorm", "--out", str(out)])
    assert {p.name for p in out.iterdir()} >= {"spectrum.csv", "trace.csv", "report.json"}
    doc = json.loads((out / "report.json").read_text())
    assert code == (0 if all(c["pass"] for c in doc["checks"]) else 1)
    thm5 = next(c for c in doc["checks"] if c["name"] == "thm5")
    assert thm5["fitted"]["status"] == "refused" and thm5["pass"] is True
    for c in doc["checks"]:
        assert set(c) == {"name", "anchor", "pass", "fitted", "tolerance", "inputs"}


def test_failing_check_exits_1(tmp_path):
    # K = 30 leaves too few eigenvalues for a Weyl fit; the check fails, the run completes
    code = main(["verify", "--bundled", "grushin2d", "--resolution", "16", "-k", "30", "--trace-k", "30",
                 "--checks", "weyl", "--out", str(tmp_path / "r.json")])
    assert code == cli.EXIT_FAIL
    assert "error" in json.loads((tmp_path / "r.json").read_text())["checks"][0]["fitted"]


def test_report_is_deterministic(tmp_path):
    args = ["run", "--bundled", "grushin2d", "--resolution", "24", "-k", "20", "--trace-k", "60",
            "--checks", "indices", "thm2", "thm4"]
    dumps = []
    for i in range(2):
        out = tmp_path / f"r{i}"
        main(args + ["--out", str(out)])
        dumps.append((out / "report.json").read_bytes() + (out / "spectrum.csv").read_bytes())
    assert dumps[0] == dumps[1]


# -- strict mode and solver failures ---------------------------------------------


def test_characteristic_boundary_strict_exits_3(tmp_path):
    cfg = _custom(tmp_path, 0, strict=True)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_CHARACTERISTIC


def test_characteristic_boundary_without_strict_is_a_failed_check(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", _custom(tmp_path, 0), "--out", str(out)]) == cli.EXIT_FAIL
    doc = json.loads((out / "report.json").read_text())
    assert next(c for c in doc["checks"] if c["name"] == "characteristic")["pass"] is False


def test_offset_disc_passes_strict(tmp_path):
    cfg = _custom(tmp_path, 0.3, strict=True)
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "a.json")]) == 0


def test_eigensolver_failure_exits_4(tmp_path, capsys):
    code = main(["eigs", "--bundled", "laplacian2d", "--resolution", "16", "-k", "5", "--method", "lobpcg",
                 "--tol", "1e-300", "--out", str(tmp_path / "s.csv")])
    assert code == cli.EXIT_EIGEN
    assert "did not converge" in capsys.readouterr().err


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "hormander.cli", "analyze", "--bundled", "laplacian2d"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["nu_tilde"] == 2


def test_default_samples_find_the_degenerate_line(tmp_path):
    # no samples given: the Grushin line x1 = 0 must still be sampled on a symmetric box
    doc = {"field_system": _field_system_json(), "domain": {"box": [["-1", "1"], ["-1", "1"]]}, "resolution": 16}
    out = tmp_path / "a.json"
    assert main(["analyze", "--config", _write(tmp_path, doc), "--out", str(out)]) == 0
    an = json.loads(out.read_text())
    assert an["nu_tilde"] == 3 and an["metivier_condition"] is False
    assert an["H"]["verdict"] == "zero"

import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from spinmerism.cli import EXIT_CODES, run_command

SCHEMA = json.loads(resources.files("spinmerism").joinpath("schemas/report.schema.json").read_text())


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        cfg = tmp_path / "run.ini"
        cfg.write_text(config)
        args += ["--config", str(cfg)]
    return run_command(args + list(extra))


def report(tmp_path, command):
    doc = json.loads((tmp_path / "out" / f"{command}.json").read_text())
    jsonschema.validate(doc, SCHEMA, cls=jsonschema.Draft202012Validator)
    return doc


def csv_rows(tmp_path, command):
    text = (tmp_path / "out" / f"{command}.csv").read_text()
    return [line.split(",") for line in text.splitlines()]


def test_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)


def test_heisenberg_command(tmp_path):
    assert run(tmp_path, "heisenberg", "[model]\nJ = 60\n") == 0
    doc = report(tmp_path, "heisenberg")
    assert doc["heisenberg"]["J_cm1"] == pytest.approx(60.0, abs=1e-9)
    assert doc["metadata"]["config"]["model"] == {"kind": "heisenberg", "J": 60.0, "U": 1e6}
    assert doc["spectrum"][0]["multiplicity"] == 3


def test_spectrum_hubbard_absolute(tmp_path):
    from oracles import hubbard_dimer_spectrum
    from spinmerism.units import to_hartree
    assert run(tmp_path, "spectrum", "[model]\nkind = hubbard\nU = 40000\nt = 5000\n",
               "--absolute") == 0
    doc = report(tmp_path, "spectrum")
    ref = hubbard_dimer_spectrum(to_hartree(40000.0), to_hartree(5000.0))
    assert [s["energy"] for s in doc["spectrum"]] == pytest.approx(ref, abs=1e-11)
    assert csv_rows(tmp_path, "spectrum")[0][1] == "energy_hartree"


def test_project_default_model(tmp_path):
    assert run(tmp_path, "project", None, "--format", "csv") == 0
    rows = csv_rows(tmp_path, "project")
    assert rows[0][0] == "energy_cm1" and rows[0][-1] == "ct_weight"
    assert "w_Fe2_L1" in rows[0]
    for r in rows[1:]:
        assert sum(float(x) for x in r[2:-1]) == pytest.approx(1.0, abs=1e-9)
    assert not (tmp_path / "out" / "project.json").exists()


def test_project_fcidump_with_fragments(tmp_path):
    from spinmerism.fileio import write_fcidump
    from spinmerism.secondq import random_integral_set
    fcidump = tmp_path / "FCIDUMP"
    write_fcidump(fcidump, random_integral_set(4, seed=1), nelec=4)
    config = (f"[model]\nkind = fcidump\npath = {fcidump}\n"
              "[fragments]\na = 0 1\nb = 2 3\nnominal_a = 2\n[solver]\nnroots = 36\n")
    assert run(tmp_path, "project", config) == 0
    doc = report(tmp_path, "project")
    assert doc["projection"]["columns"][0] == "state"
    assert len(doc["projection"]["rows"]) == len(doc["spectrum"]) == 36


def test_dump_basis_ddci(tmp_path):
    from oracles import brute_force_ci_counts, ci_dimension
    config = "[sector]\nnorb = 6\nnalpha = 3\nnbeta = 3\n[ci]\nlevel = DDCI\ninactive = 0 1\n" \
             "active = 2 3\nvirtual = 4 5\n"
    assert run(tmp_path, "dump-basis", config) == 0
    doc = report(tmp_path, "dump-basis")
    counts = brute_force_ci_counts(6, 3, 3, (0, 1), (4, 5))
    assert doc["basis"]["dimension"] == ci_dimension(counts, "DDCI")
    assert len(csv_rows(tmp_path, "dump-basis")) == doc["basis"]["dimension"] + 1


def test_ts_diagram_threads(tmp_path):
    assert run(tmp_path, "ts-diagram", "[ts]\nnum = 21\nstop = 3\n", "--threads", "3") == 0
    doc = report(tmp_path, "ts-diagram")
    assert doc["ts_diagram"]["ground_multiplicity"][0] == 5
    assert any(c["kind"] == "spin-crossover" for c in doc["ts_diagram"]["crossings"])


def test_sweep_command(tmp_path):
    config = "[model]\nt_ML = 0\nK_ML = 500\n[sweep]\nnum = 7\nstart = 2300\nstop = 2420\n"
    assert run(tmp_path, "sweep", config) == 0
    doc = report(tmp_path, "sweep")
    assert doc["sweep"]["crossing"]["kind"] == "avoided-crossing"
    rows = csv_rows(tmp_path, "sweep")
    assert rows[0][:3] == ["Dq", "state", "energy_cm1"]
    assert len(rows) == 1 + 2 * 7


@pytest.mark.parametrize("command, config, code", [
    ("spectrum", "[model]\nkind = hubbard\nJ = 1\n", "config"),
    ("spectrum", "[model]\nkind = quantum\n", "config"),
    ("spectrum", "[nonsense]\n", "config"),
    ("spectrum", "[model]\nkind = fcidump\npath = /nonexistent/FCIDUMP\n", "parse"),
    ("sweep", "[sweep]\nvary = U_L\n", "config"),
    ("sweep", "[model]\nkind = hubbard\n", "config"),
    ("ts-diagram", "[ts]\nB = -5\n", "config"),
    ("heisenberg", "[heisenberg]\nmax_energy_cm1 = -1\n", "config"),
    ("spectrum", "[model]\nkind = hubbard\n[solver]\nnroots = 1\n", "ok"),
])
def test_exit_codes(tmp_path, capsys, command, config, code):
    assert run(tmp_path, command, config) == EXIT_CODES[code]
    err = capsys.readouterr().err
    if code != "ok":
        assert len(err.strip().splitlines()) == 1
        assert err.startswith(f"spinmerism: error[{code}]:")


def test_solver_error_exit_code(tmp_path, capsys):
    # J = 0 leaves singlet and triplet degenerate; keeping one root of the
    # pair makes a spin label impossible
    config = "[model]\nkind = heisenberg\nJ = 0\n[solver]\nnroots = 1\n"
    assert run(tmp_path, "spectrum", config) == EXIT_CODES["solver"]
    err = capsys.readouterr().err
    assert len(err.strip().splitlines()) == 1
    assert err.startswith("spinmerism: error[solver]:")


def test_usage_errors(capsys):
    assert run_command(["frobnicate"]) == EXIT_CODES["usage"]
    assert run_command(["spectrum", "--format", "xml"]) == EXIT_CODES["usage"]
    assert run_command([]) == EXIT_CODES["usage"]
    assert all(line.startswith("spinmerism: error[usage]")
               for line in capsys.readouterr().err.strip().splitlines())


def test_threads_must_be_positive(tmp_path):
    assert run(tmp_path, "ts-diagram", "[ts]\nnum = 3\n", "--threads", "0") == EXIT_CODES["config"]


def test_timestamp_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "86400")
    assert run(tmp_path, "heisenberg") == 0
    assert report(tmp_path, "heisenberg")["metadata"]["timestamp"] == "1970-01-02T00:00:00Z"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spinmerism", "heisenberg", "--out", str(tmp_path),
                           "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "heisenberg.json").exists()

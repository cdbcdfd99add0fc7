import csv
import io
import json
import subprocess
import sys

import pytest

from gencs.cli import main

SMALL = {
    "gen-net": ["--n", "8", "--k", "2"],
    "verify-sparse": ["--n", "16", "--k", "3", "--trials", "5", "--seed", "1"],
    "build-code": ["--n", "24", "--size", "8", "--seed", "2"],
    "build-set": ["--L", "64", "--r", "1", "--k", "4", "--n", "48", "--R", "8", "--seed", "0"],
    "game": ["--trials", "5", "--seed", "3", "--t", "3"],
    "lipschitz": ["--d", "2", "--n", "32", "--k", "4", "--N", "4", "--eps", "0.5", "--trials", "3", "--seed", "4"],
}


def run(tmp_path, name, args):
    out = tmp_path / f"{name}.out"
    assert main([name, *args, "--out", str(out)]) == 0
    return out.read_bytes()


@pytest.fixture
def net_file(tmp_path):
    path = tmp_path / "net.json"
    assert main(["gen-net", "--n", "12", "--k", "2", "--out", str(path)]) == 0
    return path


@pytest.mark.parametrize("name", sorted(SMALL))
def test_subcommand_deterministic(tmp_path, name):
    assert run(tmp_path, name, SMALL[name]) == run(tmp_path, name, SMALL[name])


def test_sense_deterministic(tmp_path, net_file):
    args = ["--net", str(net_file), "--m", "12", "--b", "12", "--seed", "5", "--trials", "2", "--pool", "8"]
    a, b = run(tmp_path, "sense", args), run(tmp_path, "sense", args)
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a.decode().split("\n", 1)[1])))
    assert [r["method"] for r in rows] == ["net", "latent"] * 2
    assert all(r["wall_time_ms"] == "" for r in rows)


def test_verify_sparse_example(tmp_path):
    text = run(tmp_path, "verify-sparse", ["--n", "64", "--k", "4", "--trials", "100", "--seed", "7"]).decode()
    header, body = text.split("\n", 1)
    assert header.startswith("# config: ")
    cfg = json.loads(header[len("# config: "):])
    assert cfg["seed"] == 7 and cfg["n"] == 64
    rows = list(csv.DictReader(io.StringIO(body)))
    assert len(rows) == 100
    assert all(float(r["max_abs_error"]) <= 1e-9 and int(r["output_sparsity"]) <= 4 for r in rows)


@pytest.mark.parametrize("name", ["verify-sparse", "game", "lipschitz"])
def test_csv_has_config_header(tmp_path, name):
    assert run(tmp_path, name, SMALL[name]).startswith(b"# config: {")


def test_stdout_output(capsys):
    assert main(["verify-sparse", "--n", "8", "--k", "1", "--trials", "2", "--out", "-"]) == 0
    assert capsys.readouterr().out.startswith("# config:")


def test_unknown_subcommand_exits_2():
    proc = subprocess.run([sys.executable, "-m", "gencs", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr


def test_invalid_parameter_named(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["game", "--delta", "100"])
    assert exc.value.code == 2
    assert "--delta" in capsys.readouterr().err


def test_construction_failure_exits_1_and_leaves_nothing(tmp_path):
    out = tmp_path / "set.json"
    code = main(["build-set", "--L", "64", "--k", "8", "--n", "48", "--R", "8", "--out", str(out)])
    assert code == 1
    assert not list(tmp_path.iterdir())


def test_build_set_certificates(tmp_path):
    doc = json.loads(run(tmp_path, "build-set", SMALL["build-set"]))
    assert doc["certificates"]["cardinality"] >= 16
    assert doc["certificates"]["min_dist"] >= 8 / 6**0.5

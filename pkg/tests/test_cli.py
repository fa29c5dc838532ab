import json
import hashlib
from pathlib import Path

import pytest

from nonuniperc import __version__
from nonuniperc.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from nonuniperc.config import EXPERIMENTS, ConfigError, from_dict, parse_text
from nonuniperc.families import Grandparent


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_grammar():
    raw = parse_text('# comment\nexperiment = census\nfamily = gp\nfamily.k = 2\n'
                     'radius = 3\nseed = 1\nnote = hello world\nlist = [1, 2]\n')
    assert raw["family.k"] == 2
    assert raw["note"] == "hello world"
    assert raw["list"] == [1, 2]


@pytest.mark.parametrize("text", ["x = 1\nx = 2\n", "no equals sign\n", "9bad = 1\n"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_text(text)


def test_family_forms_agree():
    a = from_dict({"experiment": "census", "family": "gp", "family.k": 2, "radius": 2, "seed": 0})
    b = from_dict({"experiment": "census", "family": {"family": "gp", "k": 2}, "radius": 2,
                   "seed": 0})
    assert a.family == b.family == Grandparent(2)


@pytest.mark.parametrize("patch", [{"seed": -1}, {"seed": 1 << 64}, {"radius": "x"},
                                   {"budget.replicas": 0}, {"budget.vertices": 0},
                                   {"family": "nope"}, {"experiment": "bogus"}])
def test_invalid_configs(patch):
    raw = {"experiment": "census", "family": "gp", "family.k": 2, "radius": 2, "seed": 0}
    raw.update(patch)
    with pytest.raises(ConfigError):
        from_dict(raw)


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == EXIT_OK
    assert capsys.readouterr().out.split() == list(EXPERIMENTS)


def test_unknown_experiment_names_valid_ids(tmp_path, capsys):
    code = main(["run", write(tmp_path, "c.cfg", "experiment = bogus\n")])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert all(e in err for e in EXPERIMENTS)


def test_validate(tmp_path):
    good = write(tmp_path, "g.cfg", "experiment = census\nfamily = gp\nfamily.k = 2\n"
                                    "radius = 2\nseed = 5\n")
    assert main(["validate", good]) == EXIT_OK
    assert main(["validate", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def run_cfg(tmp_path, monkeypatch, body, name="run"):
    monkeypatch.setenv("NONUNIPERC_OUTPUT_ROOT", str(tmp_path / "root"))
    cfg = write(tmp_path, f"{name}.cfg", body + f"output = {name}\n")
    return main(["run", cfg]), tmp_path / "root" / name


def test_census_on_gp2(tmp_path, monkeypatch):
    code, out = run_cfg(tmp_path, monkeypatch,
                        "experiment = census\nfamily = gp\nfamily.k = 2\nradius = 3\nseed = 1\n")
    assert code == EXIT_OK
    rows = (out / "census.csv").read_text().splitlines()
    assert rows[1].split(",")[2] == "1/4:4;1/2:2;2:1;4:1"
    man = json.loads((out / "manifest.json").read_text())
    assert man["version"] == __version__
    assert man["passed"] and man["exit_code"] == 0
    assert {"cli", "weights", "families", "truncation"} <= set(man["modules"])
    for name, digest in man["outputs"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    assert not list(out.glob(".*"))  # no temp files left behind


def test_budget_exceeded_writes_manifest(tmp_path, monkeypatch):
    code, out = run_cfg(tmp_path, monkeypatch,
                        "experiment = census\nfamily = gp\nfamily.k = 2\nradius = 6\nseed = 1\n"
                        "budget.vertices = 50\n")
    assert code == EXIT_BUDGET
    man = json.loads((out / "manifest.json").read_text())
    assert man["error"]["kind"] == "budget"


def test_failed_check_exits_one(tmp_path, monkeypatch):
    # radius 1 is flagged as under-resolved, which fails the report
    code, out = run_cfg(tmp_path, monkeypatch,
                        "experiment = phases-report\nfamily = regular\nfamily.d = 5\nradius = 1\n"
                        "seed = 1\nbudget.replicas = 30\npercolation.grid = [0.3, 0.6, 1.0]\n")
    assert code == EXIT_FAIL
    body = json.loads((out / "phases.json").read_text())
    assert body["under_resolved"] is True


def test_sweep_is_byte_identical_across_runs_and_workers(tmp_path, monkeypatch):
    body = ("experiment = percolation-sweep\nfamily = tree\nfamily.r = 2\nfamily.s = 3\n"
            "radius = 6\nseed = 99\nbudget.replicas = 120\n"
            'percolation.estimators = ["radial_reach", "upward_reach", "radial_growth"]\n')
    outs = []
    for i, workers in enumerate((1, 1, 2)):
        code, out = run_cfg(tmp_path, monkeypatch, body + f"workers = {workers}\n", f"s{i}")
        assert code == EXIT_OK
        outs.append((out / "sweep.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    header = outs[0].decode().splitlines()[0]
    assert header == "family,params,radius,estimator,p,replicas,freq,ci_lo,ci_hi,seed"


@pytest.mark.parametrize("exp,fam", [("tmtp", "family = dl\nfamily.k = 2\nfamily.l = 3\n"),
                                     ("walks", "family = gp\nfamily.k = 2\n"),
                                     ("cheeger", "family = tree\nfamily.r = 1\nfamily.s = 2\n"),
                                     ("forests", "family = gp\nfamily.k = 2\n"),
                                     ("psn", "family = tree\nfamily.r = 2\nfamily.s = 3\n")])
def test_other_experiments_pass(tmp_path, monkeypatch, exp, fam):
    code, out = run_cfg(tmp_path, monkeypatch,
                        f"experiment = {exp}\n{fam}radius = 3\nseed = 4\n", exp)
    assert code == EXIT_OK
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"]
    again, out2 = run_cfg(tmp_path, monkeypatch,
                          f"experiment = {exp}\n{fam}radius = 3\nseed = 4\n", exp + "2")
    for name in man["outputs"]:
        assert (out / name).read_bytes() == (out2 / name).read_bytes()

import json
import subprocess
import sys

import numpy as np
import pytest

from isoforge.cli import gallery_names, main
from isoforge.pipeline import write_state, write_subspace
from isoforge.registry import registry_materialize as code
from isoforge.tensor import basis_state


def test_predict(capsys):
    assert main(["predict", "combine", "5", "2", "5", "2"]) == 0
    assert capsys.readouterr().out.strip() == "l=3"
    assert main(["predict", "combine_eliminate", "10", "3", "3", "10", "3", "3", "1", "1", "--json"]) == 0
    assert json.loads(capsys.readouterr().out) == {"l": 5, "dim": 9}
    assert main(["predict", "corollary1", "10", "4"]) == 0
    assert capsys.readouterr().out.strip() == "d=8"
    assert main(["predict", "combine", "1", "2"]) == 2


def test_predict_out_of_range_alpha(capsys):
    assert main(["predict", "combine_eliminate", "5", "2", "2", "5", "2", "2", "3", "0"]) == 1


def test_verify_exit_codes(tmp_path, capsys):
    good = write_subspace(tmp_path / "code.json", code("[[5,1,3]]_2"))
    bad = write_state(tmp_path / "prod.json", basis_state((2, 2), (0, 0)))
    assert main(["verify", str(good), "--pure-distance", "3"]) == 0
    assert main(["verify", str(good), "--uniform", "2"]) == 0
    assert main(["verify", str(bad), "--uniform", "1", "--report", str(tmp_path / "r.json")]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "worst" in out
    assert json.loads((tmp_path / "r.json").read_text())["passed"] is False


def test_verify_malformed_file(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    assert main(["verify", str(p), "--uniform", "1"]) == 2
    assert "byte offset" in capsys.readouterr().err


def test_run_gallery_recipe(tmp_path, capsys):
    assert main(["run", "qubit_five_qutrits", "--out", str(tmp_path), "--quiet"]) == 0
    assert "qubit_five_qutrits: PASS" in capsys.readouterr().out
    assert (tmp_path / "psi.state.json").exists() and (tmp_path / "report.json").exists()


def test_run_failing_recipe(tmp_path):
    write_state(tmp_path / "prod.json", basis_state((2, 2), (0, 0)))
    recipe = {"format_version": 1, "nodes": [{"id": "p", "op": "import", "params": {"path": "prod.json"}}],
              "verify": [{"node": "p", "kind": "uniformity", "r": 1}]}
    (tmp_path / "r.json").write_text(json.dumps(recipe))
    assert main(["run", str(tmp_path / "r.json"), "--quiet"]) == 1


def test_run_bad_recipe(tmp_path, capsys):
    (tmp_path / "r.json").write_text(json.dumps({"format_version": 1, "nodes": [{"id": "a", "op": "nope"}]}))
    assert main(["run", str(tmp_path / "r.json")]) == 2
    assert "unknown op" in capsys.readouterr().err
    assert main(["run", "no_such_recipe"]) == 2


def test_capacity_error_exit_code(capsys):
    assert main(["run", "ce_10_4_4", "--quiet"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("capacity error") and "'W'" in err


def test_feature_gated_recipe(capsys):
    assert main(["run", "chain_10_0_6_4", "--quiet"]) == 2
    assert "feature-gated" in capsys.readouterr().err


def test_codes_commands(capsys):
    assert main(["codes", "list"]) == 0
    out = capsys.readouterr().out
    assert "[[5,1,3]]_2" in out and "optional" in out
    assert main(["codes", "show", "[[5,1,3]]_2"]) == 0
    assert "generator" in capsys.readouterr().out
    assert main(["codes", "show", "[[9,9,9]]_2"]) == 2
    assert main(["codes", "selfcheck", "[[5,1,3]]_2", "((4,4,2))_2"]) == 0


def test_gallery_list(capsys):
    assert main(["gallery", "list"]) == 0
    assert capsys.readouterr().out.split() == gallery_names()


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "x.json"])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "isoforge", "predict", "corollary1", "5", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "d=4"

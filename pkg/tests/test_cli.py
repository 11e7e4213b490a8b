import json
import subprocess
import sys

import numpy as np
import pytest

from ncherglotz import serialization as ser
from ncherglotz.algebra import AlgebraDescriptor
from ncherglotz.classical import CircleMeasure, rep_from_measure
from ncherglotz.cli import DEFAULT_SEED, main, resolve_seed
from ncherglotz.nonuniq import identity_function_rep

from conftest import make_rep


def write(path, obj):
    path.write_text(ser.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    atom = rep_from_measure(CircleMeasure.point_mass(0.0))
    return {
        "atom": write(tmp_path / "atom.json", ser.rep_to_json(atom)),
        "rep": write(tmp_path / "rep.json", ser.rep_to_json(make_rep("full", 2, 2, 2, 42))),
        "ident": write(tmp_path / "ident.json", ser.rep_to_json(identity_function_rep(AlgebraDescriptor.full(2), 8))),
        "x_half": write(tmp_path / "x.json", {"level": 1, "X": ser.matrix_to_json([[0.5]])}),
        "x_zero": write(tmp_path / "x0.json", {"level": 2, "X": ser.matrix_to_json(np.zeros((2, 2)))}),
        "x_one": write(tmp_path / "x1.json", {"level": 1, "X": ser.matrix_to_json([[1.0]])}),
        "mu": write(tmp_path / "mu.json", {"atoms": [{"theta": 0.3, "weight": 0.4}, {"theta": 2.0, "weight": 0.6}]}),
        "dir": tmp_path,
    }


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_scalar_atom(files, capsys):
    code, out, _ = run(["eval", files["atom"], files["x_half"]], capsys)
    assert code == 0
    H = ser.matrix_from_json(json.loads(out))
    assert H[0, 0] == pytest.approx(3.0)


def test_eval_zero_is_identity(files, capsys):
    code, out, _ = run(["eval", files["atom"], files["x_zero"]], capsys)
    assert code == 0
    np.testing.assert_allclose(ser.matrix_from_json(json.loads(out)), np.eye(2))


def test_eval_boundary_is_domain_error(files, capsys):
    code, _, err = run(["eval", files["atom"], files["x_one"]], capsys)
    assert code == 3
    assert "not a strict contraction" in err


def test_eval_invalid_rep_names_invariant(files, capsys, tmp_path):
    obj = json.loads(open(files["atom"]).read())
    obj["U"] = ser.matrix_to_json([[2.0]])
    bad = write(tmp_path / "bad.json", obj)
    code, _, err = run(["eval", bad, files["x_half"]], capsys)
    assert code == 2
    assert "U unitary" in err


def test_missing_file_is_validation_error(files, capsys):
    code, _, err = run(["eval", str(files["dir"] / "nope.json"), files["x_half"]], capsys)
    assert code == 2
    assert "cannot read input" in err


def test_cayley(files, capsys, tmp_path):
    M = write(tmp_path / "m.json", ser.matrix_to_json([[3.0]]))
    code, out, _ = run(["cayley", M], capsys)
    assert code == 0
    assert ser.matrix_from_json(json.loads(out))[0, 0] == pytest.approx(0.5)
    code, out, _ = run(["cayley", M, "--direction", "to-herglotz"], capsys)
    assert code == 0
    assert ser.matrix_from_json(json.loads(out))[0, 0] == pytest.approx(-2.0)
    one = write(tmp_path / "one.json", ser.matrix_to_json([[1.0]]))
    code, _, err = run(["cayley", one, "--direction", "to-herglotz"], capsys)
    assert code == 3
    assert "singular" in err


def test_moments_and_gram(files, capsys, tmp_path):
    table = str(tmp_path / "table.json")
    code, out, _ = run(["moments", files["rep"], "--emit-table", table, "--num-letters", "2"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["checks"]["extraction_vs_direct"]
    assert report["residuals"]["extraction_vs_direct"] <= 1e-9
    code, out, _ = run(["gram", table], capsys)
    assert code == 0
    assert json.loads(out)["checks"]["gram_psd"]


def test_roundtrip_identity_stand_in(files, capsys):
    code, out, _ = run(["roundtrip", files["ident"]], capsys)
    assert code == 0
    assert json.loads(out)["result"]["roundtrip_max_error"] <= 1e-12


def test_roundtrip_is_byte_identical(files, capsys):
    a, b = str(files["dir"] / "a.json"), str(files["dir"] / "b.json")
    assert main(["roundtrip", files["rep"], "--seed", "5", "--json-out", a]) == 0
    assert main(["roundtrip", files["rep"], "--seed", "5", "--json-out", b]) == 0
    capsys.readouterr()
    assert open(a, "rb").read() == open(b, "rb").read()


def test_roundtrip_model_file(files, capsys):
    model = str(files["dir"] / "model.json")
    code, _, _ = run(["roundtrip", files["rep"], "--emit-model", model], capsys)
    assert code == 0
    code, out, _ = run(["roundtrip", files["rep"], "--model", model], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["residuals"]["roundtrip_max_error"] <= 1e-6
    assert model in report["inputs"]


def test_roundtrip_noisy_model_exit_4(files, capsys, tmp_path):
    model = str(tmp_path / "model.json")
    run(["roundtrip", files["rep"], "--emit-model", model], capsys)
    obj = json.loads(open(model).read())
    obj["samples"][2]["h"]["data"][0][0][0] += 1e-3
    noisy = write(tmp_path / "noisy.json", obj)
    code, out, err = run(["roundtrip", "--model", noisy], capsys)
    assert code == 4
    assert "model data inconsistent" in err
    assert json.loads(out)["residuals"]["inconsistency"] == pytest.approx(1e-3, rel=0.5)


def test_roundtrip_gram_inconsistency_exit_4(files, capsys, tmp_path):
    # perturb h and refit u so that only the Gram identity detects the noise
    model = str(tmp_path / "model.json")
    run(["roundtrip", files["rep"], "--emit-model", model], capsys)
    obj = json.loads(open(model).read())
    s = obj["samples"][2]
    h = ser.matrix_from_json(s["h"]) + 1e-3
    v = ser.matrix_from_json(s["v"])
    s["h"] = ser.matrix_to_json(h)
    s["u"] = ser.matrix_to_json(v @ np.linalg.inv(h + np.eye(h.shape[0])))
    noisy = write(tmp_path / "noisy.json", obj)
    code, _, err = run(["roundtrip", "--model", noisy], capsys)
    assert code == 4
    assert "Gram residual" in err


def test_roundtrip_requires_input(capsys):
    code, _, _ = run(["roundtrip"], capsys)
    assert code == 2


def test_classical_commands(files, capsys):
    code, out, _ = run(["classical-transform", files["mu"], "--x", "0.5", "--x", "0.1+0.2j"], capsys)
    assert code == 0
    vals = json.loads(out)["result"]["values"]
    assert len(vals) == 2
    code, out, _ = run(["classical-moments", files["mu"], "--N", "8"], capsys)
    assert code == 0
    assert json.loads(out)["checks"] == {"taylor_oracle": True, "toeplitz_psd": True}


def test_toeplitz_check_exit_codes(files, capsys, tmp_path):
    assert run(["toeplitz-check", files["mu"]], capsys)[0] == 0
    bad = write(tmp_path / "m.json", {"moments": [[1, 0], [2, 0]]})
    code, _, err = run(["toeplitz-check", bad], capsys)
    assert code == 4
    assert "not positive semidefinite" in err


@pytest.mark.parametrize("kind", ["haar", "crossed", "shift"])
def test_demo_nonuniq(kind, capsys):
    code, out, _ = run(["demo-nonuniq", kind, "--N", "8", "--samples", "10"], capsys)
    assert code == 0
    report = json.loads(out)
    res = report["result"]
    assert res["distinguishing_moment"] >= 0.1
    assert res["g_sup_difference"] <= 4 * 2.0 ** -8
    assert len(res["representations"]) == 2
    expected_ce = {"haar": False, "crossed": True, "shift": True}[kind]
    assert res["conditional_expectation"]["second"] is expected_ce


def test_demo_invalid_kind(capsys):
    with pytest.raises(SystemExit) as info:
        main(["demo-nonuniq", "spiral"])
    assert info.value.code == 2


def test_demo_small_N(capsys):
    assert run(["demo-nonuniq", "haar", "--N", "1"], capsys)[0] == 2


def test_validate_autodetect(files, capsys, tmp_path):
    files["point"] = write(tmp_path / "p.json", {"algebra": {"kind": "diagonal", "k": 2}, "level": 1,
                                                  "X": ser.matrix_to_json(np.diag([0.2, 0.5]))})
    for key, kind in [("rep", "rep"), ("mu", "measure"), ("point", "point")]:
        code, out, _ = run(["validate", files[key]], capsys)
        assert code == 0
        assert json.loads(out)["result"]["type"] == kind


def test_validate_point_without_algebra(files, capsys):
    code, _, err = run(["validate", files["x_half"]], capsys)
    assert code == 2
    assert "algebra required" in err


def test_validate_bad_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("[1, 2")
    assert run(["validate", str(p)], capsys)[0] == 2


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv("NCH_SEED", raising=False)
    assert resolve_seed(None) == DEFAULT_SEED
    monkeypatch.setenv("NCH_SEED", "17")
    assert resolve_seed(None) == 17
    assert resolve_seed(3) == 3


def test_env_seed_matches_flag(files, capsys, monkeypatch):
    monkeypatch.setenv("NCH_SEED", "9")
    run(["roundtrip", files["rep"]], capsys)
    _, a, _ = run(["roundtrip", files["rep"]], capsys)
    monkeypatch.delenv("NCH_SEED")
    _, b, _ = run(["roundtrip", files["rep"], "--seed", "9"], capsys)
    ra, rb = json.loads(a), json.loads(b)
    assert ra["seed"] == rb["seed"] == 9
    assert ra["result"] == rb["result"]


def test_report_has_no_wall_time_by_default(files, capsys):
    _, out, _ = run(["roundtrip", files["rep"]], capsys)
    assert "wall_time" not in json.loads(out)
    _, out, _ = run(["roundtrip", files["rep"], "--timing"], capsys)
    assert json.loads(out)["wall_time"] >= 0


def test_console_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "ncherglotz.cli", "eval", files["atom"], files["x_half"]],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["data"][0][0][0] == pytest.approx(3.0)

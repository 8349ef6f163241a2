import json

import numpy as np
import pytest

from torsion import cli
from torsion.complex_core import refined_torsion_element
from torsion.errors import SchemaError
from torsion.io import (
    complex_from_dict,
    cw_from_dict,
    decode_complex,
    dump_complex,
    dump_cw,
    dump_euler,
    encode_complex,
    euler_from_dict,
    load_complex,
    load_cw,
    load_rep,
    load_torus_rep,
    resolve_path,
)
from torsion.morse_turaev import lens_space, three_torus, tree_spider, turaev_torsion
from torsion.zeta_orbits import SuspensionSystem


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def value(v):
    return complex(*v) if isinstance(v, list) else v


# ---------------------------------------------------------------- formats

def test_complex_number_codec():
    assert decode_complex(encode_complex(1.5 - 2j)) == 1.5 - 2j
    assert decode_complex(3) == 3
    with pytest.raises(SchemaError):
        decode_complex("1+2j")
    with pytest.raises(SchemaError):
        decode_complex([1, 2, 3])


def test_complex_roundtrip():
    C, G = load_complex("two_term.json")
    C2, G2 = complex_from_dict(json.loads(json.dumps(dump_complex(C, G))))
    assert C2.dims == C.dims
    assert refined_torsion_element(C2) == refined_torsion_element(C)
    assert all(np.array_equal(a, b) for a, b in zip(G.blocks, G2.blocks))


def test_complex_schema_errors():
    with pytest.raises(SchemaError):
        complex_from_dict({"dims": [1, 1]})
    with pytest.raises(SchemaError):
        complex_from_dict({"dims": [1, 1], "differentials": [[[1.0, 0.0]]]})
    with pytest.raises(SchemaError):
        complex_from_dict({"dims": [1, 1], "n": 2, "differentials": [[[1.0]]]})


@pytest.mark.parametrize("cw", [lens_space(5, 1), lens_space(7, 3), three_torus()])
def test_cw_roundtrip(cw):
    back = cw_from_dict(json.loads(json.dumps(dump_cw(cw))))
    assert back.cells == cw.cells
    for j in range(1, cw.n + 1):
        assert np.array_equal(back.integer_boundary(j), cw.integer_boundary(j))


def test_euler_roundtrip():
    cw = lens_space(5, 1)
    e = tree_spider(cw).euler_chain(cw)
    back = euler_from_dict(json.loads(json.dumps(dump_euler(e))), cw)
    assert np.array_equal(back.vector(cw), e.vector(cw))


def test_bundled_lens_instance():
    cw = load_cw("lens5.json")
    tau = turaev_torsion(cw, load_rep("rep_zeta5.json", cw))
    assert abs(tau) == pytest.approx(1.3819660112501058)


def test_torus_rep_sum():
    system = SuspensionSystem.from_entries([2, 1, 1, 1])
    rep = load_torus_rep("rep_torus_sum.json", system)
    assert rep.dim == 4


def test_data_dir_environment(tmp_path, monkeypatch):
    (tmp_path / "mine.json").write_text(json.dumps({"schema": "complex.v1", "dims": [1, 1],
                                                    "differentials": [[[3.0]]]}))
    monkeypatch.setenv("TORSION_DATA_DIR", str(tmp_path))
    assert resolve_path("mine.json") == tmp_path / "mine.json"
    C, _ = load_complex("mine.json")
    assert refined_torsion_element(C) == pytest.approx(3.0)
    with pytest.raises(SchemaError):
        resolve_path("does_not_exist.json")


# ---------------------------------------------------------------- commands

def test_cli_complex(capsys):
    code, rep = run_json(capsys, "complex", "two_term.json")
    assert code == 0
    assert value(rep["values"]["torsion"]) == pytest.approx(2.0)
    for key in ("command", "inputs", "formula", "values", "invariants", "timings", "mode", "passed"):
        assert key in rep
    assert len(rep["inputs"]["two_term.json"]) == 64


def test_cli_complex_chirality_exact(capsys):
    code, rep = run_json(capsys, "complex", "two_term.json", "--chirality", "--signature", "--exact")
    assert code == 0
    vals = rep["values"]
    assert value(vals["torsion"]) == pytest.approx(-2.0)
    assert value(vals["signature_torsion"]) == pytest.approx(-2.0)
    assert vals["torsion_exact"] == "-2"


def test_cli_turaev(capsys):
    code, rep = run_json(capsys, "turaev", "lens5.json", "rep_zeta5.json")
    assert code == 0
    assert rep["values"]["modulus"] == pytest.approx(1.3820, abs=1e-4)


def test_cli_turaev_shift(capsys):
    code, rep = run_json(capsys, "turaev", "torus3.json", "rep_torus.json", "--shift-cycle", "x:1,y:-1")
    assert code == 0
    assert all(inv["passed"] for inv in rep["invariants"])


def test_cli_zeta(capsys):
    code, rep = run_json(capsys, "zeta", "suspension", "--matrix", "2,1,1,1", "--s", "2,0", "--lmax", "18")
    assert code == 0
    assert value(rep["values"]["partial_product"]) == pytest.approx(0.8190, abs=1e-4)
    code, rep = run_json(capsys, "zeta", "suspension", "--lmax", "12", "--rep", "rep_torus_sum.json")
    assert code == 0


def test_cli_contact(capsys):
    code, rep = run_json(capsys, "contact", "verify", "--trials", "5", "--r", "2", "--s0", "0.5,0.3")
    assert code == 0 and rep["passed"]


def test_cli_dyn(capsys):
    code, rep = run_json(capsys, "dyn", "--spectrum", "spectrum_example.json", "--cuts", "0.2,0.45,0.9", "--report")
    assert code == 0 and rep["passed"]


def test_cli_verify_all(capsys):
    code, out, _ = run(capsys, "verify-all", "--trials", "3")
    assert code == 0
    assert out.count("[ok]") == 8


def test_invariant_failure_exit_code(capsys):
    code, rep = run_json(capsys, "contact", "verify", "--trials", "3", "--tol", "1e-30")
    assert code == 1
    assert not rep["passed"]


def test_corrupted_input_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "complex.v1", "dims": [1, ')
    code, out, err = run(capsys, "complex", str(bad))
    assert code == 2
    assert "invalid JSON" in err
    code, out, err = run(capsys, "complex", str(tmp_path / "missing.json"))
    assert code == 2
    code, out, err = run(capsys, "turaev", "lens5.json", "two_term.json")
    assert code == 2


def test_seed_reproducibility(capsys):
    args = ("contact", "verify", "--trials", "4", "--s0", "0.3,0.2", "--seed", "11")
    _, a = run_json(capsys, *args)
    _, b = run_json(capsys, *args)
    assert a["values"] == b["values"]
    assert a["invariants"] == b["invariants"]
    _, c = run_json(capsys, "contact", "verify", "--trials", "4", "--s0", "0.3,0.2", "--seed", "12")
    assert c["passed"]


def test_threads_flag(capsys):
    base = ("zeta", "suspension", "--lmax", "10", "--rep", "rep_torus_sum.json")
    _, a = run_json(capsys, *base)
    _, b = run_json(capsys, *base, "--threads", "3")
    assert a["values"] == b["values"]
    assert b["mode"].startswith("parallel")

"""Acceptance suite: one check per criterion at its stated tolerance.

Each test prints a ``PASS``/``FAIL`` line; the lines are also collected and
repeated in the terminal summary (see ``conftest.py``).  Run directly with
``python tests/test_acceptance.py`` for the lines alone.
"""
import pytest

from torsion.verify import CHECKS

SUMMARY: dict[int, str] = {}


def run_check(number, **kwargs):
    res = CHECKS[number](0, **kwargs)
    line = f"[criterion {number}] {res.line()} [{res.seconds:.2f} s]"
    SUMMARY[number] = line
    print(line)
    return res


def test_criterion_1_torsion_consistency():
    res = run_check(1)
    m = res.metrics
    assert m["instances"] >= 50
    assert m["choice_rel_err"] < 1e-9 and m["basis_rel_err"] < 1e-9
    assert m["multiplicativity_rel_err"] < 1e-9 and m["exact_multiplicativity"]
    assert res.seconds < 5
    assert res.passed


def test_criterion_2_signature_formula():
    res = run_check(2)
    m = res.metrics
    assert m["instances"] - m["skipped_singular_B"] >= 50
    assert m["rel_err"] < 1e-9
    # the sign is fixed on n = 1 and then holds on every instance
    assert m["n1_rule_(-1)^dimC0"] and m["rule_holds_all_n"]
    assert res.passed


def test_criterion_3_variation_formula():
    res = run_check(3)
    m = res.metrics
    assert 1.8 <= m["observed_order"] <= 2.3
    assert m["contraction_diff"] < 1e-10
    assert res.passed


def test_criterion_4_contact_model():
    res = run_check(4)
    m = res.metrics
    assert m["involution_exact"] and m["models"] >= 100
    assert m["min_sigma_ratio_B"] > 0
    assert m["identity_rel_err"] < 1e-9 and m["detlie_rel_err"] < 1e-8
    assert res.seconds < 30
    assert res.passed


def test_criterion_5_turaev():
    res = run_check(5)
    m = res.metrics
    assert m["lens_cases"] == 4 + 6
    assert m["lens_rel_err"] < 1e-9
    assert m["L51_modulus"] == pytest.approx(1.3820, abs=1e-4)
    assert m["euler_rule_rel_err"] < 1e-10 and m["reroute_rel_err"] < 1e-10
    assert res.passed


def test_criterion_6_zeta():
    res = run_check(6)
    m = res.metrics
    assert m["abs_err"] < 1e-6
    assert m["closed_s2"] == pytest.approx(0.81903, abs=1e-4)
    assert m["divisor_identity_n<=25"]
    assert abs(m["lead_closed"] + 1) < 1e-8
    assert abs(m["lead_catalog"] + 1) < 1e-3
    assert res.seconds < 10
    assert res.passed


def test_criterion_7_dynamical_torsion():
    res = run_check(7)
    m = res.metrics
    assert m["spectra"] >= 20
    assert m["cut_rel_err"] < 1e-8 and m["cuts_crossing_resonances"] > 0
    assert m["small_cut_rel_err"] < 1e-8 and m["no_resonance_rel_err"] < 1e-8
    assert res.passed


def test_criterion_8_projector_lemmas():
    res = run_check(8)
    m = res.metrics
    assert m["families"] >= 20
    assert m["trace_rel_err"] < 1e-5
    assert res.passed


if __name__ == "__main__":
    for k in sorted(CHECKS):
        run_check(k)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torsion.complex_core import chirality_torsion, graded_det
from torsion.contact_model import random_resonance_model
from torsion.dyntorsion import (
    ResonanceSpectrum,
    ResonantComplex,
    SuspensionZeta,
    SyntheticZeta,
    cut_invariance_report,
    dynamical_torsion,
    leading_laurent_coefficient,
    random_spectrum,
    renormalized_zeta,
    small_cut_torsion,
    winding_order,
    zero_resonance,
)
from torsion.errors import ConstraintViolation, CutOnResonance, ShapeMismatch
from torsion.io import load_spectrum
from torsion.zeta_orbits import SuspensionSystem

seeds = st.integers(0, 2**32 - 1)

ZETA = SyntheticZeta((0.2 + 0.1j, -0.3, 0.05j), ((1.6 + 0.2j, 2), (-1.3j, -1)))


def model_entry(s0, seed=1, r=1, profile=(0, 1), depth=0):
    return ResonantComplex.from_model(random_resonance_model(r, 1, s0, depth, seed, profile=profile))


def with_orders(entries, q=1, base=ZETA):
    factors = tuple((e.s0, e.order(q)) for e in entries) + base.factors
    return SyntheticZeta(base.poly, factors)


def half_model_spectrum():
    e = model_entry(0.5)
    return ResonanceSpectrum.build([e], with_orders([e]), 1)


# ---------------------------------------------------------------- renormalized zeta

def test_empty_spectrum_keeps_zeta():
    spec = ResonanceSpectrum.build([], ZETA, 1)
    assert renormalized_zeta(spec, 0.5, 0.0) == pytest.approx(ZETA(0.0))
    assert dynamical_torsion(spec, 0.5).value == pytest.approx(1 / ZETA(0.0))


def test_double_pole_cancelled():
    e = zero_resonance([1, 1, 1, 1], 0)
    assert e.order(1) == -2
    # zeta = -s^-2 exp(0.3 s)
    zeta = SyntheticZeta((1j * np.pi, 0.3), ((0.0, -2),))
    spec = ResonanceSpectrum.build([e], zeta, 1)
    val = renormalized_zeta(spec, 0.5, 0.0)
    assert np.isfinite(val) and abs(val) > 1e-6
    for z in 0.25 * np.exp(2j * np.pi * np.arange(8) / 8):
        assert abs(renormalized_zeta(spec, 0.5, z)) > 1e-6


def test_renormalized_zeta_has_no_zero_or_pole_inside():
    spec = half_model_spectrum()
    f = lambda s: renormalized_zeta(spec, 0.7, s)
    assert winding_order(f, 0.0, 0.65) == 0
    assert winding_order(spec.zeta, 0.0, 0.65) == spec.entries[0].order(1)


@pytest.mark.parametrize("lam", [0.5, 0.0, 1.0, 1.5])
def test_cut_on_resonance(lam):
    spec = half_model_spectrum()
    with pytest.raises(CutOnResonance):
        renormalized_zeta(spec, lam, 0.0)
    with pytest.raises(CutOnResonance):
        dynamical_torsion(spec, lam)


# ---------------------------------------------------------------- dynamical torsion

def test_half_model_cuts_agree():
    spec = half_model_spectrum()
    a = dynamical_torsion(spec, 0.3)
    b = dynamical_torsion(spec, 0.7)
    assert a.inside == () and b.inside == (0.5,)
    assert abs(a.value / b.value - 1) < 1e-8


def test_no_resonance_value():
    spec = ResonanceSpectrum.build([], ZETA, 2)
    assert dynamical_torsion(spec, 0.4).value == pytest.approx(ZETA(0.0))


def test_zero_dimensional_zero_resonance():
    e = zero_resonance([0, 0, 0, 0], 0)
    spec = ResonanceSpectrum.build([e], ZETA, 1)
    lead = leading_laurent_coefficient(spec)
    assert lead == pytest.approx(ZETA(0.0))
    assert dynamical_torsion(spec, 0.5).value == pytest.approx(1 / lead)


def test_single_cut_report():
    rep = cut_invariance_report(half_model_spectrum(), [0.4])
    assert rep.max_deviation == 0
    assert rep.moved == ()


def test_report_names_moved_factors():
    rep = cut_invariance_report(half_model_spectrum(), [0.3, 0.7])
    assert rep.max_deviation < 1e-8
    (lo, hi, names), = rep.moved
    assert (lo, hi) == (0.3, 0.7)
    assert "zeta" in names and "torsion" in names


def test_factor_bookkeeping():
    spec = half_model_spectrum()
    e = spec.entries[0]
    a = dynamical_torsion(spec, 0.3)
    b = dynamical_torsion(spec, 0.7)
    grdet = graded_det(e.complex, e.lie)
    assert b.torsion_factor / a.torsion_factor == pytest.approx((-1) ** e.Q / grdet, rel=1e-10)
    assert b.zeta_factor / a.zeta_factor == pytest.approx(grdet, rel=1e-10)
    assert b.sign / a.sign == (-1) ** e.Q


def test_adversarial_spectra_rejected():
    e = model_entry(0.5)
    if e.order(1) != 0:
        with pytest.raises(ConstraintViolation):
            ResonanceSpectrum.build([e], ZETA, 1)
    with pytest.raises(ConstraintViolation):
        ResonanceSpectrum.build([e], SyntheticZeta(ZETA.poly, ((0.5, e.order(1) + 1),)), 1)
    with pytest.raises(ShapeMismatch):
        ResonanceSpectrum.build([e, model_entry(0.5, seed=2)], with_orders([e]), 1)
    with pytest.raises(ShapeMismatch):
        ResonanceSpectrum.build([e, model_entry(0.3, r=2, profile=None)], with_orders([e]), 1)


def test_plain_complex_needs_torsion_identity():
    e = model_entry(0.4 + 0.2j)
    G = e.chirality
    scaled = [b * 1.5 for b in G.blocks[:e.r + 1]]
    with pytest.raises(ConstraintViolation):
        ResonantComplex.plain(e.s0, e.complex, type(G).from_lower(scaled, e.complex.n), e.lie)
    same = ResonantComplex.plain(e.s0, e.complex, G, e.lie)
    assert same.order(1) == e.order(1)


def test_q_parity_inverts_zeta_exponent():
    a = ResonanceSpectrum.build([], ZETA, 1)
    b = ResonanceSpectrum.build([], ZETA, 2)
    ta, tb = dynamical_torsion(a, 0.5), dynamical_torsion(b, 0.5)
    assert ta.zeta_factor * tb.zeta_factor == pytest.approx(1.0)
    assert ta.value * tb.value == pytest.approx(1.0)


def test_suspension_zeta_handle():
    sys_ = SuspensionSystem.from_entries([2, 1, 1, 1])
    zeta = SuspensionZeta(sys_, 0.5)
    spec = ResonanceSpectrum.build([], zeta, 1)
    assert dynamical_torsion(spec, 0.3).value == pytest.approx(1 / zeta(0.0))


@pytest.mark.parametrize("name", ["spectrum_example.json", "spectrum_zero.json"])
def test_bundled_spectra(name):
    spec = load_spectrum(name)
    assert cut_invariance_report(spec, [0.2, 0.45, 0.6, 0.95]).max_deviation < 1e-8


# ---------------------------------------------------------------- properties

@settings(max_examples=15)
@given(seeds, st.integers(1, 3), st.integers(1, 2), st.booleans())
def test_cut_invariance(seed, n_res, r, include_zero):
    spec = random_spectrum(seed, n_res, r, include_zero)
    mods = sorted(abs(e.s0) for e in spec.entries if abs(e.s0) > 0)
    edges = [0.0] + mods + [1.0]
    cuts = [(lo + hi) / 2 for lo, hi in zip(edges, edges[1:]) if hi - lo > 1e-6]
    assert cut_invariance_report(spec, cuts).max_deviation < 1e-8


@settings(max_examples=15)
@given(seeds, st.integers(1, 3), st.integers(1, 2), st.booleans())
def test_small_cut_limit(seed, n_res, r, include_zero):
    spec = random_spectrum(seed, n_res, r, include_zero)
    smallest = min([abs(e.s0) for e in spec.entries if abs(e.s0) > 0] + [1.0])
    tau = dynamical_torsion(spec, smallest / 2).value
    assert abs(small_cut_torsion(spec) / tau - 1) < 1e-8


@settings(max_examples=10)
@given(seeds)
def test_zero_resonance_is_valid(seed):
    e = zero_resonance([2, 2, 2, 2], seed, nilpotent=True)
    assert e.complex.is_acyclic
    assert e.order(1) == -4
    assert np.isfinite(chirality_torsion(e.complex, e.chirality))

"""Interval pipeline against the exact rational normalization."""

import dataclasses
from fractions import Fraction

import pytest

import oracle
from birkhoff.models import henon_heiles
from birkhoff.normalform import ResonanceMode, step

OMEGA = (Fraction(1), Fraction(-617, 1000))


def run_both(R_I, steps, top, mode=None, kept=None):
    hist = oracle.normalize(oracle.henon_heiles_unscaled(OMEGA), OMEGA, 2, steps, top + 2, kept)
    st = henon_heiles(1, OMEGA[1], R_I=R_I, R_II=max(top, R_I))
    if mode is not None:
        st = dataclasses.replace(st, mode=mode)
    states = []
    for _ in range(steps):
        st = step(st)
        states.append(st)
    return oracle.compare_pipeline(states, hist, R_I, top)


def test_scaled_containment_helper():
    from birkhoff.rigor import Interval

    root2 = Interval.point(2.0).sqrt()
    # order 1 carries 2**(-3/2) = sqrt(2)/4
    assert oracle.contains_scaled(root2 / 4, Fraction(1), 1)
    assert not oracle.contains_scaled(root2 / 4, Fraction(1001, 1000), 1)
    assert oracle.contains_scaled(Interval.point(0.125), Fraction(1), 2)
    assert oracle.contains_scaled(-root2 / 4, Fraction(-1), 1)


def test_initial_hamiltonian_matches():
    rep = run_both(R_I=4, steps=0, top=4)
    assert rep["coefficients"] == 0
    st = henon_heiles(1, OMEGA[1], R_I=4, R_II=4)
    H = oracle.henon_heiles_unscaled(OMEGA)
    exact = oracle.homogeneous(H, 3)
    for key, (re, im) in exact.items():
        c = st.f[1].coeff(key[:2], key[2:])
        assert oracle.contains_scaled(c.re, re, 1) and oracle.contains_scaled(c.im, im, 1)
    assert len(exact) == st.f[1].nnz


@pytest.mark.parametrize("R_I, steps, top", [(4, 4, 4), (4, 6, 6), (6, 6, 6)])
def test_non_resonant_containment(R_I, steps, top):
    rep = run_both(R_I, steps, top)
    assert rep["coefficients"] > 0 and rep["majorants"] > 0
    assert rep["bad_coefficients"] == []
    assert rep["bad_majorants"] == []


def test_resonant_containment():
    rep = run_both(4, 4, 4, ResonanceMode.single(2), kept=lambda d: d[0] == 0)
    assert rep["coefficients"] > 0
    assert rep["bad_coefficients"] == []
    assert rep["bad_majorants"] == []


def test_detects_perturbed_run():
    # a wrong frequency must show up as a containment failure
    hist = oracle.normalize(oracle.henon_heiles_unscaled(OMEGA), OMEGA, 2, 2, 4)
    st = henon_heiles(1, Fraction(-618, 1000), R_I=2, R_II=2)
    states = [step(st)]
    states.append(step(states[0]))
    rep = oracle.compare_pipeline(states, hist, 2, 2)
    assert rep["bad_coefficients"]

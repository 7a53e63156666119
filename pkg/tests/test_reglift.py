import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special

from artifact.errors import NotUnimodular, OnSingularLocus, RepMismatch, WeightMismatch, WeightNotNegative
from artifact.lattice import fixture
from artifact.maass import VProfile, holomorphic_expansion
from artifact.reglift import (
    RegularizedResult,
    h2_point,
    harmonic_form,
    kudla_green_direct,
    kudla_green_via_lift,
    regularized_pairing,
    strip_integral,
)
from artifact.series import DefiniteTheta, ExpansionHandle, TruncatedPoincare, ZeroHandle, faber_handle

from conftest import sigma


def test_strip_integral_closed_forms():
    prof = VProfile(power_terms=[(2.0, Fraction(-1))], constant=1.5, exp_terms=([3.0], [1.0], [0.2]))
    val, logT, closed, err, _ = strip_integral(prof, 1.25)
    ref = 2.0 / (2 * 1.25 ** 2) + 1.5 / 1.25 + 3.0 * special.exp1(0.2 * 1.25)
    assert abs(val - ref) < 1e-12 and logT == 0 and err < 1e-10


def test_strip_integral_fast_exponentials_and_log():
    prof = VProfile(power_terms=[(0.7, Fraction(1))], exp_terms=([1.0, -2.0], [0.0, 2.0], [3.0, 9.0]))
    val, logT, _, err, _ = strip_integral(prof, 2.0)
    ref = integrate.quad(lambda v: (np.exp(-3 * v) - 2 * v * v * np.exp(-9 * v)) / v ** 2, 2.0, np.inf,
                         epsabs=1e-15)[0]
    assert abs(val - (ref - 0.7 * math.log(2.0))) < 1e-12 and abs(logT - 0.7) < 1e-15


def test_constant_pairings_on_unimodular_weight_zero():
    L = fixture("2U")
    one = ExpansionHandle(holomorphic_expansion(0, True, {0: [1.0]}, 1), L)
    # <1, 1>^reg = vol(F) = pi/3 and <j_m, 1>^reg = -8 pi sigma(m)
    r = regularized_pairing(ExpansionHandle(holomorphic_expansion(0, False, {0: [1.0]}, 1), L), one)
    assert abs(r.value - math.pi / 3) < 1e-10
    for m in (1, 2, 3):
        r = regularized_pairing(faber_handle(m, L), one)
        assert abs(r.value + 8 * math.pi * sigma(m)) < 1e-6 * 8 * math.pi * sigma(m)


def test_unfolding_on_a1():
    L = fixture("A1")
    th = DefiniteTheta(L, 10)
    for w in (0.6, 1.0, 1.7):
        r = regularized_pairing(TruncatedPoincare(L, Fraction(-1, 2), Fraction(1, 4), 1, w), th)
        assert abs(r.value - 2 / w) < 1e-6


def test_t_stability():
    L = fixture("A1A1")
    th = DefiniteTheta(L, 10)
    P = TruncatedPoincare(L, -1, 1, 0, 0.8)
    a = regularized_pairing(P, th, T_max=100)
    b = regularized_pairing(P, th, T_max=200)
    assert abs(a.value - b.value) <= 3 * max(a.quadrature_error, b.quadrature_error) + 1e-12


def test_pairing_errors():
    L = fixture("A1A1")
    th = DefiniteTheta(L, 6)
    with pytest.raises(WeightMismatch):
        regularized_pairing(TruncatedPoincare(L, -2, 1, 0, 1.0), th)
    with pytest.raises(RepMismatch):
        # two S(L)-valued forms of opposite weight
        regularized_pairing(TruncatedPoincare(L, -1, 1, 0, 1.0), TruncatedPoincare(L, 1, 1, 0, 1.0))
    assert regularized_pairing(ZeroHandle(4, -1, False, L), th).value == 0


def test_result_arithmetic_and_json():
    a = RegularizedResult(1 + 2j, quadrature_error=1e-6, parts={"x": 1.0})
    b = RegularizedResult(0.5, quadrature_error=2e-6, parts={"x": 2.0, "y": 1j})
    c = a - b
    assert c.value == 0.5 + 2j and abs(c.quadrature_error - 3e-6) < 1e-18 and c.parts["x"] == -1.0
    doc = json.loads(json.dumps(c.to_json()))
    assert doc["value"] == [0.5, 2.0] and doc["parts"]["y"] == [0.0, -1.0]


def test_green_function_guards():
    L = fixture("2U")
    with pytest.raises(OnSingularLocus):
        kudla_green_direct(L, 1, 1.0, 0, h2_point(L, 0.2 + 1.1j, 0.2 + 1.1j))
    with pytest.raises(NotUnimodular):
        h2_point(fixture("D4"), 1j, 1j)
    with pytest.raises(WeightNotNegative):
        harmonic_form(fixture("D4"), 1, 1)
    with pytest.raises(NotUnimodular):
        harmonic_form(fixture("A1A1"), 0, 1)
    assert isinstance(harmonic_form(fixture("D4"), -2, -1), ZeroHandle)


def test_kudla_green_m0_log_correction():
    L = fixture("2U")
    z = h2_point(L, 0.3 + 1.2j, -0.1 + 0.8j)
    d, bound = kudla_green_direct(L, 0, 2.0, 0, z)
    r = kudla_green_via_lift(L, 0, 2.0, 0, z)
    assert abs(r.parts["log_w"] - math.log(2.0)) < 1e-15
    assert abs(d - r.value) < 1e-3 and bound < 1e-10

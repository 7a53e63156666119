import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import BadParameter, DependentBasis, NonPositiveArgument, NonPositiveX, RepMismatch
from artifact.lattice import discriminant_group, fixture
from artifact.maass import (
    FourierExpansion,
    SingElement,
    VProfile,
    beta_array,
    beta_fn,
    eta_splitting,
    holomorphic_expansion,
    incomplete_gamma,
    kummer_M1,
    kummer_M1_array,
    principal_part,
    psi_pairing,
    regularized_lower_gamma,
    regularized_upper_gamma,
)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 60.0))
def test_beta_is_e1(r):
    ref = float(mpmath.e1(r))
    assert rel(beta_fn(r), ref) < 1e-12
    assert rel(beta_array(np.array([r]))[0], ref) < 1e-12


def test_beta_rejects_nonpositive():
    with pytest.raises(NonPositiveArgument):
        beta_fn(0.0)
    with pytest.raises(NonPositiveArgument):
        beta_array(np.array([1.0, -1.0]))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([-3, -2.5, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 3, 4.5, 7]), st.floats(1e-3, 50.0))
def test_incomplete_gamma(s, x):
    ref = float(mpmath.gammainc(s, x))
    assert rel(incomplete_gamma(s, x), ref) < 1e-12


def test_incomplete_gamma_value():
    # Gamma(3/2, 1) = sqrt(pi) erfc(1)/2 + 1/e
    closed = math.sqrt(math.pi) * math.erfc(1.0) / 2 + math.exp(-1.0)
    assert abs(incomplete_gamma(1.5, 1.0) - closed) < 1e-14
    assert abs(incomplete_gamma(1.5, 1.0) - 0.5072822338) < 1e-10
    with pytest.raises(NonPositiveX):
        incomplete_gamma(1.0, 0.0)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 3.0, 5.5])
def test_regularized_gamma_pair(s):
    x = np.array([1e-4, 0.3, 1.0, s + 0.99, s + 1.01, 10.0, 40.0])
    Q = regularized_upper_gamma(s, x)
    P = regularized_lower_gamma(s, x)
    for xi, q, p in zip(x, Q, P):
        assert rel(q, float(mpmath.gammainc(s, xi, regularized=True))) < 1e-12
        assert rel(p, float(mpmath.gammainc(s, 0, xi, regularized=True))) < 1e-11


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1.5, 2.0, 3.0, 4.0, 5.0]), st.floats(-5.0, 40.0))
def test_kummer(b, x):
    ref = float(mpmath.hyp1f1(1, b, x))
    assert rel(kummer_M1(b, x), ref) < 1e-11
    assert rel(kummer_M1_array(b, np.array([x, 0.01]))[0], ref) < 1e-11


def test_kummer_rejects_small_b():
    with pytest.raises(BadParameter):
        kummer_M1(1.0, 1.0)


def _profile():
    return VProfile(power_terms=[(2.0, Fraction(-1)), (0.5, Fraction(1, 2))], constant=3.0,
                    gamma_terms=[(1.5, 2.0, 0.7)], exp_terms=([0.25], [1.0], [1.3]))


def test_profile_evaluation():
    p = _profile()
    v = 1.7
    ref = 2 / v + 0.5 * math.sqrt(v) + 3 + 1.5 * float(mpmath.gammainc(2, 0.7 * v)) + 0.25 * v * math.exp(-1.3 * v)
    assert rel(complex(p(v)), ref) < 1e-13


def test_profile_tail_ct_against_quadrature():
    # the integrable part against an independent quadrature, the beta = 1 power via log T
    p = _profile()
    v0 = 1.3
    tot, logT = p.tail_ct(v0)
    f = lambda v: complex(p(v)) * v ** -2
    ref = complex(mpmath.quad(lambda v: f(float(v)).real, [v0, 10, mpmath.inf]))
    assert rel(complex(tot), ref) < 1e-9 and complex(logT) == 0
    q = VProfile(power_terms=[(1.0, Fraction(1))])
    tot, logT = q.tail_ct(2.0)
    assert abs(complex(tot) + math.log(2.0)) < 1e-15 and complex(logT) == 1


def test_profile_algebra():
    a = VProfile(power_terms=[(1.0, Fraction(1))], exp_terms=([2.0], [0.0], [1.0]))
    b = VProfile(constant=3.0, exp_terms=([1.0], [1.0], [0.5]))
    v = np.array([0.8, 2.3])
    assert np.allclose((a * b)(v), a(v) * b(v))
    assert np.allclose((a + b)(v), a(v) + b(v))
    assert np.allclose((a - b)(v), a(v) - b(v))
    with pytest.raises(BadParameter):
        VProfile(exp_terms=([1.0], [0.0], [0.0]))
    with pytest.raises(BadParameter):
        VProfile(log_term=1.0) * a


def test_expansion_json_round_trip():
    F = FourierExpansion(Fraction(-1), False, 2, {
        -1: VProfile(constant=[1.0, 0.0], shape=(2,)),
        Fraction(3, 4): VProfile(power_terms=[([0.0, 2.0 - 1j], Fraction(-1))], gamma_terms=[([0, 1], 2.0, 3.0)],
                                 shape=(2,)),
    })
    G = FourierExpansion.from_json(json.loads(F.dumps()))
    for tau in (0.1 + 1.2j, -0.33 + 0.9j):
        assert np.allclose(F.evaluate(tau), G.evaluate(tau), rtol=1e-15)
    assert not F.is_holomorphic
    with pytest.raises(RepMismatch):
        FourierExpansion(0, False, 2, {0: VProfile(constant=1.0)})


def test_principal_part_and_psi():
    F = FourierExpansion(Fraction(-1), False, 2, {
        -1: VProfile(constant=[2.0, 0.0], shape=(2,)),
        Fraction(-1, 4): VProfile(constant=[0.0, 5.0], shape=(2,)),
        1: VProfile(constant=[7.0, 7.0], shape=(2,)),
    })
    P = principal_part(F)
    assert set(P.terms) == {-1, Fraction(-1, 4)}
    g = holomorphic_expansion(Fraction(5, 2), False, {1: [3.0, 0.0], Fraction(1, 4): [0.0, 1.0]}, 2)
    assert psi_pairing(P, g) == 6.0 + 5.0
    with pytest.raises(BadParameter):
        SingElement({1: [1.0, 0.0]}, 2)


def test_sing_invariance_on_a1():
    D = discriminant_group(fixture("A1"))
    ok = SingElement({Fraction(-1, 4): [0.0, 1.0]}, 2)
    assert ok.check_invariance(D, Fraction(-1, 2), (1, 0)) == []
    bad = SingElement({-1: [0.0, 1.0]}, 2)
    assert ("T", -1, 1) in bad.check_invariance(D, Fraction(-1, 2), (1, 0))


def test_eta_splitting():
    D = discriminant_group(fixture("D4"))
    eta = eta_splitting([(1, 0)], D, 2, (4, 0))
    assert np.allclose(eta[(Fraction(1), 0)].terms[Fraction(-1)], [2, 0, 0, 0])
    with pytest.raises(DependentBasis):
        eta_splitting([(1, 0), (1, 0)], D, 2, (4, 0))

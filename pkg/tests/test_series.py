import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from artifact.errors import (
    BadIndex,
    MissingMajorant,
    NonNegativeWeight,
    NotDefinite,
    NotIsotropic,
    NotPrimitive,
    OutsideConvergence,
)
from artifact.lattice import build_lattice, fixture
from artifact.reglift import h2_point
from artifact.series import (
    Contraction,
    DefiniteTheta,
    Eisenstein,
    HejhalPoincare,
    SiegelTheta,
    TruncatedPoincare,
    delta_qseries,
    eisenstein_qseries,
    faber_j,
    j_qseries,
)
from artifact.weilrep import S, T, slash, weilrep_for

from conftest import sigma


def test_a1_theta_is_jacobi_theta():
    th = DefiniteTheta(fixture("A1"))
    for tau in (0.1 + 0.8j, -0.37 + 1.3j, 0.25 + 0.5j):
        nome = mpmath.exp(2j * mpmath.pi * tau)
        ref = [complex(mpmath.jtheta(3, 0, nome)), complex(mpmath.jtheta(2, 0, nome))]
        assert np.allclose(th.evaluate(tau), ref, rtol=1e-13, atol=0)


@pytest.mark.parametrize("name", ["A1", "A1A1", "A2", "D4"])
def test_definite_theta_modularity(name):
    th = DefiniteTheta(fixture(name))
    f = th.evaluate
    for g in (S, T, S * T * S, T * T * S * T.inverse() * S):
        tau = 0.21 + 1.1j
        b = slash(f, th.weight, g, tau, th.wr)
        assert np.abs(b - f(tau)).max() < 1e-12 * np.abs(f(tau)).max()


def test_definite_theta_rejects_indefinite():
    with pytest.raises(NotDefinite):
        DefiniteTheta(fixture("2U"))
    with pytest.raises(MissingMajorant):
        SiegelTheta(fixture("2U"))


def test_siegel_theta_modularity_and_symmetry():
    L = fixture("2U")
    z = h2_point(L, 0.1 + 1.1j, 0.3 + 1.7j)
    th = SiegelTheta(L, z)
    assert th.weight == 0
    for g in (S, T, S * T * T * S):
        tau = -0.13 + 1.05j
        a = th.evaluate(tau)
        b = slash(th.evaluate, 0, g, tau, th.wr)
        assert abs(b[0] - a[0]) < 1e-10 * abs(a[0])
    # swapping z1 and z2 is an isometry of 2U
    th2 = SiegelTheta(L, h2_point(L, 0.3 + 1.7j, 0.1 + 1.1j))
    assert abs(th2.evaluate(0.2 + 0.9j)[0] - th.evaluate(0.2 + 0.9j)[0]) < 1e-10


def test_classical_q_series():
    assert eisenstein_qseries(4, 4) == [1, 240, 2160, 6720, 17520]
    assert [eisenstein_qseries(6, 3)[n] for n in range(4)] == [1, -504, -16632, -122976]
    assert delta_qseries(6) == [0, 1, -24, 252, -1472, 4830, -6048]
    j = j_qseries(3)
    assert (j[-1], j[0], j[1], j[2], j[3]) == (1, 0, 196884, 21493760, 864299970)
    j2 = faber_j(2, 2)
    assert j2[-2] == 1 and 0 not in j2 and -1 not in j2 and j2[1] == 42987520
    n = 7
    assert eisenstein_qseries(8, n)[n] == 480 * sigma(n, 7)


def _max_rel(a, b):
    return float(np.abs(a - b).max() / np.abs(b).max())


def test_truncated_poincare_is_modular():
    L = fixture("A1A1")
    P = TruncatedPoincare(L, -1, Fraction(1, 4), 1, 0.8)
    for g in (S, T, S * T * S):
        tau = 0.137 + 0.93j
        assert _max_rel(slash(P.evaluate, -1, g, tau, P.wr), P.evaluate(tau)) < 1e-12


def test_truncated_poincare_seed():
    # above every translate of the cutoff only the seed sigma_w q^-m phi~ survives
    L = fixture("A1A1")
    P = TruncatedPoincare(L, -1, 1, 0, 1.0)
    tau = 0.2 + 2.5j
    val = P.evaluate(tau)
    seed = np.exp(-2j * math.pi * tau)
    assert np.abs(val - [seed, 0, 0, 0]).max() < 1e-15 * abs(seed)
    assert P.evaluate(0.2 + 0.3j).shape == (4,)
    assert not TruncatedPoincare(L, -1, Fraction(1, 3), 0, 1.0).active


def test_hejhal_poincare_modular_and_principal_part():
    L = fixture("D4")
    F = HejhalPoincare(L, -2, 1, 0, C=40)
    tau = 0.09 + 1.2j
    f = F.evaluate(tau)
    for g in (S, T):
        assert _max_rel(slash(F.evaluate, -2, g, tau, F.wr), f) < 1e-4
    # F = q^-1 phi_0 + O(1) as v grows; the constant term is finite
    big = 0.3 + 4.0j
    assert abs(F.evaluate(big)[0] * np.exp(2j * math.pi * big) - 1) < 1e-3
    with pytest.raises(NonNegativeWeight):
        HejhalPoincare(L, 1, 1, 0)
    with pytest.raises(BadIndex):
        HejhalPoincare(L, -2, 0, 0)


def test_eisenstein_is_modular():
    L = fixture("A1")
    E = Eisenstein(L, Fraction(5, 2), 3.2, C=30)
    tau = -0.11 + 1.17j
    err = E.error_estimate(tau)
    for g in (S, T):
        diff = np.abs(slash(E.evaluate, Fraction(5, 2), g, tau, E.wr) - E.evaluate(tau)).max()
        assert diff < 2 * err < 1e-3
    with pytest.raises(OutsideConvergence):
        Eisenstein(L, Fraction(5, 2), 1.0)


def _equivariance(L, n):
    c = Contraction(L, n)
    W, WK = weilrep_for(L), weilrep_for(c.K)
    worst = 0.0
    for M, MK in ((W.S, WK.S), (W.T, WK.T)):
        A = np.array([c.apply(M[:, j]) for j in range(W.dim)]).T
        B = np.array([MK @ c.apply(np.eye(W.dim)[j]) for j in range(W.dim)]).T
        worst = max(worst, float(np.abs(A - B).max()))
    return c, worst


def test_contraction_is_equivariant():
    L = build_lattice([[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, -2, 0], [0, 0, 0, -2]])
    c, worst = _equivariance(L, [1, 0, 1, 0])
    assert worst < 1e-14 and c.K.gram == ((2, 0), (0, -2))
    assert sum(x is not None for x in c.image) == 8
    c, worst = _equivariance(fixture("2UA1"), [1, 0, 0, 0, 0])
    assert worst < 1e-14 and c.image == [0, 1]
    with pytest.raises(NotIsotropic):
        Contraction(fixture("2U"), [1, 1, 0, 0])
    with pytest.raises(NotPrimitive):
        Contraction(fixture("2U"), [2, 0, 0, 0])

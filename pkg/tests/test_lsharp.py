import math

import numpy as np
import pytest

from artifact.errors import BadWeight, MissingBasisData, StencilFailure
from artifact.lattice import fixture
from artifact.lsharp import (
    LSharp,
    OperatorConfig,
    cuspidal_projection,
    lowering_numeric,
    raising,
    raising_expansion,
    rankin_partial_sums,
    xi_operator,
)
from artifact.maass import holomorphic_expansion
from artifact.series import DefiniteTheta, ExpansionHandle, eisenstein_qseries


def _e4(nmax=12):
    return holomorphic_expansion(4, True, {n: [float(c)] for n, c in enumerate(eisenstein_qseries(4, nmax))}, 1)


def test_lowering_of_powers_and_holomorphic():
    for a in (-1.0, 0.5, 2.0):
        tau = 0.3 + 1.4j
        val, err = lowering_numeric(lambda t, a=a: np.array([t.imag ** a]), tau)
        assert abs(val[0] - a * tau.imag ** (a + 1)) < 1e-9 and err < 1e-6
    val, _ = lowering_numeric(ExpansionHandle(_e4()), 0.1 + 1.2j)
    assert abs(val[0]) < 1e-8


def test_raising_routes_agree_and_lowering_inverts():
    E = _e4()
    tau = -0.21 + 1.15j
    sym = ExpansionHandle(raising_expansion(E, 4)).evaluate(tau)
    num, _ = raising(ExpansionHandle(E), 4, tau)
    assert abs(sym[0] - num[0]) < 1e-8 * abs(sym[0])
    # L(R_l g) = -l g, so -(1/l) R_l is a lowering preimage
    pre = ExpansionHandle(raising_expansion(E, 4, normalize=True))
    val, _ = lowering_numeric(pre, tau)
    assert abs(val[0] - ExpansionHandle(E).evaluate(tau)[0]) < 1e-7


def test_xi_of_nonholomorphic_weight():
    # xi_k(v^(1-k)) = (1 - k) for real weights
    k = -1.0
    tau = 0.4 + 1.3j
    x, _ = xi_operator(lambda t: np.array([t.imag ** (1 - k)]), k, tau)
    assert abs(x[0] - (1 - k)) < 1e-9


def test_operator_failures():
    with pytest.raises(StencilFailure):
        lowering_numeric(lambda t: np.array([1.0]), 0.1 + 1e-4j)
    with pytest.raises(BadWeight):
        raising_expansion(_e4(), 0, normalize=True)


def test_lsharp_small_fixture():
    L = fixture("A1A1")
    th = DefiniteTheta(L, 6)
    ls = LSharp(th, 1, C=10, cfg=OperatorConfig(cusp_basis_declared_empty=True))
    tau = 0.17 + 1.3j
    val, _ = lowering_numeric(ls.evaluate_many, tau)
    f = th.evaluate(tau)
    # truncating at m <= 1 leaves O(e^(-2 pi v m)) discrepancies from m = 5/4, 2, ...
    assert np.abs(val - f).max() < 5 * np.exp(-2 * math.pi * 1.25 * tau.imag) * 4
    H = ls.handle()
    assert np.allclose(H.evaluate(tau), ls.evaluate(tau), rtol=1e-9, atol=1e-12)
    assert ls.metadata["cuspidal_projection"] == "declared empty"
    assert cuspidal_projection(H, ls.cfg) == []
    rows = ls.table([1.0, 2.0])
    assert {r[1] for r in rows} == {0, 1, 2, 3} and all(len(r) == 5 for r in rows)


def test_lsharp_needs_forms_at_low_weight():
    L = fixture("A1A1")
    f = ExpansionHandle(holomorphic_expansion(0, True, {0: [1.0, 0, 0, 0]}, 4), L)
    with pytest.raises(MissingBasisData):
        LSharp(f, 1)


def test_rankin_partial_sums():
    g = holomorphic_expansion(2, False, {1: [1.0], 2: [2.0 + 1j]}, 1)
    out = rankin_partial_sums(g, {1: [3.0], 2: [5.0], 3: [7.0]}, 3.0, 2, 3)
    a = 3.0 / 2 + 2 - 1
    pref = math.gamma(a) / (4 * math.pi) ** a
    ref = pref * (3.0 + 5.0 * (2 - 1j) / 2 ** a)
    assert [m for m, _ in out] == [1, 2, 3] and abs(out[-1][1] - ref) < 1e-14

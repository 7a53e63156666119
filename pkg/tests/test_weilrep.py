import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import DimensionMismatch, NotUnimodular, WeightParityMismatch
from artifact.lattice import discriminant_group, fixture
from artifact.weilrep import (
    IDENTITY,
    S,
    T,
    Z,
    Z2,
    MpElement,
    SchwartzVector,
    coset_pairs_above_height,
    cosets_above_height,
    mp,
    mp_decompose,
    reduce_to_fundamental_domain,
    rho_apply,
    weilrep_for,
    word_product,
)

FIXTURES = ["A1", "A1A1", "A2", "D4", "2U", "UA1", "E8"]


def e(x):
    return cmath.exp(2j * math.pi * float(x))


@pytest.mark.parametrize("name", FIXTURES)
def test_generators_match_explicit_formula(name):
    L = fixture(name)
    D = discriminant_group(L)
    p, q = L.signature
    wr = weilrep_for(L)
    n = D.order
    T_ref = np.diag([e(D.q_values[i]) for i in range(n)])
    S_ref = np.array([[e(-D.b_values[i][j]) for j in range(n)] for i in range(n)])
    S_ref *= e(-(p - q) / 8) / math.sqrt(n)
    assert np.abs(wr.T - T_ref).max() < 1e-14
    assert np.abs(wr.S - S_ref).max() < 1e-14
    assert np.abs(weilrep_for(L, conjugate=True).S - S_ref.conj()).max() < 1e-14


@pytest.mark.parametrize("name", FIXTURES)
def test_relations(name):
    res = weilrep_for(fixture(name)).relation_residuals()
    assert max(res.values()) < 1e-12


words = st.lists(st.tuples(st.sampled_from(["S", "T", "Ti"]), st.integers(1, 3)), min_size=1, max_size=6)


def _build(word):
    g = IDENTITY
    for s, n in word:
        for _ in range(n):
            g = g * {"S": S, "T": T, "Ti": T.inverse()}[s]
    return g


@settings(max_examples=60, deadline=None)
@given(words, words)
def test_rho_is_a_homomorphism(w1, w2):
    wr = weilrep_for(fixture("A1"))
    g, h = _build(w1), _build(w2)
    assert np.abs(wr.matrix(g * h) - wr.matrix(g) @ wr.matrix(h)).max() < 1e-12
    assert np.abs(wr.inverse_matrix(g) @ wr.matrix(g) - np.eye(wr.dim)).max() < 1e-12


@settings(max_examples=60, deadline=None)
@given(words)
def test_decomposition_round_trip(w):
    g = _build(w)
    assert word_product(mp_decompose(g.matrix, g.branch)).key() == g.key()


@settings(max_examples=60, deadline=None)
@given(words, st.floats(-0.5, 0.5), st.floats(0.3, 3.0))
def test_cocycle(w, u, v):
    g = _build(w)
    h = _build(w[::-1])
    tau = complex(u, v)
    lhs = (g * h).phi(tau)
    rhs = g.phi(h.act(tau)) * h.phi(tau)
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_center():
    assert Z.matrix == ((-1, 0), (0, -1)) and (Z * Z).key() == Z2.key()
    assert (Z2 * Z2).key() == IDENTITY.key()
    # rho(Z) phi_mu = i^{q-p} phi_{-mu}
    L = fixture("A1")
    wr = weilrep_for(L)
    D = discriminant_group(L)
    M = wr.matrix(Z)
    for mu in range(D.order):
        col = np.zeros(D.order, complex)
        col[D.neg[mu]] = 1j ** (L.signature[1] - L.signature[0])
        assert np.allclose(M[:, mu], col)


def test_bad_elements():
    with pytest.raises(NotUnimodular):
        MpElement(1, 1, 1, 1)
    with pytest.raises(WeightParityMismatch):
        weilrep_for(fixture("A1")).check_weight(1)


def test_schwartz_pairing():
    D = discriminant_group(fixture("D4"))
    a = SchwartzVector.basis(D, 1)
    b = SchwartzVector(D, [0, 2j, 0, 1])
    assert b.pairing(a) == 2j and a.pairing(b) == -2j
    assert b.to_dual().evaluate(a) == -2j
    with pytest.raises(DimensionMismatch):
        a.evaluate(b)
    wr = weilrep_for(fixture("D4"))
    v = rho_apply(D, None, S, b.to_dual())
    assert np.allclose(v.coords, wr.S @ b.coords.conj())


def test_cosets_above_height_brute_force():
    tau, w = 0.13 + 0.41j, 0.2
    cs, ds = coset_pairs_above_height(tau, w)
    got = set(zip(cs.tolist(), ds.tolist()))
    ref = set()
    for c in range(0, 40):
        for d in range(-60, 61):
            if math.gcd(c, d) != 1 or (c == 0 and d != 1):
                continue
            if tau.imag / abs(c * tau + d) ** 2 >= w:
                ref.add((c, d))
    assert got == ref
    for g in cosets_above_height(tau, w):
        assert g.act(tau).imag >= w - 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 2.0))
def test_reduce_to_fundamental_domain(u, v):
    tau = complex(u, v)
    g, t = reduce_to_fundamental_domain(tau)
    assert abs(t.real) <= 0.5 + 1e-12 and abs(t) >= 1 - 1e-9
    assert abs(g.act(tau) - t) < 1e-8 * max(1, abs(t))
    assert mp(*np.array(g.matrix).ravel()).matrix == g.matrix

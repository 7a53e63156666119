"""The metaplectic group Mp2(Z), the Weil representation and the slash operator.

An element of Mp2(Z) is a pair (gamma, phi) with phi a holomorphic square
root of c*tau + d on the upper half-plane.  The principal root is a
holomorphic function on H for every gamma, so a single bit selects phi.

Convention.  `WeilRep(D, sig)` carries the matrices

    rho(T) phi_mu = e(Q(mu)) phi_mu,
    rho(S) phi_mu = e((q-p)/8) |D|^(-1/2) sum_nu e(-(mu, nu)) phi_nu.

These are the matrices by which forms valued in the dual space S(L)^v
(theta functions, Eisenstein series) transform when written in the
coordinates phi_mu^v.  Forms valued in S(L) itself, such as the Poincare
and harmonic Maass series with index m in Q(mu) + Z, transform by the
complex conjugate matrices; use `WeilRep(D, sig, conjugate=True)` or
`.dual()` for those.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import DimensionMismatch, NotUnimodular, WeightParityMismatch
from .lattice import DiscriminantGroup, EvenLattice, discriminant_group

_TEST_TAU = complex(0.1234567, 1.0987654)


def e(x):
    """exp(2 pi i x) with x reduced mod 1 first (exact phases for rationals)."""
    if isinstance(x, Fraction):
        x = x % 1
        return cmath.exp(2j * math.pi * float(x))
    return cmath.exp(2j * math.pi * x)


def _principal_sqrt(c, d, tau):
    if c == 0:
        return complex(math.sqrt(d)) if d > 0 else 1j * math.sqrt(-d)
    return np.sqrt(c * tau + d)


@dataclass(frozen=True)
class MpElement:
    a: int
    b: int
    c: int
    d: int
    branch: int = 0            # 0: principal root of c*tau + d, 1: its negative
    word_: tuple | None = None

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise NotUnimodular(f"det != 1 for {self.matrix}")
        object.__setattr__(self, "branch", int(self.branch) & 1)

    @property
    def matrix(self):
        return ((self.a, self.b), (self.c, self.d))

    def phi(self, tau):
        s = _principal_sqrt(self.c, self.d, tau)
        return -s if self.branch else s

    def act(self, tau):
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def __mul__(self, other: "MpElement") -> "MpElement":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        t = _TEST_TAU
        val = self.phi(other.act(t)) * other.phi(t)
        ref = _principal_sqrt(c, d, t)
        branch = 0 if abs(val - ref) < abs(val + ref) else 1
        return MpElement(a, b, c, d, branch)

    def inverse(self) -> "MpElement":
        inv = MpElement(self.d, -self.b, -self.c, self.a, 0)
        if (self * inv).branch:
            inv = MpElement(self.d, -self.b, -self.c, self.a, 1)
        return inv

    def __pow__(self, n):
        base = self if n >= 0 else self.inverse()
        g = IDENTITY
        for _ in range(abs(n)):
            g = g * base
        return g

    @property
    def word(self):
        return mp_decompose(self.matrix, self.branch)

    def key(self):
        return (self.a, self.b, self.c, self.d, self.branch)


IDENTITY = MpElement(1, 0, 0, 1, 0)
S = MpElement(0, -1, 1, 0, 0)
T = MpElement(1, 1, 0, 1, 0)
T_INV = MpElement(1, -1, 0, 1, 0)
Z = S * S
Z2 = MpElement(1, 0, 0, 1, 1)

_GEN = {"S": S, "T": T, "Z2": Z2}


def word_product(word):
    g = IDENTITY
    for sym, n in word:
        if sym == "T":
            g = g * MpElement(1, n, 0, 1, 0)
        elif sym == "S":
            for _ in range(n):
                g = g * S
        elif sym == "Z2":
            for _ in range(n):
                g = g * Z2
        else:
            raise ValueError(sym)
    return g


@lru_cache(maxsize=65536)
def mp_decompose(gamma, branch=0):
    """Word in S, T^n and Z2 (run-length pairs) whose product is (gamma, branch).

    Nearest-floor continued fraction on the first column; the length is
    O(log max |entry|) in S-letters.
    """
    (a, b), (c, d) = gamma
    a, b, c, d = int(a), int(b), int(c), int(d)
    if a * d - b * c != 1:
        raise NotUnimodular(f"det != 1 for {gamma}")
    word = []
    while c != 0:
        n = a // c
        if n:
            word.append(("T", n))
        a, b = a - n * c, b - n * d
        word.append(("S", 1))
        a, b, c, d = c, d, -a, -b
    if a == 1:
        if b:
            word.append(("T", b))
    else:
        word.append(("S", 2))
        if b:
            word.append(("T", -b))
    # merge adjacent S letters
    merged = []
    for sym, n in word:
        if merged and merged[-1][0] == sym == "S":
            merged[-1] = ("S", merged[-1][1] + n)
        else:
            merged.append((sym, n))
    if word_product(merged).branch != (branch & 1):
        merged.append(("Z2", 1))
    return tuple(merged)


def mp(a, b, c, d, branch=0):
    return MpElement(int(a), int(b), int(c), int(d), branch)


# --------------------------------------------------------------------------
# Weil representation

class WeilRep:
    """Weil representation of Mp2(Z) on C[D] for a discriminant group D."""

    def __init__(self, D: DiscriminantGroup | EvenLattice, signature=None, conjugate=False):
        if isinstance(D, EvenLattice):
            signature = signature or D.signature
            D = discriminant_group(D)
        self.D = D
        self.signature = tuple(signature or D.lattice.signature)
        self.conjugate = bool(conjugate)
        self.dim = D.order
        self._cache = {}

    def dual(self):
        return WeilRep(self.D, self.signature, conjugate=not self.conjugate)

    @property
    def sig_mod8(self):
        p, q = self.signature
        return (p - q) % 8

    @property
    def even(self):
        return (self.signature[0] + self.signature[1]) % 2 == 0

    @cached_property
    def T(self):
        return self.T_power(1)

    def T_power(self, n):
        ph = [e(n * q) for q in self.D.q_values]
        m = np.diag(np.array(ph, dtype=complex))
        return m.conj() if self.conjugate else m

    @cached_property
    def S(self):
        p, q = self.signature
        sigma = e(Fraction(q - p, 8))
        n = self.dim
        m = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                m[j, i] = e(-self.D.b_values[i][j])
        m *= sigma / math.sqrt(n)
        return m.conj() if self.conjugate else m

    def matrix(self, g: MpElement):
        key = g.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.even:
            N = self.D.lattice.level
            rkey = ("mod", g.a % N, g.b % N, g.c % N, g.d % N)
            hit = self._cache.get(rkey)
            if hit is not None:
                self._cache[key] = hit
                return hit
        m = np.eye(self.dim, dtype=complex)
        for sym, n in mp_decompose(g.matrix, g.branch):
            if sym == "T":
                m = m @ self.T_power(n)
            elif sym == "S":
                m = m @ np.linalg.matrix_power(self.S, n)
            else:
                m = m @ np.linalg.matrix_power(self.S, 4 * n)
        if len(self._cache) < 200000:
            self._cache[key] = m
            if self.even:
                self._cache[rkey] = m
        return m

    def inverse_matrix(self, g: MpElement):
        return self.matrix(g).conj().T

    def check_weight(self, k):
        """(-1)^(2k) rho(Z^2) must be the identity for nonzero forms of weight k."""
        p, q = self.signature
        if (int(round(2 * k)) + q - p) % 2:
            raise WeightParityMismatch(
                f"weight {k} incompatible with signature {self.signature}: Z^2 acts by -1")

    def z_average(self, k):
        """(1/4) sum over A = {1, Z, Z^2, Z^3} of phi_alpha^(-2k) rho(alpha)^(-1).

        Applied to phi_mu this is the symmetrised vector phi~_mu.
        """
        twok = int(round(2 * k))
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        g = IDENTITY
        for _ in range(4):
            acc += g.phi(_TEST_TAU) ** (-twok) * self.inverse_matrix(g)
            g = g * Z
        return acc / 4

    def relation_residuals(self):
        I = np.eye(self.dim)
        S_, T_ = self.S, self.T
        p, q = self.signature
        st = S_ @ T_
        return {
            "(ST)^3 = S^2": float(np.abs(np.linalg.matrix_power(st, 3) - S_ @ S_).max()),
            "S^8 = 1": float(np.abs(np.linalg.matrix_power(S_, 8) - I).max()),
            "unitary S": float(np.abs(S_ @ S_.conj().T - I).max()),
            "unitary T": float(np.abs(T_ @ T_.conj().T - I).max()),
            "Z^2 = (-1)^(q-p)": float(np.abs(np.linalg.matrix_power(st, 6) - (-1) ** (q - p) * I).max()),
        }


def rho_generators(D, sig=None, conjugate=False):
    """(rho(T), rho(S)) as complex matrices, columns indexed by phi_mu."""
    wr = WeilRep(D, sig, conjugate=conjugate)
    return wr.T, wr.S


@dataclass(frozen=True, eq=False)
class SchwartzVector:
    D: DiscriminantGroup
    coords: np.ndarray
    dual: bool = False

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=complex)
        if c.shape != (self.D.order,):
            raise DimensionMismatch(f"expected {self.D.order} coordinates, got {c.shape}")
        object.__setattr__(self, "coords", c)

    @classmethod
    def basis(cls, D, mu, dual=False):
        c = np.zeros(D.order, dtype=complex)
        c[mu] = 1
        return cls(D, c, dual)

    def __add__(self, other):
        self._compatible(other)
        return SchwartzVector(self.D, self.coords + other.coords, self.dual)

    def __sub__(self, other):
        self._compatible(other)
        return SchwartzVector(self.D, self.coords - other.coords, self.dual)

    def __mul__(self, s):
        return SchwartzVector(self.D, self.coords * s, self.dual)

    __rmul__ = __mul__

    def _compatible(self, other):
        if other.D is not self.D or other.dual != self.dual:
            raise DimensionMismatch("vectors live in different spaces")

    def pairing(self, other):
        """<self, other>, conjugate-linear in the second slot."""
        self._compatible(other)
        return complex(np.vdot(other.coords, self.coords))

    def to_dual(self):
        """v -> <., v>: phi_mu maps to phi_mu^v, coordinates conjugate."""
        return SchwartzVector(self.D, self.coords.conj(), not self.dual)

    def evaluate(self, other):
        """Natural pairing of a dual vector with a vector."""
        if self.dual == other.dual:
            raise DimensionMismatch("evaluation needs one vector and one dual vector")
        return complex(np.dot(self.coords, other.coords))


def rho_apply(D, sig, g: MpElement, v: SchwartzVector, conjugate=False):
    """Act by g on v.  Dual vectors (coordinates on phi_mu^v) use the matrices
    of `rho_generators`; vectors of S(L) use their complex conjugates.
    `conjugate=True` swaps the two conventions."""
    if v.D.order != D.order:
        raise DimensionMismatch("vector dimension does not match the discriminant group")
    wr = _weilrep_cached(D, tuple(sig or D.lattice.signature), bool(conjugate) != (not v.dual))
    return SchwartzVector(D, wr.matrix(g) @ v.coords, v.dual)


@lru_cache(maxsize=None)
def _weilrep_cached(D, sig, conjugate):
    return WeilRep(D, sig, conjugate)


def weilrep_for(L: EvenLattice, conjugate=False):
    return _weilrep_cached(discriminant_group(L), L.signature, bool(conjugate))


def slash(f, k, g: MpElement, tau, wr: WeilRep):
    """phi(tau)^(-2k) rho(g)^(-1) f(g tau), for f valued in the space of `wr`."""
    wr.check_weight(k)
    twok = int(round(2 * k))
    val = np.asarray(f(g.act(tau)), dtype=complex)
    return g.phi(tau) ** (-twok) * (wr.inverse_matrix(g) @ val)


# --------------------------------------------------------------------------
# cosets of Gamma_infinity \ Gamma

def coset_rep(c, d):
    """The representative (a, b; c, d) with 0 <= a < c (c > 0), principal branch."""
    c, d = int(c), int(d)
    if c == 0:
        return IDENTITY if d == 1 else MpElement(-1, 0, 0, -1, 0)
    if c < 0:
        c, d = -c, -d
    a = pow(d, -1, c) if c > 1 else 0
    b = (a * d - 1) // c
    return MpElement(a, b, c, d, 0)


def coset_pairs_above_height(tau, w):
    """Arrays (c, d), c >= 0, gcd 1, one per +-class, with |c tau + d|^2 <= v / w."""
    u, v = tau.real, tau.imag
    lim = v / w
    cs, ds = [], []
    if v >= w:
        cs.append(0)
        ds.append(1)
    cmax = int(math.floor(math.sqrt(lim) / v + 1e-12)) if v > 0 else 0
    for c in range(1, cmax + 1):
        r2 = lim - (c * v) ** 2
        if r2 < 0:
            continue
        r = math.sqrt(r2)
        lo = math.ceil(-c * u - r)
        hi = math.floor(-c * u + r)
        for d in range(lo, hi + 1):
            if math.gcd(c, d) == 1 and abs(c * tau + d) ** 2 <= lim:
                cs.append(c)
                ds.append(d)
    return np.array(cs, dtype=np.int64), np.array(ds, dtype=np.int64)


def cosets_above_height(tau, w):
    """Coset representatives of ~Gamma_inf \\ ~Gamma with Im(gamma tau) >= w.

    One principal-branch representative per class {+-gamma}; the remaining
    lifts are accounted for by averaging over A = {1, Z, Z^2, Z^3}
    (`WeilRep.z_average`), which replaces the factor 1/4.
    """
    cs, ds = coset_pairs_above_height(tau, w)
    return [coset_rep(c, d) for c, d in zip(cs, ds)]


def reduce_to_fundamental_domain(tau, max_steps=1000):
    """Return (g, tau') with tau' = g tau in the standard fundamental domain."""
    g = IDENTITY
    for _ in range(max_steps):
        n = math.floor(tau.real + 0.5)
        if n:
            tau = tau - n
            g = MpElement(1, -n, 0, 1) * g
        if abs(tau) < 1 - 1e-15:
            tau = -1 / tau
            g = S * g
        else:
            break
    return g, tau

"""Evaluators for theta, Poincare and Eisenstein series.

Every handle evaluates at arrays of tau and carries the data the pairing
engine needs:

* `strip_terms()`       exact Fourier coefficients (n, VProfile, v_start) of
                        its principal part on v >= 1;
* `residual_many(taus)` the remainder f minus that principal part, pointwise;
* `residual_height`     above it the remainder is zero or described by
* `residual_model()`    a list of (n, VProfile);
* `coefficient_profile(n)` the n-th coefficient for handles whose expansion
                        is known for every n (thetas, q-series);
* `circles()`           discontinuity circles in the closure of F_1 and the band.

Values are numpy vectors in the coordinates of `phi_mu` (S(L)-valued handles)
or `phi^v_mu` (dual handles); pairing multiplies coordinates and sums.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    BadIndex,
    BadParameter,
    MissingMajorant,
    NonNegativeWeight,
    NotDefinite,
    NotIsotropic,
    NotPrimitive,
    OutsideConvergence,
    WeightParityMismatch,
)
from .lattice import (
    _frac_inverse,
    EvenLattice,
    MajorantPoint,
    build_lattice,
    definite_majorant,
    discriminant_group,
    enumerate_coset_vectors,
    representation_numbers,
)
from .maass import (
    FourierExpansion,
    VProfile,
    holomorphic_expansion,
    kummer_M1_array,
    regularized_upper_gamma,
)
from .quadrature import SQRT3_2, Circle, periodic_u_nodes
from .weilrep import MpElement, SchwartzVector, coset_pairs_above_height, weilrep_for

TWO_PI = 2.0 * math.pi
R0_ZERO = 1e-12


def _as_taus(taus):
    return np.atleast_1d(np.asarray(taus, dtype=complex))


def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**6)


class SeriesHandle:
    kind = "abstract"

    def __init__(self, lattice: EvenLattice | None, weight, dual: bool, dim: int, wr=None):
        self.lattice = lattice
        self.weight = _frac(weight)
        self.dual = bool(dual)
        self.dim = int(dim)
        self.wr = wr
        self.residual_height = 1.0

    # evaluation ---------------------------------------------------------
    def evaluate_many(self, taus):
        raise NotImplementedError

    def evaluate(self, tau):
        return self.evaluate_many([tau])[0]

    def vector(self, tau):
        D = discriminant_group(self.lattice) if self.lattice is not None else None
        return SchwartzVector(D, self.evaluate(tau), dual=self.dual)

    def error_estimate(self, tau):
        return 0.0

    # engine hooks -------------------------------------------------------
    def strip_terms(self):
        raise NotImplementedError(f"{self.kind} has no declared Fourier part")

    def residual_many(self, taus):
        return np.zeros((len(_as_taus(taus)), self.dim), dtype=complex)

    def residual_model(self):
        return []

    def coefficient_profile(self, n, v_min=1.0):
        raise NotImplementedError(f"{self.kind} has no closed coefficient formula")

    def coefficient_support(self):
        """Indices n at which coefficient_profile may be nonzero (None: unbounded)."""
        return None

    def circles(self):
        return []

    def v_breaks(self):
        return []

    @property
    def has_residual(self):
        return False

    def __repr__(self):
        return f"<{self.kind} k={self.weight} {'dual' if self.dual else 'S(L)'} dim={self.dim}>"


class ZeroHandle(SeriesHandle):
    kind = "zero"

    def __init__(self, dim=1, weight=0, dual=False, lattice=None):
        super().__init__(lattice, weight, dual, dim)

    def evaluate_many(self, taus):
        return np.zeros((len(_as_taus(taus)), self.dim), dtype=complex)

    def strip_terms(self):
        return []

    def coefficient_profile(self, n, v_min=1.0):
        return VProfile.zero((self.dim,))

    def coefficient_support(self):
        return []


# --------------------------------------------------------------------------
# thetas

def _quantize_bound(b):
    """Round an enumeration bound up to a coarse geometric grid so caches are reused."""
    if b <= 0.5:
        return Fraction(1, 2)
    j = math.ceil(4 * math.log2(b))
    return Fraction(2 ** (j / 4)).limit_denominator(1000) + Fraction(1, 1000)


class SiegelTheta(SeriesHandle):
    """v^(q/2) sum_{x in L'} e^(-2 pi v R°(x, z)) q^Q(x) phi^v(x); weight (p - q)/2."""

    kind = "siegel_theta"

    def __init__(self, L: EvenLattice, z: MajorantPoint | None = None, cutoff=40.0):
        p, q = L.signature
        if z is None:
            if q:
                raise MissingMajorant("indefinite lattice needs a majorant point")
            z = definite_majorant(L)
        D = discriminant_group(L)
        super().__init__(L, Fraction(p - q, 2), True, D.order, weilrep_for(L, conjugate=False))
        self.z = z
        self.q = q
        self.cutoff = float(cutoff)

    def _enum(self, mu, bound):
        if self.q == 0:
            return enumerate_coset_vectors(self.lattice, mu, bound=bound)
        return enumerate_coset_vectors(self.lattice, mu, z=self.z, bound=bound)

    def _vectors(self, bound):
        out = []
        for mu in range(self.dim):
            cv = self._enum(mu, bound)
            if len(cv):
                R = self.z.R0(cv.x) if self.q else np.zeros(len(cv))
                out.append((cv.Q, np.where(R < R0_ZERO, 0.0, R)))
            else:
                out.append((np.zeros(0), np.zeros(0)))
        return out

    def bound_for(self, v_min):
        return _quantize_bound(self.cutoff / (TWO_PI * v_min))

    def evaluate_many(self, taus):
        taus = _as_taus(taus)
        v = taus.imag
        vecs = self._vectors(self.bound_for(v.min()))
        out = np.zeros((len(taus), self.dim), dtype=complex)
        for mu, (Q, R) in enumerate(vecs):
            if not len(Q):
                continue
            for s in range(0, len(Q), 4096):
                Qs, Rs = Q[s:s + 4096], R[s:s + 4096]
                ph = np.exp(2j * math.pi * np.outer(taus, Qs) - TWO_PI * np.outer(v, Rs))
                out[:, mu] += ph.sum(axis=1)
        return out * (v ** (self.q / 2))[:, None]

    def error_estimate(self, tau):
        v = complex(tau).imag
        b = float(self.bound_for(v))
        return float(math.exp(-TWO_PI * v * b) * (1 + b) ** (self.lattice.rank / 2) * self.dim * 10)

    def coefficient_profile(self, n, v_min=1.0):
        """v^(q/2) [#{R° = 0} + sum e^(-2 pi R° v)] over x with Q(x) = n."""
        n = _frac(n)
        rcut = (self.cutoff + 5.0) / (TWO_PI * v_min)
        bound = _quantize_bound(float(n) + rcut) if float(n) + rcut > 0 else Fraction(-1)
        const = np.zeros(self.dim)
        E, X = [], []
        for mu in range(self.dim):
            cv = self._enum(mu, bound).select_Q(n)
            if not len(cv):
                continue
            R = self.z.R0(cv.x) if self.q else np.zeros(len(cv))
            const[mu] = np.count_nonzero(R < R0_ZERO)
            for r in R[R >= R0_ZERO]:
                e = np.zeros(self.dim)
                e[mu] = 1.0
                E.append(e)
                X.append(TWO_PI * r)
        beta = Fraction(self.q, 2)
        ex = (np.array(E).reshape(-1, self.dim), np.full(len(X), float(beta)), np.array(X)) if X else None
        return VProfile(power_terms=[(const, beta)], shape=(self.dim,), exp_terms=ex)

    def singular_count(self, n):
        """S_n(z) per coset: #{x : Q(x) = n, R°(x, z) = 0}."""
        return self.coefficient_profile(n).power_terms[0][0].real if self.coefficient_profile(n).power_terms \
            else np.zeros(self.dim)


def siegel_theta(L, z, tau, cutoff=40.0):
    h = SiegelTheta(L, z, cutoff)
    return h.vector(tau), h.error_estimate(tau)


class DefiniteTheta(SeriesHandle):
    """Theta series of a positive definite even lattice, sum_m mu(m) q^m."""

    kind = "definite_theta"

    def __init__(self, L: EvenLattice, m_max=None):
        if not L.is_definite or L.signature[1] != 0:
            raise NotDefinite("definite_theta needs a positive definite lattice")
        D = discriminant_group(L)
        super().__init__(L, Fraction(L.rank, 2), True, D.order, weilrep_for(L, conjugate=False))
        self._counts = {}
        self._mmax = 0
        if m_max is not None:
            self._extend(m_max)

    def _extend(self, m_max):
        m_max = int(math.ceil(m_max))
        if m_max <= self._mmax and self._counts:
            return
        counts = {}
        for mu in range(self.dim):
            for m, c in representation_numbers(self.lattice, m_max, mu).items():
                counts.setdefault(m, np.zeros(self.dim))[mu] += c
        self._counts = dict(sorted(counts.items()))
        self._mmax = m_max

    def mu(self, m):
        self._extend(max(1, math.ceil(float(m))))
        return self._counts.get(_frac(m), np.zeros(self.dim)).copy()

    def expansion(self, m_max):
        self._extend(m_max)
        return holomorphic_expansion(self.weight, True, {m: c for m, c in self._counts.items() if m <= m_max},
                                     self.dim, space="M")

    def _needed(self, v_min):
        # #{x : Q(x) = m} grows polynomially; demand e^(-2 pi v M) m^(rank/2) < 1e-18
        M = 2
        while math.exp(-TWO_PI * v_min * M) * (M + 1) ** (self.lattice.rank / 2) * 50 > 1e-18:
            M += 1
        return M

    def evaluate_many(self, taus):
        taus = _as_taus(taus)
        self._extend(self._needed(taus.imag.min()))
        ms = np.array([float(m) for m in self._counts])
        C = np.array(list(self._counts.values()))
        return np.exp(2j * math.pi * np.outer(taus, ms)) @ C

    def error_estimate(self, tau):
        return 1e-17

    def coefficient_profile(self, n, v_min=1.0):
        return VProfile.const(self.mu(n), (self.dim,))

    def coefficient_support(self):
        return None

    def strip_terms(self):
        raise NotImplementedError("theta series are used as the Fourier side of a pairing")


def definite_theta(L, m_max):
    return DefiniteTheta(L, m_max).expansion(m_max)


# --------------------------------------------------------------------------
# q-series forms (trivial or general representation)

class ExpansionHandle(SeriesHandle):
    """A form given by finitely many Fourier coefficient profiles."""

    kind = "expansion"

    def __init__(self, F: FourierExpansion, lattice=None, wr=None, label=""):
        super().__init__(lattice, F.weight, F.dual, F.dim, wr)
        self.F = F
        self.label = label
        self._idx = np.array([float(m) for m in F.coeffs])

    def evaluate_many(self, taus):
        taus = _as_taus(taus)
        v = taus.imag
        out = np.zeros((len(taus), self.dim), dtype=complex)
        for m, p in self.F.coeffs.items():
            out += p.evaluate(v) * np.exp(2j * math.pi * float(m) * taus)[:, None]
        return out

    def strip_terms(self):
        return [(m, p, 1.0) for m, p in self.F.coeffs.items()]

    def coefficient_profile(self, n, v_min=1.0):
        p = self.F.coeffs.get(_frac(n))
        return p if p is not None else VProfile.zero((self.dim,))

    def coefficient_support(self):
        return list(self.F.coeffs)


class ConjugateWeighted(SeriesHandle):
    """v^kappa conj(G(tau)) for a holomorphic expansion G; representation flipped."""

    kind = "conjugate_weighted"

    def __init__(self, G: FourierExpansion, kappa, lattice=None, wr=None):
        super().__init__(lattice, -_frac(kappa), not G.dual, G.dim, wr)
        if not G.is_holomorphic:
            raise BadParameter("conjugate weighting needs a holomorphic expansion")
        self.G = G
        self.kappa = _frac(kappa)

    def evaluate_many(self, taus):
        taus = _as_taus(taus)
        v = taus.imag
        g = np.zeros((len(taus), self.dim), dtype=complex)
        for m, p in self.G.coeffs.items():
            g += p.constant[None, :] * np.exp(2j * math.pi * float(m) * taus)[:, None]
        return np.conj(g) * (v ** float(self.kappa))[:, None]

    def coefficient_profile(self, n, v_min=1.0):
        # conj(a_m q^m) = conj(a_m) e^(-4 pi m v) e(-m tau)
        m = -_frac(n)
        p = self.G.coeffs.get(m)
        if p is None:
            return VProfile.zero((self.dim,))
        a = np.conj(p.constant)
        if m == 0:
            return VProfile(power_terms=[(a, self.kappa)], shape=(self.dim,))
        return VProfile(shape=(self.dim,), exp_terms=(a[None, :], [float(self.kappa)], [4 * math.pi * float(m)]))

    def coefficient_support(self):
        return [-m for m in self.G.coeffs]


def _sigma(n, k):
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


_BERNOULLI = {2: Fraction(1, 6), 4: Fraction(-1, 30), 6: Fraction(1, 42), 8: Fraction(-1, 30),
              10: Fraction(5, 66), 12: Fraction(-691, 2730), 14: Fraction(7, 6)}


def eisenstein_qseries(k, nmax):
    """Classical E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n as exact Fractions."""
    c = -Fraction(2 * k) / _BERNOULLI[k]
    return [Fraction(1)] + [c * _sigma(n, k - 1) for n in range(1, nmax + 1)]


def _mul(a, b, nmax):
    out = [0] * (nmax + 1)
    for i, x in enumerate(a[:nmax + 1]):
        if x:
            for j, y in enumerate(b[:nmax + 1 - i]):
                out[i + j] += x * y
    return out


def delta_qseries(nmax):
    """Delta = q prod (1 - q^n)^24, coefficients tau(n) for n = 0..nmax."""
    prod = [1] + [0] * nmax
    for n in range(1, nmax + 1):
        for _ in range(24):
            nxt = prod[:]
            for i in range(n, nmax + 1):
                nxt[i] -= prod[i - n]
            prod = nxt
    return [0] + prod[:nmax]


def j_qseries(nmax):
    """q-expansion of j - 744 as {n: c(n)}, n from -1 to nmax (exact integers)."""
    N = nmax + 2
    e4 = [int(x) for x in eisenstein_qseries(4, N)]
    e4c = _mul(_mul(e4, e4, N), e4, N)
    # Delta / q = prod (1 - q^n)^24; invert the power series
    d = delta_qseries(N + 1)[1:]
    inv = [0] * (N + 1)
    inv[0] = 1
    for n in range(1, N + 1):
        inv[n] = -sum(d[i] * inv[n - i] for i in range(1, n + 1))
    jq = _mul(e4c, inv, N)               # q * j
    out = {n - 1: jq[n] for n in range(0, N + 1)}
    out[0] -= 744
    return {n: c for n, c in out.items() if n <= nmax}


def faber_j(m, nmax=60):
    """j_m = q^-m + O(q), the unique weakly holomorphic weight-0 form with zero constant term.

    Built as a monic polynomial in j_1 by cancelling principal parts; exact integers.
    """
    if m < 0:
        return {}
    if m == 0:
        return {0: 1}
    N = nmax + m + 2
    j1 = j_qseries(N)

    def mul(a, b):
        out = {}
        for i, x in a.items():
            for k, y in b.items():
                if i + k <= N:
                    out[i + k] = out.get(i + k, 0) + x * y
        return out

    powers = [{0: 1}, j1]
    for _ in range(2, m + 1):
        powers.append(mul(powers[-1], j1))
    f = dict(powers[m])
    for k in range(m - 1, -1, -1):
        c = f.get(-k, 0)
        if c:
            base = faber_j(k, nmax + m)
            for i, x in base.items():
                f[i] = f.get(i, 0) - c * x
    if m >= 1:
        f.pop(0, None) if f.get(0, 0) == 0 else None
    return {n: c for n, c in sorted(f.items()) if c != 0 and n <= nmax}


def faber_expansion(m, nmax=60, dual=False):
    co = faber_j(m, nmax)
    return holomorphic_expansion(0, dual, {n: [c] for n, c in co.items()} or {0: [0]}, 1, space="M!")


def faber_handle(m, lattice=None, nmax=None):
    """Handle for j_m (F_m of a unimodular lattice of signature (2, 2))."""
    if nmax is None:
        nmax = 40 + 8 * max(m, 1)
    h = ExpansionHandle(faber_expansion(m, nmax), lattice, label=f"j_{m}")
    h.kind = "faber"
    return h


# --------------------------------------------------------------------------
# coset sums

@lru_cache(maxsize=None)
def _inverse_table(cmax):
    """inv[c, r] = r^-1 mod c (0 when not invertible, and for c = 1)."""
    t = np.zeros((cmax + 1, cmax + 1), dtype=np.int64)
    for c in range(2, cmax + 1):
        for r in range(1, c):
            if math.gcd(r, c) == 1:
                t[c, r] = pow(r, -1, c)
    return t


class _CosetAccumulator:
    """Sums phi_gamma(tau)^(-2k) rho(gamma)^(-1) w0 h_gamma over cosets (c, d), c >= 1.

    For even rank rho(gamma) only depends on gamma mod the level, so scalar
    parts are accumulated per residue class and multiplied by the cached
    vectors rho(gamma)^(-1) w0 at the end.
    """

    def __init__(self, wr, k, w0):
        self.wr = wr
        self.twok = int(round(2 * k))
        self.w0 = np.asarray(w0, dtype=complex)
        self.N = wr.D.lattice.level if wr.even else None
        self._vec = {}

    def vec_for(self, a, b, c, d):
        g = MpElement(int(a), int(b), int(c), int(d), 0)
        if self.N is not None:
            N = self.N
            key = (a % N, b % N, c % N, d % N)
        else:
            key = g.key()
        v = self._vec.get(key)
        if v is None:
            v = self.wr.inverse_matrix(g) @ self.w0
            self._vec[key] = v
        return v

    def accumulate(self, tau_idx, ntau, tau, c, d, seed):
        """tau_idx, tau, c, d aligned arrays; seed(y, x) scalar values of h at gamma tau."""
        if len(c) == 0:
            return np.zeros((ntau, len(self.w0)), dtype=complex)
        inv = _inverse_table(int(c.max()))
        a = inv[c, d % c]
        b = (a * d - 1) // c
        j = c * tau + d
        gt = a / c - 1.0 / (c * j)
        fac = np.sqrt(j) ** (-self.twok)
        s = fac * seed(gt.imag, gt.real)
        out = np.zeros((ntau, len(self.w0)), dtype=complex)
        if self.N is not None:
            N = self.N
            code = ((a % N) * N + b % N) * N * N + (c % N) * N + d % N
            nc = N ** 4
            if ntau * nc <= 50_000_000:
                present = np.flatnonzero(np.bincount(code, minlength=nc))
                lookup = np.full(nc, -1, dtype=np.int64)
                lookup[present] = np.arange(len(present))
                inverse = lookup[code]
                first = np.zeros(len(present), dtype=np.int64)
                first[inverse[::-1]] = np.arange(len(code))[::-1]
            else:
                _, first, inverse = np.unique(code, return_index=True, return_inverse=True)
            nk = len(first)
            flat = tau_idx * nk + inverse
            re = np.bincount(flat, weights=s.real, minlength=ntau * nk).reshape(ntau, nk)
            im = np.bincount(flat, weights=s.imag, minlength=ntau * nk).reshape(ntau, nk)
            V = np.array([self.vec_for(a[f], b[f], c[f], d[f]) for f in first])
            out += (re + 1j * im) @ V
        else:
            for t in range(len(c)):
                out[tau_idx[t]] += s[t] * self.vec_for(a[t], b[t], c[t], d[t])
        return out


def box_cosets(tau, C, X):
    """Coprime (c, d) with 1 <= c <= C and |c u + d| <= X."""
    u = tau.real
    cvals = np.arange(1, C + 1)
    lo = np.ceil(-cvals * u - X).astype(np.int64)
    hi = np.floor(-cvals * u + X).astype(np.int64)
    n = np.maximum(hi - lo + 1, 0)
    c = np.repeat(cvals, n)
    off = np.repeat(np.cumsum(n) - n, n)
    d = np.repeat(lo, n) + (np.arange(n.sum()) - off)
    keep = np.gcd(c, d) == 1
    return c[keep], d[keep]


def _w0(wr, k, mu):
    v = np.zeros(wr.dim, dtype=complex)
    v[mu] = 1.0
    return wr.z_average(k) @ v


def _index_ok(D, m, mu, dual):
    # S(L)-valued: m in Q(mu) + Z; dual: m in -Q(mu) + Z
    return (Fraction(m) - D.q_values[mu]) % 1 == 0 if not dual else (Fraction(m) + D.q_values[mu]) % 1 == 0


class TruncatedPoincare(SeriesHandle):
    """P_{m,w,mu} = (1/4) sum (sigma_w q^-m phi_mu)|_k g over ~Gamma_inf \\ ~Gamma (S(L)-valued)."""

    kind = "truncated_poincare"

    def __init__(self, L: EvenLattice, k, m, mu, w):
        if not w > 0:
            raise BadParameter("w must be positive")
        D = discriminant_group(L)
        wr = weilrep_for(L, conjugate=True)
        super().__init__(L, k, False, D.order, wr)
        wr.check_weight(k)
        self.m = _frac(m)
        self.mu = int(mu)
        self.w = float(w)
        self.active = _index_ok(D, self.m, self.mu, False)
        self.w0 = _w0(wr, k, self.mu) if self.active else np.zeros(D.order, dtype=complex)
        self._acc = _CosetAccumulator(wr, k, self.w0)
        self.residual_height = max(1.0, 1.0 / self.w)

    def _seed(self, y, x):
        m = float(self.m)
        return np.exp(-2j * math.pi * m * (x + 1j * y)) * (y >= self.w)

    def evaluate_many(self, taus, include_identity=True):
        taus = _as_taus(taus)
        out = np.zeros((len(taus), self.dim), dtype=complex)
        if not self.active:
            return out
        ti, cs, ds, ts = [], [], [], []
        for i, t in enumerate(taus):
            c, d = coset_pairs_above_height(t, self.w)
            if include_identity and t.imag >= self.w:
                out[i] += self.w0 * np.exp(-2j * math.pi * float(self.m) * t)
            keep = c > 0
            c, d = c[keep], d[keep]
            ti.append(np.full(len(c), i))
            cs.append(c)
            ds.append(d)
            ts.append(np.full(len(c), t))
        if cs:
            c = np.concatenate(cs)
            if len(c):
                out += self._acc.accumulate(np.concatenate(ti), len(taus), np.concatenate(ts), c,
                                            np.concatenate(ds), self._seed)
        return out

    def residual_many(self, taus):
        return self.evaluate_many(taus, include_identity=False)

    @property
    def has_residual(self):
        return self.active and self.w < 1.0

    def strip_terms(self):
        if not self.active:
            return []
        return [(-self.m, VProfile.const(self.w0, (self.dim,)), max(1.0, self.w))]

    def circles(self):
        """Circles |c tau + d|^2 = v/w meeting {v >= sqrt(3)/2}."""
        out = []
        if not self.active:
            return out
        cmax = int(math.floor(math.sqrt(1.0 / (self.w * SQRT3_2 * 0.999))))
        for c in range(1, cmax + 1):
            r = 1.0 / (2 * c * c * self.w)
            for d in range(-c - 2 * c, c + 2 * c + 1):
                if math.gcd(c, d) == 1 and abs(-d / c) <= 0.5 + r:
                    out.append(Circle(-d / c, r, r))
        return out

    def v_breaks(self):
        return [self.w]


def truncated_poincare(L, k, m, mu, w, tau):
    h = TruncatedPoincare(L, k, m, mu, w)
    return h.vector(tau)


class HejhalPoincare(SeriesHandle):
    """Harmonic Maass-Poincare series F_{m,mu} of weight k < 0 (S(L)-valued).

    Seed M(4 pi m v) e(-m u) with the normalisation giving F = q^-m phi~_mu + O(1):
    (4 pi m v)^(1-k) M(1, 2-k, 4 pi m v) e^(-2 pi m v) / Gamma(2-k), which equals
    e^(2 pi m v) P(1-k, 4 pi m v).  Cosets are truncated to 1 <= c <= C,
    |c u + d| <= C max(1, v).
    """

    kind = "hejhal_poincare"

    def __init__(self, L: EvenLattice, k, m, mu, C=100, v_res=3.0, fit_heights=(6.0, 8.0, 10.0), n_u=32):
        k = _frac(k)
        if k >= 0:
            raise NonNegativeWeight("Hejhal-Poincare series are summed only for k < 0")
        m = _frac(m)
        if m <= 0:
            raise BadIndex("m must be positive")
        D = discriminant_group(L)
        wr = weilrep_for(L, conjugate=True)
        super().__init__(L, k, False, D.order, wr)
        wr.check_weight(k)
        self.m, self.mu, self.C = m, int(mu), int(C)
        self.active = _index_ok(D, m, self.mu, False)
        self.w0 = _w0(wr, k, self.mu) if self.active else np.zeros(D.order, dtype=complex)
        self._acc = _CosetAccumulator(wr, k, self.w0)
        self.residual_height = float(v_res)
        self.fit_heights = tuple(fit_heights)
        self.n_u = n_u
        self._cplus0 = None
        self._s = float(1 - k)

    def _seed(self, y, x):
        m, k = float(self.m), float(self.weight)
        X_ = 4 * math.pi * m * y
        g = math.lgamma(2 - k)
        mag = np.exp((1 - k) * np.log(X_) - g - 0.5 * X_) * kummer_M1_array(2 - k, X_)
        return mag * np.exp(-2j * math.pi * m * x)

    def _identity(self, taus):
        m = float(self.m)
        v = taus.imag
        return np.exp(-2j * math.pi * m * taus), regularized_upper_gamma(self._s, 4 * math.pi * m * v)

    def _nonidentity(self, taus):
        out = np.zeros((len(taus), self.dim), dtype=complex)
        budget = 2_000_000
        i = 0
        while i < len(taus):
            ti, cs, ds, ts = [], [], [], []
            used = 0
            j = i
            while j < len(taus) and used < budget:
                t = taus[j]
                c, d = box_cosets(t, self.C, self.C * max(1.0, t.imag))
                ti.append(np.full(len(c), j - i))
                cs.append(c)
                ds.append(d)
                ts.append(np.full(len(c), t))
                used += len(c)
                j += 1
            out[i:j] += self._acc.accumulate(np.concatenate(ti), j - i, np.concatenate(ts),
                                             np.concatenate(cs), np.concatenate(ds), self._seed)
            i = j
        return out

    def evaluate_many(self, taus):
        taus = _as_taus(taus)
        if not self.active:
            return np.zeros((len(taus), self.dim), dtype=complex)
        qm, Q = self._identity(taus)
        P = 1.0 - Q
        return (qm * P)[:, None] * self.w0[None, :] + self._nonidentity(taus)

    def residual_many(self, taus):
        taus = _as_taus(taus)
        if not self.active:
            return np.zeros((len(taus), self.dim), dtype=complex)
        qm, Q = self._identity(taus)
        return -(qm * Q)[:, None] * self.w0[None, :] + self._nonidentity(taus)

    @property
    def has_residual(self):
        return self.active

    def tail_bound(self, tau):
        """Bound for the omitted cosets by integral comparison; ~ K C^k."""
        m, k, C = float(self.m), float(self.weight), self.C
        v = complex(tau).imag
        X = C * max(1.0, v)
        A = 1.01 * (4 * math.pi * m * v) ** (1 - k) / math.gamma(2 - k)
        s = (2 - k) / 2
        lin = math.sqrt(math.pi) * math.gamma(s - 0.5) / math.gamma(s)
        # c > C: sum_c (c v)^(k-2) + (c v)^(k-1) lin
        big = (C * v) ** (k - 2) * (C / (1 - k) + 1) / C ** 0 + v ** (k - 1) * lin * C ** k / (-k)
        small = 2 * C * (X - 1) ** (k - 1) / (1 - k)
        return A * (big + small)

    def error_estimate(self, tau):
        return self.tail_bound(tau)

    def constant_term(self):
        """c+(0) from u-averages of the residual at the fit heights.

        Fits constant + b e^(-2 pi v); returns (c, fit spread).
        """
        if self._cplus0 is None:
            us = periodic_u_nodes(self.n_u)
            rows = []
            for v in self.fit_heights:
                r = self.residual_many(us + 1j * v).mean(axis=0)
                rows.append(r)
            rows = np.array(rows)
            A = np.column_stack([np.ones(len(self.fit_heights)), np.exp(-TWO_PI * np.array(self.fit_heights))])
            coef, *_ = np.linalg.lstsq(A, rows, rcond=None)
            fit = A @ coef
            spread = float(np.abs(fit - rows).max()) + float(np.abs(rows - rows.mean(axis=0)).max())
            self._cplus0 = (coef[0], spread)
        return self._cplus0

    def strip_terms(self):
        if not self.active:
            return []
        return [(-self.m, VProfile.const(self.w0, (self.dim,)), 1.0)]

    def residual_model(self):
        if not self.active:
            return []
        c0, _ = self.constant_term()
        b = -self.w0 / math.gamma(self._s)
        return [(-self.m, VProfile(gamma_terms=[(b, self._s, 4 * math.pi * float(self.m))], shape=(self.dim,))),
                (Fraction(0), VProfile.const(c0, (self.dim,)))]


def hejhal_poincare(L, k, m, mu, tau, C=100):
    h = HejhalPoincare(L, k, m, mu, C)
    taus = _as_taus([tau])
    return SchwartzVector(discriminant_group(L), h.evaluate_many(taus)[0], dual=False), h.tail_bound(tau)


class Eisenstein(SeriesHandle):
    """E_k(tau, s) = sum over ~Gamma_inf \\ ~Gamma of (v^((s+1-k)/2) phi^v_0)|_k g (dual-valued).

    Cosets are truncated to the box 1 <= c <= C, |c u + d| <= X max(1, v)
    with X = d_factor C; `frozen` fixes one coset list for every tau (finite
    differences).  For fixed c the full d-sum of the holomorphic seed decays
    like e^(-2 pi c v), so the d-range is the part that needs to be long.
    """

    kind = "eisenstein"

    def __init__(self, L, k, s, C=100, frozen=None, d_factor=20):
        if isinstance(L, EvenLattice):
            D = discriminant_group(L)
        else:
            D, L = L, L.lattice
        s = complex(s)
        if not s.real > 1:
            raise OutsideConvergence("direct summation needs Re(s) > 1")
        wr = weilrep_for(L, conjugate=False)
        super().__init__(L, k, True, D.order, wr)
        wr.check_weight(k)
        self.s = s
        self.C = int(C)
        self.X = float(d_factor) * self.C
        self.d_factor = d_factor
        self.alpha = (s + 1 - float(k)) / 2
        self.w0 = _w0(wr, k, 0)
        if np.abs(self.w0).max() < 1e-14:
            raise WeightParityMismatch("phi_0 is killed by the Z-average at this weight")
        self._acc = _CosetAccumulator(wr, k, self.w0)
        self.frozen = frozen

    def _seed(self, y, x):
        return np.exp(self.alpha * np.log(y))

    def cosets_at(self, tau, margin=0.0):
        return box_cosets(tau, self.C, self.X * max(1.0, tau.imag) + margin)

    def freeze(self, tau0, margin=1.0):
        c, d = self.cosets_at(complex(tau0), margin)
        return Eisenstein(self.lattice, self.weight, self.s, self.C, frozen=(c, d), d_factor=self.d_factor)

    def with_s(self, s):
        return Eisenstein(self.lattice, self.weight, s, self.C, frozen=self.frozen, d_factor=self.d_factor)

    def with_weight(self, k, s):
        return Eisenstein(self.lattice, k, s, self.C, frozen=self.frozen, d_factor=self.d_factor)

    def evaluate_many(self, taus):
        taus = _as_taus(taus)
        v = taus.imag
        out = (np.exp(self.alpha * np.log(v)))[:, None] * self.w0[None, :]
        ti, cs, ds, ts = [], [], [], []
        for i, t in enumerate(taus):
            c, d = self.frozen if self.frozen is not None else self.cosets_at(t)
            ti.append(np.full(len(c), i))
            cs.append(c)
            ds.append(d)
            ts.append(np.full(len(c), t))
        out += self._acc.accumulate(np.concatenate(ti), len(taus), np.concatenate(ts),
                                    np.concatenate(cs), np.concatenate(ds), self._seed)
        return out

    def tail_bound(self, tau):
        """Integral comparison for |phi^-2k v^alpha| = v^Re(alpha) |c tau + d|^-(Re s + 1) off the box."""
        v = complex(tau).imag
        sig = self.s.real + 1
        X = self.X * max(1.0, v)
        C = self.C
        lin = math.sqrt(math.pi) * math.gamma((sig - 1) / 2) / math.gamma(sig / 2)
        # c > C: full d-sums, each <= (c v)^-sig + lin (c v)^(1 - sig)
        big = (C * v) ** (-sig) * C / (sig - 1) + lin * v ** (1 - sig) * C ** (2 - sig) / (sig - 2)
        # c <= C: |x| > X tails
        small = 2 * C * (X - 1) ** (1 - sig) / (sig - 1)
        return float(v ** self.alpha.real * (big + small))

    def error_estimate(self, tau):
        return self.tail_bound(tau)


def eisenstein(D, k, s, tau, C=100):
    h = Eisenstein(D, k, s, C)
    return h.vector(tau), h.tail_bound(tau)


# --------------------------------------------------------------------------
# contraction to the boundary lattice

def _row_reduce(g):
    """Integer column operations g V = (N, 0, ..., 0) with V unimodular, N >= 0."""
    g = [int(x) for x in g]
    r = len(g)
    V = [[int(i == j) for j in range(r)] for i in range(r)]

    def colop(dst, src, f):
        g[dst] += f * g[src]
        for row in V:
            row[dst] += f * row[src]

    while sum(1 for x in g if x) > 1:
        p = min((abs(x), i) for i, x in enumerate(g) if x)[1]
        for j in range(r):
            if j != p and g[j]:
                colop(j, p, -(g[j] // g[p]))
    p = next((i for i, x in enumerate(g) if x), 0)
    if p:
        g[0], g[p] = g[p], g[0]
        for row in V:
            row[0], row[p] = row[p], row[0]
    if g[0] < 0:
        g[0] = -g[0]
        for row in V:
            row[0] = -row[0]
    return g[0], V


class Contraction:
    """Restriction of L'/L to the boundary lattice K = (L cap n^perp) / Z n."""

    def __init__(self, L: EvenLattice, n):
        n = [int(t) for t in n]
        G = [list(r) for r in L.gram]
        r = L.rank
        if sum(n[i] * G[i][j] * n[j] for i in range(r) for j in range(r)) != 0:
            raise NotIsotropic("n is not isotropic")
        if math.gcd(*[abs(t) for t in n]) != 1:
            raise NotPrimitive("n is not primitive")
        gn = [sum(G[i][j] * n[j] for j in range(r)) for i in range(r)]
        N, V = _row_reduce(gn)                      # gn . V[:,0] = N, V[:,1:] spans L cap n^perp
        Vi = _frac_inverse(V)
        cn = [sum(Vi[i][j] * n[j] for j in range(r)) for i in range(r)]
        c = [int(x) for x in cn[1:]]
        _, W = _row_reduce(c)
        Winv_T = [list(col) for col in zip(*_frac_inverse(W))]
        kern = [[V[i][j + 1] for j in range(r - 1)] for i in range(r)]
        B = [[sum(kern[i][t] * Winv_T[t][j] for t in range(r - 1)) for j in range(r - 1)] for i in range(r)]
        Kb = [[int(B[i][j]) for j in range(1, r - 1)] for i in range(r)]
        kg = [[sum(Kb[a][i] * G[a][b] * Kb[b][j] for a in range(r) for b in range(r))
               for j in range(r - 2)] for i in range(r - 2)]
        self.L, self.n, self.N = L, n, N
        self.K = build_lattice(kg, name=f"{L.name}/n") if r > 2 else None
        full = [[V[i][0]] + [int(B[i][j]) for j in range(r - 1)] for i in range(r)]
        Fi = _frac_inverse(full)
        D = discriminant_group(L)
        DK = discriminant_group(self.K) if self.K is not None else None
        self.image = []
        for mu in range(D.order):
            x = D.reps[mu]
            t = sum(x[i] * gn[i] for i in range(r))
            if (t / N).denominator != 1:
                self.image.append(None)
                continue
            y = [x[i] - (t / N) * V[i][0] for i in range(r)]
            co = [sum(Fi[i][j] * y[j] for j in range(r)) for i in range(r)]
            assert co[0] == 0
            self.image.append(DK.index_of(co[2:]) if DK is not None else 0)
        self.target_dim = DK.order if DK is not None else 1

    def apply(self, phi):
        vals = phi.coords if isinstance(phi, SchwartzVector) else np.asarray(phi, dtype=complex)
        out = np.zeros(self.target_dim, dtype=complex)
        for mu, nu in enumerate(self.image):
            if nu is not None:
                out[nu] += vals[mu]
        if isinstance(phi, SchwartzVector):
            DK = discriminant_group(self.K) if self.K is not None else None
            return SchwartzVector(DK, out, dual=phi.dual)
        return out


def contraction(L: EvenLattice, n, phi=None):
    """Contract phi along the primitive isotropic vector n; returns (Contraction, c(phi))."""
    c = Contraction(L, n)
    return c, (c.apply(phi) if phi is not None else None)

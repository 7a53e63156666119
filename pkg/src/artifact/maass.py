"""Special functions and the symbolic q-series data model.

A `VProfile` is the v-dependence of one Fourier coefficient c(m, v):

    sum_i a_i v^beta_i + l log v + sum_j b_j Gamma(s_j, x_j v)
        + sum_k e_k v^beta_k exp(-x_k v) + c + remainder(v)

with every coefficient allowed to be a vector (one entry per coset).  The
regularized integrals of the lift engine split into closed-form tails of the
power/log/Gamma part and convergent numerics for everything else.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import (
    BadParameter,
    DependentBasis,
    NonPositiveArgument,
    NonPositiveX,
    RepMismatch,
    UnboundedPrincipalPart,
)

EULER_GAMMA = 0.57721566490153286061


# --------------------------------------------------------------------------
# special functions

def _e1_series(r):
    s, term, k = 0.0, 1.0, 1
    while True:
        term *= -r / k
        add = -term / k
        s += add
        if abs(add) < 1e-17 * max(1.0, abs(s)):
            break
        k += 1
    return -EULER_GAMMA - math.log(r) + s


def _e1_cf(r):
    # modified Lentz on E1(r) = e^-r / (r + 1 - 1/(r + 3 - 4/(r + 5 - ...)))
    tiny = 1e-300
    b = r + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-r)


def beta_fn(r):
    """beta(r) = int_r^oo e^-t dt / t, the exponential integral E1."""
    if np.ndim(r):
        return beta_array(np.asarray(r, dtype=float))
    r = float(r)
    if not r > 0:
        raise NonPositiveArgument(f"beta needs r > 0, got {r}")
    return _e1_series(r) if r < 1.0 else _e1_cf(r)


def beta_array(r):
    """Vectorised E1 (series below 1, continued fraction above)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise NonPositiveArgument("beta needs r > 0")
    out = np.empty_like(r)
    small = r < 1.0
    if small.any():
        x = r[small]
        s = np.zeros_like(x)
        term = np.ones_like(x)
        for k in range(1, 40):
            term = term * (-x / k)
            s -= term / k
        out[small] = -EULER_GAMMA - np.log(x) + s
    big = ~small
    if big.any():
        x = r[big]
        tiny = 1e-300
        b = x + 1.0
        c = np.full_like(x, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        # 1 <= r: convergence within ~ 60 + 10/r steps at 1e-16
        for i in range(1, 120):
            a = -float(i * i)
            b = b + 2.0
            d = 1.0 / (a * d + b)
            c = b + a / c
            h *= c * d
        out[big] = h * np.exp(-x)
    return out


def _lower_gamma_series(s, x):
    # gamma(s, x) = x^s e^-x sum_n x^n / (s (s+1) ... (s+n))
    term = 1.0 / s
    total = term
    n = 1
    while True:
        term *= x / (s + n)
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
        n += 1
    return total * math.exp(-x + s * math.log(x))


def _upper_gamma_cf(s, x):
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        a = -i * (i - s)
        b += 2.0
        d = a * d + b
        d = tiny if abs(d) < tiny else d
        c = b + a / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + s * math.log(x)) * h


def incomplete_gamma(s, x):
    """Upper incomplete Gamma function Gamma(s, x) for real s and x > 0."""
    s, x = float(s), float(x)
    if not x > 0:
        raise NonPositiveX(f"incomplete gamma needs x > 0, got {x}")
    if s <= 0:
        # Gamma(s, x) = (Gamma(s+1, x) - x^s e^-x) / s, and E1 at s = 0
        if s == 0:
            return beta_fn(x)
        if x >= 1.0:
            return _upper_gamma_cf(s, x)
        return (incomplete_gamma(s + 1, x) - math.exp(s * math.log(x) - x)) / s
    if x < s + 1.0:
        return math.gamma(s) - _lower_gamma_series(s, x)
    return _upper_gamma_cf(s, x)


def regularized_upper_gamma(s, x):
    """Q(s, x) = Gamma(s, x) / Gamma(s) for s > 0, vectorised over x.

    The lower series is used below s + 1 and the continued fraction above,
    so that tiny values of Q are computed without cancellation.
    """
    return _regularized_gamma_pair(s, x)[1]


def regularized_lower_gamma(s, x):
    """P(s, x) = 1 - Q(s, x), accurate also where P is tiny."""
    return _regularized_gamma_pair(s, x)[0]


def _regularized_gamma_pair(s, x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    low = np.empty_like(x)
    lg = math.lgamma(s)
    small = x < s + 1.0
    if small.any():
        xs = x[small]
        term = np.full_like(xs, 1.0 / s)
        total = term.copy()
        for n in range(1, 400):
            term = term * xs / (s + n)
            total += term
            if np.all(np.abs(term) < 1e-17 * np.abs(total)):
                break
        low[small] = total * np.exp(-xs + s * np.log(np.where(xs > 0, xs, 1.0)) - lg) * (xs > 0)
        out[small] = 1.0 - low[small]
    big = ~small
    if big.any():
        xb = x[big]
        tiny = 1e-300
        b = xb + 1.0 - s
        c = np.full_like(xb, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 300):
            a = -i * (i - s)
            b = b + 2.0
            d = a * d + b
            d = np.where(np.abs(d) < tiny, tiny, d)
            c = b + a / c
            c = np.where(np.abs(c) < tiny, tiny, c)
            d = 1.0 / d
            delta = d * c
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        out[big] = np.exp(-xb + s * np.log(xb) - lg) * h
        low[big] = 1.0 - out[big]
    return low, out


def kummer_M1(b, x):
    """M(1, b, x) = sum_n x^n / (b)_n by its power series."""
    b = float(b)
    if not b > 1:
        raise BadParameter(f"kummer_M1 needs b > 1, got {b}")
    if np.ndim(x):
        return kummer_M1_array(b, np.asarray(x, dtype=float))
    x = float(x)
    term, total, n = 1.0, 1.0, 0
    while True:
        term *= x / (b + n)
        total += term
        n += 1
        if abs(term) < 1e-16 * abs(total) and n > x - b:
            break
    return total


def _kummer_block(b, x):
    term = np.ones_like(x)
    total = np.ones_like(x)
    top = float(np.max(np.abs(x), initial=0.0))
    for n in range(int(3 * top) + 80):
        term = term * x / (b + n)
        total += term
        if n > top - b and np.all(np.abs(term) <= 1e-16 * np.abs(total)):
            break
    return total


def kummer_M1_array(b, x):
    # bucket by size so the many tiny arguments stop after a few terms
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    ax = np.abs(x)
    lo = 0.0
    for hi in (0.05, 1.0, 8.0, np.inf):
        sel = (ax >= lo) & (ax < hi)
        if sel.any():
            out[sel] = _kummer_block(b, x[sel])
        lo = hi
    return out


# --------------------------------------------------------------------------
# v-profiles

def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**6)


def _arr(x, shape=()):
    a = np.asarray(x, dtype=complex)
    return np.broadcast_to(a, shape).copy() if shape else a.reshape(a.shape)


@dataclass
class VProfile:
    """Finite symbolic function of v with an optional decaying remainder.

    remainder: callable v -> array, with |remainder(v)| <= K e^(-C v).
    """

    power_terms: list = field(default_factory=list)       # [(a, beta)]
    log_term: object = 0.0
    gamma_terms: list = field(default_factory=list)       # [(b, s, x)]
    constant: object = 0.0
    remainder: Callable | None = None
    remainder_decay: float = 0.0
    shape: tuple = ()
    exp_terms: tuple | None = None                        # (E[K, *shape], beta[K], x[K])

    def __post_init__(self):
        sh = self.shape
        self.power_terms = [(_arr(a, sh), _frac(beta)) for a, beta in self.power_terms]
        merged = {}
        for a, beta in self.power_terms:
            merged[beta] = merged.get(beta, 0) + a
        self.constant = _arr(self.constant, sh) + merged.pop(Fraction(0), 0)
        self.power_terms = [(a, beta) for beta, a in sorted(merged.items())]
        self.log_term = _arr(self.log_term, sh)
        self.gamma_terms = [(_arr(b, sh), float(s), float(x)) for b, s, x in self.gamma_terms]
        if self.remainder is not None and not self.remainder_decay > 0:
            raise BadParameter("a remainder needs a positive decay constant")
        if self.exp_terms is not None:
            E, B, X = self.exp_terms
            E = np.asarray(E, dtype=complex).reshape((-1,) + sh)
            B = np.asarray(B, dtype=float).reshape(-1)
            X = np.asarray(X, dtype=float).reshape(-1)
            if np.any(X <= 0):
                raise BadParameter("exponential terms need positive rates; fold x = 0 into powers")
            self.exp_terms = (E, B, X) if len(X) else None

    @property
    def n_exp(self):
        return 0 if self.exp_terms is None else len(self.exp_terms[2])

    def exp_split(self, x_cut):
        """(slow, fast) copies of the exponential part, split at rate x_cut."""
        if self.exp_terms is None:
            return None, None
        E, B, X = self.exp_terms
        lo = X < x_cut
        mk = lambda m: VProfile(shape=self.shape, exp_terms=(E[m], B[m], X[m])) if m.any() else None
        return mk(lo), mk(~lo)

    @classmethod
    def const(cls, c, shape=None):
        c = np.asarray(c, dtype=complex)
        return cls(constant=c, shape=c.shape if shape is None else shape)

    @classmethod
    def zero(cls, shape=()):
        return cls(shape=shape)

    def evaluate(self, v):
        v = np.asarray(v, dtype=float)
        vv = v.reshape(v.shape + (1,) * len(self.shape))
        out = np.zeros(v.shape + self.shape, dtype=complex) + self.constant
        for a, beta in self.power_terms:
            out = out + a * vv ** float(beta)
        if np.any(self.log_term != 0):
            out = out + self.log_term * np.log(vv)
        for b, s, x in self.gamma_terms:
            g = np.vectorize(lambda t: incomplete_gamma(s, x * t))(v)
            out = out + b * g.reshape(vv.shape)
        if self.exp_terms is not None:
            E, B, X = self.exp_terms
            vf = v.reshape(-1)
            W = np.exp(np.log(vf)[:, None] * B[None, :] - vf[:, None] * X[None, :])
            out = out + np.tensordot(W, E, axes=(1, 0)).reshape(v.shape + self.shape)
        if self.remainder is not None:
            r = np.asarray([self.remainder(float(t)) for t in v.ravel()]).reshape(v.shape + self.shape)
            out = out + r
        return out

    __call__ = evaluate

    def constant_part(self):
        return self.constant.copy()

    def non_decaying(self):
        return VProfile(power_terms=list(self.power_terms), log_term=self.log_term,
                        constant=self.constant, shape=self.shape)

    def _check(self, other):
        if other.shape != self.shape:
            raise RepMismatch("profiles have different shapes")

    def __add__(self, other):
        self._check(other)
        rem = None
        if self.remainder is not None or other.remainder is not None:
            r1, r2 = self.remainder, other.remainder
            rem = lambda v: (r1(v) if r1 else 0) + (r2(v) if r2 else 0)
        decay = min(x for x in (self.remainder_decay or math.inf, other.remainder_decay or math.inf))
        return VProfile(self.power_terms + other.power_terms, self.log_term + other.log_term,
                        self.gamma_terms + other.gamma_terms, self.constant + other.constant,
                        rem, decay if rem else 0.0, self.shape,
                        _cat_exp(self.exp_terms, other.exp_terms))

    def scale(self, s):
        s = np.asarray(s, dtype=complex)
        rem = None
        if self.remainder is not None:
            r = self.remainder
            rem = lambda v: s * r(v)
        shape = np.broadcast_shapes(s.shape, self.shape)
        ex = None
        if self.exp_terms is not None:
            E, B, X = self.exp_terms
            ex = (s * E, B, X)
        return VProfile([(s * a, b) for a, b in self.power_terms], s * self.log_term,
                        [(s * b, x, y) for b, x, y in self.gamma_terms], s * self.constant,
                        rem, self.remainder_decay, shape, ex)

    def __mul__(self, other):
        if not isinstance(other, VProfile):
            return self.scale(other)
        return self.product(other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def _atoms(self):
        atoms = [("p", self.constant, 0.0, None)] + [("p", a, float(b), None) for a, b in self.power_terms]
        atoms += [("g", b, s, x) for b, s, x in self.gamma_terms]
        if self.exp_terms is not None:
            atoms.append(("e",) + self.exp_terms)
        return atoms

    def product(self, other, contract=False):
        """Product of two profiles built from powers, constants, exponentials.

        Gamma terms may only meet constants.  With `contract=True` vector
        coefficients are summed against each other (vector times dual vector).
        """
        if self.remainder is not None or other.remainder is not None:
            raise BadParameter("remainders do not multiply symbolically")
        if np.any(self.log_term != 0) or np.any(other.log_term != 0):
            raise BadParameter("products with log terms are outside the profile algebra")
        shape = () if contract else np.broadcast_shapes(self.shape, other.shape)

        def mul(a, b, lead_a, lead_b):
            # a: (K?, *sh), b: (K?, *sh); leading axes are term indices
            if lead_a and lead_b:
                pr = a[:, None] * b[None, :]
                pr = pr.reshape((-1,) + pr.shape[2:])
            elif lead_b:
                pr = a[None] * b
            else:
                pr = a * b
            if contract:
                lead = 1 if (lead_a or lead_b) else 0
                pr = pr.reshape(pr.shape[:lead] + (-1,)).sum(axis=-1)
            return pr

        powers, gammas, ex = [], [], None
        for ka, a, pa, xa in self._atoms():
            for kb, b, pb, xb in other._atoms():
                kinds = {ka, kb}
                if kinds == {"p"}:
                    powers.append((mul(a, b, False, False), _frac(pa + pb)))
                elif "g" in kinds:
                    if kinds != {"g", "p"}:
                        raise BadParameter("Gamma terms only multiply constants")
                    (g, s_, x), (c, bc) = ((a, pa, xa), (b, pb)) if ka == "g" else ((b, pb, xb), (a, pa))
                    if np.any(c != 0):
                        if bc != 0:
                            raise BadParameter("Gamma terms only multiply constants")
                        gammas.append((mul(g, c, False, False), s_, x))
                elif kinds == {"e", "p"}:
                    if ka == "e":
                        E, B, X, c, bc = a, pa, xa, b, pb
                        EE = mul(E, c, True, False)
                    else:
                        E, B, X, c, bc = b, pb, xb, a, pa
                        EE = mul(c, E, False, True)
                    if np.any(c != 0):
                        ex = _cat_exp(ex, (EE, B + bc, X))
                else:
                    EE = mul(a, b, True, True)
                    ex = _cat_exp(ex, (EE, (pa[:, None] + pb[None, :]).ravel(), (xa[:, None] + xb[None, :]).ravel()))
        return VProfile(power_terms=powers, gamma_terms=gammas, shape=shape, exp_terms=ex)

    def tail_ct(self, v0=1.0):
        """CT_{s=0} of int_{v0}^oo profile(v) v^(-s-2) dv, plus the v^1 coefficient.

        Powers use the closed form v0^(beta-1)/(1-beta); beta = 1 gives
        -log v0 (the constant term of v0^-s/s) and is reported separately as
        the log T coefficient.  Gamma terms integrate in closed form and the
        remainder numerically.
        """
        v0 = float(v0)
        total = np.zeros(self.shape, dtype=complex) + self.constant / v0
        logT = np.zeros(self.shape, dtype=complex)
        for a, beta in self.power_terms:
            if beta == 1:
                total = total - a * math.log(v0)
                logT = logT + a
            else:
                b = float(beta)
                total = total + a * v0 ** (b - 1) / (1 - b)
        if np.any(self.log_term != 0):
            total = total + self.log_term * (math.log(v0) + 1) / v0
        for b, s, x in self.gamma_terms:
            total = total + b * (incomplete_gamma(s, x * v0) / v0 - x * incomplete_gamma(s - 1, x * v0))
        if self.exp_terms is not None:
            E, B, X = self.exp_terms
            w = np.array([x ** (1 - b) * incomplete_gamma(b - 1, x * v0) for b, x in zip(B, X)])
            total = total + np.tensordot(w, E, axes=(0, 0))
        if self.remainder is not None:
            flat = []
            for idx in np.ndindex(self.shape or (1,)):
                f = (lambda v, idx=idx: np.asarray(self.remainder(v)).reshape(self.shape or (1,))[idx] / v**2)
                re = integrate.quad(lambda v: f(v).real, v0, np.inf, limit=200)[0]
                im = integrate.quad(lambda v: f(v).imag, v0, np.inf, limit=200)[0]
                flat.append(re + 1j * im)
            total = total + np.array(flat).reshape(self.shape)
        return total, logT

    def to_json(self):
        def c(z):
            z = np.asarray(z)
            if z.shape == ():
                return [float(z.real), float(z.imag)]
            return [[float(t.real), float(t.imag)] for t in z.ravel()]
        return {
            "const": c(self.constant),
            "powers": [[c(a), str(beta)] for a, beta in self.power_terms],
            "log": c(self.log_term),
            "gammas": [[c(b), s, x] for b, s, x in self.gamma_terms],
        }

    @classmethod
    def from_json(cls, doc, shape=()):
        def c(z):
            z = np.asarray(z, dtype=float)
            if z.ndim == 1 and z.shape[0] == 2 and shape == ():
                return complex(z[0], z[1])
            return (z[..., 0] + 1j * z[..., 1]).reshape(shape)
        return cls(power_terms=[(c(a), Fraction(b)) for a, b in doc.get("powers", [])],
                   log_term=c(doc.get("log", [0.0, 0.0])) if doc.get("log") is not None else 0.0,
                   gamma_terms=[(c(b), s, x) for b, s, x in doc.get("gammas", [])],
                   constant=c(doc.get("const", [0.0, 0.0])), shape=shape)


def _cat_exp(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (np.concatenate([a[0], b[0]]), np.concatenate([a[1], b[1]]), np.concatenate([a[2], b[2]]))


# --------------------------------------------------------------------------
# Fourier expansions

@dataclass
class FourierExpansion:
    """m -> VProfile (vector valued, one entry per coset)."""

    weight: Fraction
    dual: bool
    dim: int
    coeffs: dict
    growth: str = "moderate"
    space: str = ""

    def __post_init__(self):
        self.weight = _frac(self.weight)
        self.coeffs = {_frac(m): p for m, p in sorted(self.coeffs.items(), key=lambda kv: _frac(kv[0]))}
        for p in self.coeffs.values():
            if p.shape != (self.dim,):
                raise RepMismatch("coefficient profiles must be vectors of the representation dimension")

    def coefficient(self, m, v):
        p = self.coeffs.get(_frac(m))
        if p is None:
            return np.zeros(np.shape(v) + (self.dim,), dtype=complex)
        return p.evaluate(v)

    @property
    def is_holomorphic(self):
        return all(not p.power_terms and not p.gamma_terms and p.remainder is None
                   and not np.any(p.log_term != 0) for p in self.coeffs.values())

    def evaluate(self, tau):
        tau = complex(tau)
        out = np.zeros(self.dim, dtype=complex)
        for m, p in self.coeffs.items():
            out += p.evaluate(tau.imag) * np.exp(2j * math.pi * float(m) * tau)
        return out

    def to_json(self):
        return {
            "k": str(self.weight),
            "rep": "dual" if self.dual else "standard",
            "dim": self.dim,
            "growth": self.growth,
            "space": self.space,
            "coeffs": {str(m): p.to_json() for m, p in self.coeffs.items()},
        }

    @classmethod
    def from_json(cls, doc):
        dim = int(doc["dim"])
        return cls(weight=Fraction(doc["k"]), dual=doc.get("rep", "dual") == "dual", dim=dim,
                   coeffs={Fraction(m): VProfile.from_json(p, (dim,)) for m, p in doc["coeffs"].items()},
                   growth=doc.get("growth", "moderate"), space=doc.get("space", ""))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def holomorphic_expansion(weight, dual, coeffs, dim, space=""):
    """Expansion with constant coefficients {m: vector}."""
    return FourierExpansion(weight, dual, dim,
                            {m: VProfile.const(np.asarray(c, dtype=complex), (dim,)) for m, c in coeffs.items()},
                            space=space)


# --------------------------------------------------------------------------
# principal parts, Sing, psi, eta

@dataclass
class SingElement:
    """Formal Fourier polynomial sum_{m <= 0} a(m) q^m with dual vector coefficients."""

    terms: dict
    dim: int

    def __post_init__(self):
        out = {}
        for m, a in self.terms.items():
            m = _frac(m)
            if m > 0:
                raise BadParameter("Sing elements only carry indices m <= 0")
            a = np.asarray(a, dtype=complex)
            if np.any(a != 0):
                out[m] = a
        self.terms = dict(sorted(out.items()))

    def is_zero(self, tol=0.0):
        return all(np.abs(a).max() <= tol for a in self.terms.values())

    def check_invariance(self, D, k, signature, tol=1e-12):
        """T-invariance and Z-symmetry.

        Exponents of dual coefficients lie in -Q(mu) + Z.  Returns a list of
        violations; Z acts on a dual coefficient by
        a(mu) = (-1)^(-k + (q-p)/2) a(-mu), the parity of phi~^v.
        """
        p, q = signature
        sign = (-1) ** int(round(-k + (q - p) / 2)) if float(-k + (q - p) / 2).is_integer() else None
        bad = []
        for m, a in self.terms.items():
            for mu in range(D.order):
                if abs(a[mu]) > tol and (m + D.q_values[mu]) % 1 != 0:
                    bad.append(("T", m, mu))
                if sign is not None and abs(a[mu] - sign * a[D.neg[mu]]) > tol * max(1, abs(a[mu])):
                    bad.append(("Z", m, mu))
        return bad

    def __add__(self, other):
        t = dict(self.terms)
        for m, a in other.terms.items():
            t[m] = t.get(m, 0) + a
        return SingElement(t, self.dim)


def principal_part(F: FourierExpansion, max_negative=10_000) -> SingElement:
    """kappa_F(m) for m <= 0: the constant parts of the coefficient profiles."""
    neg = [m for m, p in F.coeffs.items() if m < 0 and np.any(p.constant != 0)]
    if len(neg) > max_negative:
        raise UnboundedPrincipalPart("too many negative-index constants")
    return SingElement({m: p.constant_part() for m, p in F.coeffs.items() if m <= 0}, F.dim)


def psi_pairing(P: SingElement, g: FourierExpansion):
    """psi(P)(g) = sum_{m <= 0} a_P(m) . c_g(-m) for holomorphic g."""
    if g.dual:
        raise RepMismatch("psi pairs a Sing element with an S(L)-valued form")
    if g.dim != P.dim:
        raise RepMismatch("dimension mismatch")
    if not g.is_holomorphic:
        raise RepMismatch("psi needs a holomorphic form")
    total = 0j
    for m, a in P.terms.items():
        c = g.coeffs.get(-m)
        if c is not None:
            total += complex(np.dot(a, c.constant))
    return total


def phi_tilde_dual(D, mu, k, signature):
    """phi~_mu^v = phi_mu^v + (-1)^(-k + (q-p)/2) phi_{-mu}^v."""
    p, q = signature
    ex = -Fraction(k) + Fraction(q - p, 2)
    v = np.zeros(D.order, dtype=complex)
    v[mu] += 1
    v[D.neg[mu]] += np.exp(1j * math.pi * float(ex))
    return v.real if np.allclose(v.imag, 0) else v


def eta_splitting(basis, D, k, signature, forms=None):
    """eta(phi_{n_i, mu_i}) = q^(-n_i) phi~_{mu_i}^v.

    `basis` lists the functionals (n_i, mu_i) on M_k(rho_L); `forms` is a
    user-supplied basis of M_k(rho_L) as holomorphic FourierExpansions used
    to verify that the functionals are independent on it.
    """
    basis = [(_frac(n), int(mu)) for n, mu in basis]
    if len(set(basis)) != len(basis):
        raise DependentBasis("duplicate functional")
    if not basis:
        return {}
    if forms is not None:
        if len(forms) != len(basis):
            raise DependentBasis("number of functionals differs from the dimension of the supplied basis")
        A = np.array([[complex(f.coeffs[n].constant[mu]) if n in f.coeffs else 0j for f in forms]
                      for n, mu in basis])
        if abs(np.linalg.det(A)) < 1e-10:
            raise DependentBasis("pairing matrix is singular")
    return {(n, mu): SingElement({-n: phi_tilde_dual(D, mu, k, signature)}, D.order) for n, mu in basis}

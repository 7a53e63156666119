"""Regularized pairings and the Kudla / Bruinier Green functions.

The pairing of f (weight k) with g (weight -k, dual representation) splits
the truncated fundamental domain into

    F_1        compact part {|tau| >= 1, |u| <= 1/2, v <= 1}, 2D quadrature;
    band       [1, V_res] x [-1/2, 1/2] where the principal handle has a
               pointwise remainder, 2D quadrature;
    strip      v >= 1, where the u-integral is done exactly as a sum over
               Fourier coefficients c_f(n, v) c_g(-n, v) of symbolic profiles.

Strip profiles are integrated against v^(-s-2): powers, logs and slowly
decaying exponentials in closed form (constant term at s = 0, with the v^1
coefficient reported as the log T coefficient), the remaining exponentials
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import (
    NotUnimodular,
    OnSingularLocus,
    QuadratureFailure,
    RepMismatch,
    UndeclaredTail,
    WeightMismatch,
    WeightNotNegative,
)
from .lattice import EvenLattice, MajorantPoint, discriminant_group, enumerate_coset_vectors, majorant
from .maass import VProfile, beta_array
from .quadrature import integrate_region, periodic_u_nodes
from .series import (
    HejhalPoincare,
    SeriesHandle,
    SiegelTheta,
    TruncatedPoincare,
    ZeroHandle,
    faber_handle,
)

TWO_PI = 2.0 * math.pi


@dataclass
class QuadConfig:
    n_u: int = 20
    n_v: int = 20
    refine: int = 8
    x_slow: float = 0.5           # exponentials e^(-x v) with x below this go to closed form
    tail_eps: float = 45.0        # numeric strip integration until e^(-x v) < e^(-tail_eps)
    quad_epsrel: float = 1e-12
    undeclared_tol: float = 1e-6
    check_model: bool = True


@dataclass
class RegularizedResult:
    value: complex
    logT_coefficient: complex = 0.0
    tail_meromorphic: complex = 0.0
    quadrature_error: float = 0.0
    T_used: float = 1.0
    s_handling: str = "CT_{s=0}, closed-form tails"
    parts: dict = field(default_factory=dict)

    def to_json(self):
        c = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {
            "value": c(self.value),
            "logT": c(self.logT_coefficient),
            "tail_closed_form": c(self.tail_meromorphic),
            "error": float(self.quadrature_error),
            "T_used": float(self.T_used),
            "s_handling": self.s_handling,
            "parts": {k: c(v) for k, v in self.parts.items()},
        }

    def __add__(self, other):
        parts = dict(self.parts)
        for k, v in other.parts.items():
            parts[k] = parts.get(k, 0) + v
        return RegularizedResult(self.value + other.value, self.logT_coefficient + other.logT_coefficient,
                                 self.tail_meromorphic + other.tail_meromorphic,
                                 self.quadrature_error + other.quadrature_error,
                                 max(self.T_used, other.T_used), self.s_handling, parts)

    def scale(self, s):
        return RegularizedResult(s * self.value, s * self.logT_coefficient, s * self.tail_meromorphic,
                                 abs(s) * self.quadrature_error, self.T_used, self.s_handling,
                                 {k: s * v for k, v in self.parts.items()})

    def __sub__(self, other):
        return self + other.scale(-1.0)


def strip_integral(prof: VProfile, v0, cfg: QuadConfig | None = None, T_max=None):
    """CT_{s=0} int_{v0}^oo prof(v) v^(-s-2) dv for a scalar profile.

    Returns (value, logT coefficient, closed-form part, error, v_end).
    """
    cfg = cfg or QuadConfig()
    slow, fast = prof.exp_split(cfg.x_slow)
    closed = VProfile(power_terms=prof.power_terms, log_term=prof.log_term, gamma_terms=prof.gamma_terms,
                      constant=prof.constant, shape=prof.shape,
                      exp_terms=slow.exp_terms if slow is not None else None)
    cval, logT = closed.tail_ct(v0)
    num, err, v_end = 0.0, 0.0, v0
    if fast is not None:
        E, B, X = fast.exp_terms
        xmin = float(X.min())
        v_end = v0 + cfg.tail_eps / xmin
        if T_max is not None and T_max < v_end:
            # beyond T_max the exponentials are integrated in closed form
            v_end = max(float(T_max), v0)
            tail_c, _ = fast.tail_ct(v_end)
            cval += tail_c
        # split at the scales of the fastest and slowest rates
        knots = sorted({v0, v0 + 1.0 / float(X.max()), v0 + 4.0 / float(X.max()), v0 + 1.0 / xmin,
                        v0 + 4.0 / xmin, v_end})
        knots = [k for k in knots if v0 <= k <= v_end]

        def f(v):
            w = np.exp((B - 2.0) * math.log(v) - X * v)
            return complex(np.dot(w, E))

        for a, b in zip(knots[:-1], knots[1:]):
            re, e1 = integrate.quad(lambda v: f(v).real, a, b, epsabs=0, epsrel=cfg.quad_epsrel, limit=200)
            im, e2 = integrate.quad(lambda v: f(v).imag, a, b, epsabs=0, epsrel=cfg.quad_epsrel, limit=200)
            num += re + 1j * im
            err += e1 + e2
        if T_max is None or T_max >= v0 + cfg.tail_eps / xmin:
            # omitted [v_end, oo): each term is below |e| v^(beta-2) e^(-x v) / x there
            mag = np.abs(E).reshape(len(X), -1).sum(axis=1)
            err += float(np.sum(mag * np.exp((B - 2) * math.log(v_end) - X * v_end) / X))
    return complex(cval) + num, complex(logT), complex(cval), err, v_end


def _contract(prof_f: VProfile, prof_g: VProfile):
    return prof_f.product(prof_g, contract=True)


def _roles(f: SeriesHandle, g: SeriesHandle):
    def principal_ok(h):
        try:
            h.strip_terms()
            return True
        except NotImplementedError:
            return False

    def fourier_ok(h):
        try:
            h.coefficient_profile(0)
            return not h.has_residual
        except NotImplementedError:
            return False

    if principal_ok(f) and fourier_ok(g):
        return f, g
    if principal_ok(g) and fourier_ok(f):
        return g, f
    raise RepMismatch("one handle must have a finite declared Fourier part, the other a full expansion")


def regularized_pairing(f: SeriesHandle, g: SeriesHandle, cfg: QuadConfig | None = None,
                        T_max=None) -> RegularizedResult:
    """<f, g>^reg = CT_{s=0} lim_T int_{F_T} (f . g) v^(-s) dmu."""
    cfg = cfg or QuadConfig()
    if f.weight + g.weight != 0:
        raise WeightMismatch(f"weights {f.weight} and {g.weight} do not cancel")
    if f.dim != g.dim or (f.dual == g.dual and f.dim > 1):
        raise RepMismatch("pairing needs a representation and its dual")
    if isinstance(f, ZeroHandle) or isinstance(g, ZeroHandle):
        return RegularizedResult(0j)
    P, G = _roles(f, g)

    circles = list(P.circles()) + list(G.circles())
    vbreaks = list(P.v_breaks()) + list(G.v_breaks())

    def prod(taus):
        return np.sum(P.evaluate_many(taus) * G.evaluate_many(taus), axis=1)

    compact, ecompact = integrate_region(prod, "F1", circles=circles, n_u=cfg.n_u, n_v=cfg.n_v,
                                         extra_v=vbreaks, refine=cfg.refine)
    parts = {"compact": compact}
    err = ecompact
    band = 0j
    vres = P.residual_height if P.has_residual else 1.0
    if vres > 1.0:
        def rprod(taus):
            return np.sum(P.residual_many(taus) * G.evaluate_many(taus), axis=1)
        band, eband = integrate_region(rprod, "band", 1.0, vres, circles=circles, n_u=cfg.n_u, n_v=cfg.n_v,
                                       extra_v=vbreaks, refine=cfg.refine)
        err += eband
    parts["band"] = band

    strip, logT, closed, T_used = 0j, 0j, 0j, 1.0
    for n, prof, v_start in P.strip_terms():
        gp = G.coefficient_profile(-n, v_min=v_start)
        val, lt, cl, e, vend = strip_integral(_contract(prof, gp), v_start, cfg, T_max)
        strip += val
        logT += lt
        closed += cl
        err += e
        T_used = max(T_used, vend)
    model = P.residual_model() if P.has_residual else []
    model_total = 0j
    for n, prof in model:
        gp = G.coefficient_profile(-n, v_min=vres)
        val, lt, cl, e, vend = strip_integral(_contract(prof, gp), vres, cfg, T_max)
        model_total += val
        logT += lt
        closed += cl
        err += e
    parts["strip"] = strip
    parts["residual_model"] = model_total
    if model and cfg.check_model:
        err += _model_mismatch(P, G, model, vres, cfg)
    value = compact + band + strip + model_total
    if not (np.isfinite(value) and np.isfinite(err)):
        raise QuadratureFailure("non-finite pairing value or error estimate")
    if hasattr(P, "constant_term"):
        err += abs(P.constant_term()[1]) / max(vres, 1.0)
    return RegularizedResult(value, logT, closed, float(err), T_used, parts=parts)


def _model_mismatch(P, G, model, vres, cfg):
    """Gap between the declared remainder model and the u-average of remainder x g at V_res."""
    us = periodic_u_nodes(64)
    taus = us + 1j * vres
    actual = np.mean(np.sum(P.residual_many(taus) * G.evaluate_many(taus), axis=1))
    pred = 0j
    for n, prof in model:
        pred += complex(_contract(prof, G.coefficient_profile(-n, v_min=vres)).evaluate(np.array([vres]))[0])
    gap = abs(actual - pred)
    scale = max(1.0, abs(pred))
    # the remainder itself is only known up to the handle's truncation bound
    trunc = float(P.error_estimate(complex(0.0, vres))) * float(np.abs(G.evaluate_many(taus)).max())
    if gap > max(cfg.undeclared_tol * scale, 1e3 * cfg.undeclared_tol) + trunc:
        raise UndeclaredTail(f"remainder differs from its declared model by {gap:.3e} at v = {vres}")
    # the gap persists over [V_res, oo) at most like the slowest omitted term; bound by gap / V_res
    return gap / vres


# --------------------------------------------------------------------------
# Kudla's Green function

def kudla_green_direct(L: EvenLattice, m, w, mu: int, z: MajorantPoint, cutoff=45.0, singular_tol=1e-8):
    """sum over x in mu + L, Q(x) = m (x != 0 for m = 0) of beta(2 pi w R°(x, z)).

    Returns (value, truncation bound).
    """
    m = Fraction(m)
    bound = float(m) + cutoff / (TWO_PI * w)
    if bound < 0:
        return 0.0, 0.0
    cv = enumerate_coset_vectors(L, mu, z=z, bound=float(bound) + 1e-9)
    cv = cv.select_Q(m)
    if not len(cv):
        return 0.0, math.exp(-cutoff)
    x = cv.x
    R = z.R0(x)
    if m == 0:
        keep = np.any(np.abs(x) > 0, axis=1)
        x, R = x[keep], R[keep]
    if len(R) and R.min() < singular_tol:
        raise OnSingularLocus(f"R°(x, z) = {R.min():.3e} for a vector of norm {m}")
    if not len(R):
        return 0.0, math.exp(-cutoff)
    val = float(beta_array(TWO_PI * w * R).sum())
    return val, math.exp(-cutoff) * 10 * len(R)


def kudla_green_via_lift(L: EvenLattice, m, w, mu: int, z: MajorantPoint, cfg=None, cutoff=40.0):
    """<P_{m,w,mu}, Theta_L(., z)>^reg, plus log w for m = 0, mu = 0."""
    p, _ = L.signature
    k = Fraction(2 - p, 2)
    P = TruncatedPoincare(L, k, m, mu, w)
    Th = SiegelTheta(L, z, cutoff)
    res = regularized_pairing(P, Th, cfg)
    if Fraction(m) == 0 and mu == 0:
        res.value += math.log(w)
        res.parts["log_w"] = math.log(w)
    return res


# --------------------------------------------------------------------------
# Bruinier's Green function

def harmonic_form(L: EvenLattice, k, m, mu: int = 0, C=100):
    """F_{m,mu} of weight k <= 0: Hejhal series for k < 0, j_m for unimodular k = 0; zero for m <= 0 when k < 0."""
    k, m = Fraction(k), Fraction(m)
    D = discriminant_group(L) if L is not None else None
    order = D.order if D is not None else 1
    if k < 0:
        if m <= 0:
            return ZeroHandle(order, k, False, L)
        return HejhalPoincare(L, k, m, mu, C)
    if k == 0:
        if order != 1:
            raise NotUnimodular("weight 0 forms F_m are built from j only for unimodular lattices")
        if m < 0 or m.denominator != 1:
            return ZeroHandle(1, 0, False, L)
        return faber_handle(int(m), L)
    raise WeightNotNegative("F_m needs weight <= 0")


def bruinier_form(L: EvenLattice, m, mu: int = 0, C=100):
    """F_{m,mu} of weight 1 - p/2."""
    p, _ = L.signature
    return harmonic_form(L, Fraction(2 - p, 2), m, mu, C)


def bruinier_green(L: EvenLattice, m, mu: int, z: MajorantPoint, C=100, cfg=None, cutoff=40.0):
    F = bruinier_form(L, m, mu, C)
    Th = SiegelTheta(L, z, cutoff)
    if isinstance(F, ZeroHandle):
        return RegularizedResult(0j)
    return regularized_pairing(F, Th, cfg)


# --------------------------------------------------------------------------
# generating series

@dataclass
class GeneratingSeries:
    lattice: EvenLattice
    v: float
    coefficients: dict             # m -> complex
    lift: dict                     # m -> <P_{m,v}, Theta>^reg
    bruinier: dict                 # m -> BGr(m)
    direct: dict                   # m -> KGr(m, v) - BGr(m) - delta log v, by the beta-sum
    errors: dict

    def value(self, tau):
        tau = complex(tau)
        return sum(c * np.exp(2j * math.pi * float(m) * tau) for m, c in self.coefficients.items())


def green_generating_series(L: EvenLattice, z: MajorantPoint, M_max, v, mu=0, C=100, cfg=None,
                            bruinier_cache=None):
    """Coefficients <P_{m,v} - F_m, Theta(., z)>^reg for |m| <= M_max (mu = 0 component)."""
    coeffs, lift, brg, direct, errs = {}, {}, {}, {}, {}
    D = discriminant_group(L)
    q0 = Fraction(D.q_values[mu]) % 1
    ms = [q0 + n for n in range(-M_max - 1, M_max + 1) if abs(q0 + n) <= M_max]
    for m in ms:
        lr = kudla_green_via_lift(L, m, v, mu, z, cfg)
        # <P_{m,v}, Theta> itself, without the log v shift used by KGr(0)
        lv = lr.value - (math.log(v) if (m == 0 and mu == 0) else 0.0)
        key = (m, mu)
        if bruinier_cache is not None and key in bruinier_cache:
            br = bruinier_cache[key]
        else:
            br = bruinier_green(L, m, mu, z, C, cfg)
            if bruinier_cache is not None:
                bruinier_cache[key] = br
        kd, kerr = kudla_green_direct(L, m, v, mu, z)
        coeffs[m] = lv - br.value
        lift[m] = lv
        brg[m] = br.value
        direct[m] = kd - (math.log(v) if (m == 0 and mu == 0) else 0.0) - br.value
        errs[m] = lr.quadrature_error + br.quadrature_error + kerr
    return GeneratingSeries(L, float(v), coeffs, lift, brg, direct, errs)


def modularity_residual(L, z, tau, M_max, C=100, cfg=None, cache=None):
    """|g(-1/tau) - tau^(p/2+1) g(tau)| / scale for the mu = 0 generating series of a unimodular L."""
    tau = complex(tau)
    p, _ = L.signature
    k = p / 2 + 1
    st = -1.0 / tau
    cache = {} if cache is None else cache
    g1 = green_generating_series(L, z, M_max, tau.imag, C=C, cfg=cfg, bruinier_cache=cache)
    g2 = g1 if abs(st.imag - tau.imag) < 1e-14 else green_generating_series(L, z, M_max, st.imag, C=C, cfg=cfg,
                                                                             bruinier_cache=cache)
    lhs = g2.value(st)
    rhs = tau ** k * g1.value(tau)
    scale = sum(abs(c) * math.exp(-TWO_PI * float(m) * tau.imag) for m, c in g1.coefficients.items())
    return abs(lhs - rhs) / max(scale, 1e-300), lhs, rhs, g1, g2


# --------------------------------------------------------------------------
# 2U and H x H

def h2_vector(M):
    """Coordinates of a 2 x 2 matrix in 2U = (M_2(Z), det): (a, d, b, -c)."""
    return np.array([M[0][0], M[1][1], M[0][1], -M[1][0]])


def h2_point(L: EvenLattice, z1, z2) -> MajorantPoint:
    """Negative plane of (z1, z2) in H x H: span of Re and Im of [[z1, -z1 z2], [1, -z2]]."""
    if L.signature != (2, 2) or discriminant_group(L).order != 1:
        raise NotUnimodular("the H x H model needs a unimodular lattice of signature (2, 2)")
    z1, z2 = complex(z1), complex(z2)
    X = np.array([[z1, -z1 * z2], [1.0, -z2]])
    return majorant(L, [h2_vector(X.real), h2_vector(X.imag)])

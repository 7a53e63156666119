"""Maass operators and the section L# of the lowering operator.

Conventions (tau = u + iv):
    L   = -2i v^2 d/dtau-bar        L(v^a) = a v^(a+1),  L(holomorphic) = 0
    R_l = 2i d/dtau + l / v         L(R_l g) = -l g  for holomorphic g
    xi_k(F) = v^(k-2) conj(L F)

For f of weight kappa - 2 valued in the dual representation, F = L#(f) has
coefficients c_F(m, v)(phi_mu) = -<P_{m,v,mu} - F_{m,mu}, f>^reg, where P
and F_m have weight k = 2 - kappa.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BadWeight, MissingBasisData, MissingConstantProfile, StencilFailure
from .lattice import discriminant_group
from .maass import FourierExpansion, VProfile, holomorphic_expansion
from .reglift import QuadConfig, RegularizedResult, harmonic_form, regularized_pairing
from .series import ConjugateWeighted, ExpansionHandle, SeriesHandle, TruncatedPoincare, ZeroHandle

FOUR_PI = 4.0 * math.pi


@dataclass
class OperatorConfig:
    fd_step: float = 1e-4
    s_step: float = 1e-3
    cusp_basis: list = field(default_factory=list)     # FourierExpansions declared cuspidal
    cusp_basis_declared_empty: bool = False
    m_grid: tuple = ()
    v_grid: tuple = (1.0, 2.0, 4.0)


def _caller(f):
    if isinstance(f, SeriesHandle):
        return f.evaluate_many
    if isinstance(f, FourierExpansion):
        return ExpansionHandle(f).evaluate_many
    return lambda taus: np.asarray([np.atleast_1d(f(t)) for t in taus])


# fourth-order central first derivative on the 5-point line
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_OFF = np.array([-2, -1, 0, 1, 2])


def _partials(f, tau, h):
    """(d/du, d/dv) of f at tau using the 5 x 5 stencil of spacing h and h/2, Richardson-combined."""
    tau = complex(tau)
    if tau.imag - 2 * h <= 0:
        raise StencilFailure(f"stencil leaves the upper half plane at {tau}")
    call = _caller(f)
    res = []
    for hh in (h, h / 2):
        grid = tau + hh * (_OFF[:, None] + 1j * _OFF[None, :])
        vals = np.asarray(call(grid.ravel()))
        vals = vals.reshape(5, 5, -1)
        if not np.all(np.isfinite(vals)):
            raise StencilFailure("non-finite value on the stencil")
        du = np.tensordot(_D1, vals[:, 2, :], axes=(0, 0)) / hh
        dv = np.tensordot(_D1, vals[2, :, :], axes=(0, 0)) / hh
        res.append((du, dv))
    (du1, dv1), (du2, dv2) = res
    du = (16 * du2 - du1) / 15
    dv = (16 * dv2 - dv1) / 15
    err = float(np.max(np.abs(du2 - du1)) + np.max(np.abs(dv2 - dv1))) / 15
    return du, dv, err


def lowering_numeric(f, tau, cfg: OperatorConfig | None = None):
    """-2i v^2 df/dtau-bar with an error estimate."""
    cfg = cfg or OperatorConfig()
    du, dv, err = _partials(f, tau, cfg.fd_step)
    v = complex(tau).imag
    dbar = 0.5 * (du + 1j * dv)
    return -2j * v * v * dbar, v * v * err


def xi_operator(F, k, tau, cfg: OperatorConfig | None = None):
    val, err = lowering_numeric(F, tau, cfg)
    v = complex(tau).imag
    s = v ** (float(k) - 2)
    return s * np.conj(val), s * err


def raising(g, ell, tau, cfg: OperatorConfig | None = None):
    """R_l g = 2i dg/dtau + (l/v) g, numerically."""
    cfg = cfg or OperatorConfig()
    du, dv, err = _partials(g, tau, cfg.fd_step)
    v = complex(tau).imag
    d = 0.5 * (du - 1j * dv)
    gv = np.asarray(_caller(g)([complex(tau)]))[0]
    return 2j * d + (float(ell) / v) * gv, 2 * err


def raising_expansion(G: FourierExpansion, ell, normalize=False):
    """Coefficientwise R_l on a holomorphic expansion: c q^m -> (-4 pi m c + l c / v) q^m.

    normalize=True returns -(1/l) R_l G, the lowering preimage of G.
    """
    ell = Fraction(ell)
    if not G.is_holomorphic:
        raise BadWeight("raising_expansion needs holomorphic input")
    if normalize and ell == 0:
        raise BadWeight("the -1/l normalisation needs l != 0")
    sc = -1.0 / float(ell) if normalize else 1.0
    out = {}
    for m, p in G.coeffs.items():
        c = p.constant
        out[m] = VProfile(constant=sc * (-FOUR_PI * float(m)) * c, power_terms=[(sc * float(ell) * c, -1)],
                          shape=(G.dim,))
    return FourierExpansion(G.weight + 2, G.dual, G.dim, out, space="raised")


# --------------------------------------------------------------------------
# L#

def _coset_indices(D, mu, m_lo, m_hi):
    q = Fraction(D.q_values[mu]) if D is not None else Fraction(0)
    first = math.ceil(m_lo - q)
    return [q + n for n in range(first, math.floor(m_hi - q) + 1)]


def _antiderivative_tail(prof: VProfile, w, dim):
    """-int_w^oo prof(t) t^-2 dt as a profile in w (powers only)."""
    if prof.gamma_terms or prof.exp_terms is not None or prof.remainder is not None or np.any(prof.log_term != 0):
        return None
    terms = []
    if np.any(prof.constant != 0):
        terms.append((-prof.constant, -1))
    for a, beta in prof.power_terms:
        if beta >= 1:
            return None
        terms.append((-a / (1 - float(beta)), beta - 1))
    return VProfile(power_terms=terms, shape=(dim,))


class LSharp:
    """F = L#(f) assembled coefficient by coefficient from regularized pairings.

    holomorphic[(m, mu)] = <F_{m,mu}, f>^reg does not depend on v and is
    computed once; the Poincare part <P_{m,v,mu}, f>^reg is recomputed for
    every v requested.
    """

    def __init__(self, f: SeriesHandle, m_max, C=100, cfg: OperatorConfig | None = None,
                 quad: QuadConfig | None = None, m_min=None, forms=None, jobs=1):
        self.f = f
        self.cfg = cfg or OperatorConfig()
        self.quad = quad
        self.C = C
        self.kappa = f.weight + 2
        self.k = 2 - self.kappa
        self.L = f.lattice
        self.D = discriminant_group(self.L) if self.L is not None else None
        self.dim = f.dim
        try:
            f.coefficient_profile(0)
        except NotImplementedError as e:
            raise MissingConstantProfile(str(e)) from e
        if self.kappa <= 2 and not (self.D is None or self.D.order == 1) and forms is None:
            raise MissingBasisData("kappa <= 2 needs the forms F_m (or their basis data) supplied")
        self.m_max = Fraction(m_max)
        self.m_min = Fraction(0) if m_min is None else Fraction(m_min)
        self._forms = forms or {}
        self.holomorphic = {}
        self.errors = {}
        self._pcache = {}
        self.metadata = {
            "lowering": "L(F) = f",
            "principal_part": "trivial for m < 0" if self.kappa > 2 else "given by the forms F_m",
            "cuspidal_projection": ("declared empty" if self.cfg.cusp_basis_declared_empty
                                    else f"{len(self.cfg.cusp_basis)} supplied cusp forms"),
        }
        keys = [(m, mu) for mu in range(self.dim) for m in self.indices(mu)]
        if jobs > 1:
            # independent pairings; results land in a dict keyed by (m, mu)
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(lambda key: self._holomorphic(*key), keys))
        else:
            for key in keys:
                self._holomorphic(*key)

    def indices(self, mu):
        return _coset_indices(self.D, mu, self.m_min, self.m_max)

    def form(self, m, mu):
        key = (Fraction(m), int(mu))
        if key in self._forms:
            return self._forms[key]
        if self.L is None:
            if self.k < 0 or Fraction(m) <= 0:
                return ZeroHandle(self.dim, self.k, False, None)
            raise MissingBasisData("forms F_m for a representation without a lattice must be supplied")
        return harmonic_form(self.L, self.k, m, mu, self.C)

    def _holomorphic(self, m, mu):
        key = (Fraction(m), int(mu))
        if key not in self.holomorphic:
            F = self.form(m, mu)
            if isinstance(F, ZeroHandle) or not getattr(F, "active", True):
                r = RegularizedResult(0j)
            else:
                r = regularized_pairing(F, self.f, self.quad)
            self.holomorphic[key] = complex(r.value)
            self.errors[key] = r.quadrature_error
        return self.holomorphic[key]

    def poincare_part(self, m, mu, w):
        key = (Fraction(m), int(mu), float(w))
        if key not in self._pcache:
            P = TruncatedPoincare(self.L, self.k, m, mu, w) if self.L is not None else None
            if P is None or not P.active:
                self._pcache[key] = (0j, 0.0)
            else:
                r = regularized_pairing(P, self.f, self.quad)
                self._pcache[key] = (complex(r.value), r.quadrature_error)
        return self._pcache[key]

    def coefficient(self, m, mu, w):
        """c_F(m, w)(phi_mu) = -<P_{m,w,mu} - F_{m,mu}, f>^reg."""
        p, _ = self.poincare_part(m, mu, w)
        return -(p - self._holomorphic(m, mu))

    def coefficient_error(self, m, mu, w):
        return self.poincare_part(m, mu, w)[1] + self.errors.get((Fraction(m), int(mu)), 0.0)

    def table(self, w_list):
        rows = []
        for mu in range(self.dim):
            for m in self.indices(mu):
                for w in w_list:
                    rows.append((m, mu, float(w), self.coefficient(m, mu, w), self.coefficient_error(m, mu, w)))
        return rows

    def evaluate(self, tau):
        """Assembled F(tau) = sum_m c_F(m, v) e(m tau) per component."""
        tau = complex(tau)
        v = tau.imag
        out = np.zeros(self.dim, dtype=complex)
        for mu in range(self.dim):
            for m in self.indices(mu):
                out[mu] += self.coefficient(m, mu, v) * np.exp(2j * math.pi * float(m) * tau)
        return out

    def evaluate_many(self, taus):
        return np.array([self.evaluate(t) for t in np.atleast_1d(taus)])

    def expansion(self):
        """Closed-form FourierExpansion when every coefficient of f is a finite sum of powers."""
        coeffs = {}
        for mu in range(self.dim):
            for m in self.indices(mu):
                prof = self.f.coefficient_profile(m)
                tail = _antiderivative_tail(prof, 1.0, self.dim)
                if tail is None:
                    raise MissingConstantProfile(f"coefficient {m} of f is not a finite power sum")
                e = np.zeros(self.dim)
                e[mu] = 1.0
                # only the mu component of -<P_{m,v,mu}, f> belongs to F_mu
                part = VProfile(power_terms=[(a * e, b) for a, b in tail.power_terms],
                                constant=(tail.constant * e), shape=(self.dim,))
                part = part + VProfile.const(self._holomorphic(m, mu) * e, (self.dim,))
                coeffs[m] = coeffs[m] + part if m in coeffs else part
        return FourierExpansion(self.kappa, self.f.dual, self.dim, coeffs, space="lsharp")

    def handle(self):
        return ExpansionHandle(self.expansion(), self.L)


def lsharp_coefficients(f: SeriesHandle, m_list, w_list, C=100, cfg=None, quad=None, forms=None, jobs=1):
    """Table of c_F(m, w)(phi_mu) for F = L#(f); returns (LSharp, rows)."""
    ms = [Fraction(m) for m in m_list]
    ls = LSharp(f, max(ms), C, cfg, quad, m_min=min(ms), forms=forms, jobs=jobs)
    return ls, ls.table(w_list)


def petersson_regularized(F: SeriesHandle, G: FourierExpansion, quad: QuadConfig | None = None):
    """<F, v^kappa conj(G)>^reg for holomorphic G of weight kappa."""
    if isinstance(F, FourierExpansion):
        F = ExpansionHandle(F)
    return regularized_pairing(F, ConjugateWeighted(G, G.weight, F.lattice), quad)


def cuspidal_projection(F: SeriesHandle, cfg: OperatorConfig, quad=None):
    """Pairings of F with each supplied cusp form; empty when the basis is declared empty."""
    if cfg.cusp_basis_declared_empty or not cfg.cusp_basis:
        return []
    return [petersson_regularized(F, h, quad) for h in cfg.cusp_basis]


def mock_series(f0: FourierExpansion, lattice, m_list, C=100, quad=None):
    """Coefficients <F_m, -v^k conj(f0)>^reg and the L# object of f = -v^k conj(f0)."""
    neg = holomorphic_expansion(f0.weight, f0.dual, {m: -p.constant for m, p in f0.coeffs.items()}, f0.dim,
                                space=f0.space)
    f = ConjugateWeighted(neg, f0.weight, lattice)
    ms = [Fraction(m) for m in m_list]
    ls = LSharp(f, max(ms), C, quad=quad, m_min=min(min(ms), 0))
    coeffs = {m: ls.holomorphic.get((m, 0), 0j) for m in ms}
    return coeffs, ls


def rankin_partial_sums(g: FourierExpansion, theta_coeffs: dict, s, n, M):
    """Partial sums of L(s, g, Theta) = G(s/2+n-1)/(4 pi)^(s/2+n-1) sum_m <mu(m), conj c_g(m)> / m^(s/2+n-1)."""
    a = s / 2 + n - 1
    pref = math.gamma(a) / FOUR_PI ** a
    total, out = 0j, []
    for m in sorted(Fraction(x) for x in theta_coeffs):
        if m <= 0 or m > M:
            continue
        cg = g.coeffs.get(m)
        if cg is not None:
            total += np.dot(np.asarray(theta_coeffs[m]), np.conj(cg.constant)) / float(m) ** a
        out.append((m, pref * total))
    return out

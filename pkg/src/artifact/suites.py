"""Verification suites: each identity computed two ways and compared."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import UnknownSuite
from .lattice import fixture
from .lsharp import LSharp, OperatorConfig, lowering_numeric, mock_series, raising_expansion, xi_operator
from .maass import holomorphic_expansion
from .reglift import (
    bruinier_green,
    h2_point,
    harmonic_form,
    kudla_green_direct,
    kudla_green_via_lift,
    modularity_residual,
    regularized_pairing,
)
from .series import DefiniteTheta, Eisenstein, SiegelTheta, TruncatedPoincare, eisenstein_qseries
from .weilrep import S, MpElement, slash, weilrep_for


@dataclass
class Check:
    test: str
    target: object
    computed: object
    tolerance: float
    residual: float
    passed: bool
    seconds: float = 0.0

    def to_json(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _check(name, target, computed, tol, relative=False, floor=0.0):
    t = np.asarray(target, dtype=complex)
    c = np.asarray(computed, dtype=complex)
    res = float(np.max(np.abs(c - t))) if t.size else 0.0
    if relative:
        res /= max(float(np.max(np.abs(t))), floor or 1e-300)
    tj = [_c(x) for x in np.atleast_1d(t)] if t.size else []
    cj = [_c(x) for x in np.atleast_1d(c)] if c.size else []
    return Check(name, tj, cj, tol, res, bool(res < tol))


GENERIC_H2 = [(0.1 + 1.1j, 0.3 + 1.7j), (0.25 + 0.9j, -0.4 + 1.3j), (-0.2 + 1.6j, 0.45 + 1.05j),
              (0.37 + 2.1j, -0.11 + 0.95j), (-0.44 + 1.3j, 0.2 + 2.4j)]


def suite_weilrep(cfg):
    out = []
    for name in ("A1", "A1A1", "D4", "2U"):
        t = time.time()
        res = weilrep_for(fixture(name)).relation_residuals()
        r = max(res.values())
        out.append(Check(f"weilrep relations {name}", 0.0, r, 1e-12, r, r < 1e-12, time.time() - t))
    return out


def _random_mp(rng, length=4):
    g = MpElement(1, 0, 0, 1, 0)
    for _ in range(length):
        n = int(rng.integers(-3, 4))
        g = g * MpElement(1, n, 0, 1, 0) * S
    return g


def suite_slash(cfg):
    L = fixture("2U")
    rng = np.random.default_rng(cfg.get("seed", 7))
    Th = SiegelTheta(L, h2_point(L, *GENERIC_H2[0]), cfg.get("lattice_cutoff", 40.0))
    wr = Th.wr
    worst = 0.0
    t = time.time()
    n = 0
    while n < 20:
        g = _random_mp(rng)
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.6))
        if g.act(tau).imag < 0.25:
            continue
        n += 1
        a = Th.evaluate(tau)
        b = slash(lambda x: Th.evaluate(x), Th.weight, g, tau, wr)
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
    return [Check("Siegel theta slash invariance, 20 samples on 2U", 0.0, worst, 1e-6, worst, worst < 1e-6,
                  time.time() - t)]


def suite_unfolding(cfg):
    out = []
    for name in ("A1A1", "D4"):
        L = fixture(name)
        Th = DefiniteTheta(L, 12)
        k = Fraction(-L.rank, 2)
        for m in range(5):
            mu_m = Th.mu(m)[0]
            for w in (0.7, 1.0, 2.0):
                t = time.time()
                r = regularized_pairing(TruncatedPoincare(L, k, m, 0, w), Th)
                c = _check(f"<P_{m},{w}, Theta_{name}> = mu(m)/v", mu_m / w, r.value, 1e-3, relative=True, floor=1.0)
                c.seconds = time.time() - t
                out.append(c)
    return out


def suite_green(cfg):
    L = fixture("2U")
    out = []
    for idx, (z1, z2) in enumerate(GENERIC_H2):
        z = h2_point(L, z1, z2)
        for m in (-1, 0, 1, 2):
            for w in (1.0, 2.0):
                t = time.time()
                d, _ = kudla_green_direct(L, m, w, 0, z)
                r = kudla_green_via_lift(L, m, w, 0, z, cutoff=cfg.get("lattice_cutoff", 40.0))
                c = _check(f"KGr({m},{w}) direct vs lift at z{idx}", d, r.value, 1e-3)
                c.seconds = time.time() - t
                out.append(c)
    return out


def _bruinier_oracle(L, Th, m, w=1.0):
    """<F_m, Theta> = c_F(m, w) + <P_{m,w}, Theta>, with c_F from -(1/l) R_l Theta."""
    ell = Th.weight
    R = raising_expansion(Th.expansion(int(m) + 1), ell, normalize=True)
    cF = R.coeffs[Fraction(m)].evaluate(np.array([w]))[0][0]
    p = regularized_pairing(TruncatedPoincare(L, -Th.weight, m, 0, w), Th).value
    return cF + p


def suite_bruinier(cfg):
    L = fixture("D4")
    Th = DefiniteTheta(L, 12)
    out = []
    for m in (1, 2):
        closed = 4 * math.pi * m * Th.mu(m)[0] / 2
        t = time.time()
        orc = _bruinier_oracle(L, Th, m)
        out.append(_check(f"raising oracle <F_{m}, Theta_D4> vs 4 pi m mu(m)/2", closed, orc, 0.05, relative=True))
        F = harmonic_form(L, -2, m, 0, cfg.get("C", 100))
        r = regularized_pairing(F, Th)
        c = _check(f"Hejhal <F_{m}, Theta_D4> vs 4 pi m mu(m)/2", closed, r.value, 0.05, relative=True)
        c.seconds = time.time() - t
        out.append(c)
    return out


def suite_lsharp(cfg):
    L = fixture("D4")
    Th = DefiniteTheta(L, 12)
    t = time.time()
    ls = LSharp(Th, 2, C=cfg.get("C_lsharp", 40), cfg=OperatorConfig(cusp_basis_declared_empty=True), m_min=-1)
    out = []
    rng = np.random.default_rng(cfg.get("seed", 7))
    worst = 0.0
    for _ in range(3):
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(1.1, 1.6))
        Lv, _ = lowering_numeric(ls.evaluate_many, tau)
        f = Th.evaluate(tau)
        worst = max(worst, float(np.max(np.abs(Lv - f)) / np.max(np.abs(f))))
    out.append(Check("L(L#(Theta_D4)) = Theta_D4", 0.0, worst, 1e-2, worst, worst < 1e-2, time.time() - t))
    neg = max(abs(ls.coefficient(m, mu, w)) for mu in range(ls.dim) for m in ls.indices(mu) if m < 0 for w in (1.0, 2.0))
    out.append(Check("kappa_F(m) = 0 for m < 0", 0.0, neg, 1e-2, neg, neg < 1e-2))
    out.append(Check("cusp basis S_4(rho_D4) declared empty", "declared empty", ls.metadata["cuspidal_projection"],
                     0.0, 0.0, ls.metadata["cuspidal_projection"] == "declared empty"))
    return out


def suite_eisenstein(cfg):
    L = fixture("2U")
    rng = np.random.default_rng(cfg.get("seed", 7))
    C = cfg.get("C_eisenstein", 40)
    worst = 0.0
    t = time.time()
    for _ in range(10):
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.5))
        E = Eisenstein(L, 4, 5, C=C).freeze(tau, margin=1.0)
        Lv, _ = lowering_numeric(E, tau)
        rhs = 0.5 * (5 - 3) * E.with_weight(2, 5).evaluate(tau)
        worst = max(worst, float(np.max(np.abs(Lv - rhs)) / np.max(np.abs(rhs))))
    out = [Check("L E_4(s=5) = (s-3)/2 E_2(s=5), 10 samples", 0.0, worst, 1e-6, worst, worst < 1e-6, time.time() - t)]
    q = eisenstein_qseries(4, 40)
    for tau in (0.1 + 1.0j, -0.3 + 1.2j):
        t = time.time()
        E = Eisenstein(L, 4, 3, C=cfg.get("C", 100)).evaluate(tau)[0]
        ser = sum(float(c) * np.exp(2j * math.pi * n * tau) for n, c in enumerate(q))
        c = _check(f"E_4(tau, 3) vs divisor sums at {tau}", ser, E, 1e-6)
        c.seconds = time.time() - t
        out.append(c)
    return out


def _kgr_minus_bgr(L, z1, z2):
    z = h2_point(L, z1, z2)
    k, _ = kudla_green_direct(L, 1, 1.0, 0, z)
    return k - complex(bruinier_green(L, 1, 0, z).value)


def suite_wall(cfg):
    """One-sided limits at z* = (t0, t0) on the wall z1 = z2, moving z1 along a transversal.

    Each limit is extrapolated linearly from distances eps and 2 eps.
    """
    L = fixture("2U")
    t0 = 0.15 + 1.25j
    d = cfg.get("wall_eps", 1e-3) * (1 + 0.5j)
    t = time.time()
    lim = []
    for s in (1, -1):
        a = _kgr_minus_bgr(L, t0 + s * d, t0)
        b = _kgr_minus_bgr(L, t0 + 2 * s * d, t0)
        lim.append(2 * a - b)
    c = _check("KGr(1,1) - BGr(1): one-sided limits across the wall z1 = z2", lim[0], lim[1], 1e-2)
    c.seconds = time.time() - t
    return [c]


def suite_series(cfg):
    L = fixture("2U")
    z = h2_point(L, *GENERIC_H2[0])
    t = time.time()
    res, lhs, rhs, g1, _ = modularity_residual(L, z, 1j, 8)
    return [Check("generating series S-transformation at tau = i, |m| <= 8", _c(rhs), _c(lhs), 1e-2, res,
                  res < 1e-2, time.time() - t)]


def suite_mock(cfg):
    L = fixture("2U")
    out = []
    for a in (1.0 + 0j, 2.0 - 1.0j):
        f0 = holomorphic_expansion(0, False, {0: [a]}, 1)
        t = time.time()
        coeffs, ls = mock_series(f0, L, range(0, 5))
        rng = np.random.default_rng(cfg.get("seed", 7))
        worst, stated = 0.0, 0.0
        for _ in range(5):
            tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(1.1, 2.0))
            x, _ = xi_operator(ls.evaluate_many, 2, tau)
            worst = max(worst, abs(x[0] + a) / abs(a))
            stated = max(stated, abs(x[0] - a) / abs(a))
        out.append(Check(f"xi(L#(-conj f0)) = -f0 for f0 = {a}", _c(-a), stated, 1e-2, worst, worst < 1e-2,
                         time.time() - t))
        drift = 0.0
        for m in range(0, 5):
            cs = []
            for v in (1.0, 2.0, 4.0):
                # -<P_{0,v}, -conj(f0)> = conj(a)/v is the non-holomorphic part
                nonhol = a.conjugate() / v if m == 0 else 0.0
                cs.append(ls.coefficient(m, 0, v) - nonhol)
            drift = max(drift, float(np.ptp(np.real(cs)) + np.ptp(np.imag(cs))))
        out.append(Check(f"mock constant parts v-stable (f0 = {a})", 0.0, drift, 1e-2, drift, drift < 1e-2))
    return out


SUITES = {
    "weilrep": suite_weilrep,
    "slash": suite_slash,
    "unfolding": suite_unfolding,
    "green": suite_green,
    "bruinier": suite_bruinier,
    "lsharp": suite_lsharp,
    "eisenstein": suite_eisenstein,
    "wall": suite_wall,
    "series": suite_series,
    "mock": suite_mock,
}


def run_suite(name, cfg=None):
    cfg = cfg or {}
    if name == "all":
        return [c for n in SUITES for c in SUITES[n](cfg)]
    if name not in SUITES:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))} or all")
    return SUITES[name](cfg)

"""Quadrature on pieces of the standard fundamental domain.

Integrands met here are analytic except across a finite set of circles
(the discontinuity locus |c tau + d|^2 = v / w of truncated Poincare series),
and they can be exponentially large (|q^-m| on F_1).  Accuracy therefore
comes from splitting at every breakpoint exactly rather than from adaptive
refinement: in u the domain is cut at the circle crossings, in v at every
height where the set of crossings changes (tops of circles, pairwise
intersections, meetings with the boundary).  Each piece gets a Gauss-Legendre
rule; in v a smoothstep substitution absorbs the square-root behaviour of
the crossing points at the critical heights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0


@lru_cache(maxsize=None)
def gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gl_interval(a, b, n):
    x, w = gauss_legendre(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def smoothstep_interval(a, b, n):
    """Nodes on [a, b] after v = a + (b-a)(3t^2 - 2t^3); weights include the Jacobian."""
    x, w = gauss_legendre(n)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * w
    s = t * t * (3.0 - 2.0 * t)
    ds = 6.0 * t * (1.0 - t)
    return a + (b - a) * s, (b - a) * ds * wt


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def crossings(self, v):
        dv = v - self.cy
        if abs(dv) >= self.r:
            return ()
        h = math.sqrt(self.r * self.r - dv * dv)
        return (self.cx - h, self.cx + h)


UNIT = Circle(0.0, 0.0, 1.0)


def _circle_pair_heights(c1: Circle, c2: Circle):
    dx, dy = c2.cx - c1.cx, c2.cy - c1.cy
    d = math.hypot(dx, dy)
    if d == 0 or d > c1.r + c2.r or d < abs(c1.r - c2.r):
        return []
    a = (c1.r ** 2 - c2.r ** 2 + d * d) / (2 * d)
    h = math.sqrt(max(c1.r ** 2 - a * a, 0.0))
    ym = c1.cy + a * dy / d
    return [ym + h * dx / d, ym - h * dx / d]


def _circle_line_heights(c: Circle, u0):
    dx = u0 - c.cx
    if abs(dx) > c.r:
        return []
    h = math.sqrt(c.r ** 2 - dx * dx)
    return [c.cy - h, c.cy + h]


def critical_heights(circles, vlo, vhi, with_unit=False, extra=()):
    hs = {vlo, vhi}
    hs.update(x for x in extra if vlo < x < vhi)
    allc = list(circles) + ([UNIT] if with_unit else [])
    for i, c in enumerate(allc):
        hs.update([c.cy - c.r, c.cy + c.r])
        for u0 in (-0.5, 0.5):
            hs.update(_circle_line_heights(c, u0))
        for c2 in allc[i + 1:]:
            hs.update(_circle_pair_heights(c, c2))
    out = sorted(h for h in hs if vlo <= h <= vhi)
    merged = []
    for h in out:
        if not merged or h - merged[-1] > 1e-13:
            merged.append(h)
    return merged


def _u_pieces(v, kind, circles):
    if kind == "F1":
        if v >= 1.0:
            return []
        s = math.sqrt(1.0 - v * v)
        ivals = [(-0.5, -s), (s, 0.5)] if s < 0.5 else []
    else:
        ivals = [(-0.5, 0.5)]
    cuts = sorted(u for c in circles for u in c.crossings(v))
    pieces = []
    for a, b in ivals:
        pts = [a] + [u for u in cuts if a < u < b] + [b]
        pieces.extend((x, y) for x, y in zip(pts[:-1], pts[1:]) if y - x > 1e-15)
    return pieces


def region_nodes(kind, vlo, vhi, circles=(), n_u=20, n_v=20, extra_v=()):
    """Nodes/weights for int du dv / v^2 over the region.

    kind 'F1': {|u| <= 1/2, |tau| >= 1, v <= 1};  kind 'band': {|u| <= 1/2, vlo <= v <= vhi}.
    """
    if kind == "F1":
        vlo, vhi = SQRT3_2, 1.0
    circles = [c for c in circles if c.cy + c.r > vlo and c.cy - c.r < vhi]
    hs = critical_heights(circles, vlo, vhi, with_unit=(kind == "F1"), extra=extra_v)
    taus, wts = [], []
    for a, b in zip(hs[:-1], hs[1:]):
        vs, wv = smoothstep_interval(a, b, n_v)
        for v, w in zip(vs, wv):
            for ua, ub in _u_pieces(v, kind, circles):
                us, wu = gl_interval(ua, ub, n_u)
                taus.append(us + 1j * v)
                wts.append(wu * (w / (v * v)))
    if not taus:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return np.concatenate(taus), np.concatenate(wts)


def integrate_region(func, kind, vlo=None, vhi=None, circles=(), n_u=20, n_v=20, extra_v=(),
                     refine=8):
    """Integral of func(taus) dmu over the region with a two-level error estimate.

    func maps an array of tau to an array (N,) or (N, K).  Returns (value, error).
    """
    results = []
    for nu, nv in ((n_u, n_v), (n_u + refine, n_v + refine)):
        taus, wts = region_nodes(kind, vlo, vhi, circles, nu, nv, extra_v)
        if len(taus) == 0:
            results.append(0.0)
            continue
        vals = np.asarray(func(taus))
        results.append(np.tensordot(wts, vals, axes=(0, 0)))
    hi = results[1]
    err = float(np.max(np.abs(np.asarray(results[1]) - np.asarray(results[0]))))
    return hi, err


def periodic_u_nodes(n):
    """Trapezoid nodes for the u-average over one period."""
    return -0.5 + (np.arange(n) + 0.5) / n

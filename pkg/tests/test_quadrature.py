import math

import numpy as np
from scipy import integrate

from artifact.quadrature import SQRT3_2, Circle, critical_heights, integrate_region, periodic_u_nodes, region_nodes


def test_volume_of_fundamental_domain():
    # vol(F) = pi/3; the part above v = 1 has measure 1
    val, err = integrate_region(lambda t: np.ones(len(t)), "F1")
    assert abs(val - (math.pi / 3 - 1)) < 1e-13 and err < 1e-12
    band, _ = integrate_region(lambda t: np.ones(len(t)), "band", 1.0, 4.0)
    assert abs(band - 0.75) < 1e-14


def test_disc_indicator_is_exact():
    c = Circle(0.1, 1.5, 0.3)
    ind = lambda t: (np.abs(t - (c.cx + 1j * c.cy)) < c.r).astype(float)
    val, _ = integrate_region(ind, "band", 1.0, 2.0, circles=[c])
    ref = integrate.quad(lambda v: 2 * math.sqrt(max(c.r ** 2 - (v - c.cy) ** 2, 0)) / v ** 2,
                         c.cy - c.r, c.cy + c.r, epsabs=1e-14)[0]
    assert abs(val - ref) < 1e-9


def test_two_circles_on_f1():
    cs = [Circle(0.5, 0.5, 0.45), Circle(-0.3, 0.95, 0.2)]
    f = lambda t: np.exp(-t.imag) * (1 + (np.abs(t - 0.5 - 0.5j) < 0.45))
    val, err = integrate_region(f, "F1", circles=cs)

    def inner(v):
        # slice of F1 at height v, and its overlap with the first disc
        s = math.sqrt(1 - v * v)
        ivals = [(-0.5, -s), (s, 0.5)]
        width = sum(b - a for a, b in ivals)
        dv = v - 0.5
        h = math.sqrt(max(0.45 ** 2 - dv * dv, 0.0))
        lo, hi = 0.5 - h, 0.5 + h
        over = sum(max(0.0, min(b, hi) - max(a, lo)) for a, b in ivals)
        return math.exp(-v) * (width + over) / v ** 2

    knots = critical_heights(cs, SQRT3_2, 1.0, with_unit=True)
    ref = sum(integrate.quad(inner, a, b, epsabs=1e-14, limit=200)[0] for a, b in zip(knots[:-1], knots[1:]))
    assert abs(val - ref) < 1e-8 and err < 1e-6


def test_critical_heights_include_intersections():
    hs = critical_heights([Circle(0, 1, 0.5), Circle(0.5, 1, 0.5)], 0.0, 3.0)
    assert any(abs(h - (1 + math.sqrt(0.25 - 0.0625))) < 1e-12 for h in hs)
    assert 0.5 in [round(h, 12) for h in hs] and 1.5 in [round(h, 12) for h in hs]


def test_periodic_nodes_kill_characters():
    u = periodic_u_nodes(16)
    for n in range(1, 16):
        assert abs(np.mean(np.exp(2j * math.pi * n * u))) < 1e-14
    assert len(region_nodes("F1", 0, 0, n_u=4, n_v=4)[0]) > 0

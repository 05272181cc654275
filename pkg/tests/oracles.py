"""Independent reference implementations shared by the tests."""

import math

import numpy as np


def bar_polygons(d, s0, t, beta, bars=range(-1, 1)):
    """Trapezoidal bars (x, z) of a grating whose slit 0 opens on [0, s0] at z = 0.

    Vertices run counter-clockwise.  Bars -1 and 0 flank slit 0 over the full
    depth, so any ray leaving the slit sideways must cross one of them.
    """
    tb = t * math.tan(beta)
    out = []
    for k in bars:
        a, b = s0 + k * d, (k + 1) * d
        out.append(np.array([(a, 0.0), (b, 0.0), (b - tb, t), (a + tb, t)]))
    return out


def _orient(ax, az, bx, bz, cx, cz):
    return (bx - ax) * (cz - az) - (bz - az) * (cx - ax)


def rays_blocked(polys, x0, phi, t):
    """Mask of rays from (x0, 0) to depth t that enter the interior of any bar."""
    x0 = np.asarray(x0, dtype=float)
    x1 = x0 + t * math.tan(phi)
    # sample points of the ray: an endpoint or midpoint strictly inside a bar blocks it
    pts = [(x0, np.zeros_like(x0)), (x1, np.full_like(x0, t)),
           (0.5 * (x0 + x1), np.full_like(x0, 0.5 * t))]
    blocked = np.zeros(x0.shape, dtype=bool)
    for poly in polys:
        n = len(poly)
        for px, pz in pts:
            inside = np.ones(x0.shape, dtype=bool)
            for i in range(n):
                (ax, az), (bx, bz) = poly[i], poly[(i + 1) % n]
                inside &= _orient(ax, az, bx, bz, px, pz) > 0
            blocked |= inside
        for i in range(n):
            (ax, az), (bx, bz) = poly[i], poly[(i + 1) % n]
            d1 = _orient(ax, az, bx, bz, x0, 0.0)
            d2 = _orient(ax, az, bx, bz, x1, t)
            d3 = _orient(x0, 0.0, x1, t, ax, az)
            d4 = _orient(x0, 0.0, x1, t, bx, bz)
            blocked |= (d1 * d2 < 0) & (d3 * d4 < 0)
    return blocked


def transmitted_interval(d, s0, t, beta, phi, n_scan=4096, n_zoom=64, tol=1e-12):
    """Entrance interval of rays passing slit 0, found by ray casting.

    A probe scan across the slit finds passing rays; each edge is then
    located by repeated finer scans of its bracket.  Returns None if no
    probe ray passes.
    """
    polys = bar_polygons(d, s0, t, beta)
    xs = np.linspace(0.0, s0, n_scan + 1)
    ok = np.flatnonzero(~rays_blocked(polys, xs, phi, t))
    if ok.size == 0:
        return None
    h = xs[1] - xs[0]
    edges = []
    for first, step in ((xs[ok[0]], -h), (xs[ok[-1]], h)):
        # 'first' passes; first + step is blocked or lies outside the slit
        inside = first
        while abs(step) > tol * d:
            probe = inside + np.linspace(0.0, step, n_zoom + 1)
            passing = np.flatnonzero(~rays_blocked(polys, probe, phi, t))
            last = passing[-1]  # passing rays form one interval that contains index 0
            inside = probe[last]
            step = step / n_zoom
        edges.append(inside)
    return edges[0], edges[1]

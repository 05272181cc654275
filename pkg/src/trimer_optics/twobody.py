"""s-wave two-body bound states, scattering length and the UPA form factor.

The radial equation u'' = (2mu/hbar^2)(V - E) u is integrated with Numerov's
method on a uniform grid, outward from the origin and inward from the
decaying tail, and the two pieces are matched at the outermost classical
turning point.  States are bracketed by Sturm node counting and polished by
Brent's method on the (bounded) Wronskian mismatch.

Internally lengths are nm and energies mK with hbar = 1; the public
functions take and return SI values, except for :class:`FormFactor`, which
lives in working units because only the three-body solver consumes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from . import _numerov
from .errors import GridTooCoarse, QuadratureNotConverged
from .units import HBAR, MK, NM, hbar2_over_2mu

# WKB attenuation (e-folds) below which the core region is treated as u = 0
_CORE_EFOLDS = 60.0
_REFINE_TOL = 1e-6


@dataclass(frozen=True)
class RadialGrid:
    r_max: float  # m
    N: int

    def __post_init__(self):
        if self.N < 1000:
            raise ValueError("radial grid needs N >= 1000")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @property
    def h(self):
        return self.r_max / self.N

    @property
    def r(self):
        return np.arange(self.N + 1) * self.h

    def refined(self):
        return RadialGrid(self.r_max, 2 * self.N)


@dataclass
class BoundState2B:
    energy: float  # J
    r: np.ndarray  # m
    u: np.ndarray  # m^-1/2, integral u^2 dr = 1
    nodes: int

    @property
    def density(self):
        return self.u**2


class BoundStateList(list):
    """List of bound states; ``subcritical`` is True when the potential binds nothing."""

    def __init__(self, states=(), subcritical=False):
        super().__init__(states)
        self.subcritical = subcritical


def default_grid(potential, mu, e_shallow, points_per_unit=None, margin=15.0):
    """Grid reaching ``margin`` decay lengths beyond the shallowest energy sought.

    The spacing resolves the largest local wave number found in the region
    that is actually integrated (outside the suppressed repulsive core).
    """
    kappa = math.sqrt(2.0 * mu * abs(e_shallow)) / HBAR
    r_max = margin / kappa
    c = hbar2_over_2mu(mu)
    probe = np.linspace(0.0, r_max / NM, 400001)
    v = _potential_mk(potential, probe)
    start = _core_start(v, probe[1] - probe[0], c)
    k_loc = np.sqrt(np.abs(v[start:]) / c)
    k_max = max(float(k_loc.max()), 1.0 / (r_max / NM))
    h = 0.2 / k_max if points_per_unit is None else 1.0 / points_per_unit
    n = max(1000, int(math.ceil(r_max / NM / h)))
    return RadialGrid(r_max, n)


def _potential_mk(potential, r_nm, side=0.0):
    r = r_nm * (1.0 + side * 1e-13) * NM
    return np.asarray(potential.evaluate(r), dtype=float) / MK


def _core_start(v_mk, h, c):
    """Index below which a barrier of _CORE_EFOLDS e-folds separates the core."""
    barrier = np.sqrt(np.clip(v_mk, 0.0, None) / c)
    if barrier[0] == 0.0:
        return 0
    inside = np.argmax(barrier == 0.0) if np.any(barrier == 0.0) else len(barrier) - 1
    efolds = np.cumsum(barrier[inside::-1]) * h
    deep = np.nonzero(efolds > _CORE_EFOLDS)[0]
    if len(deep) == 0:
        return 0
    return max(0, inside - int(deep[0]))


class _Radial:
    """One (potential, mu, grid) problem with cached potential arrays in mK, nm."""

    def __init__(self, potential, mu, grid):
        if not getattr(potential, "local", False):
            raise TypeError(f"{potential.form} potential has no radial representation")
        self.grid = grid
        self.c = hbar2_over_2mu(mu)
        self.h = grid.h / NM
        self.r = grid.r / NM
        # one-sided limits so a step in V can sit exactly on a grid point
        self.v_left = _potential_mk(potential, self.r, side=-1.0)
        self.v_right = _potential_mk(potential, self.r, side=+1.0)
        self.i0 = _core_start(self.v_left, self.h, self.c)
        n = len(self.r)
        self._uo = np.empty(n)
        self._ui = np.empty(n)

    def q(self, e_mk, side):
        v = self.v_left if side < 0 else self.v_right
        return (e_mk - v) / self.c

    def count(self, e_mk):
        """Number of Dirichlet states below e_mk (nodes of the outward solution)."""
        q = self.q(e_mk, -1)
        return _numerov.outward(q, self.h, self.i0, len(q) - 1, self._uo)

    def match_index(self, e_mk):
        allowed = np.nonzero(e_mk - self.v_left >= 0.0)[0]
        m = int(allowed[-1]) if len(allowed) else self.i0 + 3
        return min(max(m, self.i0 + 3), len(self.r) - 4)

    def sweep(self, e_mk):
        """Outward and inward solutions with one-sided derivatives at the match point."""
        m = self.match_index(e_mk)
        h = self.h
        ql = self.q(e_mk, -1)
        qr = self.q(e_mk, +1)
        uo, ui = self._uo, self._ui
        _numerov.outward(ql, h, self.i0, m, uo)
        kappa = math.sqrt(max(-e_mk, 0.0) / self.c)
        _numerov.inward(qr, h, m, kappa, ui)
        do = _left_derivative(ql, uo, m, h)
        fi = -qr[m:m + 4] * ui[m:m + 4]
        di = (ui[m + 1] - ui[m]) / h - h * (97 * fi[0] + 114 * fi[1] - 39 * fi[2] + 8 * fi[3]) / 360.0
        return m, uo[m], do, ui[m], di

    def mismatch(self, e_mk):
        """Bounded Wronskian: sine of the angle between the two solutions at r_m."""
        m, uo, do, ui, di = self.sweep(e_mk)
        scale = self.r[m]
        wr = (do * ui - di * uo) * scale
        return wr / (math.hypot(uo, do * scale) * math.hypot(ui, di * scale))

    def log_derivative_mismatch(self, e_mk):
        m, uo, do, ui, di = self.sweep(e_mk)
        return do / uo - di / ui

    def wavefunction(self, e_mk):
        m, uo_m, _, ui_m, _ = self.sweep(e_mk)
        u = np.empty_like(self.r)
        u[:m + 1] = self._uo[:m + 1] / uo_m
        u[m:] = self._ui[m:] / ui_m
        norm = np.trapezoid(u * u, self.r)
        u /= math.sqrt(norm)
        if u[np.argmax(np.abs(u))] < 0:
            u = -u
        inner = u[1:-1][np.abs(u[1:-1]) > 1e-12 * np.abs(u).max()]
        nodes = int(np.count_nonzero(np.diff(np.sign(inner)) != 0))
        return u, nodes


def _bracket_state(prob, k, lo, hi):
    """Shrink [lo, hi] (mK) until it holds only Dirichlet state k."""
    for _ in range(200):
        if prob.count(lo) == k and prob.count(hi) == k + 1:
            if hi - lo < 1e-3 * abs(hi):
                break
        mid = 0.5 * (lo + hi)
        if prob.count(mid) <= k:
            lo = mid
        else:
            hi = mid
    # the asymptotic root may sit just outside the Dirichlet bracket
    width = hi - lo
    for _ in range(60):
        if prob.mismatch(lo) * prob.mismatch(hi) < 0:
            return lo, hi
        lo -= width
        hi = min(hi + width, 0.5 * hi) if hi < 0 else hi
        width *= 2
    raise GridTooCoarse(f"could not bracket state {k}")


def _solve_on(prob, window_mk, tol):
    lo_e, hi_e = window_mk
    n_lo, n_hi = prob.count(lo_e), prob.count(hi_e)
    energies = []
    for k in range(n_lo, n_hi):
        a, b = _bracket_state(prob, k, lo_e, hi_e)
        energies.append(brentq(prob.mismatch, a, b, xtol=tol * abs(b), rtol=1e-15, maxiter=400))
    return energies


def solve_bound_states(potential, mu, grid=None, window=None, check_refinement=True,
                       tol=1e-10):
    """All s-wave bound states with energies inside ``window`` (J, J).

    Parameters
    ----------
    potential : SquareWell or RepulsionDispersion
    mu : float
        Reduced mass in kg.
    grid : RadialGrid, optional
        Defaults to :func:`default_grid` for the upper window edge.
    window : (float, float)
        Energy window in J, strictly negative.
    check_refinement : bool
        Re-solve on a grid with twice the points and raise
        :class:`GridTooCoarse` if any energy moves by more than 1e-6 relative.

    Returns
    -------
    BoundStateList
        States ordered by energy.  An empty list is valid; its
        ``subcritical`` flag tells whether the potential binds at all.
    """
    if window is None:
        raise ValueError("an energy window is required")
    lo, hi = window
    if not lo < hi < 0:
        raise ValueError("energy window must satisfy lo < hi < 0")
    if grid is None:
        grid = default_grid(potential, mu, hi)
    prob = _Radial(potential, mu, grid)
    window_mk = (lo / MK, hi / MK)
    energies = _solve_on(prob, window_mk, tol)
    if check_refinement and energies:
        fine = _solve_on(_Radial(potential, mu, grid.refined()), window_mk, tol)
        if len(fine) != len(energies):
            raise GridTooCoarse("state count changes under grid refinement")
        for e1, e2 in zip(energies, fine):
            if abs(e1 - e2) > _REFINE_TOL * abs(e2):
                raise GridTooCoarse(f"energy {e1} mK moves to {e2} mK under 2x refinement")
    states = []
    for e in energies:
        u, nodes = prob.wavefunction(e)
        states.append(BoundState2B(e * MK, grid.r.copy(), u / math.sqrt(NM), nodes))
    subcritical = not states and prob.count(0.0) == 0
    return BoundStateList(states, subcritical=subcritical)


def count_bound_states(potential, mu, grid):
    """Nodes of the zero-energy solution: the number of bound s-states."""
    return _Radial(potential, mu, grid).count(0.0)


def log_derivative_mismatch(potential, mu, grid, energy):
    """u'/u (outward) minus u'/u (inward) at the matching point, in 1/m."""
    return _Radial(potential, mu, grid).log_derivative_mismatch(energy / MK) / NM


def _left_derivative(q, u, m, h):
    """u'(r_m) from u[m-1], u[m] and u'' = -q u on four nodes; error O(h^5)."""
    f = -q[m - 3:m + 1] * u[m - 3:m + 1]
    return (u[m] - u[m - 1]) / h + h * (97 * f[3] + 114 * f[2] - 39 * f[1] + 8 * f[0]) / 360.0


def _outward_across_steps(prob, e_mk):
    """Outward solution that carries u and u' across jumps of V at grid nodes.

    Numerov assumes a smooth q; at a step it is stopped, the left-sided
    derivative is taken, and the next point is placed by a Taylor step with
    the right-sided q before the recurrence resumes.
    """
    ql, qr = prob.q(e_mk, -1), prob.q(e_mk, +1)
    h = prob.h
    last = len(ql) - 1
    scale = max(float(np.max(np.abs(ql))), 1e-300)
    jumps = np.nonzero(np.abs(ql - qr) > 1e-9 * scale)[0]
    jumps = jumps[(jumps > prob.i0 + 2) & (jumps < last - 1)]
    u = np.empty_like(ql)
    if len(jumps) == 0:
        _numerov.outward(ql, h, prob.i0, last, u)
        return u
    _numerov.outward(ql, h, prob.i0, int(jumps[0]), u)
    for n, j in enumerate(jumps):
        j = int(j)
        du = _left_derivative(ql, u, j, h)
        a = qr[j]
        u[j + 1] = (u[j] * (1 - a * h**2 / 2 + a * a * h**4 / 24)
                    + du * (h - a * h**3 / 6 + a * a * h**5 / 120))
        stop = int(jumps[n + 1]) if n + 1 < len(jumps) else last
        q = ql.copy()
        q[j] = qr[j]
        _numerov.resume(q, h, j, stop, u)
    return u


def zero_energy_solution(potential, mu, grid):
    prob = _Radial(potential, mu, grid)
    u = _outward_across_steps(prob, 0.0)
    return grid.r, u / np.abs(u).max()


def _fit_scattering_length(potential, mu, grid):
    r, u = zero_energy_solution(potential, mu, grid)
    tail = slice(int(0.9 * len(r)), None)
    slope, intercept = np.polyfit(r[tail] / NM, u[tail], 1)
    return -intercept / slope


def scattering_length(potential, mu, grid, check_refinement=True):
    """Zero-energy scattering length (m) from u ~ (r - a) on the outer 10% of the grid."""
    a = _fit_scattering_length(potential, mu, grid)
    if check_refinement:
        a2 = _fit_scattering_length(potential, mu, grid.refined())
        if abs(a - a2) > _REFINE_TOL * abs(a2):
            raise GridTooCoarse(f"scattering length moves from {a} to {a2} nm under refinement")
    return a * NM


def expectation_energy(potential, mu, r, u):
    """<u|H|u>/<u|u> in J for a trial function sampled on a uniform grid (m)."""
    c = HBAR**2 / (2.0 * mu)
    du = np.gradient(u, r)
    v = np.asarray(potential.evaluate(np.where(r > 0, r, r[1] * 1e-6)), dtype=float)
    return (np.trapezoid(c * du**2 + v * u**2, r)) / np.trapezoid(u**2, r)


@dataclass
class FormFactor:
    """Tabulated separable form factor in working units (p in 1/nm, g in mK nm^1.5).

    ``energy`` (mK) is the two-body binding energy the separable
    interaction is built to reproduce.  Beyond the last node g is taken as 0.
    """

    p: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    energy: float
    mu: float  # kg
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.p, self.values, self.slopes, extrapolate=False)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.nan_to_num(self._spline(p), nan=0.0)

    @property
    def p_max(self):
        return float(self.p[-1])


def _spherical_transform(r, u, p):
    """phi(p) = int u r j0(pr) dr and its p-derivative -int u r^2 j1(pr) dr."""
    out = np.empty(len(p))
    der = np.empty(len(p))
    for start in range(0, len(p), 16):
        pp = p[start:start + 16, None]
        x = pp * r[None, :]
        small = x < 1e-4
        xs = np.where(small, 1.0, x)
        s, c = np.sin(xs), np.cos(xs)
        j0 = np.where(small, 1.0 - x * x / 6.0, s / xs)
        j1 = np.where(small, x / 3.0 - x**3 / 30.0, (s / xs - c) / xs)
        out[start:start + 16] = np.trapezoid(u * r * j0, r, axis=1)
        der[start:start + 16] = -np.trapezoid(u * r * r * j1, r, axis=1)
    return out, der


def momentum_nodes(p_scale, p_max, n=400):
    """Hermite nodes for the form factor: dense near p_scale, reaching p_max."""
    x = np.linspace(-1.0, 1.0, n)
    return p_scale * (1 + x) / (1 - x + 2 * p_scale / p_max)


def upa_form_factor(state, mu, p_grid=None, tol=1e-6):
    """Unitary-pole form factor g(p) = (p^2/2mu + |E_b|) phi(p) of a bound state.

    ``phi(p) = int u(r) sin(pr)/(pr) r dr``.  The r-quadrature starts on a
    subsampled grid and is refined by doubling until no g(p_i) moves by more
    than ``tol`` relative to max|g|.
    """
    c = hbar2_over_2mu(mu)
    e_b = abs(state.energy) / MK
    r = state.r / NM
    u = state.u * math.sqrt(NM)
    if p_grid is None:
        kap = math.sqrt(e_b / c)
        p_grid = momentum_nodes(kap, 200.0)
    p = np.asarray(p_grid, dtype=float)
    keep = np.nonzero(np.abs(u) > 1e-15 * np.abs(u).max())[0]
    lo, hi = max(keep[0] - 1, 0), min(keep[-1] + 2, len(r))
    r, u = r[lo:hi], u[lo:hi]
    stride = 64
    while len(r[::stride]) < 2000 and stride > 1:
        stride //= 2
    prev = None
    while True:
        phi, dphi = _spherical_transform(r[::stride], u[::stride], p)
        g = (c * p**2 + e_b) * phi
        if prev is not None and np.max(np.abs(g - prev)) <= tol * np.max(np.abs(g)):
            break
        if stride == 1:
            if prev is None:
                break
            raise QuadratureNotConverged("form factor transform not converged at full resolution")
        prev = g
        stride //= 2
    dg = 2 * c * p * phi + (c * p**2 + e_b) * dphi
    return FormFactor(p, g, dg, -e_b, mu)


def yamaguchi_wavefunction(kappa, b, r):
    """Normalized u(r) ~ exp(-kappa r) - exp(-b r) (r, kappa, b in consistent units)."""
    u = np.exp(-kappa * r) - np.exp(-b * r)
    norm = 1 / (2 * kappa) + 1 / (2 * b) - 2 / (kappa + b)
    return u / math.sqrt(norm)

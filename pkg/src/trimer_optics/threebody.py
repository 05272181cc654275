"""Momentum-space Faddeev bound states of three identical bosons.

With a rank-one separable pair interaction ``V = |g> lambda <g|`` the
bound-state Faddeev equation collapses to one homogeneous integral
equation for the spectator function F(q)::

    F(q) = 2 tau(E - 3q^2/4m) int d^3q' g(|q'+q/2|) g(|q+q'/2|)
                               / (E - (q^2 + q'^2 + q.q')/m) F(q')

A trimer exists at E when the kernel has eigenvalue 1.  Kernel eigenvalues
increase monotonically as E rises toward threshold, so the number of
eigenvalues above 1 at E counts the trimer states below E.

Units: hbar = 1, momenta in 1/nm, energies in mK.  ``c = hbar^2/m`` (mK nm^2)
carries the mass, so the pair kinetic energy p^2/2mu is ``c p^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh, eigvalsh
from scipy.optimize import brentq

from .errors import MeshNotConverged, NoConvergence, StrengthNotCalibrated
from .units import MK, NM, hbar2_over_2mu


@dataclass(frozen=True)
class YamaguchiFormFactor:
    """g(p) = 1/(p^2 + b^2) with b in 1/nm."""

    b: float
    p_max: float = math.inf

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return 1.0 / (p * p + self.b * self.b)

    def propagator_integral(self, e, c):
        """I(e) = 4 pi int p^2 g^2 / (c p^2 - e) dp in closed form (e <= 0)."""
        b = self.b
        kappa = np.sqrt(-np.asarray(e, dtype=float) / c)
        return math.pi**2 / (c * b * (b + kappa) ** 2)


@lru_cache(maxsize=8)
def _gauss(n):
    return leggauss(n)


def _quadrature_integral(form_factor, e, c, n=400):
    """I(e) by Gauss-Legendre on a rational map of [0, p_max]; e may be an array."""
    e = np.asarray(e, dtype=float)
    p_max = form_factor.p_max
    x, w = _gauss(n)
    p_bar = np.maximum(np.sqrt(np.maximum(-e, 0.0) / c), 1e-3 * p_max)[..., None]
    den = 1 - x + 2 * p_bar / p_max
    p = p_bar * (1 + x) / den
    dp = p_bar * (2 + 2 * p_bar / p_max) / den**2
    g = form_factor(p)
    return 4 * math.pi * np.sum(w * dp * p * p * g * g / (c * p * p - e[..., None]), axis=-1)


class SeparableInteraction:
    """Rank-one separable pair interaction between two atoms of mass ``mass``.

    Parameters
    ----------
    form_factor : callable
        g(p) in working units; an analytic :class:`YamaguchiFormFactor` or a
        tabulated :class:`trimer_optics.twobody.FormFactor`.
    mass : float
        Atomic mass, kg.
    strength : float, optional
        lambda in working units; attractive when negative.
    bound_energy : float, optional
        Two-body energy in J; fixes lambda so that tau has its pole there.
    """

    def __init__(self, form_factor, mass, strength=None, bound_energy=None):
        self.form_factor = form_factor
        self.mass = mass
        self.c = hbar2_over_2mu(mass / 2.0)
        if (strength is None) == (bound_energy is None):
            raise ValueError("give exactly one of strength or bound_energy")
        if bound_energy is not None:
            e_b = bound_energy / MK
            if not e_b < 0:
                raise ValueError("bound energy must be negative")
            strength = -1.0 / self.propagator_integral(e_b)
        self.strength = strength
        self._e_b = None

    @classmethod
    def from_scale(cls, form_factor, mass, scale):
        """Strength ``scale`` times the critical (zero-energy-pole) value."""
        inter = cls(form_factor, mass, strength=-1.0)
        inter.strength = -scale / inter.propagator_integral(0.0)
        return inter

    def propagator_integral(self, e_mk):
        if hasattr(self.form_factor, "propagator_integral"):
            return self.form_factor.propagator_integral(e_mk, self.c)
        return _quadrature_integral(self.form_factor, e_mk, self.c)

    def inverse_tau(self, e_mk):
        """1/tau in working units; zero at the two-body pole."""
        return 1.0 / self.strength + self.propagator_integral(e_mk)

    def tau(self, e_mk):
        return 1.0 / self.inverse_tau(e_mk)

    @property
    def bound_energy(self):
        """Two-body pole (mK), or None when the pair is unbound."""
        if self._e_b is None:
            if self.inverse_tau(0.0) <= 0.0:
                self._e_b = False
            else:
                hi = -1e-300
                lo = -1.0
                while self.inverse_tau(lo) > 0.0:
                    lo *= 10.0
                self._e_b = brentq(self.inverse_tau, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
        return self._e_b if self._e_b is not False else None

    def check_pole(self, tol=1e-8):
        e_b = self.bound_energy
        if e_b is None:
            raise StrengthNotCalibrated("no two-body pole")
        resid = abs(self.inverse_tau(e_b)) * abs(self.strength)
        if resid > tol:
            raise StrengthNotCalibrated(f"pole condition violated by {resid:.3e}")
        return e_b

    def scattering_length(self):
        """a = (2 pi^2 / c) g(0)^2 tau(0), in m."""
        g0 = float(self.form_factor(0.0))
        inv = self.inverse_tau(0.0)
        if inv == 0.0:
            return math.inf
        return 2 * math.pi**2 / self.c * g0 * g0 / inv * NM


def two_body_tau(interaction, e):
    """tau(e) for an energy e in J (working units out)."""
    if not e < 0:
        raise ValueError("tau is evaluated below threshold only")
    return interaction.tau(e / MK)


@dataclass(frozen=True)
class MomentumMesh:
    q: np.ndarray
    w: np.ndarray
    x: np.ndarray  # angular nodes on [-1, 1]
    wx: np.ndarray

    @classmethod
    def rational(cls, n_q, q_bar, q_max, n_theta=32):
        """Gauss-Legendre nodes mapped by q = qb (1+x)/(1 - x + 2 qb/q_max)."""
        if n_q < 40:
            raise ValueError("momentum mesh needs at least 40 nodes")
        x, wx = leggauss(n_q)
        den = 1 - x + 2 * q_bar / q_max
        q = q_bar * (1 + x) / den
        w = wx * q_bar * (2 + 2 * q_bar / q_max) / den**2
        ax, aw = leggauss(n_theta)
        return cls(q, w, ax, aw)

    @property
    def n_q(self):
        return len(self.q)

    def doubled(self, q_bar, q_max):
        return MomentumMesh.rational(2 * self.n_q, q_bar, q_max, len(self.x))


def angular_kernel(form_factor, p, q, e_mk, c, x, wx):
    """Z(p, q; E) = 2 pi int dx g(|q+p/2|) g(|p+q/2|) / (E - c(p^2+q^2+pqx))."""
    p = np.asarray(p, dtype=float)[:, None, None]
    q = np.asarray(q, dtype=float)[None, :, None]
    x = x[None, None, :]
    pq = p * q * x
    g1 = form_factor(np.sqrt(np.maximum(q * q + 0.25 * p * p + pq, 0.0)))
    g2 = form_factor(np.sqrt(np.maximum(p * p + 0.25 * q * q + pq, 0.0)))
    den = e_mk - c * (p * p + q * q + pq)
    return 2 * math.pi * np.sum(wx * g1 * g2 / den, axis=-1)


@dataclass
class FaddeevKernel:
    energy: float  # mK
    K: np.ndarray
    S: np.ndarray  # symmetrized, same spectrum as K
    tau: np.ndarray
    transform: np.ndarray  # F = transform * (S eigenvector)


def build_kernel(interaction, e_mk, mesh):
    """Kernel K_ij = 2 w_j q_j^2 tau(E - 3 c q_i^2/4) Z(q_i, q_j; E) at E (mK)."""
    if not e_mk < 0:
        raise ValueError("kernel energy must be negative")
    c = interaction.c
    q, w = mesh.q, mesh.w
    z = angular_kernel(interaction.form_factor, q, q, e_mk, c, mesh.x, mesh.wx)
    z = 0.5 * (z + z.T)
    tau = interaction.tau(e_mk - 0.75 * c * q * q)
    if np.any(tau >= 0) or not np.all(np.isfinite(tau)):
        raise ValueError("energy at or above the atom-dimer threshold")
    K = 2.0 * tau[:, None] * z * (w * q * q)[None, :]
    ab = np.sqrt(-tau) * np.sqrt(w) * q
    S = -2.0 * ab[:, None] * z * ab[None, :]
    return FaddeevKernel(e_mk, K, S, tau, np.sqrt(-tau) / (np.sqrt(w) * q))


def _power(mat, shift, max_iter, tol, rng):
    v = rng.standard_normal(mat.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        mv = mat @ v - shift * v
        lam = float(v @ mv)
        resid = np.linalg.norm(mv - lam * v)
        if resid <= tol * max(abs(lam), 1e-300):
            return lam + shift, v
        v = mv / np.linalg.norm(mv)
    raise NoConvergence(f"power iteration stalled after {max_iter} steps")


def leading_eigenvalue(kernel, max_iter=200000, tol=1e-10, seed=0):
    """Largest eigenvalue of the kernel by power iteration.

    Power iteration finds the dominant-magnitude eigenvalue; if that one is
    negative the iteration is repeated on the shifted matrix S - lambda_neg,
    whose dominant eigenvalue is then the largest algebraic one.
    """
    rng = np.random.default_rng(seed)
    lam, v = _power(kernel.S, 0.0, max_iter, tol, rng)
    if lam < 0:
        lam, v = _power(kernel.S, lam, max_iter, tol, rng)
    return lam


def eigenvalues(kernel):
    """Dense spectrum of the symmetrized kernel, descending."""
    return eigvalsh(kernel.S)[::-1]


@dataclass
class TrimerState:
    energy: float  # J
    q: np.ndarray  # 1/m
    psi: np.ndarray  # m^1.5, integral psi^2 q^2 dq = 1
    nodes: int  # below the first sign change of the form factor
    total_nodes: int


@dataclass
class TrimerSpectrum:
    states: list = field(default_factory=list)
    curve: list = field(default_factory=list)  # (E in J, lambda_max)
    dimer_energy: float | None = None  # J

    @property
    def E0(self):
        return self.states[0].energy if self.states else None

    @property
    def E1(self):
        return self.states[1].energy if len(self.states) > 1 else None


def _upper_edge(interaction, e_hi):
    e_b = interaction.bound_energy
    if e_b is not None:
        e_hi = min(e_hi, e_b * (1 + 1e-9))
    return e_hi


def count_states(interaction, e_mk, mesh):
    """Trimer states below e_mk: eigenvalues of the kernel at or above 1."""
    return int(np.count_nonzero(eigenvalues(build_kernel(interaction, e_mk, mesh)) >= 1.0))


def _sign_changes(f):
    return int(np.count_nonzero(np.diff(np.sign(f)) != 0))


def _spectator_function(kernel, k, mesh, form_factor):
    """Normalized F(q) of state k with (low-momentum, total) node counts.

    Where g(p) changes sign (the two-body core), F inherits extra high-q
    nodes; the low-momentum count stops at the first zero of g.
    """
    vals, vecs = eigh(kernel.S)
    order = np.argsort(vals)[::-1]
    f = kernel.transform * vecs[:, order[k]]
    norm = math.sqrt(np.sum(mesh.w * mesh.q**2 * f**2))
    f /= norm
    if f[np.argmax(np.abs(f))] < 0:
        f = -f
    big = np.abs(f) > 1e-8 * np.abs(f).max()
    g = form_factor(mesh.q)
    flips = np.nonzero(np.diff(np.sign(g)) != 0)[0]
    low = mesh.q <= mesh.q[flips[0]] if flips.size else np.ones(mesh.q.size, dtype=bool)
    return f, _sign_changes(f[big & low]), _sign_changes(f[big])


def find_trimer_states(interaction, window, mesh, tol=1e-8, curve_points=0):
    """All trimer energies inside ``window`` = (E_lo, E_hi) in J.

    The upper edge is clipped just below the two-body pole when the pair is
    bound.  Each state E_k is the root of lambda_k(E) = 1, where lambda_k is
    the k-th largest kernel eigenvalue; roots are found by Brent's method.
    """
    lo, hi = (e / MK for e in window)
    if not lo < hi < 0:
        raise ValueError("window must satisfy lo < hi < 0")
    hi = _upper_edge(interaction, hi)
    e_b = interaction.bound_energy
    spectrum = TrimerSpectrum(dimer_energy=None if e_b is None else e_b * MK)
    if not lo < hi:
        return spectrum
    n_lo = count_states(interaction, lo, mesh)
    n_hi = count_states(interaction, hi, mesh)

    def lam(e, k):
        return eigenvalues(build_kernel(interaction, e, mesh))[k] - 1.0

    # deepest state is the one with the most eigenvalues above 1 beneath it
    for k in reversed(range(n_lo, n_hi)):
        e = brentq(lam, lo, hi, args=(k,), xtol=tol * abs(hi), rtol=tol, maxiter=300)
        kern = build_kernel(interaction, e, mesh)
        f, nodes, total = _spectator_function(kern, k, mesh, interaction.form_factor)
        spectrum.states.append(TrimerState(e * MK, mesh.q / NM, f * NM**1.5, nodes, total))
    spectrum.states.sort(key=lambda s: s.energy)
    if curve_points:
        for e in np.linspace(lo, hi, curve_points):
            spectrum.curve.append((e * MK, float(eigenvalues(build_kernel(interaction, e, mesh))[0])))
    return spectrum


def check_mesh_convergence(interaction, e, mesh, q_bar, q_max, tol=1e-6):
    """Raise MeshNotConverged if doubling N_q moves lambda_max by more than tol."""
    e_mk = e / MK
    l1 = eigenvalues(build_kernel(interaction, e_mk, mesh))[0]
    l2 = eigenvalues(build_kernel(interaction, e_mk, mesh.doubled(q_bar, q_max)))[0]
    if abs(l1 - l2) > tol * abs(l2):
        raise MeshNotConverged(f"lambda_max moves from {l1} to {l2} under mesh doubling")
    return l2


def efimov_root(lo=0.5, hi=1.5):
    """s0 solving 8 sinh(pi s/6) / (sqrt(3) s cosh(pi s/2)) = 1."""
    def f(s):
        return 8 * math.sinh(math.pi * s / 6) / (math.sqrt(3) * s * math.cosh(math.pi * s / 2)) - 1
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)


def efimov_ratio():
    return math.exp(2 * math.pi / efimov_root())


@dataclass
class EfimovPoint:
    scale: float
    scattering_length: float  # m
    dimer_energy: float | None  # J
    energies: list  # J, deepest first


def efimov_diagnostics(form_factor, mass, scales, mesh, window):
    """Trimer spectrum along a strength scan ``scales`` (multiples of critical strength)."""
    out = []
    for s in scales:
        inter = SeparableInteraction.from_scale(form_factor, mass, s)
        spec = find_trimer_states(inter, window, mesh)
        out.append(EfimovPoint(s, inter.scattering_length(), spec.dimer_energy,
                               [st.energy for st in spec.states]))
    return out


def shallow_ratio(energies):
    """Ratio of the two shallowest binding energies, E_{n-1}/E_n."""
    if len(energies) < 2:
        return None
    e = sorted(energies)
    return e[-2] / e[-1]


def spectator_density(state):
    """Spectator-momentum density |psi(q)|^2 q^2 (not a hyperradial density)."""
    return state.psi**2 * state.q**2

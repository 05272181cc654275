"""Fraunhofer diffraction patterns of elastic and inelastic channels.

For an infinite grating of projected period D = d cos(phi') the outgoing
wave is a sum of discrete orders.  Order n carries the lattice momentum
2 pi n / D across the beam, and its intensity fraction of the incident flux is

    I_n = | (1/D) int_0^s_eff a(x) exp(-2 pi i n x / D) dx |^2,

with a = tau for the elastic channel.  By Bessel's inequality the summed
intensity never exceeds (1/D) int |a|^2 dx, which for a pure aperture is the
geometric transmission s_eff/D.

The internal excitation uses an edge-localized phenomenological amplitude

    a(x) = eta xi(L_wall) [exp(-x/w) + exp(-(s_eff - x)/w)] tau(x),
    xi = 1 + c_g L_wall / t,

where L_wall is the grazing exposure of the shadowing wall
(:func:`trimer_optics.grating.grazing_length`).  Excitation orders sit at the
angles of the inelastic diffraction law with the stretched wavelength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import kinematics as kin
from .beam import SourceModel, beam_kinematics, speed_distribution
from .errors import ClosedSlit
from .grating import GratingGeometry, grazing_length, project_slit, slit_transmission_function
from .potentials import SurfaceInteraction

_CHUNK = 128
MAX_PHASE_STEP = 0.25  # rad between neighbouring transmitted samples
_MAX_POINTS = 1 << 22


@dataclass(frozen=True)
class ExcitationModel:
    """Edge-localized excitation amplitude: eta * xi(L_wall) within w of each edge.

    The defaults are illustrative stand-ins, not measured values.  c_g sets
    how strongly wall grazing enhances the yield.
    """

    eta: float = 0.05
    w: float = 2e-9
    c_g: float = 0.5

    def __post_init__(self):
        if self.eta < 0 or not self.w > 0 or self.c_g < 0:
            raise ValueError("need eta >= 0, w > 0, c_g >= 0")

    def xi(self, L_wall, t):
        return 1.0 + self.c_g * L_wall / t


@dataclass
class DiffractionPattern:
    channel: str
    phi_prime: float
    wavelength: float  # outgoing, m
    orders: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    intensities: np.ndarray = field(default_factory=lambda: np.zeros(0))
    closed: bool = False

    @property
    def total(self):
        return float(np.sum(self.intensities))

    def rows(self):
        return list(zip(self.orders.tolist(), self.angles.tolist(), self.intensities.tolist()))

    def intensity(self, n):
        idx = np.flatnonzero(self.orders == n)
        return float(self.intensities[idx[0]]) if idx.size else 0.0


def require_open(pattern: DiffractionPattern) -> DiffractionPattern:
    if pattern.closed:
        raise ClosedSlit(f"slit closed at phi' = {math.degrees(pattern.phi_prime):.6g} deg")
    return pattern


def _segment_weights(theta):
    """A = int_0^1 (1-u) e^{-i theta u} du and B = int_0^1 u e^{-i theta u} du."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1e-2
    th = np.where(small, 1.0, theta)
    e = np.exp(-1j * th)
    e0 = (1 - e) / (1j * th)
    b = 1j * e / th + (e - 1) / th**2
    # Taylor series: int_0^1 u^m e^{-i t u} du = sum_k (-i t)^k / (k! (k + m + 1))
    z = -1j * theta
    e0s = np.zeros_like(z)
    bs = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(8):
        e0s += term / (k + 1)
        bs += term / (k + 2)
        term = term * z / (k + 1)
    e0 = np.where(small, e0s, e0)
    b = np.where(small, bs, b)
    return e0 - b, b


def fourier_integrals(x, f, kappa):
    """int f(x) exp(-i kappa x) dx for piecewise-linear f on a uniform grid ``x``.

    Exact for the linear interpolant, so no oscillation error for any kappa.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=complex)
    kappa = np.asarray(kappa, dtype=float)
    h = x[1] - x[0]
    out = np.empty(kappa.shape, dtype=complex)
    for start in range(0, kappa.size, _CHUNK):
        k = kappa[start:start + _CHUNK]
        phase = np.exp(-1j * np.outer(k, x))
        full = phase @ f
        s0 = full - f[-1] * phase[:, -1]
        s1 = full - f[0] * phase[:, 0]
        a, b = _segment_weights(k * h)
        out[start:start + _CHUNK] = h * (a * s0 + b * np.exp(1j * k * h) * s1)
    return out


def lattice_grid(s_eff, period, n_points):
    """Sample points 0, D/K, 2D/K, ... on [0, s_eff], closed by s_eff itself.

    The spacing divides the period, so the order sums of
    :func:`order_coefficients` become one length-K FFT.
    """
    k = max(int(math.ceil(n_points * period / s_eff)), 2)
    h = period / k
    n_full = int(math.floor(s_eff / h * (1 + 1e-12)))
    x = np.arange(n_full + 1) * h
    if s_eff - x[-1] > 1e-9 * h:
        x = np.append(x, s_eff)
    else:
        x[-1] = s_eff
    return x, k


def order_coefficients(x, f, period, k, orders):
    """c_n = (1/D) int f exp(-2 pi i n x / D) dx on a :func:`lattice_grid`.

    Exact for the piecewise-linear interpolant of f, like
    :func:`fourier_integrals`, but all orders come from a single FFT.
    """
    orders = np.asarray(orders, dtype=int)
    f = np.asarray(f, dtype=complex)
    h = period / k
    partial = abs((x[-1] - x[-2]) - h) > 1e-9 * h
    n_full = x.size - 2 if partial else x.size - 1
    g0 = np.zeros(k, dtype=complex)
    g1 = np.zeros(k, dtype=complex)
    g0[:n_full] = f[:n_full]
    # a grid spanning the whole period wraps its last node onto index 0
    np.add.at(g1, np.arange(1, n_full + 1) % k, f[1:n_full + 1])
    s0 = np.fft.fft(g0)[orders % k]
    s1 = np.fft.fft(g1)[orders % k]
    theta = 2 * math.pi * orders / k
    a, b = _segment_weights(theta)
    total = h * (a * s0 + b * np.exp(1j * theta) * s1)
    if partial:
        kappa = 2 * math.pi * orders / period
        hp = x[-1] - x[-2]
        a, b = _segment_weights(kappa * hp)
        total += hp * np.exp(-1j * kappa * x[-2]) * (f[-2] * a + f[-1] * b)
    return total / period


def order_intensities(x, amplitude, period, orders):
    """|c_n|^2 with c_n = (1/D) int a(x) exp(-2 pi i n x / D) dx (any uniform grid)."""
    orders = np.asarray(orders)
    c = fourier_integrals(x, amplitude, 2 * math.pi * orders / period) / period
    return np.abs(c) ** 2


def _angles(orders, phi_prime, lam_prime, lam, d):
    return np.array([kin.diffraction_angle(int(n), phi_prime, lam_prime, lam, d) for n in orders])


def _max_phase_step(st):
    open_ = st.tau != 0
    both = open_[1:] & open_[:-1]
    if not np.any(both):
        return 0.0
    return float(np.max(np.abs(np.diff(st.phase))[both]))


def _resolved_transmission(geom, surface, speed, phi_prime, s_eff, period, n_points, phi_max):
    """Slit transmission on a lattice grid fine enough to follow the eikonal phase.

    Near the walls the phase steepens like 1/l^3; the grid is refined until
    no step between transmitted neighbours exceeds ``MAX_PHASE_STEP``.
    """
    n = n_points
    while True:
        x, k = lattice_grid(s_eff, period, n)
        st = slit_transmission_function(geom, surface, speed, phi_prime, phi_max=phi_max, x=x)
        step = _max_phase_step(st)
        if step <= MAX_PHASE_STEP or n >= _MAX_POINTS:
            return st, k
        n = min(_MAX_POINTS, int(math.ceil(n * 1.1 * step / MAX_PHASE_STEP)))


def _pattern(channel, beam, geom, phi_prime, lam, amplitude_fn, surface, orders, n_points, phi_max):
    proj = project_slit(geom, phi_prime)
    if proj.closed:
        return DiffractionPattern(channel, phi_prime, lam, closed=True)
    allowed = kin.allowed_orders(phi_prime, beam.wavelength, lam, geom.d)
    if orders is None:
        n = np.arange(allowed.start, allowed.stop)
    else:
        n = np.array([k for k in orders if k in allowed], dtype=int)
    period = geom.d * math.cos(phi_prime)
    st, k = _resolved_transmission(geom, surface, beam.speed, phi_prime, proj.s_eff, period,
                                   n_points, phi_max)
    x = st.x
    inten = np.abs(order_coefficients(x, amplitude_fn(st), period, k, n)) ** 2
    return DiffractionPattern(channel, phi_prime, lam, n,
                              _angles(n, phi_prime, beam.wavelength, lam, geom.d), inten)


def elastic_pattern(beam: kin.BeamKinematics, geom: GratingGeometry, surface: SurfaceInteraction,
                    phi_prime: float, orders=None, n_points: int = 16384,
                    phi_max: float = 20 * math.pi) -> DiffractionPattern:
    """Elastic orders; an empty pattern flagged ``closed`` if the slit is shut."""
    return _pattern("elastic", beam, geom, phi_prime, beam.wavelength, lambda st: st.tau,
                    surface, orders, n_points, phi_max)


def excitation_amplitude(st, model: ExcitationModel, geom: GratingGeometry):
    s = st.projection.s_eff
    L = grazing_length(geom, st.projection.phi_prime, model.w)
    edge = np.exp(-st.x / model.w) + np.exp(-(s - st.x) / model.w)
    return model.eta * model.xi(L, geom.t) * edge * st.tau


def excitation_pattern(beam: kin.BeamKinematics, geom: GratingGeometry, surface: SurfaceInteraction,
                       phi_prime: float, channel: kin.InternalChannel, model: ExcitationModel,
                       orders=None, n_points: int = 16384,
                       phi_max: float = 20 * math.pi) -> DiffractionPattern:
    """Inelastic side peaks at the stretched-wavelength angles."""
    lam = kin.final_wavelength(beam, channel)
    return _pattern("excitation", beam, geom, phi_prime, lam,
                    lambda st: excitation_amplitude(st, model, geom),
                    surface, orders, n_points, phi_max)


def total_transmission(beam, geom, surface, phi_scan, channel: kin.InternalChannel,
                       model: ExcitationModel | None = None, include_vdw: bool = True,
                       n_points: int = 16384):
    """[(phi', sum_n I_n)] over ``phi_scan`` for one channel."""
    if not include_vdw:
        surface = SurfaceInteraction(0.0, surface.l_min)
    out = []
    for phi in phi_scan:
        if channel.delta_E == 0:
            pat = elastic_pattern(beam, geom, surface, phi, n_points=n_points)
        else:
            pat = excitation_pattern(beam, geom, surface, phi, channel, model, n_points=n_points)
        out.append((float(phi), pat.total))
    return out


@dataclass
class SmearedSpectrum:
    phi: np.ndarray  # bin centres, rad
    intensity: np.ndarray  # per radian
    flux: float  # sum over channels, orders and speeds of f I_n

    @property
    def bin_width(self):
        return self.phi[1] - self.phi[0]

    def integral(self):
        return float(np.sum(self.intensity) * self.bin_width)


def convolve_with_beam(source: SourceModel, geom: GratingGeometry, surface: SurfaceInteraction,
                       phi_prime: float, channels, sigma_res: float, phi_grid,
                       model: ExcitationModel | None = None, orders=None,
                       n_speeds: int = 16, n_points: int = 4096) -> SmearedSpectrum:
    """Speed-averaged angular spectrum with Gaussian resolution ``sigma_res``.

    ``phi_grid`` gives uniformly spaced bin centres.  Each stick of weight
    f(v) I_n(v) is spread by integrating the Gaussian over every bin, so the
    binned spectrum carries exactly the stick flux that lands on the grid.
    With ``n_speeds = 1`` the beam is monochromatic at the mean speed.
    """
    if sigma_res < 0:
        raise ValueError("angular resolution must be non-negative")
    phi_grid = np.asarray(phi_grid, dtype=float)
    width = phi_grid[1] - phi_grid[0]
    edges = np.concatenate([phi_grid - 0.5 * width, [phi_grid[-1] + 0.5 * width]])
    if n_speeds == 1:
        speeds, weights = np.array([source.mean_speed]), np.array([1.0])
    else:
        speeds, weights = speed_distribution(source).nodes(n_speeds)
    hist = np.zeros(phi_grid.size)
    flux = 0.0
    for v, fw in zip(speeds, weights):
        beam = beam_kinematics(source, v)
        for ch in channels:
            if ch.delta_E == 0:
                pat = elastic_pattern(beam, geom, surface, phi_prime, orders, n_points)
            else:
                pat = excitation_pattern(beam, geom, surface, phi_prime, ch, model, orders, n_points)
            for phi_n, i_n in zip(pat.angles, pat.intensities):
                weight = fw * i_n
                flux += weight
                if sigma_res == 0:
                    k = int(np.searchsorted(edges, phi_n, side="right")) - 1
                    if 0 <= k < hist.size:
                        hist[k] += weight
                else:
                    cdf = ndtr((edges - phi_n) / sigma_res)
                    hist += weight * np.diff(cdf)
    return SmearedSpectrum(phi_grid, hist / width, flux)

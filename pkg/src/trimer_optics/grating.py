"""Trapezoidal-bar transmission grating.

Cross section (beam travels along +z, bars extend over 0 <= z <= t)::

        X=0        X=s0
    ----+          +--------   z = 0   (narrow face, slit width s0)
         \\        /
          \\      /   walls open outward at the wedge angle beta
    -------+    +----------   z = t

At depth z the slit spans ``-z tan(beta) <= X <= s0 + z tan(beta)``.  Bars
repeat with period d; the exit face of each bar is d - s0 - 2 t tan(beta)
wide, which must stay positive.

A straight ray X(z) = X0 + z tan(phi') passes the slit only if it stays
inside the opening at every depth.  Both bounds are linear in z, so each
binds at z = 0 or at z = t.  The entrance interval of passing rays shrinks by
t max(0, tan|phi'| - tan beta) on the shadowed side, and the width measured
perpendicular to the beam is

    s_eff = max(0, s0 - t max(0, tan|phi'| - tan beta)) cos(phi').

Shadowing starts at phi' = beta and the slit closes at
tan(phi_c) = s0/t + tan(beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import SurfaceInteraction
from .units import HBAR


@dataclass(frozen=True)
class GratingGeometry:
    """Period ``d``, narrow-face slit ``s0``, thickness ``t`` (m), wedge angle ``beta`` (rad)."""

    d: float = 100e-9
    s0: float = 60e-9
    t: float = 120e-9
    beta: float = math.radians(9.0)

    def __post_init__(self):
        if not 0 < self.s0 < self.d:
            raise ValueError("slit width must satisfy 0 < s0 < d")
        if not self.t > 0:
            raise ValueError("bar thickness must be positive")
        if not 0 <= self.beta < math.pi / 2:
            raise ValueError("wedge angle must lie in [0, pi/2)")
        if not self.exit_bar_width > 0:
            raise ValueError("bars merge: d - s0 - 2 t tan(beta) must be positive")

    @property
    def exit_bar_width(self):
        return self.d - self.s0 - 2 * self.t * math.tan(self.beta)

    @property
    def closure_angle(self):
        return math.atan(self.s0 / self.t + math.tan(self.beta))


@dataclass(frozen=True)
class SlitProjection:
    phi_prime: float
    x0_min: float  # entrance-face interval of transmitted rays, m
    x0_max: float
    s_eff: float  # width perpendicular to the beam, m
    L_wall: float  # grazing exposure of the shadowing wall, m
    closed: bool


def _entrance_interval(geom, phi_prime):
    tp, tb = math.tan(phi_prime), math.tan(geom.beta)
    lo = max(0.0, geom.t * (-tp - tb))
    hi = min(geom.s0, geom.s0 + geom.t * (tb - tp))
    return lo, hi


def grazing_length(geom: GratingGeometry, phi_prime: float, w: float) -> float:
    """Length of the grazed wall lying within ``w`` of a transmitted ray.

    A ray crossing a wall face of length t/cos(beta) at relative angle
    ``phi' - beta`` stays within distance w of it over w/|sin(phi' - beta)|;
    the two limits are joined smoothly so the exposure peaks exactly at
    phi' = beta.  The wall facing the beam's lateral drift is the grazed one,
    so the result depends on |phi'| only.
    """
    face = geom.t / math.cos(geom.beta)
    rel = math.sin(abs(phi_prime) - geom.beta)
    return face / math.sqrt(1.0 + (face * rel / w) ** 2)


def project_slit(geom: GratingGeometry, phi_prime: float, w: float = 2e-9) -> SlitProjection:
    """Straight-ray shadowing of the slit at incidence ``phi_prime``."""
    if not abs(phi_prime) < math.pi / 2:
        raise ValueError("incidence must satisfy |phi'| < pi/2")
    lo, hi = _entrance_interval(geom, phi_prime)
    width = max(0.0, hi - lo)
    s_eff = width * math.cos(phi_prime)
    closed = s_eff == 0.0
    return SlitProjection(phi_prime, lo, max(hi, lo), s_eff,
                          0.0 if closed else grazing_length(geom, phi_prime, w), closed)


def geometric_transmission(geom: GratingGeometry, phi_prime: float) -> float:
    """Open fraction of the projected period, s_eff / (d cos phi')."""
    return project_slit(geom, phi_prime).s_eff / (geom.d * math.cos(phi_prime))


def _inverse_cube_integral(a, b, length, l_min):
    """int_0^length dz / max(a + b z, l_min)^3 for arrays a (start) and scalar slope b."""
    a = np.asarray(a, dtype=float)
    end = a + b * length
    if b == 0.0:
        return length / np.maximum(a, l_min) ** 3
    # split the path where the distance crosses l_min
    lo = np.minimum(a, end)
    hi = np.maximum(a, end)
    lo_c = np.maximum(lo, l_min)
    hi_c = np.maximum(hi, l_min)
    free = (1.0 / lo_c**2 - 1.0 / hi_c**2) / (2.0 * abs(b))
    clamped = (np.minimum(hi, l_min) - np.minimum(lo, l_min)) / abs(b) / l_min**3
    return free + clamped


def vdw_phase(geom: GratingGeometry, surface: SurfaceInteraction, speed: float,
              phi_prime: float, x0) -> np.ndarray:
    """Eikonal phase -(1/hbar v) int V ds for rays entering at X0 = ``x0``.

    Both walls contribute -C3/l^3 with l the perpendicular distance to the
    wall plane, clamped at l_min.  Along a ray the distance to each wall is
    linear in z, so the path integral is done in closed form.
    """
    x0 = np.asarray(x0, dtype=float)
    tp, tb, cb = math.tan(phi_prime), math.tan(geom.beta), math.cos(geom.beta)
    left = _inverse_cube_integral(x0 * cb, (tp + tb) * cb, geom.t, surface.l_min)
    right = _inverse_cube_integral((geom.s0 - x0) * cb, (tb - tp) * cb, geom.t, surface.l_min)
    return surface.C3 * (left + right) / (HBAR * speed * math.cos(phi_prime))


@dataclass(frozen=True)
class SlitTransmission:
    """tau(x) on ``x`` in [0, s_eff] (projected coordinate, m); zero at absorbed points.

    ``phase`` is the eikonal phase before the opacity cut.
    """

    x: np.ndarray
    tau: np.ndarray
    projection: SlitProjection
    phase: np.ndarray


def slit_transmission_function(geom: GratingGeometry, surface: SurfaceInteraction, speed: float,
                               phi_prime: float, n_points: int = 8192,
                               phi_max: float = 20 * math.pi, x=None) -> SlitTransmission:
    """Complex transmission exp(i phi_vdW) across the projected slit.

    Sampled on ``n_points`` uniform points, or on the points ``x`` in
    [0, s_eff] if given.  Points whose phase magnitude exceeds ``phi_max``
    are treated as absorbed.
    """
    proj = project_slit(geom, phi_prime)
    if proj.closed:
        raise ValueError("slit is closed at this incidence")
    if x is None:
        x = np.linspace(0.0, proj.s_eff, n_points)
    x = np.asarray(x, dtype=float)
    n_points = x.size
    x0 = proj.x0_min + x / math.cos(phi_prime)
    if surface.C3 == 0:
        phase = np.zeros(n_points)
        tau = np.ones(n_points, dtype=complex)
    else:
        phase = vdw_phase(geom, surface, speed, phi_prime, x0)
        tau = np.where(np.abs(phase) > phi_max, 0.0, np.exp(1j * phase))
    return SlitTransmission(x, tau, proj, phase)

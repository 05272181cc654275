"""Kinematics of inelastic diffraction from a transmission grating.

A molecule of mass M arrives with wavelength lam' at incidence phi' (measured
from the grating normal).  If its internal energy rises by dE while passing
the grating, energy conservation stretches the outgoing wavelength to

    lam = lam' / sqrt(1 - dE/E'kin),

and conservation of the momentum component along the grating, up to a
reciprocal lattice vector 2 pi hbar / d, gives the diffraction law

    sin(phi_n) = (lam/lam') sin(phi') + n lam/d.

The n = 0 angle alone is a refraction ("Snell") step; the n-dependent term is
ordinary grating diffraction at the new wavelength.  Positive n deflects
toward positive angles.  Angles are radians and energies joules throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ChannelClosed, DegenerateIncidence, EvanescentOrder, TotalReflection
from .units import HBAR, H_PLANCK


@dataclass(frozen=True)
class BeamKinematics:
    """Monochromatic incident beam of molecules with mass ``mass`` and speed ``speed``."""

    mass: float
    speed: float

    def __post_init__(self):
        if not (self.mass > 0 and self.speed > 0):
            raise ValueError("beam mass and speed must be positive")

    @property
    def momentum(self):
        return self.mass * self.speed

    @property
    def wavelength(self):
        return H_PLANCK / self.momentum

    @property
    def kinetic_energy(self):
        return 0.5 * self.mass * self.speed**2


@dataclass(frozen=True)
class InternalChannel:
    label: str  # "elastic" or "excitation"
    E_initial: float
    E_final: float

    def __post_init__(self):
        if self.label not in ("elastic", "excitation"):
            raise ValueError(f"unknown channel label {self.label!r}")
        if self.label == "elastic" and self.delta_E != 0:
            raise ValueError("elastic channel must have delta_E = 0")
        if self.label == "excitation" and not self.delta_E > 0:
            raise ValueError("excitation channel needs delta_E > 0")

    @property
    def delta_E(self):
        return self.E_final - self.E_initial

    @classmethod
    def elastic(cls, energy=0.0):
        return cls("elastic", energy, energy)

    @classmethod
    def excitation(cls, delta_E, E_initial=0.0):
        return cls("excitation", E_initial, E_initial + delta_E)


@dataclass(frozen=True)
class DiffractionOrder:
    n: int
    angle: float
    parallel_momentum: float


def wavelength_ratio(delta_E, kinetic_energy):
    """lam/lam' for an internal energy gain ``delta_E``."""
    x = delta_E / kinetic_energy
    if x >= 1.0:
        raise ChannelClosed(f"delta_E = {delta_E:.6g} J leaves no outgoing momentum "
                            f"(E'kin = {kinetic_energy:.6g} J)")
    if delta_E == 0:
        return 1.0
    return 1.0 / math.sqrt(1.0 - x)


def final_wavelength(beam: BeamKinematics, channel: InternalChannel) -> float:
    """Outgoing de Broglie wavelength after the internal transition."""
    if channel.delta_E == 0:
        return beam.wavelength
    return beam.wavelength * wavelength_ratio(channel.delta_E, beam.kinetic_energy)


def _order_sine(n, phi_prime, lam_prime, lam, d):
    return (lam / lam_prime) * math.sin(phi_prime) + n * lam / d


def diffraction_angle(n: int, phi_prime: float, lam_prime: float, lam: float, d: float) -> float:
    """Outgoing angle of order ``n``; raises EvanescentOrder if it does not propagate."""
    if not (d > 0 and lam > 0 and lam_prime > 0):
        raise ValueError("d, lam and lam' must be positive")
    s = _order_sine(n, phi_prime, lam_prime, lam, d)
    if abs(s) > 1.0:
        raise EvanescentOrder(f"order {n} is evanescent (sin = {s:.6g})")
    return math.asin(s)


def classical_grating_angle(n: int, phi_prime: float, lam: float, d: float) -> float:
    """sin(phi_n) = sin(phi') + n lam/d, the equal-wavelength special case."""
    return diffraction_angle(n, phi_prime, lam, lam, d)


def snell_angle(phi_prime: float, lam_prime: float, lam: float) -> float:
    """Zeroth-order (refracted) angle: sin(phi_0) = (lam/lam') sin(phi')."""
    s = (lam / lam_prime) * math.sin(phi_prime)
    if abs(s) > 1.0:
        raise TotalReflection(f"no zeroth-order wave (sin = {s:.6g})")
    return math.asin(s)


def energy_from_zeroth_order(phi_prime: float, phi0: float, kinetic_energy: float) -> float:
    """Transition energy from the refraction of the zeroth order.

    dE = E'kin (1 - sin^2 phi' / sin^2 phi0).  Singular at normal incidence,
    where elastic and inelastic zeroth orders coincide.
    """
    if phi_prime == 0.0:
        raise DegenerateIncidence("zeroth-order peaks coincide at normal incidence")
    if phi0 == 0.0 or math.copysign(1.0, phi0) != math.copysign(1.0, phi_prime):
        raise ValueError("phi0 must be nonzero and on the same side as phi'")
    r = math.sin(phi_prime) / math.sin(phi0)
    return kinetic_energy * (1.0 - r * r)


def order_momentum(p_parallel: float, n: int, d: float) -> float:
    """Parallel momentum after adding n reciprocal lattice vectors."""
    if not d > 0:
        raise ValueError("grating period must be positive")
    return p_parallel + n * 2.0 * math.pi * HBAR / d


def diffraction_order(n, phi_prime, beam: BeamKinematics, lam, d) -> DiffractionOrder:
    """Order ``n`` at outgoing wavelength ``lam`` with its parallel momentum."""
    phi = diffraction_angle(n, phi_prime, beam.wavelength, lam, d)
    p_out = H_PLANCK / lam
    return DiffractionOrder(n, phi, p_out * math.sin(phi))


def allowed_orders(phi_prime: float, lam_prime: float, lam: float, d: float) -> range:
    """Contiguous range of propagating orders (|sin phi_n| <= 1)."""
    if not (d > 0 and lam > 0 and lam_prime > 0):
        raise ValueError("d, lam and lam' must be positive")
    a = (lam / lam_prime) * math.sin(phi_prime)
    step = lam / d
    lo = math.ceil((-1.0 - a) / step)
    hi = math.floor((1.0 - a) / step)
    # floor/ceil on the quotient can be off by one at the exact boundary
    def ok(n):
        return abs(_order_sine(n, phi_prime, lam_prime, lam, d)) <= 1.0

    for _ in range(2):
        if ok(lo - 1):
            lo -= 1
        elif not ok(lo) and lo <= hi:
            lo += 1
        if ok(hi + 1):
            hi += 1
        elif not ok(hi) and hi >= lo:
            hi -= 1
    if lo > hi:
        return range(0)
    return range(lo, hi + 1)

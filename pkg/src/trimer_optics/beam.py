"""Supersonic-nozzle source model.

An ideal supersonic expansion of a monatomic carrier converts the full
stagnation enthalpy (5/2) k_B T0 per atom into directed motion, giving the
terminal speed v = sqrt(5 k_B T0 / m_c).  Clusters of k atoms ride along
at the carrier speed, so their kinetic energy is (5k/2) k_B T0.

The speed spread is modelled as a Gaussian of width v/S in speed, truncated
at v > 0 and renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .kinematics import BeamKinematics
from .units import K_B, M_HE4


@dataclass(frozen=True)
class SourceModel:
    """Nozzle temperature ``T0`` (K), carrier mass (kg), cluster size, speed ratio."""

    T0: float
    carrier_mass: float = M_HE4
    cluster_size: int = 3
    speed_ratio: float = 50.0

    def __post_init__(self):
        if not self.T0 > 0:
            raise ValueError("nozzle temperature must be positive")
        if self.cluster_size < 1 or int(self.cluster_size) != self.cluster_size:
            raise ValueError("cluster size must be a positive integer")
        if not self.speed_ratio > 1:
            raise ValueError("speed ratio must exceed 1")

    @property
    def mean_speed(self):
        return math.sqrt(5.0 * K_B * self.T0 / self.carrier_mass)


def beam_kinematics(src: SourceModel, speed: float | None = None) -> BeamKinematics:
    """Beam of k-atom clusters at the terminal speed (or at ``speed`` if given)."""
    v = src.mean_speed if speed is None else speed
    return BeamKinematics(src.cluster_size * src.carrier_mass, v)


@dataclass(frozen=True)
class SpeedDistribution:
    """Truncated Gaussian f(v) = exp(-((v - v0)/alpha)^2) / Z on v > 0, alpha = v0/S."""

    v0: float
    alpha: float

    @property
    def norm(self):
        # int_0^inf exp(-((v - v0)/alpha)^2) dv
        return 0.5 * math.sqrt(math.pi) * self.alpha * (1.0 + erf(self.v0 / self.alpha))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        f = np.exp(-(((v - self.v0) / self.alpha) ** 2)) / self.norm
        return np.where(v > 0, f, 0.0)

    def mean(self):
        z = self.v0 / self.alpha
        tail = 0.5 * self.alpha**2 * math.exp(-z * z)
        return self.v0 + tail / self.norm

    def nodes(self, n=32, width=6.0):
        """Gauss-Legendre nodes and weights covering v0 +- width*alpha (v > 0).

        The weights include f(v) and are renormalized to sum to one, so
        averages over them are flux-conserving by construction.
        """
        lo = max(self.v0 - width * self.alpha, 0.0)
        hi = self.v0 + width * self.alpha
        x, w = np.polynomial.legendre.leggauss(n)
        v = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * w * self(v)
        return v, wt / wt.sum()


def speed_distribution(src: SourceModel) -> SpeedDistribution:
    v0 = src.mean_speed
    return SpeedDistribution(v0, v0 / src.speed_ratio)

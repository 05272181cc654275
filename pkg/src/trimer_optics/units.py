"""Physical constants and conversions between SI and the few-body working units.

The bound-state solvers work with hbar = 1, lengths in nm and energies in
mK (times k_B).  Everything that crosses a module boundary is SI.
"""

import math

from scipy import constants as _c

HBAR = _c.hbar
H_PLANCK = _c.h
K_B = _c.k
AMU = _c.atomic_mass

# 4He atomic mass (4.002602 u)
M_HE4 = 4.00260325413 * AMU

NM = 1e-9
MK = 1e-3 * K_B  # one millikelvin as an energy, J


def kelvin_to_joule(t):
    return t * K_B


def joule_to_kelvin(e):
    return e / K_B


def joule_to_mk(e):
    return e / MK


def mk_to_joule(e):
    return e * MK


def hbar2_over_2mu(mu):
    """hbar^2 / (2 mu) in mK nm^2 for a reduced mass `mu` in kg."""
    return HBAR**2 / (2.0 * mu) / MK / NM**2


def kappa_from_energy(e, mu):
    """Decay constant sqrt(2 mu |E|)/hbar in 1/m for a bound energy in J."""
    return math.sqrt(2.0 * mu * abs(e)) / HBAR

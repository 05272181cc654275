"""Pair potential -> dimer -> separable interaction -> trimer spectrum."""

from __future__ import annotations

from .errors import NoBoundState
from .potentials import Yamaguchi
from .runconfig import Numerics
from .threebody import (MomentumMesh, SeparableInteraction, YamaguchiFormFactor,
                        find_trimer_states)
from .twobody import default_grid, momentum_nodes, solve_bound_states, upa_form_factor
from .units import MK, NM


def yamaguchi_interaction(potential: Yamaguchi, mass: float) -> SeparableInteraction:
    """Separable interaction of a Yamaguchi potential given in SI.

    The SI strength multiplies the dimensionless form factors
    b^2/(p^2 + b^2), so in working units lambda = strength * b^4.
    """
    b = potential.b * NM
    strength = potential.strength / MK / NM**3 * b**4
    return SeparableInteraction(YamaguchiFormFactor(b), mass, strength=strength)


def solve_dimer(potential, mass, numerics: Numerics | None = None):
    """Shallowest s-wave dimer of a local potential (raises NoBoundState)."""
    num = numerics or Numerics()
    mu = mass / 2
    window = (num.dimer_window_lo_mK * MK, num.dimer_window_hi_mK * MK)
    grid = default_grid(potential, mu, window[1])
    states = solve_bound_states(potential, mu, grid, window, check_refinement=num.check_refinement)
    if not states:
        raise NoBoundState("no dimer inside the two-body window")
    return states, grid


def separable_interaction(potential, mass, numerics: Numerics | None = None):
    """(interaction, dimer states or None) for any supported pair potential."""
    num = numerics or Numerics()
    if isinstance(potential, Yamaguchi):
        return yamaguchi_interaction(potential, mass), None
    states, _ = solve_dimer(potential, mass, num)
    dimer = states[-1]
    ff = upa_form_factor(dimer, mass / 2, momentum_nodes(num.p_scale, num.p_max, num.p_nodes))
    return SeparableInteraction(ff, mass, bound_energy=dimer.energy), states


def trimer_mesh(numerics: Numerics | None = None) -> MomentumMesh:
    num = numerics or Numerics()
    return MomentumMesh.rational(num.n_q, num.q_bar, num.q_max, num.n_theta)


def solve_trimer(potential, mass, numerics: Numerics | None = None, curve_points=0):
    """(TrimerSpectrum, interaction, dimer states) for the configured window."""
    num = numerics or Numerics()
    inter, dimers = separable_interaction(potential, mass, num)
    window = (num.trimer_window_lo_mK * MK, num.trimer_window_hi_mK * MK)
    spectrum = find_trimer_states(inter, window, trimer_mesh(num), curve_points=curve_points)
    return spectrum, inter, dimers

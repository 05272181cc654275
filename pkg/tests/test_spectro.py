import math

import numpy as np
import pytest

from trimer_optics import kinematics as kin
from trimer_optics.beam import SourceModel, beam_kinematics
from trimer_optics.errors import AllUnassigned, NonIdentifiable
from trimer_optics.spectro import (FitResult, PeakObservation, assign_channels, chi_square,
                                   chi_square_gradient, fit_transition_energy, synthetic_peaks)
from trimer_optics.units import MK

BEAM = beam_kinematics(SourceModel(6.0))
D = 100e-9
DE = 97.9 * MK
PHIS = np.radians([10, 20, 30])
ORDERS = [-1, 0, 1, 2]


def dataset(rng=None, sigma=1e-5):
    exc = synthetic_peaks(BEAM, D, DE, PHIS, ORDERS, sigma, rng)
    el = synthetic_peaks(BEAM, D, 0.0, PHIS, ORDERS, sigma, rng, channel="elastic")
    return exc + el


def test_noiseless_fit_is_exact():
    labeled = assign_channels(dataset(), BEAM, D, 97 * MK)
    assert sum(p.channel == "excitation" for p in labeled) == 12
    # a poor guess pushes the large-angle excitation peaks out of the 5 sigma gate
    rough = assign_channels(dataset(), BEAM, D, 90 * MK)
    assert 0 < sum(p.channel == "unassigned" for p in rough) < 12
    res = fit_transition_energy(labeled, BEAM, D)
    assert isinstance(res, FitResult)
    assert res.delta_E == pytest.approx(DE, rel=1e-10)
    assert res.chi2 < 1e-12 and res.dof == 11
    assert res.std_error > 0


def test_single_peak_matches_closed_form():
    phi = math.radians(20)
    lam = BEAM.wavelength * kin.wavelength_ratio(DE, BEAM.kinetic_energy)
    phi0 = kin.snell_angle(phi, BEAM.wavelength, lam)
    obs = [PeakObservation(phi, phi0, 1e-5)]
    labeled = assign_channels(obs, BEAM, D, DE)
    res = fit_transition_energy(labeled, BEAM, D)
    assert res.dof == 0
    assert res.delta_E == pytest.approx(kin.energy_from_zeroth_order(phi, phi0, BEAM.kinetic_energy),
                                        rel=1e-12)


def test_standard_error_scales_with_sigma():
    errs = []
    for sigma in (1e-5, 4e-5):
        labeled = assign_channels(dataset(sigma=sigma), BEAM, D, DE)
        errs.append(fit_transition_energy(labeled, BEAM, D).std_error)
    assert errs[1] == pytest.approx(4 * errs[0], rel=1e-6)


def test_gradient_vanishes_at_minimum_and_matches_finite_difference():
    rng = np.random.default_rng(3)
    labeled = assign_channels(dataset(rng), BEAM, D, DE)
    res = fit_transition_energy(labeled, BEAM, D)
    x = res.delta_E / BEAM.kinetic_energy
    h = 1e-9
    fd = (chi_square(x + h, labeled, BEAM, D) - chi_square(x - h, labeled, BEAM, D)) / (2 * h)
    g = chi_square_gradient(x + 1e-6, labeled, BEAM, D)
    fd2 = (chi_square(x + 1e-6 + h, labeled, BEAM, D) - chi_square(x + 1e-6 - h, labeled, BEAM, D)) / (2 * h)
    assert g == pytest.approx(fd2, rel=1e-5)
    assert abs(fd) < 1e-3 * abs(g)


def test_monte_carlo_coverage_short():
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(200):
        labeled = assign_channels(dataset(rng), BEAM, D, DE)
        res = fit_transition_energy(labeled, BEAM, D)
        hits += abs(res.delta_E - DE) <= 3 * res.std_error
    assert hits >= 194


def test_assignment_gate_and_ties():
    phi = math.radians(10)
    el = kin.classical_grating_angle(1, phi, BEAM.wavelength, D)
    far = PeakObservation(phi, el + 0.01, 1e-5)
    near = PeakObservation(phi, el, 1e-5)
    labeled = assign_channels([far, near], BEAM, D, DE)
    assert labeled[0].channel == "unassigned" and labeled[0].n is None
    assert labeled[1].channel == "elastic" and labeled[1].n == 1
    with pytest.raises(AllUnassigned):
        assign_channels([far], BEAM, D, DE)
    # at normal incidence the zeroth orders coincide: the elastic label wins
    zero = assign_channels([PeakObservation(0.0, 0.0, 1e-5)], BEAM, D, DE)
    assert zero[0].channel == "elastic" and zero[0].n == 0


def test_non_identifiable_inputs():
    with pytest.raises(NonIdentifiable):
        fit_transition_energy(assign_channels(synthetic_peaks(BEAM, D, 0.0, PHIS, [0, 1], 1e-5,
                                                              channel="elastic"), BEAM, D, DE), BEAM, D)
    lam = BEAM.wavelength * kin.wavelength_ratio(DE, BEAM.kinetic_energy)
    obs = PeakObservation(0.0, kin.diffraction_angle(0, 0.0, BEAM.wavelength, lam, D), 1e-5)
    from trimer_optics.spectro import LabeledPeak

    with pytest.raises(NonIdentifiable):
        fit_transition_energy([LabeledPeak(obs, 0, "excitation", 0.0)], BEAM, D)
    with pytest.raises(NonIdentifiable):
        fit_transition_energy([LabeledPeak(obs, 0, "excitation", 0.0)] * 3, BEAM, D)
    with pytest.raises(ValueError):
        PeakObservation(0.1, 0.1, 0.0)

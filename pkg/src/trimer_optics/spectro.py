"""Transition energies from measured peak angles.

Peaks are first labelled with the nearest predicted (order, channel) under
the diffraction law, then the excitation-labelled peaks fix the single
parameter dE by weighted least squares.  The natural variable is
x = dE/E'kin, for which the predicted angle of order n at incidence phi' is

    sin(phi) = rho(x) (sin(phi') + n lam'/d),   rho = (1 - x)^(-1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .errors import AllUnassigned, NoConvergence, NonIdentifiable

GATE = 5.0  # assignment gate in units of sigma


@dataclass(frozen=True)
class PeakObservation:
    phi_prime: float  # rad
    phi: float  # rad
    sigma: float  # rad
    order_hint: int | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("peak uncertainty must be positive")


@dataclass(frozen=True)
class LabeledPeak:
    obs: PeakObservation
    n: int | None
    channel: str  # "elastic", "excitation" or "unassigned"
    residual: float  # measured minus predicted, rad


@dataclass
class FitResult:
    delta_E: float  # J
    std_error: float  # J
    chi2: float
    dof: int
    residuals: np.ndarray  # rad, fitted peaks in input order
    labels: list = field(default_factory=list)  # (n, channel) for every input peak
    iterations: int = 0


def _sensitivity(obs, lam_prime, d, n):
    return math.sin(obs.phi_prime) + n * lam_prime / d


def _predict(phi_prime, n, rho, lam_prime, d):
    s = rho * (math.sin(phi_prime) + n * lam_prime / d)
    return math.asin(s) if abs(s) <= 1.0 else None


def _nearest(obs, rho, lam_prime, d):
    """(residual, n) for the predicted order closest to the observed angle."""
    step = rho * lam_prime / d
    n0 = round((math.sin(obs.phi) - rho * math.sin(obs.phi_prime)) / step)
    best = (math.inf, None)
    for n in (n0 - 1, n0, n0 + 1):
        phi = _predict(obs.phi_prime, n, rho, lam_prime, d)
        if phi is not None and abs(obs.phi - phi) < abs(best[0]):
            best = (obs.phi - phi, n)
    return best


def assign_channels(observations, beam: kin.BeamKinematics, d: float, delta_E_guess: float):
    """Label each peak elastic or excitation by nearest predicted angle.

    Ties go to the elastic channel; a peak further than 5 sigma from every
    prediction is left ``unassigned``.  Order hints are not consulted.
    """
    if not observations:
        raise ValueError("no observations")
    lam_prime = beam.wavelength
    rho_ex = kin.wavelength_ratio(delta_E_guess, beam.kinetic_energy)
    out = []
    for obs in observations:
        r_el, n_el = _nearest(obs, 1.0, lam_prime, d)
        r_ex, n_ex = _nearest(obs, rho_ex, lam_prime, d) if delta_E_guess > 0 else (math.inf, None)
        if abs(r_el) <= abs(r_ex):
            r, n, ch = r_el, n_el, "elastic"
        else:
            r, n, ch = r_ex, n_ex, "excitation"
        if not abs(r) <= GATE * obs.sigma:
            out.append(LabeledPeak(obs, None, "unassigned", r))
        else:
            out.append(LabeledPeak(obs, n, ch, r))
    if all(p.channel == "unassigned" for p in out):
        raise AllUnassigned("no peak lies within 5 sigma of any predicted angle")
    return out


def _initial_x(peaks, lam_prime, d):
    zeroth = [p for p in peaks if p.n == 0 and p.obs.phi_prime != 0.0]
    if zeroth:
        best = max(zeroth, key=lambda p: abs(math.sin(p.obs.phi_prime)) / p.obs.sigma)
        return kin.energy_from_zeroth_order(best.obs.phi_prime, best.obs.phi, 1.0)
    best = max(peaks, key=lambda p: abs(_sensitivity(p.obs, lam_prime, d, p.n)) / p.obs.sigma)
    rho = math.sin(best.obs.phi) / _sensitivity(best.obs, lam_prime, d, best.n)
    return 1.0 - 1.0 / (rho * rho)


def _residuals(x, peaks, lam_prime, d):
    """Weighted residuals r_i/sigma_i and their derivatives in x."""
    rho = 1.0 / math.sqrt(1.0 - x)
    r = np.empty(len(peaks))
    jac = np.empty(len(peaks))
    for i, p in enumerate(peaks):
        a = _sensitivity(p.obs, lam_prime, d, p.n)
        phi = _predict(p.obs.phi_prime, p.n, rho, lam_prime, d)
        if phi is None:
            raise NoConvergence(f"order {p.n} turned evanescent during the fit")
        r[i] = (p.obs.phi - phi) / p.obs.sigma
        jac[i] = a * 0.5 * rho**3 / math.cos(phi) / p.obs.sigma
    return r, jac


def chi_square_gradient(x, labeled, beam, d):
    """d(chi^2)/dx at x = dE/E'kin over the excitation-labelled peaks."""
    peaks = [p for p in labeled if p.channel == "excitation"]
    r, jac = _residuals(x, peaks, beam.wavelength, d)
    return float(-2.0 * np.dot(jac, r))


def chi_square(x, labeled, beam, d):
    peaks = [p for p in labeled if p.channel == "excitation"]
    r, _ = _residuals(x, peaks, beam.wavelength, d)
    return float(np.dot(r, r))


def fit_transition_energy(labeled, beam: kin.BeamKinematics, d: float,
                          max_iter: int = 100, gtol: float = 1e-12) -> FitResult:
    """Weighted least-squares dE from the excitation-labelled peaks.

    Gauss-Newton in x = dE/E'kin, started from the closed-form zeroth-order
    inversion.  Iteration stops when the gradient, measured in units of the
    curvature (i.e. the step in standard errors), falls below ``gtol``.
    Weighted residuals carry rounding noise of about eps |phi_i| / sigma_i,
    so the threshold is raised to that floor when it exceeds ``gtol``.
    """
    peaks = [p for p in labeled if p.channel == "excitation"]
    lam_prime = beam.wavelength
    if not peaks:
        raise NonIdentifiable("no excitation-labelled peaks")
    if len(peaks) == 1 and peaks[0].obs.phi_prime == 0.0:
        raise NonIdentifiable("a single peak at normal incidence does not fix dE")
    if all(_sensitivity(p.obs, lam_prime, d, p.n) == 0.0 for p in peaks):
        raise NonIdentifiable("zeroth-order peaks at normal incidence carry no dE information")
    x = _initial_x(peaks, lam_prime, d)
    floor = 4 * np.finfo(float).eps * math.sqrt(sum((p.obs.phi / p.obs.sigma) ** 2 for p in peaks))
    tol = max(gtol, floor)
    for it in range(1, max_iter + 1):
        r, jac = _residuals(x, peaks, lam_prime, d)
        curv = float(np.dot(jac, jac))
        step = float(np.dot(jac, r)) / curv
        x_new = x + step
        if not x_new < 1.0:
            x_new = 0.5 * (x + 1.0)
        done = abs(step) * math.sqrt(curv) < tol or x_new == x
        x = x_new
        if done:
            break
    else:
        raise NoConvergence(f"Gauss-Newton did not converge in {max_iter} iterations")
    r, jac = _residuals(x, peaks, lam_prime, d)
    curv = float(np.dot(jac, jac))
    e_kin = beam.kinetic_energy
    sigmas = np.array([p.obs.sigma for p in peaks])
    labels = [(p.n, p.channel) for p in labeled]
    return FitResult(x * e_kin, e_kin / math.sqrt(curv), float(np.dot(r, r)), len(peaks) - 1,
                     r * sigmas, labels, it)


def synthetic_peaks(beam, d, delta_E, phi_primes, orders, sigma, rng=None, channel="excitation"):
    """Forward-model peak angles (optionally with Gaussian noise of width ``sigma``)."""
    lam = beam.wavelength
    if channel == "excitation":
        lam = lam * kin.wavelength_ratio(delta_E, beam.kinetic_energy)
    out = []
    for phi_p in phi_primes:
        for n in orders:
            phi = kin.diffraction_angle(n, phi_p, beam.wavelength, lam, d)
            if rng is not None:
                phi += sigma * rng.standard_normal()
            out.append(PeakObservation(phi_p, phi, sigma, n))
    return out

"""Imperfection models linking the ideal projector to lab-grade data.

Two separate visibility notions are used:

* :func:`noisy_povm` dephases the ideal POVM element: every off-diagonal
  entry is multiplied by ``hom_visibility`` and the diagonal is untouched.
  This is what the tomography and Hardy simulations measure.
* :func:`coincidence_vs_delay` mixes indistinguishable and distinguishable
  photon statistics, ``P(tau) = P_dist + v(tau) (P_ind - P_dist)``, with both
  limits computed by the Fock oracle. For inputs inside span{HV, VH}, or at
  unit visibility, its zero-delay value equals the :func:`noisy_povm`
  expectation; for parallel-polarized inputs the two models differ, since
  distinguishable photons can still coincide.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fock
from .hardy import HARDY_LABELS, HardyCounts, hardy_angles, linear_polarization_state
from .optics import VppbsSettings, compose_projector, expectation, optimal_settings
from .states import TwoPhotonState, tensor_state


@dataclass(frozen=True)
class NoiseModel:
    """Visibilities, reachable transmissions and background rate.

    Ranges bound the transmission probabilities T = t^2 the VPPBS can
    reach; ``dark_rate`` is background coincidences per second.
    """

    hom_visibility: float = 1.0
    vppbs_visibility: float = 1.0
    t_h_range: tuple = (0.0, 1.0)
    t_v_range: tuple = (0.0, 1.0)
    dark_rate: float = 0.0

    def __post_init__(self):
        for name in ("hom_visibility", "vppbs_visibility"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("t_h_range", "t_v_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi <= 1:
                raise ValueError(f"{name} must be a non-empty subinterval of [0, 1], got {(lo, hi)}")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be >= 0")

    @classmethod
    def nominal(cls) -> NoiseModel:
        """Lab values: ~90% HOM and ~93% Sagnac visibility, measured T ranges."""
        return cls(0.90, 0.93, (0.03, 0.95), (0.02, 0.84), 0.0)

    @property
    def is_ideal(self) -> bool:
        return self.hom_visibility == 1 and self.dark_rate == 0

    def check_settings(self, settings: VppbsSettings, atol=1e-12):
        for name, T, (lo, hi) in (
            ("T_H", settings.t_h**2, self.t_h_range),
            ("T_V", settings.t_v**2, self.t_v_range),
        ):
            if T < lo - atol:
                raise ValueError(f"{name} = {T:.4g} below the reachable minimum {lo}")
            if T > hi + atol:
                raise ValueError(f"{name} = {T:.4g} above the reachable maximum {hi}")


IDEAL = NoiseModel()


def dephase(op, visibility: float) -> np.ndarray:
    op = np.array(op, dtype=complex)
    diag = np.diag(np.diag(op))
    return diag + visibility * (op - diag)


def noisy_povm(settings: VppbsSettings, noise: NoiseModel = IDEAL) -> np.ndarray:
    """Ideal POVM element with off-diagonal entries scaled by the HOM visibility.

    For a convex combination v Pi + (1-v) diag(Pi) of PSD matrices the
    result stays PSD. Background counts enter later, when converting
    probabilities to count means.
    """
    noise.check_settings(settings)
    return dephase(compose_projector(settings)[2], noise.hom_visibility)


def count_means(probabilities, rate_scale: float, duration: float, noise: NoiseModel = IDEAL):
    """Mean counts: ``rate_scale`` counts per unit probability plus background."""
    return rate_scale * np.clip(np.asarray(probabilities, float), 0, None) + noise.dark_rate * duration


@dataclass(frozen=True)
class DelayScan:
    delays: np.ndarray
    overlap_sigma: float
    probabilities: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.overlap_sigma <= 0:
            raise ValueError("overlap_sigma must be > 0")
        object.__setattr__(self, "delays", np.asarray(self.delays, float))


def overlap_visibility(tau, overlap_sigma: float, hom_visibility: float = 1.0):
    return hom_visibility * np.exp(-np.asarray(tau, float) ** 2 / (2 * overlap_sigma**2))


def coincidence_vs_delay(state: TwoPhotonState, settings: VppbsSettings, scan: DelayScan, noise: NoiseModel = IDEAL) -> DelayScan:
    """Coincidence probability versus relative delay of the two photons."""
    p_ind = fock.coincidence_probability(state, settings)
    p_dist = fock.coincidence_probability(state, settings, distinguishable=True)
    v = overlap_visibility(scan.delays, scan.overlap_sigma, noise.hom_visibility)
    return DelayScan(scan.delays, scan.overlap_sigma, p_dist + v * (p_ind - p_dist))


def hardy_probe_state(label: str, gamma: float) -> TwoPhotonState:
    t1, t2 = hardy_angles(gamma).pair(label)
    return tensor_state(linear_polarization_state(t1), linear_polarization_state(t2))


def hardy_expected_counts(gamma: float, noise: NoiseModel, rate: float, duration: float) -> dict:
    """Mean counts of the six settings; ``rate`` is counts/s per unit probability."""
    op = noisy_povm(optimal_settings(gamma), noise)
    probs = [expectation(op, hardy_probe_state(lb, gamma)) for lb in HARDY_LABELS]
    return dict(zip(HARDY_LABELS, count_means(probs, rate * duration, duration, noise)))


def simulate_hardy_run(gamma: float, noise: NoiseModel, rate_scale: float, duration: float, seed: int) -> HardyCounts:
    """Poisson counts for the six Hardy settings at the optimal VPPBS amplitudes.

    ``rate_scale`` is the mean coincidence rate (per second) per unit
    outcome probability.
    """
    means = hardy_expected_counts(gamma, noise, rate_scale, duration)
    rng = np.random.default_rng(seed)
    counts = rng.poisson([means[lb] for lb in HARDY_LABELS])
    return HardyCounts({lb: int(n) for lb, n in zip(HARDY_LABELS, counts)}, duration)

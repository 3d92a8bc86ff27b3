"""Operators of the VPPBS + 50:50 beam splitter projector and their synthesis.

The measurement operator realized by one VPPBS in mode a followed by a
balanced beam splitter and coincidence post-selection is

    Pi = W^dag |s><s| W = eta |psi~><psi~|,

with ``W = diag(t_H, t_H, t_V e^{i delta}, t_V e^{i delta})``,
``eta = (t_H^2 + t_V^2) / 2`` and
``|psi~> = (sqrt(1+gamma)|HV> - e^{-i delta} sqrt(1-gamma)|VH>) / sqrt(2)``.
At ``delta = 0`` the dagger is immaterial and ``W |s><s| W`` is the same
matrix; with a phase the undaggered product is not Hermitian (see
:func:`kraus_projector`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import (
    H,
    SINGLET,
    V,
    TwoPhotonState,
    check_operator,
    check_unitary,
    retarder,
    schmidt_decompose,
    waveplate_unitary,
)


@dataclass(frozen=True)
class VppbsSettings:
    """Transmission amplitudes of the variable partially-polarizing BS.

    The effective V amplitude is ``t_v * exp(1j * delta)``.
    """

    t_h: float
    t_v: float
    delta: float = 0.0

    def __post_init__(self):
        for name in ("t_h", "t_v"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")

    @classmethod
    def from_transmissions(cls, T_h: float, T_v: float, delta: float = 0.0) -> VppbsSettings:
        """Build from transmission probabilities T = t^2."""
        return cls(float(np.sqrt(T_h)), float(np.sqrt(T_v)), delta)

    @property
    def amplitude_v(self) -> complex:
        return self.t_v * np.exp(1j * self.delta)

    @property
    def total(self) -> float:
        return self.t_h**2 + self.t_v**2

    @property
    def gamma(self) -> float:
        if self.total == 0:
            raise ValueError("gamma undefined for t_h = t_v = 0")
        return (self.t_h**2 - self.t_v**2) / self.total

    @property
    def eta(self) -> float:
        return self.total / 2


IDENTITY_SETTINGS = VppbsSettings(1.0, 1.0, 0.0)


@dataclass(frozen=True)
class ProjectorRecipe:
    ua: np.ndarray
    ub: np.ndarray
    vppbs: VppbsSettings
    gamma: float = field(init=False)
    eta: float = field(init=False)

    def __post_init__(self):
        check_unitary(self.ua)
        check_unitary(self.ub)
        object.__setattr__(self, "gamma", self.vppbs.gamma)
        object.__setattr__(self, "eta", self.vppbs.eta)

    @property
    def local_unitary(self) -> np.ndarray:
        return np.kron(self.ua, self.ub)

    def measurement_operator(self) -> np.ndarray:
        """POVM element with the local unitaries placed before the VPPBS."""
        u = self.local_unitary
        return u.conj().T @ compose_projector(self.vppbs)[2] @ u


def vppbs_operator(settings: VppbsSettings) -> np.ndarray:
    th, tv = settings.t_h, settings.amplitude_v
    return np.diag([th, th, tv, tv]).astype(complex)


def singlet_projector() -> np.ndarray:
    return SINGLET.projector()


def _require_light(settings):
    if settings.t_h == 0 and settings.t_v == 0:
        raise ValueError("degenerate settings: t_h = t_v = 0 blocks every photon")


def psi_tilde(gamma: float, delta: float = 0.0) -> TwoPhotonState:
    """(sqrt(1+gamma)|HV> - e^{-i delta} sqrt(1-gamma)|VH>) / sqrt(2)."""
    if abs(gamma) > 1:
        raise ValueError(f"|gamma| must be <= 1, got {gamma}")
    amps = np.array(
        [0, np.sqrt(1 + gamma), -np.exp(-1j * delta) * np.sqrt(1 - gamma), 0]
    ) / np.sqrt(2)
    return TwoPhotonState(amps)


def compose_projector(settings: VppbsSettings):
    """Return ``(eta, psi_tilde, Pi)`` for the given VPPBS settings."""
    _require_light(settings)
    w = vppbs_operator(settings)
    op = w.conj().T @ singlet_projector() @ w
    # sqrt(1 +- gamma) = sqrt(2) t / sqrt(t_H^2 + t_V^2); going through gamma
    # would lose tiny amplitudes to rounding.
    amps = np.array([0, settings.t_h, -np.exp(-1j * settings.delta) * settings.t_v, 0])
    return settings.eta, TwoPhotonState(amps / np.sqrt(settings.total)), op


def kraus_projector(settings: VppbsSettings) -> np.ndarray:
    """Literal two-VPPBS product ``W |s><s| W`` (no daggers).

    This is the post-selected map of the non-destructive device. It is
    Hermitian only when delta = 0, and its POVM is ``eta * Pi``.
    """
    w = vppbs_operator(settings)
    return w @ singlet_projector() @ w


def destructive_transform(settings: VppbsSettings) -> np.ndarray:
    """``M = |s><s| W``; success leaves the photons in the singlet."""
    _require_light(settings)
    return singlet_projector() @ vppbs_operator(settings)


def povm_from_transform(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return m.conj().T @ m


def optimal_settings(gamma: float) -> VppbsSettings:
    if abs(gamma) > 1:
        raise ValueError(f"|gamma| must be <= 1, got {gamma}")
    if gamma >= 0:
        return VppbsSettings(1.0, float(np.sqrt((1 - gamma) / (1 + gamma))))
    return VppbsSettings(float(np.sqrt((1 + gamma) / (1 - gamma))), 1.0)


def optimal_efficiency(gamma: float) -> float:
    if abs(gamma) > 1:
        raise ValueError(f"|gamma| must be <= 1, got {gamma}")
    return 1 / (1 + abs(gamma))


def optimal_efficiency_from_concurrence(c: float) -> float:
    if not 0 <= c <= 1:
        raise ValueError(f"concurrence must lie in [0, 1], got {c}")
    return 1 / (1 + np.sqrt(1 - c * c))


def synthesize_projector(target: TwoPhotonState) -> ProjectorRecipe:
    """Settings and local unitaries that measure ``|target><target|``.

    With the Schmidt form ``l1|zeta theta> - l2|zeta_perp theta_perp>``,
    ``U_a`` sends zeta -> H, zeta_perp -> V and ``U_b`` sends theta -> V,
    theta_perp -> H, so ``U_a U_b |target> = l1|HV> - l2|VH>``. Then
    gamma = l1^2 - l2^2 >= 0 and the VPPBS uses the optimal amplitudes with
    delta = 0; every phase lives in the unitaries.
    """
    sf = schmidt_decompose(target)
    ua = np.outer(H, sf.zeta.conj()) + np.outer(V, sf.zeta_perp.conj())
    ub = np.outer(V, sf.theta.conj()) + np.outer(H, sf.theta_perp.conj())
    gamma = float(np.clip(sf.lambda1**2 - sf.lambda2**2, -1.0, 1.0))
    return ProjectorRecipe(ua=ua, ub=ub, vppbs=optimal_settings(gamma))


def expectation(op, state: TwoPhotonState) -> float:
    op = check_operator(op)
    val = np.vdot(state.amplitudes, op @ state.amplitudes)
    return float(val.real)


@dataclass(frozen=True)
class PlateSettings:
    """QWP then HWP realizing a unitary up to a residual retarder.

    The residual is a retarder with fast axis ``residual_axis`` (in [0, pi/2))
    and retardance ``residual_phase``; it leaves the plates' output
    polarization unchanged, so the two plates alone already realize the state
    mapping. For an H or V target the axis is 0 and the residual is
    ``diag(1, e^{i residual_phase})``.
    """

    qwp: float
    hwp: float
    residual_phase: float
    residual_axis: float = 0.0

    @property
    def needs_phase_plate(self) -> bool:
        return abs(np.angle(np.exp(1j * self.residual_phase))) > 1e-9

    def plates(self) -> np.ndarray:
        return waveplate_unitary("half", self.hwp) @ waveplate_unitary("quarter", self.qwp)

    def unitary(self) -> np.ndarray:
        return retarder(self.residual_phase, self.residual_axis) @ self.plates()


def _linear_angle(psi, atol=1e-9):
    """Angle of a linearly polarized Jones vector, or None if it is elliptical."""
    k = np.argmax(np.abs(psi))
    real = psi * np.exp(-1j * np.angle(psi[k]))
    if np.abs(real.imag).max() > atol:
        return None
    return float(np.arctan2(real.real[1], real.real[0]))


def plate_settings(u, source) -> PlateSettings:
    """Two-plate angles sending ``source`` where ``u`` sends it.

    ``u @ source`` must be linearly polarized. A QWP with its fast axis on
    the source's ellipse axis makes it linear; an HWP then rotates it onto
    the target. What is left of ``u`` is a retarder along the target.
    """
    u = check_unitary(u)
    source = np.asarray(source, dtype=complex)
    target = _linear_angle(u @ source)
    if target is None:
        raise ValueError("u does not send the source state to a linear polarization")
    x, y = source
    s1 = abs(x) ** 2 - abs(y) ** 2
    s2 = 2 * (np.conj(x) * y).real
    axis = 0.5 * np.arctan2(s2, s1)
    res_axis = float(np.mod(target, np.pi / 2))
    if np.pi / 2 - res_axis < 1e-12:
        res_axis = 0.0
    e1 = np.array([np.cos(res_axis), np.sin(res_axis)])
    e2 = np.array([-np.sin(res_axis), np.cos(res_axis)])
    for q in (axis, axis + np.pi / 2):
        phi = _linear_angle(waveplate_unitary("quarter", q) @ source)
        if phi is None:
            continue
        h = (phi + target) / 2
        plates = waveplate_unitary("half", h) @ waveplate_unitary("quarter", q)
        resid = u @ plates.conj().T
        if abs(e2 @ resid @ e1) > 1e-9 or abs(e1 @ resid @ e2) > 1e-9:
            continue
        phase = float(np.angle((e2 @ resid @ e2) / (e1 @ resid @ e1)))
        return PlateSettings(float(np.mod(q, np.pi)), float(np.mod(h, np.pi)), phase, res_axis)
    raise ValueError("no two-plate solution found")


def recipe_plates(recipe: ProjectorRecipe):
    """Plate settings for U_a (zeta -> H) and U_b (theta -> V)."""
    sf = schmidt_decompose(_recipe_target(recipe))
    return plate_settings(recipe.ua, sf.zeta), plate_settings(recipe.ub, sf.theta)


def _recipe_target(recipe):
    psi = psi_tilde(recipe.gamma, recipe.vppbs.delta)
    return TwoPhotonState(recipe.local_unitary.conj().T @ psi.amplitudes)


@dataclass(frozen=True)
class PlateRealization:
    """QWP+HWP in each arm with the VPPBS phase absorbing the residual phases."""

    plates_a: PlateSettings
    plates_b: PlateSettings
    vppbs: VppbsSettings

    def local_unitary(self) -> np.ndarray:
        return np.kron(self.plates_a.plates(), self.plates_b.plates())

    def measurement_operator(self) -> np.ndarray:
        u = self.local_unitary()
        return u.conj().T @ compose_projector(self.vppbs)[2] @ u


def plate_realization(recipe: ProjectorRecipe) -> PlateRealization:
    """Drop the residual phase plates and set delta instead.

    Without them arm a lacks diag(1, e^{i phi_a}) and arm b lacks
    diag(1, e^{i phi_b}); on l1|HV> - l2|VH> that is only a relative phase
    e^{-i(phi_a - phi_b)} on |VH>, which is what delta = phi_a - phi_b
    supplies.
    """
    pa, pb = recipe_plates(recipe)
    delta = float(np.angle(np.exp(1j * (pa.residual_phase - pb.residual_phase) + 1j * recipe.vppbs.delta)))
    vppbs = VppbsSettings(recipe.vppbs.t_h, recipe.vppbs.t_v, delta)
    return PlateRealization(pa, pb, vppbs)

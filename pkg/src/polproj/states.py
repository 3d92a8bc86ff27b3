"""Two-photon polarization states, Jones calculus and entanglement metrics.

Basis ordering everywhere is (HH, HV, VH, VV) with the first letter the
polarization of the photon in spatial mode a. Operators are plain 4x4
complex ndarrays in that basis.

Wave plate convention: a retarder with retardance ``g`` and fast axis at
angle ``theta`` from H is ``rot(-theta) @ diag(1, exp(1j*g)) @ rot(theta)``
with ``rot(x) = [[cos x, sin x], [-sin x, cos x]]``. The fast axis picks up
no phase, so a half-wave plate at 0 is exactly ``diag(1, -1)`` and a
quarter-wave plate at 0 sends D to R = (H + iV)/sqrt(2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-10
LABELS = ("HH", "HV", "VH", "VV")

H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
D = np.array([1, 1], dtype=complex) / np.sqrt(2)
A = np.array([1, -1], dtype=complex) / np.sqrt(2)
R = np.array([1, 1j], dtype=complex) / np.sqrt(2)
L = np.array([1, -1j], dtype=complex) / np.sqrt(2)
QUBITS = {"H": H, "V": V, "D": D, "A": A, "R": R, "L": L}

PAULI_Y = np.array([[0, -1j], [1j, 0]])


def _check_qubit(psi, name="state"):
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (2,):
        raise ValueError(f"{name} must have 2 amplitudes, got {psi.shape}")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1) > ATOL:
        raise ValueError(f"{name} is not normalized (norm^2 = {norm:.3g})")
    return psi


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Pure polarization state of two photons in modes a and b.

    ``amplitudes`` holds (c_HH, c_HV, c_VH, c_VV). Construction fails unless
    the state is normalized to 1e-10; use :meth:`normalized` for raw input.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1) > ATOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm:.12g})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> TwoPhotonState:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def from_label(cls, label: str) -> TwoPhotonState:
        """Product state from a two-letter label such as ``"DR"``."""
        if len(label) != 2 or any(c not in QUBITS for c in label):
            raise ValueError(f"unknown product-state label {label!r}")
        return tensor_state(QUBITS[label[0]], QUBITS[label[1]])

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """[[c_HH, c_HV], [c_VH, c_VV]]: rows index mode a, columns mode b."""
        return self.amplitudes.reshape(2, 2)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def overlap(self, other: TwoPhotonState) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: TwoPhotonState) -> float:
        """|<self|other>|^2, blind to global phase."""
        return abs(self.overlap(other)) ** 2

    def __repr__(self):
        body = ", ".join(f"{c:.6g}" for c in self.amplitudes)
        return f"TwoPhotonState([{body}])"


SINGLET = TwoPhotonState(np.array([0, 1, -1, 0]) / np.sqrt(2))


@dataclass(frozen=True)
class SchmidtForm:
    """``lambda1 |zeta theta> - lambda2 |zeta_perp theta_perp>``."""

    lambda1: float
    lambda2: float
    zeta: np.ndarray
    theta: np.ndarray
    zeta_perp: np.ndarray
    theta_perp: np.ndarray

    def reconstruct(self) -> TwoPhotonState:
        amps = self.lambda1 * np.kron(self.zeta, self.theta) - self.lambda2 * np.kron(
            self.zeta_perp, self.theta_perp
        )
        return TwoPhotonState(amps)


def tensor_state(qubit_a, qubit_b) -> TwoPhotonState:
    qubit_a = _check_qubit(qubit_a, "qubit_a")
    qubit_b = _check_qubit(qubit_b, "qubit_b")
    return TwoPhotonState(np.kron(qubit_a, qubit_b))


def check_unitary(u, atol=ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"single-qubit unitary must be 2x2, got {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(2), atol=atol):
        raise ValueError("matrix is not unitary")
    return u


def apply_local_unitaries(state: TwoPhotonState, ua, ub) -> TwoPhotonState:
    ua = check_unitary(ua)
    ub = check_unitary(ub)
    return TwoPhotonState(np.kron(ua, ub) @ state.amplitudes)


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=complex)


def retarder(retardance: float, angle: float) -> np.ndarray:
    return _rotation(-angle) @ np.diag([1, np.exp(1j * retardance)]) @ _rotation(angle)


def waveplate_unitary(kind: str, angle: float) -> np.ndarray:
    """Jones matrix of an ideal quarter- or half-wave plate.

    ``angle`` is the fast-axis angle from H in radians. See the module
    docstring for the phase convention.
    """
    retardances = {"quarter": np.pi / 2, "half": np.pi}
    try:
        g = retardances[kind]
    except KeyError:
        raise ValueError(f"kind must be 'quarter' or 'half', got {kind!r}") from None
    return retarder(g, angle)


def schmidt_decompose(state: TwoPhotonState) -> SchmidtForm:
    """Schmidt form with an explicit minus sign on the second term.

    Each singular pair's free phase is fixed so that the largest component of
    ``zeta`` (and ``zeta_perp``) is real and positive. With that choice a state
    already written as ``l1|HV> - l2|VH>`` decomposes onto H, V, V, H with no
    stray phases.
    """
    u, s, vh = np.linalg.svd(state.coefficient_matrix)
    # c_jk = sum_i s_i u[j, i] vh[i, k], so the mode-b vector of term i is vh[i].
    vecs = []
    for i in range(2):
        zeta = u[:, i]
        k = np.argmax(np.abs(zeta))
        phase = np.exp(-1j * np.angle(zeta[k]))
        vecs.append((zeta * phase, vh[i] / phase))
    lam1, lam2 = (float(x) for x in s)
    # Pin the norm exactly; SVD returns it to rounding error.
    scale = np.hypot(lam1, lam2)
    if lam1 - lam2 < 1e-12:
        # Maximally entangled: any zeta works, so take zeta = H, zeta_perp = V.
        c = state.coefficient_matrix / lam1
        vecs = [(np.array([1, 0], complex), c[0]), (np.array([0, 1], complex), c[1])]
    return SchmidtForm(
        lambda1=lam1 / scale,
        lambda2=lam2 / scale,
        zeta=vecs[0][0],
        theta=vecs[0][1],
        zeta_perp=vecs[1][0],
        theta_perp=-vecs[1][1],
    )


def concurrence_pure(state: TwoPhotonState) -> float:
    c = state.amplitudes
    return float(2 * abs(c[0] * c[3] - c[1] * c[2]))


def check_operator(op, atol=ATOL) -> np.ndarray:
    """Validate a 4x4 Hermitian positive-semidefinite operator."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (4, 4):
        raise ValueError(f"operator must be 4x4, got {op.shape}")
    if not np.allclose(op, op.conj().T, atol=atol):
        raise ValueError("operator is not Hermitian")
    if np.linalg.eigvalsh(op).min() < -atol:
        raise ValueError("operator is not positive semidefinite")
    return op


def _normalize_trace(op):
    op = check_operator(op)
    tr = np.trace(op).real
    if tr <= 0:
        raise ValueError("operator has zero trace")
    return op / tr


# Eigenvalues below this fraction of the largest are round-off; their square
# roots (~1e-8) would otherwise leak into fidelities of rank-deficient pairs.
_EIG_FLOOR = 1e-15


def _clip_eigs(w):
    return np.where(w > _EIG_FLOOR * max(w.max(), 0.0), w, 0.0)


def psd_sqrt(op: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, round-off eigenvalues dropped."""
    w, v = np.linalg.eigh((op + op.conj().T) / 2)
    return (v * np.sqrt(_clip_eigs(w))) @ v.conj().T


def concurrence_mixed(op) -> float:
    """Wootters concurrence of the trace-normalized operator."""
    rho = _normalize_trace(op)
    yy = np.kron(PAULI_Y, PAULI_Y)
    rho_tilde = yy @ rho.conj() @ yy
    # Eigenvalues of sqrt(rho) rho~ sqrt(rho) are those of rho rho~, and the
    # Hermitian form keeps eigvalsh usable.
    sq = psd_sqrt(rho)
    mu = np.sqrt(_clip_eigs(np.linalg.eigvalsh(sq @ rho_tilde @ sq)))[::-1]
    return float(max(0.0, mu[0] - mu[1] - mu[2] - mu[3]))


def operator_fidelity(a, b) -> float:
    """Uhlmann fidelity Tr[(sqrt(a) b sqrt(a))^(1/2)] of trace-normalized a, b.

    This is the root form: for two pure states it gives |<psi|phi>|, not its
    square.
    """
    a = _normalize_trace(a)
    b = _normalize_trace(b)
    sa = psd_sqrt(a)
    w = np.linalg.eigvalsh(sa @ b @ sa)
    return float(np.sum(np.sqrt(_clip_eigs(w))))


def same_up_to_phase(x: TwoPhotonState, y: TwoPhotonState, atol=ATOL) -> bool:
    return abs(1 - x.fidelity(y)) <= atol


def random_state(rng: np.random.Generator) -> TwoPhotonState:
    """Haar-random pure two-photon state."""
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    return TwoPhotonState.normalized(z)


def random_unitary(rng: np.random.Generator, n: int = 2) -> np.ndarray:
    """Haar-random n x n unitary (QR of a Ginibre matrix, phase-fixed)."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))

"""Second-quantized two-photon simulation of the optical train.

This is a brute-force oracle for :mod:`polproj.optics`: input states are
written as creation-operator polynomials on the vacuum, every creation
operator is replaced by its Heisenberg-picture image under each optical
element, and the products are expanded with explicit bosonic normalization.

Modes are labeled ``<spatial>_<pol>`` with spatial in {a, b, r1, r2}; the
loss ports r1 and r2 stay explicit so norm conservation can be checked. A
``~`` suffix marks an auxiliary temporal label used to make a photon in
mode a distinguishable from the one in mode b.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .optics import VppbsSettings
from .states import LABELS, TwoPhotonState

MODES = ("a_H", "a_V", "b_H", "b_V", "r1_H", "r1_V", "r2_H", "r2_V")
TAGGED_MODES = MODES + tuple(m + "~" for m in MODES)
N_PHOTONS = 2


def _split(mode):
    """'r1_V~' -> ('r1', 'V', '~')."""
    tag = "~" if mode.endswith("~") else ""
    spatial, pol = mode.rstrip("~").split("_")
    return spatial, pol, tag


@dataclass(frozen=True, eq=False)
class FockState:
    """Sparse two-photon state: occupation tuple over ``modes`` -> amplitude."""

    terms: dict
    modes: tuple = MODES

    def __post_init__(self):
        for occ in self.terms:
            if len(occ) != len(self.modes):
                raise ValueError("occupation vector does not match the mode list")
            if sum(occ) != N_PHOTONS or min(occ) < 0:
                raise ValueError(f"term {occ} does not hold exactly {N_PHOTONS} photons")

    @property
    def norm2(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.terms.values()))

    def amplitude(self, *mode_names) -> complex:
        occ = [0] * len(self.modes)
        for m in mode_names:
            occ[self.modes.index(m)] += 1
        return complex(self.terms.get(tuple(occ), 0))

    def occupied_modes(self):
        names = set()
        for occ, amp in self.terms.items():
            if amp != 0:
                names.update(m for m, n in zip(self.modes, occ) if n)
        return names


@dataclass(frozen=True, eq=False)
class ModeMap:
    """Linear substitution of creation operators.

    ``matrix[j, i]`` is the coefficient of output mode j in the image of
    input mode i; column i is therefore the substitution for ``modes[i]``.
    """

    matrix: np.ndarray
    modes: tuple = MODES

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = len(self.modes)
        if m.shape != (n, n):
            raise ValueError(f"mode map must be {n}x{n}, got {m.shape}")
        if np.any(np.linalg.norm(m, axis=0) > 1 + 1e-12):
            raise ValueError("mode map amplifies a mode (column norm > 1)")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, modes=MODES) -> ModeMap:
        return cls(np.eye(len(modes), dtype=complex), modes)

    def substitution(self, mode):
        col = self.matrix[:, self.modes.index(mode)]
        return [(self.modes[j], complex(c)) for j, c in enumerate(col) if c != 0]

    def then(self, later: ModeMap) -> ModeMap:
        """Apply ``self`` first and ``later`` afterwards."""
        if later.modes != self.modes:
            raise ValueError("mode lists differ")
        return ModeMap(later.matrix @ self.matrix, self.modes)


def inject_state(state: TwoPhotonState, distinguishable=False) -> FockState:
    """Place the two-photon state on the vacuum of modes a and b.

    With ``distinguishable`` the mode-a photon carries the ``~`` label.
    """
    modes = TAGGED_MODES if distinguishable else MODES
    tag = "~" if distinguishable else ""
    terms = {}
    for label, c in zip(LABELS, state.amplitudes):
        if c == 0:
            continue
        occ = [0] * len(modes)
        occ[modes.index(f"a_{label[0]}{tag}")] += 1
        occ[modes.index(f"b_{label[1]}")] += 1
        terms[tuple(occ)] = complex(c)
    return FockState(terms, modes)


def apply_mode_map(fock: FockState, mode_map: ModeMap) -> FockState:
    """Heisenberg-picture evolution of every term.

    A term with occupations n is ``prod_i (a_i^dag)^n_i / sqrt(n_i!) |0>``.
    After substitution each monomial ``prod_j (b_j^dag)^m_j |0>`` equals
    ``prod_j sqrt(m_j!) |m>``.
    """
    if mode_map.modes != fock.modes:
        raise ValueError("state and mode map use different mode lists")
    cols = {}
    for name in fock.occupied_modes():
        subs = mode_map.substitution(name)
        if not subs:
            raise ValueError(f"mode {name!r} is occupied but not mapped")
        cols[name] = [(fock.modes.index(o), c) for o, c in subs]

    out = defaultdict(complex)
    for occ, amp in fock.terms.items():
        if amp == 0:
            continue
        ops = []
        norm = 1.0
        for i, n in enumerate(occ):
            ops.extend([fock.modes[i]] * n)
            norm *= math.factorial(n)
        pref = amp / math.sqrt(norm)
        for choice in itertools.product(*(cols[m] for m in ops)):
            coeff = pref
            new = [0] * len(fock.modes)
            for j, c in choice:
                coeff *= c
                new[j] += 1
            if coeff == 0:
                continue
            coeff *= math.sqrt(math.prod(math.factorial(k) for k in new))
            out[tuple(new)] += coeff
    return FockState(dict(out), fock.modes)


def _vppbs_map(settings: VppbsSettings, loss: str, modes) -> np.ndarray:
    """a_j -> t_j a_j + i sqrt(1-|t_j|^2) r_j, completed to a unitary."""
    m = np.eye(len(modes), dtype=complex)
    amps = {"H": settings.t_h, "V": settings.amplitude_v}
    for tag in {_split(x)[2] for x in modes}:
        for pol, t in amps.items():
            ia = modes.index(f"a_{pol}{tag}")
            ir = modes.index(f"{loss}_{pol}{tag}")
            r = np.sqrt(max(0.0, 1 - abs(t) ** 2))
            m[ia, ia], m[ir, ia] = t, 1j * r
            m[ia, ir], m[ir, ir] = 1j * r, np.conj(t)
    return m


def _beam_splitter_map(modes) -> np.ndarray:
    """a -> (a + i b)/sqrt2, b -> (b + i a)/sqrt2 for each polarization."""
    m = np.eye(len(modes), dtype=complex)
    for tag in {_split(x)[2] for x in modes}:
        for pol in "HV":
            ia = modes.index(f"a_{pol}{tag}")
            ib = modes.index(f"b_{pol}{tag}")
            m[ia, ia] = m[ib, ib] = 1 / np.sqrt(2)
            m[ib, ia] = m[ia, ib] = 1j / np.sqrt(2)
    return m


def vppbs_map(settings: VppbsSettings, loss="r1", modes=MODES) -> ModeMap:
    return ModeMap(_vppbs_map(settings, loss, modes), modes)


def beam_splitter_map(modes=MODES) -> ModeMap:
    return ModeMap(_beam_splitter_map(modes), modes)


def build_destructive_train(settings: VppbsSettings, modes=MODES) -> ModeMap:
    """VPPBS in mode a, then the 50:50 beam splitter."""
    return vppbs_map(settings, "r1", modes).then(beam_splitter_map(modes))


def build_full_train(settings: VppbsSettings, modes=MODES) -> ModeMap:
    """VPPBS (loss r1), 50:50 BS, second VPPBS with the same amplitudes (loss r2)."""
    return build_destructive_train(settings, modes).then(vppbs_map(settings, "r2", modes))


def post_select_coincidence(fock: FockState):
    """Keep terms with one photon in mode a and one in mode b.

    Returns ``(amplitudes, probability)`` where the unnormalized amplitudes
    are ordered (HH, HV, VH, VV) by (pol in a, pol in b). Tagged photons are
    distinguishable from untagged ones, so their terms never add coherently:
    ``amplitudes`` only collects the untagged terms while ``probability``
    counts every coincidence.
    """
    amps = np.zeros(4, dtype=complex)
    prob = 0.0
    for occ, amp in fock.terms.items():
        spots = []
        for i, n in enumerate(occ):
            spots.extend([_split(fock.modes[i])] * n)
        spatial = sorted(s[0] for s in spots)
        if spatial != ["a", "b"]:
            continue
        prob += abs(amp) ** 2
        pa = next(p for s, p, _ in spots if s == "a")
        pb = next(p for s, p, _ in spots if s == "b")
        if all(tag == "" for *_, tag in spots):
            amps[LABELS.index(pa + pb)] += amp
    return amps, float(prob)


def _probe_inputs():
    """4 basis states and the 12 pairwise superpositions (|j>+|k>, |j>+i|k>)."""
    eye = np.eye(4, dtype=complex)
    inputs = list(eye)
    for j, k in itertools.combinations(range(4), 2):
        inputs.append((eye[j] + eye[k]) / np.sqrt(2))
        inputs.append((eye[j] + 1j * eye[k]) / np.sqrt(2))
    return np.array(inputs)


def oracle_transform(settings: VppbsSettings, train="destructive") -> np.ndarray:
    """Post-selected linear map from 16 evolved inputs by linear inversion."""
    builders = {"destructive": build_destructive_train, "full": build_full_train}
    mode_map = builders[train](settings)
    x = _probe_inputs()
    y = np.array(
        [post_select_coincidence(apply_mode_map(inject_state(TwoPhotonState(v)), mode_map))[0] for v in x]
    )
    # Rows satisfy y_i = M x_i, i.e. Y = X M^T.
    mt, *_ = np.linalg.lstsq(x, y, rcond=None)
    return mt.T


def oracle_povm(settings: VppbsSettings) -> np.ndarray:
    """POVM element M^dag M of the destructive train, built from Fock evolution."""
    m = oracle_transform(settings, "destructive")
    return m.conj().T @ m


def coincidence_probability(state: TwoPhotonState, settings: VppbsSettings, distinguishable=False, train="destructive") -> float:
    builders = {"destructive": build_destructive_train, "full": build_full_train}
    modes = TAGGED_MODES if distinguishable else MODES
    fock = apply_mode_map(inject_state(state, distinguishable), builders[train](settings, modes))
    return post_select_coincidence(fock)[1]

"""Detector tomography of the two-photon projector.

Sixteen product probes {H, V, D, R} x {H, V, D, R} are sent through the
device, coincidences are counted, and the POVM element is reconstructed by
maximizing a Poisson likelihood over ``Pi = T^dag T`` with ``T`` lower
triangular (real diagonal, complex below it: 16 real parameters). The
parameterization keeps every iterate Hermitian PSD.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .states import TwoPhotonState, check_operator, concurrence_mixed, operator_fidelity

log = logging.getLogger(__name__)

PROBE_BASIS = "HVDR"
# Mode-a letter varies fastest: HH, VH, DH, RH, HV, ...
PROBE_LABELS = tuple(a + b for b in PROBE_BASIS for a in PROBE_BASIS)

GRAD_TOL = 1e-9
REL_LL_TOL = 1e-12
MAX_ITER = 1000


@dataclass(frozen=True)
class ProbeSet:
    labels: tuple
    states: tuple

    def __post_init__(self):
        if len(self.labels) != 16 or len(set(self.labels)) != 16:
            raise ValueError("a probe set needs 16 distinct labels")
        if len(self.states) != len(self.labels):
            raise ValueError("labels and states differ in length")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label) -> TwoPhotonState:
        return self.states[self.labels.index(label)]

    @property
    def vectors(self) -> np.ndarray:
        return np.array([s.amplitudes for s in self.states])

    def gram_rank(self, tol=1e-10) -> int:
        """Rank of the Gram matrix of the probe projectors (16 = complete)."""
        projs = np.array([s.projector().ravel() for s in self.states])
        gram = (projs.conj() @ projs.T).real
        return int(np.linalg.matrix_rank(gram, tol=tol))


@dataclass(frozen=True)
class CountRecord:
    """Coincidences recorded for one probe.

    ``rate_scale`` is the expected number of counts per unit outcome
    probability over the whole record, so the mean count is
    ``rate_scale * <phi|Pi|phi>``. ``duration`` is bookkeeping in seconds.
    """

    label: str
    counts: int
    duration: float
    rate_scale: float

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError(f"{self.label}: counts must be >= 0")
        if self.duration <= 0:
            raise ValueError(f"{self.label}: duration must be > 0")
        if self.rate_scale <= 0:
            raise ValueError(f"{self.label}: rate_scale must be > 0")


@dataclass
class ReconstructionResult:
    operator: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    warning: str | None = None
    rate_scale_factor: float = 1.0
    history: list = field(default_factory=list, repr=False)


def probe_states() -> ProbeSet:
    return ProbeSet(PROBE_LABELS, tuple(TwoPhotonState.from_label(lb) for lb in PROBE_LABELS))


def predicted_probabilities(op, probes: ProbeSet) -> np.ndarray:
    op = check_operator(op)
    vecs = probes.vectors
    return np.einsum("ki,ij,kj->k", vecs.conj(), op, vecs).real


def simulate_counts(op, probes: ProbeSet, rate_scale: float, duration: float, seed: int, background=0.0):
    """Independent Poisson counts with mean ``rate_scale * p + background``."""
    rng = np.random.default_rng(seed)
    means = rate_scale * np.clip(predicted_probabilities(op, probes), 0, None) + background
    counts = rng.poisson(means)
    return [CountRecord(lb, int(n), duration, rate_scale) for lb, n in zip(probes.labels, counts)]


def expected_counts(op, probes: ProbeSet, rate_scale: float, duration: float):
    """Noise-free records; counts are the exact (non-integer) means."""
    means = rate_scale * np.clip(predicted_probabilities(op, probes), 0, None)
    return [CountRecord(lb, float(n), duration, rate_scale) for lb, n in zip(probes.labels, means)]


# -- factored parameterization ------------------------------------------------

_TRIL = [(i, j) for i in range(4) for j in range(i)]


def _basis_matrices():
    mats = []
    for i in range(4):
        m = np.zeros((4, 4), dtype=complex)
        m[i, i] = 1
        mats.append(m)
    for i, j in _TRIL:
        for unit in (1, 1j):
            m = np.zeros((4, 4), dtype=complex)
            m[i, j] = unit
            mats.append(m)
    return np.array(mats)


_BASIS = _basis_matrices()


def params_to_factor(x) -> np.ndarray:
    return np.tensordot(x, _BASIS, axes=1)


def factor_to_params(t) -> np.ndarray:
    x = [t[i, i].real for i in range(4)]
    for i, j in _TRIL:
        x += [t[i, j].real, t[i, j].imag]
    return np.array(x)


def operator_to_params(op) -> np.ndarray:
    """Parameters of a (numerically) positive-definite operator."""
    # op = T^dag T with T lower triangular <=> J op J = (J T^dag J)(J T J)
    # where J reverses the basis; J T^dag J is lower triangular.
    j = np.eye(4)[::-1]
    low = np.linalg.cholesky(j @ op @ j)
    return factor_to_params(j @ low.conj().T @ j)


def _quadratic_forms(probes, rates):
    """Q_k with mu_k = rate_k * x^T Q_k x."""
    g = np.einsum("pij,kj->kip", _BASIS, probes.vectors)  # (K, 4, 16)
    q = np.einsum("kip,kiq->kpq", g.conj(), g).real
    return q * rates[:, None, None]


class _PoissonModel:
    def __init__(self, counts, q, background):
        self.n = counts
        self.q = q
        self.b = background

    def means(self, x):
        return np.einsum("p,kpq,q->k", x, self.q, x) + self.b

    def loglik(self, x):
        """Log-likelihood minus its saturated-model value (<= 0).

        Written as ``n (log1p(u) - u)`` with ``u = mu/n - 1`` so a near-perfect
        fit is resolved to relative precision instead of being lost in the
        cancellation of large terms.
        """
        mu = self.means(x)
        pos = self.n > 0
        if np.any(mu[pos] <= 0):
            return -np.inf
        u = (mu[pos] - self.n[pos]) / self.n[pos]
        return float(np.sum(self.n[pos] * (np.log1p(u) - u)) - mu[~pos].sum())

    def grad_hess(self, x):
        mu = self.means(x)
        qx = 2 * np.einsum("kpq,q->kp", self.q, x)
        pos = self.n > 0
        w = -np.ones_like(mu)
        w[pos] += self.n[pos] / mu[pos]
        g = w @ qx
        h = 2 * np.einsum("k,kpq->pq", w, self.q)
        c = np.zeros_like(mu)
        c[pos] = self.n[pos] / mu[pos] ** 2
        h -= np.einsum("k,kp,kq->pq", c, qx, qx)
        return g, h


def _ascend(model, x, max_iter):
    """Damped Newton ascent with a backtracking (and stretching) line search."""
    f = model.loglik(x)
    history = [f]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g, h = model.grad_hess(x)
        if np.linalg.norm(g) < GRAD_TOL:
            converged = True
            it -= 1
            break
        lam, vec = np.linalg.eigh(-h)
        floor = 1e-12 * max(np.abs(lam).max(), 1e-300)
        d = vec @ ((vec.T @ g) / np.maximum(np.abs(lam), floor))
        slope = g @ d
        if slope <= 0:
            d, slope = g, g @ g
        step, accepted = 1.0, None
        while step > 1e-20:
            f_new = model.loglik(x + step * d)
            if f_new >= f + 1e-4 * step * slope:
                accepted = step
                break
            step /= 2
        if accepted is None:
            # No ascent direction left at working precision.
            converged = np.linalg.norm(g) < GRAD_TOL * 1e3
            break
        if accepted == 1.0:
            # Flat (quartic) directions at rank-deficient optima converge
            # linearly under unit Newton steps; longer steps close them faster.
            for longer in (2.0, 3.0):
                f_try = model.loglik(x + longer * d)
                if f_try > f_new:
                    accepted, f_new = longer, f_try
        x = x + accepted * d
        change = f_new - f
        f = f_new
        history.append(f)
        if abs(change) <= REL_LL_TOL * max(abs(f), 1e-300):
            converged = True
            break
    return x, f, it, converged, history


def reconstruct(records, probes: ProbeSet, fit_rate_scale=False, background=None, max_iter=MAX_ITER) -> ReconstructionResult:
    """Maximum-likelihood POVM element from 16 count records.

    The log-likelihood is ``sum_k n_k log mu_k - mu_k`` measured relative
    to the saturated model (so 0 is a perfect fit). With ``fit_rate_scale``
    the common calibration factor is a free parameter; it is degenerate with
    the trace of Pi, so the operator is returned trace-normalized and the
    fitted factor is reported in ``rate_scale_factor``.
    """
    by_label = {r.label: r for r in records}
    missing = [lb for lb in probes.labels if lb not in by_label]
    if missing:
        raise ValueError(f"count records missing for probes: {', '.join(missing)}")
    recs = [by_label[lb] for lb in probes.labels]
    counts = np.array([r.counts for r in recs], dtype=float)
    rates = np.array([r.rate_scale for r in recs], dtype=float)
    bg = np.zeros(16) if background is None else np.broadcast_to(np.asarray(background, float), (16,))

    if counts.sum() == 0:
        log.warning("all counts are zero; returning the zero operator")
        return ReconstructionResult(np.zeros((4, 4), complex), 0.0, 0, True, warning="all counts zero")

    model = _PoissonModel(counts, _quadratic_forms(probes, rates), bg)
    scale = np.sqrt(max(counts.sum() - bg.sum(), counts.sum() * 1e-3) / rates.sum())
    x0 = factor_to_params(scale * np.eye(4))
    x, f, it, converged, history = _ascend(model, x0, max_iter)
    t = params_to_factor(x)
    op = t.conj().T @ t
    op = (op + op.conj().T) / 2
    factor = 1.0
    if fit_rate_scale:
        factor = float(np.trace(op).real)
        op = op / factor
    if not converged:
        log.warning("likelihood ascent stopped after %d iterations without converging", it)
    return ReconstructionResult(op, f, it, converged, rate_scale_factor=factor, history=history)


# -- transmission sweep ---------------------------------------------------------

# Counts per unit probability matching the 420 s reference Hardy runs:
# N(beta,-beta_perp) = 1984 at P = 0.0548 gives about 3.6e4.
SWEEP_RATE_SCALE = 36000.0


@dataclass(frozen=True)
class SweepPoint:
    T_h: float
    T_v: float
    gamma: float
    operator: np.ndarray  # trace-normalized reconstruction
    fidelity: float
    concurrence: float
    converged: bool

    @property
    def hv_hv(self) -> float:
        return float(self.operator[1, 1].real)

    @property
    def vh_vh(self) -> float:
        return float(self.operator[2, 2].real)

    @property
    def hv_vh(self) -> complex:
        return complex(self.operator[1, 2])

    @property
    def hv_vh_magnitude(self) -> float:
        """-|<HV|Pi|VH>|, the sign convention that ignores the VPPBS phase."""
        return -abs(self.operator[1, 2])

    @property
    def max_unplotted(self) -> float:
        mask = np.ones((4, 4), bool)
        for i, j in ((1, 1), (2, 2), (1, 2), (2, 1)):
            mask[i, j] = False
        return float(np.abs(self.operator[mask]).max())

    @staticmethod
    def theory(gamma: float):
        """Ideal (<HV|Pi|HV>, <VH|Pi|VH>, -|<HV|Pi|VH>|) after normalizing out eta."""
        return (1 + gamma) / 2, (1 - gamma) / 2, -np.sqrt(1 - gamma**2) / 2


def sweep_reconstruction(t_h_values, t_v_fixed: float, noise=None, seed: int = 0,
                         rate_scale: float = SWEEP_RATE_SCALE, duration: float = 1.0):
    """Tomography at each T_H with T_V fixed (both transmission probabilities).

    ``noise=None`` feeds exact expected counts to the reconstruction. With a
    :class:`~polproj.expsim.NoiseModel` the device is the dephased POVM and
    counts are Poisson, each point seeded from ``seed`` independently.
    """
    from . import expsim
    from .optics import VppbsSettings, compose_projector

    if not 0 <= t_v_fixed <= 1:
        raise ValueError(f"t_v_fixed must lie in [0, 1], got {t_v_fixed}")
    t_h_values = [float(t) for t in t_h_values]
    probes = probe_states()
    seeds = np.random.SeedSequence(seed).spawn(len(t_h_values))
    points = []
    for T_h, ss in zip(t_h_values, seeds):
        settings = VppbsSettings.from_transmissions(T_h, t_v_fixed)
        _, psi, ideal = compose_projector(settings)
        if noise is None:
            records = expected_counts(ideal, probes, rate_scale, duration)
            bg = None
        else:
            device = expsim.noisy_povm(settings, noise)
            means = expsim.count_means(predicted_probabilities(device, probes), rate_scale, duration, noise)
            counts = np.random.default_rng(ss).poisson(means)
            records = [CountRecord(lb, int(n), duration, rate_scale) for lb, n in zip(probes.labels, counts)]
            bg = noise.dark_rate * duration
        res = reconstruct(records, probes, background=bg)
        op = res.operator / np.trace(res.operator).real
        points.append(SweepPoint(
            T_h=T_h,
            T_v=t_v_fixed,
            gamma=settings.gamma,
            operator=op,
            fidelity=operator_fidelity(op, psi.projector()),
            concurrence=concurrence_mixed(op),
            converged=res.converged,
        ))
    return points

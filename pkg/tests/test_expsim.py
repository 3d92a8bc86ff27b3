import numpy as np
import pytest

from polproj.expsim import (
    IDEAL,
    DelayScan,
    NoiseModel,
    coincidence_vs_delay,
    count_means,
    dephase,
    hardy_expected_counts,
    noisy_povm,
    overlap_visibility,
    simulate_hardy_run,
)
from polproj.hardy import HARDY_LABELS, ZERO_LABELS, hardy_inequality
from polproj.optics import IDENTITY_SETTINGS, VppbsSettings, compose_projector, expectation, psi_tilde
from polproj.states import SINGLET, TwoPhotonState, concurrence_mixed, operator_fidelity, random_state


def test_noise_model_validation():
    with pytest.raises(ValueError, match="hom_visibility"):
        NoiseModel(hom_visibility=1.2)
    with pytest.raises(ValueError, match="t_h_range"):
        NoiseModel(t_h_range=(0.5, 0.2))
    with pytest.raises(ValueError, match="dark_rate"):
        NoiseModel(dark_rate=-1)


def test_ideal_noise_reproduces_projector():
    s = VppbsSettings(0.8, 0.6, 0.4)
    assert np.array_equal(noisy_povm(s, IDEAL), compose_projector(s)[2])


def test_visibility_sets_concurrence_at_gamma_zero():
    op = noisy_povm(IDENTITY_SETTINGS, NoiseModel(hom_visibility=0.9))
    assert concurrence_mixed(op) == pytest.approx(0.90, abs=1e-12)
    assert operator_fidelity(op, SINGLET.projector()) == pytest.approx(np.sqrt(0.95), abs=1e-12)


def test_noisy_povm_stays_psd():
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = VppbsSettings(rng.uniform(), rng.uniform(), rng.uniform(-3, 3))
        if s.total < 1e-6:
            continue
        op = noisy_povm(s, NoiseModel(hom_visibility=rng.uniform()))
        assert np.linalg.eigvalsh(op).min() > -1e-14


def test_range_error_names_bound():
    nominal = NoiseModel.nominal()
    with pytest.raises(ValueError, match="T_H .* maximum 0.95"):
        noisy_povm(VppbsSettings(1.0, 0.5), nominal)
    with pytest.raises(ValueError, match="T_V .* minimum 0.02"):
        noisy_povm(VppbsSettings(0.5, 0.1), nominal)


def test_dephase():
    m = np.arange(16).reshape(4, 4).astype(complex)
    d = dephase(m, 0.0)
    assert np.array_equal(d, np.diag(np.diag(m)))


def test_count_means_background():
    means = count_means([0.0, 0.5], 100, 2.0, NoiseModel(dark_rate=3))
    assert means == pytest.approx([6, 56])


def test_hom_dip_for_hh():
    delays = np.linspace(-8, 8, 161)
    scan = coincidence_vs_delay(TwoPhotonState.from_label("HH"), IDENTITY_SETTINGS, DelayScan(delays, 1.0))
    centre = scan.probabilities[80]
    assert abs(centre) < 1e-10
    far = scan.probabilities[np.abs(delays) > 5]
    assert np.allclose(far, 0.5, atol=1e-5)


def test_hom_plateau_beyond_five_sigma():
    # The Gaussian leaves 0.5 exp(-12.5) = 1.9e-6 of the dip at 5 sigma; it
    # drops below 1e-10 only past 6.8 sigma.
    scan = coincidence_vs_delay(TwoPhotonState.from_label("HH"), IDENTITY_SETTINGS, DelayScan([5.0, 6.9, 8.0], 1.0))
    dev = np.abs(scan.probabilities - 0.5)
    assert dev[0] == pytest.approx(0.5 * np.exp(-12.5), rel=1e-9)
    assert dev[1] < 1e-10 and dev[2] < 1e-10


def test_singlet_peak():
    scan = coincidence_vs_delay(SINGLET, IDENTITY_SETTINGS, DelayScan([0.0, 10.0], 1.0))
    assert scan.probabilities[0] == pytest.approx(1)
    assert scan.probabilities[1] == pytest.approx(0.5)


def test_zero_visibility_is_flat():
    scan = coincidence_vs_delay(
        TwoPhotonState.from_label("HH"), IDENTITY_SETTINGS, DelayScan(np.linspace(-3, 3, 7), 1.0), NoiseModel(hom_visibility=0)
    )
    assert np.ptp(scan.probabilities) < 1e-15


def test_delay_zero_matches_noisy_povm_in_hv_span():
    noise = NoiseModel(hom_visibility=0.8)
    s = VppbsSettings(0.9, 0.4)
    for psi in (psi_tilde(0.3), TwoPhotonState.from_label("HV"), SINGLET):
        scan = coincidence_vs_delay(psi, s, DelayScan([0.0], 1.0), noise)
        assert scan.probabilities[0] == pytest.approx(expectation(noisy_povm(s, noise), psi), abs=1e-12)


def test_delay_scan_reduces_to_oracle_at_unit_visibility():
    rng = np.random.default_rng(1)
    s = VppbsSettings(0.7, 0.9, 0.5)
    psi = random_state(rng)
    scan = coincidence_vs_delay(psi, s, DelayScan([0.0], 1.0))
    assert scan.probabilities[0] == pytest.approx(expectation(compose_projector(s)[2], psi), abs=1e-12)


def test_overlap_visibility():
    assert overlap_visibility(0.0, 2.0, 0.9) == pytest.approx(0.9)
    assert overlap_visibility(2.0, 2.0) == pytest.approx(np.exp(-0.5))
    with pytest.raises(ValueError):
        DelayScan([0.0], 0.0)


def test_ideal_hardy_run_has_zero_rows():
    means = hardy_expected_counts(0.645, IDEAL, 86.0, 420.0)
    for lb in ZERO_LABELS:
        # Probabilities vanish to round-off (~1e-17) before scaling to counts.
        assert means[lb] < 1e-9
    counts = simulate_hardy_run(0.645, IDEAL, 86.0, 420.0, seed=0)
    assert all(counts[lb] == 0 for lb in ZERO_LABELS)


def test_noisy_hardy_run():
    noise = NoiseModel(hom_visibility=0.9, dark_rate=0.05)
    counts = simulate_hardy_run(0.645, noise, 86.0, 420.0, seed=1)
    assert all(counts[lb] > 0 for lb in HARDY_LABELS)
    assert hardy_inequality(counts)[0] > 0


def test_hardy_run_is_seeded():
    a = simulate_hardy_run(0.645, NoiseModel(hom_visibility=0.9), 86.0, 420.0, seed=3)
    b = simulate_hardy_run(0.645, NoiseModel(hom_visibility=0.9), 86.0, 420.0, seed=3)
    assert a.counts == b.counts

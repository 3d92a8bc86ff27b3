import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polproj.hardy import (
    HARDY_LABELS,
    QUOTED_P1,
    ZERO_LABELS,
    HardyCounts,
    Measured,
    conditional_inference,
    hardy_angles,
    hardy_inequality,
    hardy_probabilities,
    joint_probability,
    linear_polarization_state,
    quoted_inference,
    table_i_counts,
)
from polproj.optics import compose_projector, expectation, optimal_efficiency, optimal_settings
from polproj.states import H, V, concurrence_pure, tensor_state
from polproj.optics import psi_tilde


def test_linear_polarization_state():
    assert np.allclose(linear_polarization_state(0), H)
    assert np.allclose(linear_polarization_state(np.pi / 2), V)


def test_angles_examples():
    a = hardy_angles(0)
    assert (a.alpha, a.beta) == pytest.approx((np.pi / 4, -np.pi / 4))
    a = hardy_angles(0.645)
    r = 1.645 / 0.355
    assert math.tan(a.alpha) == pytest.approx(r**0.25)
    assert math.tan(a.beta) == pytest.approx(-(r**0.75))
    assert a.alpha == pytest.approx(0.9725, abs=1e-3)
    assert a.beta == pytest.approx(-1.2641, abs=1e-3)


def test_alpha_monotone_in_gamma():
    alphas = [hardy_angles(g).alpha for g in np.linspace(0, 0.99, 50)]
    assert all(b > a for a, b in zip(alphas, alphas[1:]))
    assert alphas[-1] > np.pi / 4


@pytest.mark.parametrize("gamma", [1, -1, 1.5])
def test_angles_domain(gamma):
    with pytest.raises(ValueError):
        hardy_angles(gamma)


@given(st.floats(0, 0.99))
def test_zero_conditions_hold(gamma):
    p = hardy_probabilities(gamma)
    for lb in ZERO_LABELS:
        assert p[lb] < 1e-12


def test_negative_gamma_needs_swapped_modes():
    g = -0.4
    ang = hardy_angles(g)
    for lb in ZERO_LABELS:
        t1, t2 = ang.pair(lb)
        assert joint_probability(t2, t1, g, 1.0) < 1e-12


def test_parallel_polarizations_rejected_at_gamma_zero():
    for t in np.linspace(0, np.pi, 13):
        assert joint_probability(t, t, 0.0, 1.0) < 1e-30


def test_frozen_probabilities_at_645():
    eta = optimal_efficiency(0.645)
    p = hardy_probabilities(0.645, eta)
    assert p["beta,-beta_perp"] == pytest.approx(0.0548145, abs=1e-7)
    assert p["beta,-alpha_perp"] == pytest.approx(0.14363, abs=1e-5)
    assert p["alpha,-beta_perp"] == pytest.approx(p["beta,-alpha_perp"], abs=1e-12)


def test_joint_probability_matches_operator():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = rng.uniform(-0.95, 0.95)
        t1, t2 = rng.uniform(-np.pi, np.pi, 2)
        s = optimal_settings(g)
        op = compose_projector(s)[2]
        state = tensor_state(linear_polarization_state(t1), linear_polarization_state(t2))
        assert joint_probability(t1, t2, g, s.eta) == pytest.approx(expectation(op, state), abs=1e-14)


def test_optimum_near_645():
    grid = np.arange(0.0001, 0.99, 1e-4)
    vals = [hardy_probabilities(g)["beta,-beta_perp"] for g in grid]
    best = grid[int(np.argmax(vals))]
    assert abs(best - 0.645) <= 0.01
    assert concurrence_pure(psi_tilde(best)) == pytest.approx(0.764, abs=1e-3)


def test_table_i_inequality():
    lhs, sigma, k = hardy_inequality(table_i_counts())
    assert lhs == 420
    assert sigma == pytest.approx(59.565, abs=1e-3)
    assert k == pytest.approx(7.051, abs=1e-3)


def test_all_equal_counts_violate():
    c = HardyCounts({lb: 100 for lb in HARDY_LABELS}, 10.0)
    assert hardy_inequality(c)[0] < 0


def test_table_i_inference_quoted():
    inf = quoted_inference(table_i_counts())
    assert inf.p1.value == QUOTED_P1
    assert inf.p2.value == pytest.approx(0.737, abs=5e-4)
    assert inf.expected.value == pytest.approx(1202, abs=1)
    assert inf.expected.sigma == pytest.approx(71, abs=1)
    assert inf.observed == 727
    assert 5.5 < inf.discrepancy_sigmas < 7.5


def test_table_i_inference_raw():
    inf = conditional_inference(table_i_counts())
    assert inf.p1.value == pytest.approx(1404 / 1744)
    assert inf.p1.value == pytest.approx(0.805, abs=1e-3)
    assert inf.p2.value == pytest.approx(1391 / 1888)
    # Raw Poisson errors are ~0.01, three times smaller than the quoted 0.03.
    assert inf.p1.sigma == pytest.approx(0.0095, abs=5e-4)


def test_ideal_inference_gives_unit_conditionals():
    p = hardy_probabilities(0.645, optimal_efficiency(0.645))
    counts = HardyCounts({lb: 1e6 * v for lb, v in p.items()}, 1.0)
    inf = conditional_inference(counts)
    assert inf.p1.value == pytest.approx(1) and inf.p2.value == pytest.approx(1)


def test_scaling_counts():
    base = conditional_inference(table_i_counts())
    big = conditional_inference(table_i_counts().scaled(4))
    assert big.p1.value == pytest.approx(base.p1.value)
    assert big.p2.value == pytest.approx(base.p2.value)
    assert big.discrepancy_sigmas / base.discrepancy_sigmas == pytest.approx(2, rel=1e-9)


def test_override_with_measured():
    inf = conditional_inference(table_i_counts(), p1=Measured(0.5, 0.1))
    assert inf.p1.value == 0.5


def test_zero_denominator():
    c = dict(table_i_counts().counts)
    c["beta,-alpha"] = c["beta,-alpha_perp"] = 0
    with pytest.raises(ValueError, match="denominator"):
        conditional_inference(HardyCounts(c))


def test_counts_validation():
    with pytest.raises(ValueError, match="missing"):
        HardyCounts({"beta,-alpha": 1})
    c = dict(table_i_counts().counts)
    c["gamma,-delta"] = 3
    with pytest.raises(ValueError, match="unknown"):
        HardyCounts(c)


def test_measured_format():
    assert f"{Measured(1202.3, 71.2):.0f}" == "1202 +/- 71"

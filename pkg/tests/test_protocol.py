import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attenuator_lab.attenuator import apply_thermal_attenuator_closed_form
from attenuator_lab.cohinfo import coherent_information_fock_env
from attenuator_lab.fock import (
    CutoffError,
    FockCutoff,
    beamsplitter_unitary,
    fock_state,
    photon_moments,
    thermal_state,
    trace_distance,
)
from attenuator_lab.protocol import (
    ProtocolConfig,
    ThermalisationModel,
    TriggerState,
    capacity_certificate,
    continuity_penalty,
    fock_distance_bound,
    protocol_end_to_end,
    steer_environment_ideal,
    steer_environment_memoryful,
    trigger_cascade_state,
    two_pulse_environment,
    two_pulse_level,
)

# mpmath (50 digits) evaluation of the penalty at eps=0.01, alpha=1, N=0.5, N0=1/0.1+2
HAND_PENALTY = 65.545770710592682


def linear_optics_oracle(lam, nu, n, k):
    """Ideal steering acts on |n> as a thermal attenuator of transmissivity ``1 - lam^k``."""
    return apply_thermal_attenuator_closed_form(1 - lam**k, nu, fock_state(n, n + 1), FockCutoff(n + 60, 1e-10))


def test_single_trigger_is_fock():
    t = trigger_cascade_state(0.4, 3, 1)
    assert t.configs == ((3,),)
    assert abs(t.amplitudes[0]) == pytest.approx(1.0)


def test_two_triggers_single_splitter():
    lam, n = 0.5, 3
    t = trigger_cascade_state(lam, n, 2)
    block = beamsplitter_unitary(2 / 3, n).blocks[n]
    # sector basis index is the photon number of the first mode; the seed |0, n> is index 0
    expected = {(j, n - j): block[j, 0] for j in range(n + 1)}
    for c, a in zip(t.configs, t.amplitudes):
        assert a == pytest.approx(expected[c], abs=1e-14)


def test_cascade_conserves_photons_and_shares_geometrically():
    t = trigger_cascade_state(0.3, 3, 4)
    means = t.mode_means()
    assert means.sum() == pytest.approx(3.0, abs=1e-12)
    assert np.linalg.norm(t.amplitudes) == pytest.approx(1.0)
    # S_k meets the environment last and keeps the largest share: lam^(k-j)(1-lam)/(1-lam^k)
    lam, k = 0.3, 4
    w = np.array([lam ** (k - j) * (1 - lam) / (1 - lam**k) for j in range(1, k + 1)])
    np.testing.assert_allclose(means, 3 * w, atol=1e-12)


@pytest.mark.parametrize("lam,nu,n,k", [(0.3, 0.0, 3, 6), (0.5, 0.2, 2, 3), (0.7, 1.0, 1, 4), (0.2, 0.5, 4, 2)])
def test_ideal_steering_matches_linear_optics_oracle(lam, nu, n, k):
    sigma = steer_environment_ideal(trigger_cascade_state(lam, n, k), lam, nu)
    ref = linear_optics_oracle(lam, nu, n, k)
    d = max(sigma.d, ref.d)
    a = np.zeros((d, d), dtype=complex)
    b = np.zeros((d, d), dtype=complex)
    a[: sigma.d, : sigma.d] = sigma.entries
    b[: ref.d, : ref.d] = ref.entries
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_steered_mean_photon_number():
    lam, nu, n, k = 0.4, 0.3, 3, 5
    sigma = steer_environment_ideal(trigger_cascade_state(lam, n, k), lam, nu)
    assert photon_moments(sigma)[0] == pytest.approx((1 - lam**k) * n + lam**k * nu, abs=1e-9)


def test_memoryful_linear_in_small_dt():
    lam, nu, n, k = 0.3, 0.1, 3, 6
    trigger = trigger_cascade_state(lam, n, k)
    ideal = steer_environment_ideal(trigger, lam, nu)
    slopes = []
    for r in (1e-2, 1e-4, 1e-6, 1e-8):
        cfg = ProtocolConfig(lam, nu, n, k, ThermalisationModel("exponential", r, 1.0))
        slopes.append(trace_distance(steer_environment_memoryful(trigger, cfg), ideal).raw / r)
    # distance to the ideal state is first order in dt/t_E with a fixed coefficient
    assert abs(slopes[-1] - slopes[-2]) <= 1e-3 * slopes[-1]
    assert slopes[-1] < 2 * k * (n + 2 * nu + 1)


def test_memoryful_monotone_in_dt():
    lam, nu, n, k = 0.3, 0.0, 3, 6
    trigger = trigger_cascade_state(lam, n, k)
    ideal = steer_environment_ideal(trigger, lam, nu)
    dists = []
    for r in (1e-6, 1e-3, 1e-2, 0.1, 1.0):
        cfg = ProtocolConfig(lam, nu, n, k, ThermalisationModel("exponential", r, 1.0))
        dists.append(trace_distance(steer_environment_memoryful(trigger, cfg), ideal).half)
    assert all(b > a for a, b in zip(dists, dists[1:]))


def test_hard_reset_limits():
    lam, nu, n, k = 0.3, 0.4, 2, 4
    trigger = trigger_cascade_state(lam, n, k)
    reset = steer_environment_memoryful(trigger, ProtocolConfig(lam, nu, n, k, ThermalisationModel("hard-reset", 2.0, 1.0)))
    tau = thermal_state(nu, reset.d)
    np.testing.assert_allclose(np.diag(reset.entries).real, tau.probs, atol=1e-12)
    keep = steer_environment_memoryful(trigger, ProtocolConfig(lam, nu, n, k, ThermalisationModel("hard-reset", 0.5, 1.0)))
    ideal = steer_environment_ideal(trigger, lam, nu)
    assert trace_distance(keep, ideal).raw < 1e-13


def test_final_xi_flag():
    lam, nu, n, k = 0.3, 0.0, 2, 3
    trigger = trigger_cascade_state(lam, n, k)
    model = ThermalisationModel("hard-reset", 1.0, 1.0)
    with_final = steer_environment_memoryful(trigger, ProtocolConfig(lam, nu, n, k, model))
    without = steer_environment_memoryful(trigger, ProtocolConfig(lam, nu, n, k, model, final_xi=False))
    assert with_final.entries[0, 0].real == pytest.approx(1.0)
    # the last collision alone leaves the environment in Phi_{1-lam, tau_0}(|n_k>) averaged over the trigger
    assert without.entries[0, 0].real < 1.0


def test_env_cutoff_too_small():
    trigger = trigger_cascade_state(0.3, 3, 3)
    cfg = ProtocolConfig(0.3, 1.0, 3, 3, env_cutoff=FockCutoff(4, 1e-10))
    with pytest.raises(CutoffError):
        steer_environment_memoryful(trigger, cfg)


def test_two_pulse_half():
    assert two_pulse_level(0.5) == 2
    sigma, nl = two_pulse_environment(0.5, 0.0)
    assert nl == 2
    np.testing.assert_allclose(np.diag(sigma.entries).real[:3], [1 / 16, 6 / 16, 9 / 16], atol=1e-14)
    assert np.trace(sigma.entries).real == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("lam", [0.05, 0.1, 0.3, 1 / 3, 0.45])
def test_two_pulse_energy(lam):
    nl = two_pulse_level(lam)
    assert 1 / lam - 1 <= nl <= 1 / lam + 1e-12
    sigma, _ = two_pulse_environment(lam, 0.0)
    assert photon_moments(sigma)[0] == pytest.approx((1 - lam**2) * nl, abs=1e-9)


def test_distance_bound_values():
    assert fock_distance_bound(0, 0.0, 0.3, 4).value == 0.0
    b = fock_distance_bound(2, 0.2, 0.4, 3)
    assert b.value == pytest.approx(0.88083160706232607, abs=1e-14)
    sigma = steer_environment_ideal(trigger_cascade_state(0.4, 2, 3), 0.4, 0.2)
    assert trace_distance(sigma, fock_state(2, sigma.d)).raw <= b.value
    vals = [fock_distance_bound(3, 0.1, 0.5, k).value for k in (1, 5, 10, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-5


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.floats(0.0, 50.0), st.floats(0.0, 1.0), st.integers(1, 60))
def test_distance_bound_radicand_nonnegative(n, nu, lam, k):
    # x(Ax + B) with B >= 0 and A + B = (n - nu)^2 + nu^2 >= 0 cannot go negative on [0, 1]
    b = fock_distance_bound(n, nu, lam, k)
    assert b.radicand >= -1e-9 * (1 + n * n + nu * nu)
    assert b.value >= 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0.0, 1.0), st.integers(0, 3), st.integers(1, 5))
def test_bound_dominates_ideal_distance(lam, nu, n, k):
    sigma = steer_environment_ideal(trigger_cascade_state(lam, n, k), lam, nu)
    dist = trace_distance(sigma, fock_state(n, sigma.d)).raw
    assert dist <= fock_distance_bound(n, nu, lam, k).value + 1e-9


def test_continuity_penalty():
    assert continuity_penalty(0.0, 1.0, 0.5, 3.0) == 0.0
    assert continuity_penalty(0.01, 1.0, 0.5, 1 / 0.1 + 2) == pytest.approx(HAND_PENALTY, abs=1e-12)
    with pytest.raises(ValueError):
        continuity_penalty(1.0, 1.0, 0.5, 1.0)


def test_certificate_examples():
    exact = capacity_certificate(fock_state(3, 5).to_density(), 0.3, 3, 0.5)
    assert exact.eps == 0 and exact.penalty == 0
    assert exact.lower == exact.upper == exact.icoh_ideal == coherent_information_fock_env(0.5, 3, 0.3)
    far = capacity_certificate(fock_state(0, 5).to_density(), 0.3, 3, 0.5)
    assert not far.applicable
    assert math.isnan(far.lower)


def test_end_to_end_cascade():
    rep = protocol_end_to_end(ProtocolConfig(0.3, 0.0, 3, 6), 0.5)
    assert rep.icoh > 0
    assert rep.rate == pytest.approx(rep.icoh / 7)
    assert rep.bound_applies and rep.bound_holds
    assert len(rep.row()) == 14
    assert "per use" in rep.summary()


def test_end_to_end_two_pulse_small_lambda():
    lam = 0.05
    nl = two_pulse_level(lam)
    rep = protocol_end_to_end(ProtocolConfig(lam, 0.0, nl, 2), 0.5)
    assert rep.icoh > 0
    assert rep.rate == pytest.approx(rep.icoh / 3)


def test_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(1.0, 0.0, 1, 1)
    with pytest.raises(ValueError):
        ProtocolConfig(0.5, -1.0, 1, 1)
    with pytest.raises(ValueError):
        ProtocolConfig(0.5, 0.0, 1, 0)
    with pytest.raises(ValueError):
        ThermalisationModel("linear", 1.0, 1.0)
    with pytest.raises(ValueError):
        steer_environment_memoryful(trigger_cascade_state(0.5, 1, 2), ProtocolConfig(0.5, 0.0, 1, 3))


def test_fock_trigger_constructor():
    t = TriggerState.fock((1, 0, 2))
    assert t.modes == 3
    np.testing.assert_allclose(t.mode_means(), [1, 0, 2])

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attenuator_lab.attenuator import AttenuatorSpec, apply_general_attenuator
from attenuator_lab.cohinfo import (
    UnsupportedOracleError,
    coherent_information_bruteforce,
    coherent_information_fock_env,
    coherent_information_fock_env_with_error,
    coherent_information_stinespring,
    ea_lower_bound,
    fig1_sweep,
    g,
    p_distribution,
)
from attenuator_lab.fock import CutoffError, DensityMatrix, FockCutoff, fock_state, thermal_state, von_neumann_entropy

# dense expm dilation on a 40 x 40 two-mode space with explicit reference-mode purification
FROZEN_ICOH = {
    (0.5, 2, 0.7): -0.0863282270216752,
    (0.5, 1, 0.3): -0.013015107202411391,
}


def test_g_values():
    assert g(0) == 0.0
    assert g(1) == pytest.approx(2.0, abs=1e-15)
    assert g(0.5) == pytest.approx(1.5 * math.log2(3) - 1, abs=1e-15)
    assert g(1e-300) >= 0
    with pytest.raises(ValueError):
        g(-0.1)


def test_p_distribution_closed_cases():
    N, lam = 0.7, 0.35
    p = p_distribution(N, 0, lam)
    l = np.arange(p.l_max + 1)
    np.testing.assert_allclose(p.probs, (lam * N) ** l / (1 + N * lam) ** (l + 1), rtol=1e-12, atol=1e-300)
    thermal = p_distribution(N, 4, 1.0)
    l = np.arange(thermal.l_max + 1)
    np.testing.assert_allclose(thermal.probs, N**l / (N + 1) ** (l + 1), rtol=1e-12, atol=1e-300)
    point = p_distribution(N, 4, 0.0)
    assert point.probs[4] == pytest.approx(1.0, abs=1e-15)
    assert point.probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_p_distribution_is_dilation_spectrum():
    N, n, lam = 0.5, 3, 0.4
    tau = thermal_state(N, FockCutoff(70, 1e-12))
    out = apply_general_attenuator(AttenuatorSpec(lam, fock_state(n, n + 1)), tau)
    diag = np.diag(out.entries).real
    p = p_distribution(N, n, lam)
    np.testing.assert_allclose(p.probs[:40], diag[:40], atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 5.0), st.integers(0, 60), st.floats(0.0, 1.0))
def test_p_distribution_normalised(N, n, lam):
    p = p_distribution(N, n, lam)
    assert np.all(p.probs >= 0)
    assert abs(p.probs.sum() + p.tail_mass - 1) <= 1e-9
    assert p.tail_mass <= 1e-12
    assert p.mean == pytest.approx(lam * N + (1 - lam) * n)


def test_p_distribution_explicit_cutoff_error():
    with pytest.raises(CutoffError):
        p_distribution(1.0, 10, 0.5, l_max=5)
    with pytest.raises(ValueError):
        p_distribution(1.0, 2, 1.2)


def test_half_is_zero_and_antisymmetry():
    assert coherent_information_fock_env(0.5, 7, 0.5) == 0.0
    for N, n, lam in [(0.3, 2, 0.1), (1.0, 30, 0.42), (0.5, 100, 0.8)]:
        a = coherent_information_fock_env(N, n, lam)
        b = coherent_information_fock_env(N, n, 1 - lam)
        assert a == pytest.approx(-b, abs=1e-12)


@pytest.mark.parametrize("key", sorted(FROZEN_ICOH))
def test_frozen_dense_oracle_values(key):
    N, n, lam = key
    assert coherent_information_fock_env(N, n, lam) == pytest.approx(FROZEN_ICOH[key], abs=1e-10)


@pytest.mark.parametrize("N", [0.3, 0.5, 1.0])
def test_closed_form_vs_bruteforce(N):
    tau = thermal_state(N, FockCutoff(30, 1e-3))
    tau_dm = DensityMatrix(np.diag(tau.probs / tau.probs.sum()))
    for n in range(5):
        for lam in (0.1, 0.3, 0.5, 0.7, 0.9):
            brute = coherent_information_bruteforce(AttenuatorSpec(lam, fock_state(n, n + 2)), tau_dm)
            # same truncated input on the closed-form side: compare against the exact value,
            # the truncation error of a d=30 thermal state is far below 1e-6
            assert brute == pytest.approx(coherent_information_fock_env(N, n, lam), abs=1e-6)


def test_bruteforce_examples():
    N = 0.5
    tau = thermal_state(N, FockCutoff(60, 1e-12))
    S = von_neumann_entropy(tau)
    assert coherent_information_bruteforce(AttenuatorSpec(1.0, fock_state(0, 2)), tau) == pytest.approx(S, abs=1e-10)
    assert coherent_information_bruteforce(AttenuatorSpec(0.0, fock_state(0, 2)), tau) == pytest.approx(-S, abs=1e-10)
    with pytest.raises(UnsupportedOracleError):
        coherent_information_bruteforce(AttenuatorSpec(0.4, thermal_state(0.3, FockCutoff(20, 1e-6))), tau)


def test_stinespring_matches_pure_env_paths():
    N, n, lam = 0.5, 2, 0.7
    tau = thermal_state(N, FockCutoff(40, 1e-6))
    val = coherent_information_stinespring(lam, fock_state(n, n + 1), tau)
    assert val == pytest.approx(FROZEN_ICOH[(N, n, lam)], abs=1e-6)


def test_stinespring_mixed_environment_against_dense_reference():
    # dense reference: explicit purification of sigma into a second environment mode
    from scipy.linalg import expm

    rng = np.random.default_rng(11)
    d = 4
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    H = rng.normal(size=(3, 3))
    sigma = H @ H.T
    sigma /= np.trace(sigma)
    lam = 0.37
    D = d + 3 - 1
    a = np.diag(np.sqrt(np.arange(1, D)), 1)
    A, B = np.kron(a, np.eye(D)), np.kron(np.eye(D), a)
    U = expm(np.arccos(np.sqrt(lam)) * (A.T @ B - A @ B.T))
    w, V = np.linalg.eigh(rho)
    ws, Vs = np.linalg.eigh(sigma)
    psi = np.zeros((D, d), dtype=complex)
    psi[:d] = V * np.sqrt(np.clip(w, 0, None))
    phi = np.zeros((D, 3))
    phi[:3] = Vs * np.sqrt(np.clip(ws, 0, None))
    # global amplitudes [s, e, r, f]
    C = np.einsum("sr,ef->serf", psi, phi).reshape(D * D, d * 3)
    C = (U @ C).reshape(D, D, d, 3)
    rho_s = np.einsum("serf,terf->st", C, C.conj())
    rho_ef = np.einsum("serf,sgrh->efgh", C, C.conj()).reshape(D * 3, D * 3)

    def S(m):
        p = np.linalg.eigvalsh(m)
        p = p[p > 1e-14]
        return float(-(p * np.log2(p)).sum())

    ref = S(rho_s) - S(rho_ef)
    got = coherent_information_stinespring(lam, DensityMatrix(sigma), DensityMatrix(rho))
    assert got == pytest.approx(ref, abs=1e-10)


def test_ea_lower_bound_margins():
    assert ea_lower_bound(0.5, 7, 0.5).margin == 0.0
    pos = ea_lower_bound(0.5, 100, 0.4)
    assert pos.margin > 0
    assert pos.ea_lower == pos.noiseless_c + pos.i_coh
    assert pos.noiseless_c == pytest.approx(g(0.5))
    assert ea_lower_bound(0.5, 5, 0.05).margin < 0


def test_error_estimate_is_small():
    val, err = coherent_information_fock_env_with_error(0.5, 50, 0.3)
    assert 0 <= err < 1e-9
    assert math.isfinite(val)


def test_fig1_sweep_layout():
    lam_grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    rows = fig1_sweep(0.5, [10, 20], lam_grid)
    assert len(rows) == 10
    assert [r.n for r in rows] == [10] * 5 + [20] * 5
    assert all(r.i_coh == 0.0 for r in rows if r.lam == 0.5)

"""Steering a fibre environment towards a Fock state with trigger pulses.

A train of ``k`` trigger modes ``S_1 .. S_k`` collides one after another
with the environment mode ``E`` through the fibre beam splitter ``U_lam``.
Between collisions the environment may relax towards ``tau_nu`` through a
thermalisation channel ``xi``.  The resulting environment state ``sigma``
sets the channel ``Phi_{lam,sigma}`` seen by the next, information-carrying,
pulse.

The simulator keeps the joint density matrix of the not-yet-used trigger
modes and ``E`` in an occupation-number basis (all configurations with at
most ``n`` trigger photons), collides the first remaining trigger with
``E``, traces it out and applies ``xi``.  The cost grows like
``C(n + k, k)^2 * d_E^2``, which is fine for ``n <= 4``, ``k <= 6``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .attenuator import FockTransitionTable, energy_limited_coefficients
from .cohinfo import coherent_information_fock_env, coherent_information_stinespring, g
from .fock import (
    CutoffError,
    DensityMatrix,
    FockCutoff,
    beamsplitter_unitary,
    fock_state,
    photon_moments,
    thermal_cutoff,
    thermal_state,
    trace_distance,
)

__all__ = [
    "ThermalisationModel",
    "ProtocolConfig",
    "TriggerState",
    "DistanceBound",
    "CertificateReport",
    "ProtocolReport",
    "trigger_cascade_state",
    "steer_environment_ideal",
    "steer_environment_memoryful",
    "two_pulse_environment",
    "two_pulse_level",
    "fock_distance_bound",
    "continuity_penalty",
    "capacity_certificate",
    "protocol_end_to_end",
    "PROTOCOL_CSV_COLUMNS",
]

ENV_TAIL_TOL = 1e-12


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class ThermalisationModel:
    """Relaxation ``xi_dt`` of the environment between pulses.

    ``exponential``: thermal attenuator ``Phi_{eta, tau_nu}`` with
    ``eta = exp(-dt / t_E)``.
    ``hard-reset``: identity for ``dt < t_E``, replacement by ``tau_nu``
    otherwise.
    """

    variant: str
    dt: float
    t_E: float

    def __post_init__(self):
        if self.variant not in ("exponential", "hard-reset"):
            raise ValueError(f"unknown thermalisation variant {self.variant!r}")
        if not self.dt > 0 or not self.t_E > 0:
            raise ValueError("dt and t_E must be positive")

    @property
    def eta(self) -> float:
        return math.exp(-self.dt / self.t_E)

    def is_identity(self) -> bool:
        return self.variant == "hard-reset" and self.dt < self.t_E


@dataclass(frozen=True)
class ProtocolConfig:
    """One protocol run.

    ``model=None`` is the ideal case with no relaxation between pulses.
    ``final_xi`` controls whether relaxation also acts after the last
    trigger, before the information-carrying pulse.
    """

    lam: float
    nu: float
    n: int
    k: int
    model: ThermalisationModel | None = None
    env_cutoff: FockCutoff | None = None
    final_xi: bool = True

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lam must lie in (0, 1), got {self.lam!r}")
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")

    @property
    def model_name(self) -> str:
        return "ideal" if self.model is None else self.model.variant

    @property
    def dt_over_tE(self) -> float:
        return 0.0 if self.model is None else self.model.dt / self.model.t_E


# --------------------------------------------------------------------------
# occupation-number bases

def _configs(modes: int, max_total: int, exact: bool = False) -> list[tuple[int, ...]]:
    """All occupations of ``modes`` modes with total ``<= max_total`` (or ``==``)."""
    if modes == 0:
        return [()]
    out = [
        c
        for c in itertools.product(range(max_total + 1), repeat=modes)
        if (sum(c) == max_total if exact else sum(c) <= max_total)
    ]
    return out


@dataclass(frozen=True)
class TriggerState:
    """Pure state of ``k`` trigger modes in an occupation basis.

    ``configs[j]`` is the occupation tuple of basis vector ``j`` and
    ``amplitudes[j]`` its amplitude.
    """

    configs: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (len(self.configs),):
            raise ValueError("one amplitude per configuration required")
        if abs(np.vdot(a, a).real - 1.0) > 1e-10:
            raise ValueError("trigger state is not normalised")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def modes(self) -> int:
        return len(self.configs[0])

    @property
    def max_photons(self) -> int:
        return max(sum(c) for c in self.configs)

    def mode_means(self) -> np.ndarray:
        occ = np.array(self.configs, dtype=float)
        return np.abs(self.amplitudes) ** 2 @ occ

    @classmethod
    def fock(cls, occupations) -> "TriggerState":
        return cls((tuple(int(x) for x in occupations),), np.ones(1))


def _apply_pair_bs(configs, amps, p: int, q: int, lam: float):
    """Beam splitter ``U_lam`` on modes ``(p, q)`` of a number-basis vector."""
    index = {c: j for j, c in enumerate(configs)}
    M_max = max(c[p] + c[q] for c in configs)
    U = beamsplitter_unitary(float(lam), M_max)
    out = np.zeros(len(configs), dtype=complex)
    for c, a in zip(configs, amps):
        if a == 0:
            continue
        M = c[p] + c[q]
        col = U.blocks[M][:, c[p]]
        for j in range(M + 1):
            if col[j] == 0:
                continue
            c2 = list(c)
            c2[p], c2[q] = j, M - j
            out[index[tuple(c2)]] += col[j] * a
    return out


def trigger_cascade_state(lam: float, n: int, k: int) -> TriggerState:
    """``U^{S1S2}_{t_2} ... U^{S_{k-1}S_k}_{t_k} |0 ... 0, n>`` with ``t_j = (1-lam)/(1-lam^j)``.

    The right-most splitter acts first, so the seed photons in ``S_k`` are
    shared backwards along the train.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
    if k < 1 or n < 0:
        raise ValueError("need k >= 1 and n >= 0")
    configs = _configs(k, n, exact=True)
    seed = (0,) * (k - 1) + (n,)
    amps = np.zeros(len(configs), dtype=complex)
    amps[configs.index(seed)] = 1.0
    for j in range(k - 1, 0, -1):
        # splitter between S_j and S_{j+1} (0-based modes j-1, j)
        t = (1.0 - lam) / (1.0 - lam ** (j + 1))
        amps = _apply_pair_bs(configs, amps, j - 1, j, t)
    amps /= np.linalg.norm(amps)
    return TriggerState(tuple(configs), amps)


# --------------------------------------------------------------------------
# collisional simulator

def _default_env_dim(n_max: int, nu: float, tail_tol: float) -> int:
    return n_max + thermal_cutoff(nu, tail_tol) + 1


class _JointState:
    """Density matrix of (remaining triggers) x E, index ``r * d + e``."""

    def __init__(self, trigger: TriggerState, env: DensityMatrix, d: int):
        self.n_max = trigger.max_photons
        self.modes = trigger.modes
        self.d = d
        self.configs = _configs(self.modes, self.n_max)
        index = {c: j for j, c in enumerate(self.configs)}
        psi = np.zeros(len(self.configs), dtype=complex)
        for c, a in zip(trigger.configs, trigger.amplitudes):
            psi[index[c]] = a
        env_m = np.zeros((d, d), dtype=complex)
        m = min(d, env.d)
        env_m[:m, :m] = env.entries[:m, :m]
        self.Z = np.kron(np.outer(psi, psi.conj()), env_m)
        self.leaked = 1.0 - float(np.trace(self.Z).real)

    def collide(self, lam: float):
        """``U_lam`` on (first remaining trigger, E), then trace the trigger out."""
        d = self.d
        rest = _configs(self.modes - 1, self.n_max)
        rest_index = {c: j for j, c in enumerate(rest)}
        U = beamsplitter_unitary(float(lam), self.n_max + d - 1)
        n_in = len(self.configs) * d
        n_out = len(rest) * d
        kraus: dict[int, tuple[list, list, list]] = {}
        for r, c in enumerate(self.configs):
            s, t = c[0], rest_index[c[1:]]
            for e in range(d):
                M = s + e
                col = U.blocks[M][:, s]
                for s2 in range(M + 1):
                    e2 = M - s2
                    if e2 >= d or col[s2] == 0.0:
                        continue
                    rows, cols, vals = kraus.setdefault(s2, ([], [], []))
                    rows.append(t * d + e2)
                    cols.append(r * d + e)
                    vals.append(col[s2])
        before = float(np.trace(self.Z).real)
        Z_new = np.zeros((n_out, n_out), dtype=complex)
        for s2 in sorted(kraus):
            rows, cols, vals = kraus[s2]
            L = sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))
            LZ = L @ self.Z
            Z_new += (L @ LZ.conj().T).conj().T
        self.Z = 0.5 * (Z_new + Z_new.conj().T)
        self.configs = rest
        self.modes -= 1
        self.leaked += before - float(np.trace(self.Z).real)

    def relax(self, model: ThermalisationModel, nu: float):
        if model.is_identity():
            return
        d = self.d
        nr = len(self.configs)
        W = self.Z.reshape(nr, d, nr, d).transpose(0, 2, 1, 3).reshape(nr * nr, d * d)
        before = float(np.trace(self.Z).real)
        if model.variant == "hard-reset":
            tau = np.zeros((d, d))
            tau[np.diag_indices(d)] = thermal_state(nu, FockCutoff(d, 1.0 - 1e-15)).probs
            block_traces = W[:, :: d + 1].sum(axis=1)
            W = np.outer(block_traces, tau.reshape(-1))
        else:
            W = W @ _thermal_superoperator(model.eta, nu, d).T
        self.Z = W.reshape(nr, nr, d, d).transpose(0, 2, 1, 3).reshape(nr * d, nr * d)
        self.Z = 0.5 * (self.Z + self.Z.conj().T)
        self.leaked += before - float(np.trace(self.Z).real)

    def environment(self) -> np.ndarray:
        d = self.d
        nr = len(self.configs)
        return np.einsum("rerf->ef", self.Z.reshape(nr, d, nr, d))


def _thermal_superoperator(eta: float, nu: float, d: int) -> np.ndarray:
    """Matrix of ``Phi_{eta,tau_nu}`` on row-major vectorised ``d x d`` operators, truncated to ``d``."""
    table = FockTransitionTable(eta, nu)
    S = np.zeros((d * d, d * d))
    for n in range(d):
        for i in range(d):
            l0 = max(i - n, 0)
            l_hi = min(d, d - (n - i))
            if l_hi <= l0:
                continue
            ls = np.arange(l0, l_hi)
            S[(ls + n - i) * d + ls, n * d + i] = table.row(n, i, l_hi - l0)
    return S


def _steer(trigger: TriggerState, lam, nu, model, env_cutoff, final_xi) -> DensityMatrix:
    tail_tol = env_cutoff.tail_tol if env_cutoff is not None else 1e-10
    d = env_cutoff.d if env_cutoff is not None else _default_env_dim(
        trigger.max_photons, nu, min(ENV_TAIL_TOL, tail_tol)
    )
    env = thermal_state(nu, FockCutoff(d, tail_tol)).to_density()
    joint = _JointState(trigger, env, d)
    k = trigger.modes
    for i in range(k):
        joint.collide(lam)
        if model is not None and (final_xi or i < k - 1):
            joint.relax(model, nu)
    if joint.leaked > tail_tol:
        raise CutoffError(
            f"environment cutoff d={d} leaked {joint.leaked:.3e} > tail_tol={tail_tol:.1e}"
        )
    sigma = joint.environment()
    sigma = 0.5 * (sigma + sigma.conj().T)
    return DensityMatrix(sigma, max(0.0, 1.0 - float(np.trace(sigma).real)))


def steer_environment_ideal(trigger: TriggerState, lam: float, nu: float, env_cutoff=None):
    """Environment state after ``k`` collisions with no relaxation in between."""
    return _steer(trigger, lam, nu, None, env_cutoff, False)


def steer_environment_memoryful(trigger: TriggerState, config: ProtocolConfig):
    """Environment state after ``k`` collisions, each followed by ``xi_dt``."""
    if trigger.modes != config.k:
        raise ValueError(f"trigger has {trigger.modes} modes, config expects k={config.k}")
    return _steer(trigger, config.lam, config.nu, config.model, config.env_cutoff, config.final_xi)


def two_pulse_level(lam: float) -> int:
    """``n_lam = floor(1/lam)``, which satisfies ``1/lam - 1 <= n_lam <= 1/lam``."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
    # guard against 1/lam landing one ulp below an integer
    n = math.floor(1.0 / lam + 1e-9)
    return n if n <= 1.0 / lam + 1e-9 else n - 1


def two_pulse_environment(lam: float, nu: float, env_cutoff=None) -> tuple[DensityMatrix, int]:
    """Environment prepared by two triggers ``U_{1/(1+lam)}|0>|n_lam>``; returns ``(sigma, n_lam)``."""
    n = two_pulse_level(lam)
    trigger = trigger_cascade_state(lam, n, 2)
    return steer_environment_ideal(trigger, lam, nu, env_cutoff), n


# --------------------------------------------------------------------------
# bounds and certificates

class DistanceBound(NamedTuple):
    value: float
    radicand: float
    clamped: bool


def fock_distance_bound(n: int, nu: float, lam: float, k: int) -> DistanceBound:
    """Upper bound ``2 sqrt(A lam^{2k} + B lam^k)`` on ``||sigma - |n><n| ||_1``.

    ``A = n^2 - (4n+1) nu + nu(2nu+1) - n`` and ``B = (2n+1) nu + n``.  A
    negative radicand is clamped to zero and flagged.
    """
    A = n * n - (4 * n + 1) * nu + nu * (2 * nu + 1) - n
    B = (2 * n + 1) * nu + n
    x = lam**k
    rad = A * x * x + B * x
    clamped = rad < 0
    return DistanceBound(2.0 * math.sqrt(max(rad, 0.0)), rad, clamped)


def continuity_penalty(eps: float, alpha: float, N: float, N0: float) -> float:
    """``56 sqrt(eps) g(4(alpha N + N0)/sqrt(eps)) + 6 g(4 sqrt(eps))``; zero at ``eps = 0``."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"continuity bound needs eps in [0, 1), got {eps!r}")
    if eps == 0.0:
        return 0.0
    r = math.sqrt(eps)
    return 56.0 * r * g(4.0 * (alpha * N + N0) / r) + 6.0 * g(4.0 * r)


@dataclass(frozen=True)
class CertificateReport:
    eps: float
    alpha: float
    N0: float
    penalty: float
    icoh_ideal: float
    lower: float
    upper: float
    applicable: bool


def capacity_certificate(sigma, lam: float, n_target: int, N: float) -> CertificateReport:
    """Interval for the energy-constrained capacity of ``Phi_{lam,sigma}``.

    The ideal channel ``Phi_{lam,|n><n|}`` has coherent information
    ``I = I_coh(tau_N)``; with ``eps = ||sigma - |n><n| ||_1 / 2`` the
    interval is ``[I - Delta, I + Delta]``.  The energy-limited coefficients
    use ``E = max(<n>_sigma, n)`` so they hold for both channels.  For
    ``eps >= 1`` the report is marked inapplicable with NaN bounds.
    """
    target = fock_state(n_target, max(n_target + 1, getattr(sigma, "d", 2)))
    eps = trace_distance(sigma, target).half
    E = max(photon_moments(sigma)[0], float(n_target))
    alpha, N0 = energy_limited_coefficients(lam, E)
    icoh = coherent_information_fock_env(N, n_target, lam)
    if eps >= 1.0:
        return CertificateReport(eps, alpha, N0, math.nan, icoh, math.nan, math.nan, False)
    delta = continuity_penalty(eps, alpha, N, N0)
    return CertificateReport(eps, alpha, N0, delta, icoh, icoh - delta, icoh + delta, True)


# --------------------------------------------------------------------------
# end to end

PROTOCOL_CSV_COLUMNS = (
    "lambda", "nu", "n", "k", "dt_over_tE", "model", "trace_dist", "bound",
    "icoh_bits", "rate_bits", "eps", "cert_lo", "cert_hi", "cert_applicable",
)


@dataclass(frozen=True)
class ProtocolReport:
    config: ProtocolConfig
    N: float
    sigma: DensityMatrix = field(repr=False)
    trace_dist: float
    bound: DistanceBound
    icoh: float
    certificate: CertificateReport

    @property
    def rate(self) -> float:
        """Coherent information per channel use, counting the ``k`` triggers."""
        return self.icoh / (self.config.k + 1)

    @property
    def bound_applies(self) -> bool:
        """The Fock distance bound covers collisions without relaxation only."""
        m = self.config.model
        return m is None or m.is_identity()

    @property
    def bound_holds(self) -> bool:
        return not self.bound_applies or self.trace_dist <= self.bound.value + 1e-8

    def row(self) -> tuple:
        c = self.config
        cert = self.certificate
        return (
            c.lam, c.nu, c.n, c.k, c.dt_over_tE, c.model_name, self.trace_dist,
            self.bound.value, self.icoh, self.rate, cert.eps, cert.lower, cert.upper,
            int(cert.applicable),
        )

    def summary(self) -> str:
        c = self.config
        cert = self.certificate
        lines = [
            f"lambda={c.lam:g} nu={c.nu:g} n={c.n} k={c.k} model={c.model_name}"
            f" dt/t_E={c.dt_over_tE:g}",
            f"  ||sigma - |n><n| ||_1 = {self.trace_dist:.6g} (bound {self.bound.value:.6g})",
            f"  I_coh(tau_{self.N:g}) = {self.icoh:.6g} bits, per use {self.rate:.6g} bits",
        ]
        if cert.applicable:
            lines.append(f"  certified interval [{cert.lower:.6g}, {cert.upper:.6g}] (eps={cert.eps:.3g})")
        else:
            lines.append(f"  certificate not applicable (eps={cert.eps:.3g})")
        return "\n".join(lines)


def _input_state(N: float):
    return thermal_state(N, FockCutoff(thermal_cutoff(N, 1e-13), 1e-12))


def protocol_end_to_end(config: ProtocolConfig, N: float, trigger: TriggerState | None = None):
    """Steer, then evaluate the channel ``Phi_{lam,sigma}`` seen by the signal."""
    trigger = trigger or trigger_cascade_state(config.lam, config.n, config.k)
    sigma = steer_environment_memoryful(trigger, config)
    target = fock_state(config.n, max(config.n + 1, sigma.d))
    dist = trace_distance(sigma, target).raw
    bound = fock_distance_bound(config.n, config.nu, config.lam, config.k)
    icoh = coherent_information_stinespring(config.lam, sigma, _input_state(N))
    cert = capacity_certificate(sigma, config.lam, config.n, N)
    return ProtocolReport(config, float(N), sigma, dist, bound, icoh, cert)

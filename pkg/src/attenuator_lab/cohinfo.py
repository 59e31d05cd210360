"""Coherent information of attenuators with a Fock environment.

With a thermal input ``tau_N`` and environment ``|n><n|`` both outputs of the
dilation are Fock-diagonal, so the coherent information reduces to a
difference of Shannon entropies of two explicit distributions,

    I_coh(Phi_{lam,|n>}, tau_N) = H(P(N, n, lam)) - H(P(N, n, 1 - lam)),

where ``P(N, n, lam)`` is the spectrum of ``Phi_{1-lam, tau_N}(|n><n|)``:

    P_l = (1+N lam)^-(l+n+1) sum_m lam^(2m+l-n) (1-lam)^(n-m) N^(l+m-n) (N+1)^m
          C(n, m) C(l, n-m),    m = max(0, n-l) .. n.

Brute-force references built on the two-mode dilation are included for
cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .attenuator import AttenuatorSpec, apply_general_attenuator, apply_weak_complementary
from .fock import (
    CutoffError,
    DensityMatrix,
    DiagonalState,
    as_matrix,
    beamsplitter_unitary,
    shannon_entropy,
    von_neumann_entropy,
)

__all__ = [
    "UnsupportedOracleError",
    "PDistribution",
    "CapacityBoundReport",
    "g",
    "p_distribution",
    "coherent_information_fock_env",
    "coherent_information_fock_env_with_error",
    "coherent_information_bruteforce",
    "coherent_information_stinespring",
    "ea_lower_bound",
    "fig1_sweep",
]

DEFAULT_TAIL_TOL = 1e-12


class UnsupportedOracleError(ValueError):
    """The requested brute-force route is not valid for this input."""


def g(x: float) -> float:
    """Entropy in bits of a thermal state with mean photon number ``x``."""
    if x < 0:
        raise ValueError(f"g is defined for x >= 0, got {x!r}")
    if x == 0:
        return 0.0
    # (x+1) log2(x+1) - x log2 x rearranged to avoid cancellation at large x
    return math.log2(x + 1.0) + x * math.log1p(1.0 / x) / math.log(2.0)


@dataclass(frozen=True)
class PDistribution:
    """``P_l(N, n, lam)`` for ``l = 0 .. l_max`` plus the mass above ``l_max``."""

    N: float
    n: int
    lam: float
    probs: np.ndarray
    tail_mass: float

    @property
    def l_max(self) -> int:
        return self.probs.size - 1

    @property
    def mean(self) -> float:
        """Exact mean ``lam N + (1 - lam) n`` of the full distribution."""
        return self.lam * self.N + (1.0 - self.lam) * self.n

    def entropy(self) -> float:
        return shannon_entropy(self.probs)

    def entropy_tail_bound(self) -> float:
        """Upper bound on the entropy carried by the levels above ``l_max``.

        The tail has mass ``t`` and conditional mean at most
        ``E = max(mean - sum_{l<=l_max} l P_l, (l_max+1) t)``; the largest
        entropy compatible with that is ``t log2(1/t) + t g(E/t)``.
        """
        t = self.tail_mass
        if t <= 0:
            return 0.0
        head_mean = float(np.dot(np.arange(self.probs.size), self.probs))
        e = max(self.mean - head_mean, (self.l_max + 1) * t)
        return t * (-math.log2(t)) + t * g(e / t)


def _log_binom(a, b):
    return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)


def _xlog(k, x):
    k = np.asarray(k, dtype=float)
    if x == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(x)


def _p_values(N: float, n: int, lam: float, l_max: int) -> np.ndarray:
    l = np.arange(l_max + 1)[:, None]
    m = np.arange(n + 1)[None, :]
    valid = (m >= n - l)
    lm = np.where(valid, l + m - n, 0)
    logt = (
        _xlog(2 * m + l - n, lam)
        + _xlog(n - m, 1.0 - lam)
        + _xlog(lm, N)
        + _xlog(m, N + 1.0)
        + _log_binom(n, m)
        + _log_binom(l, np.where(valid, n - m, 0))
    )
    logt = np.where(valid, logt, -np.inf)
    with np.errstate(divide="ignore"):
        logp = logsumexp(logt, axis=1) - (l[:, 0] + n + 1) * math.log1p(N * lam)
        return np.exp(logp)


def p_distribution(
    N: float, n: int, lam: float, l_max: int | None = None, tail_tol: float = DEFAULT_TAIL_TOL
) -> PDistribution:
    """The distribution ``P(N, n, lam)``.

    With ``l_max=None`` the support is chosen automatically: start a few
    standard deviations above the mean and double until the computed tail
    ``1 - sum P_l`` is below ``tail_tol``.  An explicit ``l_max`` that leaves
    more than ``tail_tol`` above it raises :class:`CutoffError`.
    """
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N!r}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam!r}")
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    n = int(n)
    auto = l_max is None
    if auto:
        # crude width: output variance is at most that of a thermal state of the same mean plus n
        mean = lam * N + (1.0 - lam) * n
        l_max = int(mean + 12.0 * math.sqrt(mean * (mean + 1.0) + n) + 30)
    while True:
        probs = _p_values(N, n, lam, l_max)
        tail = max(0.0, 1.0 - math.fsum(probs))
        if tail <= tail_tol:
            break
        if not auto:
            raise CutoffError(f"l_max={l_max} leaves tail {tail:.3e} > {tail_tol:.1e}")
        l_max *= 2
    probs.setflags(write=False)
    return PDistribution(float(N), n, float(lam), probs, tail)


# the two distributions entering the coherent information; every caller goes
# through these helpers so the lam <-> 1-lam convention lives in one place
def _system_output_distribution(N, n, lam, tail_tol):
    """Spectrum of ``Phi_{lam,|n>}(tau_N)``."""
    return p_distribution(N, n, lam, tail_tol=tail_tol)


def _environment_output_distribution(N, n, lam, tail_tol):
    """Spectrum of the weak complementary output ``Phi_{1-lam,|n>}(tau_N)``."""
    return p_distribution(N, n, 1.0 - lam, tail_tol=tail_tol)


def coherent_information_fock_env_with_error(
    N: float, n: int, lam: float, tail_tol: float = DEFAULT_TAIL_TOL
) -> tuple[float, float]:
    """``(I_coh, half_width)`` in bits for ``Phi_{lam,|n><n|}`` at input ``tau_N``.

    ``half_width`` bounds the entropy hidden in both truncated tails.
    """
    if lam == 0.5:
        return 0.0, 0.0
    p_sys = _system_output_distribution(N, n, lam, tail_tol)
    p_env = _environment_output_distribution(N, n, lam, tail_tol)
    value = p_sys.entropy() - p_env.entropy()
    return value, p_sys.entropy_tail_bound() + p_env.entropy_tail_bound()


def coherent_information_fock_env(
    N: float, n: int, lam: float, tail_tol: float = DEFAULT_TAIL_TOL
) -> float:
    """``H(P(N,n,lam)) - H(P(N,n,1-lam))`` in bits."""
    return coherent_information_fock_env_with_error(N, n, lam, tail_tol)[0]


# --------------------------------------------------------------------------
# brute-force references

def coherent_information_bruteforce(spec: AttenuatorSpec, rho) -> float:
    """``S(Phi(rho)) - S(Phi^wc(rho))`` from the two-mode dilation.

    Only valid for a pure environment, where the weak complementary is a
    true complementary channel.  Mixed environments need
    :func:`coherent_information_stinespring`.
    """
    env = as_matrix(spec.env)
    w = np.linalg.eigvalsh(env)
    if w[-1] < np.trace(env).real - 1e-10:
        raise UnsupportedOracleError(
            "environment is mixed; the weak complementary is not complementary"
        )
    out = apply_general_attenuator(spec, rho)
    comp = apply_weak_complementary(spec, rho)
    return von_neumann_entropy(out) - von_neumann_entropy(comp)


def _purifying_factors(state, rank_tol=1e-15):
    """Columns ``sqrt(w_a) v_a`` over the eigenvectors with weight above ``rank_tol``."""
    if isinstance(state, DiagonalState):
        keep = np.flatnonzero(state.probs > rank_tol)
        F = np.zeros((state.d, keep.size))
        F[keep, np.arange(keep.size)] = np.sqrt(state.probs[keep])
        return F
    w, V = np.linalg.eigh(as_matrix(state))
    keep = w > rank_tol
    return V[:, keep] * np.sqrt(w[keep])


def coherent_information_stinespring(lam: float, sigma, rho) -> float:
    """``I_coh(Phi_{lam,sigma}, rho)`` through the full Stinespring isometry.

    Both ``rho`` (on mode ``S``, reference ``R``) and ``sigma`` (on mode
    ``E``, purifier ``F``) are purified; after the beam splitter the global
    state on ``S' E' R F`` is pure, so ``S(S'E'F) = S(R)`` and the
    complementary entropy is ``S(E'F) = S(S'R)``.  Valid for mixed ``sigma``.
    """
    A = _purifying_factors(rho)
    B = _purifying_factors(sigma)
    dS, rA = A.shape
    dE, rB = B.shape
    U = beamsplitter_unitary(float(lam), dS + dE - 2)
    D = U.m_max + 1
    C = np.zeros((D, D, rA, rB), dtype=complex)
    C[:dS, :dE] = np.einsum("xa,yb->xyab", A, B)
    psi = U.apply_to_amplitudes(C)  # [s, e, a, b]
    # S' alone
    rho_s = np.einsum("seab,teab->st", psi, psi.conj())
    s_out = von_neumann_entropy(DensityMatrix(rho_s, max(0.0, 1.0 - np.trace(rho_s).real)))
    # S'R versus E'F via singular values
    M = psi.transpose(0, 2, 1, 3).reshape(D * rA, D * rB)
    sv = np.linalg.svd(M, compute_uv=False)
    p = sv**2
    p = p[p > 1e-16]
    s_comp = float(-np.sum(p * np.log2(p)))
    return s_out - s_comp


# --------------------------------------------------------------------------
# capacity bound and sweeps

@dataclass(frozen=True)
class CapacityBoundReport:
    N: float
    n: int
    lam: float
    i_coh: float
    i_coh_err: float
    ea_lower: float
    noiseless_c: float

    @property
    def margin(self) -> float:
        """``ea_lower - g(N)``, i.e. the coherent information itself."""
        return self.ea_lower - self.noiseless_c


def ea_lower_bound(N: float, n: int, lam: float, tail_tol: float = DEFAULT_TAIL_TOL):
    """Lower bound ``g(N) + I_coh`` on the entanglement-assisted capacity of
    ``Phi_{lam,|n><n|}`` at input energy ``N``, compared with ``g(N)``, the
    classical capacity of the noiseless channel at the same energy."""
    i_coh, err = coherent_information_fock_env_with_error(N, n, lam, tail_tol)
    gN = g(N)
    return CapacityBoundReport(float(N), int(n), float(lam), i_coh, err, gN + i_coh, gN)


def fig1_sweep(N, n_list, lam_grid, tail_tol: float = DEFAULT_TAIL_TOL, map_fn=map):
    """Reports for every ``(n, lam)`` pair, ``n`` outermost.

    ``map_fn`` may be an ordered parallel map (e.g. ``Executor.map``).
    """
    jobs = [(float(N), int(n), float(lam), tail_tol) for n in n_list for lam in lam_grid]
    return list(map_fn(_fig1_point, jobs))


def _fig1_point(job):
    return ea_lower_bound(*job)

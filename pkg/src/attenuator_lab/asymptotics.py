"""Large-``n`` limits of the Fock-environment output distributions.

For ``n -> infinity`` with ``lam = c/n`` the shifted distribution
``P_{n+k}(N, n, c/n)`` tends to

    q_k(N, c) = e^{-c(2N+1)} (N/(N+1))^{k/2} I_|k|(2c sqrt(N(N+1))),   k in Z,

a Skellam law (difference of Poisson variables with means cN and c(N+1)), and
``P_k(N, n, 1 - c/n)`` tends to

    p_k(N, c) = e^{-c/(N+1)} N^k/(N+1)^{k+1} L_k(-c/(N(N+1))),   k >= 0.

Everything is computed in log space: the Bessel factor through the
exponentially scaled ``ive`` and the Laguerre factor through a log-scaled
recurrence, since ``L_k(-y)`` grows like ``exp(2 sqrt(k y))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive, logsumexp

from .cohinfo import p_distribution
from .fock import CutoffError, shannon_entropy

__all__ = [
    "BilateralDistribution",
    "HalfLineDistribution",
    "bessel_i_scaled",
    "laguerre",
    "log_laguerre_negative",
    "q_distribution",
    "p_limit_distribution",
    "entropy_gap",
    "inset_sweep",
    "convergence_report",
]

LIMIT_TAIL_TOL = 1e-12
_DIRECT_SUM_MAX_K = 60


def bessel_i_scaled(k, z):
    """``exp(-z) I_k(z)`` for integer ``k >= 0`` and ``z >= 0``."""
    if np.any(np.asarray(z) < 0):
        raise ValueError("z must be >= 0")
    return ive(k, z)


def laguerre(k: int, x: float) -> float:
    """Laguerre polynomial ``L_k(x)`` by the three-term recurrence."""
    if k < 0:
        raise ValueError("k must be >= 0")
    prev, cur = 1.0, 1.0 - x
    if k == 0:
        return prev
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 - x) * cur - j * prev) / (j + 1)
    return cur


def log_laguerre_negative(K: int, y: float) -> np.ndarray:
    """``log L_k(-y)`` for ``k = 0 .. K`` and ``y >= 0``.

    For ``k <= 60`` the cancellation-free sum ``sum_m C(k,m) y^m / m!`` is
    taken directly; above that the recurrence is run on ``L_k / L_{k-1} - 1``, which is
    positive and free of cancellation.
    """
    if y < 0:
        raise ValueError("y must be >= 0")
    out = np.zeros(K + 1)
    if y == 0 or K == 0:
        return out
    top = min(K, _DIRECT_SUM_MAX_K)
    ly = math.log(y)
    for k in range(1, top + 1):
        m = np.arange(k + 1)
        terms = gammaln(k + 1) - gammaln(m + 1) - gammaln(k - m + 1) - gammaln(m + 1) + m * ly
        out[k] = logsumexp(terms)
    if K > top:
        # (k+1) L_{k+1} = (2k+1+y) L_k - k L_{k-1}, rewritten for delta = L_k/L_{k-1} - 1
        # so that every term is positive even when the ratio is close to one
        delta = math.expm1(out[top] - out[top - 1])
        for k in range(top, K):
            delta = (y + k * delta / (1.0 + delta)) / (k + 1)
            out[k + 1] = out[k] + math.log1p(delta)
    return out


@dataclass(frozen=True)
class BilateralDistribution:
    """``q_k(N, c)`` on ``k = -K .. K``."""

    N: float
    c: float
    K: int
    probs: np.ndarray
    tail_mass: float

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def __getitem__(self, k: int) -> float:
        return float(self.probs[k + self.K]) if abs(k) <= self.K else 0.0

    def entropy(self) -> float:
        return shannon_entropy(self.probs)


@dataclass(frozen=True)
class HalfLineDistribution:
    """``p_k(N, c)`` on ``k = 0 .. K``."""

    N: float
    c: float
    K: int
    probs: np.ndarray
    tail_mass: float

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.K + 1)

    def __getitem__(self, k: int) -> float:
        return float(self.probs[k]) if 0 <= k <= self.K else 0.0

    def entropy(self) -> float:
        return shannon_entropy(self.probs)


def _check_nc(N, c):
    if not N > 0 or not c > 0:
        raise ValueError(f"N and c must be positive, got N={N!r}, c={c!r}")


def _q_values(N, c, K):
    z = 2.0 * c * math.sqrt(N * (N + 1.0))
    k = np.arange(-K, K + 1)
    with np.errstate(divide="ignore"):
        logq = (
            z
            - c * (2.0 * N + 1.0)
            + 0.5 * k * math.log(N / (N + 1.0))
            + np.log(ive(np.abs(k), z))
        )
    return np.exp(logq)


def q_distribution(N: float, c: float, K: int | None = None, tail_tol: float = LIMIT_TAIL_TOL):
    """The bilateral limit law ``q(N, c)``.

    Without ``K``, start at ``ceil(4 c sqrt(N(N+1)) + 10)`` and double until
    the mass outside ``[-K, K]`` is below ``tail_tol``.
    """
    _check_nc(N, c)
    auto = K is None
    if auto:
        K = math.ceil(4.0 * c * math.sqrt(N * (N + 1.0)) + 10)
    while True:
        probs = _q_values(N, c, K)
        tail = max(0.0, 1.0 - math.fsum(probs))
        if tail <= tail_tol:
            break
        if not auto:
            raise CutoffError(f"K={K} leaves tail {tail:.3e} > {tail_tol:.1e}")
        K *= 2
    probs.setflags(write=False)
    return BilateralDistribution(float(N), float(c), int(K), probs, tail)


def _p_values(N, c, K):
    k = np.arange(K + 1)
    y = c / (N * (N + 1.0))
    logp = (
        -c / (N + 1.0)
        + k * math.log(N)
        - (k + 1) * math.log(N + 1.0)
        + log_laguerre_negative(K, y)
    )
    return np.exp(logp)


def p_limit_distribution(N: float, c: float, K: int | None = None, tail_tol: float = LIMIT_TAIL_TOL):
    """The one-sided limit law ``p(N, c)``.

    Its mean is ``N + c``; the automatic support starts well above that and
    doubles until the computed tail is below ``tail_tol``.
    """
    _check_nc(N, c)
    auto = K is None
    if auto:
        mean = N + c
        K = math.ceil(mean + 12.0 * math.sqrt(mean * (N + 1.0) + c) + 30)
    while True:
        probs = _p_values(N, c, K)
        tail = max(0.0, 1.0 - math.fsum(probs))
        if tail <= tail_tol:
            break
        if not auto:
            raise CutoffError(f"K={K} leaves tail {tail:.3e} > {tail_tol:.1e}")
        K *= 2
    probs.setflags(write=False)
    return HalfLineDistribution(float(N), float(c), int(K), probs, tail)


def entropy_gap(N: float, c: float, tail_tol: float = LIMIT_TAIL_TOL) -> float:
    """``H(q(N, c)) - H(p(N, c))`` in bits."""
    q = q_distribution(N, c, tail_tol=tail_tol)
    p = p_limit_distribution(N, c, tail_tol=tail_tol)
    return q.entropy() - p.entropy()


def inset_sweep(alpha_list, N_grid, map_fn=map, tail_tol: float = LIMIT_TAIL_TOL):
    """Rows ``(N, alpha, c, gap)`` with ``c = N + alpha``; ``alpha`` outermost."""
    jobs = [(float(N), float(a), tail_tol) for a in alpha_list for N in N_grid]
    return list(map_fn(_inset_point, jobs))


def _inset_point(job):
    N, a, tail_tol = job
    c = N + a
    return N, a, c, entropy_gap(N, c, tail_tol)


def _sup_distance(finite: np.ndarray, offset: int, limit: np.ndarray, limit_offset: int, window):
    """``sup_k |finite[k] - limit[k]|`` where arrays start at the given ``k`` offsets."""
    lo = min(offset, limit_offset)
    hi = max(offset + finite.size, limit_offset + limit.size)
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[offset - lo : offset - lo + finite.size] = finite
    b[limit_offset - lo : limit_offset - lo + limit.size] = limit
    ks = np.arange(lo, hi)
    if window is not None:
        sel = (ks >= window[0]) & (ks <= window[1])
        a, b = a[sel], b[sel]
    return float(np.abs(a - b).max(initial=0.0))


def convergence_report(N: float, c: float, n_list, k_window=None):
    """Sup-norm distances of the finite-``n`` laws from their limits.

    Returns rows ``(N, c, n, dist_q, dist_p)`` with

    * ``dist_q = sup_k |P_{n+k}(N, n, c/n) - q_k(N, c)|``
    * ``dist_p = sup_k |P_k(N, n, 1 - c/n) - p_k(N, c)|``

    ``k_window=(k_lo, k_hi)`` restricts the supremum; by default it runs over
    the union of the supports.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    q = q_distribution(N, c)
    p = p_limit_distribution(N, c)
    rows = []
    for n in n_list:
        if c > n:
            raise ValueError(f"need c <= n, got c={c}, n={n}")
        fq = p_distribution(N, n, c / n)
        fp = p_distribution(N, n, 1.0 - c / n)
        dq = _sup_distance(fq.probs, -n, q.probs, -q.K, k_window)
        dp = _sup_distance(fp.probs, 0, p.probs, 0, k_window)
        rows.append((float(N), float(c), n, dq, dp))
    return rows

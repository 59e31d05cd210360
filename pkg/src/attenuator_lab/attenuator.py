"""General and thermal attenuators.

``Phi_{lam,sigma}(rho) = Tr_E[U (rho (x) sigma) U^dag]`` is applied by exact
dilation in the photon-number sector layout of :mod:`attenuator_lab.fock`.
For thermal environments there is also a closed-form route through the Fock
transition coefficients ``f_{n,i,l}``, with
``Phi_{lam,tau_nu}(|n><i|) = sum_l f_{n,i,l} |l+n-i><l|``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .fock import (
    CutoffError,
    DensityMatrix,
    DiagonalState,
    FockCutoff,
    _as_cutoff,
    as_matrix,
    beamsplitter_unitary,
    conjugate_product_in_sectors,
    mean_amplitude,
    photon_moments,
    sector_partial_trace,
)

__all__ = [
    "AttenuatorSpec",
    "FockTransitionTable",
    "attenuator_map",
    "apply_general_attenuator",
    "apply_weak_complementary",
    "thermal_transition_coefficient",
    "apply_thermal_attenuator_closed_form",
    "exchange_apply",
    "output_mean_photons",
    "energy_limited_coefficients",
]


@dataclass(frozen=True)
class AttenuatorSpec:
    """Transmissivity and environment state of ``Phi_{lam,sigma}``."""

    lam: float
    env: object

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.lam!r}")
        if not isinstance(self.env, (DensityMatrix, DiagonalState)):
            object.__setattr__(self, "env", DensityMatrix(self.env))


def attenuator_map(lam: float, X, sigma, keep: str = "system") -> np.ndarray:
    """Dilation of the attenuator on an arbitrary operator ``X``.

    Returns ``Tr_E[U X(x)sigma U^dag]`` (``keep="system"``) or the weak
    complementary ``Tr_S[...]`` (``keep="environment"``) as a square array of
    dimension ``dim(X) + dim(sigma) - 1``.  Exact for the truncated inputs.
    """
    X = as_matrix(X)
    s = as_matrix(sigma)
    d1, d2 = X.shape[0], s.shape[0]
    U = beamsplitter_unitary(float(lam), d1 + d2 - 2)
    Y = conjugate_product_in_sectors(U, np.kron(X, s), d1, d2)
    which = {"system": "first", "environment": "second"}[keep]
    return sector_partial_trace(Y, U.m_max, which)


def _finish(out: np.ndarray, out_cutoff) -> DensityMatrix:
    out = 0.5 * (out + out.conj().T)
    full_trace = float(np.trace(out).real)
    if out_cutoff is not None:
        cut = _as_cutoff(out_cutoff)
        if cut.d < out.shape[0]:
            leaked = full_trace - float(np.trace(out[: cut.d, : cut.d]).real)
            if leaked > cut.tail_tol:
                raise CutoffError(
                    f"output cutoff d={cut.d} leaks {leaked:.3e} > tail_tol={cut.tail_tol:.1e}"
                )
            out = out[: cut.d, : cut.d]
        elif cut.d > out.shape[0]:
            pad = np.zeros((cut.d, cut.d), dtype=complex)
            pad[: out.shape[0], : out.shape[0]] = out
            out = pad
    tail = max(0.0, 1.0 - float(np.trace(out).real))
    return DensityMatrix(out, tail)


def apply_general_attenuator(spec: AttenuatorSpec, rho, out_cutoff=None) -> DensityMatrix:
    """``Phi_{lam,sigma}(rho)``.

    Without ``out_cutoff`` the output has dimension ``d_S + d_E - 1`` and is
    exact.  With a smaller cutoff the discarded mass is checked against its
    ``tail_tol``.
    """
    return _finish(attenuator_map(spec.lam, rho, spec.env, "system"), out_cutoff)


def apply_weak_complementary(spec: AttenuatorSpec, rho, out_cutoff=None) -> DensityMatrix:
    """Environment output ``Tr_S[U rho(x)sigma U^dag]``."""
    return _finish(attenuator_map(spec.lam, rho, spec.env, "environment"), out_cutoff)


def exchange_apply(lam: float, sigma, rho, out_cutoff=None) -> DensityMatrix:
    """``Phi_{1-lam, rho}(sigma)``, equal to ``Phi_{lam,sigma}(rho)``.

    Same dilation code, but with input and environment swapped and the
    complementary transmissivity, so it serves as a cross-check.
    """
    return apply_general_attenuator(AttenuatorSpec(1.0 - lam, _state(rho)), sigma, out_cutoff)


def _state(x):
    return x if isinstance(x, (DensityMatrix, DiagonalState)) else DensityMatrix(x)


# --------------------------------------------------------------------------
# closed form

def _xlog(k, x):
    """``k * log(x)`` with ``0 * log 0 = 0``."""
    k = np.asarray(k, dtype=float)
    if x == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(x)


def _log_f(n: int, i: int, ls: np.ndarray, lam: float, nu: float) -> np.ndarray:
    """``log f_{n,i,l}(lam, nu)`` for an array of ``l >= max(i-n, 0)``."""
    ls = np.asarray(ls, dtype=np.int64)
    m = np.arange(min(n, i) + 1)[None, :]
    l = ls[:, None]
    valid = m >= i - l
    lm = np.where(valid, l + m - i, 0)
    logc = (
        0.5 * (gammaln(n + 1) + gammaln(i + 1) + gammaln(l + 1) + gammaln(l + n - i + 1))
        - gammaln(n - m + 1)
        - gammaln(i - m + 1)
        - gammaln(m + 1)
        - gammaln(lm + 1)
    )
    logt = (
        logc
        + _xlog(lm, nu)
        + _xlog(m, nu + 1.0)
        + _xlog(2 * m + l - i, 1.0 - lam)
        + _xlog((n + i - 2 * m) / 2.0, lam)
    )
    logt = np.where(valid, logt, -np.inf)
    out = logsumexp(logt, axis=1) - (ls + n + 1) * math.log((1.0 - lam) * nu + 1.0)
    return out


def thermal_transition_coefficient(n: int, i: int, l: int, lam: float, nu: float) -> float:
    """``f_{n,i,l}(lam, nu)``, the weight of ``|l+n-i><l|`` in ``Phi_{lam,tau_nu}(|n><i|)``.

    Every term of the defining sum is nonnegative, so the sum is taken in
    log space without cancellation.
    """
    if l < max(i - n, 0):
        raise ValueError(f"need l >= max(i-n, 0), got n={n}, i={i}, l={l}")
    with np.errstate(divide="ignore"):
        return float(np.exp(_log_f(n, i, np.array([l]), lam, nu)[0]))


def _f_row(n, i, ls, lam, nu):
    with np.errstate(divide="ignore"):
        return np.exp(_log_f(n, i, ls, lam, nu))


class FockTransitionTable:
    """Memoised ``f_{n,i,l}`` for fixed ``(lam, nu)``.

    Entries are filled lazily; concurrent fills compute the same value, and
    the dictionary write is guarded so readers never see a partial row.
    """

    def __init__(self, lam: float, nu: float):
        self.lam = float(lam)
        self.nu = float(nu)
        self._rows: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def row(self, n: int, i: int, l_count: int) -> np.ndarray:
        """``f_{n,i,l}`` for ``l = l0, ..., l0 + l_count - 1`` with ``l0 = max(i-n, 0)``."""
        cached = self._rows.get((n, i))
        if cached is not None and cached.size >= l_count:
            return cached[:l_count]
        l0 = max(i - n, 0)
        vals = _f_row(n, i, np.arange(l0, l0 + l_count), self.lam, self.nu)
        if vals.min(initial=0.0) < 0:
            raise AssertionError("negative transition coefficient")
        vals.setflags(write=False)
        with self._lock:
            prev = self._rows.get((n, i))
            if prev is None or prev.size < vals.size:
                self._rows[(n, i)] = vals
        return vals

    def __call__(self, n: int, i: int, l: int) -> float:
        l0 = max(i - n, 0)
        if l < l0:
            raise ValueError(f"need l >= {l0}")
        return float(self.row(n, i, l - l0 + 1)[l - l0])


def apply_thermal_attenuator_closed_form(
    lam: float, nu: float, rho, out_cutoff, table: FockTransitionTable | None = None
) -> DensityMatrix:
    """``Phi_{lam,tau_nu}(rho)`` from the transition coefficients, entry by entry."""
    cut = _as_cutoff(out_cutoff)
    X = as_matrix(rho)
    d_in, d = X.shape[0], cut.d
    table = table or FockTransitionTable(lam, nu)
    out = np.zeros((d, d), dtype=complex)
    for n in range(d_in):
        for i in range(d_in):
            x = X[n, i]
            if x == 0:
                continue
            l0 = max(i - n, 0)
            # both l and l+n-i must stay below d
            l_hi = min(d, d - (n - i))
            if l_hi <= l0:
                continue
            f = table.row(n, i, l_hi - l0)
            ls = np.arange(l0, l_hi)
            out[ls + n - i, ls] += x * f
    out = 0.5 * (out + out.conj().T)
    in_trace = float(np.trace(X).real)
    leaked = in_trace - float(np.trace(out).real)
    if leaked > cut.tail_tol:
        raise CutoffError(f"output cutoff d={d} leaks {leaked:.3e} > tail_tol={cut.tail_tol:.1e}")
    tail = max(0.0, 1.0 - float(np.trace(out).real))
    return DensityMatrix(out, tail)


# --------------------------------------------------------------------------
# energy bookkeeping

def output_mean_photons(lam: float, sigma, rho) -> tuple[float, float]:
    """Mean photon numbers of the system and environment outputs.

    ``<n>_sys = lam <n>_rho + (1-lam) <n>_sigma + 2 sqrt(lam(1-lam)) Re(<a>_rho <b^dag>_sigma)``
    and the environment gets the complementary weights with the opposite
    sign on the interference term.
    """
    n_rho = photon_moments(rho)[0]
    n_sig = photon_moments(sigma)[0]
    a_rho = mean_amplitude(rho)
    b_sig = mean_amplitude(sigma)
    cross = 2.0 * math.sqrt(lam * (1.0 - lam)) * (a_rho * b_sig.conjugate()).real
    system = lam * n_rho + (1.0 - lam) * n_sig + cross
    env = (1.0 - lam) * n_rho + lam * n_sig - cross
    return system, env


def energy_limited_coefficients(lam: float, sigma) -> tuple[float, float]:
    """``(alpha, N0)`` with ``<n>_out <= alpha <n>_in + N0`` for every input.

    ``alpha = lam + sqrt(lam(1-lam) E)/2`` and
    ``N0 = (1-lam) E + 2 sqrt(lam(1-lam) E)`` where ``E`` is the mean photon
    number of the environment; ``sigma`` may also be given directly as ``E``.
    """
    E = float(sigma) if np.isscalar(sigma) else photon_moments(sigma)[0]
    r = math.sqrt(lam * (1.0 - lam) * E)
    return lam + 0.5 * r, (1.0 - lam) * E + 2.0 * r

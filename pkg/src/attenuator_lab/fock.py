"""Truncated single- and two-mode Fock space.

States, beam splitters, partial traces, entropies and photon-number moments.
All entropies are in bits.

Two-mode operators are handled in two layouts:

* lexicographic ``|n1, n2>`` ordering with index ``n1 * d2 + n2`` (the
  public :class:`TwoModeState` layout), and
* the *sector* layout used internally, where the basis is grouped by total
  photon number ``M`` and inside a sector ordered by the occupation of the
  first mode.  Sector ``M`` occupies indices ``M(M+1)/2 ... M(M+1)/2 + M``.

The beam splitter is block diagonal in the sector layout, which is what makes
the dilation of an attenuator exact: embedding ``rho (x) sigma`` into all
sectors ``M <= d1 + d2 - 2`` loses nothing under conjugation.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "CutoffError",
    "StateError",
    "FockCutoff",
    "DensityMatrix",
    "DiagonalState",
    "TwoModeState",
    "BeamSplitterUnitary",
    "TraceDistance",
    "fock_state",
    "thermal_state",
    "beamsplitter_unitary",
    "apply_two_mode",
    "partial_trace",
    "von_neumann_entropy",
    "shannon_entropy",
    "trace_distance",
    "photon_moments",
    "annihilation",
    "as_matrix",
    "thermal_cutoff",
    "mean_amplitude",
    "sector_index",
]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
EIG_ZERO = 1e-14


class CutoffError(ValueError):
    """Raised when a Fock cutoff cannot hold the requested state to tolerance."""


class StateError(ValueError):
    """Raised when an array does not describe a valid quantum state."""


@dataclass(frozen=True)
class FockCutoff:
    """Dimension ``d`` (levels ``0..d-1``) and admissible leaked mass."""

    d: int
    tail_tol: float = 1e-10

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"Fock cutoff must be an integer >= 2, got {self.d!r}")
        if not 0.0 <= self.tail_tol < 1.0:
            raise ValueError(f"tail_tol must lie in [0, 1), got {self.tail_tol!r}")


def _as_cutoff(d) -> FockCutoff:
    return d if isinstance(d, FockCutoff) else FockCutoff(int(d))


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix on a truncated mode.

    ``tail_mass`` is probability that was known to lie above the cutoff when
    the matrix was produced (e.g. a truncated thermal environment), so the
    invariant checked is ``trace + tail_mass == 1``.
    """

    entries: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise StateError(f"density matrix must be square, got shape {a.shape}")
        scale = max(1.0, float(np.abs(a).max(initial=0.0)))
        if np.abs(a - a.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise StateError("density matrix is not Hermitian")
        a = 0.5 * (a + a.conj().T)
        tr = np.trace(a).real
        if abs(tr + self.tail_mass - 1.0) > TRACE_TOL:
            raise StateError(f"trace {tr!r} + tail {self.tail_mass!r} != 1")
        if np.linalg.eigvalsh(a).min() < -PSD_TOL:
            raise StateError("density matrix has a negative eigenvalue")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def cutoff(self) -> FockCutoff:
        return FockCutoff(self.d)

    def is_pure(self, tol: float = 1e-10) -> bool:
        w = np.linalg.eigvalsh(self.entries)
        return bool(w[-1] > 1.0 - self.tail_mass - tol)


@dataclass(frozen=True)
class DiagonalState:
    """Fock-diagonal state with recorded mass above the cutoff.

    ``nu`` is set for thermal states so moments can include the analytic tail.
    """

    probs: np.ndarray
    tail_mass: float = 0.0
    nu: float | None = None

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise StateError("probs must be a non-empty vector")
        if p.min() < 0.0:
            raise StateError("negative probability")
        if abs(p.sum() + self.tail_mass - 1.0) > TRACE_TOL:
            raise StateError(f"probabilities sum to {p.sum() + self.tail_mass!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def d(self) -> int:
        return self.probs.size

    def to_density(self) -> DensityMatrix:
        return DensityMatrix(np.diag(self.probs).astype(complex), self.tail_mass)


State = Union[DensityMatrix, DiagonalState]


def as_matrix(state) -> np.ndarray:
    """Density matrix entries of a state object or a raw square array."""
    if isinstance(state, DiagonalState):
        return np.diag(state.probs).astype(complex)
    if isinstance(state, DensityMatrix):
        return state.entries
    return np.asarray(state, dtype=complex)


def _tail_of(state) -> float:
    return getattr(state, "tail_mass", 0.0)


@dataclass(frozen=True)
class TwoModeState:
    """Two-mode operator in lexicographic ``|n1, n2>`` ordering."""

    dims: tuple[int, int]
    entries: np.ndarray
    tail_mass: float = 0.0
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        d1, d2 = self.dims
        a = np.asarray(self.entries, dtype=complex)
        if a.shape != (d1 * d2, d1 * d2):
            raise StateError(f"entries shape {a.shape} does not match dims {self.dims}")
        if self.validate:
            DensityMatrix(a, self.tail_mass)
        object.__setattr__(self, "dims", (int(d1), int(d2)))
        object.__setattr__(self, "entries", a)

    @classmethod
    def product(cls, rho, sigma) -> "TwoModeState":
        a, b = as_matrix(rho), as_matrix(sigma)
        tail = 1.0 - np.trace(a).real * np.trace(b).real
        return cls((a.shape[0], b.shape[0]), np.kron(a, b), tail)


def fock_state(n: int, d) -> DiagonalState:
    """``|n><n|`` on a ``d``-level cutoff."""
    cut = _as_cutoff(d)
    if not 0 <= n < cut.d:
        raise CutoffError(f"Fock level {n} does not fit in cutoff d={cut.d}")
    p = np.zeros(cut.d)
    p[n] = 1.0
    return DiagonalState(p)


def thermal_state(nu: float, d) -> DiagonalState:
    """Thermal state of mean photon number ``nu``, truncated but not renormalised."""
    if nu < 0:
        raise ValueError(f"mean photon number must be >= 0, got {nu!r}")
    cut = _as_cutoff(d)
    x = nu / (nu + 1.0)
    p = (1.0 - x) * x ** np.arange(cut.d)
    tail = x**cut.d
    if tail > cut.tail_tol:
        raise CutoffError(
            f"thermal tail {tail:.3e} above cutoff d={cut.d} exceeds tail_tol={cut.tail_tol:.1e}"
        )
    # sum(p) + x**d == 1 analytically; absorb rounding into the recorded tail
    return DiagonalState(p, max(0.0, 1.0 - float(np.sum(p))) if tail > 0 else 0.0, nu=nu)


def thermal_cutoff(nu: float, tail_tol: float = 1e-12, minimum: int = 2) -> int:
    """Smallest ``d`` whose thermal tail ``(nu/(nu+1))**d`` is below ``tail_tol``."""
    if nu == 0:
        return minimum
    x = nu / (nu + 1.0)
    return max(minimum, int(np.ceil(np.log(tail_tol) / np.log(x))))


# --------------------------------------------------------------------------
# beam splitter

def sector_offset(M):
    return M * (M + 1) // 2


def sector_size(m_max: int) -> int:
    return (m_max + 1) * (m_max + 2) // 2


def sector_index(n1, n2):
    """Sector-layout index of ``|n1, n2>``."""
    return sector_offset(n1 + n2) + n1


def _bs_block(theta: float, M: int) -> np.ndarray:
    """``exp(theta * G)`` on sector ``M``, ``G = a1^dag a2 - a1 a2^dag``.

    ``G`` is real antisymmetric. With ``P = diag(i**j)``, ``P (-iG) P^dag`` is
    the real symmetric tridiagonal matrix with off-diagonal
    ``sqrt((j+1)(M-j))``, whose spectrum is ``-M, -M+2, ..., M``.
    """
    if M == 0:
        return np.ones((1, 1))
    j = np.arange(M)
    off = np.sqrt((j + 1.0) * (M - j))
    _, W = eigh_tridiagonal(np.zeros(M + 1), off)
    # exact integer spectrum; eigh orders ascending
    mu = np.arange(-M, M + 1, 2, dtype=float)
    E = (W * np.exp(1j * theta * mu)) @ W.T
    k = np.arange(M + 1)
    phase = (1j) ** ((k[None, :] - k[:, None]) % 4)
    B = phase * E
    return np.ascontiguousarray(B.real)


@dataclass(frozen=True)
class BeamSplitterUnitary:
    """``U_lam = exp[arccos(sqrt(lam)) (a1^dag a2 - a1 a2^dag)]`` as sector blocks.

    ``blocks[M]`` acts on ``span{|j, M-j>}`` indexed by ``j`` (first mode).
    Convention: ``U^dag a1 U = sqrt(lam) a1 + sqrt(1-lam) a2``.
    """

    lam: float
    blocks: tuple

    @property
    def m_max(self) -> int:
        return len(self.blocks) - 1

    @functools.cached_property
    def sector_matrix(self) -> sparse.csr_matrix:
        return sparse.block_diag(self.blocks, format="csr")

    def apply_to_amplitudes(self, C: np.ndarray) -> np.ndarray:
        """Apply ``U`` to two-mode amplitudes ``C[n1, n2, ...]``.

        ``C`` must have both leading axes of length ``m_max + 1``; sectors above
        ``m_max`` must be empty (they are left untouched).
        """
        D = self.m_max + 1
        if C.shape[0] != D or C.shape[1] != D:
            raise ValueError(f"amplitude array must be ({D}, {D}, ...), got {C.shape}")
        out = np.zeros_like(C, dtype=np.result_type(C.dtype, float))
        for M, B in enumerate(self.blocks):
            j = np.arange(M + 1)
            out[j, M - j] = np.tensordot(B, C[j, M - j], axes=(1, 0))
        return out


@functools.lru_cache(maxsize=256)
def beamsplitter_unitary(lam: float, m_max: int) -> BeamSplitterUnitary:
    """Beam splitter of transmissivity ``lam`` on all sectors ``M <= m_max``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {lam!r}")
    theta = float(np.arccos(np.sqrt(lam)))
    blocks = []
    for M in range(m_max + 1):
        B = _bs_block(theta, M)
        B.setflags(write=False)
        blocks.append(B)
    return BeamSplitterUnitary(float(lam), tuple(blocks))


def _lex_to_sector_indices(d1: int, d2: int) -> np.ndarray:
    n1, n2 = np.divmod(np.arange(d1 * d2), d2)
    return sector_index(n1, n2)


def conjugate_product_in_sectors(U: BeamSplitterUnitary, X: np.ndarray, d1: int, d2: int):
    """``U X U^dag`` for a lexicographic ``(d1 d2)``-square operator, in sector layout."""
    if U.m_max < d1 + d2 - 2:
        raise ValueError(
            f"beam splitter built up to M={U.m_max}, need {d1 + d2 - 2} for dims ({d1}, {d2})"
        )
    S = sector_size(U.m_max)
    idx = _lex_to_sector_indices(d1, d2)
    Y = np.zeros((S, S), dtype=complex)
    Y[np.ix_(idx, idx)] = X
    V = U.sector_matrix
    return (V @ (V @ Y).conj().T).conj().T


def sector_partial_trace(Y: np.ndarray, m_max: int, keep: str) -> np.ndarray:
    """Reduce a sector-layout two-mode operator to one mode (dimension ``m_max+1``)."""
    D = m_max + 1
    out = np.zeros((D, D), dtype=complex)
    for k in range(D):
        # k is the occupation of the traced mode
        kept = np.arange(D - k)
        if keep == "first":
            ix = sector_index(kept, k)
        elif keep == "second":
            ix = sector_index(k, kept)
        else:
            raise ValueError("keep must be 'first' or 'second'")
        out[: D - k, : D - k] += Y[np.ix_(ix, ix)]
    return out


def apply_two_mode(U: BeamSplitterUnitary, state: TwoModeState) -> TwoModeState:
    """Conjugate a two-mode state by ``U``; the result lives on dims ``(m_max+1,)*2``.

    The output dimensions are large enough that no probability leaves the
    truncated space.  Cost is ``O(D^4)`` memory, so use
    :func:`conjugate_product_in_sectors` for large cutoffs.
    """
    d1, d2 = state.dims
    Y = conjugate_product_in_sectors(U, state.entries, d1, d2)
    D = U.m_max + 1
    n1, n2 = np.divmod(np.arange(D * D), D)
    inside = n1 + n2 <= U.m_max
    lex = np.flatnonzero(inside)
    sec = sector_index(n1[inside], n2[inside])
    out = np.zeros((D * D, D * D), dtype=complex)
    out[np.ix_(lex, lex)] = Y[np.ix_(sec, sec)]
    return TwoModeState((D, D), 0.5 * (out + out.conj().T), state.tail_mass, state.validate)


def partial_trace(state: TwoModeState, keep: str = "first") -> DensityMatrix:
    d1, d2 = state.dims
    T = state.entries.reshape(d1, d2, d1, d2)
    if keep == "first":
        r = np.einsum("ijkj->ik", T)
    elif keep == "second":
        r = np.einsum("ijil->jl", T)
    else:
        raise ValueError("keep must be 'first' or 'second'")
    return DensityMatrix(0.5 * (r + r.conj().T), state.tail_mass)


# --------------------------------------------------------------------------
# entropies and distances

def _clip_spectrum(w: np.ndarray) -> np.ndarray:
    if w.size and w.min() < -PSD_TOL:
        raise StateError(f"eigenvalue {w.min():.3e} is below -{PSD_TOL:g}")
    w = np.where(w < EIG_ZERO, 0.0, w)
    return w


def _entropy_of_probs(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(state) -> float:
    """``-Tr rho log2 rho`` with eigenvalues below ``1e-14`` treated as zero."""
    if isinstance(state, DiagonalState):
        return shannon_entropy(state.probs)
    a = as_matrix(state)
    return _entropy_of_probs(_clip_spectrum(np.linalg.eigvalsh(a)))


def shannon_entropy(p) -> float:
    """Shannon entropy in bits of a probability vector (zero entries skipped)."""
    p = np.asarray(getattr(p, "probs", p), dtype=float)
    if p.size and p.min() < -1e-12:
        raise StateError(f"negative probability {p.min():.3e}")
    if p.sum() > 1.0 + 1e-9:
        raise StateError(f"probabilities sum to {p.sum()!r} > 1")
    return _entropy_of_probs(np.clip(p, 0.0, None))


class TraceDistance(NamedTuple):
    raw: float
    """``||rho1 - rho2||_1``"""
    half: float
    """``(1/2) ||rho1 - rho2||_1``"""


def trace_distance(rho1, rho2) -> TraceDistance:
    a, b = as_matrix(rho1), as_matrix(rho2)
    if a.shape != b.shape:
        d = max(a.shape[0], b.shape[0])
        a, b = _pad(a, d), _pad(b, d)
    raw = float(np.abs(np.linalg.eigvalsh(a - b)).sum())
    return TraceDistance(raw, 0.5 * raw)


def _pad(a: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    return out


# --------------------------------------------------------------------------
# moments

def annihilation(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)


def photon_moments(state) -> tuple[float, float]:
    """``(<n>, <n^2>)``; thermal :class:`DiagonalState` objects include their tail."""
    if isinstance(state, DiagonalState):
        p = state.probs
    else:
        p = np.real(np.diag(as_matrix(state)))
    n = np.arange(p.size, dtype=float)
    m1 = float(np.dot(n, p))
    m2 = float(np.dot(n * n, p))
    nu = getattr(state, "nu", None)
    if nu is not None and nu > 0:
        # levels >= d of a geometric law: d + (geometric with mean nu)
        d = p.size
        w = (nu / (nu + 1.0)) ** d
        m1 += w * (d + nu)
        m2 += w * (d * d + 2 * d * nu + nu * (2 * nu + 1))
    return m1, m2


def mean_amplitude(state) -> complex:
    """``<a> = Tr[rho a]``."""
    a = as_matrix(state)
    return complex(np.trace(a @ annihilation(a.shape[0])))

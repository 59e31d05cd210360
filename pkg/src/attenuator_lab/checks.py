"""Numerical acceptance checks shared by the test-suite and ``verify``.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
property so that every check always reports.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .asymptotics import convergence_report, inset_sweep, p_limit_distribution, q_distribution
from .attenuator import (
    AttenuatorSpec,
    apply_general_attenuator,
    apply_weak_complementary,
    exchange_apply,
    output_mean_photons,
)
from .cohinfo import (
    coherent_information_bruteforce,
    coherent_information_fock_env,
    coherent_information_stinespring,
    fig1_sweep,
    g,
)
from .fock import (
    DensityMatrix,
    FockCutoff,
    fock_state,
    photon_moments,
    thermal_cutoff,
    thermal_state,
    trace_distance,
    von_neumann_entropy,
)
from .protocol import (
    capacity_certificate,
    continuity_penalty,
    fock_distance_bound,
    steer_environment_ideal,
    trigger_cascade_state,
    two_pulse_environment,
)

__all__ = ["CheckResult", "ALL_CHECKS", "run_all", "lambda_grid", "inset_N_grid"]


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.1f}s) {self.detail}"


def lambda_grid(lo: float = 0.0, hi: float = 1.0, step: float = 0.005) -> list[float]:
    """Evenly spaced grid including both ends, rounded to 12 decimals."""
    if step <= 0 or hi < lo:
        raise ValueError("need step > 0 and hi >= lo")
    count = int(round((hi - lo) / step))
    return [round(lo + i * step, 12) for i in range(count + 1)]


def inset_N_grid(lo: float = 0.05, hi: float = 20.0, points: int = 40) -> list[float]:
    return [float(x) for x in np.geomspace(lo, hi, points)]


def _timed(number, name, budget, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        passed = False
        detail += f"; runtime {dt:.1f}s over budget {budget:g}s"
    return CheckResult(number, name, bool(passed), detail, dt)


# 1 ------------------------------------------------------------------------

def check_oracle_equivalence():
    def run():
        worst = 0.0
        for N in (0.3, 0.5, 1.0):
            tau = thermal_state(N, FockCutoff(30, 1e-8))
            for n in range(5):
                env = fock_state(n, max(n + 1, 2))
                for lam in (0.1, 0.3, 0.5, 0.7, 0.9):
                    closed = coherent_information_fock_env(N, n, lam)
                    brute = coherent_information_bruteforce(AttenuatorSpec(lam, env), tau)
                    worst = max(worst, abs(closed - brute))
        return worst <= 1e-6, f"max |closed - brute| = {worst:.2e} (tol 1e-6)"

    return _timed(1, "closed-form vs brute-force coherent information", 60, run)


# 2 ------------------------------------------------------------------------

def fig1_properties(rows):
    """Check the sweep properties on rows ``(N, n, lam, icoh, ...)``."""
    by_n: dict[int, list] = {}
    for r in rows:
        by_n.setdefault(int(r[1]), []).append((float(r[2]), float(r[3])))
    problems = []
    first = {}
    for n, pts in sorted(by_n.items()):
        half = [i for lam, i in pts if lam == 0.5]
        if not half or abs(half[0]) > 1e-12:
            problems.append(f"n={n}: I(1/2)={half}")
        if n >= 20 and not any(i > 0 for lam, i in pts if lam < 0.5):
            problems.append(f"n={n}: no positive point below 1/2")
        pos = [lam for lam, i in pts if i > 1e-6]
        first[n] = min(pos) if pos else math.inf
    ns = sorted(first)
    for a, b in zip(ns, ns[1:]):
        if first[b] > first[a]:
            problems.append(f"onset rises from n={a} ({first[a]}) to n={b} ({first[b]})")
    onset = ", ".join(f"{n}:{first[n]:g}" for n in ns)
    return not problems, ("; ".join(problems) if problems else f"onsets {onset}")


def check_fig1(rows=None, map_fn=map):
    def run():
        data = rows
        if data is None:
            data = [
                (r.N, r.n, r.lam, r.i_coh)
                for r in fig1_sweep(0.5, range(10, 101, 10), lambda_grid(), map_fn=map_fn)
            ]
        return fig1_properties(data)

    return _timed(2, "coherent-information sweep properties (N=0.5, n=10..100)", 120, run)


# 3 ------------------------------------------------------------------------

def check_inset(rows=None, map_fn=map):
    def run():
        data = rows or inset_sweep((0.5, 1.0, 2.0), inset_N_grid(), map_fn=map_fn)
        gaps = [float(r[3]) for r in data]
        bad = [r for r in data if not float(r[3]) > 0]
        ok = not bad and len(data) == 120 and all(math.isfinite(x) for x in gaps)
        return ok, f"{len(data)} rows, min gap {min(gaps):.4g} bits, {len(bad)} non-positive"

    return _timed(3, "limit entropy gap positive for c = N + alpha", 30, run)


# 4 ------------------------------------------------------------------------

def check_convergence(rows=None):
    def run():
        data = rows or convergence_report(0.5, 1.0, [100, 200, 400])
        dq = [float(r[3]) for r in data]
        dp = [float(r[4]) for r in data]
        dec = all(b < a for a, b in zip(dq, dq[1:])) and all(b < a for a, b in zip(dp, dp[1:]))
        ok = dec and dq[-1] < 1e-3 and dp[-1] < 1e-3
        return ok, "dist_q " + ", ".join(f"{x:.3e}" for x in dq) + "; dist_p " + ", ".join(
            f"{x:.3e}" for x in dp
        )

    return _timed(4, "finite-n convergence to the limit laws (N=0.5, c=1)", 30, run)


# 5 ------------------------------------------------------------------------

SANITY_GRID = (0.1, 0.5, 1.0, 5.0, 20.0)


def check_distribution_sanity():
    def run():
        worst_sum = 0.0
        worst_ratio = 0.0
        for N in SANITY_GRID:
            for c in SANITY_GRID:
                q = q_distribution(N, c)
                p = p_limit_distribution(N, c)
                worst_sum = max(worst_sum, abs(math.fsum(q.probs) - 1), abs(math.fsum(p.probs) - 1))
                x = N / (N + 1.0)
                for k in range(1, q.K + 1):
                    a, b = q[k], q[-k]
                    if a > 1e-12 and b > 1e-12:
                        worst_ratio = max(worst_ratio, abs((a / b) / x**k - 1.0))
        ok = worst_sum <= 1e-10 and worst_ratio <= 1e-9
        return ok, f"max |sum - 1| = {worst_sum:.2e}, max ratio rel. error = {worst_ratio:.2e}"

    return _timed(5, "normalisation and detailed balance of the limit laws", None, run)


# 6 ------------------------------------------------------------------------

def check_distance_bound():
    def run():
        violations = []
        ratios = []
        for n in range(4):
            for nu in (0.0, 0.2):
                for lam in (0.2, 0.4, 0.6):
                    dists = []
                    for k in range(1, 7):
                        sigma = steer_environment_ideal(trigger_cascade_state(lam, n, k), lam, nu)
                        d = trace_distance(sigma, fock_state(n, sigma.d)).raw
                        b = fock_distance_bound(n, nu, lam, k).value
                        if d > b + 1e-8:
                            violations.append((n, nu, lam, k, d, b))
                        dists.append(d)
                    if min(dists) > 0:
                        slope = np.polyfit(np.arange(1, 7), np.log(dists), 1)[0]
                        ratios.append(slope / (0.5 * math.log(lam)))
        slope_ok = all(0.8 <= r <= 1.2 for r in ratios)
        detail = (
            f"bound violations {len(violations)}/144; fitted slope / (log lam / 2) over "
            f"{len(ratios)} cases: min {min(ratios):.3f}, median {np.median(ratios):.3f}, "
            f"max {max(ratios):.3f} (required 0.8..1.2)"
        )
        return not violations and slope_ok, detail

    return _timed(6, "Fock distance bound soundness and lam^(k/2) trend", 300, run)


# 7 ------------------------------------------------------------------------

def check_two_pulse():
    def run():
        lam = 0.05
        tau = thermal_state(0.5, FockCutoff(thermal_cutoff(0.5, 1e-13), 1e-12))
        parts = []
        ok = True
        for nu in (0.0, 0.1):
            sigma, n_lam = two_pulse_environment(lam, nu)
            energy_err = abs(photon_moments(sigma)[0] - ((1 - lam**2) * n_lam + lam**2 * nu))
            icoh = coherent_information_stinespring(lam, sigma, tau)
            ok &= icoh > 0 and energy_err <= 1e-8
            parts.append(f"nu={nu:g}: n_lam={n_lam}, I_coh={icoh:+.5f} bits, energy err {energy_err:.1e}")
        return ok, "; ".join(parts)

    return _timed(7, "two-pulse environment at lam=0.05 (input tau_0.5)", None, run)


# 8 ------------------------------------------------------------------------

def _random_state(rng, d, rank=None, diagonal_only=False):
    rank = rank or d
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    if diagonal_only:
        rho = np.diag(np.diag(rho))
    return DensityMatrix(rho / np.trace(rho).real)


def channel_algebra_errors(seed: int = 20240607, trials: int = 3) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    errs = {k: 0.0 for k in ("exchange", "endpoints", "conservation", "energy", "wc_entropy")}
    for _ in range(trials):
        dS, dE = (int(x) for x in rng.integers(2, 11, size=2))
        rho = _random_state(rng, dS)
        sigma = _random_state(rng, dE)
        lam = float(rng.uniform(0.05, 0.95))
        spec = AttenuatorSpec(lam, sigma)
        out = apply_general_attenuator(spec, rho)
        comp = apply_weak_complementary(spec, rho)
        errs["exchange"] = max(errs["exchange"], trace_distance(out, exchange_apply(lam, sigma, rho)).raw)
        # at lam = 0 the splitter sends b -> -a, so the environment output is
        # rho conjugated by the parity (-1)^N
        parity = np.diag((-1.0) ** np.arange(dS))
        rho_flipped = parity @ rho.entries @ parity
        for end, sys_ref, env_ref in ((1.0, rho, sigma), (0.0, sigma, rho_flipped)):
            s = AttenuatorSpec(end, sigma)
            errs["endpoints"] = max(
                errs["endpoints"],
                trace_distance(apply_general_attenuator(s, rho), sys_ref).raw,
                trace_distance(apply_weak_complementary(s, rho), env_ref).raw,
            )
        m_out, m_comp = photon_moments(out)[0], photon_moments(comp)[0]
        m_in = photon_moments(rho)[0] + photon_moments(sigma)[0]
        errs["conservation"] = max(errs["conservation"], abs(m_out + m_comp - m_in))
        pred = output_mean_photons(lam, sigma, rho)
        errs["energy"] = max(errs["energy"], abs(pred[0] - m_out), abs(pred[1] - m_comp))
        N = float(rng.uniform(0.2, 1.5))
        n = int(rng.integers(0, 4))
        tau = thermal_state(N, FockCutoff(thermal_cutoff(N, 1e-14), 1e-12))
        env = fock_state(n, max(n + 1, 2))
        wc = apply_weak_complementary(AttenuatorSpec(lam, env), tau)
        flipped = apply_general_attenuator(AttenuatorSpec(1.0 - lam, env), tau)
        errs["wc_entropy"] = max(
            errs["wc_entropy"], abs(von_neumann_entropy(wc) - von_neumann_entropy(flipped))
        )
    return errs


CHANNEL_TOLERANCES = {
    "exchange": 1e-9,
    "endpoints": 1e-12,
    "conservation": 1e-10,
    "energy": 1e-8,
    "wc_entropy": 1e-8,
}


def check_channel_algebra():
    def run():
        errs = channel_algebra_errors()
        ok = all(errs[k] <= CHANNEL_TOLERANCES[k] for k in errs)
        return ok, ", ".join(f"{k} {v:.1e}/{CHANNEL_TOLERANCES[k]:.0e}" for k, v in errs.items())

    return _timed(8, "channel algebra on random instances", None, run)


# 9 ------------------------------------------------------------------------

# 56 * 0.1 * g(4 * (0.5 + 12) / 0.1) + 6 * g(0.4), evaluated at 50 digits
# with mpmath; eps = 0.01, alpha = 1, N0 = 1/lam + 2 at lam = 0.1, N = 0.5
HAND_PENALTY = 65.545770710592682


def check_certificate():
    def run():
        problems = []
        delta = continuity_penalty(0.01, 1.0, 0.5, 1.0 / 0.1 + 2.0)
        if abs(delta - HAND_PENALTY) > 1e-12 * max(1.0, HAND_PENALTY):
            problems.append(f"penalty {delta!r} != {HAND_PENALTY!r}")
        eps_grid = [1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9]
        vals = [continuity_penalty(e, 0.7, 0.5, 3.0) for e in eps_grid]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            problems.append("penalty not increasing in eps")
        nvals = [continuity_penalty(0.01, 0.7, N, 3.0) for N in (0.1, 0.5, 1.0, 5.0)]
        if any(b <= a for a, b in zip(nvals, nvals[1:])):
            problems.append("penalty not increasing in N")
        exact = capacity_certificate(fock_state(3, 5).to_density(), 0.3, 3, 0.5)
        if not (exact.eps == 0 and exact.penalty == 0 and exact.lower == exact.upper == exact.icoh_ideal):
            problems.append("exact Fock environment does not give a degenerate interval")
        far = capacity_certificate(fock_state(0, 5).to_density(), 0.3, 3, 0.5)
        if far.applicable:
            problems.append("eps = 1 certificate marked applicable")
        return not problems, "; ".join(problems) or f"Delta(0.01, 1, 0.5, 12) = {delta:.15g}"

    return _timed(9, "continuity certificate transcription and monotonicity", None, run)


ALL_CHECKS = (
    check_oracle_equivalence,
    check_fig1,
    check_inset,
    check_convergence,
    check_distribution_sanity,
    check_distance_bound,
    check_two_pulse,
    check_channel_algebra,
    check_certificate,
)


def run_all(map_fn=map) -> list[CheckResult]:
    results = []
    for fn in ALL_CHECKS:
        if fn in (check_fig1, check_inset):
            results.append(fn(map_fn=map_fn))
        else:
            results.append(fn())
    return results

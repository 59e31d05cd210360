"""Attenuator channels from the beam-splitter dilation.

Run with ``python demos/01_beam_splitter_channels.py``.
"""

import numpy as np

from attenuator_lab import (
    AttenuatorSpec,
    FockCutoff,
    apply_general_attenuator,
    apply_thermal_attenuator_closed_form,
    apply_weak_complementary,
    fock_state,
    thermal_state,
    trace_distance,
)
from attenuator_lab.attenuator import exchange_apply

np.set_printoptions(precision=4, suppress=True)

# A single photon meets vacuum on a balanced splitter: it survives half the time.
out = apply_general_attenuator(AttenuatorSpec(0.5, fock_state(0, 2)), fock_state(1, 2), out_cutoff=2)
print("single photon through lam=0.5:\n", out.entries.real)

# A thermal environment degrades a Fock input; the closed form and the dilation agree.
lam, nu = 0.7, 0.4
tau = thermal_state(nu, FockCutoff(60, 1e-12))
rho = fock_state(2, 3)
dil = apply_general_attenuator(AttenuatorSpec(lam, tau), rho, out_cutoff=FockCutoff(30, 1e-9))
closed = apply_thermal_attenuator_closed_form(lam, nu, rho, FockCutoff(30, 1e-9))
print("dilation vs closed form, trace distance:", trace_distance(dil, closed).half)

# Input and environment can trade places if the transmissivity is flipped.
swapped = exchange_apply(lam, tau, rho, out_cutoff=FockCutoff(30, 1e-9))
print("exchange identity residual:", trace_distance(dil, swapped).half)

# The environment output keeps what the system loses.
env = apply_weak_complementary(AttenuatorSpec(lam, tau), rho, out_cutoff=FockCutoff(30, 1e-9))
n_sys = float(np.dot(np.arange(dil.d), np.diag(dil.entries).real))
n_env = float(np.dot(np.arange(env.d), np.diag(env.entries).real))
print(f"photons: system {n_sys:.6f} + environment {n_env:.6f} = {n_sys + n_env:.6f} (input 2 + {nu})")

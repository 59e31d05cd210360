"""Steering a memory environment with trigger pulses.

Trigger pulses sent before the signal leave the environment close to a Fock
state; the signal then sees an attenuator with a nearly ideal environment.
Run with ``python demos/04_noise_attenuation_protocol.py``.
"""

from attenuator_lab.protocol import (
    ProtocolConfig,
    ThermalisationModel,
    protocol_end_to_end,
    two_pulse_environment,
    two_pulse_level,
)

# Longer trigger trains bring the environment closer to |3>.
for k in (2, 4, 6):
    rep = protocol_end_to_end(ProtocolConfig(0.3, 0.0, 3, k), N=0.5)
    print(f"k={k}: distance {rep.trace_dist:.4f} (bound {rep.bound.value:.4f}), "
          f"I_coh {rep.icoh:+.4f} bits, per use {rep.rate:+.4f}")

# Relaxation between pulses undoes part of the preparation.
for dt in (1e-3, 1e-1, 1.0):
    model = ThermalisationModel("exponential", dt, 1.0)
    rep = protocol_end_to_end(ProtocolConfig(0.3, 0.0, 3, 6, model), N=0.5)
    print(f"dt/t_E={dt:g}: distance {rep.trace_dist:.4f}, I_coh {rep.icoh:+.4f} bits")

# Two pulses at small transmissivity: the environment carries about 1/lam photons.
lam = 0.05
sigma, n_lam = two_pulse_environment(lam, 0.0)
rep = protocol_end_to_end(ProtocolConfig(lam, 0.0, two_pulse_level(lam), 2), N=0.5)
print(f"lam={lam}: n_lam={n_lam}, I_coh {rep.icoh:+.4f} bits")

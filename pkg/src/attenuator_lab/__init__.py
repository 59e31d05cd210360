"""Attenuator channels with engineered environments.

Truncated Fock-space tools, general and thermal attenuators, coherent
information of Fock-environment attenuators, their large-``n`` limit laws,
and a collisional simulation of trigger pulses that steer the environment.
"""

__version__ = "0.1.0"

from .fock import (  # noqa: E402
    CutoffError,
    DensityMatrix,
    DiagonalState,
    FockCutoff,
    fock_state,
    thermal_state,
    trace_distance,
    von_neumann_entropy,
)
from .attenuator import (  # noqa: E402
    AttenuatorSpec,
    apply_general_attenuator,
    apply_weak_complementary,
    apply_thermal_attenuator_closed_form,
    thermal_transition_coefficient,
)
from .cohinfo import coherent_information_fock_env, ea_lower_bound, g, p_distribution  # noqa: E402
from .asymptotics import entropy_gap, p_limit_distribution, q_distribution  # noqa: E402
from .protocol import (  # noqa: E402
    ProtocolConfig,
    ThermalisationModel,
    protocol_end_to_end,
    steer_environment_ideal,
    trigger_cascade_state,
    two_pulse_environment,
)

"""rydgate: Rydberg two-photon CNOT gate simulator, optimizer, and error auditor."""

__version__ = "0.1.0"

from .basis import PAIR_LABELS, COMPUTATIONAL_INPUTS  # noqa: F401
from .dynamics import (  # noqa: F401
    DriveModifiers,
    EvolveResult,
    NumericalError,
    Propagation,
    evolve,
    hamiltonian,
    lindblad_rhs,
    propagator_oracle,
)
from .fidelity import FidelityReport, decay_budget, gate_fidelity  # noqa: F401
from .gate import GateRun, gate_fidelity_value, simulate_gate  # noqa: F401
from .model import (  # noqa: F401
    DecayRates,
    DephasingRates,
    InteractionSpec,
    PhysicalModel,
)
from .pulses import (  # noqa: F401
    BluePulse,
    DetuningWaveform,
    PulseSet,
    RedPulse,
    effective_params,
    eval_blue,
    eval_detuning,
    eval_red,
)

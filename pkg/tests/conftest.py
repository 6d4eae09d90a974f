import numpy as np
import pytest

from rydgate import (
    BluePulse,
    DecayRates,
    DetuningWaveform,
    PhysicalModel,
    Propagation,
    PulseSet,
    RedPulse,
)
from rydgate.constants import ghz, mhz


@pytest.fixture(scope="session")
def decays():
    return DecayRates(gamma_e=mhz(3.0), gamma_d=mhz(0.003),
                      gamma_p=mhz(0.003), gamma_f=mhz(0.003))


@pytest.fixture(scope="session")
def model(decays):
    return PhysicalModel(decays=decays)


@pytest.fixture(scope="session")
def case_i_pulses():
    tg = 1.0
    return PulseSet(
        red=RedPulse(mhz(268.0), 0.0921, tg, corrected=True),
        blue=BluePulse("gaussian_offset", tg, omega_gauss=mhz(538.01),
                       width=0.9885, offset=mhz(136.47)),
        detuning=DetuningWaveform("modulated", tg, d0=mhz(-11.33),
                                  d1=mhz(-42.38), d2=mhz(-18.71)),
        delta_big=ghz(4.0),
    )


@pytest.fixture(scope="session")
def case_iii_pulses():
    tg = 0.1
    return PulseSet(
        red=RedPulse(mhz(306.0), 0.8045, tg, corrected=True),
        blue=BluePulse("gaussian_offset", tg, omega_gauss=mhz(419.98),
                       width=0.7336, offset=mhz(555.05)),
        detuning=DetuningWaveform("modulated", tg, d0=mhz(-58.49),
                                  d1=mhz(18.64), d2=mhz(119.08)),
        delta_big=ghz(4.0),
    )


@pytest.fixture(scope="session")
def fast_prop():
    """Cheap-but-accurate settings for unit tests."""
    return Propagation(method="magnus", slice_width=3.2e-4, sample_points=200)


@pytest.fixture(scope="session")
def case_i_run(case_i_pulses, model):
    """Reference case-(i) gate run, used by several test modules."""
    from rydgate.gate import simulate_gate

    prop = Propagation(method="adaptive_rk", rtol=1e-9, sample_points=1000)
    return simulate_gate(case_i_pulses, model, prop, record=True,
                         with_decay_budget=True)

import math

import numpy as np
import pytest

from rydgate.constants import TWO_PI, ghz, mhz
from rydgate.pulses import (
    BluePulse,
    DetuningWaveform,
    PulseDomainError,
    PulseSet,
    RedPulse,
    effective_params,
    eval_blue,
    eval_detuning,
    eval_red,
)


def test_red_standard_peak():
    p = RedPulse(mhz(268.0), 0.15, 1.0)
    assert eval_red(0.5, p) == pytest.approx(mhz(268.0))


def test_red_standard_one_sigma():
    # peak 268 MHz, evaluated one width off-center: 268*exp(-1/2) = 162.55 MHz
    p = RedPulse(mhz(268.0), 0.15, 1.0)
    expect = mhz(268.0 * math.exp(-0.5))
    assert eval_red(0.5 + 0.15, p) == pytest.approx(expect, rel=1e-12)
    assert expect / TWO_PI == pytest.approx(162.5, abs=0.1)


def test_red_corrected_vanishes_at_edges():
    p = RedPulse(mhz(268.0), 0.0921, 1.0, corrected=True)
    assert eval_red(0.0, p) == 0.0
    assert eval_red(1.0, p) == pytest.approx(0.0, abs=1e-25)
    assert eval_red(0.5, p) == pytest.approx(mhz(268.0))


def test_blue_case_i_peak():
    # Omega_bm + K at the center: 538.01 + 136.47 = 674.48 MHz
    p = BluePulse("gaussian_offset", 1.0, omega_gauss=mhz(538.01),
                  width=0.9885, offset=mhz(136.47))
    assert eval_blue(0.5, p) / TWO_PI == pytest.approx(674.48)


def test_blue_constant():
    p = BluePulse("constant", 1.0, omega_const=mhz(240.0))
    t = np.linspace(0, 1, 7)
    assert np.allclose(eval_blue(t, p), mhz(240.0))


def test_detuning_modulated_endpoints():
    d = DetuningWaveform("modulated", 1.0, d0=mhz(-11.33), d1=mhz(-42.38),
                         d2=mhz(-18.71))
    assert eval_detuning(0.0, d) == pytest.approx(mhz(-11.33 - 42.38))
    # at T/2: d0 - d1 + d2 with the case-(i) coefficients = +12.34 MHz
    assert eval_detuning(0.5, d) / TWO_PI == pytest.approx(12.34)


def test_domain_errors():
    p = RedPulse(1.0, 0.1, 1.0)
    with pytest.raises(PulseDomainError):
        eval_red(1.5, p)
    with pytest.raises(PulseDomainError):
        eval_red(-0.2, p)


def test_effective_params_equal_drives():
    on, om, de = effective_params(mhz(100.0), mhz(100.0), ghz(4.0), mhz(5.0))
    assert de == pytest.approx(mhz(5.0))


def test_effective_params_paper_point():
    on, om, de = effective_params(mhz(268.0), mhz(240.0), ghz(4.0), 0.0)
    assert on / TWO_PI == pytest.approx(8.04, abs=5e-3)
    assert om / TWO_PI == pytest.approx(8.978, abs=5e-4)
    assert de / TWO_PI == pytest.approx(0.889, abs=5e-4)


def test_effective_params_zero_drive():
    on, om, de = effective_params(0.0, mhz(240.0), ghz(4.0), mhz(1.0))
    assert on == 0.0 and om == 0.0
    assert de == pytest.approx(mhz(1.0) - mhz(240.0) ** 2 / (4 * ghz(4.0)))


def test_effective_params_singularity():
    with pytest.raises(ZeroDivisionError):
        effective_params(1.0, 1.0, 0.0, 0.0)


@pytest.mark.parametrize("make", [
    lambda: ("red", RedPulse(mhz(268.0), 0.15, 1.0)),
    lambda: ("red", RedPulse(mhz(268.0), 0.0921, 1.0, corrected=True)),
    lambda: ("blue", BluePulse("gaussian_offset", 1.0, omega_gauss=mhz(538.0),
                               width=0.3, offset=mhz(136.0))),
])
def test_gaussian_symmetry(make):
    kind, p = make()
    fn = eval_red if kind == "red" else eval_blue
    s = np.linspace(0.0, 0.5, 23)
    assert np.allclose(fn(0.5 - s, p), fn(0.5 + s, p), rtol=0, atol=1e-12)


def test_corrected_matches_standard_for_narrow_pulse():
    # T_g/2 >> w: relative deviation bounded by the truncated tail weight
    w = 0.05
    std = RedPulse(1.0, w, 1.0)
    corr = RedPulse(1.0, w, 1.0, corrected=True)
    tail = math.exp(-0.25 / (2 * w**2))
    t = np.linspace(0.3, 0.7, 11)
    rel = np.abs(eval_red(t, corr) - eval_red(t, std)) / eval_red(t, std)
    assert rel.max() < 2 * tail


def test_effective_params_homogeneous():
    rng = np.random.default_rng(5)
    for _ in range(20):
        wr, wb, dd, dl = rng.uniform(0.5, 3.0, 4)
        lam = rng.uniform(0.1, 4.0)
        on1, om1, de1 = effective_params(wr, wb, dd, dl)
        on2, om2, de2 = effective_params(lam * wr, lam * wb, dd, dl)
        assert on2 == pytest.approx(lam**2 * on1)
        assert om2 == pytest.approx(lam**2 * om1)
        assert de2 - dl == pytest.approx(lam**2 * (de1 - dl))


def test_pulse_set_gate_time_consistency():
    red = RedPulse(1.0, 0.1, 1.0)
    blue = BluePulse("constant", 0.5, omega_const=1.0)
    det = DetuningWaveform("constant", 1.0, value=0.0)
    with pytest.raises(ValueError):
        PulseSet(red=red, blue=blue, detuning=det, delta_big=ghz(4.0))


def test_adiabatic_warning(case_i_pulses):
    # case (i) peak blue drive 674 MHz exceeds Delta/10 = 400 MHz
    with pytest.warns(UserWarning, match="dominate"):
        ok = case_i_pulses.check_adiabatic(warn=True)
    assert not ok

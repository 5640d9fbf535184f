import numpy as np
import pytest

from eitfbs.errors import ConvergenceError
from eitfbs.maxwell_bloch import energy_transmission, group_delay, propagate_pulse
from eitfbs.physics import MediumParams, gaussian_pulse, mhz_to_rad, time_grid
from eitfbs.time_domain import default_nt, time_domain_oracle

FIG5 = MediumParams(alpha=110.0, gamma=3e-3, omega_c=3.0, omega_d=3.0, Delta=mhz_to_rad(-205.0))


def test_empty_medium_passes_pulse_unchanged():
    pulse = gaussian_pulse(0.0, 3e-6, 1.0, time_grid(512, 24e-6))
    probe, signal = time_domain_oracle(MediumParams(alpha=0.0), pulse, "probe", nz=4)
    # only the resampling onto the integration grid and back remains
    peak = np.abs(pulse.amplitude).max()
    assert np.max(np.abs(probe.amplitude - pulse.amplitude)) < 1e-4 * peak
    assert np.max(np.abs(signal.amplitude)) == 0.0


@pytest.mark.parametrize("port", ["probe", "signal"])
def test_agrees_with_spectral_solution(fig5_pulse, port):
    spectral = propagate_pulse(FIG5, fig5_pulse, port)
    direct = time_domain_oracle(FIG5, fig5_pulse, port)
    for s, d in zip(spectral, direct):
        assert abs(d.energy() - s.energy()) <= 0.01 * s.energy()
        assert abs(group_delay(fig5_pulse, d) - group_delay(fig5_pulse, s)) < 0.02e-6


def test_slow_light_delay_scales_with_depth():
    """Far from the four-wave-mixing resonance the probe sees plain EIT."""
    pulse = gaussian_pulse(0.0, 1.5e-6, 1.0, time_grid(512, 10e-6))
    delays = []
    for alpha in (20.0, 40.0):
        p = MediumParams(alpha=alpha, gamma=0.0, Delta=mhz_to_rad(-1500.0))
        nt = int(10e-6 * abs(p.Delta))
        probe, _ = time_domain_oracle(p, pulse, "probe", nz=50, nt=nt)
        delays.append(group_delay(pulse, probe))
        assert delays[-1] == pytest.approx(alpha / (p.Gamma * p.omega_c**2), rel=0.02)
    assert delays[1] / delays[0] == pytest.approx(2.0, rel=0.01)


def test_convergence_check_passes_for_defaults():
    pulse = gaussian_pulse(0.0, 3e-6, 1.0, time_grid(1024, 24e-6))
    probe, signal = time_domain_oracle(FIG5, pulse, "probe", check_convergence=True)
    assert 0.3 < energy_transmission(pulse, signal) < 0.6


def test_convergence_check_flags_coarse_grid():
    pulse = gaussian_pulse(0.0, 3e-6, 1.0, time_grid(1024, 24e-6))
    with pytest.raises(ConvergenceError):
        time_domain_oracle(FIG5, pulse, "probe", nz=4, check_convergence=True)


def test_unstable_step_rejected():
    pulse = gaussian_pulse(0.0, 3e-6, 1.0, time_grid(512, 24e-6))
    with pytest.raises(ConvergenceError):
        time_domain_oracle(FIG5, pulse, "probe", nz=4, nt=200)


def test_default_step_resolves_fastest_rate():
    span = 24e-6
    nt = default_nt(FIG5, span)
    assert span / nt * abs(FIG5.Delta) <= 0.4 + 1e-12

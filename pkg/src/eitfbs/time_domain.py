"""Time-domain Maxwell-Bloch integrator, used to cross-check the spectral propagator.

The medium is cut into ``nz`` slices.  In retarded time each slice sees the
field leaving the previous one, so slices are processed in order: the
coherence ODEs of a slice are integrated over the whole time window with
classical RK4, then the fields are advanced to the next slice with a
first-order upwind step ``Omega += dz * i (alpha/2) rho``.

For a linear, time-invariant ODE one RK4 step is an exact affine map
``x' = P x + R0 b(t) + Rh b(t + dt/2) + R1 b(t + dt)``.  The maps are built
once per run and the resulting recurrence is evaluated with ``lfilter`` in
the eigenbasis of ``P``, which keeps each slice O(nt) in compiled code while
producing the same numbers as a step-by-step loop.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.signal import lfilter

from .errors import ConvergenceError
from .maxwell_bloch import PROBE, SIGNAL, port_index
from .physics import MediumParams, PulseEnvelope

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 5e-3


def _bloch_generator(p: MediumParams, delta: float) -> np.ndarray:
    d = delta / p.Gamma
    Dl = p.Delta / p.Gamma
    return np.array([
        [-(0.5 - 1j * d), 0.0, 0.5j * p.omega_c],
        [0.0, -(0.5 - 1j * (d + Dl)), 0.5j * p.omega_d],
        [0.5j * np.conj(p.omega_c), 0.5j * np.conj(p.omega_d), -(p.gamma - 1j * d)],
    ], dtype=complex)


def _rk4_maps(gen: np.ndarray, h: float):
    eye = np.eye(3, dtype=complex)
    zero = np.zeros((3, 3), dtype=complex)

    def step(x, b0, bh, b1):
        k1 = gen @ x + b0
        k2 = gen @ (x + h / 2 * k1) + bh
        k3 = gen @ (x + h / 2 * k2) + bh
        k4 = gen @ (x + h * k3) + b1
        return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    return (step(eye, zero, zero, zero), step(zero, eye, zero, zero),
            step(zero, zero, eye, zero), step(zero, zero, zero, eye))


def _midpoints(b: np.ndarray) -> np.ndarray:
    """Four-point cubic interpolation of b at the half steps."""
    padded = np.concatenate([b[:, :1], b, b[:, -1:], b[:, -1:]], axis=1)
    mid = (9 * (padded[:, 1:-2] + padded[:, 2:-1]) - (padded[:, :-3] + padded[:, 3:])) / 16
    return mid[:, : b.shape[1] - 1]


def default_nt(p: MediumParams, span: float, delta: float = 0.0) -> int:
    """Step count keeping every local rate times dt below 0.4."""
    rate = max(0.5, abs(p.Delta + delta) / p.Gamma, abs(delta) / p.Gamma,
               p.omega_c, p.omega_d)
    return int(math.ceil(span * p.Gamma * rate / 0.4))


def _integrate(p: MediumParams, pulse: PulseEnvelope, col: int, nz: int, nt: int,
               delta: float) -> np.ndarray:
    t = pulse.t_grid
    tt = np.linspace(t[0], t[-1], nt + 1)
    h = (tt[1] - tt[0]) * p.Gamma
    fields = np.zeros((2, nt + 1), dtype=complex)
    fields[col] = np.interp(tt, t, pulse.amplitude.real) + 1j * np.interp(tt, t, pulse.amplitude.imag)

    if p.alpha > 0:
        P, R0, Rh, R1 = _rk4_maps(_bloch_generator(p, delta), h)
        lam, vec = np.linalg.eig(P)
        if np.max(np.abs(lam)) > 1.0:
            raise ConvergenceError(
                f"RK4 step unstable (|eigenvalue| = {np.max(np.abs(lam)):.6f}); increase nt")
        vec_inv = np.linalg.inv(vec)
        dz = 1.0 / nz
        gain = 0.5j * p.alpha
        drive = np.zeros((3, nt + 1), dtype=complex)
        rho = np.zeros((3, nt + 1), dtype=complex)
        for _ in range(nz):
            drive[:2] = 0.5j * fields
            forcing = R0 @ drive[:, :-1] + Rh @ _midpoints(drive) + R1 @ drive[:, 1:]
            modal = vec_inv @ forcing
            for k in range(3):
                rho[k, 1:] = lfilter([1.0], [1.0, -lam[k]], modal[k])
            rho[:, 0] = 0.0
            fields = fields + dz * gain * (vec @ rho)[:2]

    out = np.empty((2, t.size), dtype=complex)
    for k in range(2):
        out[k] = np.interp(t, tt, fields[k].real) + 1j * np.interp(t, tt, fields[k].imag)
    return out


def time_domain_oracle(p: MediumParams, pulse: PulseEnvelope, port="probe",
                       nz: int = 400, nt: int | None = None, delta: float = 0.0,
                       check_convergence: bool = False) -> tuple[PulseEnvelope, PulseEnvelope]:
    """Time-domain propagation; same contract as ``propagate_pulse``.

    With ``check_convergence`` the run is repeated with ``nz`` and ``nt``
    halved and a :class:`ConvergenceError` is raised if either output
    energy moves by more than 0.5 %.
    """
    col = port_index(port)
    span = pulse.t_grid[-1] - pulse.t_grid[0]
    if nt is None:
        nt = default_nt(p, span, delta)
    out = _integrate(p, pulse, col, nz, nt, delta)

    if check_convergence and p.alpha > 0:
        ref = np.abs(out) ** 2
        e_ref = ref.sum(axis=1)
        for nz_c, nt_c in ((nz // 2, nt), (nz, nt // 2)):
            try:
                coarse = _integrate(p, pulse, col, nz_c, nt_c, delta)
            except ConvergenceError as exc:
                raise ConvergenceError(f"coarse run (nz={nz_c}, nt={nt_c}) failed: {exc}") from None
            e_c = (np.abs(coarse) ** 2).sum(axis=1)
            scale = max(e_ref.max(), 1e-300)
            change = np.max(np.abs(e_c - e_ref)) / scale
            log.debug("convergence nz=%d nt=%d change=%.3e", nz_c, nt_c, change)
            if change > CONVERGENCE_TOL:
                raise ConvergenceError(
                    f"halving to nz={nz_c}, nt={nt_c} changes output energy by {change:.2%}")

    return (PulseEnvelope(pulse.t_grid, out[PROBE]), PulseEnvelope(pulse.t_grid, out[SIGNAL]))

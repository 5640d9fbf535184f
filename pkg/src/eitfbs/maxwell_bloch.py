"""Steady-state transfer matrix of the dual-Lambda four-wave-mixing medium.

Weak-field optical Bloch equations in the rotating frame (rates in units of
Gamma, ``d`` the weak-field spectral offset)::

    d rho31/dt = i/2 Omega_p + i/2 Omega_c rho21  - (1/2 - i d) rho31
    d rho41/dt = i/2 Omega_s + i/2 Omega_d rho21  - (1/2 - i (d + Delta)) rho41
    d rho21/dt = i/2 Omega_c* rho31 + i/2 Omega_d* rho41 - (gamma - i d) rho21

and Maxwell-Schroedinger equations over the normalised length z in [0, 1]::

    d Omega_p/dz = i (alpha/2) rho31
    d Omega_s/dz = i (alpha/2) rho41

Setting the time derivatives to zero gives rho = C @ (Omega_p, Omega_s) and
therefore a z-independent 2x2 propagation matrix.  A linear wavevector
mismatch ``delta_k_L`` on the signal is absorbed by working in the frame
that co-moves with the signal phase, where it becomes a constant diagonal
term; the returned matrix is transformed back to the lab frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import FbsError, SingularSystemError, WraparoundError
from .physics import BsCoefficients, MediumParams, PulseEnvelope

PROBE, SIGNAL = 0, 1
_PORTS = {"probe": PROBE, "signal": SIGNAL, 0: PROBE, 1: SIGNAL}
WRAP_TOL = 1e-6


@dataclass(frozen=True)
class TransferMatrix:
    """Map (probe_in, signal_in) -> (probe_out, signal_out) at detuning ``delta``."""

    m: np.ndarray
    delta: float

    def __post_init__(self):
        m = np.asarray(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise FbsError(f"transfer matrix must be 2x2, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise FbsError("transfer matrix has non-finite entries")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    def max_singular_value(self) -> float:
        return float(np.linalg.svd(self.m, compute_uv=False)[0])


def port_index(port) -> int:
    try:
        return _PORTS[port]
    except (KeyError, TypeError):
        raise FbsError(f"port must be 'probe' or 'signal', got {port!r}") from None


def _check_controls(p: MediumParams):
    if p.omega_c <= 0 and p.omega_d <= 0:
        raise SingularSystemError("both control fields are zero; coherence system is singular")
    if p.omega_c <= 0 or p.omega_d <= 0:
        raise SingularSystemError("omega_c and omega_d must both be > 0 for a transfer matrix")


def coherence_response(p: MediumParams, delta) -> np.ndarray:
    """Steady-state coherences per unit weak field.

    Returns ``C`` of shape (..., 3, 2) with rows (rho31, rho41, rho21) and
    columns (Omega_p, Omega_s); ``delta`` is in rad/s and may be an array.
    """
    _check_controls(p)
    d = np.asarray(delta, dtype=float) / p.Gamma
    shape = d.shape
    d = d.reshape(-1)
    Dl = p.Delta / p.Gamma
    oc, od = p.omega_c, p.omega_d

    lhs = np.zeros((d.size, 3, 3), dtype=complex)
    lhs[:, 0, 0] = -(0.5 - 1j * d)
    lhs[:, 0, 2] = 0.5j * oc
    lhs[:, 1, 1] = -(0.5 - 1j * (d + Dl))
    lhs[:, 1, 2] = 0.5j * od
    lhs[:, 2, 0] = 0.5j * np.conj(oc)
    lhs[:, 2, 1] = 0.5j * np.conj(od)
    lhs[:, 2, 2] = -(p.gamma - 1j * d)
    rhs = np.zeros((d.size, 3, 2), dtype=complex)
    rhs[:, 0, 0] = -0.5j
    rhs[:, 1, 1] = -0.5j
    try:
        c = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"coherence system is singular: {exc}") from None
    if not np.all(np.isfinite(c)):
        raise SingularSystemError("coherence system produced non-finite values")
    return c.reshape(shape + (3, 2))


def propagation_matrix(p: MediumParams, delta) -> np.ndarray:
    """z-independent matrix ``A`` (..., 2, 2) with dOmega/dz = A Omega, z in [0, 1].

    Expressed in the signal co-moving frame; see the module docstring.
    """
    c = coherence_response(p, delta)
    a = 0.5j * p.alpha * c[..., :2, :]
    a[..., 1, 1] += 1j * p.delta_k_L
    return a


def _lab_frame(p: MediumParams, m: np.ndarray) -> np.ndarray:
    if p.delta_k_L:
        m = m.copy()
        m[..., 1, :] *= np.exp(-1j * p.delta_k_L)
    return m


def transfer_matrices(p: MediumParams, deltas) -> np.ndarray:
    """Batched transfer matrices, shape (len(deltas), 2, 2)."""
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if p.alpha == 0:
        return np.broadcast_to(np.eye(2, dtype=complex), deltas.shape + (2, 2)).copy()
    m = _lab_frame(p, expm(propagation_matrix(p, deltas)))
    if not np.all(np.isfinite(m)):
        raise FbsError("transfer matrix has non-finite entries")
    return m


def transfer_matrix(p: MediumParams, delta: float = 0.0) -> TransferMatrix:
    """Transfer matrix of the medium at two-photon detuning ``delta`` (rad/s)."""
    if p.alpha == 0:
        return TransferMatrix(np.eye(2), delta)
    return TransferMatrix(transfer_matrices(p, [delta])[0], delta)


def transfer_matrix_rk4(p: MediumParams, delta: float = 0.0, steps: int = 10_000) -> TransferMatrix:
    """Oracle for :func:`transfer_matrix`: RK4 integration of the lab-frame field equations.

    Coherences are obtained by eliminating rho21 by hand rather than by a
    linear solve, and the phase mismatch is kept as explicit z-dependent
    phases on the cross couplings instead of a frame change.
    """
    _check_controls(p)
    d = delta / p.Gamma
    Dl = p.Delta / p.Gamma
    oc, od = p.omega_c, p.omega_d
    g = p.gamma - 1j * d
    a3 = 0.5 - 1j * d
    a4 = 0.5 - 1j * (d + Dl)
    # rho21 = (i/2)(oc* rho31 + od* rho41) / g, substituted into the optical rows
    k = 0.25 / g
    m2 = np.array([[a3 + k * abs(oc) ** 2, k * oc * np.conj(od)],
                   [k * od * np.conj(oc), a4 + k * abs(od) ** 2]])
    det = m2[0, 0] * m2[1, 1] - m2[0, 1] * m2[1, 0]
    if det == 0 or not np.isfinite(det):
        raise SingularSystemError("coherence system is singular")
    inv = np.array([[m2[1, 1], -m2[0, 1]], [-m2[1, 0], m2[0, 0]]]) / det
    chi = 0.5j * inv  # rho_opt = chi @ Omega
    gain = 0.5j * p.alpha
    dk = p.delta_k_L

    def rhs(z, y):
        ph = np.exp(1j * dk * z)
        out = np.empty_like(y)
        out[0] = gain * (chi[0, 0] * y[0] + chi[0, 1] * ph * y[1])
        out[1] = gain * (chi[1, 0] * y[0] / ph + chi[1, 1] * y[1])
        return out

    y = np.eye(2, dtype=complex)
    h = 1.0 / steps
    z = 0.0
    for _ in range(steps):
        k1 = rhs(z, y)
        k2 = rhs(z + h / 2, y + h / 2 * k1)
        k3 = rhs(z + h / 2, y + h / 2 * k2)
        k4 = rhs(z + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        z += h
    return TransferMatrix(y, delta)


def _wrap(phase: float) -> float:
    """Wrap to (-pi, pi]."""
    w = float(np.angle(np.exp(1j * phase)))
    return np.pi if w == -np.pi else w


def extract_bs_coefficients(tm: TransferMatrix | np.ndarray) -> BsCoefficients:
    """Moduli and relative phases of a transfer matrix.

    Zero entries give zero modulus and zero phase, and the result is then
    flagged ``degenerate``.
    """
    m = tm.m if isinstance(tm, TransferMatrix) else np.asarray(tm, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise FbsError("transfer matrix has non-finite entries")
    t1, r1, t2, r2 = abs(m[0, 0]), abs(m[1, 0]), abs(m[1, 1]), abs(m[0, 1])
    degenerate = min(t1, r1, t2, r2) == 0
    phi1 = _wrap(np.angle(m[1, 0]) - np.angle(m[0, 0])) if t1 and r1 else 0.0
    phi2 = _wrap(np.angle(m[0, 1]) - np.angle(m[1, 1])) if t2 and r2 else 0.0
    return BsCoefficients(t1, r1, t2, r2, phi1, phi2, degenerate)


def propagate_pulse(p: MediumParams, pulse: PulseEnvelope, port="probe",
                    delta: float = 0.0) -> tuple[PulseEnvelope, PulseEnvelope]:
    """Propagate a weak pulse entering ``port``; returns (probe_out, signal_out).

    Each Fourier component is multiplied by the transfer matrix at its own
    spectral offset.  The control fields are monochromatic, so the offset
    shifts the one- and two-photon detunings of the weak field equally.
    """
    col = port_index(port)
    if pulse.edge_fraction() > WRAP_TOL:
        raise WraparoundError(
            f"input envelope is {pulse.edge_fraction():.2e} of peak at the grid edge")
    n = pulse.t_grid.size
    spec = np.fft.fft(pulse.amplitude)
    # numpy's inverse transform uses exp(+i w t); for a field exp(-i w0 t) a(t)
    # that component sits at optical offset -w
    omega = 2 * np.pi * np.fft.fftfreq(n, pulse.dt)
    m = transfer_matrices(p, delta - omega)
    out = np.fft.ifft(m[:, :, col] * spec[:, None], axis=0)
    probe = PulseEnvelope(pulse.t_grid, out[:, PROBE])
    signal = PulseEnvelope(pulse.t_grid, out[:, SIGNAL])
    peak = pulse.intensity.max()
    for env in (probe, signal):
        edge = max(env.intensity[0], env.intensity[-1])
        if peak and edge > WRAP_TOL * peak:
            raise WraparoundError(
                f"output envelope is {edge / peak:.2e} of input peak at the grid edge")
    return probe, signal


def energy_transmission(inp: PulseEnvelope, out: PulseEnvelope) -> float:
    return out.energy() / inp.energy()


def group_delay(inp: PulseEnvelope, out: PulseEnvelope) -> float:
    """Difference of intensity-weighted centroids, seconds."""
    return out.centroid() - inp.centroid()

"""Gate fidelity and split-ratio scans."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FbsError
from .maxwell_bloch import energy_transmission, propagate_pulse, transfer_matrices
from .physics import BsCoefficients, MediumParams, PulseEnvelope, rad_to_mhz


def ideal_u(delta_phi: float) -> np.ndarray:
    """Ideal 50/50 beam splitter matched to the realised phase difference."""
    return np.array([
        [1.0, np.exp(0.5j * (math.pi - delta_phi))],
        [np.exp(0.5j * (math.pi + delta_phi)), 1.0],
    ]) / math.sqrt(2.0)


def gate_matrix(c: BsCoefficients) -> np.ndarray:
    """The realised (generally non-unitary) gate built from its coefficients."""
    return np.array([
        [c.t1, c.r2 * np.exp(1j * c.phi2)],
        [c.r1 * np.exp(1j * c.phi1), c.t2],
    ])


def mean_amplitudes(c: BsCoefficients) -> tuple[float, float, float]:
    """(t_bar, r_bar, T) with T = t_bar^2 + r_bar^2."""
    t_bar = 0.5 * (c.t1 + c.t2)
    r_bar = 0.5 * (c.r1 + c.r2)
    return t_bar, r_bar, t_bar**2 + r_bar**2


def fidelity_trace(v: np.ndarray, u: np.ndarray, success_prob: float) -> float:
    """|Tr(V^dagger U)|^2 / (4 T)."""
    if success_prob <= 0:
        raise FbsError(f"success probability must be > 0, got {success_prob}")
    tr = np.trace(np.conj(np.asarray(v)).T @ np.asarray(u))
    return float(abs(tr) ** 2 / (4.0 * success_prob))


def fidelity_closed(c: BsCoefficients) -> float:
    """1/2 + (t_bar r_bar / T) sin(phi/2), phi = phi1 + phi2 (not re-wrapped)."""
    t_bar, r_bar, T = mean_amplitudes(c)
    if T <= 0:
        raise FbsError("fidelity undefined: t_bar^2 + r_bar^2 = 0")
    return 0.5 + t_bar * r_bar / T * math.sin(0.5 * c.phi)


def fidelity(c: BsCoefficients) -> float:
    """Fidelity by the trace formula against the phase-matched ideal splitter."""
    return fidelity_trace(gate_matrix(c), ideal_u(c.delta_phi), mean_amplitudes(c)[2])


@dataclass(frozen=True)
class ScanResult:
    axis_name: str
    axis: np.ndarray
    t_probe: np.ndarray
    t_signal: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.t_probe + self.t_signal

    @property
    def split(self) -> np.ndarray:
        tot = self.total
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tot > 0, self.t_signal / np.where(tot > 0, tot, 1.0), 0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["axis_MHz", "t_probe", "t_signal", "total", "split"])
        for row in zip(rad_to_mhz(self.axis), self.t_probe, self.t_signal, self.total, self.split):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _point(args):
    params, axis, value, delta, pulse = args
    if axis == "Delta":
        params = params.with_(Delta=value)
    else:
        delta = value
    if pulse is None:
        m = transfer_matrices(params, [delta])[0]
        return abs(m[0, 0]) ** 2, abs(m[1, 0]) ** 2
    probe, signal = propagate_pulse(params, pulse, "probe", delta=delta)
    return energy_transmission(pulse, probe), energy_transmission(pulse, signal)


def scan(params: MediumParams, axis: str, grid, delta: float = 0.0,
         pulse: PulseEnvelope | None = None, jobs: int = 1) -> ScanResult:
    """Probe-in transmissions over a grid of ``delta`` or ``Delta`` values (rad/s).

    ``delta`` is the fixed two-photon detuning during a ``Delta`` scan.
    With ``pulse`` each point propagates that envelope instead of using the
    cw transfer matrix.
    """
    if axis not in ("delta", "Delta"):
        raise FbsError(f"axis must be 'delta' or 'Delta', got {axis!r}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise FbsError("scan grid must be a non-empty 1-D sequence")
    steps = np.diff(grid)
    if grid.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise FbsError("scan grid must be strictly monotone")

    if pulse is None and axis == "delta":
        m = transfer_matrices(params, grid)
        return ScanResult(axis, grid, np.abs(m[:, 0, 0]) ** 2, np.abs(m[:, 1, 0]) ** 2)

    tasks = [(params, axis, float(v), delta, pulse) for v in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_point(t) for t in tasks]
    rows = np.array(rows)
    return ScanResult(axis, grid, rows[:, 0], rows[:, 1])

"""Hong-Ou-Mandel statistics at the frequency beam splitter.

Input 1 is the 780 nm pulse, input 2 the 795 nm pulse delayed by ``tau``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .errors import FbsError, FitError, InconsistentDataError
from .maxwell_bloch import group_delay, propagate_pulse
from .physics import BsCoefficients, MediumParams, PulseEnvelope


def _interference_weight(c: BsCoefficients) -> float:
    denom = (c.t1**2 + c.r2**2) * (c.t2**2 + c.r1**2)
    if denom <= 0:
        raise FbsError("g2 undefined: (t1^2 + r2^2)(t2^2 + r1^2) = 0")
    return 2.0 * c.t1 * c.t2 * c.r1 * c.r2 / denom


def g2_closed(c: BsCoefficients) -> float:
    """Output cross-correlation for equal, phase-uncorrelated coherent inputs."""
    return 1.0 + _interference_weight(c) * math.cos(c.phi)


@dataclass(frozen=True)
class CosPhiEstimate:
    value: float
    error: float
    clamped: bool = False


def invert_cos_phi(g2_min: float, g2_err: float, t1: float, r1: float,
                   t2: float, r2: float) -> CosPhiEstimate:
    """Recover cos(phi1 + phi2) from a measured g2 minimum.

    A value outside [-1, 1] but within one propagated error is clamped and
    flagged; further out raises :class:`InconsistentDataError`.
    """
    weight = _interference_weight(BsCoefficients(t1, r1, t2, r2))
    if weight == 0:
        raise FbsError("cos(phi) is unobservable when any coefficient is zero")
    value = (g2_min - 1.0) / weight
    error = abs(g2_err) / weight
    if abs(value) > 1.0:
        if abs(value) - 1.0 > error + 1e-12:
            raise InconsistentDataError(
                f"cos(phi) = {value:.4f} +/- {error:.4f} is outside [-1, 1]")
        return CosPhiEstimate(math.copysign(1.0, value), error, clamped=True)
    return CosPhiEstimate(value, error)


def _mc_batch(args):
    v, amplitude, n, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    a1 = np.full(n, amplitude, dtype=complex)
    a2 = amplitude * np.exp(1j * theta)
    n1 = np.abs(v[0, 0] * a1 + v[0, 1] * a2) ** 2
    n2 = np.abs(v[1, 0] * a1 + v[1, 1] * a2) ** 2
    return n1.sum(), n2.sum(), (n1 * n2).sum()


def g2_coherent_mc(c: BsCoefficients, mean_photons: float = 1.0, n_samples: int = 100_000,
                   seed: int = 0, n_batches: int = 100, n_boot: int = 1000,
                   jobs: int = 1) -> tuple[float, float]:
    """Monte Carlo g2 over a uniformly random relative input phase.

    Samples are drawn in ``n_batches`` independent seeded substreams; the
    standard error is a bootstrap over batches.  Returns (g2, stderr).
    """
    from .metrics import gate_matrix

    if n_samples < 10_000:
        raise FbsError(f"n_samples must be >= 1e4, got {n_samples}")
    if mean_photons <= 0:
        raise FbsError("mean_photons must be > 0")
    v = gate_matrix(c)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(n_batches + 1)
    sizes = np.full(n_batches, n_samples // n_batches)
    sizes[: n_samples % n_batches] += 1
    tasks = [(v, math.sqrt(mean_photons), int(sz), s) for sz, s in zip(sizes, streams[:-1])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            sums = np.array(list(pool.map(_mc_batch, tasks)))
    else:
        sums = np.array([_mc_batch(t) for t in tasks])

    def ratio(s, total):
        return (s[..., 2] / total) / ((s[..., 0] / total) * (s[..., 1] / total))

    g2 = float(ratio(sums.sum(axis=0), sizes.sum()))
    rng = np.random.default_rng(streams[-1])
    idx = rng.integers(0, n_batches, size=(n_boot, n_batches))
    boot = ratio(sums[idx].sum(axis=1), sizes[idx].sum(axis=1))
    return g2, float(np.std(boot, ddof=1))


def g2_fock(c: BsCoefficients) -> tuple[float, float]:
    """|1,1> input: (coincidence probability, g2 normalised by mean output numbers)."""
    amp = c.t1 * c.t2 + c.r1 * c.r2 * np.exp(1j * c.phi)
    coincidence = float(abs(amp) ** 2)
    n1 = c.t1**2 + c.r2**2
    n2 = c.t2**2 + c.r1**2
    if n1 * n2 <= 0:
        raise FbsError("g2 undefined: an output port receives no light")
    return coincidence, coincidence / (n1 * n2)


def mode_overlap(env1: PulseEnvelope, env2: PulseEnvelope, tau) -> np.ndarray:
    """|<psi1(t) | psi2(t - tau)>|^2 for unit-norm envelopes, evaluated spectrally."""
    if env1.t_grid.size != env2.t_grid.size or not np.allclose(env1.t_grid, env2.t_grid):
        raise FbsError("envelopes must share a time grid")
    e1, e2 = env1.energy(), env2.energy()
    if e1 <= 0 or e2 <= 0:
        raise FbsError("envelopes must carry non-zero energy")
    n, dt = env1.t_grid.size, env1.dt
    f1 = np.fft.fft(env1.amplitude) / math.sqrt(e1)
    f2 = np.fft.fft(env2.amplitude) / math.sqrt(e2)
    omega = 2 * math.pi * np.fft.fftfreq(n, dt)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    shift = np.exp(-1j * np.outer(tau, omega))
    inner = (shift * (np.conj(f1) * f2)).sum(axis=1) * dt / n
    return np.abs(inner) ** 2


def _dip(tau, depth, center, width):
    return 1.0 - depth * np.exp(-8.0 * (tau - center) ** 2 / width**2)


@dataclass(frozen=True)
class HomScanResult:
    tau: np.ndarray
    g2: np.ndarray
    g2_min: float
    dip_center: float
    dip_e2_width: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tau_us", "g2"])
        for t, g in zip(self.tau, self.g2):
            writer.writerow([repr(float(t * 1e6)), repr(float(g))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "g2_min": self.g2_min,
            "dip_center_us": self.dip_center * 1e6,
            "dip_e2_width_us": self.dip_e2_width * 1e6,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2) + "\n"


def hom_delay_scan(c: BsCoefficients, env1: PulseEnvelope, env2: PulseEnvelope, tau_grid,
                   internal_delay: float = 0.0) -> HomScanResult:
    """g2 versus input delay, with a Gaussian fit of the dip.

    ``internal_delay`` shifts the effective centre of ``env2`` to compensate
    group delays inside the medium, so the dip sits at that delay.
    """
    e1, e2 = env1.energy(), env2.energy()
    if not math.isclose(e1, e2, rel_tol=1e-6):
        raise FbsError(f"envelopes must carry equal photon number ({e1:.6g} vs {e2:.6g})")
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 5:
        raise FbsError("tau_grid needs at least 5 points")
    overlap = mode_overlap(env1, env2, tau - internal_delay)
    weight = g2_closed(c) - 1.0
    g2 = 1.0 + weight * overlap

    if weight >= 0:
        raise FitError("no dip: interference term is not negative")
    if overlap.argmax() in (0, tau.size - 1) or max(overlap[0], overlap[-1]) > 0.5 * overlap.max():
        raise FitError("tau_grid does not cover the dip")
    # fit in units of the grid spacing to keep the problem well scaled
    scale = abs(tau[1] - tau[0])
    x = tau / scale
    i0 = int(np.argmin(g2))
    above = x[overlap > overlap.max() * math.exp(-2.0)]
    guess = (1.0 - g2[i0], x[i0], max(np.ptp(above), 2.0))
    try:
        with warnings.catch_warnings():
            # noiseless curves leave the covariance undefined; only popt is used
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_dip, x, g2, p0=guess, maxfev=10_000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"dip fit failed: {exc}") from None
    depth, center, width = popt[0], popt[1] * scale, abs(popt[2]) * scale
    return HomScanResult(tau, g2, float(1.0 - depth), float(center), float(width))


def internal_hom_delay(p: MediumParams, pulse: PulseEnvelope) -> float:
    """Input delay (795 nm behind 780 nm) that aligns transmitted and reflected paths.

    Averages the matching conditions of both output ports, using group delays
    from the spectral propagator.
    """
    pp, sp = propagate_pulse(p, pulse, "probe")
    ps, ss = propagate_pulse(p, pulse, "signal")
    d_pp, d_sp = group_delay(pulse, pp), group_delay(pulse, sp)
    d_ps, d_ss = group_delay(pulse, ps), group_delay(pulse, ss)
    return 0.5 * ((d_pp - d_ps) + (d_sp - d_ss))

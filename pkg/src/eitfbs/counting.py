"""Photon-counting forward model and the baseline-excluding ratio estimator."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import FbsError, FitError
from .physics import PulseEnvelope, gaussian_pulse

_SQRT_PI_8 = math.sqrt(math.pi / 8.0)


@dataclass(frozen=True)
class DetectionChannel:
    collection_eff: float
    baseline_rate: float = 0.0  # counts/s from control-field leakage and darks

    def __post_init__(self):
        if not 0.0 <= self.collection_eff <= 1.0:
            raise FbsError(f"collection_eff must lie in [0, 1], got {self.collection_eff}")
        if self.baseline_rate < 0:
            raise FbsError(f"baseline_rate must be >= 0, got {self.baseline_rate}")


@dataclass(frozen=True)
class CountHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    n_trials: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or edges.size != counts.size + 1:
            raise FbsError("need len(counts) == len(bin_edges) - 1")
        if np.any(counts < 0):
            raise FbsError("counts must be non-negative")
        widths = np.diff(edges)
        if np.any(widths <= 0) or np.ptp(widths) > 1e-9 * widths.mean():
            raise FbsError("bins must be uniform")
        if self.n_trials < 1:
            raise FbsError("n_trials must be >= 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin_start_us", "counts"])
        for start, n in zip(self.bin_edges[:-1], self.counts):
            writer.writerow([repr(float(start * 1e6)), int(n)])
        return buf.getvalue()


def bin_fractions(envelope: PulseEnvelope, bin_edges: np.ndarray) -> np.ndarray:
    """Fraction of the envelope's |a|^2 falling in each bin.

    Each sample is treated as a uniform slab of width dt centred on it.
    """
    t, dt = envelope.t_grid, envelope.dt
    w = envelope.intensity
    total = w.sum()
    if total == 0:
        return np.zeros(len(bin_edges) - 1)
    cdf = np.concatenate([[0.0], np.cumsum(w) / total])
    knots = np.concatenate([[t[0] - dt / 2], t + dt / 2])
    return np.diff(np.interp(bin_edges, knots, cdf))


def simulate_counts(envelope: PulseEnvelope, photons_per_pulse: float, ch: DetectionChannel,
                    bin_width: float, n_trials: int, seed=None,
                    bin_edges: np.ndarray | None = None) -> CountHistogram:
    """Poisson counts accumulated over ``n_trials`` pulses.

    Bins default to consecutive ``bin_width`` slices starting at the first
    grid sample.
    """
    if bin_width <= 0:
        raise FbsError(f"bin_width must be > 0, got {bin_width}")
    if n_trials < 1:
        raise FbsError(f"n_trials must be >= 1, got {n_trials}")
    if photons_per_pulse < 0:
        raise FbsError("photons_per_pulse must be >= 0")
    if bin_edges is None:
        t = envelope.t_grid
        n_bins = int((t[-1] - t[0]) // bin_width)
        bin_edges = t[0] + bin_width * np.arange(n_bins + 1)
    expected = n_trials * (photons_per_pulse * ch.collection_eff * bin_fractions(envelope, bin_edges)
                           + ch.baseline_rate * bin_width)
    rng = np.random.default_rng(seed)
    return CountHistogram(bin_edges, rng.poisson(expected), n_trials)


def gaussian_baseline(t, amplitude, center, e2_width, baseline):
    return amplitude * np.exp(-8.0 * (t - center) ** 2 / e2_width**2) + baseline


@dataclass(frozen=True)
class GaussianFit:
    amplitude: float
    center: float
    e2_width: float
    baseline: float
    covariance: np.ndarray
    residual: float

    @property
    def params(self) -> np.ndarray:
        return np.array([self.amplitude, self.center, self.e2_width, self.baseline])

    def area(self, bin_width: float) -> tuple[float, float]:
        """Counts under the Gaussian (baseline excluded) and its standard error."""
        k = _SQRT_PI_8 / bin_width
        value = k * self.amplitude * self.e2_width
        grad = np.array([k * self.e2_width, 0.0, k * self.amplitude, 0.0])
        return value, float(math.sqrt(max(grad @ self.covariance @ grad, 0.0)))

    def to_json(self) -> str:
        report = {
            "amplitude": self.amplitude,
            "center_us": self.center * 1e6,
            "e2_width_us": self.e2_width * 1e6,
            "baseline": self.baseline,
            "covariance": self.covariance.tolist(),
            "residual": self.residual,
        }
        return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _jacobian(x, amp, c, w, base):
    g = np.exp(-8.0 * (x - c) ** 2 / w**2)
    return np.column_stack([
        g,
        amp * g * 16.0 * (x - c) / w**2,
        amp * g * 16.0 * (x - c) ** 2 / w**3,
        np.ones_like(x),
    ])


def _poisson_sandwich(x, popt) -> np.ndarray:
    """Covariance of unweighted least squares when bin variances are Poisson.

    (J^T J)^-1 J^T diag(mu) J (J^T J)^-1 with mu the fitted counts.
    """
    jac = _jacobian(x, *popt)
    mu = np.maximum(gaussian_baseline(x, *popt), 1.0)
    try:
        bread = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        raise FitError("singular Jacobian (degenerate data)") from None
    return bread @ (jac.T * mu) @ jac @ bread


def fit_gaussian_baseline(h: CountHistogram, weighted: bool = False,
                          max_evals: int = 5000) -> GaussianFit:
    """Least-squares fit of ``A exp(-8 (t - c)^2 / w^2) + B`` to the bin counts.

    Unweighted by default, with the parameter covariance propagated from
    Poisson bin variances; ``weighted`` instead weights each bin by
    1/max(n, 1).
    """
    y = h.counts.astype(float)
    if y.size < 8:
        raise FitError(f"need at least 8 bins, got {y.size}")
    floor = float(np.median(y))
    if y.max() <= floor + 3.0 * math.sqrt(floor) or y.max() == floor:
        raise FitError("degenerate histogram: no peak above the baseline")

    # work in bin units so all parameters are O(1..1e3)
    bw = h.bin_width
    t0 = h.bin_edges[0]
    x = (h.centers - t0) / bw
    above = y - floor
    weights = np.clip(above, 0.0, None)
    c_guess = float((x * weights).sum() / weights.sum())
    spread = math.sqrt(float(((x - c_guess) ** 2 * weights).sum() / weights.sum()))
    p0 = (above.max(), c_guess, max(4.0 * spread, 1.0), floor)
    sigma = np.sqrt(np.maximum(y, 1.0)) if weighted else None
    try:
        popt, pcov = curve_fit(gaussian_baseline, x, y, p0=p0, sigma=sigma,
                               absolute_sigma=weighted, maxfev=max_evals)
    except RuntimeError as exc:
        resid = float(np.sum((gaussian_baseline(x, *p0) - y) ** 2))
        raise FitError(f"fit did not converge ({exc}); residual at start {resid:.4g}") from None
    if not weighted:
        pcov = _poisson_sandwich(x, popt)
    if not np.all(np.isfinite(pcov)):
        raise FitError("fit covariance is not finite (degenerate data)")
    resid = float(np.sum((gaussian_baseline(x, *popt) - y) ** 2))
    scale = np.array([1.0, bw, bw, 1.0])
    amp, c, w, base = popt
    return GaussianFit(float(amp), float(t0 + c * bw), float(abs(w) * bw), float(base),
                       pcov * np.outer(scale, scale), resid)


@dataclass(frozen=True)
class RatioEstimate:
    value: float
    error: float


def photon_number(h: CountHistogram, fit: GaussianFit, eff: float) -> tuple[float, float]:
    """Photons per pulse in one channel and its standard error."""
    if eff <= 0:
        raise FbsError("collection efficiency must be > 0")
    area, err = fit.area(h.bin_width)
    norm = h.n_trials * eff
    return area / norm, err / norm


def output_input_ratio(h_in: CountHistogram, h_out_list, eff_in: float, eff_out_list,
                       weighted: bool = False) -> RatioEstimate:
    """Total output photon number over input photon number, baseline excluded."""
    h_out_list = list(h_out_list)
    eff_out_list = list(eff_out_list)
    if len(h_out_list) != len(eff_out_list) or not h_out_list:
        raise FbsError("need one efficiency per output histogram")
    n_in, e_in = photon_number(h_in, fit_gaussian_baseline(h_in, weighted), eff_in)
    if n_in <= 0:
        raise FbsError(f"input photon number must be > 0, got {n_in}")
    outs = [photon_number(h, fit_gaussian_baseline(h, weighted), e)
            for h, e in zip(h_out_list, eff_out_list)]
    n_out = sum(n for n, _ in outs)
    var_out = sum(e * e for _, e in outs)
    ratio = n_out / n_in
    err = math.sqrt(var_out / n_in**2 + (ratio * e_in / n_in) ** 2)
    return RatioEstimate(ratio, err)


@dataclass(frozen=True)
class CountingExperiment:
    """Synthetic version of one single-photon counting run.

    ``outputs`` lists (true fraction of input photons, collection efficiency)
    per output channel.
    """

    photons_per_pulse: float
    eff_in: float
    outputs: tuple[tuple[float, float], ...]
    n_trials: int
    bin_width: float
    e2_width: float
    window: float
    baseline_rate: float = 2.0e4

    @property
    def true_ratio(self) -> float:
        return sum(f for f, _ in self.outputs)

    def simulate(self, seed) -> tuple[CountHistogram, list[CountHistogram]]:
        grid = np.arange(2048) * (self.window / 2048)
        env = gaussian_pulse(self.window / 2, self.e2_width, 1.0, grid)
        streams = np.random.SeedSequence(seed).spawn(1 + len(self.outputs))
        h_in = simulate_counts(env, self.photons_per_pulse,
                               DetectionChannel(self.eff_in, self.baseline_rate),
                               self.bin_width, self.n_trials, streams[0])
        outs = [simulate_counts(env, self.photons_per_pulse * frac,
                                DetectionChannel(eff, self.baseline_rate),
                                self.bin_width, self.n_trials, ss)
                for (frac, eff), ss in zip(self.outputs, streams[1:])]
        return h_in, outs

    def estimate(self, seed, weighted: bool = False) -> RatioEstimate:
        h_in, outs = self.simulate(seed)
        return output_input_ratio(h_in, outs, self.eff_in, [e for _, e in self.outputs], weighted)


# frequency converter: 0.68 photons/pulse, 450 ns bins, 24,000 runs
FIG3A = CountingExperiment(0.68, 0.13, ((0.84, 0.12),), 24_000, 450e-9, 3.0e-6, 16e-6)
# 50/50 splitter: 1.0 photon/pulse, 225 ns bins, 32,000 runs
FIG3B = CountingExperiment(1.0, 0.17, ((0.45, 0.17), (0.45, 0.12)), 32_000, 225e-9, 1.7e-6, 12e-6)

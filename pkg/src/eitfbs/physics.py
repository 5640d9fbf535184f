"""Physical parameters, unit conventions and shared value types.

Internal conventions
--------------------
* Rabi frequencies and the ground-state decoherence rate are stored in units
  of the excited-state decay rate ``Gamma``.
* ``Gamma`` and every detuning are stored in rad/s.
* Quantities quoted in MHz are frequency/(2*pi), so ``Delta_MHz = -205``
  means ``Delta = -2*pi*205e6`` rad/s.
* The medium length never appears on its own; it is folded into the optical
  depth ``alpha`` and the accumulated phase mismatch ``delta_k_L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import ConfigError, FbsError, TruncationError

TWO_PI = 2.0 * math.pi
DEFAULT_GAMMA = TWO_PI * 6.0e6

# flat config keys understood by MediumParams.from_config
MEDIUM_KEYS = (
    "alpha",
    "gamma_over_Gamma",
    "Gamma_MHz",
    "omega_c_over_Gamma",
    "omega_d_over_Gamma",
    "Delta_MHz",
    "delta_k_L",
)


def mhz_to_rad(value_mhz: float) -> float:
    return TWO_PI * 1e6 * value_mhz


def rad_to_mhz(value_rad: float | np.ndarray) -> float | np.ndarray:
    return value_rad / (TWO_PI * 1e6)


@dataclass(frozen=True)
class MediumParams:
    """One device configuration of the dual-Lambda medium."""

    alpha: float = 130.0
    gamma: float = 3e-3
    Gamma: float = DEFAULT_GAMMA
    omega_c: float = 3.0
    omega_d: float = 3.0
    Delta: float = mhz_to_rad(-205.0)
    delta_k_L: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "gamma", "Gamma", "omega_c", "omega_d", "Delta", "delta_k_L"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(name, "must be finite")
        if self.alpha < 0:
            raise ConfigError("alpha", f"optical depth must be >= 0, got {self.alpha}")
        if self.gamma < 0:
            raise ConfigError("gamma", f"decoherence rate must be >= 0, got {self.gamma}")
        if self.Gamma <= 0:
            raise ConfigError("Gamma", f"decay rate must be > 0, got {self.Gamma}")
        if self.omega_c < 0 or self.omega_d < 0:
            raise ConfigError("omega_c", "Rabi frequencies must be >= 0")

    @classmethod
    def from_config(cls, cfg: Mapping[str, str | float]) -> "MediumParams":
        """Build from flat config keys; absent keys keep their defaults."""
        kwargs = {}
        converters = {
            "alpha": ("alpha", float),
            "gamma_over_Gamma": ("gamma", float),
            "Gamma_MHz": ("Gamma", lambda v: mhz_to_rad(float(v))),
            "omega_c_over_Gamma": ("omega_c", float),
            "omega_d_over_Gamma": ("omega_d", float),
            "Delta_MHz": ("Delta", lambda v: mhz_to_rad(float(v))),
            "delta_k_L": ("delta_k_L", float),
        }
        for key, (attr, conv) in converters.items():
            if key in cfg:
                try:
                    kwargs[attr] = conv(cfg[key])
                except (TypeError, ValueError):
                    raise ConfigError(key, f"not a number: {cfg[key]!r}") from None
        try:
            return cls(**kwargs)
        except ConfigError as exc:
            # report the config-file spelling of the offending key
            reverse = {attr: key for key, (attr, _) in converters.items()}
            raise ConfigError(reverse.get(exc.key, exc.key), str(exc).split(": ", 1)[1]) from None

    def to_config(self) -> dict[str, float]:
        return {
            "alpha": self.alpha,
            "gamma_over_Gamma": self.gamma,
            "Gamma_MHz": self.Gamma / (TWO_PI * 1e6),
            "omega_c_over_Gamma": self.omega_c,
            "omega_d_over_Gamma": self.omega_d,
            "Delta_MHz": self.Delta / (TWO_PI * 1e6),
            "delta_k_L": self.delta_k_L,
        }

    def with_(self, **changes) -> "MediumParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class BsCoefficients:
    """Moduli and phases of a frequency beam splitter.

    Input 1 is the 780 nm (probe) mode, input 2 the 795 nm (signal) mode.
    ``phi1``/``phi2`` are reflected-minus-transmitted phase differences.
    """

    t1: float
    r1: float
    t2: float
    r2: float
    phi1: float = 0.0
    phi2: float = 0.0
    degenerate: bool = False

    @classmethod
    def from_powers(cls, t1_sq, r1_sq, t2_sq, r2_sq, cos_phi=-1.0) -> "BsCoefficients":
        """Coefficients from measured power ratios and cos(phi1 + phi2).

        The total phase is placed entirely on ``phi1``; only the sum enters
        fidelity and g2.
        """
        phi = math.acos(max(-1.0, min(1.0, cos_phi)))
        return cls(math.sqrt(t1_sq), math.sqrt(r1_sq), math.sqrt(t2_sq), math.sqrt(r2_sq), phi, 0.0)

    @property
    def phi(self) -> float:
        return self.phi1 + self.phi2

    @property
    def delta_phi(self) -> float:
        return self.phi1 - self.phi2

    def is_passive(self, tol: float = 1e-9) -> bool:
        return self.t1**2 + self.r1**2 <= 1 + tol and self.t2**2 + self.r2**2 <= 1 + tol


@dataclass(frozen=True)
class PulseEnvelope:
    """Complex envelope of one frequency mode on a uniform time grid."""

    t_grid: np.ndarray
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        a = np.asarray(self.amplitude, dtype=complex)
        if t.ndim != 1 or t.shape != a.shape:
            raise FbsError("t_grid and amplitude must be 1-D arrays of equal length")
        n = t.size
        if n < 2 or n & (n - 1):
            raise FbsError(f"grid length must be a power of two, got {n}")
        steps = np.diff(t)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
            raise FbsError("time grid must be uniform and increasing")
        t.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "amplitude", a)

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def energy(self) -> float:
        """Integral of |amplitude|^2 over the grid (photon number)."""
        return float(self.intensity.sum() * self.dt)

    def centroid(self) -> float:
        w = self.intensity
        return float((self.t_grid * w).sum() / w.sum())

    def edge_fraction(self) -> float:
        """Largest edge intensity relative to the peak."""
        w = self.intensity
        peak = w.max()
        if peak == 0:
            return 0.0
        return float(max(w[0], w[-1]) / peak)

    def scaled(self, k: complex) -> "PulseEnvelope":
        return PulseEnvelope(self.t_grid, k * self.amplitude)


def time_grid(n: int, span: float, start: float | None = None) -> np.ndarray:
    """Uniform grid of ``n`` samples covering ``span`` seconds, centred on 0 by default."""
    if start is None:
        start = -span / 2
    return start + np.arange(n) * (span / n)


def gaussian_pulse(center: float, e2_full_width: float, photon_number: float,
                   t_grid: np.ndarray) -> PulseEnvelope:
    """Real Gaussian envelope whose intensity has e^-2 full width ``e2_full_width``.

    Intensity is ``A exp(-8 (t - center)^2 / w^2)``, scaled so that the
    discrete integral of |a|^2 equals ``photon_number``.
    """
    if e2_full_width <= 0:
        raise FbsError(f"e2_full_width must be > 0, got {e2_full_width}")
    if photon_number < 0:
        raise FbsError(f"photon_number must be >= 0, got {photon_number}")
    t = np.asarray(t_grid, dtype=float)
    half = 1.5 * e2_full_width
    if t[0] > center - half or t[-1] < center + half:
        raise TruncationError(
            f"grid [{t[0]:.3g}, {t[-1]:.3g}] s does not cover center +/- 1.5 widths "
            f"[{center - half:.3g}, {center + half:.3g}] s")
    shape = np.exp(-4.0 * (t - center) ** 2 / e2_full_width**2)
    dt = t[1] - t[0]
    norm = math.sqrt(photon_number / (np.sum(shape**2) * dt))
    return PulseEnvelope(t, norm * shape)


def split_ratio(c: BsCoefficients, input: int = 1) -> float:
    """Fraction of output photons in the converted mode, r^2 / (t^2 + r^2)."""
    if input == 1:
        t, r = c.t1, c.r1
    elif input == 2:
        t, r = c.t2, c.r2
    else:
        raise FbsError(f"input must be 1 or 2, got {input}")
    total = t * t + r * r
    if total <= 0:
        raise FbsError(f"split ratio undefined for input {input}: zero total output")
    return r * r / total

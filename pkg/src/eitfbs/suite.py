"""Reproduction checks run by ``eitfbs paper-suite`` and the acceptance tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import counting, interference, metrics
from .io import dump_json
from .maxwell_bloch import (
    energy_transmission,
    group_delay,
    propagate_pulse,
    transfer_matrices,
    transfer_matrix,
    transfer_matrix_rk4,
)
from .physics import BsCoefficients, MediumParams, gaussian_pulse, mhz_to_rad, time_grid
from .time_domain import time_domain_oracle

# measured power ratios and phase reported for the Hadamard-gate run
PAPER_COEFFS = BsCoefficients.from_powers(0.46, 0.46, 0.51, 0.39, cos_phi=-0.944)
FIG2_PARAMS = MediumParams(alpha=130.0, gamma=3e-3, omega_c=3.0, omega_d=3.0)
FIG5_PARAMS = MediumParams(alpha=110.0, gamma=3e-3, omega_c=3.0, omega_d=3.0, Delta=mhz_to_rad(-205.0))
FIG2_DELTA_GRID_MHZ = np.linspace(-300.0, -40.0, 201)


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    measured: str
    expected: str
    runtime: float = 0.0
    runtime_limit: float = math.inf

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.criterion:>2} {self.name}: measured {self.measured}; "
                f"expected {self.expected}; {self.runtime:.3f}s (limit {self.runtime_limit:g}s)")


def _timed(fn: Callable[[], Check], limit: float) -> Check:
    t0 = time.perf_counter()
    check = fn()
    check.runtime = time.perf_counter() - t0
    check.runtime_limit = limit
    check.passed = check.passed and check.runtime < limit
    return check


def random_coefficients(rng: np.random.Generator, n: int) -> list[BsCoefficients]:
    """Passive coefficient sets: (t, r) uniform in the unit quarter-disc, phases in (-pi, pi]."""
    sets = []
    while len(sets) < n:
        t1, r1, t2, r2 = rng.uniform(0.0, 1.0, 4)
        if t1**2 + r1**2 > 1 or t2**2 + r2**2 > 1:
            continue
        phi1, phi2 = -rng.uniform(-math.pi, math.pi, 2)
        sets.append(BsCoefficients(t1, r1, t2, r2, phi1, phi2))
    return sets


def check_g2_closed() -> Check:
    reps = 1000
    t0 = time.perf_counter()
    for _ in range(reps):
        g2 = interference.g2_closed(PAPER_COEFFS)
    per_call = (time.perf_counter() - t0) / reps
    ok = abs(g2 - 0.53) <= 0.005 and per_call < 1e-3
    return Check(1, "g2 closed form, paper coefficients", ok, f"{g2:.4f} ({per_call * 1e6:.1f} us/call)",
                 "0.53 +/- 0.005, < 1 ms")


def check_fidelity() -> Check:
    f = metrics.fidelity_closed(PAPER_COEFFS)
    rng = np.random.default_rng(2)
    worst = 0.0
    for c in random_coefficients(rng, 10_000):
        diff = abs(metrics.fidelity_closed(c) - metrics.fidelity(c))
        worst = max(worst, diff)
    ok = abs(f - 0.99) <= 0.005 and worst <= 1e-12
    return Check(2, "fidelity closed form and trace identity", ok,
                 f"F = {f:.4f}, max |closed - trace| = {worst:.2e} over 1e4 sets",
                 "0.99 +/- 0.005, <= 1e-12")


def check_invert_cos_phi() -> Check:
    c = PAPER_COEFFS
    est = interference.invert_cos_phi(0.53, 0.03, c.t1, c.r1, c.t2, c.r2)
    ok = abs(est.value + 0.94) <= 0.005 and abs(est.error - 0.06) <= 0.005 and not est.clamped
    return Check(3, "cos(phi) from g2 minimum", ok, f"{est.value:.4f} +/- {est.error:.4f}",
                 "-0.94 +/- 0.06")


def check_hom_width() -> Check:
    width = 1.7e-6
    grid = time_grid(4096, 20e-6)
    env = gaussian_pulse(0.0, width, 1.0, grid)
    tau = np.linspace(-4e-6, 4e-6, 161)
    res = interference.hom_delay_scan(PAPER_COEFFS, env, env, tau)
    w = res.dip_e2_width
    ok = abs(w - math.sqrt(2) * width) <= 1e-3 * w and abs(w - 2.3e-6) <= 0.10 * 2.3e-6
    return Check(4, "HOM dip e^-2 width", ok,
                 f"{w * 1e6:.4f} us (g2_min {res.g2_min:.4f})", "2.40 us, within 10% of 2.3 us")


def check_ideal_anchors() -> Check:
    ideal = BsCoefficients(1 / math.sqrt(2), 1 / math.sqrt(2), 1 / math.sqrt(2), 1 / math.sqrt(2),
                           math.pi / 2, math.pi / 2)
    g2 = interference.g2_closed(ideal)
    coinc, _ = interference.g2_fock(ideal)
    ok = abs(g2 - 0.5) <= 1e-3 and abs(coinc) <= 1e-12
    return Check(5, "ideal 50/50 anchors", ok, f"coherent g2 = {g2:.6f}, Fock coincidence = {coinc:.1e}",
                 "0.500 +/- 0.001, 0 to 1e-12")


def fig2_delta_scan() -> metrics.ScanResult:
    return metrics.scan(FIG2_PARAMS, "Delta", mhz_to_rad(FIG2_DELTA_GRID_MHZ))


def analyse_fig2(res: metrics.ScanResult) -> dict:
    split = res.split
    total = res.total
    delta_mhz = FIG2_DELTA_GRID_MHZ
    i_hi = int(np.argmax(split))
    crossings = [i for i in range(len(split) - 1)
                 if (split[i] - 0.5) * (split[i + 1] - 0.5) <= 0
                 and 100.0 <= abs(delta_mhz[i]) <= 300.0 and 100.0 <= abs(delta_mhz[i + 1]) <= 300.0]
    r1 = res.t_signal
    extrema = int(np.sum((r1[1:-1] - r1[:-2]) * (r1[2:] - r1[1:-1]) < 0))
    out = {"max_split": float(split[i_hi]), "max_split_Delta_MHz": float(delta_mhz[i_hi]),
           "total_at_max_split": float(total[i_hi]), "n_extrema": extrema, "crossing_Delta_MHz": None,
           "total_at_crossing": None}
    if crossings:
        i = crossings[0]
        frac = (0.5 - split[i]) / (split[i + 1] - split[i])
        out["crossing_Delta_MHz"] = float(delta_mhz[i] + frac * (delta_mhz[i + 1] - delta_mhz[i]))
        out["total_at_crossing"] = float(total[i] + frac * (total[i + 1] - total[i]))
    return out


def check_fig2() -> Check:
    a = analyse_fig2(fig2_delta_scan())
    ok = (a["max_split"] >= 0.9
          and a["crossing_Delta_MHz"] is not None
          and 0.75 <= a["total_at_max_split"] <= 0.95
          and 0.75 <= a["total_at_crossing"] <= 0.95
          and a["n_extrema"] >= 2)
    cross = "none" if a["crossing_Delta_MHz"] is None else (
        f"{a['crossing_Delta_MHz']:.1f} MHz (total {a['total_at_crossing']:.3f})")
    return Check(6, "Delta scan structure (alpha 130)", ok,
                 f"max split {a['max_split']:.3f} at {a['max_split_Delta_MHz']:.1f} MHz "
                 f"(total {a['total_at_max_split']:.3f}); 0.5 crossing {cross}; "
                 f"{a['n_extrema']} extrema in r1^2",
                 "split >= 0.9; crossing in |Delta| 100-300 MHz; totals in [0.75, 0.95]; >= 2 extrema")


def fig5_pulse():
    return gaussian_pulse(0.0, 3.0e-6, 1.0, time_grid(4096, 24e-6))


def check_fig5() -> Check:
    pulse = fig5_pulse()
    probe, signal = propagate_pulse(FIG5_PARAMS, pulse, "probe")
    t_s, t_p = energy_transmission(pulse, signal), energy_transmission(pulse, probe)
    d_s, d_p = group_delay(pulse, signal), group_delay(pulse, probe)
    ok = abs(t_s - 0.46) <= 0.10 and abs(t_p - 0.45) <= 0.10 and 0 < d_s < 1e-6 and 0 < d_p < 1e-6
    return Check(7, "classical 50/50 pulse (alpha 110, -205 MHz)", ok,
                 f"signal {t_s:.3f} (delay {d_s * 1e6:.3f} us), probe {t_p:.3f} (delay {d_p * 1e6:.3f} us)",
                 "0.46 and 0.45 each +/- 0.10; delays in (0, 1) us")


def passivity_points(n: int = 400, seed: int = 8):
    rng = np.random.default_rng(seed)
    return [(MediumParams(alpha=a, gamma=g, Delta=mhz_to_rad(D)), mhz_to_rad(d))
            for a, g, D, d in zip(rng.uniform(0, 200, n), rng.uniform(0, 0.01, n),
                                  rng.uniform(-300, 300, n), rng.uniform(-2, 2, n))]


def check_oracles() -> Check:
    points = [(FIG2_PARAMS.with_(Delta=mhz_to_rad(-140.0)), 0.0),
              (FIG5_PARAMS, mhz_to_rad(0.3)),
              (FIG5_PARAMS.with_(delta_k_L=0.8), mhz_to_rad(-0.5))]
    rk4_err = max(float(np.max(np.abs(transfer_matrix(p, d).m - transfer_matrix_rk4(p, d).m)))
                  for p, d in points)

    pulse = fig5_pulse()
    td_err = 0.0
    for port in ("probe", "signal"):
        spectral = propagate_pulse(FIG5_PARAMS, pulse, port)
        direct = time_domain_oracle(FIG5_PARAMS, pulse, port)
        for s, d in zip(spectral, direct):
            td_err = max(td_err, abs(d.energy() - s.energy()) / s.energy())

    sv = max(float(np.linalg.svd(transfer_matrices(p, [d])[0], compute_uv=False)[0])
             for p, d in passivity_points())
    ok = rk4_err <= 1e-8 and td_err <= 0.01 and sv <= 1 + 1e-6
    return Check(8, "oracle equivalences", ok,
                 f"expm vs RK4 {rk4_err:.1e}; spectral vs time-domain {td_err:.2%}; max sigma {sv:.6f}",
                 "<= 1e-8; <= 1%; <= 1 + 1e-6")


def check_mc(n_sets: int = 100, n_samples: int = 100_000) -> Check:
    rng = np.random.default_rng(9)
    worst = 0.0
    for k, c in enumerate(random_coefficients(rng, n_sets)):
        g2, se = interference.g2_coherent_mc(c, mean_photons=1.0, n_samples=n_samples, seed=k)
        worst = max(worst, abs(g2 - interference.g2_closed(c)) / se)
    return Check(9, "coherent-state Monte Carlo vs closed form", worst <= 3.0,
                 f"max deviation {worst:.2f} SE over {n_sets} sets", "<= 3 SE for every set")


def counting_summary(exp: counting.CountingExperiment, n_seeds: int = 200) -> dict:
    est = [exp.estimate(seed) for seed in range(n_seeds)]
    values = np.array([e.value for e in est])
    errors = np.array([e.error for e in est])
    return {"bias": float(values.mean() - exp.true_ratio), "scatter": float(values.std(ddof=1)),
            "mean_error": float(errors.mean())}


def check_counting() -> Check:
    parts, ok = [], True
    for label, exp in (("3a", counting.FIG3A), ("3b", counting.FIG3B)):
        s = counting_summary(exp)
        ok &= abs(s["bias"]) < 0.01
        ok &= 0.02 <= s["mean_error"] <= 0.08
        ok &= 0.75 <= s["mean_error"] / s["scatter"] <= 1.33
        parts.append(f"{label}: bias {s['bias']:+.4f}, error {s['mean_error']:.3f}, scatter {s['scatter']:.3f}")
    return Check(10, "counting estimator (200 seeds)", ok, "; ".join(parts),
                 "|bias| < 0.01; error in [0.02, 0.08] and within 25% of scatter")


CRITERIA: list[tuple[Callable[[], Check], float]] = [
    (check_g2_closed, 1.0),
    (check_fidelity, 1.0),
    (check_invert_cos_phi, 1.0),
    (check_hom_width, 5.0),
    (check_ideal_anchors, 1.0),
    (check_fig2, 30.0),
    (check_fig5, 10.0),
    (check_oracles, 300.0),
    (check_mc, 60.0),
    (check_counting, 300.0),
]


def run_criterion(index: int) -> Check:
    fn, limit = CRITERIA[index - 1]
    return _timed(fn, limit)


def paper_suite(out: Path | None = None, jobs: int = 1) -> int:
    """Run every check, print one line each, return a process exit status."""
    checks = []
    for i in range(1, len(CRITERIA) + 1):
        try:
            check = run_criterion(i)
        except Exception as exc:  # a crashing scenario is a failed row, not a crashed table
            check = Check(i, CRITERIA[i - 1][0].__name__, False, f"error: {exc}", "no exception")
        checks.append(check)
        print(check.line(), flush=True)
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} criteria passed")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        rows = [{"criterion": c.criterion, "name": c.name, "passed": c.passed, "measured": c.measured,
                 "expected": c.expected, "runtime_s": c.runtime} for c in checks]
        (out / "paper-suite.json").write_text(dump_json(rows), encoding="utf-8", newline="\n")
    return 1 if n_fail else 0

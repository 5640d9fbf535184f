"""Scenario resolution and execution for the batch front-end."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import counting, interference, metrics
from .errors import ConfigError
from .io import dump_json, write_result
from .maxwell_bloch import energy_transmission, group_delay, propagate_pulse
from .physics import (
    MEDIUM_KEYS,
    BsCoefficients,
    MediumParams,
    gaussian_pulse,
    mhz_to_rad,
    split_ratio,
    time_grid,
)
from .time_domain import time_domain_oracle

KINDS = ("scan-delta", "scan-Delta", "propagate", "fidelity", "hom-scan", "count-sim")

REQUIRED = object()

_MEDIUM = {
    "alpha": REQUIRED,
    "gamma_over_Gamma": REQUIRED,
    "Gamma_MHz": 6.0,
    "omega_c_over_Gamma": REQUIRED,
    "omega_d_over_Gamma": REQUIRED,
    "Delta_MHz": REQUIRED,
    "delta_k_L": 0.0,
}
_PULSE = {"pulse_e2_width_us": REQUIRED, "window_us": 0.0, "n_samples": 4096}
_COEFFS = {"t1_sq": REQUIRED, "r1_sq": REQUIRED, "t2_sq": REQUIRED, "r2_sq": REQUIRED,
           "cos_phi": REQUIRED, "delta_phi": 0.0}

SCHEMAS: dict[str, dict[str, object]] = {
    "scan-delta": {**_MEDIUM, "grid_start_MHz": REQUIRED, "grid_stop_MHz": REQUIRED,
                   "grid_points": REQUIRED, "pulse_e2_width_us": 0.0, "window_us": 0.0,
                   "n_samples": 4096},
    "scan-Delta": {**{k: v for k, v in _MEDIUM.items() if k != "Delta_MHz"}, "delta_MHz": 0.0,
                   "grid_start_MHz": REQUIRED, "grid_stop_MHz": REQUIRED, "grid_points": REQUIRED,
                   "pulse_e2_width_us": 0.0, "window_us": 0.0, "n_samples": 4096},
    "propagate": {**_MEDIUM, **_PULSE, "delta_MHz": 0.0, "input_port": "probe",
                  "oracle": 0, "nz": 400},
    "fidelity": {**_COEFFS, "cos_phi": 0.0, "g2_min": 0.0, "g2_err": 0.0},
    "hom-scan": {**_COEFFS, **_PULSE, "tau_start_us": REQUIRED, "tau_stop_us": REQUIRED,
                 "tau_points": REQUIRED, "internal_delay_us": 0.0,
                 # optional medium: when alpha is given the internal delay is predicted
                 **{k: None for k in MEDIUM_KEYS}},
    "count-sim": {**_PULSE, "photons_per_pulse": REQUIRED, "eff_in": REQUIRED,
                  "baseline_rate": 0.0, "bin_width_ns": REQUIRED, "n_trials": REQUIRED,
                  "out_fractions": "", "out_effs": "", "weighted": 0, "seed": 0},
}
_INT_KEYS = {"grid_points", "n_samples", "oracle", "nz", "tau_points", "n_trials", "weighted", "seed"}
_STR_KEYS = {"input_port", "out_fractions", "out_effs"}


@dataclass(frozen=True)
class Scenario:
    kind: str
    options: dict = field(default_factory=dict)

    @property
    def params(self) -> MediumParams | None:
        medium = {k: v for k, v in self.options.items() if k in MEDIUM_KEYS and v is not None}
        if not medium:
            return None
        return MediumParams.from_config(medium)


def resolve(kind: str, cfg: dict[str, str], seed: int | None = None) -> Scenario:
    """Validate a flat config against the scenario schema and fill defaults."""
    if kind not in SCHEMAS:
        raise ConfigError("kind", f"unknown scenario {kind!r}; expected one of {', '.join(KINDS)}")
    declared = cfg.get("kind")
    if declared is not None and declared != kind:
        raise ConfigError("kind", f"config declares {declared!r} but {kind!r} was requested")
    schema = SCHEMAS[kind]
    unknown = sorted(set(cfg) - set(schema) - {"kind"})
    if unknown:
        raise ConfigError(unknown[0], "unknown key for this scenario")
    # fidelity accepts either cos_phi or a measured g2 minimum
    if kind == "fidelity" and "cos_phi" not in cfg and "g2_min" not in cfg:
        raise ConfigError("cos_phi", "missing (or give g2_min)")
    opts: dict[str, object] = {}
    for key, default in schema.items():
        if key in cfg:
            raw = cfg[key]
            try:
                if key in _STR_KEYS:
                    value = str(raw).strip()
                elif key in _INT_KEYS:
                    value = int(raw)
                else:
                    value = float(raw)
            except ValueError:
                raise ConfigError(key, f"not a number: {raw!r}") from None
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(key, "must be finite")
            opts[key] = value
        elif default is REQUIRED:
            raise ConfigError(key, "missing required key")
        else:
            opts[key] = default
    if seed is not None and "seed" in schema:
        opts["seed"] = seed
    scenario = Scenario(kind, opts)
    _validate(scenario)
    return scenario


def _validate(s: Scenario):
    o = s.options
    s.params  # noqa: B018 - MediumParams validation raises ConfigError with the key name
    positive = ["grid_points", "tau_points", "n_samples", "nz", "n_trials", "bin_width_ns"]
    for key in positive:
        if key in o and o[key] <= 0:
            raise ConfigError(key, f"must be > 0, got {o[key]}")
    if "n_samples" in o and (o["n_samples"] & (o["n_samples"] - 1)):
        raise ConfigError("n_samples", "must be a power of two")
    for key in ("t1_sq", "r1_sq", "t2_sq", "r2_sq"):
        if key in o and not 0.0 <= o[key] <= 1.0:
            raise ConfigError(key, f"must lie in [0, 1], got {o[key]}")
    if "cos_phi" in o and not -1.0 <= o["cos_phi"] <= 1.0:
        raise ConfigError("cos_phi", f"must lie in [-1, 1], got {o['cos_phi']}")
    if s.kind == "propagate" and o["input_port"] not in ("probe", "signal"):
        raise ConfigError("input_port", "must be 'probe' or 'signal'")
    if s.kind == "count-sim":
        fr, ef = _floats(o["out_fractions"], "out_fractions"), _floats(o["out_effs"], "out_effs")
        if len(fr) != len(ef):
            raise ConfigError("out_effs", "needs one efficiency per entry of out_fractions")
    if o.get("pulse_e2_width_us", 0.0) < 0:
        raise ConfigError("pulse_e2_width_us", "must be >= 0")


def _floats(text: str, key: str) -> list[float]:
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(key, f"not a comma-separated list of numbers: {text!r}") from None


def _pulse(o: dict, center: float = 0.0):
    width = o["pulse_e2_width_us"] * 1e-6
    window = o["window_us"] * 1e-6 or 8.0 * width
    grid = time_grid(o["n_samples"], window, start=center - window / 2)
    return gaussian_pulse(center, width, 1.0, grid)


def _coefficients(o: dict, cos_phi: float) -> BsCoefficients:
    phi = math.acos(cos_phi)
    dphi = o.get("delta_phi", 0.0)
    return BsCoefficients(math.sqrt(o["t1_sq"]), math.sqrt(o["r1_sq"]), math.sqrt(o["t2_sq"]),
                          math.sqrt(o["r2_sq"]), 0.5 * (phi + dphi), 0.5 * (phi - dphi))


def run(s: Scenario, out_dir: Path, jobs: int = 1) -> list[Path]:
    """Execute a resolved scenario and write its result files."""
    provenance = {"kind": s.kind, "config": s.options, "seed": s.options.get("seed")}
    files = _RUNNERS[s.kind](s, jobs)
    return [write_result(out_dir, name, text, provenance) for name, text in files]


def _run_scan(s: Scenario, jobs: int):
    o = s.options
    axis = "delta" if s.kind == "scan-delta" else "Delta"
    grid = mhz_to_rad(np.linspace(o["grid_start_MHz"], o["grid_stop_MHz"], o["grid_points"]))
    p = s.params
    if axis == "Delta":
        p = p.with_(Delta=float(grid[0]))
    pulse = _pulse(o) if o["pulse_e2_width_us"] > 0 else None
    res = metrics.scan(p, axis, grid, delta=mhz_to_rad(o.get("delta_MHz", 0.0)), pulse=pulse, jobs=jobs)
    return [(f"{s.kind}.csv", res.to_csv())]


def _run_propagate(s: Scenario, jobs: int):
    o = s.options
    p = s.params
    pulse = _pulse(o)
    delta = mhz_to_rad(o["delta_MHz"])
    probe, signal = propagate_pulse(p, pulse, o["input_port"], delta=delta)
    summary = {
        "t_probe": energy_transmission(pulse, probe),
        "t_signal": energy_transmission(pulse, signal),
        "delay_probe_us": group_delay(pulse, probe) * 1e6,
        "delay_signal_us": group_delay(pulse, signal) * 1e6,
    }
    if o["oracle"]:
        probe_td, signal_td = time_domain_oracle(p, pulse, o["input_port"], nz=o["nz"], delta=delta)
        summary["oracle_t_probe"] = energy_transmission(pulse, probe_td)
        summary["oracle_t_signal"] = energy_transmission(pulse, signal_td)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t_us", "in_re", "in_im", "probe_re", "probe_im", "signal_re", "signal_im"])
    for row in zip(pulse.t_grid * 1e6, pulse.amplitude, probe.amplitude, signal.amplitude):
        t, a, b, c = row
        writer.writerow([repr(float(x)) for x in (t, a.real, a.imag, b.real, b.imag, c.real, c.imag)])
    return [("propagate.csv", buf.getvalue()), ("propagate.json", dump_json(summary))]


def _run_fidelity(s: Scenario, jobs: int):
    o = s.options
    report: dict[str, object] = {}
    cos_phi, cos_err = o["cos_phi"], None
    if o["g2_min"] > 0:
        est = interference.invert_cos_phi(o["g2_min"], o["g2_err"], *(
            math.sqrt(o[k]) for k in ("t1_sq", "r1_sq", "t2_sq", "r2_sq")))
        cos_phi, cos_err = est.value, est.error
        report["cos_phi_clamped"] = est.clamped
    c = _coefficients(o, cos_phi)
    report.update({
        "cos_phi": cos_phi,
        "F": metrics.fidelity_closed(c),
        "F_trace": metrics.fidelity(c),
        "g2": interference.g2_closed(c),
        "split_ratio_1": split_ratio(c, 1),
        "split_ratio_2": split_ratio(c, 2),
        "success_probability": metrics.mean_amplitudes(c)[2],
    })
    if cos_err is not None:
        report["cos_phi_err"] = cos_err
        lo = _coefficients(o, max(-1.0, cos_phi - cos_err))
        hi = _coefficients(o, min(1.0, cos_phi + cos_err))
        report["F_err"] = 0.5 * abs(metrics.fidelity_closed(hi) - metrics.fidelity_closed(lo))
    return [("fidelity.json", dump_json(report))]


def _run_hom(s: Scenario, jobs: int):
    o = s.options
    c = _coefficients(o, o["cos_phi"])
    env = _pulse(o)
    tau = np.linspace(o["tau_start_us"], o["tau_stop_us"], o["tau_points"]) * 1e-6
    internal = o["internal_delay_us"] * 1e-6
    if o["alpha"] is not None:
        internal = interference.internal_hom_delay(s.params, env)
    res = interference.hom_delay_scan(c, env, env, tau, internal_delay=internal)
    summary = res.summary()
    summary["internal_delay_us"] = internal * 1e6
    return [("hom-scan.csv", res.to_csv()), ("hom-scan.json", dump_json(summary))]


def _run_counts(s: Scenario, jobs: int):
    o = s.options
    width = o["pulse_e2_width_us"] * 1e-6
    window = o["window_us"] * 1e-6 or 8.0 * width
    env = gaussian_pulse(window / 2, width, 1.0, time_grid(o["n_samples"], window, start=0.0))
    bw = o["bin_width_ns"] * 1e-9
    fractions = _floats(o["out_fractions"], "out_fractions")
    effs = _floats(o["out_effs"], "out_effs")
    streams = np.random.SeedSequence(o["seed"]).spawn(1 + len(fractions))
    h_in = counting.simulate_counts(env, o["photons_per_pulse"],
                                    counting.DetectionChannel(o["eff_in"], o["baseline_rate"]),
                                    bw, o["n_trials"], streams[0])
    hists = [counting.simulate_counts(env, o["photons_per_pulse"] * f,
                                      counting.DetectionChannel(e, o["baseline_rate"]),
                                      bw, o["n_trials"], ss)
             for f, e, ss in zip(fractions, effs, streams[1:])]
    files = [("count-sim_in.csv", h_in.to_csv())]
    files += [(f"count-sim_out{k + 1}.csv", h.to_csv()) for k, h in enumerate(hists)]
    weighted = bool(o["weighted"])
    fits = {"in": _fit_report(h_in, weighted)}
    for k, h in enumerate(hists):
        fits[f"out{k + 1}"] = _fit_report(h, weighted)
    if hists:
        r = counting.output_input_ratio(h_in, hists, o["eff_in"], effs, weighted=weighted)
        fits["ratio"] = {"value": r.value, "error": r.error}
    files.append(("count-sim.json", dump_json(fits)))
    return files


def _fit_report(h, weighted):
    fit = counting.fit_gaussian_baseline(h, weighted)
    area, err = fit.area(h.bin_width)
    return {"amplitude": fit.amplitude, "center_us": fit.center * 1e6,
            "e2_width_us": fit.e2_width * 1e6, "baseline": fit.baseline,
            "area": area, "area_err": err, "covariance": fit.covariance.tolist()}


_RUNNERS = {
    "scan-delta": _run_scan,
    "scan-Delta": _run_scan,
    "propagate": _run_propagate,
    "fidelity": _run_fidelity,
    "hom-scan": _run_hom,
    "count-sim": _run_counts,
}

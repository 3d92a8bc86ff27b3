"""Command-line front end.

    polproj synthesize --state singlet
    polproj tomography simulate --sweep 0.03:0.95:12 --t-v-fixed 0.458 --noise nominal
    polproj tomography ingest --counts probes.csv --t-h 0.8 --t-v 0.458
    polproj hardy analyze --counts table1.csv --gamma 0.645
    polproj hardy simulate --gamma 0.645 --noise-hom-vis 0.9 --seed 1
    polproj hom-scan --state HH --delays=-3:3:61 --overlap-sigma 1

Exit codes: 0 success, 2 invalid parameters or input files, 3 the likelihood
ascent did not converge. Every parameter is checked before any computation,
and output files are written whole or not at all.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import expsim, formats, hardy, optics, tomography
from .states import (
    SINGLET,
    TwoPhotonState,
    concurrence_mixed,
    concurrence_pure,
    operator_fidelity,
    schmidt_decompose,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

FORMATS = {
    "synthesize": ("json", "text"),
    "tomography": ("csv", "json"),
    "hardy": ("json", "text", "csv"),
    "hom-scan": ("csv", "json"),
}

_BELL = {
    "singlet": SINGLET.amplitudes,
    "psi-": SINGLET.amplitudes,
    "psi+": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "phi+": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
}


class CliError(ValueError):
    """Invalid parameters or input; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    mode: str | None = None
    state: str | None = None
    gamma: float | None = None
    t_h: float | None = None
    t_v: float | None = None
    delta: float = 0.0
    t_v_fixed: float | None = None
    sweep: tuple | None = None
    noise: expsim.NoiseModel | None = None
    seed: int = 0
    rate_scale: float | None = None
    duration: float | None = None
    counts: str | None = None
    delays: tuple | None = None
    overlap_sigma: float = 1.0
    out: str | None = None
    format: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data).validated()

    def validated(self) -> RunConfig:
        if self.command not in FORMATS:
            raise CliError(f"unknown command {self.command!r}")
        fmt = self.format or FORMATS[self.command][0]
        if fmt not in FORMATS[self.command]:
            raise CliError(f"--format for {self.command} must be one of {', '.join(FORMATS[self.command])}")
        for name in ("t_h", "t_v", "t_v_fixed"):
            val = getattr(self, name)
            if val is not None and not 0 <= val <= 1:
                raise CliError(f"--{name.replace('_', '-')} must lie in [0, 1], got {val}")
        if self.gamma is not None and not abs(self.gamma) <= 1:
            raise CliError(f"--gamma must lie in [-1, 1], got {self.gamma}")
        if not math.isfinite(self.delta):
            raise CliError("--delta must be finite")
        for name in ("rate_scale", "duration", "overlap_sigma"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val > 0):
                raise CliError(f"--{name.replace('_', '-')} must be positive, got {val}")
        if self.seed < 0:
            raise CliError("--seed must be nonnegative")
        if self.sweep is not None:
            lo, hi, num = self.sweep
            if not (0 <= lo <= 1 and 0 <= hi <= 1 and num >= 1):
                raise CliError("--sweep needs 0 <= start, stop <= 1 and num >= 1")
        if self.delays is not None and self.delays[2] < 1:
            raise CliError("--delays needs num >= 1")
        return replace(self, format=fmt)


# -- argument parsing -----------------------------------------------------------

def parse_grid(text: str, name: str):
    """``start:stop:num`` -> (start, stop, num)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"{name} must look like start:stop:num, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise CliError(f"{name} must look like start:stop:num, got {text!r}") from None


def parse_amplitudes(text: str) -> np.ndarray:
    """Four comma-separated complex numbers, ``i`` or ``j`` as imaginary unit."""
    pieces = text.split(",")
    if len(pieces) != 4:
        raise CliError(f"expected 4 comma-separated amplitudes, got {len(pieces)}")
    amps = []
    offset = 0
    for k, piece in enumerate(pieces):
        token = piece.strip().replace(" ", "").replace("i", "j")
        try:
            amps.append(complex(token))
        except ValueError:
            raise CliError(
                f"amplitude {k + 1} ({piece.strip()!r}, column {offset + 1}) is not a complex number"
            ) from None
        offset += len(piece) + 1
    return np.array(amps)


def parse_state(spec: str, gamma=None) -> TwoPhotonState:
    """Named state, product label, ``psi_tilde``, four amplitudes or ``@file``."""
    if spec.startswith("@"):
        try:
            with open(spec[1:]) as fh:
                text = " ".join(ln.split("#")[0] for ln in fh)
        except OSError as exc:
            raise CliError(f"cannot read state file: {exc}") from None
        return parse_state(text.strip().replace("\n", " "), gamma)
    key = spec.strip().lower()
    if key in _BELL:
        return TwoPhotonState(_BELL[key])
    if key in ("psi_tilde", "psitilde"):
        if gamma is None:
            raise CliError("--state psi_tilde needs --gamma")
        return optics.psi_tilde(gamma)
    if "," not in spec:
        try:
            return TwoPhotonState.from_label(spec.strip().upper())
        except ValueError:
            raise CliError(f"unknown state {spec!r}") from None
    amps = parse_amplitudes(spec)
    try:
        return TwoPhotonState.normalized(amps)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _noise_args(p, default=None):
    p.add_argument("--noise", choices=("ideal", "nominal"), default=default,
                   help="noise preset; individual --noise-* flags override it")
    p.add_argument("--noise-hom-vis", type=float)
    p.add_argument("--noise-vppbs-vis", type=float)
    p.add_argument("--dark-rate", type=float)


def _output_args(p):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polproj", description="Tunable entangling projector toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="recipe measuring a given two-photon state")
    p.add_argument("--state", required=True,
                   help="singlet, psi+, phi+, phi-, psi_tilde, a label like HV, 4 amplitudes, or @file")
    p.add_argument("--gamma", type=float, help="gamma for --state psi_tilde")
    _output_args(p)

    p = sub.add_parser("tomography", help="detector tomography of the projector")
    p.add_argument("mode", choices=("simulate", "ingest"))
    p.add_argument("--sweep", help="T_H grid start:stop:num")
    p.add_argument("--t-v-fixed", type=float, help="T_V held fixed during --sweep")
    p.add_argument("--t-h", type=float, help="T_H (transmission probability)")
    p.add_argument("--t-v", type=float, help="T_V (transmission probability)")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--counts", help="count file to ingest")
    p.add_argument("--rate-scale", type=float, help="counts per unit probability")
    p.add_argument("--duration", type=float)
    p.add_argument("--seed", type=int, default=0)
    _noise_args(p)
    _output_args(p)

    p = sub.add_parser("hardy", help="Hardy test analysis or simulation")
    p.add_argument("mode", choices=("analyze", "simulate"))
    p.add_argument("--gamma", type=float, default=0.645)
    p.add_argument("--counts", help="six-row Hardy count file (analyze)")
    p.add_argument("--rate-scale", type=float, help="coincidences/s per unit probability")
    p.add_argument("--duration", type=float)
    p.add_argument("--seed", type=int, default=0)
    _noise_args(p)
    _output_args(p)

    p = sub.add_parser("hom-scan", help="coincidences versus relative photon delay")
    p.add_argument("--state", default="HH")
    p.add_argument("--gamma", type=float, help="gamma for --state psi_tilde")
    p.add_argument("--t-h", type=float, default=1.0, help="T_H (transmission probability)")
    p.add_argument("--t-v", type=float, default=1.0, help="T_V (transmission probability)")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--delays", default="-5:5:101", help="delay grid start:stop:num; write --delays=-5:5:101 for a negative start")
    p.add_argument("--overlap-sigma", type=float, default=1.0)
    p.add_argument("--rate-scale", type=float, help="simulate Poisson counts at this rate per unit probability")
    p.add_argument("--duration", type=float)
    p.add_argument("--seed", type=int, default=0)
    _noise_args(p)
    _output_args(p)
    return parser


def _noise_from_args(args):
    preset = getattr(args, "noise", None)
    overrides = {
        "hom_visibility": getattr(args, "noise_hom_vis", None),
        "vppbs_visibility": getattr(args, "noise_vppbs_vis", None),
        "dark_rate": getattr(args, "dark_rate", None),
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if preset is None and not overrides:
        return None
    base = expsim.NoiseModel.nominal() if preset == "nominal" else expsim.IDEAL
    try:
        return replace(base, **overrides)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def config_from_args(args) -> RunConfig:
    data = {"command": args.command}
    for name in ("mode", "state", "gamma", "t_h", "t_v", "delta", "t_v_fixed", "seed",
                 "rate_scale", "duration", "counts", "overlap_sigma", "out", "format"):
        if getattr(args, name, None) is not None:
            data[name] = getattr(args, name)
    if getattr(args, "sweep", None):
        data["sweep"] = parse_grid(args.sweep, "--sweep")
    if getattr(args, "delays", None):
        data["delays"] = parse_grid(args.delays, "--delays")
    data["noise"] = _noise_from_args(args)
    return RunConfig.from_dict(data)


# -- commands -------------------------------------------------------------------

def _deg(x):
    return float(np.degrees(x))


def _plate_report(p: optics.PlateSettings):
    return {
        "qwp_rad": p.qwp, "qwp_deg": _deg(p.qwp),
        "hwp_rad": p.hwp, "hwp_deg": _deg(p.hwp),
        "residual_phase_rad": p.residual_phase, "residual_phase_deg": _deg(p.residual_phase),
        "residual_axis_rad": p.residual_axis, "residual_axis_deg": _deg(p.residual_axis),
        "needs_phase_plate": p.needs_phase_plate,
    }


def cmd_synthesize(cfg: RunConfig):
    target = parse_state(cfg.state, cfg.gamma)
    recipe = optics.synthesize_projector(target)
    sf = schmidt_decompose(target)
    real = optics.plate_realization(recipe)
    fid = operator_fidelity(recipe.measurement_operator(), target.projector())
    report = {
        "target": list(target.amplitudes),
        "schmidt": {"lambda1": sf.lambda1, "lambda2": sf.lambda2},
        "concurrence": concurrence_pure(target),
        "ua": recipe.ua,
        "ub": recipe.ub,
        "t_h": recipe.vppbs.t_h,
        "t_v": recipe.vppbs.t_v,
        "delta": recipe.vppbs.delta,
        "gamma": recipe.gamma,
        "eta": recipe.eta,
        "verification_fidelity": fid,
        "plates": {
            "a": _plate_report(real.plates_a),
            "b": _plate_report(real.plates_b),
            # Two plates per arm suffice if the VPPBS phase takes the residual phases.
            "delta_without_phase_plates": real.vppbs.delta,
            "verification_fidelity": operator_fidelity(real.measurement_operator(), target.projector()),
        },
    }
    if cfg.format == "text":
        return _synth_text(report)
    return formats.format_report(report)


def _synth_text(r):
    def mat(m):
        return "\n".join("    [" + ", ".join(formats.format_complex(z) for z in row) + "]" for row in m)

    lines = [
        f"gamma = {r['gamma']:.10g}",
        f"eta   = {r['eta']:.10g}",
        f"t_H = {r['t_h']:.10g}, t_V = {r['t_v']:.10g}, delta = {r['delta']:.10g} rad",
        f"concurrence = {r['concurrence']:.10g}",
        "U_a =", mat(r["ua"]),
        "U_b =", mat(r["ub"]),
    ]
    for arm in ("a", "b"):
        p = r["plates"][arm]
        line = (f"arm {arm}: QWP {p['qwp_deg']:.4f} deg ({p['qwp_rad']:.6f} rad), "
                f"HWP {p['hwp_deg']:.4f} deg ({p['hwp_rad']:.6f} rad)")
        if p["needs_phase_plate"]:
            line += f", then phase plate {p['residual_phase_deg']:.4f} deg on V"
        lines.append(line)
    lines.append(f"plates only: set delta = {r['plates']['delta_without_phase_plates']:.10g} rad")
    lines.append(f"verification fidelity = {r['verification_fidelity']:.15f}")
    return "\n".join(lines) + "\n"


def _settings(cfg, t_h, t_v):
    try:
        return optics.VppbsSettings.from_transmissions(t_h, t_v, cfg.delta)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _sweep_table(points):
    return {
        "T_H": [p.T_h for p in points],
        "T_V": [p.T_v for p in points],
        "gamma": [p.gamma for p in points],
        "HV_HV": [p.hv_hv for p in points],
        "VH_VH": [p.vh_vh for p in points],
        "HV_VH": [p.hv_vh for p in points],
        "theory_HV_HV": [p.theory(p.gamma)[0] for p in points],
        "theory_VH_VH": [p.theory(p.gamma)[1] for p in points],
        "theory_HV_VH": [p.theory(p.gamma)[2] for p in points],
        "max_unplotted": [p.max_unplotted for p in points],
        "fidelity": [p.fidelity for p in points],
        "concurrence": [p.concurrence for p in points],
        "converged": [p.converged for p in points],
    }


def cmd_tomography(cfg: RunConfig):
    probes = tomography.probe_states()
    rate = cfg.rate_scale or tomography.SWEEP_RATE_SCALE
    duration = cfg.duration or 1.0
    if cfg.mode == "simulate":
        if cfg.sweep is not None:
            if cfg.t_v_fixed is None:
                raise CliError("--sweep needs --t-v-fixed")
            grid = np.linspace(*cfg.sweep)
            noise = cfg.noise
            if noise is not None:
                try:
                    for t in grid:
                        noise.check_settings(_settings(cfg, t, cfg.t_v_fixed))
                except ValueError as exc:
                    raise CliError(str(exc)) from None
            points = tomography.sweep_reconstruction(grid, cfg.t_v_fixed, noise=noise, seed=cfg.seed,
                                                     rate_scale=rate, duration=duration)
            table = _sweep_table(points)
            ok = all(p.converged for p in points)
            if cfg.format == "json":
                out = formats.format_report({"points": table, "mean_fidelity": float(np.mean(table["fidelity"])),
                                             "concurrence_range": [min(table["concurrence"]), max(table["concurrence"])]})
            else:
                out = formats.format_table(table)
            return out, ok
        if cfg.t_h is None or cfg.t_v is None:
            raise CliError("tomography simulate needs --sweep with --t-v-fixed, or --t-h and --t-v")
        settings = _settings(cfg, cfg.t_h, cfg.t_v)
        _, psi, ideal = optics.compose_projector(settings)
        if cfg.noise is None:
            records = tomography.expected_counts(ideal, probes, rate, duration)
            bg = None
        else:
            try:
                device = expsim.noisy_povm(settings, cfg.noise)
            except ValueError as exc:
                raise CliError(str(exc)) from None
            means = expsim.count_means(tomography.predicted_probabilities(device, probes), rate, duration, cfg.noise)
            counts = np.random.default_rng(cfg.seed).poisson(means)
            records = [tomography.CountRecord(lb, int(n), duration, rate) for lb, n in zip(probes.labels, counts)]
            bg = cfg.noise.dark_rate * duration
        return _reconstruction_output(cfg, records, probes, psi, bg)

    if cfg.counts is None:
        raise CliError("tomography ingest needs --counts")
    records = _read_counts(cfg.counts, tomography.PROBE_LABELS)
    psi = None
    if cfg.t_h is not None and cfg.t_v is not None:
        psi = optics.compose_projector(_settings(cfg, cfg.t_h, cfg.t_v))[1]
    bg = cfg.noise.dark_rate * records[0].duration if cfg.noise is not None else None
    return _reconstruction_output(cfg, records, probes, psi, bg)


def _read_counts(path, labels):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read counts file: {exc}") from None
    try:
        return formats.parse_counts(text, labels)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _reconstruction_output(cfg, records, probes, psi, background):
    res = tomography.reconstruct(records, probes, background=background)
    op = res.operator
    tr = float(np.trace(op).real)
    report = {
        "operator": op,
        "trace": tr,
        "log_likelihood": res.log_likelihood,
        "iterations": res.iterations,
        "converged": res.converged,
        "warning": res.warning,
    }
    if tr > 0:
        norm = op / tr
        report["normalized"] = {"HV_HV": norm[1, 1].real, "VH_VH": norm[2, 2].real, "HV_VH": norm[1, 2]}
        report["concurrence"] = concurrence_mixed(norm)
        if psi is not None:
            report["fidelity"] = operator_fidelity(norm, psi.projector())
    if cfg.format == "csv":
        keys = ["trace", "converged", "concurrence", "fidelity"]
        cols = {k: [report[k]] for k in keys if k in report}
        cols.update({k: [v] for k, v in report.get("normalized", {}).items()})
        return formats.format_table(cols), res.converged
    return formats.format_report(report), res.converged


def _hardy_report(gamma, counts, noise):
    ang = hardy.hardy_angles(gamma)
    eta = optics.optimal_efficiency(gamma)
    lhs, sigma, multiple = hardy.hardy_inequality(counts)
    raw = hardy.conditional_inference(counts)
    report = {
        "gamma": gamma,
        "eta": eta,
        "angles": {
            name: {"rad": getattr(ang, name), "deg": _deg(getattr(ang, name))}
            for name in ("alpha", "beta", "alpha_perp", "beta_perp")
        },
        "ideal_probabilities": hardy.hardy_probabilities(gamma, eta),
        "counts": dict(counts.counts),
        "duration_s": counts.duration,
        "inequality": {"lhs": lhs, "sigma": sigma, "std_devs": multiple},
        "inference_raw": _inference_dict(raw),
    }
    if noise is not None:
        report["noise"] = {"hom_visibility": noise.hom_visibility, "dark_rate": noise.dark_rate}
    return report


def _inference_dict(inf: hardy.ConditionalInference):
    return {
        "p1": inf.p1.value, "p1_sigma": inf.p1.sigma,
        "p2": inf.p2.value, "p2_sigma": inf.p2.sigma,
        "expected": inf.expected.value, "expected_sigma": inf.expected.sigma,
        "observed": inf.observed,
        "discrepancy_sigmas": inf.discrepancy_sigmas,
    }


def cmd_hardy(cfg: RunConfig):
    if not abs(cfg.gamma) < 1:
        raise CliError("Hardy angles need |gamma| < 1")
    if cfg.mode == "analyze":
        if cfg.counts is None:
            raise CliError("hardy analyze needs --counts")
        records = _read_counts(cfg.counts, hardy.HARDY_LABELS)
        try:
            counts = formats.records_to_hardy(records)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        report = _hardy_report(cfg.gamma, counts, None)
        # Quoted p1 with +/- 0.03 on both ratios; raw-count p1 differs (0.805 for the reference counts).
        report["inference_quoted"] = _inference_dict(hardy.quoted_inference(counts))
    else:
        noise = cfg.noise or expsim.IDEAL
        duration = cfg.duration or hardy.TABLE_I_DURATION
        rate = cfg.rate_scale or tomography.SWEEP_RATE_SCALE / hardy.TABLE_I_DURATION
        counts = expsim.simulate_hardy_run(cfg.gamma, noise, rate, duration, cfg.seed)
        report = _hardy_report(cfg.gamma, counts, noise)
        report["expected_counts"] = expsim.hardy_expected_counts(cfg.gamma, noise, rate, duration)
        report["rate_scale"] = rate
        if cfg.format == "csv":
            return formats.format_counts(formats.hardy_to_records(counts, rate * duration))
    if cfg.format == "text":
        return _hardy_text(report)
    if cfg.format == "csv":
        raise CliError("--format csv is only available for hardy simulate (count file output)")
    return formats.format_report(report)


def _hardy_text(r):
    lines = [f"gamma = {r['gamma']:.6g}, eta = {r['eta']:.6g}"]
    for name, a in r["angles"].items():
        lines.append(f"  {name:<10} = {a['deg']:9.4f} deg ({a['rad']:.6f} rad)")
    lines.append("label                    counts   ideal P")
    for lb in hardy.HARDY_LABELS:
        lines.append(f"  {lb:<22} {r['counts'][lb]:>7}   {r['ideal_probabilities'][lb]:.6g}")
    ineq = r["inequality"]
    lines.append(f"N4 - N1 - N2 - N3 = {ineq['lhs']:.0f} +/- {ineq['sigma']:.1f} ({ineq['std_devs']:.2f} sigma)")
    for key in ("inference_raw", "inference_quoted"):
        if key not in r:
            continue
        inf = r[key]
        lines.append(
            f"{key}: p1 = {inf['p1']:.4f} +/- {inf['p1_sigma']:.4f}, p2 = {inf['p2']:.4f} +/- {inf['p2_sigma']:.4f}, "
            f"expected {inf['expected']:.0f} +/- {inf['expected_sigma']:.0f} vs observed {inf['observed']} "
            f"({inf['discrepancy_sigmas']:.2f} sigma)"
        )
    return "\n".join(lines) + "\n"


def cmd_hom_scan(cfg: RunConfig):
    state = parse_state(cfg.state or "HH", cfg.gamma)
    settings = _settings(cfg, cfg.t_h if cfg.t_h is not None else 1.0, cfg.t_v if cfg.t_v is not None else 1.0)
    noise = cfg.noise or expsim.IDEAL
    delays = np.linspace(*(cfg.delays or (-5.0, 5.0, 101)))
    scan = expsim.coincidence_vs_delay(state, settings, expsim.DelayScan(delays, cfg.overlap_sigma), noise)
    table = {"delay": list(scan.delays), "probability": list(scan.probabilities)}
    if cfg.rate_scale is not None:
        duration = cfg.duration or 1.0
        means = expsim.count_means(scan.probabilities, cfg.rate_scale * duration, duration, noise)
        table["counts"] = [int(n) for n in np.random.default_rng(cfg.seed).poisson(means)]
    if cfg.format == "json":
        return formats.format_report(table)
    return formats.format_table(table)


COMMANDS = {
    "synthesize": cmd_synthesize,
    "tomography": cmd_tomography,
    "hardy": cmd_hardy,
    "hom-scan": cmd_hom_scan,
}


def run(cfg: RunConfig):
    """Execute a validated config; returns (output text, converged flag)."""
    result = COMMANDS[cfg.command](cfg)
    if isinstance(result, tuple):
        return result
    return result, True


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        text, ok = run(cfg)
    except ValueError as exc:  # CliError included
        print(f"polproj: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if cfg.out:
        formats.write_text(cfg.out, text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("polproj: likelihood ascent did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

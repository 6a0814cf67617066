"""Command line front end: runs, sweeps, angle scans and validation.

Configuration comes from an optional JSON file plus command line flags;
flags win. All randomness is seeded, and CSV output is formatted with 17
significant digits so identical configurations produce identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys

import numpy as np

from . import coherent, detection, fock, gaussian
from .policy import DEFAULT_POLICY, BellSimError, ConfigError, NumericalPolicy

_PI_FRACTION = re.compile(
    r"^\s*(-)?\s*(?:(\d+(?:\.\d+)?)\s*\*?\s*)?pi\s*(?:/\s*(\d+(?:\.\d+)?))?\s*$",
    re.IGNORECASE,
)

_STATE_KEYS = {
    "two_photon": {"kind"},
    "vacuum": {"kind"},
    "coherent": {"kind", "z"},
    "mixture": {"kind", "weights", "components"},
    "squeezed_thermal": {"kind", "u", "v", "kappa"},
    "file": {"kind", "path"},
}
_POLICY_KEYS = {f.name for f in dataclasses.fields(NumericalPolicy)}
_SWEEP_KEYS = {"u_start", "u_stop", "u_step", "scenarios", "kappas"}
_CONFIG_KEYS = {
    "engine",
    "state",
    "angles",
    "cutoff",
    "seed",
    "out",
    "grid",
    "refine",
    "trials",
    "policy",
    "sweep",
}

DEFAULT_SWEEP = {
    "u_start": 0.0,
    "u_stop": 1.2,
    "u_step": 0.02,
    "scenarios": list(gaussian.SWEEP_SCENARIOS),
    "kappas": [1.0, 0.9, 0.8],
}
DEFAULT_ANGLES = ("pi/8", "pi/4", "3pi/8", "0")

CSV_FIELDS = ("u", "v", "kappa", "f", "neg_p_both", "violated")


def parse_angle(value):
    """Parse an angle given in radians or as a pi fraction like '3pi/8'."""
    if isinstance(value, (int, float)):
        return float(value)
    match = _PI_FRACTION.match(value)
    if match:
        sign = -1.0 if match.group(1) else 1.0
        factor = float(match.group(2)) if match.group(2) else 1.0
        divisor = float(match.group(3)) if match.group(3) else 1.0
        if divisor == 0.0:
            raise ConfigError(f"zero divisor in angle {value!r}")
        return sign * factor * math.pi / divisor
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"cannot parse angle {value!r}") from None


def _parse_angle_list(values):
    if isinstance(values, str):
        values = [part.strip() for part in values.split(",")]
    values = list(values)
    if len(values) != 4:
        raise ConfigError(f"expected 4 angles, got {len(values)}")
    return detection.AngleSettings(*(parse_angle(v) for v in values))


def _check_keys(mapping, allowed, context):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown {context} field(s): {', '.join(unknown)}")


def _complex_entry(value, context):
    """Read one amplitude given as a number or a [re, im] pair."""
    if isinstance(value, (int, float)):
        return complex(value, 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{context}: expected a number or [re, im] pair, got {value!r}")


@dataclasses.dataclass
class ExperimentConfig:
    """Validated, merged settings for one CLI invocation."""

    engine: str | None = None
    state: dict | None = None
    angles: detection.AngleSettings | None = None
    cutoff: int = 16
    seed: int = 0
    out: str | None = None
    grid: int = 16
    refine: bool = False
    trials: int = 200
    policy: NumericalPolicy = DEFAULT_POLICY
    sweep: dict = dataclasses.field(default_factory=lambda: dict(DEFAULT_SWEEP))

    @classmethod
    def load(cls, args):
        raw = {}
        if args.config:
            with open(args.config, encoding="utf-8") as handle:
                raw = json.load(handle)
            if not isinstance(raw, dict):
                raise ConfigError("config file must hold a JSON object")
        _check_keys(raw, _CONFIG_KEYS, "config")

        merged = dict(raw)
        for name in ("engine", "cutoff", "seed", "out", "grid", "trials"):
            value = getattr(args, name, None)
            if value is not None:
                merged[name] = value
        if getattr(args, "refine", False):
            merged["refine"] = True
        if getattr(args, "state", None) is not None:
            merged["state"] = args.state
        if getattr(args, "angles", None) is not None:
            merged["angles"] = args.angles
        for name in ("u_start", "u_stop", "u_step"):
            value = getattr(args, name, None)
            if value is not None:
                merged.setdefault("sweep", {})
                merged["sweep"] = dict(merged["sweep"], **{name: value})

        config = cls()
        if "engine" in merged:
            engine = merged["engine"]
            if engine not in ("fock", "gaussian", "both"):
                raise ConfigError(f"unknown engine {engine!r}")
            config.engine = engine
        if "state" in merged:
            config.state = _normalize_state(merged["state"])
        if "angles" in merged and merged["angles"] is not None:
            config.angles = _parse_angle_list(merged["angles"])
        for name in ("cutoff", "seed", "grid", "trials"):
            if name in merged:
                setattr(config, name, int(merged[name]))
        if config.cutoff < 1:
            raise ConfigError("cutoff must be at least 1")
        if config.trials < 0:
            raise ConfigError("trials must not be negative")
        if "out" in merged:
            config.out = merged["out"]
        if "refine" in merged:
            config.refine = bool(merged["refine"])
        if "policy" in merged:
            _check_keys(merged["policy"], _POLICY_KEYS, "policy")
            config.policy = dataclasses.replace(DEFAULT_POLICY, **merged["policy"])
        if "sweep" in merged:
            _check_keys(merged["sweep"], _SWEEP_KEYS, "sweep")
            config.sweep = dict(DEFAULT_SWEEP, **merged["sweep"])
            for scenario in config.sweep["scenarios"]:
                gaussian.scenario_v(scenario, 0.0)
        return config


def _normalize_state(spec):
    """Accept a state as a dict, a JSON string, or a bare kind name."""
    if isinstance(spec, str):
        text = spec.strip()
        spec = json.loads(text) if text.startswith("{") else {"kind": text}
    if not isinstance(spec, dict):
        raise ConfigError(f"state must be a name or an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind not in _STATE_KEYS:
        known = ", ".join(sorted(_STATE_KEYS))
        raise ConfigError(f"unknown state kind {kind!r} (expected one of: {known})")
    _check_keys(spec, _STATE_KEYS[kind], f"state[{kind}]")
    return spec


def _load_state_file(path, policy):
    """Read a pure four-mode state from its JSON description.

    Schema: {"mode_count": 4, "cutoff": N, "amplitudes": [{"occupation":
    [n1, n2, n3, n4], "re": x, "im": y}, ...]}. The vector is normalized
    on load.
    """
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    _check_keys(data, {"mode_count", "cutoff", "amplitudes"}, "state file")
    if data.get("mode_count", 4) != 4:
        raise ConfigError("state files must describe a four-mode state")
    cutoff = int(data["cutoff"])
    basis = fock.enumerate_basis(4, cutoff, policy)
    vector = np.zeros(basis.size, dtype=np.complex128)
    seen = set()
    for entry in data["amplitudes"]:
        _check_keys(entry, {"occupation", "re", "im"}, "amplitude")
        occ = tuple(int(n) for n in entry["occupation"])
        if occ in seen:
            raise ConfigError(f"duplicate occupation {occ} in state file")
        seen.add(occ)
        index = basis.index_of(occ)
        vector[index] = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
    norm = float(np.linalg.norm(vector))
    if norm < 1e-12:
        raise ConfigError("state file holds a zero vector")
    return fock.OccupationState(basis, vector / norm, 0.0)


def _resolve_engine(config):
    """Pick the evaluation path for the configured state."""
    if config.state is None:
        raise ConfigError("a state is required (set state in the config or --state)")
    kind = config.state["kind"]
    engine = config.engine
    if engine is None:
        engine = {
            "two_photon": "fock",
            "file": "fock",
            "vacuum": "analytic",
            "coherent": "analytic",
            "mixture": "analytic",
            "squeezed_thermal": "gaussian",
        }[kind]
    if engine == "gaussian" and kind != "squeezed_thermal":
        raise ConfigError(
            f"the gaussian engine cannot represent state kind {kind!r} "
            "(only centered Gaussians are supported)"
        )
    if engine == "both" and kind != "squeezed_thermal":
        raise ConfigError("engine 'both' is only defined for squeezed_thermal states")
    kappa = float(config.state.get("kappa", 1.0)) if kind == "squeezed_thermal" else None
    if engine == "fock" and kind == "squeezed_thermal" and kappa != 1.0:
        raise ConfigError("the Fock engine can only replicate kappa = 1 states")
    if engine == "both" and kappa != 1.0:
        raise ConfigError("engine 'both' requires kappa = 1 for the Fock replica")
    return engine


def _coherent_amplitudes(spec):
    if spec["kind"] == "vacuum":
        return coherent.CoherentAmplitudes(np.zeros(4, dtype=np.complex128))
    z = [_complex_entry(entry, "coherent z") for entry in spec["z"]]
    return coherent.CoherentAmplitudes(np.asarray(z))


def _mixture(spec):
    components = [
        [_complex_entry(entry, "mixture component") for entry in row]
        for row in spec["components"]
    ]
    return coherent.ClassicalMixture(np.asarray(spec["weights"]), np.asarray(components))


def _squeezed_spec(spec):
    return gaussian.SqueezedThermalSpec(
        u=float(spec.get("u", 0.0)),
        v=float(spec.get("v", 0.0)),
        kappa=float(spec.get("kappa", 1.0)),
    )


def build_state(config, engine):
    """Materialize the configured state for the chosen engine."""
    spec = config.state
    kind = spec["kind"]
    if kind == "two_photon":
        # passive optics preserve the photon total, so the natural
        # two-photon cutoff is exact regardless of config.cutoff
        return fock.two_photon_state()
    if kind == "file":
        return _load_state_file(spec["path"], config.policy)
    if kind in ("vacuum", "coherent"):
        amplitudes = _coherent_amplitudes(spec)
        if engine == "fock":
            return fock.synthesize_coherent(amplitudes.z, config.cutoff, config.policy)
        return amplitudes
    if kind == "mixture":
        return _mixture(spec)
    if kind == "squeezed_thermal":
        built = _squeezed_spec(spec)
        if engine == "fock":
            return gaussian.fock_equivalent_state(built, config.cutoff, config.policy)
        return gaussian.build_squeezed_thermal(built)
    raise ConfigError(f"unhandled state kind {kind!r}")


def _report_for(state, angles, config):
    if isinstance(state, (fock.OccupationState, fock.DensityOperator)):
        return detection.ch_functional(state, angles, config.policy)
    if isinstance(state, coherent.CoherentAmplitudes):
        return coherent.coherent_ch(state, angles, config.policy)
    if isinstance(state, coherent.ClassicalMixture):
        return coherent.mixture_ch(state, angles, config.policy)
    if isinstance(state, gaussian.GaussianState):
        return gaussian.gaussian_ch(state, angles, config.policy)
    raise ConfigError(f"no evaluation path for {type(state).__name__}")


def _format(value):
    return "%.17g" % value


def _print_report(report, label=None):
    angles = report.angles
    if label:
        print(label)
    print(
        "angles: theta1=%.6f theta2=%.6f theta1'=%.6f theta2'=%.6f"
        % (angles.theta1, angles.theta2, angles.theta1_alt, angles.theta2_alt)
    )
    print(
        "P(t1,t2)=%.12f  P(t1,t2')=%.12f  P(t1',t2)=%.12f  P(t1',t2')=%.12f"
        % (report.p_tt, report.p_t_talt, report.p_talt_t, report.p_talt_talt)
    )
    print(
        "P(t1,any)=%.12f  P(t1',any)=%.12f  P(any,t2)=%.12f  P(any,any)=%.12f"
        % (report.p_t_any, report.p_talt_any, report.p_any_t, report.p_any_any)
    )
    print(
        "f = %.12f   margins: lower=%.3e upper=%.3e   tail=%.1e"
        % (report.f, report.lower_margin, report.upper_margin, report.tail_err)
    )
    print(f"verdict: {report.verdict}")


def _write_lines(path, lines):
    if path is None:
        sys.stdout.write("".join(lines))
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("".join(lines))


def _report_csv(report):
    angles = report.angles
    head = (
        "theta1,theta2,theta1_alt,theta2_alt,"
        "p_tt,p_t_talt,p_talt_t,p_talt_talt,p_t_any,p_talt_any,p_any_t,p_any_any,"
        "f,lower_margin,upper_margin,tail_err,verdict\n"
    )
    cells = [
        _format(v)
        for v in (
            angles.theta1,
            angles.theta2,
            angles.theta1_alt,
            angles.theta2_alt,
            report.p_tt,
            report.p_t_talt,
            report.p_talt_t,
            report.p_talt_talt,
            report.p_t_any,
            report.p_talt_any,
            report.p_any_t,
            report.p_any_any,
            report.f,
            report.lower_margin,
            report.upper_margin,
            report.tail_err,
        )
    ]
    return [head, ",".join(cells + [report.verdict]) + "\n"]


def _exit_code(report):
    return 2 if report.verdict == detection.INCONCLUSIVE else 0


def cmd_run(config):
    """Evaluate the CH functional once and print the full report."""
    engine = _resolve_engine(config)
    angles = config.angles
    if angles is None:
        rng = np.random.default_rng(config.seed)
        angles = detection.AngleSettings(*rng.uniform(0.0, math.pi, size=4))
        print(f"no angles given; drew random settings with seed {config.seed}")

    if engine == "both":
        spec = _squeezed_spec(config.state)
        g_report = gaussian.gaussian_ch(
            gaussian.build_squeezed_thermal(spec), angles, config.policy
        )
        f_report = detection.ch_functional(
            gaussian.fock_equivalent_state(spec, config.cutoff, config.policy),
            angles,
            config.policy,
        )
        _print_report(g_report, label="gaussian engine:")
        _print_report(f_report, label=f"fock engine (cutoff {config.cutoff}):")
        gap = max(
            abs(getattr(g_report, name) - getattr(f_report, name))
            for name in ("p_tt", "p_t_any", "p_any_t", "p_any_any", "f")
        )
        print(f"largest cross-engine gap: {gap:.3e}")
        if config.out:
            _write_lines(config.out, _report_csv(g_report))
        return _exit_code(g_report)

    state = build_state(config, engine)
    report = _report_for(state, angles, config)
    _print_report(report)
    if config.out:
        _write_lines(config.out, _report_csv(report))
    return _exit_code(report)


def cmd_sweep(config):
    """Sweep the squeezed thermal family and emit the plot CSV."""
    if config.engine not in (None, "gaussian"):
        raise ConfigError("sweep uses the gaussian engine")
    angles = config.angles or _parse_angle_list(DEFAULT_ANGLES)
    sweep = config.sweep
    step = float(sweep["u_step"])
    if step <= 0.0:
        raise ConfigError("u_step must be positive")
    start, stop = float(sweep["u_start"]), float(sweep["u_stop"])
    if stop < start:
        raise ConfigError("u_stop must not be below u_start")
    count = int(round((stop - start) / step)) + 1
    u_values = [start + i * step for i in range(count) if start + i * step <= stop + 1e-12]

    rows = gaussian.sweep_rows(
        u_values, sweep["scenarios"], sweep["kappas"], angles, config.policy
    )
    lines = [",".join(CSV_FIELDS) + "\n"]
    for row in rows:
        cells = [_format(row[name]) for name in CSV_FIELDS[:-1]]
        lines.append(",".join(cells + [str(row["violated"])]) + "\n")
    _write_lines(config.out, lines)
    violated = sum(row["violated"] for row in rows)
    print(f"swept {len(rows)} points; {violated} violated", file=sys.stderr)
    return 0


def cmd_scan(config):
    """Grid-search the four angles for the configured state."""
    engine = _resolve_engine(config)
    if engine == "both":
        raise ConfigError("scan uses one engine at a time")
    state = build_state(config, engine)
    if isinstance(state, coherent.CoherentAmplitudes):
        state = coherent.ClassicalMixture(np.ones(1), state.z.reshape(1, 4))
    result = detection.angle_scan(
        state, grid_density=config.grid, refine=config.refine, policy=config.policy
    )
    best = result.angles
    print(
        "best angles: theta1=%.6f theta2=%.6f theta1'=%.6f theta2'=%.6f"
        % (best.theta1, best.theta2, best.theta1_alt, best.theta2_alt)
    )
    print(f"grid f = {result.grid_f:.12f} over {result.grid_density}^4 points")
    if result.refined:
        print(f"refined f = {result.f:.12f}")
    report = _report_for(state, best, config)
    print(f"verdict at best angles: {report.verdict}")
    return 0


def run_validation(
    seed,
    trials,
    cutoff,
    policy=DEFAULT_POLICY,
    golden_tol=1e-10,
    cross_tol=1e-6,
    classical_tol=1e-9,
):
    """Run the self-check suites; returns (ok, printed lines).

    The tolerance arguments exist so tests can prove the checks are live:
    an impossible tolerance must make the suite fail.
    """
    lines = []
    ok = True

    worst_golden = 0.0
    for u in (0.25, 0.5, 1.0):
        state = gaussian.GaussianState(
            np.diag([math.exp(-2.0 * u), math.exp(2.0 * u)])
        )
        gap = abs(gaussian.vacuum_probability(state, (0,)) - 1.0 / math.cosh(u))
        worst_golden = max(worst_golden, gap)
    for kappa in (0.5, 0.8, 1.0):
        state = gaussian.build_squeezed_thermal(
            gaussian.SqueezedThermalSpec(0.0, 0.0, kappa)
        )
        gap = abs(
            gaussian.vacuum_probability(state, (0,)) - 2.0 * kappa / (1.0 + kappa)
        )
        worst_golden = max(worst_golden, gap)
    for u in (0.25, 0.5, 1.0):
        state = gaussian.build_squeezed_thermal(gaussian.SqueezedThermalSpec(u, 0.0, 1.0))
        gap = abs(gaussian.is_squeezed(state)[1] - math.exp(-2.0 * u) / 2.0)
        worst_golden = max(worst_golden, gap)
    golden_ok = worst_golden <= golden_tol
    ok = ok and golden_ok
    lines.append(
        f"golden values: worst gap {worst_golden:.3e} "
        f"(tol {golden_tol:.1e}) -> {'pass' if golden_ok else 'FAIL'}"
    )

    rng = np.random.default_rng(seed)
    worst_cross = 0.0
    for u in (0.1, 0.3):
        for v in (0.1, 0.3):
            spec = gaussian.SqueezedThermalSpec(u, v, 1.0)
            g_state = gaussian.build_squeezed_thermal(spec)
            f_state = gaussian.fock_equivalent_state(spec, cutoff, policy)
            for _ in range(3):
                angles = detection.AngleSettings(*rng.uniform(0.0, math.pi, size=4))
                g_report = gaussian.gaussian_ch(g_state, angles, policy)
                f_report = detection.ch_functional(f_state, angles, policy)
                for name in ("p_tt", "p_t_any", "p_any_t", "p_any_any"):
                    worst_cross = max(
                        worst_cross,
                        abs(getattr(g_report, name) - getattr(f_report, name)),
                    )
    cross_ok = worst_cross <= cross_tol
    ok = ok and cross_ok
    lines.append(
        f"cross-engine rates (cutoff {cutoff}): worst gap {worst_cross:.3e} "
        f"(tol {cross_tol:.1e}) -> {'pass' if cross_ok else 'FAIL'}"
    )

    if trials == 0:
        lines.append("classical nonviolation: skipped (trials = 0)")
    else:
        suite = coherent.classical_nonviolation_suite(seed, trials, policy)
        suite_ok = (
            suite.violations == 0
            and suite.worst_f <= classical_tol
            and suite.worst_lower_margin >= -classical_tol
        )
        ok = ok and suite_ok
        lines.append(
            f"classical nonviolation ({suite.trials} trials): "
            f"violations {suite.violations}, worst f {suite.worst_f:.3e}, "
            f"worst lower margin {suite.worst_lower_margin:.3e} "
            f"-> {'pass' if suite_ok else 'FAIL'}"
        )
        if suite.failing_seed is not None:
            lines.append(f"first failing (seed, trial): {suite.failing_seed}")
    return ok, lines


def cmd_validate(config):
    if config.trials == 0:
        print("warning: trials = 0, classical suite will be skipped", file=sys.stderr)
    ok, lines = run_validation(config.seed, config.trials, config.cutoff, config.policy)
    for line in lines:
        print(line)
    print("validation:", "pass" if ok else "FAIL")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bellsim",
        description="Generalized Clauser-Horne tests on four-mode field states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--engine", choices=("fock", "gaussian", "both"))
        p.add_argument("--cutoff", type=int, help="total-photon cutoff (default 16)")
        p.add_argument("--seed", type=int, help="seed for random draws (default 0)")
        p.add_argument("--out", help="output path (default stdout)")

    run_p = sub.add_parser("run", help="evaluate the CH functional at fixed angles")
    add_common(run_p)
    run_p.add_argument("--state", help="state kind or JSON object")
    run_p.add_argument("--angles", help="four angles, e.g. 'pi/8,pi/4,3pi/8,0'")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="sweep the squeezed thermal family to CSV")
    add_common(sweep_p)
    sweep_p.add_argument("--angles", help="four fixed angles for every sweep point")
    sweep_p.add_argument("--u-start", dest="u_start", type=float)
    sweep_p.add_argument("--u-stop", dest="u_stop", type=float)
    sweep_p.add_argument("--u-step", dest="u_step", type=float)
    sweep_p.set_defaults(func=cmd_sweep)

    scan_p = sub.add_parser("scan", help="search all four angles for the best f")
    add_common(scan_p)
    scan_p.add_argument("--state", help="state kind or JSON object")
    scan_p.add_argument("--grid", type=int, help="grid points per angle (default 16)")
    scan_p.add_argument("--refine", action="store_true", help="polish the best grid point")
    scan_p.set_defaults(func=cmd_scan)

    val_p = sub.add_parser("validate", help="run the built-in self checks")
    add_common(val_p)
    val_p.add_argument("--trials", type=int, help="classical suite size (default 200)")
    val_p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig.load(args)
        return args.func(config)
    except (BellSimError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Batch command line for the canonical studies.

    hyperbell <study> [--config PATH] [--theta R] [--phi R]
              [--noise none|white|dephasing] [--v X] [--v-pi X] [--v-k X]
              [--events N] [--seed N] [--dof N]
              [--class factorizable|unrestricted]
              [--format table|csv|json] [--out PATH]

Studies: ideal (exact quantum predictions; noise options do not apply),
bounds (enumerated classical bounds with witnesses), simulate (sampled
experiment: assumption tables, per-DOF CHSH, 16 joint settings), scaling
(quantum/classical ratio versus the number of degrees of freedom),
assumptions (element-of-reality context-independence check).

Option precedence: command-line flags override the config file, which
overrides the defaults.  The config file is flat ``key = value`` text with
``#`` comments.  All output is byte-deterministic for a fixed config and
seed.  Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 enumeration guard exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

from . import bell, lhv, model, qcore, simlab
from .rng import GENERATOR_ID

STUDIES = ("ideal", "bounds", "simulate", "scaling", "assumptions")
FORMATS = ("table", "csv", "json")
CLASSES = (lhv.FACTORIZABLE, lhv.UNRESTRICTED)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


_DEFAULTS = {
    "theta": math.pi,
    "phi": 0.0,
    "noise": model.NOISE_WHITE,
    "v_pi": 0.9,
    "v_k": 0.9,
    "events": 100_000,
    "seed": 0,
    "dof": 2,
    "class": None,
    "format": "table",
    "out": None,
}


@dataclass(frozen=True)
class RunConfig:
    study: str
    theta: float
    phi: float
    noise: model.NoiseModel
    events: int
    seed: int
    dof: int
    strategy_class: str | None
    fmt: str
    out: str | None


def _parse_angle(key: str, text: str) -> float:
    """Radians, as a float literal or a pi expression like pi, -pi, pi/2, 0.5pi."""
    token = text.strip().lower().replace(" ", "")
    try:
        if "pi" not in token:
            value = float(token)
        else:
            coef_s, _, div_s = token.partition("pi")
            coef_s = coef_s.rstrip("*")
            coef = {"": 1.0, "-": -1.0, "+": 1.0}.get(coef_s)
            if coef is None:
                coef = float(coef_s)
            value = coef * math.pi
            if div_s:
                if not div_s.startswith("/"):
                    raise ValueError
                value /= float(div_s[1:])
        if not math.isfinite(value):
            raise ValueError
        return value
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"key '{key}': expected radians (e.g. 1.57, pi, pi/2), got {text!r}")


def _parse_unit(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number in [0, 1], got {text!r}")
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ConfigError(f"key '{key}': value {value!r} outside [0, 1]")
    return value


def _parse_int(key: str, text: str, minimum: int, maximum: int | None = None) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {text!r}")
    if value < minimum or (maximum is not None and value > maximum):
        hi = f", {maximum}]" if maximum is not None else ", ...)"
        raise ConfigError(f"key '{key}': value {value} outside [{minimum}{hi}")
    return value


def _parse_choice(key: str, text: str, choices: tuple) -> str:
    if text not in choices:
        raise ConfigError(f"key '{key}': expected one of {'/'.join(choices)}, got {text!r}")
    return text


def _coerce(key: str, text: str):
    if key in ("theta", "phi"):
        return _parse_angle(key, text)
    if key in ("v", "v_pi", "v_k"):
        return _parse_unit(key, text)
    if key == "noise":
        return _parse_choice(key, text, model.NOISE_KINDS)
    if key == "events":
        return _parse_int(key, text, minimum=1)
    if key == "seed":
        return _parse_int(key, text, minimum=0)
    if key == "dof":
        return _parse_int(key, text, minimum=1, maximum=bell.MAX_DOF)
    if key == "class":
        return _parse_choice(key, text, CLASSES)
    if key == "format":
        return _parse_choice(key, text, FORMATS)
    if key == "out":
        return text
    if key == "study":
        return _parse_choice(key, text, STUDIES)
    raise ConfigError(f"unknown key '{key}'")


def _read_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}")
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        values[key] = _coerce(key, text)
    return values


def build_config(study: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Merge defaults < config file < flags, validating every field."""
    merged = dict(_DEFAULTS)
    explicit = set()
    for source in (file_values, flag_values):
        source = dict(source)
        if "v" in source:  # shorthand for both visibilities
            shared = source.pop("v")
            source.setdefault("v_pi", shared)
            source.setdefault("v_k", shared)
        for key, value in source.items():
            if key == "study":
                continue  # the positional argument always wins
            merged[key] = value
            explicit.add(key)
    # The default visibilities describe the default white channel; a noise-free
    # run means unit visibility unless the user explicitly contradicts that.
    if merged["noise"] == model.NOISE_NONE:
        for key in ("v_pi", "v_k"):
            if key not in explicit:
                merged[key] = 1.0
    try:
        noise = model.NoiseModel(kind=merged["noise"], v_pi=merged["v_pi"], v_k=merged["v_k"])
    except ValueError as exc:
        raise ConfigError(f"key 'noise': {exc}")
    return RunConfig(
        study=study,
        theta=merged["theta"],
        phi=merged["phi"],
        noise=noise,
        events=merged["events"],
        seed=merged["seed"],
        dof=merged["dof"],
        strategy_class=merged["class"],
        fmt=merged["format"],
        out=merged["out"],
    )


@dataclass
class StudyResult:
    study: str
    config: RunConfig
    rows: list
    beta: float | None
    std_err: float | None
    bound: float | None
    sigmas: float | None
    payload: object


def _prepared_state(config: RunConfig) -> model.QuantumState:
    return model.apply_noise(model.hyper_state(config.theta, config.phi), config.noise)


def _run_ideal(config: RunConfig) -> StudyResult:
    state = model.hyper_state(config.theta, config.phi)
    pred = bell.ideal_predictions(state)
    rows = [
        {"quantity": "beta_pi", "value": pred.beta_pi},
        {"quantity": "abs_beta_pi", "value": abs(pred.beta_pi)},
        {"quantity": "beta_k", "value": pred.beta_k},
        {"quantity": "abs_beta_k", "value": abs(pred.beta_k)},
        {"quantity": "beta", "value": pred.beta},
        {"quantity": "abs_beta", "value": abs(pred.beta)},
        {"quantity": "spectral_radius_beta_pi", "value": pred.radius_pi},
        {"quantity": "spectral_radius_beta_k", "value": pred.radius_k},
        {"quantity": "spectral_radius_beta", "value": pred.radius_product},
    ]
    return StudyResult(
        study="ideal", config=config, rows=rows,
        beta=pred.beta, std_err=0.0, bound=4.0,
        sigmas=None, payload=pred,
    )


def _witness_text(side: dict) -> str:
    return " ".join(f"{token}={value:+d}" for token, value in side.items())


def _run_bounds(config: RunConfig) -> StudyResult:
    operator = bell.canonical_product(config.dof)
    classes = (config.strategy_class,) if config.strategy_class else CLASSES
    results = [lhv.max_bound(operator, cls) for cls in classes]
    rows = [
        {
            "strategy_class": res.strategy_class,
            "bound": res.bound,
            "strategies_evaluated": res.strategies_evaluated,
            "witness_u": _witness_text(res.witness.side_u),
            "witness_d": _witness_text(res.witness.side_d),
        }
        for res in results
    ]
    return StudyResult(
        study="bounds", config=config, rows=rows,
        beta=None, std_err=None, bound=float(results[0].bound), sigmas=None,
        payload=results,
    )


def _run_scaling(config: RunConfig) -> StudyResult:
    reports = []
    for n in range(1, config.dof + 1):
        source = bell.LHV_BRUTEFORCE if n <= 3 else bell.ANALYTIC
        reports.append(bell.scaling_report(n, source))
    rows = [
        {
            "dof": rep.dof_count,
            "quantum_value": rep.quantum_value,
            "classical_bound": rep.classical_bound,
            "ratio": rep.ratio,
            "bound_source": rep.bound_source,
        }
        for rep in reports
    ]
    return StudyResult(
        study="scaling", config=config, rows=rows,
        beta=None, std_err=None, bound=None, sigmas=None,
        payload=reports,
    )


def _correlation_row(record: simlab.CorrelationRecord) -> dict:
    return {
        "setting_u": record.label[0],
        "setting_d": record.label[1],
        "E": record.E,
        "std_err": record.std_err,
        "n_events": record.n_events,
    }


def _run_simulate(config: RunConfig) -> StudyResult:
    result = simlab.run_simulated_experiment(_prepared_state(config), config.events, config.seed)
    rows = [_correlation_row(rec) for rec in result.joint_records]
    return StudyResult(
        study="simulate", config=config, rows=rows,
        beta=result.beta.beta_estimate,
        std_err=result.beta.beta_std_err,
        bound=result.beta.bound,
        sigmas=result.beta.sigmas,
        payload=result,
    )


def _run_assumptions(config: RunConfig) -> StudyResult:
    report = simlab.assumption_test(_prepared_state(config), config.events, config.seed)
    rows = []
    for row in report.rows:
        for cell in row.cells:
            entry = _correlation_row(cell.record)
            entry["setting_u"] = cell.setting.u_label
            entry["setting_d"] = cell.setting.d_label
            rows.append(entry)
    return StudyResult(
        study="assumptions", config=config, rows=rows,
        beta=None, std_err=None, bound=None, sigmas=None,
        payload=report,
    )


_RUNNERS = {
    "ideal": _run_ideal,
    "bounds": _run_bounds,
    "simulate": _run_simulate,
    "scaling": _run_scaling,
    "assumptions": _run_assumptions,
}


def run(config: RunConfig) -> StudyResult:
    return _RUNNERS[config.study](config)


# --- rendering ---------------------------------------------------------------

def _f(x: float) -> str:
    return f"{x:.6f}"


def _config_dict(config: RunConfig) -> dict:
    return {
        "study": config.study,
        "theta": config.theta,
        "phi": config.phi,
        "noise": config.noise.kind,
        "v_pi": config.noise.v_pi,
        "v_k": config.noise.v_k,
        "events": config.events,
        "seed": config.seed,
        "dof": config.dof,
        "class": config.strategy_class,
        "format": config.fmt,
    }


def _emit_json(result: StudyResult) -> str:
    doc = {
        "study": result.study,
        "config": _config_dict(result.config),
        "rows": result.rows,
        "beta": result.beta,
        "std_err": result.std_err,
        "bound": result.bound,
        "sigmas": result.sigmas,
        "generator_id": GENERATOR_ID,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


_CSV_COLUMNS = {
    "ideal": ("quantity", "value"),
    "bounds": ("strategy_class", "bound", "strategies_evaluated", "witness_u", "witness_d"),
    "scaling": ("dof", "quantum_value", "classical_bound", "ratio", "bound_source"),
    "simulate": ("setting_u", "setting_d", "E", "std_err", "n_events"),
    "assumptions": ("setting_u", "setting_d", "E", "std_err", "n_events"),
}


def _emit_csv(result: StudyResult) -> str:
    columns = _CSV_COLUMNS[result.study]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in result.rows:
        writer.writerow([row[c] for c in columns])
    return buf.getvalue()


def _grid_lines(title, col_labels, row_labels, values, extra_cols=None) -> list:
    """Aligned table: one row label column, then fixed-width value columns."""
    extra_cols = extra_cols or []
    width = max(
        [len(lab) for lab in col_labels]
        + [len(name) for name, _ in extra_cols]
        + [10]
    ) + 2
    left = max(len(r) for r in row_labels) + 2
    lines = [title]
    header = " " * left + "".join(lab.rjust(width) for lab in col_labels)
    header += "".join(name.rjust(width) for name, _ in extra_cols)
    lines.append(header)
    for i, row_label in enumerate(row_labels):
        line = row_label.ljust(left) + "".join(_f(v).rjust(width) for v in values[i])
        line += "".join(_f(fn(i)).rjust(width) for _, fn in extra_cols)
        lines.append(line)
    return lines


def _assumption_table_lines(report: simlab.AssumptionReport) -> list:
    lines = []
    for name, rows in (
        ("polarization correlations under path contexts", report.pol_rows),
        ("path correlations under polarization contexts", report.path_rows),
    ):
        col_labels = [cell.context_label for cell in rows[0].cells]
        values = [[cell.record.E for cell in row.cells] for row in rows]
        extra = [
            ("mean", lambda i, rs=rows: rs[i].mean_E),
            ("spread", lambda i, rs=rows: rs[i].spread),
            ("predictability", lambda i, rs=rows: rs[i].predictability),
            ("analytic", lambda i, rs=rows: rs[i].analytic_E),
        ]
        lines += _grid_lines(
            f"Assumption check: {name} (sampled E per cell)",
            col_labels,
            [row.row_label for row in rows],
            values,
            extra,
        )
        lines.append("")
    return lines


def _violation_lines(name: str, rep: simlab.ViolationReport) -> list:
    return [
        f"{name}: estimate {_f(rep.beta_estimate)}  |estimate| {_f(abs(rep.beta_estimate))}"
        f" +/- {_f(rep.beta_std_err)}  bound {_f(rep.bound)}  violation {rep.sigmas:.1f} sigma"
    ]


def _emit_table(result: StudyResult) -> str:
    lines: list = []
    if result.study == "ideal":
        lines.append("Exact quantum predictions for the configured pure state")
        for row in result.rows:
            lines.append(f"{row['quantity']:<26}= {_f(row['value'])}")
    elif result.study == "bounds":
        lines.append(
            f"Classical bounds for the {result.config.dof}-DOF product operator"
            " (exhaustive enumeration)"
        )
        for row in result.rows:
            lines.append("")
            lines.append(f"strategy class: {row['strategy_class']}")
            lines.append(f"  bound                 = {row['bound']}")
            lines.append(f"  strategy pairs covered = {row['strategies_evaluated']}")
            lines.append(f"  witness u: {row['witness_u']}")
            lines.append(f"  witness d: {row['witness_d']}")
    elif result.study == "scaling":
        lines.append("Quantum-to-classical ratio versus degrees of freedom")
        lines.append(f"{'N':>2}  {'quantum':>12}  {'classical':>12}  {'ratio':>12}  source")
        for row in result.rows:
            lines.append(
                f"{row['dof']:>2}  {_f(row['quantum_value']):>12}  "
                f"{_f(row['classical_bound']):>12}  {_f(row['ratio']):>12}  {row['bound_source']}"
            )
    elif result.study == "assumptions":
        lines += _assumption_table_lines(result.payload)
    elif result.study == "simulate":
        sim: simlab.SimulationResult = result.payload
        lines += _assumption_table_lines(sim.assumptions)
        by_label = {rec.label: rec for rec in sim.joint_records}
        pol_rows = [("A_pi", "B_pi"), ("a_pi", "B_pi"), ("A_pi", "b_pi"), ("a_pi", "b_pi")]
        path_cols = [("A_k", "B_k"), ("A_k", "b_k"), ("a_k", "B_k"), ("a_k", "b_k")]
        values = [
            [
                by_label[(f"{pu} {ku}", f"{pd} {kd}")].E
                for ku, kd in path_cols
            ]
            for pu, pd in pol_rows
        ]
        lines += _grid_lines(
            "Joint correlations (rows: polarization pair, columns: path pair)",
            [f"{ku} {kd}" for ku, kd in path_cols],
            [f"{pu} {pd}" for pu, pd in pol_rows],
            values,
        )
        lines.append("")
        lines += _violation_lines("beta_pi", sim.beta_pi)
        lines += _violation_lines("beta_k", sim.beta_k)
        lines += _violation_lines("beta", sim.beta)
        lines.append("")
        lines.append(f"events per setting: {sim.n_events}   seed: {sim.seed}   "
                     f"generator: {sim.generator_id}")
        lines.append("")
        lines.append("Reference experimental values (significance recomputed):")
        for ref in simlab.reference_significance():
            status = "consistent" if ref.consistent else "DISCREPANT"
            lines.append(
                f"  {ref.label}: {ref.value} +/- {ref.uncertainty} vs bound {ref.bound:g}"
                f" -> {ref.sigmas:.1f} sigma (reported {ref.reported_sigmas:g}, {status})"
            )
    return "\n".join(lines) + "\n"


def emit(result: StudyResult, fmt: str) -> bytes:
    if fmt == "json":
        text = _emit_json(result)
    elif fmt == "csv":
        text = _emit_csv(result)
    elif fmt == "table":
        text = _emit_table(result)
    else:
        raise ConfigError(f"key 'format': unknown format {fmt!r}")
    return text.encode("utf-8")


# --- entry point --------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperbell",
        description="Hyper-entangled two-photon Bell test: exact predictions, "
        "classical bounds, simulated statistics, and violation scaling.",
    )
    parser.add_argument("study", choices=STUDIES)
    parser.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parser.add_argument("--theta", metavar="R", help="polarization pair phase in radians")
    parser.add_argument("--phi", metavar="R", help="path pair phase in radians")
    parser.add_argument("--noise", choices=model.NOISE_KINDS)
    parser.add_argument("--v", metavar="X", help="set both visibilities at once")
    parser.add_argument("--v-pi", metavar="X", help="polarization visibility in [0, 1]")
    parser.add_argument("--v-k", metavar="X", help="path visibility in [0, 1]")
    parser.add_argument("--events", metavar="N", help="events per setting")
    parser.add_argument("--seed", metavar="N", help="master RNG seed")
    parser.add_argument("--dof", metavar="N", help=f"degrees of freedom, 1..{bell.MAX_DOF}")
    parser.add_argument("--class", dest="strategy_class", choices=CLASSES,
                        help="restrict the bounds study to one strategy class")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values = _read_config_file(args.config) if args.config else {}
        flag_values = {}
        for key, attr in (
            ("theta", "theta"), ("phi", "phi"), ("noise", "noise"),
            ("v", "v"), ("v_pi", "v_pi"), ("v_k", "v_k"), ("events", "events"),
            ("seed", "seed"), ("dof", "dof"), ("class", "strategy_class"),
            ("format", "format"), ("out", "out"),
        ):
            raw = getattr(args, attr)
            if raw is not None:
                flag_values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
        config = build_config(args.study, file_values, flag_values)
        result = run(config)
        data = emit(result, config.fmt)
        if config.out:
            with open(config.out, "wb") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data.decode("utf-8"))
        return 0
    except ConfigError as exc:
        print(f"hyperbell: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hyperbell: cannot write output: {exc}", file=sys.stderr)
        return 2
    except qcore.NumericalFailure as exc:
        print(f"hyperbell: numerical failure: {exc}", file=sys.stderr)
        return 3
    except lhv.EnumerationGuardError as exc:
        print(f"hyperbell: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    bb84limits bound --source wcp --mu optimal
    bb84limits distance --source pdc --chi2 optimal --format json
    bb84limits sweep --of bound --axis mu --start 1e-4 --stop 0.1 --steps 50 --scale log
    bb84limits simulate --source wcp --mu 0.1 --eve pns --block-prob auto_match

Parameters can also come from a flat JSON config file (``--config``); flags
override the file, the file overrides the built-in defaults. Defaults are the
1.3 um fiber experiment numbers: eta=0.11, d=1e-5, 0.38 dB/km, 5 dB fixed loss.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .link_model import ChannelParams, DetectorParams, ErrorModel, link_budget
from .photon_statistics import HeraldedPDC, SinglePhoton, SourceModel, WeakCoherent, source_distribution
from .pns_simulator import AUTO_MATCH, EveStrategy, SimConfig, run_simulation
from .security_bounds import check_all, max_secure_distance

COMMANDS = ("budget", "check", "bound", "distance", "sweep", "simulate")
FORMATS = ("table", "json", "csv")
OPTIMAL = "optimal"


class CliError(ValueError):
    """Invalid command line or config; ``key`` names the offending parameter."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


def _float(lo: float = -math.inf, hi: float = math.inf, lo_open=False, hi_open=False):
    def conv(raw: Any) -> float:
        x = float(raw)
        if not math.isfinite(x):
            raise ValueError("must be finite")
        if x < lo or (lo_open and x == lo) or x > hi or (hi_open and x == hi):
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            raise ValueError(f"must lie in {left}{lo}, {hi}{right}, got {x}")
        return x

    return conv


def _or_sentinel(sentinel: str, conv: Callable[[Any], float]):
    def inner(raw: Any):
        if raw == sentinel:
            return sentinel
        return conv(raw)

    return inner


def _choice(*options: str):
    def conv(raw: Any) -> str:
        if raw not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {raw!r}")
        return raw

    return conv


def _int(lo: int):
    def conv(raw: Any) -> int:
        if isinstance(raw, float) and not raw.is_integer():
            raise ValueError(f"must be an integer, got {raw}")
        x = int(raw)
        if x < lo:
            raise ValueError(f"must be >= {lo}, got {x}")
        return x

    return conv


def _bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    if str(raw).lower() in ("1", "true", "yes"):
        return True
    if str(raw).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"must be a boolean, got {raw!r}")


# key -> (converter, default, help)
PARAMETERS: dict[str, tuple[Callable[[Any], Any], Any, str]] = {
    "source": (_choice("single", "wcp", "pdc"), "wcp", "photon source"),
    "mu": (_or_sentinel(OPTIMAL, _float(0, 1, lo_open=True)), OPTIMAL, "WCP mean photon number or 'optimal'"),
    "chi2": (_or_sentinel(OPTIMAL, _float(0, 1, lo_open=True, hi_open=True)), OPTIMAL, "PDC chi**2 or 'optimal'"),
    "eta_a": (_float(0, 1, lo_open=True), 0.11, "heralding detector efficiency"),
    "dark_a": (_float(0, 1, hi_open=True), 1e-5, "heralding detector dark counts per slot"),
    "eta_b": (_float(0, 1, lo_open=True), 0.11, "Bob's detector efficiency"),
    "dark_b": (_float(0, 0.5, hi_open=True), 1e-5, "Bob's dark counts per slot"),
    "beta": (_float(0, lo_open=True), 0.38, "fiber loss (dB/km)"),
    "c": (_float(0), 5.0, "fixed loss (dB)"),
    "length": (_float(0), 0.0, "fiber length (km)"),
    "p_e_signal": (_float(0, 0.5), 0.0, "error probability per arriving signal"),
    "mode": (_choice("paper_approx", "exact"), "paper_approx", "probability composition"),
    "method": (_choice("closed_form", "numeric_exact"), "closed_form", "bound evaluation"),
    "honest_detector": (_bool, False, "eta_B outside Eve's control (WCP only)"),
    "pulses": (_int(1), 1_000_000, "simulated time slots"),
    "seed": (_int(0), 0, "simulation seed"),
    "eve": (_choice("absent", "pns", "intercept_resend", "pns_plus_intercept"), "absent", "eavesdropper"),
    "block_prob": (_or_sentinel(AUTO_MATCH, _float(0, 1)), 0.0, "blocking probability or 'auto_match'"),
    "intercept_fraction": (_float(0, 1), 0.0, "fraction of forwarded signals intercepted"),
    "eve_controls_eta": (_bool, True, "Eve controls Bob's detector efficiency"),
    "forward_one": (_bool, False, "Eve forwards one photon of each split pulse"),
    "shards": (_int(1), 1, "simulation shards"),
    "of": (_choice("budget", "check", "bound", "distance"), "bound", "command evaluated at each sweep point"),
    "axis": (str, None, "swept parameter"),
    "start": (_float(), None, "sweep start"),
    "stop": (_float(), None, "sweep stop"),
    "steps": (_int(2), None, "number of sweep points"),
    "scale": (_choice("linear", "log"), "linear", "sweep spacing"),
}
SWEEPABLE = ("mu", "chi2", "eta_a", "dark_a", "eta_b", "dark_b", "beta", "c", "length", "p_e_signal")


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class RunSpec:
    command: str
    parameters: dict[str, Any]
    output_format: str = "table"
    sweep: Optional[SweepAxis] = None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise CliError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bb84limits", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--format", dest="output_format", choices=FORMATS, default="table")
    parser.add_argument("--config", help="flat JSON object of parameters")
    for key, (_, _, help_text) in PARAMETERS.items():
        parser.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=help_text)
    return parser


def _validate(key: str, raw: Any) -> Any:
    conv = PARAMETERS[key][0]
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc), key) from None


def parse_args(argv: list[str]) -> RunSpec:
    """Parse and validate a command line into a RunSpec."""
    ns = vars(_build_parser().parse_args(argv))
    merged: dict[str, Any] = {k: v[1] for k, v in PARAMETERS.items()}
    if ns["config"]:
        try:
            with open(ns["config"], encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config: {exc}", "config") from None
        if not isinstance(config, dict):
            raise CliError("config must be a flat JSON object", "config")
        for key, value in config.items():
            if key not in PARAMETERS:
                raise CliError("unknown parameter", key)
            merged[key] = value
    for key in PARAMETERS:
        if ns[key] is not None:
            merged[key] = ns[key]
    params = {k: (_validate(k, v) if v is not None else None) for k, v in merged.items()}

    sweep = None
    if ns["command"] == "sweep":
        for key in ("axis", "start", "stop", "steps"):
            if params[key] is None:
                raise CliError("required for sweep", key)
        if params["axis"] not in SWEEPABLE:
            raise CliError(f"must be one of {', '.join(SWEEPABLE)}", "axis")
        sweep = SweepAxis(params["axis"], params["start"], params["stop"], params["steps"], params["scale"])
        if sweep.scale == "log" and (sweep.start <= 0 or sweep.stop <= 0):
            raise CliError("log sweep needs positive start and stop", "scale")
        for x in (sweep.start, sweep.stop):
            _validate(sweep.name, float(x))
    return RunSpec(ns["command"], params, ns["output_format"], sweep)


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------

def _detector(p: dict) -> DetectorParams:
    return DetectorParams(p["eta_b"], p["dark_b"])


def _resolved_source(p: dict) -> SourceModel:
    """Source with 'optimal' intensities replaced by their closed-form optima."""
    det = _detector(p)
    if p["source"] == "single":
        return SinglePhoton()
    if p["source"] == "wcp":
        mu = p["mu"]
        if mu == OPTIMAL:
            if det.dark == 0:
                raise CliError("no finite optimum without dark counts", "mu")
            mu = math.sqrt(2 * det.dark)
        return WeakCoherent(mu)
    chi2 = p["chi2"]
    if chi2 == OPTIMAL:
        if p["dark_a"] == 0 or det.dark == 0:
            raise CliError("no finite optimum without dark counts", "chi2")
        chi2 = math.sqrt(p["dark_a"] * det.dark / (p["eta_a"] * (2 - p["eta_a"])))
    return HeraldedPDC(chi2, p["eta_a"], p["dark_a"])


def _source_columns(p: dict, source: SourceModel) -> dict[str, Any]:
    row: dict[str, Any] = {"source": p["source"]}
    if isinstance(source, WeakCoherent):
        row["mu"] = source.mu
    elif isinstance(source, HeraldedPDC):
        row.update(chi2=source.chi_sq, eta_a=source.eta_a, dark_a=source.d_a)
    row.update(eta_b=p["eta_b"], dark_b=p["dark_b"])
    return row


def _budget_row(p: dict) -> dict[str, Any]:
    source = _resolved_source(p)
    channel = ChannelParams(p["beta"], p["c"], p["length"])
    lb = link_budget(source, channel, _detector(p), ErrorModel(p["p_e_signal"]), p["mode"])
    row = _source_columns(p, source)
    row.update(beta=p["beta"], c=p["c"], length=p["length"], p_e_signal=p["p_e_signal"], mode=p["mode"])
    row.update(
        f=lb.f,
        p_sig=lb.p_sig,
        p_dark=lb.p_dark,
        p_exp=lb.p_exp,
        e=lb.e,
        p_e_sifted=lb.p_e_sifted,
        p_multi=source_distribution(source).p_multi,
    )
    return row


def _check_row(p: dict) -> dict[str, Any]:
    row = _budget_row(p)
    verdicts = check_all(row["p_sig"], row["p_exp"], row["e"], row["p_multi"])
    for name, v in verdicts.items():
        row[f"secure_{name}"] = v.secure
        row[f"margin_{name}"] = v.margin
    return row


def _bound(p: dict, with_distance: bool) -> dict[str, Any]:
    optimize = (p["source"] == "wcp" and p["mu"] == OPTIMAL) or (p["source"] == "pdc" and p["chi2"] == OPTIMAL)
    det = _detector(p)
    if p["source"] == "single":
        source: SourceModel = SinglePhoton()
    elif p["source"] == "wcp":
        source = WeakCoherent(1.0 if p["mu"] == OPTIMAL else p["mu"])
    else:
        source = HeraldedPDC(0.5 if p["chi2"] == OPTIMAL else p["chi2"], p["eta_a"], p["dark_a"])
    try:
        result = max_secure_distance(
            source, det, p["beta"], p["c"], optimize, p["method"], not p["honest_detector"]
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    row: dict[str, Any] = {"source": p["source"]}
    if p["source"] == "wcp":
        row["mu"] = result.optimal_intensity if optimize else p["mu"]
    elif p["source"] == "pdc":
        row.update(chi2=result.optimal_intensity if optimize else p["chi2"], eta_a=p["eta_a"], dark_a=p["dark_a"])
    row.update(eta_b=p["eta_b"], dark_b=p["dark_b"], method=result.method, honest_detector=p["honest_detector"])
    row.update(f_min=result.f_min, optimized=optimize)
    if with_distance:
        row.update(beta=p["beta"], c=p["c"], l_max=result.l_max)
    row["attainable"] = result.attainable
    return row


def _simulate_row(p: dict) -> dict[str, Any]:
    source = _resolved_source(p)
    eve = EveStrategy(p["eve"], p["block_prob"], p["intercept_fraction"], not p["forward_one"])
    config = SimConfig(
        n_pulses=p["pulses"],
        seed=p["seed"],
        source=source,
        channel=ChannelParams(p["beta"], p["c"], p["length"]),
        bob=_detector(p),
        error_model=ErrorModel(p["p_e_signal"]),
        eve=eve,
        eve_controls_bob_efficiency=p["eve_controls_eta"],
    )
    result = run_simulation(config, shards=p["shards"])
    row = _source_columns(p, source)
    row.update(beta=p["beta"], c=p["c"], length=p["length"], p_e_signal=p["p_e_signal"])
    row.update(eve=p["eve"], pulses=p["pulses"], seed=p["seed"])
    row.update(vars(result))
    return row


_HANDLERS: dict[str, Callable[[dict], dict[str, Any]]] = {
    "budget": _budget_row,
    "check": _check_row,
    "bound": lambda p: _bound(p, with_distance=False),
    "distance": lambda p: _bound(p, with_distance=True),
    "simulate": _simulate_row,
}


def execute(spec: RunSpec) -> list[dict[str, Any]]:
    """Run the analysis named by ``spec.command``; one row per result."""
    if spec.command != "sweep":
        return [_HANDLERS[spec.command](spec.parameters)]
    handler = _HANDLERS[spec.parameters["of"]]
    rows = []
    for x in spec.sweep.grid():
        params = dict(spec.parameters)
        params[spec.sweep.name] = _validate(spec.sweep.name, float(x))
        rows.append(handler(params))
    return rows


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return float(f"{x:.6g}") if math.isfinite(x) else f"{x}"
    return value


def render(rows: list[dict[str, Any]], fmt: str = "table") -> str:
    """Render rows as an aligned table, a JSON array or CSV (LF line endings)."""
    if not rows:
        raise ValueError("nothing to render")
    columns = list(rows[0])
    if fmt == "json":
        return json.dumps([{k: _json_value(r[k]) for k in columns} for r in rows], indent=2) + "\n"
    cells = [[_fmt(r[k]) for k in columns] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(cells)
        return buf.getvalue()
    if fmt == "table":
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def main(argv: Optional[list[str]] = None) -> int:
    try:
        spec = parse_args(sys.argv[1:] if argv is None else argv)
    except CliError as exc:
        print(f"bb84limits: error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = execute(spec)
    except (CliError, ValueError, ArithmeticError) as exc:
        print(f"bb84limits: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(render(rows, spec.output_format))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``lora-ser <command> [options]``.

Commands
--------
ser-awgn     SER without interference (exact, approx, monte_carlo)
ser-interf   SER with one same-SF interferer (full, approx, combined, monte_carlo)
pattern      dump one interference pattern (k, re, im, mag)
figure2      preset: sf 7-12, MC with random and ignored phase, AWGN reference
figure3      preset: sf 9-11, MC and approximation for fractional and chip-aligned offsets

Options may also come from ``--config FILE`` (``key = value`` lines using the
long option names); command-line flags win.  ``LORA_SER_SEED`` sets the
default seed.  Exit codes: 0 success, 2 invalid input, 3 numerical failure.
Output is assembled in memory and written in one step, so a failed run never
leaves a partial file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .channel import InterfererState
from .css_phy import ModulationParams
from .monte_carlo import TrialConfig, sweep
from .pattern import pattern_closed_form
from .ser import (
    SerQuery,
    TractabilityError,
    interference_approx_curve,
    ser_awgn_approx,
    ser_awgn_exact,
    ser_combined_curve,
    ser_full,
)
from .stats import IntegrationError

SEED_ENV = "LORA_SER_SEED"
COLUMNS = ("method", "sf", "snr_db", "sir_db", "ser", "ci_low", "ci_high", "trials")
PATTERN_COLUMNS = ("k", "re", "im", "mag")

METHODS = {
    "ser-awgn": ("exact", "approx", "monte_carlo"),
    "ser-interf": ("full", "approx", "combined", "monte_carlo"),
}
DEFAULT_METHODS = {"ser-awgn": "exact,approx", "ser-interf": "combined,monte_carlo"}
FIGURE_SFS = {"figure2": (7, 8, 9, 10, 11, 12), "figure3": (9, 10, 11)}


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# -- argument types -----------------------------------------------------------


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included) or a single value, in dB."""
    parts = text.split(":")
    try:
        vals = [float(x) for x in parts]
    except ValueError:
        raise ValidationError(f"bad SNR grid {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError("SNR grid values must be finite")
    if len(vals) == 1:
        return (vals[0],)
    if len(vals) != 3:
        raise ValidationError("SNR grid must be start:stop:step")
    start, stop, step = vals
    if step <= 0 or stop < start:
        raise ValidationError("SNR grid must be strictly increasing (step > 0, stop >= start)")
    count = math.floor((stop - start) / step + 1e-9) + 1
    if count > 100_000:
        raise ValidationError("SNR grid too long")
    # rounding keeps -16 + 3*0.5 from printing as -14.499999999999998
    return tuple(round(start + i * step, 10) + 0.0 for i in range(count))


def parse_trials(text: str) -> int:
    try:
        val = float(text)
    except ValueError:
        raise ValidationError(f"bad trial count {text!r}") from None
    if not (math.isfinite(val) and val >= 1 and val == int(val)):
        raise ValidationError("trials must be a positive integer (e.g. 100000 or 1e5)")
    return int(val)


def parse_sf_list(text: str) -> tuple[int, ...]:
    try:
        sfs = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"bad spreading factor list {text!r}") from None
    for sf in sfs:
        ModulationParams(sf)
    return sfs


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise ValidationError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise ValidationError("expected a positive integer")
    return val


def _finite_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise ValidationError(f"expected a number, got {text!r}") from None
    if math.isnan(val):
        raise ValidationError("NaN is not allowed")
    return val


# -- experiment description ---------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    sfs: tuple[int, ...]
    snr_db: tuple[float, ...] | None
    sir_db: float | None = None
    methods: tuple[str, ...] = ()
    eps: float = 0.1
    omega_nodes: int = 16
    trials: int = 100_000
    seed: int = 0
    tau_mode: str = "fractional"
    omega_mode: str = "random"
    noise_method: str = "exact"
    subsample: int | None = None
    workers: int = 1
    tau: float | None = None
    si1: int | None = None
    si2: int | None = None
    output: str | None = None
    fmt: str = "csv"

    def validate(self) -> ExperimentSpec:
        if self.fmt not in ("csv", "json"):
            raise ValidationError("format must be csv or json")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")
        if self.command == "pattern":
            if len(self.sfs) != 1:
                raise ValidationError("pattern takes a single --sf")
            if self.tau is None or self.si1 is None or self.si2 is None:
                raise ValidationError("pattern needs --tau, --si1 and --si2")
            try:
                InterfererState(1.0, 0.0, self.tau, self.si1, self.si2).validate(ModulationParams(self.sfs[0]))
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
            return self
        if self.command in METHODS:
            if len(self.sfs) != 1:
                raise ValidationError(f"{self.command} takes a single --sf")
            if self.snr_db is None:
                raise ValidationError("--snr is required")
            bad = [m for m in self.methods if m not in METHODS[self.command]]
            if bad or not self.methods:
                raise ValidationError(
                    f"unknown method(s) {bad} for {self.command}; choose from {','.join(METHODS[self.command])}"
                )
            if len(set(self.methods)) != len(self.methods):
                raise ValidationError("duplicate methods")
        if self.command == "ser-interf" and self.sir_db is None:
            raise ValidationError("ser-interf needs --sir")
        if self.command == "ser-awgn" and self.sir_db is not None:
            raise ValidationError("ser-awgn takes no --sir")
        if self.sir_db is not None and not math.isfinite(self.sir_db):
            raise ValidationError("--sir must be finite")
        if self.tau_mode not in ("fractional", "chip_aligned"):
            raise ValidationError("tau-mode must be fractional or chip_aligned")
        if self.omega_mode not in ("random", "ignored"):
            raise ValidationError("omega-mode must be random or ignored")
        if self.noise_method not in ("exact", "approx"):
            raise ValidationError("noise-method must be exact or approx")
        for sf in self.sfs:
            try:
                SerQuery(ModulationParams(sf), 0.0, tau_step=self.eps, omega_nodes=self.omega_nodes)
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
        return self


def default_figure_grid(sf: int) -> tuple[float, ...]:
    """1 dB grid spanning roughly SER 0.5 to 1e-4 for the figure presets."""
    centre = round(2 * (-9.0 - 2.75 * (sf - 7))) / 2
    return parse_grid(f"{centre - 6}:{centre + 6}:1")


# -- computations -------------------------------------------------------------


def _row(method, sf, pt):
    return {
        "method": method,
        "sf": sf,
        "snr_db": float(pt.snr_db),
        "sir_db": None if pt.sir_db is None else float(pt.sir_db),
        "ser": float(pt.ser),
        "ci_low": None if pt.ci_low is None else float(pt.ci_low),
        "ci_high": None if pt.ci_high is None else float(pt.ci_high),
        "trials": pt.trials,
    }


def _curve_rows(method, sf, snr, sir, values):
    return [
        {"method": method, "sf": sf, "snr_db": float(s), "sir_db": sir, "ser": float(v),
         "ci_low": None, "ci_high": None, "trials": None}
        for s, v in zip(snr, values)
    ]


def _mc_rows(method, spec, sf, snr, sir, tau_mode="fractional", omega_mode="random"):
    cfg = TrialConfig(ModulationParams(sf), 0.0, sir, tau_mode=tau_mode, omega_mode=omega_mode, master_seed=spec.seed)
    return [_row(method, sf, pt) for pt in sweep(cfg, snr, spec.trials, spec.workers)]


def _suffix(tau_mode="fractional", omega_mode="random"):
    return ("_chip_aligned" if tau_mode == "chip_aligned" else "") + ("_omega_ignored" if omega_mode == "ignored" else "")


def run_ser_awgn(spec: ExperimentSpec):
    sf = spec.sfs[0]
    p = ModulationParams(sf)
    rows = []
    for m in spec.methods:
        if m == "exact":
            rows += [_row("awgn_exact", sf, ser_awgn_exact(SerQuery(p, s))) for s in spec.snr_db]
        elif m == "approx":
            rows += [_row("awgn_approx", sf, ser_awgn_approx(SerQuery(p, s))) for s in spec.snr_db]
        else:
            rows += _mc_rows("monte_carlo", spec, sf, spec.snr_db, None)
    return rows


def run_ser_interf(spec: ExperimentSpec):
    sf = spec.sfs[0]
    p = ModulationParams(sf)
    sir = spec.sir_db
    suffix = _suffix(spec.tau_mode)
    rows = []
    for m in spec.methods:
        if m == "full":
            sub = "all" if spec.subsample is None else spec.subsample
            for s in spec.snr_db:
                q = SerQuery(p, s, sir, spec.eps, spec.omega_nodes, sub, spec.seed)
                rows.append(_row("full" + suffix, sf, ser_full(q, spec.tau_mode)))
        elif m == "approx":
            vals = interference_approx_curve(p, spec.snr_db, sir, spec.eps, spec.tau_mode)
            rows += _curve_rows("approx_interf" + suffix, sf, spec.snr_db, sir, np.minimum(vals, (p.n - 1) / p.n))
        elif m == "combined":
            vals = ser_combined_curve(p, spec.snr_db, sir, spec.eps, spec.tau_mode, spec.noise_method)
            rows += _curve_rows("combined" + suffix, sf, spec.snr_db, sir, vals)
        else:
            rows += _mc_rows(
                "monte_carlo" + _suffix(spec.tau_mode, spec.omega_mode), spec, sf, spec.snr_db, sir,
                spec.tau_mode, spec.omega_mode,
            )
    return rows


def run_figure2(spec: ExperimentSpec):
    sir = 3.0 if spec.sir_db is None else spec.sir_db
    rows = []
    for sf in spec.sfs:
        snr = spec.snr_db or default_figure_grid(sf)
        p = ModulationParams(sf)
        rows += _mc_rows("monte_carlo", spec, sf, snr, sir)
        rows += _mc_rows("monte_carlo_omega_ignored", spec, sf, snr, sir, omega_mode="ignored")
        rows += [_row("awgn_exact", sf, ser_awgn_exact(SerQuery(p, s))) for s in snr]
    return rows


def run_figure3(spec: ExperimentSpec):
    sir = 3.0 if spec.sir_db is None else spec.sir_db
    rows = []
    for sf in spec.sfs:
        snr = spec.snr_db or default_figure_grid(sf)
        p = ModulationParams(sf)
        for mode in ("fractional", "chip_aligned"):
            rows += _mc_rows("monte_carlo" + _suffix(mode), spec, sf, snr, sir, tau_mode=mode)
        for mode in ("fractional", "chip_aligned"):
            vals = ser_combined_curve(p, snr, sir, spec.eps, mode, spec.noise_method)
            rows += _curve_rows("combined" + _suffix(mode), sf, snr, sir, vals)
    return rows


def run_pattern(spec: ExperimentSpec):
    p = ModulationParams(spec.sfs[0])
    pat = pattern_closed_form(InterfererState(1.0, 0.0, spec.tau, spec.si1, spec.si2), p)
    return [
        {"k": k, "re": float(b.real), "im": float(b.imag), "mag": float(m)}
        for k, (b, m) in enumerate(zip(pat.bins, pat.magnitudes))
    ]


RUNNERS = {
    "ser-awgn": run_ser_awgn,
    "ser-interf": run_ser_interf,
    "figure2": run_figure2,
    "figure3": run_figure3,
    "pattern": run_pattern,
}


def execute(spec: ExperimentSpec) -> list[dict]:
    return RUNNERS[spec.command](spec.validate())


# -- serialization ------------------------------------------------------------


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows: list[dict], columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def read_rows(text: str, fmt: str) -> list[dict]:
    """Inverse of :func:`render` for the SER schema."""
    if fmt == "json":
        return json.loads(text)
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for r in reader:
        row = {}
        for c in reader.fieldnames:
            v = r[c]
            if c in ("method",):
                row[c] = v
            elif c in ("sf", "trials", "k"):
                row[c] = None if v == "" else int(v)
            else:
                row[c] = None if v == "" else float(v)
        out.append(row)
    return out


def write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lora_ser_", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- argument handling --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lora-ser", description="LoRa symbol error rate under AWGN and same-SF interference")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in ("ser-awgn", "ser-interf", "pattern", "figure2", "figure3"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file with defaults for these options")
        sp.add_argument("--sf", help="spreading factor (comma list for figure presets)")
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        if name == "pattern":
            sp.add_argument("--tau", type=_finite_float)
            sp.add_argument("--si1", type=int)
            sp.add_argument("--si2", type=int)
            continue
        sp.add_argument("--snr", help="SNR grid start:stop:step in dB (stop included)")
        sp.add_argument("--trials", type=parse_trials, default=100_000)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=_positive_int, default=1)
        if name != "ser-awgn":
            sp.add_argument("--sir", type=_finite_float, help="signal-to-interference ratio in dB")
            sp.add_argument("--eps", type=_finite_float, default=0.1, help="offset grid step in chips")
            sp.add_argument("--noise-method", dest="noise_method", default="exact")
        if name in METHODS:
            sp.add_argument("--method", default=DEFAULT_METHODS[name], help="comma list of methods")
        if name == "ser-interf":
            sp.add_argument("--omega-nodes", dest="omega_nodes", type=_positive_int, default=16)
            sp.add_argument("--tau-mode", dest="tau_mode", default="fractional")
            sp.add_argument("--omega-mode", dest="omega_mode", default="random")
            sp.add_argument("--subsample", type=_positive_int, help="random symbol triples for the full expression")
    return parser


def read_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}") from None
    out = {}
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {num}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, command, argv, cfg: dict):
    sp = parser._subparsers._group_actions[0].choices[command]
    dests = {a.dest for a in sp._actions}
    aliases = {"format": "fmt", "method": "method"}
    defaults = {}
    for key, value in cfg.items():
        dest = aliases.get(key, key)
        if dest not in dests or dest in ("help", "config"):
            raise ValidationError(f"unknown config key {key!r} for {command}")
        defaults[dest] = value
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _join_values(argv):
    # every option takes a value; joining lets grids like -16:-4:0.5 through,
    # which argparse would otherwise read as an option
    out = []
    it = iter(argv)
    for tok in it:
        if (tok.startswith("--") and "=" not in tok and tok != "--help") or tok == "-o":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def spec_from_args(argv) -> ExperimentSpec:
    parser = build_parser()
    argv = _join_values(argv)
    args = parser.parse_args(argv)
    if args.command is None:
        raise ValidationError("missing command; choose one of " + ", ".join(RUNNERS))
    if args.config:
        args = _apply_config(parser, args.command, argv, read_config(args.config))
    ns = vars(args)
    cmd = args.command
    if ns.get("sf") is None:
        if cmd not in FIGURE_SFS:
            raise ValidationError("--sf is required")
        sfs = FIGURE_SFS[cmd]
    else:
        try:
            sfs = parse_sf_list(str(ns["sf"]))
        except (TypeError, ValueError) as exc:
            raise ValidationError(str(exc)) from None
    seed = ns.get("seed")
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer") from None
    methods = tuple(m.strip() for m in ns["method"].split(",")) if ns.get("method") else ()
    snr = parse_grid(ns["snr"]) if ns.get("snr") else None
    return ExperimentSpec(
        command=cmd,
        sfs=sfs,
        snr_db=snr,
        sir_db=ns.get("sir"),
        methods=methods,
        eps=ns.get("eps", 0.1),
        omega_nodes=ns.get("omega_nodes", 16),
        trials=ns.get("trials", 100_000),
        seed=seed,
        tau_mode=ns.get("tau_mode", "fractional"),
        omega_mode=ns.get("omega_mode", "random"),
        noise_method=ns.get("noise_method", "exact"),
        subsample=ns.get("subsample"),
        workers=ns.get("workers", 1),
        tau=ns.get("tau"),
        si1=ns.get("si1"),
        si2=ns.get("si2"),
        output=ns.get("output"),
        fmt=ns.get("fmt", "csv"),
    )


def _diagnostic(kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run(argv=None) -> int:
    try:
        spec = spec_from_args(sys.argv[1:] if argv is None else list(argv))
        rows = execute(spec)
    except ValidationError as exc:
        _diagnostic("validation", str(exc))
        return 2
    except (TractabilityError, IntegrationError, FloatingPointError, OverflowError) as exc:
        _diagnostic("numerical", str(exc))
        return 3
    except ValueError as exc:
        _diagnostic("validation", str(exc))
        return 2
    columns = PATTERN_COLUMNS if spec.command == "pattern" else COLUMNS
    text = render(rows, columns, spec.fmt)
    if spec.output in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            write_atomic(spec.output, text)
        except OSError as exc:
            _diagnostic("validation", f"cannot write output: {exc}")
            return 2
    return 0


def main():
    sys.exit(run())


__all__ = [
    "COLUMNS",
    "ExperimentSpec",
    "PATTERN_COLUMNS",
    "ValidationError",
    "default_figure_grid",
    "execute",
    "main",
    "parse_grid",
    "parse_trials",
    "read_rows",
    "render",
    "run",
]

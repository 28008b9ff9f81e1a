"""Command-line front end: ``simulate``, ``verify`` and ``catalog list``."""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .classical import CATALOG, ModelError, OscillatorModel, SolverConfig, catalog
from .expr import TIME_FUNCTION_CATALOG, ExprError, ExprSyntaxError, TimeFunction
from .invariant import FrameError
from .observables import StateSpec
from .oracle import verify_evolution
from .pipeline import Evolution
from .quadrature import QuadratureError
from .rk import SolverError

COLUMNS = ("t", "q_mean", "p_mean", "var_q", "var_p", "cov_qp", "theta", "re_beta", "im_beta", "omega_I_sq", "energy")
ELLIPSE_COLUMNS = ("t", "axis_major", "axis_minor", "tilt")

COLUMN_HELP = """\
output columns (simulate):
  t           output time
  q_mean      <q(t)>
  p_mean      <p(t)>
  var_q       <(q - <q>)^2>
  var_p       <(p - <p>)^2>
  cov_qp      symmetrized <(q - <q>)(p - <p>)>
  theta       accumulated invariant phase Theta(t)
  re_beta     Re beta(t), drift of the shifted ladder operator
  im_beta     Im beta(t)
  omega_I_sq  g+ g- - g0^2 evaluated at t (conserved)
  energy      <H(t)> including the force term
After the trajectory a line '# ellipses' starts a second table with
columns t, axis_major, axis_minor (principal semi-axes of the covariance
ellipse, i.e. standard deviations) and tilt (major-axis angle from the q
axis, radians), one row every --ellipse-every time units.

output columns (verify):
  quantity, max_abs_dev, t_at_max, max_rel_dev, tol, status
"""

# flag dest -> catalog parameter, per catalog model
_CATALOG_FLAGS = {
    "pulsating": {"m0": "m0", "gamma": "gamma", "mu": "mu", "nu": "nu", "Omega": "Omega"},
    "constant": {"m": "m", "omega": "omega", "F": "F"},
}
_EXPR_FLAGS = ("mass", "omega_sq", "force")
_RUN_DEFAULTS = {
    "model": "pulsating",
    "t0": "0",
    "t1": "40",
    "dt": "0.05",
    "ellipse_every": "4",
    "state": "coherent:0",
    "beta0": "matched",
    "tol": "1e-6",
    "abs_tol": "1e-10",
    "rel_tol": "1e-10",
    "max_steps": "1000000",
}
_ALL_KEYS = (
    set(_RUN_DEFAULTS)
    | set(_EXPR_FLAGS)
    | {k for flags in _CATALOG_FLAGS.values() for k in flags}
    | {"c1", "c2", "c3", "initial_step", "output"}
)


class ConfigError(ValueError):
    """A configuration value is missing or invalid; ``field`` names it."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def parse_number(field_name: str, text: str) -> float:
    """Decimal, exponent or exact rational (``"1/3"``) text as a float."""
    try:
        value = float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(field_name, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(field_name, "must be finite")
    return value


@dataclass
class RunConfig:
    model: OscillatorModel
    state_text: str
    beta0: str
    constants: tuple[float | None, float | None, float | None]
    dt: float
    ellipse_every: float | None
    solver: SolverConfig
    tol: float
    output: str | None
    echo: dict[str, str] = field(default_factory=dict)

    def grid(self) -> np.ndarray:
        t0, t1 = self.model.t0, self.model.t1
        n = int(math.floor((t1 - t0) / self.dt + 1e-9))
        return t0 + self.dt * np.arange(n + 1)

    def ellipse_times(self) -> np.ndarray:
        if self.ellipse_every is None:
            return np.empty(0)
        t0, t1 = self.model.t0, self.model.t1
        n = int(math.floor((t1 - t0) / self.ellipse_every + 1e-9))
        return t0 + self.ellipse_every * np.arange(n + 1)

    def evolution(self) -> Evolution:
        text = self.state_text.strip()
        kwargs = dict(constants=self.constants, beta0=self.beta0, solver=self.solver)
        if text.startswith("mean:"):
            parts = text[5:].split(",")
            if len(parts) != 2:
                raise ConfigError("state", f"mean state takes Q0,P0, got {text!r}")
            means = (parse_number("state", parts[0]), parse_number("state", parts[1]))
            return Evolution.build(self.model, initial_means=means, **kwargs)
        try:
            state = StateSpec.parse(text)
        except ValueError as exc:
            raise ConfigError("state", str(exc)) from None
        return Evolution.build(self.model, state, **kwargs)


def _merge(args: argparse.Namespace, config_path: str | None) -> dict[str, str]:
    """File values, overridden by explicit flags, over built-in defaults."""
    values = dict(_RUN_DEFAULTS)
    if config_path:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # parameter names are case sensitive (Omega)
        try:
            with open(config_path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError("config", str(exc)) from None
        for section in parser.sections():
            for key, value in parser.items(section):
                key = key.replace("-", "_")
                if key not in _ALL_KEYS:
                    raise ConfigError(f"[{section}] {key}", "unknown setting")
                values[key] = value
    for key in _ALL_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = str(value)
    return values


def build_config(values: dict[str, str]) -> RunConfig:
    name = values["model"]
    t0 = parse_number("t0", values["t0"])
    t1 = parse_number("t1", values["t1"])
    if not t1 > t0:
        raise ConfigError("t1", f"must exceed t0 (t0={t0!r}, t1={t1!r})")
    dt = parse_number("dt", values["dt"])
    if not dt > 0:
        raise ConfigError("dt", "must be positive")
    ellipse_every = None
    if values.get("ellipse_every", "").strip().lower() not in ("", "none", "0"):
        ellipse_every = parse_number("ellipse_every", values["ellipse_every"])
        if not ellipse_every > 0:
            raise ConfigError("ellipse_every", "must be positive")

    if name in _CATALOG_FLAGS:
        stray = [k for k in ("mass", "omega_sq") if k in values]
        if stray:
            raise ConfigError(stray[0], f"only valid with --model expr, not {name!r}")
        params = {p: values[k] for k, p in _CATALOG_FLAGS[name].items() if k in values}
        for other, flags in _CATALOG_FLAGS.items():
            for k in flags:
                if other != name and k not in _CATALOG_FLAGS[name] and k in values:
                    raise ConfigError(k, f"not a parameter of model {name!r}")
        try:
            model = catalog(name, params, t0, t1)
        except ModelError as exc:
            raise ConfigError("model", str(exc)) from None
        if "force" in values:
            if name == "constant" and "F" in values:
                raise ConfigError("force", "give either F or force for the constant model, not both")
            model = model.with_force(_expression("force", values["force"]))
    elif name == "expr":
        missing = [k for k in ("mass", "omega_sq") if k not in values]
        if missing:
            raise ConfigError(missing[0], "required with --model expr")
        for flags in _CATALOG_FLAGS.values():
            for k in flags:
                if k in values:
                    raise ConfigError(k, "catalog parameter given with --model expr")
        try:
            model = OscillatorModel(
                mass=_expression("mass", values["mass"]),
                omega_sq=_expression("omega_sq", values["omega_sq"]),
                force=_expression("force", values.get("force", "0")),
                t0=t0,
                t1=t1,
            )
        except ModelError as exc:
            raise ConfigError("model", str(exc)) from None
    else:
        raise ConfigError("model", f"unknown model {name!r}; choose pulsating, constant or expr")

    constants = tuple(parse_number(k, values[k]) if k in values else None for k in ("c1", "c2", "c3"))
    tols = {}
    for k in ("abs_tol", "rel_tol", "tol"):
        tols[k] = parse_number(k, values[k])
        if not tols[k] > 0:
            raise ConfigError(k, "must be positive")
    try:
        max_steps = int(values["max_steps"])
    except ValueError:
        raise ConfigError("max_steps", f"not an integer: {values['max_steps']!r}") from None
    if max_steps <= 0:
        raise ConfigError("max_steps", "must be positive")
    initial_step = None
    if "initial_step" in values:
        initial_step = parse_number("initial_step", values["initial_step"])
        if not initial_step > 0:
            raise ConfigError("initial_step", "must be positive")
    solver = SolverConfig(abs_tol=tols["abs_tol"], rel_tol=tols["rel_tol"], max_steps=max_steps, initial_step=initial_step)
    beta0 = values["beta0"].strip()
    if beta0 not in ("matched", "zero"):
        try:
            complex(beta0.replace(" ", ""))
        except ValueError:
            raise ConfigError("beta0", f"must be matched, zero or a complex number, got {beta0!r}") from None
    return RunConfig(
        model=model,
        state_text=values["state"],
        beta0=beta0,
        constants=constants,
        dt=dt,
        ellipse_every=ellipse_every,
        solver=solver,
        tol=tols["tol"],
        output=values.get("output"),
        echo={k: v for k, v in sorted(values.items()) if k != "output"},
    )


def _expression(field_name: str, text: str) -> TimeFunction:
    try:
        return TimeFunction.from_expression(text)
    except ExprSyntaxError as exc:
        raise ExprFieldError(field_name, exc) from None


class ExprFieldError(ConfigError):
    def __init__(self, field_name: str, exc: ExprSyntaxError):
        caret = "\n".join("  " + line for line in exc.caret().splitlines())
        super().__init__(field_name, f"{exc}\n{caret}")
        self.syntax = exc


# CSV ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _header(out: io.StringIO, command: str, cfg: RunConfig) -> None:
    out.write(f"# lrosc {__version__}\n")
    out.write(f"# command: {command}\n")
    for key, value in cfg.echo.items():
        out.write(f"# {key} = {value}\n")


def simulate_csv(cfg: RunConfig) -> str:
    ev = cfg.evolution()
    out = io.StringIO()
    _header(out, "simulate", cfg)
    out.write(f"# beta0_value = {ev.beta0!r}\n")
    if ev.state is not None:
        out.write(f"# initial_state = {ev.state.describe()}\n")
    out.write(",".join(COLUMNS) + "\n")
    for t in cfg.grid():
        row = ev.row(float(t))
        out.write(",".join(_fmt(row[c]) for c in COLUMNS) + "\n")
    times = cfg.ellipse_times()
    if times.size:
        out.write("# ellipses\n")
        out.write(",".join(ELLIPSE_COLUMNS) + "\n")
        for t in times:
            row = ev.ellipse_row(float(t))
            out.write(",".join(_fmt(row[c]) for c in ELLIPSE_COLUMNS) + "\n")
    return out.getvalue()


def verify_csv(cfg: RunConfig) -> tuple[str, bool]:
    report = verify_evolution(cfg.evolution(), cfg.grid(), cfg.tol)
    out = io.StringIO()
    _header(out, "verify", cfg)
    out.write(f"# result = {'pass' if report.passed else 'fail'}\n")
    out.write(report.to_csv())
    return out.getvalue(), report.passed


def catalog_text() -> str:
    lines = ["models:"]
    for name, (_, required, defaults, description) in sorted(CATALOG.items()):
        params = ", ".join(f"{p}={defaults[p]!r}" if p in defaults else p for p in required)
        lines.append(f"  {name:<10} {description}")
        lines.append(f"  {'':<10} parameters: {params}")
    lines.append("  expr       arbitrary --mass, --omega-sq and --force expressions in t")
    lines.append("time functions:")
    for name, (template, _) in sorted(TIME_FUNCTION_CATALOG.items()):
        lines.append(f"  {name:<20} {template}")
    return "\n".join(lines) + "\n"


# argument parsing ----------------------------------------------------------


def _add_run_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", help="pulsating, constant or expr (default pulsating)")
    for flag in ("m0", "Omega", "gamma", "mu", "nu"):
        g.add_argument(f"--{flag}", dest=flag, metavar="X", help=f"pulsating parameter {flag} (rationals like 1/3 accepted)")
    g.add_argument("--m", metavar="X", help="constant model mass")
    g.add_argument("--omega", metavar="X", help="constant model frequency")
    g.add_argument("--F", metavar="X", help="constant model force per unit mass")
    g.add_argument("--mass", metavar="EXPR", help="M(t) for --model expr")
    g.add_argument("--omega-sq", dest="omega_sq", metavar="EXPR", help="omega^2(t) for --model expr")
    g.add_argument("--force", metavar="EXPR", help="force per unit mass F(t); replaces the model's force")
    g = p.add_argument_group("run")
    g.add_argument("--t0", metavar="T")
    g.add_argument("--t1", metavar="T")
    g.add_argument("--dt", metavar="DT", help="output spacing (default 0.05)")
    g.add_argument("--ellipse-every", dest="ellipse_every", metavar="DT", help="ellipse cadence, 0 for none (default 4)")
    g.add_argument("--state", help="number:N, coherent:MAG[,DELTA] or mean:Q0,P0 (default coherent:0)")
    g.add_argument("--beta0", help="matched, zero or a complex number like 0.5-1j (default matched)")
    for c in ("c1", "c2", "c3"):
        g.add_argument(f"--{c}", metavar="X", help=f"invariant constant {c} (default: model's choice)")
    g = p.add_argument_group("numerics")
    g.add_argument("--abs-tol", dest="abs_tol", metavar="X", help="classical solver absolute tolerance")
    g.add_argument("--rel-tol", dest="rel_tol", metavar="X", help="classical solver relative tolerance")
    g.add_argument("--max-steps", dest="max_steps", metavar="N")
    g.add_argument("--initial-step", dest="initial_step", metavar="H")
    g.add_argument("--tol", metavar="X", help="verify: allowed max abs deviation (default 1e-6)")
    g = p.add_argument_group("files")
    g.add_argument("--config", metavar="INI", help="key = value settings in any [section]; flags override them")
    g.add_argument("--output", "-o", metavar="PATH", help="write CSV here instead of stdout")
    g.add_argument("--sweep", nargs="+", metavar="INI", help="run each config file in parallel, one output file each")
    g.add_argument("--workers", type=int, default=None, help="sweep worker threads")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrosc",
        description="Exact moments of a forced time-dependent harmonic oscillator, with an independent oracle.",
        epilog=COLUMN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"lrosc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "write the moment trajectory and ellipses as CSV"),
        ("verify", "compare closed form with the oracle; exit 0 iff every deviation < --tol"),
    ):
        p = sub.add_parser(name, help=text, description=text, epilog=COLUMN_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_run_options(p)
    p = sub.add_parser("catalog", help="list catalog models and time functions")
    p.add_argument("action", choices=["list"])
    return parser


def _run_one(command: str, cfg: RunConfig) -> tuple[str, bool]:
    if command == "simulate":
        return simulate_csv(cfg), True
    return verify_csv(cfg)


def _emit(text: str, path: str | None, stdout) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        stdout.write(text)


def _sweep(command: str, args, paths: Sequence[str], stdout, stderr) -> int:
    def job(path: str) -> tuple[str, bool]:
        cfg = build_config(_merge(args, path))
        if not cfg.output:
            cfg.output = str(Path(path).with_suffix(f".{command}.csv"))
        text, ok = _run_one(command, cfg)
        _emit(text, cfg.output, stdout)
        return cfg.output, ok

    status = 0
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        futures = [(p, pool.submit(job, p)) for p in paths]
        for path, fut in futures:
            try:
                out, ok = fut.result()
                stdout.write(f"{path} -> {out} ({'pass' if ok else 'fail'})\n" if command == "verify" else f"{path} -> {out}\n")
                if not ok:
                    status = max(status, 1)
            except Exception as exc:  # report every failing config, keep going
                stderr.write(f"lrosc: {path}: {exc}\n")
                status = 2
    return status


_USER_ERRORS = (ConfigError, ModelError, FrameError, ExprError, SolverError, QuadratureError, ValueError, OverflowError)


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command == "catalog":
        stdout.write(catalog_text())
        return 0
    if args.sweep:
        if args.output:
            stderr.write("lrosc: --output cannot be combined with --sweep (set output per config)\n")
            return 2
        return _sweep(args.command, args, args.sweep, stdout, stderr)
    try:
        cfg = build_config(_merge(args, args.config))
        text, ok = _run_one(args.command, cfg)
    except _USER_ERRORS as exc:
        stderr.write(f"lrosc: error: {exc}\n")
        return 2
    _emit(text, cfg.output, stdout)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

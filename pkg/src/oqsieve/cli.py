"""Config-driven runs: load and validate a run configuration, execute it, persist the results.

Configuration grammar
---------------------
UTF-8 text in INI form as read by :mod:`configparser`, without interpolation::

    # comment
    [section]
    key = value    ; inline comments need a space before the marker

Keys are case sensitive. Only the sections and keys of :class:`RunConfig`
are accepted; every key is optional and missing ones take the documented
defaults. Values are Python float or int literals, ``true``/``false`` for
booleans, bare words for choices, and ``auto`` where a key allows the
library default.

Results directory
-----------------
``config.ini`` (the fully resolved configuration), ``metadata.json``,
numeric series as ``*.csv`` (one ``#`` header line with ``name [unit]``
columns, 17 significant digits, LF endings), per-experiment JSON
summaries, and gnuplot ``*.dat`` files written by :func:`emit_plotdata`.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import platform
import re
import sys
import time
import typing
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .dynamics.generators import fock_generator
from .dynamics.propagate import (check_fock_step, check_grid_step, default_fock_dt, default_grid_dt,
                                 propagate_fock, propagate_grid)
from .dynamics.qome_fit import fit_qome_form
from .dynamics.superop import average_generator, cp_check, hamiltonian_superoperator
from .environments import CaldeiraLeggettParams, CorrelatedNoiseParams, QOMEParams, describe
from .errors import (BoundaryLeakWarning, ConfigError, MissingArtifactError, OQSieveError, RegimeWarning,
                     TruncationWarning)
from .sieve import check_family, log_family, run_sieve
from .states import (GaussianPureState, GridDensityMatrix, OscillatorParams, PositionGrid, gaussian_to_fock,
                     hamiltonian_fock, make_gaussian_wavefunction)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGRADED = 3
EXIT_IO = 4

EXPERIMENTS = ("propagate", "sieve", "average-check", "cp-check")
MODEL_KINDS = ("cl", "correlated", "qome")
FIT_TOLERANCE = 1e-8
MAX_GENERATOR_DIM = 40


@dataclass(frozen=True)
class RunSection:
    experiment: str = "sieve"
    out: str = "results"
    seed: int = 0  # reserved; every experiment is deterministic


@dataclass(frozen=True)
class ModelSection:
    kind: str = "cl"
    gamma: float = 0.01
    kT: float = 5.0
    weak_dissipation: Optional[bool] = None  # auto: friction off for propagate/sieve, on otherwise
    lam: float = field(default=1.0, metadata={"key": "lambda"})
    sigma: float = 1.0
    Gamma: float = 0.05
    N: float = 1.0


@dataclass(frozen=True)
class OscillatorSection:
    m: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0


@dataclass(frozen=True)
class StateSection:
    x0: float = 0.0
    p0: float = 0.0
    s: float = 1.0


@dataclass(frozen=True)
class GridSection:
    x_min: float = -10.0
    x_max: float = 10.0
    n: int = 256


@dataclass(frozen=True)
class FockSection:
    n_max: int = 30
    leakage_bound: float = 1e-6


@dataclass(frozen=True)
class IntegratorSection:
    dt: Optional[float] = None
    periods: float = 1.0
    record_every: int = 10
    positivity_every: int = 100


@dataclass(frozen=True)
class SieveSection:
    s_min: float = 0.25
    s_max: float = 4.0
    points: int = 33
    measure: str = "period"
    path: str = "analytic"
    m_samples: Optional[int] = None


@dataclass(frozen=True)
class GeneratorSection:
    d: int = 12
    m_samples: int = 64
    target: str = "full"


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = RunSection()
    model: ModelSection = ModelSection()
    oscillator: OscillatorSection = OscillatorSection()
    state: StateSection = StateSection()
    grid: GridSection = GridSection()
    fock: FockSection = FockSection()
    integrator: IntegratorSection = IntegratorSection()
    sieve: SieveSection = SieveSection()
    generator: GeneratorSection = GeneratorSection()

    def as_dict(self) -> dict:
        return {sec: {_key(f): getattr(getattr(self, sec), f.name) for f in dataclasses.fields(cls)}
                for sec, cls in _sections()}


def _sections():
    hints = typing.get_type_hints(RunConfig)
    return [(f.name, hints[f.name]) for f in dataclasses.fields(RunConfig)]


def _key(f: dataclasses.Field) -> str:
    return f.metadata.get("key", f.name)


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _parse_value(text: str, typ, where: str):
    text = text.strip()
    if typing.get_origin(typ) is typing.Union:
        if text == "auto":
            return None
        typ = next(t for t in typing.get_args(typ) if t is not type(None))
    try:
        if typ is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"expected true or false, got {text!r}")
        if typ is int:
            return int(text)
        if typ is float:
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(f"value must be finite, got {text!r}")
            return v
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^([^\s#;=:][^=:]*?)\s*[=:]")


def _line_numbers(text: str) -> dict:
    lines = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = i
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = i
    return lines


def loads_config(text: str, source: str = "<config>", experiment: str | None = None) -> RunConfig:
    """Parse and validate configuration text; see the module docstring for the grammar.

    ``experiment`` (from the command line) fills ``[run] experiment`` and must
    agree with it when the text sets it explicitly.
    """
    parser = configparser.ConfigParser(interpolation=None, default_section="\0", strict=True,
                                       inline_comment_prefixes=("#", ";"), empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: key outside of any [section]") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line}") from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(f"{source}:{exc.lineno}: {exc.message.splitlines()[0]}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    lines = _line_numbers(text)
    schema = dict(_sections())
    built = {}
    for sec in parser.sections():
        if sec not in schema:
            raise ConfigError(f"{source}:{lines.get((sec, None), '?')}: unknown section [{sec}]; "
                              f"expected one of {', '.join(schema)}")
        cls = schema[sec]
        hints = typing.get_type_hints(cls)
        by_key = {_key(f): f for f in dataclasses.fields(cls)}
        kw = {}
        for key, raw in parser.items(sec):
            where = f"{source}:{lines.get((sec, key), '?')}: [{sec}] {key}"
            if key not in by_key:
                raise ConfigError(f"{where}: unknown key; expected one of {', '.join(by_key)}")
            f = by_key[key]
            kw[f.name] = _parse_value(raw, hints[f.name], where)
        built[sec] = cls(**kw)
    cfg = RunConfig(**built)
    if experiment is not None:
        explicit = parser.has_option("run", "experiment")
        if explicit and cfg.run.experiment != experiment:
            raise ConfigError(f"{source}: [run] experiment = {cfg.run.experiment} conflicts with "
                              f"the {experiment!r} command")
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, experiment=experiment))
    validate(cfg)
    return cfg


def load_config(path, experiment: str | None = None) -> RunConfig:
    path = Path(path)
    return loads_config(path.read_text(encoding="utf-8"), source=str(path), experiment=experiment)


def dump_config(cfg: RunConfig) -> str:
    """Fully resolved configuration text; ``loads_config(dump_config(c)) == c``."""
    out = []
    for sec, values in cfg.as_dict().items():
        out.append(f"[{sec}]")
        out.extend(f"{k} = {_format_value(v)}" for k, v in values.items())
        out.append("")
    return "\n".join(out)


@contextmanager
def _section(name: str):
    try:
        yield
    except ConfigError:
        raise
    except (OQSieveError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def _choice(value: str, choices, where: str) -> None:
    if value not in choices:
        raise ConfigError(f"{where} must be one of {', '.join(choices)}, got {value!r}")


@dataclass
class _Plan:
    """Domain objects built from a validated configuration."""

    osc: OscillatorParams
    model: object
    state: GaussianPureState | None = None
    rho0: object = None
    dt: float | None = None
    n_steps: int = 0
    family: np.ndarray | None = None


def _prepare(cfg: RunConfig) -> _Plan:
    exp = cfg.run.experiment
    _choice(exp, EXPERIMENTS, "[run] experiment")
    _choice(cfg.model.kind, MODEL_KINDS, "[model] kind")
    with _section("oscillator"):
        osc = OscillatorParams(cfg.oscillator.m, cfg.oscillator.omega, cfg.oscillator.hbar)
    mc = cfg.model
    with _section("model"):
        if mc.kind == "cl":
            weak = mc.weak_dissipation
            if weak is None:
                weak = exp in ("propagate", "sieve")
            model = CaldeiraLeggettParams(mc.gamma, mc.kT, osc, weak)
        elif mc.kind == "correlated":
            model = CorrelatedNoiseParams(mc.lam, mc.sigma)
        else:
            model = QOMEParams(mc.Gamma, mc.N, osc)
    plan = _Plan(osc, model)
    # every section is checked, including ones the experiment does not use
    with _section("grid"):
        grid = PositionGrid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n)
    if cfg.fock.n_max < 1 or not cfg.fock.leakage_bound > 0:
        raise ConfigError("[fock] needs n_max >= 1 and leakage_bound > 0")

    if exp == "propagate":
        ic = cfg.integrator
        with _section("state"):
            plan.state = GaussianPureState(cfg.state.x0, cfg.state.p0, cfg.state.s)
        with _section("integrator"):
            if ic.record_every < 1 or ic.positivity_every < 1:
                raise ConfigError("[integrator] record_every and positivity_every must be >= 1")
            if not ic.periods > 0:
                raise ConfigError(f"[integrator] periods must be > 0, got {ic.periods!r}")
        if isinstance(model, QOMEParams):
            with _section("fock"):
                with warnings.catch_warnings():
                    warnings.simplefilter("error", TruncationWarning)
                    plan.rho0 = gaussian_to_fock(plan.state, cfg.fock.n_max, osc, cfg.fock.leakage_bound)
            plan.dt = default_fock_dt(osc) if ic.dt is None else ic.dt
            with _section("integrator"):
                check_fock_step(plan.dt, model, cfg.fock.n_max)
        else:
            with _section("grid"):
                psi = make_gaussian_wavefunction(plan.state, grid, osc)
            plan.rho0 = GridDensityMatrix.from_wavefunction(psi, grid)
            plan.dt = default_grid_dt(osc) if ic.dt is None else ic.dt
            with _section("integrator"):
                check_grid_step(plan.dt, osc)
        plan.n_steps = max(1, round(ic.periods * osc.period / plan.dt))
    elif exp == "sieve":
        sc = cfg.sieve
        _choice(sc.measure, ("period", "rate"), "[sieve] measure")
        _choice(sc.path, ("analytic", "numeric"), "[sieve] path")
        with _section("sieve"):
            if not (sc.s_min > 0 and sc.s_max > sc.s_min and sc.points >= 2):
                raise ConfigError("[sieve] needs 0 < s_min < s_max and points >= 2")
            if sc.m_samples is not None and sc.m_samples < 1:
                raise ConfigError(f"[sieve] m_samples must be >= 1, got {sc.m_samples}")
            plan.family = log_family(sc.s_min, sc.s_max, sc.points)
            check_family(plan.family)
    else:
        gc = cfg.generator
        if not isinstance(model, (CaldeiraLeggettParams, QOMEParams)):
            raise ConfigError(f"[model] kind = {mc.kind} has no number-basis generator; use cl or qome")
        with _section("generator"):
            if not 2 <= gc.d <= MAX_GENERATOR_DIM:
                raise ConfigError(f"[generator] d must lie in [2, {MAX_GENERATOR_DIM}], got {gc.d}")
            if gc.m_samples < 1:
                raise ConfigError(f"[generator] m_samples must be >= 1, got {gc.m_samples}")
        if exp == "cp-check":
            _choice(gc.target, ("full", "averaged"), "[generator] target")
    return plan


def validate(cfg: RunConfig) -> None:
    """Check every setting used by ``cfg.run.experiment`` against the library preconditions."""
    _prepare(cfg)


@dataclass
class _Outcome:
    tables: dict  # file name -> (columns, rows)
    documents: dict  # file name -> JSON-compatible object
    flags: list  # degradation flags; exit status 3 under --strict
    warnings: list  # advisory only


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _table_text(columns, rows, sep: str) -> str:
    head = "# " + sep.join(f"{name} [{unit}]" for name, unit in columns)
    body = [sep.join(_fmt(v) for v in row) for row in np.asarray(rows, dtype=float).reshape(-1, len(columns))]
    return "\n".join([head, *body]) + "\n"


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _warning_flags(caught) -> list[str]:
    names = {BoundaryLeakWarning: "boundary-leak", TruncationWarning: "truncation", RegimeWarning: "regime"}
    out = []
    for w in caught:
        for cat, name in names.items():
            if issubclass(w.category, cat) and name not in out:
                out.append(name)
    return out


def _run_propagate(cfg: RunConfig, plan: _Plan) -> _Outcome:
    ic = cfg.integrator
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if isinstance(plan.model, QOMEParams):
            res = propagate_fock(plan.rho0, plan.model, plan.dt, plan.n_steps, record_every=ic.record_every,
                                 positivity_every=ic.positivity_every)
        else:
            res = propagate_grid(plan.rho0, plan.model, dt=plan.dt, n_steps=plan.n_steps, osc=plan.osc,
                                 record_every=ic.record_every)
    flags = list(res.flags)
    advisories = [w for w in _warning_flags(caught) if w not in flags]
    tables = {"propagate_series.csv": (res.COLUMNS, res.table())}
    if res.positivity_times.size:
        tables["propagate_positivity.csv"] = ((("time", "time"), ("min_eigenvalue", "1")),
                                              np.column_stack([res.positivity_times, res.min_eigenvalue]))
    summary = {
        "dt": plan.dt,
        "n_steps": plan.n_steps,
        "final_time": float(res.times[-1]),
        "final_linear_entropy": float(res.linear_entropy[-1]),
        "max_trace_drift": float(np.max(np.abs(res.trace_drift))),
        "max_hermiticity_defect": float(np.max(res.hermiticity_defect)),
        "representation": "fock" if isinstance(plan.model, QOMEParams) else "grid",
    }
    if res.min_eigenvalue.size:
        summary["min_eigenvalue"] = float(np.min(res.min_eigenvalue))
    return _Outcome(tables, {"propagate_summary.json": summary}, flags, advisories)


def _run_sieve(cfg: RunConfig, plan: _Plan) -> _Outcome:
    sc = cfg.sieve
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = run_sieve(plan.family, plan.model, sc.measure, sc.path, plan.osc, m_samples=sc.m_samples)
    name = "period_averaged_rate" if sc.measure == "period" else "rate"
    tables = {"sieve_landscape.csv": ((("s", "1"), (name, "1/time")), np.column_stack([res.s, res.values]))}
    summary = {
        "measure": res.measure,
        "path": res.path,
        "model": res.model,
        "points": int(res.s.size),
        "argmin_index": res.argmin,
        "argmin_s": float(res.s[res.argmin]),
        "best_s": res.best_s,
        "min_value": float(res.values[res.argmin]),
        "flatness_ratio": res.flatness_ratio,
        "flat": res.flat,
        "tie": res.tie,
        "regime_warnings": res.warnings,
        "metadata": res.metadata,
    }
    advisories = _warning_flags(caught)
    if res.warnings and "regime" not in advisories:
        advisories.append("regime")
    return _Outcome(tables, {"sieve_summary.json": summary}, [], advisories)


def _environment_generator(plan: _Plan, d: int):
    return fock_generator(plan.model, d - 1, include_hamiltonian=False)


def _run_average(cfg: RunConfig, plan: _Plan) -> _Outcome:
    gc = cfg.generator
    osc = plan.osc
    H = hamiltonian_fock(gc.d - 1, osc)
    env = _environment_generator(plan, gc.d)
    avg = average_generator(env, H, osc.omega, gc.m_samples, osc.hbar)
    avg8 = average_generator(env, H, osc.omega, 8, osc.hbar)
    fit = fit_qome_form(avg, osc)
    summary = {
        "d": gc.d,
        "m_samples": gc.m_samples,
        "fitted_Gamma": None if fit.params is None else fit.params.Gamma,
        "fitted_N": None if fit.params is None else fit.params.N,
        "residual": fit.residual,
        "mismatch": fit.mismatch if math.isfinite(fit.mismatch) else None,
        "m8_difference": float(np.linalg.norm(avg.matrix - avg8.matrix) / max(avg.norm(), 1e-300)),
        "coefficients": {name: [float(c.real), float(c.imag)]
                         for name, c in zip(("diffusion", "friction", "squeeze"), fit.coefficients)},
        "model": describe(plan.model),
    }
    if isinstance(plan.model, CaldeiraLeggettParams):
        summary["expected_Gamma"] = 2 * plan.model.gamma
        summary["expected_N"] = plan.model.kT / (osc.hbar * osc.omega) - 0.5
    flags = [] if max(fit.residual, fit.mismatch) <= FIT_TOLERANCE else ["fit-residual"]
    coef = np.column_stack([np.arange(3), fit.coefficients.real, fit.coefficients.imag])
    tables = {"average_coefficients.csv": ((("structure", "index"), ("re", "1/time"), ("im", "1/time")), coef)}
    return _Outcome(tables, {"average_summary.json": summary}, flags, [])


def _run_cp(cfg: RunConfig, plan: _Plan) -> _Outcome:
    gc = cfg.generator
    osc = plan.osc
    if gc.target == "full":
        L = fock_generator(plan.model, gc.d - 1)
    else:
        H = hamiltonian_fock(gc.d - 1, osc)
        L = hamiltonian_superoperator(H, osc.hbar) + average_generator(
            _environment_generator(plan, gc.d), H, osc.omega, gc.m_samples, osc.hbar)
    chk = cp_check(L)
    verdict = {
        "target": gc.target,
        "d": gc.d,
        "model": describe(plan.model),
        "min_eigenvalue": chk.min_eigenvalue,
        "tolerance": chk.tolerance,
        "is_gksl": chk.is_gksl,
    }
    tables = {"cp_spectrum.csv": ((("index", "1"), ("eigenvalue", "1/time")),
                                  np.column_stack([np.arange(chk.spectrum.size), np.sort(chk.spectrum)]))}
    return _Outcome(tables, {"cp_verdict.json": verdict}, [], [])


_RUNNERS = {"propagate": _run_propagate, "sieve": _run_sieve, "average-check": _run_average, "cp-check": _run_cp}

# csv source, plot file, columns kept
_PLOTDATA = {
    "propagate": [("propagate_series.csv", "propagate_entropy.dat", ("time", "linear_entropy")),
                  ("propagate_series.csv", "propagate_moments.dat", ("time", "mean_x", "mean_p", "var_x", "var_p"))],
    "sieve": [("sieve_landscape.csv", "sieve_landscape.dat", None)],
    "average-check": [("average_coefficients.csv", "average_coefficients.dat", None)],
    "cp-check": [("cp_spectrum.csv", "cp_spectrum.dat", ("eigenvalue",))],
}


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _versions() -> dict:
    return {"oqsieve": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def run(cfg: RunConfig, *, out_dir=None, strict: bool = False) -> int:
    """Execute ``cfg`` and write its results directory; returns the process exit status.

    All computation happens before the first file is written. Degradation
    flags are recorded in the metadata and turn into exit status 3 under
    ``strict``.
    """
    plan = _prepare(cfg)
    out = Path(cfg.run.out if out_dir is None else out_dir)
    if out_dir is not None:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, out=str(out_dir)))
    start = time.perf_counter()
    outcome = _RUNNERS[cfg.run.experiment](cfg, plan)
    wall = time.perf_counter() - start
    status = EXIT_DEGRADED if strict and outcome.flags else EXIT_OK
    files = sorted([*outcome.tables, *outcome.documents, "config.ini"])
    meta = {
        "experiment": cfg.run.experiment,
        "config": cfg.as_dict(),
        "versions": _versions(),
        "wall_time_s": wall,
        "flags": outcome.flags,
        "warnings": outcome.warnings,
        "strict": strict,
        "exit_status": status,
        "files": files,
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "config.ini", dump_config(cfg))
        for name in sorted(outcome.tables):
            columns, rows = outcome.tables[name]
            _write(out / name, _table_text(columns, rows, ","))
        for name in sorted(outcome.documents):
            _write(out / name, _json_text(outcome.documents[name]))
        _write(out / "metadata.json", _json_text(meta))
        emit_plotdata(out)
    except OSError as exc:
        print(f"oqsieve: cannot write results to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for flag in outcome.flags:
        print(f"oqsieve: degradation flag: {flag}", file=sys.stderr)
    for name in outcome.warnings:
        print(f"oqsieve: warning: {name}", file=sys.stderr)
    return status


def _read_table(path: Path):
    if not path.is_file():
        raise MissingArtifactError(f"missing run artifact {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
    if not header.startswith("#"):
        raise MissingArtifactError(f"{path} lacks its '#' column header")
    columns = []
    for item in header[1:].split(","):
        m = re.match(r"\s*(\S+)\s*\[(.*)\]\s*$", item)
        if m is None:
            raise MissingArtifactError(f"{path} has a malformed column header {item!r}")
        columns.append((m.group(1), m.group(2)))
    rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return columns, rows


def emit_plotdata(out_dir) -> list[Path]:
    """Write whitespace-separated ``<experiment>_<series>.dat`` files from a results directory."""
    out = Path(out_dir)
    meta_path = out / "metadata.json"
    if not meta_path.is_file():
        raise MissingArtifactError(f"missing run artifact {meta_path}")
    experiment = json.loads(meta_path.read_text(encoding="utf-8"))["experiment"]
    written = []
    for source, target, keep in _PLOTDATA[experiment]:
        columns, rows = _read_table(out / source)
        names = [c for c, _ in columns]
        idx = list(range(len(columns))) if keep is None else [names.index(k) for k in keep]
        sel = rows[:, idx]
        if target == "cp_spectrum.dat":
            sel = np.sort(sel, axis=0)
        _write(out / target, _table_text([columns[i] for i in idx], sel, " "))
        written.append(out / target)
    return written


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration file (INI); defaults if omitted")
    common.add_argument("--out", help="results directory, overrides [run] out")
    common.add_argument("--strict", action="store_true", help="exit with status 3 on degradation flags")
    parser = argparse.ArgumentParser(prog="oqsieve", description="Oscillator decoherence experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"propagate": "propagate a Gaussian packet under the configured environment",
             "sieve": "entropy landscape over squeezed Gaussian packets",
             "average-check": "average the number-basis generator over a free period and fit the QOME form",
             "cp-check": "complete-positivity test of a number-basis generator"}
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.config is None:
            cfg = loads_config("", source="<defaults>", experiment=args.command)
        else:
            cfg = load_config(args.config, experiment=args.command)
    except ConfigError as exc:
        print(f"oqsieve: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"oqsieve: cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(cfg, out_dir=args.out, strict=args.strict)


if __name__ == "__main__":
    sys.exit(main())

"""Scenario runner.

Parses strict JSON scenario configs, runs the system-space and enlarged-space
evolutions side by side, executes the requested verification checks, and
writes a deterministic CSV time series plus a check report.

Config schema (unknown keys are rejected)::

    {
      "name": "single-decay",
      "system": {                        # exactly one of system/random_system
        "d_s": 1, "d_f": 1,
        "H":     [[[1.0, 0.0]]],         # matrices: row-major nested lists,
        "Gamma": [[[1.0, 0.0]]],         # each entry a [re, im] pair
        "A":     []
      },
      "random_system": {"seed": 42, "d_s": 2, "n_lindblad": 1, "rank": 2},
      "initial_state": [[[1.0, 0.0]]],   # required with "system"; generated
                                         # from the seed otherwise
      "integrator": {"dt": 0.001, "t_max": 10.0, "sample_stride": 10,
                     "method": "rk4"},
      "checks": ["trace", "positivity", "cp", "equivalence", "asymptotics"],
      "output": "out"
    }

Exit codes: 0 success, 1 check failure, 2 config/parse error, 3 numerical
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis
from .errors import (
    ConfigError,
    NumericsError,
    ParseError,
    ToolkitError,
    ValidationError,
)
from .evolution import (
    IntegratorConfig,
    Trajectory,
    evolve_enlarged,
    evolve_wwa,
)
from .linalg import expm, frobenius, unvec, vec
from .model import (
    SystemSpec,
    assemble_liouvillian,
    build_decay_operator,
    decompose_gamma,
    embed_operators,
    embed_state,
    validate_spec,
)
from .randmodel import random_system

CHECK_NAMES = ("trace", "positivity", "cp", "equivalence", "asymptotics")
# Times at which complete positivity is certified (clipped to t_max).
CP_SAMPLE_TIMES = (0.1, 1.0, 5.0)

__all__ = [
    "RunResult",
    "ScenarioConfig",
    "builtin_scenario_path",
    "main",
    "parse_config",
    "run_scenario",
    "serialize_config",
    "write_timeseries",
]


@dataclass(eq=False)
class ScenarioConfig:
    name: str
    system: SystemSpec
    initial_state: np.ndarray
    integrator: IntegratorConfig
    checks: tuple[str, ...]
    output: str
    seed: int | None = None


@dataclass(eq=False)
class RunResult:
    name: str
    table: tuple[tuple[float, ...], ...]
    reports: tuple[analysis.VerificationReport, ...]
    exit_status: int
    enlarged: Trajectory
    wwa: Trajectory
    timeseries_path: Path | None = None
    report_path: Path | None = None


# -- parsing ----------------------------------------------------------------


def _expect_mapping(node, where: str) -> dict:
    if not isinstance(node, dict):
        raise ParseError(f"{where}: expected an object")
    return node


def _check_keys(node: dict, allowed: set[str], required: set[str], where: str) -> None:
    for key in node:
        if key not in allowed:
            raise ParseError(f"{where}: unknown key {key!r}")
    for key in required:
        if key not in node:
            raise ParseError(f"{where}: missing required key {key!r}")


def _parse_int(node, where: str, minimum: int | None = None) -> int:
    if not isinstance(node, int) or isinstance(node, bool):
        raise ParseError(f"{where}: expected an integer")
    if minimum is not None and node < minimum:
        raise ParseError(f"{where}: must be >= {minimum}")
    return node


def _parse_number(node, where: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ParseError(f"{where}: expected a number")
    return float(node)


def _parse_matrix(node, where: str) -> np.ndarray:
    if not isinstance(node, list) or not node:
        raise ParseError(f"{where}: expected a non-empty list of rows")
    rows = []
    width = None
    for i, row in enumerate(node):
        if not isinstance(row, list) or not row:
            raise ParseError(f"{where}[{i}]: expected a non-empty row")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{where}[{i}]: ragged row (expected {width} entries)")
        entries = []
        for j, ent in enumerate(row):
            if (
                not isinstance(ent, list)
                or len(ent) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in ent)
            ):
                raise ParseError(f"{where}[{i}][{j}]: expected a [re, im] pair")
            entries.append(complex(ent[0], ent[1]))
        rows.append(entries)
    return np.array(rows, dtype=np.complex128)


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _validate_initial_state(rho: np.ndarray, d_s: int) -> np.ndarray:
    if rho.shape != (d_s, d_s):
        raise ValidationError(
            f"initial_state has shape {rho.shape}, expected {(d_s, d_s)}"
        )
    dev = float(np.linalg.norm(rho - rho.conj().T))
    if dev > 1e-9 * max(1.0, frobenius(rho)):
        raise ValidationError(f"initial_state is not hermitian (deviation {dev:.3e})")
    sym = 0.5 * (rho + rho.conj().T)
    low = float(np.linalg.eigvalsh(sym)[0])
    if low < -1e-9:
        raise ValidationError(f"initial_state has eigenvalue {low:.3e} < -1e-9")
    gap = abs(float(np.trace(sym).real) - 1.0)
    if gap > 1e-9:
        raise ValidationError(f"initial_state trace deviates from 1 by {gap:.3e}")
    return rho


def parse_config(text: str, seed: int | None = None) -> ScenarioConfig:
    """Strict parse of a scenario config.

    ``seed`` overrides the seed of a ``random_system`` scenario; passing it
    for an explicit-system scenario is an error.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(
            f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e
    raw = _expect_mapping(raw, "config")
    _check_keys(
        raw,
        {"name", "system", "random_system", "initial_state", "integrator", "checks", "output"},
        {"name", "integrator"},
        "config",
    )
    if ("system" in raw) == ("random_system" in raw):
        raise ParseError("config: exactly one of 'system'/'random_system' is required")
    name = raw["name"]
    if not isinstance(name, str) or not name:
        raise ParseError("config.name: expected a non-empty string")

    used_seed: int | None = None
    if "system" in raw:
        if seed is not None:
            raise ParseError("--seed is only valid for random_system scenarios")
        sysnode = _expect_mapping(raw["system"], "config.system")
        _check_keys(
            sysnode, {"d_s", "d_f", "H", "Gamma", "A"}, {"d_s", "d_f", "H", "Gamma"},
            "config.system",
        )
        d_s = _parse_int(sysnode["d_s"], "config.system.d_s", 1)
        d_f = _parse_int(sysnode["d_f"], "config.system.d_f", 1)
        h = _parse_matrix(sysnode["H"], "config.system.H")
        gamma = _parse_matrix(sysnode["Gamma"], "config.system.Gamma")
        a_node = sysnode.get("A", [])
        if not isinstance(a_node, list):
            raise ParseError("config.system.A: expected a list of matrices")
        ops = tuple(
            _parse_matrix(a, f"config.system.A[{k}]") for k, a in enumerate(a_node)
        )
        try:
            spec = SystemSpec(d_s=d_s, d_f=d_f, hamiltonian=h, decay_matrix=gamma, lindblad_ops=ops)
        except ToolkitError as e:
            raise ValidationError(str(e)) from e
        if "initial_state" not in raw:
            raise ParseError("config: 'initial_state' is required with 'system'")
        rho0 = _parse_matrix(raw["initial_state"], "config.initial_state")
    else:
        rnode = _expect_mapping(raw["random_system"], "config.random_system")
        _check_keys(rnode, {"seed", "d_s", "n_lindblad", "rank"}, {"seed", "d_s"}, "config.random_system")
        used_seed = seed if seed is not None else _parse_int(rnode["seed"], "config.random_system.seed")
        d_s = _parse_int(rnode["d_s"], "config.random_system.d_s", 1)
        n_lind = _parse_int(rnode.get("n_lindblad", 1), "config.random_system.n_lindblad", 0)
        rank = rnode.get("rank")
        if rank is not None:
            rank = _parse_int(rank, "config.random_system.rank", 1)
        try:
            spec, rho0 = random_system(used_seed, d_s, n_lindblad=n_lind, rank=rank)
        except ValueError as e:
            raise ParseError(f"config.random_system: {e}") from e
        if "initial_state" in raw:
            rho0 = _parse_matrix(raw["initial_state"], "config.initial_state")

    try:
        validate_spec(spec)
    except ToolkitError as e:
        raise ValidationError(str(e)) from e
    rho0 = _validate_initial_state(rho0, spec.d_s)

    inode = _expect_mapping(raw["integrator"], "config.integrator")
    _check_keys(inode, {"dt", "t_max", "sample_stride", "method"}, {"dt", "t_max"}, "config.integrator")
    method = inode.get("method", "rk4")
    if not isinstance(method, str):
        raise ParseError("config.integrator.method: expected a string")
    try:
        integrator = IntegratorConfig(
            dt=_parse_number(inode["dt"], "config.integrator.dt"),
            t_max=_parse_number(inode["t_max"], "config.integrator.t_max"),
            sample_stride=_parse_int(inode.get("sample_stride", 1), "config.integrator.sample_stride", 1),
            method=method,
        )
    except ValueError as e:
        raise ParseError(f"config.integrator: {e}") from e

    checks_node = raw.get("checks", [])
    if not isinstance(checks_node, list):
        raise ParseError("config.checks: expected a list of check names")
    checks = []
    for c in checks_node:
        if c not in CHECK_NAMES:
            raise ParseError(f"config.checks: unknown check {c!r} (known: {', '.join(CHECK_NAMES)})")
        checks.append(c)

    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        raise ParseError("config.output: expected a non-empty string")

    return ScenarioConfig(
        name=name,
        system=spec,
        initial_state=rho0,
        integrator=integrator,
        checks=tuple(checks),
        output=output,
        seed=used_seed,
    )


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical JSON form of a config; always uses the explicit system so
    that parse(serialize(cfg)) reproduces ``cfg``."""
    doc = {
        "name": cfg.name,
        "system": {
            "d_s": cfg.system.d_s,
            "d_f": cfg.system.d_f,
            "H": _matrix_to_json(cfg.system.hamiltonian),
            "Gamma": _matrix_to_json(cfg.system.decay_matrix),
            "A": [_matrix_to_json(a) for a in cfg.system.lindblad_ops],
        },
        "initial_state": _matrix_to_json(cfg.initial_state),
        "integrator": {
            "dt": cfg.integrator.dt,
            "t_max": cfg.integrator.t_max,
            "sample_stride": cfg.integrator.sample_stride,
            "method": cfg.integrator.method,
        },
        "checks": list(cfg.checks),
        "output": cfg.output,
    }
    return json.dumps(doc, indent=2) + "\n"


# -- checks ------------------------------------------------------------------


class _RunContext:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.spec = cfg.system
        self.dec = decompose_gamma(self.spec.decay_matrix)
        self.decay = build_decay_operator(self.dec, self.spec.d_f)
        self.model = embed_operators(self.spec, self.decay)
        self.liouv = assemble_liouvillian(
            self.model.hamiltonian, self.model.lindblad_ops, self.model.decay_op
        )
        self.enlarged: Trajectory | None = None
        self.wwa: Trajectory | None = None


def _restricted_map(ctx: _RunContext, t: float):
    # rho_ss(0) -> system block of the exactly propagated enlarged state.
    prop = expm(ctx.liouv.matrix * t)
    d_s, d_f = ctx.spec.d_s, ctx.spec.d_f

    def apply(rho_ss):
        full = embed_state(rho_ss, d_f)
        out = unvec(prop @ vec(full), ctx.model.d_tot)
        return out[:d_s, :d_s]

    return apply


def _check_trace(ctx: _RunContext) -> analysis.VerificationReport:
    return analysis.check_trace(ctx.enlarged, tol=1e-8)


def _check_positivity(ctx: _RunContext) -> analysis.VerificationReport:
    return analysis.check_positivity(ctx.enlarged, tol=1e-8)


def _check_equivalence(ctx: _RunContext) -> analysis.VerificationReport:
    worst = 0.0
    for i in range(len(ctx.enlarged)):
        delta = ctx.enlarged.blocks(i).rho_ss - ctx.wwa.states[i]
        worst = max(worst, frobenius(delta))
    return analysis.VerificationReport(
        name="equivalence",
        status="pass" if worst <= 1e-8 else "fail",
        measured=worst,
        tolerance=1e-8,
        meta={"n_samples": len(ctx.enlarged)},
    )


def _check_cp(ctx: _RunContext) -> analysis.VerificationReport:
    t_max = ctx.cfg.integrator.t_max
    times = [t for t in CP_SAMPLE_TIMES if t <= t_max] or [max(t_max, 1e-3)]
    worst = 0.0
    low = np.inf
    for t in times:
        choi = analysis.choi_matrix(_restricted_map(ctx, t), ctx.spec.d_s, t=t)
        rep = analysis.check_cp(choi, tol=1e-8)
        worst = max(worst, rep.measured)
        low = min(low, rep.meta["min_eigenvalue"])
    return analysis.VerificationReport(
        name="cp",
        status="pass" if worst <= 1e-8 else "fail",
        measured=worst,
        tolerance=1e-8,
        meta={"times": times, "min_eigenvalue": float(low)},
    )


def _check_asymptotics(ctx: _RunContext) -> analysis.VerificationReport:
    if ctx.dec.null_dim > 0:
        return analysis.asymptotics_check(ctx.enlarged, ctx.dec, ctx.spec)
    # Reach 20/gamma0 with the exact propagator regardless of the configured
    # integrator; a fixed-step run to that horizon would be wasteful.
    gamma0 = float(ctx.dec.rates.min())
    horizon = 20.0 / gamma0
    n = 200
    h = horizon / n
    step = expm(ctx.liouv.matrix * h)
    v = vec(embed_state(ctx.cfg.initial_state, ctx.spec.d_f))
    times = [0.0]
    states = [unvec(v, ctx.model.d_tot)]
    for k in range(1, n + 1):
        v = step @ v
        times.append(k * h)
        states.append(unvec(v, ctx.model.d_tot))
    traj = Trajectory(times=np.array(times), states=tuple(states), d_s=ctx.spec.d_s)
    return analysis.asymptotics_check(traj, ctx.dec, ctx.spec)


CHECKS = {
    "trace": _check_trace,
    "positivity": _check_positivity,
    "cp": _check_cp,
    "equivalence": _check_equivalence,
    "asymptotics": _check_asymptotics,
}


# -- running -----------------------------------------------------------------


def _format(x: float) -> str:
    return f"{x:.17g}"


def _sample_row(t: float, rho: np.ndarray, d_s: int) -> tuple[float, ...]:
    tr_ss = float(np.trace(rho[:d_s, :d_s]).real)
    tr_ff = float(np.trace(rho[d_s:, d_s:]).real)
    sym = 0.5 * (rho + rho.conj().T)
    delta = float(np.trace(sym @ sym).real)
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    return (t, tr_ss, tr_ff, tr_ss + tr_ff, delta, min_eig)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)


def write_timeseries(result: RunResult, path) -> None:
    """CSV with header t,tr_rho_ss,tr_rho_ff,tr_total,delta,min_eig; one row
    per sample, 17-significant-digit floats, LF line endings, atomic write."""
    lines = ["t,tr_rho_ss,tr_rho_ff,tr_total,delta,min_eig"]
    for row in result.table:
        lines.append(",".join(_format(x) for x in row))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_report(result: RunResult, path) -> None:
    """One line per check: name,pass|fail,measured,tolerance.  A
    not-applicable check is recorded as a pass (it is not a failure)."""
    lines = []
    for rep in result.reports:
        verdict = "fail" if rep.status == "fail" else "pass"
        lines.append(f"{rep.name},{verdict},{_format(rep.measured)},{_format(rep.tolerance)}")
    _atomic_write(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def run_scenario(cfg: ScenarioConfig, out_dir=None, write: bool = True) -> RunResult:
    """Run both evolutions from the block-embedded initial state, execute the
    requested checks, and (by default) write the CSV and report files."""
    ctx = _RunContext(cfg)
    gen_scale = float(np.linalg.norm(ctx.liouv.matrix, 2))
    if cfg.integrator.method == "rk4" and cfg.integrator.dt * gen_scale > 0.1:
        warnings.warn(
            f"dt*|generator| = {cfg.integrator.dt * gen_scale:.3g} > 0.1; "
            "fixed-step integration may be inaccurate",
            stacklevel=2,
        )
    rho0_full = embed_state(cfg.initial_state, ctx.spec.d_f)
    ctx.enlarged = evolve_enlarged(ctx.model, rho0_full, cfg.integrator)
    ctx.wwa = evolve_wwa(ctx.spec, cfg.initial_state, cfg.integrator)
    table = tuple(
        _sample_row(float(ctx.enlarged.times[i]), ctx.enlarged.states[i], ctx.spec.d_s)
        for i in range(len(ctx.enlarged))
    )
    reports = tuple(CHECKS[name](ctx) for name in cfg.checks)
    exit_status = 0 if all(r.status != "fail" for r in reports) else 1
    result = RunResult(
        name=cfg.name,
        table=table,
        reports=reports,
        exit_status=exit_status,
        enlarged=ctx.enlarged,
        wwa=ctx.wwa,
    )
    if write:
        base = Path(out_dir) if out_dir is not None else Path(cfg.output)
        result.timeseries_path = base / f"{cfg.name}_timeseries.csv"
        result.report_path = base / f"{cfg.name}_report.csv"
        write_timeseries(result, result.timeseries_path)
        write_report(result, result.report_path)
    return result


# -- command line ------------------------------------------------------------


def builtin_scenario_path(name: str) -> Path:
    """Filesystem path of a shipped scenario config."""
    res = resources.files("opendecay") / "scenarios" / f"{name.replace('-', '_')}.json"
    if not res.is_file():
        raise ParseError(f"unknown built-in scenario {name!r}")
    return Path(str(res))


def _load_config_text(arg: str) -> str:
    path = Path(arg)
    if path.is_file():
        try:
            return path.read_text(encoding="utf-8")
        except OSError as e:
            raise ParseError(f"cannot read config {arg!r}: {e}") from e
    try:
        return builtin_scenario_path(arg).read_text(encoding="utf-8")
    except ParseError:
        raise ParseError(f"config not found: {arg!r} (not a file or built-in name)") from None


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    integ = cfg.integrator
    if args.method is not None or args.t_max is not None or args.dt is not None:
        try:
            integ = IntegratorConfig(
                dt=args.dt if args.dt is not None else integ.dt,
                t_max=args.t_max if args.t_max is not None else integ.t_max,
                sample_stride=integ.sample_stride,
                method=args.method if args.method is not None else integ.method,
            )
        except ValueError as e:
            raise ParseError(f"flag override: {e}") from e
    checks = cfg.checks
    if args.checks is not None:
        names = [c.strip() for c in args.checks.split(",") if c.strip()]
        for c in names:
            if c not in CHECK_NAMES:
                raise ParseError(f"--checks: unknown check {c!r}")
        checks = tuple(names)
    return replace(cfg, integrator=integ, checks=checks)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="opendecay",
        description="Simulate and verify open quantum systems with unstable states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run a scenario config")
    sim.add_argument("config", help="path to a scenario JSON file, or a built-in scenario name")
    sim.add_argument("--out", metavar="DIR", default=None, help="output directory (overrides config)")
    sim.add_argument("--method", choices=("rk4", "exact"), default=None)
    sim.add_argument("--t-max", dest="t_max", type=float, default=None)
    sim.add_argument("--dt", type=float, default=None)
    sim.add_argument("--checks", default=None, help="comma-separated check names")
    sim.add_argument("--seed", type=int, default=None, help="seed override for random_system scenarios")
    args = parser.parse_args(argv)

    try:
        text = _load_config_text(args.config)
        cfg = parse_config(text, seed=args.seed)
        cfg = _apply_overrides(cfg, args)
        result = run_scenario(cfg, out_dir=args.out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericsError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    except ToolkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3

    for rep in result.reports:
        print(f"{rep.name}: {rep.status} (measured={rep.measured:.3e}, tolerance={rep.tolerance:.3e})")
    print(f"wrote {result.timeseries_path}")
    print(f"wrote {result.report_path}")
    return result.exit_status


def entry() -> None:
    sys.exit(main())

"""Command-line front end: config handling, dispatch, CSV/JSON emission.

Verbs
-----
solve        Dirichlet boundary-value solve of the discrete field equations;
             writes the solution field as CSV, the per-cell momenta as a
             sibling ``.momenta.csv``, and a JSON report as a sibling
             ``.report.json`` (the report is also printed to stdout).
check-maps   Canonical-map identity suite (the alpha/kappa pairing, the exact
             beta agreement, the two-form pairing) over seeded random points.
legendre     Forward/inverse Legendre round trips for a catalog model.
phase-check  Velocity-side vs momentum-side phase residual agreement on
             members generated from either side.
action       Evaluate the discrete action of a field read from CSV.

Configuration is accepted both as command-line flags and as a single JSON
file (``--config``); explicit flags override file values.  All randomness is
drawn from ``numpy.random.default_rng(seed)``, so identical configurations
produce byte-identical outputs.

File formats
------------
Field CSV: header ``x,y,comp0..comp{m-1}``, one row per grid node in
row-major order, every float printed with 17 significant digits; nodes
outside a masked domain carry ``nan`` values so the file stays rectangular.
Momentum CSV: header ``cell_i,cell_j,p1_0..p1_{m-1},p2_0..p2_{m-1}``, one row
per active cell in row-major order.  JSON reports are emitted with sorted
keys.  All file I/O is UTF-8.

Exit codes: 0 success, 2 configuration/validation failure, 3 numerical
failure (non-convergence or a domain violation).

The environment variable FIELD_TRIPLE_THREADS, when set, must be a positive
integer and is accepted as an upper bound on worker threads; the current
implementation is single-threaded throughout, so any valid cap is honoured
trivially and never affects output bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .bundles import (
    Jet,
    alpha,
    beta,
    beta_tilde,
    kappa,
    omega2_pair,
    pair_covector,
    pair_jet,
    pair_phase_covector,
    project_to_jet,
    project_to_phase,
    random_jet,
    random_jet_tangent,
    random_phase,
    random_phase_jet,
    random_phase_tangent,
)
from .errors import (
    DomainError,
    ExprSyntaxError,
    FieldTripleError,
    InvalidInputError,
    InvalidParameterError,
    NoConvergenceError,
    SingularJacobianError,
)
from .expr import evaluate, parse_expr
from .grid import (
    Grid,
    GridField,
    GridMomentum,
    OUTSIDE,
    boundary_momentum,
    discrete_action,
    solve_dirichlet,
)
from .hamiltonian import dH, ham_dynamics_member, ham_phase_residual
from .lagrangian import (
    legendre,
    phase_dynamics_member,
    phase_relation_residual,
)
from .models import (
    MODEL_NAMES,
    get_hamiltonian,
    get_lagrangian,
    sample_admissible_string_jet,
    sample_admissible_string_phase,
)

__all__ = ["RunConfig", "run", "main"]

_COMMANDS = ("solve", "check-maps", "legendre", "phase-check", "action")
_DOMAINS = ("square", "disc-mask")
_THREADS_VAR = "FIELD_TRIPLE_THREADS"


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved command invocation.

    ``tol`` is the command's acceptance tolerance (Newton tolerance for
    solve); None selects the per-command default.  ``bc`` holds one
    expression string per field component for solve.  ``field`` is the input
    CSV path for the action command.
    """

    command: str
    model: str = "harmonic"
    m: int | None = None
    grid: tuple[int, int] = (17, 17)
    domain: str = "square"
    bc: tuple[str, ...] = ()
    tol: float | None = None
    max_iter: int = 50
    seed: int = 0
    points: int = 1000
    out: str | None = None
    field: str | None = None

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise InvalidParameterError(f"unknown command {self.command!r}")
        if self.domain not in _DOMAINS:
            raise InvalidParameterError(
                f"domain must be one of {_DOMAINS}, got {self.domain!r}")
        nx, ny = self.grid
        if nx < 3 or ny < 3:
            raise InvalidParameterError(f"grid must be at least 3x3, got {nx}x{ny}")
        if self.tol is not None and not self.tol > 0.0:
            raise InvalidParameterError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.points < 1:
            raise InvalidParameterError(f"points must be >= 1, got {self.points}")
        if self.m is not None and self.m < 1:
            raise InvalidParameterError(f"m must be >= 1, got {self.m}")


# ---------------------------------------------------------------------------
# Formatting helpers


def _fmt(v: float) -> str:
    return "%.17g" % v


def _grid_str(grid: Grid) -> str:
    return f"{grid.nx}x{grid.ny}"


def _parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() and p for p in parts):
        raise InvalidParameterError(
            f"grid must look like '33x33', got {text!r}")
    return int(parts[0]), int(parts[1])


def _report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_field_csv(path: str, fld: GridField) -> None:
    """Field CSV: x,y,comp0.. rows over all nodes in row-major order."""
    grid = fld.grid
    m = fld.values.shape[2]
    x, y = grid.node_coords()
    lines = ["x,y," + ",".join(f"comp{k}" for k in range(m))]
    for i in range(grid.nx):
        for j in range(grid.ny):
            vals = fld.values[i, j]
            lines.append(
                _fmt(x[i, j]) + "," + _fmt(y[i, j]) + ","
                + ",".join(_fmt(v) for v in vals))
    _write_text(path, "\n".join(lines) + "\n")


def read_field_csv(path: str, grid: Grid, m: int) -> GridField:
    """Read a field CSV produced by write_field_csv back onto a grid."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    expect_header = "x,y," + ",".join(f"comp{k}" for k in range(m))
    if not lines or lines[0] != expect_header:
        raise InvalidInputError(
            f"field CSV header mismatch: expected {expect_header!r}")
    rows = [ln for ln in lines[1:] if ln]
    if len(rows) != grid.nx * grid.ny:
        raise InvalidInputError(
            f"field CSV has {len(rows)} rows, expected {grid.nx * grid.ny}")
    values = np.empty((grid.nx, grid.ny, m))
    k = 0
    for i in range(grid.nx):
        for j in range(grid.ny):
            parts = rows[k].split(",")
            if len(parts) != 2 + m:
                raise InvalidInputError(
                    f"field CSV row {k + 2} has {len(parts)} columns, expected {2 + m}")
            try:
                values[i, j] = [float(p) for p in parts[2:]]
            except ValueError:
                raise InvalidInputError(
                    f"field CSV row {k + 2} has a non-numeric value") from None
            k += 1
    values[grid.mask == OUTSIDE] = np.nan
    return GridField(grid, values)


def write_momentum_csv(path: str, grid: Grid, mom: GridMomentum) -> None:
    """Momentum CSV: cell_i,cell_j,p1_*,p2_* rows over active cells."""
    m = mom.p1.shape[2]
    header = ("cell_i,cell_j,"
              + ",".join(f"p1_{k}" for k in range(m)) + ","
              + ",".join(f"p2_{k}" for k in range(m)))
    lines = [header]
    for ci, cj in grid.active_cells:
        lines.append(
            f"{ci},{cj},"
            + ",".join(_fmt(v) for v in mom.p1[ci, cj]) + ","
            + ",".join(_fmt(v) for v in mom.p2[ci, cj]))
    _write_text(path, "\n".join(lines) + "\n")


def _sibling(path: str, suffix: str) -> str:
    stem, ext = os.path.splitext(path)
    return stem + suffix


def _make_grid(cfg: RunConfig) -> Grid:
    nx, ny = cfg.grid
    if cfg.domain == "disc-mask":
        return Grid.disc_mask(nx, ny)
    return Grid.square(nx, ny)


# ---------------------------------------------------------------------------
# Commands


def _run_solve(cfg: RunConfig) -> dict:
    model = get_lagrangian(cfg.model, cfg.m)
    if len(cfg.bc) != model.m:
        raise InvalidParameterError(
            f"model {model.name!r} has m={model.m} components but "
            f"{len(cfg.bc)} boundary expressions were given")
    if cfg.out is None:
        raise InvalidParameterError("solve requires --out")
    exprs = [parse_expr(src) for src in cfg.bc]
    grid = _make_grid(cfg)
    x, y = grid.node_coords()

    values = np.full((grid.nx, grid.ny, model.m), np.nan)
    for i in range(grid.nx):
        for j in range(grid.ny):
            if grid.mask[i, j] == OUTSIDE:
                continue
            values[i, j] = [evaluate(e, float(x[i, j]), float(y[i, j]))
                            for e in exprs]
    initial = GridField(grid, values)
    bnodes = grid.boundary_nodes
    bvals = values[bnodes[:, 0], bnodes[:, 1]]

    tol = 1e-10 if cfg.tol is None else cfg.tol
    solution, rep = solve_dirichlet(model, grid, bvals, initial,
                                    tol=tol, max_iter=cfg.max_iter)
    mom, _ = boundary_momentum(model, solution)

    inside = grid.mask != OUTSIDE
    max_error = float(np.max(np.abs(solution.values[inside] - initial.values[inside])))

    write_field_csv(cfg.out, solution)
    write_momentum_csv(_sibling(cfg.out, ".momenta.csv"), grid, mom)
    report = {
        "command": cfg.command,
        "model": model.name,
        "grid": _grid_str(grid),
        "iterations": rep.iterations,
        "final_residual": rep.final_residual,
        "action": rep.action,
        "max_error": max_error,
        "pass": bool(rep.converged),
    }
    _write_text(_sibling(cfg.out, ".report.json"), _report_json(report))
    return report


def _run_check_maps(cfg: RunConfig) -> dict:
    dims = (cfg.m,) if cfg.m is not None else (1, 2, 4)
    tol = 1e-12 if cfg.tol is None else cfg.tol
    rng = np.random.default_rng(cfg.seed)
    alpha_max = 0.0
    omega_max = 0.0
    beta_equal = True
    for m in dims:
        for _ in range(cfg.points):
            w = random_phase_jet(rng, m)
            v = random_jet_tangent(rng, m, jet=project_to_jet(w))
            gap = pair_covector(alpha(w), v) - pair_jet(w, kappa(v))
            alpha_max = max(alpha_max, abs(gap))
            u = random_phase_tangent(rng, project_to_phase(w))
            gap2 = pair_phase_covector(beta(w), u) - omega2_pair(w, u)
            omega_max = max(omega_max, abs(gap2))
            beta_equal = beta_equal and beta(w) == beta_tilde(w)
    passed = beta_equal and alpha_max <= tol and omega_max <= tol
    return {
        "command": cfg.command,
        "dims": list(dims),
        "points": cfg.points,
        "seed": cfg.seed,
        "alpha_pairing_max": alpha_max,
        "beta_tilde_equal": beta_equal,
        "omega2_pairing_max": omega_max,
        "tol": tol,
        "pass": bool(passed),
    }


def _sample_jet(cfg: RunConfig, model, rng: np.random.Generator):
    if model.name == "nambu":
        return sample_admissible_string_jet(rng)
    return random_jet(rng, model.m)


def _sample_phase(cfg: RunConfig, model, rng: np.random.Generator):
    if model.name == "nambu":
        return sample_admissible_string_phase(rng)
    return random_phase(rng, model.m)


def _run_legendre(cfg: RunConfig) -> dict:
    lag = get_lagrangian(cfg.model, cfg.m)
    ham = get_hamiltonian(cfg.model, cfg.m)
    tol = 1e-9 if cfg.tol is None else cfg.tol
    rng = np.random.default_rng(cfg.seed)
    fwd_max = 0.0
    inv_max = 0.0
    for _ in range(cfg.points):
        j = _sample_jet(cfg, lag, rng)
        ph = legendre(lag, j)
        cov = dH(ham, ph)
        fwd_max = max(fwd_max,
                      float(np.max(np.abs(cov.psi1 - j.qdot1))),
                      float(np.max(np.abs(cov.psi2 - j.qdot2))))
        ph0 = _sample_phase(cfg, ham, rng)
        cov0 = dH(ham, ph0)
        ph1 = legendre(lag, Jet(ph0.q, cov0.psi1, cov0.psi2))
        inv_max = max(inv_max,
                      float(np.max(np.abs(ph1.p1 - ph0.p1))),
                      float(np.max(np.abs(ph1.p2 - ph0.p2))))
    passed = fwd_max <= tol and inv_max <= tol
    return {
        "command": cfg.command,
        "model": lag.name,
        "points": cfg.points,
        "seed": cfg.seed,
        "forward_roundtrip_max": fwd_max,
        "inverse_roundtrip_max": inv_max,
        "tol": tol,
        "pass": bool(passed),
    }


def _run_phase_check(cfg: RunConfig) -> dict:
    lag = get_lagrangian(cfg.model, cfg.m)
    ham = get_hamiltonian(cfg.model, cfg.m)
    tol = 1e-8 if cfg.tol is None else cfg.tol
    rng = np.random.default_rng(cfg.seed)
    lag_max = 0.0
    ham_max = 0.0
    agree_max = 0.0
    for _ in range(cfg.points):
        w_l = phase_dynamics_member(lag, _sample_jet(cfg, lag, rng), rng)
        w_h = ham_dynamics_member(ham, _sample_phase(cfg, ham, rng), rng)
        for w in (w_l, w_h):
            rl = phase_relation_residual(lag, w)
            rh = ham_phase_residual(ham, w)
            lag_max = max(lag_max, rl)
            ham_max = max(ham_max, rh)
            agree_max = max(agree_max, abs(rl - rh))
    passed = lag_max <= tol and ham_max <= tol and agree_max <= tol
    return {
        "command": cfg.command,
        "model": lag.name,
        "points": cfg.points,
        "seed": cfg.seed,
        "lagrangian_residual_max": lag_max,
        "hamiltonian_residual_max": ham_max,
        "agreement_max": agree_max,
        "tol": tol,
        "pass": bool(passed),
    }


def _run_action(cfg: RunConfig) -> dict:
    model = get_lagrangian(cfg.model, cfg.m)
    if cfg.field is None:
        raise InvalidParameterError("action requires --field (input CSV)")
    grid = _make_grid(cfg)
    fld = read_field_csv(cfg.field, grid, model.m)
    value = discrete_action(model, fld)
    return {
        "command": cfg.command,
        "model": model.name,
        "grid": _grid_str(grid),
        "action": value,
        "pass": True,
    }


_RUNNERS = {
    "solve": _run_solve,
    "check-maps": _run_check_maps,
    "legendre": _run_legendre,
    "phase-check": _run_phase_check,
    "action": _run_action,
}


def run(cfg: RunConfig) -> dict:
    """Dispatch a resolved config; returns the JSON report as a dict.

    Raises the package's typed errors on failure; exit-code mapping is the
    caller's job (main maps validation to 2 and numerics to 3).
    """
    return _RUNNERS[cfg.command](cfg)


# ---------------------------------------------------------------------------
# Argument and config-file handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldtriple",
        description="Canonical maps, phase dynamics, and variational grid "
                    "solves for fields on two-parameter domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, model=False, grid=False, bc=False, solveopts=False,
                   sample=False, field=False):
        p.add_argument("--config", default=None, metavar="PATH",
                       help="JSON config file; explicit flags override it")
        p.add_argument("--m", type=int, default=None,
                       help="number of field components")
        if model:
            p.add_argument("--model", default=None, choices=MODEL_NAMES)
        if grid:
            p.add_argument("--grid", default=None, metavar="NXxNY")
            p.add_argument("--domain", default=None, choices=_DOMAINS)
        if bc:
            p.add_argument("--bc", action="append", default=None,
                           metavar="EXPR",
                           help="boundary expression in x,y (repeat per component)")
        if solveopts:
            p.add_argument("--tol", type=float, default=None)
            p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
        if sample:
            p.add_argument("--tol", type=float, default=None)
            p.add_argument("--points", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, metavar="PATH")
        if field:
            p.add_argument("--field", default=None, metavar="PATH",
                           help="input field CSV")

    add_common(sub.add_parser("solve", help="Dirichlet boundary-value solve"),
               model=True, grid=True, bc=True, solveopts=True)
    add_common(sub.add_parser("check-maps", help="canonical-map identity suite"),
               sample=True)
    add_common(sub.add_parser("legendre", help="Legendre round-trip report"),
               model=True, sample=True)
    add_common(sub.add_parser("phase-check",
                              help="velocity-side vs momentum-side residuals"),
               model=True, sample=True)
    add_common(sub.add_parser("action", help="discrete action of a field CSV"),
               model=True, grid=True, field=True)
    return parser


def _load_config_file(path: str, command: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"malformed config JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidParameterError("config JSON must be an object")
    allowed = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in allowed:
            raise InvalidParameterError(f"unknown config key {key!r}")
    if "command" in data and data["command"] != command:
        raise InvalidParameterError(
            f"config file is for command {data['command']!r}, not {command!r}")
    data.pop("command", None)
    return data


def _coerce(name: str, value):
    if name == "grid" and isinstance(value, str):
        return _parse_grid(value)
    if name == "grid":
        if (not isinstance(value, (list, tuple)) or len(value) != 2
                or not all(isinstance(v, int) for v in value)):
            raise InvalidParameterError(
                f"grid must be 'NXxNY' or [nx, ny], got {value!r}")
        return tuple(value)
    if name == "bc":
        if isinstance(value, str):
            return (value,)
        if (not isinstance(value, (list, tuple))
                or not all(isinstance(v, str) for v in value)):
            raise InvalidParameterError("bc must be a list of expression strings")
        return tuple(value)
    if name in ("m", "max_iter", "seed", "points"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
        return value
    if name == "tol":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidParameterError(f"tol must be a number, got {value!r}")
        return float(value)
    if name in ("model", "domain", "out", "field"):
        if not isinstance(value, str):
            raise InvalidParameterError(f"{name} must be a string, got {value!r}")
        return value
    return value


def build_config(argv: list[str]) -> RunConfig:
    """Resolve argv (+ optional JSON config file) into a RunConfig."""
    args = vars(_build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)

    merged: dict = {}
    if config_path is not None:
        for key, value in _load_config_file(config_path, command).items():
            merged[key] = _coerce(key, value)
    for key, value in args.items():
        if value is None:
            continue
        merged[key] = _coerce(key, value)
    return RunConfig(command=command, **merged)


def _check_threads_var() -> None:
    raw = os.environ.get(_THREADS_VAR)
    if raw is None:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidParameterError(
            f"{_THREADS_VAR} must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise InvalidParameterError(
            f"{_THREADS_VAR} must be >= 1, got {cap}")


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        _check_threads_var()
        cfg = build_config(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    except (InvalidInputError, InvalidParameterError, ExprSyntaxError) as exc:
        print(f"fieldtriple: error: {exc}", file=sys.stderr)
        return 2

    try:
        report = run(cfg)
    except (InvalidInputError, InvalidParameterError, ExprSyntaxError) as exc:
        print(f"fieldtriple: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NoConvergenceError, SingularJacobianError) as exc:
        print(f"fieldtriple: numerical failure: {exc}", file=sys.stderr)
        return 3
    except FieldTripleError as exc:
        print(f"fieldtriple: error: {exc}", file=sys.stderr)
        return 2

    text = _report_json(report)
    sys.stdout.write(text)
    if cfg.out is not None and cfg.command != "solve":
        _write_text(cfg.out, text)
    if not report["pass"]:
        print("fieldtriple: numerical failure: report did not pass", file=sys.stderr)
        return 3
    return 0

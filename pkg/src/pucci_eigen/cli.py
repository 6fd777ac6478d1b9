"""Command-line front end: INI configuration, command dispatch and result records.

Usage::

    pucci-eigen eigen --config run.ini --out results/
    pucci-eigen verify-operator --seed 3

A configuration is an INI file with the sections ``[run]``, ``[operator]``,
``[domain]``, ``[grid]``, ``[output]`` and one section per command. Every
default is resolved and written into the result record. Exit status is 0 on
success, 2 for rejected input, 3 when a solver does not converge and 4 for a
barrier or bracketing failure; failures also write ``error.json``.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import platform
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import (BarrierFailureError, BracketError, ConfigError, DomainError,
                         IndeterminateLambdaError, InvalidInputError, NonConvergenceError, PoleError,
                         PucciEigenError, ResolutionError, SingularityError)

COMMANDS = ("eigen", "solve", "radial", "verify-operator", "barrier", "compare")

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_NONCONVERGENCE = 3
EXIT_BRACKET = 4

# key -> (type, default); "auto" defaults are resolved after parsing
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "run": {"command": ("str", None), "seed": ("int", 0), "threads": ("int", 0)},
    "operator": {"a": ("float", 1.0), "A": ("float", 1.0), "alpha": ("float", 0.0),
                 "sign": ("str", "plus"), "eps_reg": ("float", "auto")},
    "domain": {"type": ("str", "interval"), "lo": ("floats", "auto"), "hi": ("floats", "auto"),
               "center": ("floats", "auto"), "R": ("float", 1.0), "cos": ("floats", [1.0, 0.0, 0.0, 0.2]),
               "sin": ("floats", [])},
    "grid": {"h": ("float", 1.0 / 128), "stencil_width": ("int", 2)},
    "output": {"formats": ("strs", ["json", "csv", "bin", "dat"]), "prefix": ("str", "")},
    "eigen": {"bracket_tol": ("float", 1e-3), "f": ("float", -1.0), "max_steps": ("int", 1000)},
    "solve": {"f": ("float", -1.0), "boundary": ("float", 0.0), "lam": ("float", 0.0),
              "tol": ("float", 1e-10), "method": ("str", "newton"), "max_steps": ("int", 200)},
    "radial": {"tol": ("float", 1e-8), "n_plot": ("int", 401)},
    "verify-operator": {"n_samples": ("int", 100000), "dim": ("int", 2), "tol": ("float", 1e-10)},
    "barrier": {"kind": ("str", "global"), "gamma": ("float", 0.5), "delta": ("float", 0.1),
                "beta": ("float", -1.0), "oversample": ("int", 10)},
    "compare": {"bracket_tol": ("float", 1e-3), "radial_tol": ("float", 1e-8), "rel_tol": ("float", 0.03)},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]*)\]")
_KEY_RE = re.compile(r"^(\s*)([^=:;#\s][^=:]*?)\s*[=:]\s*(.*)$")


@dataclass
class RunConfig:
    """Fully resolved configuration of one command invocation."""

    command: str | None
    operator: dict
    domain: dict
    grid: dict
    params: dict
    output: dict
    seed: int = 0
    threads: int = 0
    explicit: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return dict(command=self.command, operator=self.operator, domain=self.domain, grid=self.grid,
                    params=self.params, output=self.output, seed=self.seed, threads=self.threads)


def _locate(text: str) -> dict:
    """Map (section, key) and (section, None) to (line, key column, value column)."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = (lineno, line.index("[") + 1, None)
            continue
        if line.strip().startswith(("#", ";")) or not line.strip():
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            key = m.group(2).strip()
            where[(section, key)] = (lineno, len(m.group(1)) + 1, m.start(3) + 1)
    return where


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return _parse_float(raw)
    if kind == "floats":
        return [_parse_float(x) for x in raw.replace(",", " ").split()]
    if kind == "strs":
        return [x for x in raw.replace(",", " ").split()]
    raise AssertionError(kind)


def _parse_float(raw: str) -> float:
    if "/" in raw:
        num, den = raw.split("/", 1)
        return float(num) / float(den)
    return float(raw)


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse and validate INI text; ``command`` overrides ``[run] command``.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, badly typed values and
        values that violate a precondition; line and column point at the
        offending entry when it comes from the text.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # "a" and "A" are different keys
    try:
        parser.read_string(text)
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line!r}", lineno, 1) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", exc.lineno, 1) from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], lineno, 1) from None
    where = _locate(text)
    values: dict[str, dict] = {}
    explicit: dict[str, set] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            line, col, _ = where.get((section, None), (None, None, None))
            raise ConfigError(f"unknown section [{section}]", line, col, section)
        for key, raw in parser.items(section):
            line, col, vcol = where.get((section, key), (None, None, None))
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, col, key)
            kind = SCHEMA[section][key][0]
            try:
                values.setdefault(section, {})[key] = _convert(kind, raw)
            except ValueError:
                raise ConfigError(f"key {key!r} expects {kind}, got {raw!r}", line, vcol, key) from None
            explicit.setdefault(section, set()).add(key)
    cfg = _resolve(values, command)
    cfg.explicit = {k: sorted(v) for k, v in explicit.items()}
    _validate(cfg, where)
    return cfg


def _section(values: dict, name: str) -> dict:
    out = {k: (list(v) if isinstance(v, list) else v) for k, (_, v) in SCHEMA[name].items()}
    out.update(values.get(name, {}))
    return out


def _resolve(values: dict, command: str | None) -> RunConfig:
    run = _section(values, "run")
    cmd = command if command is not None else run["command"]
    op = _section(values, "operator")
    dom = _section(values, "domain")
    grid = _section(values, "grid")
    kind = dom["type"]
    if kind == "interval":
        lo = dom["lo"] if dom["lo"] != "auto" else [-1.0]
        hi = dom["hi"] if dom["hi"] != "auto" else [1.0]
        domain = {"type": "interval", "lo": float(lo[0]), "hi": float(hi[0])}
    elif kind == "box":
        lo = dom["lo"] if dom["lo"] != "auto" else [-1.0, -1.0]
        hi = dom["hi"] if dom["hi"] != "auto" else [1.0, 1.0]
        domain = {"type": "box", "lo": list(lo), "hi": list(hi)}
    elif kind == "ball":
        center = dom["center"] if dom["center"] != "auto" else [0.0, 0.0]
        domain = {"type": "ball", "center": list(center), "R": dom["R"]}
    elif kind == "star":
        center = dom["center"] if dom["center"] != "auto" else [0.0, 0.0]
        domain = {"type": "star", "cos": list(dom["cos"]), "sin": list(dom["sin"]), "center": list(center)}
    else:
        domain = {"type": kind}
    if op["eps_reg"] == "auto":
        # singular operators need regularization tied to the mesh
        op["eps_reg"] = max(grid["h"], 1e-6) if op["alpha"] < 0 else 0.0
    params = _section(values, cmd) if cmd in SCHEMA else {}
    return RunConfig(cmd, op, domain, grid, params, _section(values, "output"), run["seed"], run["threads"])


def _validate(cfg: RunConfig, where: dict) -> None:
    def fail(msg, section, key):
        line, col, _ = where.get((section, key), (None, None, None))
        raise ConfigError(msg, line, col, key)

    if cfg.command is not None and cfg.command not in COMMANDS:
        fail(f"unknown command {cfg.command!r}", "run", "command")
    op = cfg.operator
    if not op["alpha"] > -1:
        fail(f"alpha must exceed -1 (homogeneity degree of the gradient factor), got {op['alpha']}",
             "operator", "alpha")
    if not 0 < op["a"]:
        fail(f"a must be positive, got {op['a']}", "operator", "a")
    if op["a"] > op["A"]:
        fail(f"ellipticity constants need a <= A, got a={op['a']}, A={op['A']}", "operator", "A")
    if op["sign"] not in ("plus", "minus"):
        fail(f"sign must be plus or minus, got {op['sign']!r}", "operator", "sign")
    if op["eps_reg"] < 0:
        fail("eps_reg must be nonnegative", "operator", "eps_reg")
    if op["alpha"] < 0 and op["eps_reg"] == 0:
        fail("alpha < 0 needs eps_reg > 0", "operator", "eps_reg")
    if cfg.domain["type"] not in ("interval", "box", "ball", "star"):
        fail(f"unknown domain type {cfg.domain['type']!r}", "domain", "type")
    if cfg.domain["type"] == "ball" and not cfg.domain["R"] > 0:
        fail("ball radius must be positive", "domain", "R")
    if not 0 < cfg.grid["h"] < 1:
        fail(f"grid spacing must lie in (0, 1), got {cfg.grid['h']}", "grid", "h")
    if cfg.grid["stencil_width"] < 1:
        fail("stencil_width must be >= 1", "grid", "stencil_width")
    unknown = set(cfg.output["formats"]) - {"json", "csv", "bin", "dat"}
    if unknown:
        fail(f"unknown output formats {sorted(unknown)}", "output", "formats")
    if cfg.threads < 0:
        fail("threads must be >= 0", "run", "threads")
    p = cfg.params
    if cfg.command in ("eigen",) and not p["f"] < 0:
        fail("eigen needs f < 0", "eigen", "f")
    if cfg.command == "solve" and p["method"] not in ("newton", "explicit"):
        fail(f"unknown method {p['method']!r}", "solve", "method")
    if cfg.command == "barrier":
        if p["kind"] not in ("boundary", "global"):
            fail(f"barrier kind must be boundary or global, got {p['kind']!r}", "barrier", "kind")
        if not 0 < p["gamma"] < 1:
            fail("gamma must lie in (0, 1)", "barrier", "gamma")
        if p["kind"] == "global" and not p["beta"] < 0:
            fail("beta must be negative", "barrier", "beta")
    for key in ("bracket_tol", "tol", "radial_tol", "rel_tol", "delta"):
        if key in p and not p[key] > 0:
            fail(f"{key} must be positive", cfg.command, key)


# ---------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, Path):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, record: dict) -> None:
    path.write_text(dumps(record) + "\n")


def _write_plot_data(path: Path, coords: np.ndarray, vals: np.ndarray) -> None:
    """Whitespace-separated columns; 2D data is blocked by first coordinate for gnuplot."""
    order = np.lexsort(coords.T[::-1])
    coords, vals = coords[order], vals[order]
    lines = []
    prev = None
    for c, v in zip(coords, vals):
        if coords.shape[1] > 1 and prev is not None and c[0] != prev:
            lines.append("")
        prev = c[0]
        lines.append(" ".join(format(float(x), ".17g") for x in (*c, v)))
    path.write_text("\n".join(lines) + "\n")


def _write_field(u, out: Path, stem: str, formats) -> dict:
    paths = {}
    if "csv" in formats:
        paths["csv"] = f"{stem}.csv"
        u.to_csv(out / paths["csv"])
    if "bin" in formats:
        paths["bin"] = f"{stem}.bin"
        u.to_binary(out / paths["bin"])
    if "dat" in formats:
        paths["dat"] = f"{stem}.dat"
        g = u.grid
        mask = g.domain_nodes
        _write_plot_data(out / paths["dat"], g.points[mask], u.flat[mask])
    return paths


# ---------------------------------------------------------------------------
# commands


def _build(cfg: RunConfig):
    from .geometry import Domain
    from .grid import build_grid
    from .operator import OperatorSpec

    op = OperatorSpec.from_dict(cfg.operator)
    domain = Domain.from_dict(cfg.domain)
    grid = build_grid(domain, cfg.grid["h"], cfg.grid["stencil_width"])
    return op, domain, grid


def _radial_setup(cfg: RunConfig):
    from .operator import OperatorSpec

    dom = cfg.domain
    if dom["type"] == "interval":
        R = 0.5 * (dom["hi"] - dom["lo"])
        N = 1
    elif dom["type"] == "ball":
        R = dom["R"]
        N = len(dom["center"])
    else:
        raise InvalidInputError("the radial solver needs an interval or a ball")
    op = OperatorSpec.from_dict(cfg.operator)
    return op, N, R


def _cmd_eigen(cfg, out):
    from .eigen import estimate_lambda_bar

    op, _, grid = _build(cfg)
    p = cfg.params
    res = estimate_lambda_bar(op, grid, bracket_tol=p["bracket_tol"], f=p["f"], max_steps=p["max_steps"])
    files = _write_field(res.eigenfunction, out, cfg.output["prefix"] + "eigenfunction", cfg.output["formats"])
    record = dict(lambda_lo=res.lambda_lo, lambda_hi=res.lambda_hi, lambda_hat=res.lambda_hat,
                  residual=res.residual, bound=res.info["bound"], n_interior=grid.n_interior,
                  eigenfunction_path=files.get("bin", files.get("csv")), files=files)
    return "eigen", record


def _cmd_solve(cfg, out):
    from .solver import solve_dirichlet

    op, _, grid = _build(cfg)
    p = cfg.params
    u, info = solve_dirichlet(op, grid, p["f"], boundary=p["boundary"], lam=p["lam"], tol=p["tol"],
                              max_steps=p["max_steps"], method=p["method"], return_info=True)
    files = _write_field(u, out, cfg.output["prefix"] + "solution", cfg.output["formats"])
    record = dict(converged=info.converged, steps=info.steps, residual=info.residual, method=info.method,
                  sup_norm=u.sup_norm(), n_interior=grid.n_interior, files=files)
    return "solve", record


def _radial_record(cfg, tol, out, write=True):
    from .radial import shoot_eigen

    op, N, R = _radial_setup(cfg)
    res = shoot_eigen(op, N, R, tol=tol)
    record = dict(lambda_lo=res.lambda_lo, lambda_hi=res.lambda_hi, lambda_hat=res.lambda_hat,
                  residual=res.residual, N=N, R=R, bound=res.info["bound"], eps_reg_used=0.0, files={})
    if write and "dat" in cfg.output["formats"]:
        n = cfg.params.get("n_plot", 401)
        prof = res.eigenfunction
        r = np.linspace(prof.r0, R, n)
        name = cfg.output["prefix"] + "profile.dat"
        rows = np.column_stack([r, prof.g(r), prof.gp(r)])
        (out / name).write_text("\n".join(" ".join(format(float(x), ".17g") for x in row) for row in rows) + "\n")
        record["files"]["dat"] = name
    return record


def _cmd_radial(cfg, out):
    return "radial", _radial_record(cfg, cfg.params["tol"], out)


def _cmd_verify(cfg, out):
    from .operator import OperatorSpec, verify_operator_axioms

    op = OperatorSpec.from_dict(cfg.operator)
    p = cfg.params
    rep = verify_operator_axioms(op, p["n_samples"], cfg.seed, dim=p["dim"])
    record = dict(rep.to_dict(), passed=rep.passed(p["tol"]), tol=p["tol"])
    if not record["passed"]:
        raise _Reported("axioms", record, EXIT_REJECTED)
    return "axioms", record


def _cmd_barrier(cfg, out):
    from .geometry import boundary_barrier, global_barrier

    op, domain, grid = _build(cfg)
    p = cfg.params
    if p["kind"] == "boundary":
        bf = boundary_barrier(domain, op, p["gamma"], p["delta"], grid, p["oversample"], cfg.seed)
    else:
        bf = global_barrier(domain, op, p["beta"], p["gamma"], grid, oversample=p["oversample"], seed=cfg.seed)
    files = _write_field(bf.field, out, cfg.output["prefix"] + "barrier", cfg.output["formats"])
    record = dict(kind=p["kind"], params={k: v for k, v in bf.params.items()},
                  certified_margin=bf.certified_margin, n_certified=bf.n_certified, n_ridge=bf.n_ridge,
                  ridge_fraction=bf.ridge_fraction,
                  worst_point=None if bf.worst_point is None else np.asarray(bf.worst_point).tolist(),
                  files=files)
    return "barrier", record


def _cmd_compare(cfg, out):
    from .eigen import estimate_lambda_bar

    op, _, grid = _build(cfg)
    p = cfg.params
    grid_res = estimate_lambda_bar(op, grid, bracket_tol=p["bracket_tol"])
    rad = _radial_record(cfg, p["radial_tol"], out, write=False)
    diff = grid_res.lambda_hat - rad["lambda_hat"]
    allowed = p["rel_tol"] * abs(rad["lambda_hat"]) + grid_res.width + (rad["lambda_hi"] - rad["lambda_lo"])
    record = dict(grid=dict(lambda_lo=grid_res.lambda_lo, lambda_hi=grid_res.lambda_hi,
                            lambda_hat=grid_res.lambda_hat),
                  radial=dict(lambda_lo=rad["lambda_lo"], lambda_hi=rad["lambda_hi"],
                              lambda_hat=rad["lambda_hat"]),
                  difference=diff, relative_difference=diff / rad["lambda_hat"], allowed=allowed,
                  agree=bool(abs(diff) <= allowed))
    return "compare", record


_DISPATCH = {"eigen": _cmd_eigen, "solve": _cmd_solve, "radial": _cmd_radial,
             "verify-operator": _cmd_verify, "barrier": _cmd_barrier, "compare": _cmd_compare}


class _Reported(Exception):
    def __init__(self, name, record, code):
        super().__init__(name)
        self.name, self.record, self.code = name, record, code


def exit_code_for(exc: BaseException) -> int:
    """Exit status for a failure raised while running a command."""
    if isinstance(exc, (BarrierFailureError, BracketError)):
        return EXIT_BRACKET
    if isinstance(exc, (NonConvergenceError, IndeterminateLambdaError)):
        return EXIT_NONCONVERGENCE
    if isinstance(exc, (ConfigError, InvalidInputError, DomainError, ResolutionError, PoleError,
                        SingularityError)):
        return EXIT_REJECTED
    if isinstance(exc, PucciEigenError):
        return EXIT_REJECTED
    raise exc


def _diagnostic(exc: BaseException) -> dict:
    out = dict(error=type(exc).__name__, message=str(exc))
    for attr in ("line", "column", "key", "lam", "residual", "step", "worst_value"):
        if hasattr(exc, attr):
            out[attr] = getattr(exc, attr)
    if getattr(exc, "worst_point", None) is not None:
        out["worst_point"] = np.asarray(exc.worst_point).tolist()
    return out


def run(cfg: RunConfig, out_dir) -> int:
    """Execute the configured command and write its artifacts to ``out_dir``.

    Writes ``<name>.json`` holding the result and the resolved configuration,
    any field files, and ``metadata.json`` with timing information (kept
    apart so the result record is byte-identical across repeated runs).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    resolved = cfg.to_dict()
    try:
        if cfg.command not in _DISPATCH:
            raise ConfigError(f"no command given (one of {', '.join(COMMANDS)})", key="command")
        name, record = _DISPATCH[cfg.command](cfg, out)
        code = EXIT_OK
    except _Reported as rep:
        name, record, code = rep.name, rep.record, rep.code
    except PucciEigenError as exc:
        code = exit_code_for(exc)
        name, record = "error", dict(_diagnostic(exc), exit_code=code)
    record = dict(record, config=resolved)
    if "json" in cfg.output["formats"] or name == "error":
        _write_json(out / f"{cfg.output['prefix']}{name}.json", record)
    meta = dict(command=cfg.command, started=t0, elapsed=time.time() - t0, version=__version__,
                python=platform.python_version(), numpy=np.__version__, exit_code=code)
    _write_json(out / f"{cfg.output['prefix']}metadata.json", meta)
    return code


def _apply_threads(n: int) -> None:
    # caps BLAS/OpenMP pools in libraries loaded after this point; the sparse
    # solves themselves are single-threaded, so results do not depend on n
    if n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pucci-eigen",
                                     description="Principal eigenvalues of degenerate/singular Pucci operators.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="INI configuration file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker threads (default: all)")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default: 0 or config value)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_REJECTED
    try:
        cfg = parse_config(text, args.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        args.out.mkdir(parents=True, exist_ok=True)
        _write_json(args.out / "error.json", dict(_diagnostic(exc), exit_code=EXIT_REJECTED))
        return EXIT_REJECTED
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    _apply_threads(cfg.threads)
    code = run(cfg, args.out)
    if code != EXIT_OK:
        print(f"error: {cfg.command} failed with exit status {code}; see {args.out / 'error.json'}",
              file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

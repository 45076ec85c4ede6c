"""Instance configs (INI), solution tables (CSV) and run summaries (JSON)."""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (GridFunction, HamiltonianParams, Interval, RadialBall, linear_coupling,
                   power_coupling, zero_coupling)
from .errors import ConfigError, HopfColeError
from .expr import Potential
from .solverconfig import SolverConfig

COLUMNS = ("x", "u", "m", "phi")
COUPLINGS = ("zero", "linear", "power", "linear-plus-potential")
_SOLVER_KEYS = {"n": int, "step0": float, "max_iters": int, "grad_tol": float,
                "positivity_floor": float, "newton_tol": float, "newton_max_iters": int}


@dataclass
class InstanceConfig:
    domain: object
    params: HamiltonianParams
    coupling: object
    solver: SolverConfig
    out_dir: Path
    raw: dict              # section -> key -> text, enough to rebuild the instance

    def summary_block(self) -> dict:
        return {"raw": self.raw, "domain": self.domain.as_dict(), "params": self.params.as_dict(),
                "coupling": dict(self.coupling.description or {"name": self.coupling.name}),
                "solver": {"n": self.solver.n, "eps_schedule": list(self.solver.eps_schedule)}}


def _get(section, key, conv=float, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"[{section.name}] is missing '{key}'")
        return default
    text = section[key].strip()
    try:
        return conv(text)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {text!r} is not a valid {conv.__name__}") from None


def _exactly_one(section, a, b):
    present = [k for k in (a, b) if k in section]
    if len(present) != 1:
        raise ConfigError(f"[{section.name}] needs exactly one of '{a}' and '{b}'")
    return present[0]


def _domain(sec):
    kind = sec.get("kind", "").strip().lower()
    if kind == "interval":
        return Interval(_get(sec, "a"), _get(sec, "b"))
    if kind in ("radial", "ball", "radialball"):
        return RadialBall(_get(sec, "R"), _get(sec, "d", int))
    raise ConfigError(f"[domain] kind must be 'interval' or 'radial', got {kind!r}")


def _params(sec):
    exp_key = _exactly_one(sec, "r", "r_conj")
    coef_key = _exactly_one(sec, "h0", "l0")
    return HamiltonianParams.build(_get(sec, "nu"), **{exp_key: _get(sec, exp_key),
                                                       coef_key: _get(sec, coef_key)})


def _coupling(sec):
    name = sec.get("name", "").strip().lower()
    if name not in COUPLINGS:
        raise ConfigError(f"[coupling] name must be one of {', '.join(COUPLINGS)}; got {name!r}")
    pot_text = sec.get("potential", "").strip()
    if name == "linear-plus-potential" and not pot_text:
        raise ConfigError("[coupling] linear-plus-potential needs a 'potential' expression")
    potential = Potential(pot_text) if pot_text else None
    if name == "zero":
        if potential is not None or "coef" in sec:
            raise ConfigError("[coupling] zero takes no coefficients or potential")
        return zero_coupling()
    coef = _get(sec, "coef", required=False, default=1.0)
    if name == "power":
        out = power_coupling(coef, _get(sec, "exponent", required=False, default=1.0),
                             potential, name="power")
    elif name == "linear" and potential is not None:
        raise ConfigError("[coupling] use linear-plus-potential to add a potential")
    else:
        out = linear_coupling(coef, potential)
    if potential is not None:
        out.description["potential"] = potential.text
    return out


def _solver(sec):
    kwargs = {}
    if sec is None:
        return SolverConfig()
    for key in sec:
        if key == "eps_schedule":
            try:
                kwargs[key] = tuple(float(t) for t in sec[key].split(","))
            except ValueError:
                raise ConfigError(f"[solver] eps_schedule = {sec[key]!r} is not a list of numbers") from None
        elif key in _SOLVER_KEYS:
            kwargs[key] = _get(sec, key, _SOLVER_KEYS[key])
        else:
            raise ConfigError(f"[solver] unknown key {key!r}")
    return SolverConfig(**kwargs)


def parse_config(parser: configparser.ConfigParser, base_dir=Path(".")) -> InstanceConfig:
    for name in ("domain", "params", "coupling"):
        if not parser.has_section(name):
            raise ConfigError(f"missing section [{name}]")
    try:
        domain = _domain(parser["domain"])
        params = _params(parser["params"])
        coupling = _coupling(parser["coupling"])
        solver = _solver(parser["solver"] if parser.has_section("solver") else None)
    except ConfigError:
        raise
    except HopfColeError as exc:
        raise ConfigError(str(exc)) from exc
    out = parser.get("output", "dir", fallback="out") if parser.has_section("output") else "out"
    raw = {s: dict(parser[s]) for s in parser.sections()}
    return InstanceConfig(domain, params, coupling, solver, Path(base_dir) / out, raw)


def _parser():
    p = configparser.ConfigParser(interpolation=None)
    p.optionxform = str     # keep 'R' distinct from 'r'
    return p


def load_config(path) -> InstanceConfig:
    path = Path(path)
    parser = _parser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return parse_config(parser)


def config_from_raw(raw: dict) -> InstanceConfig:
    parser = _parser()
    parser.read_dict(raw)
    return parse_config(parser)


def write_solution(path, x, u, m, phi):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([x, u, m, phi])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(COLUMNS), comments="")


def read_solution(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read solution table {path}: {exc}") from None
    if tuple(header) != COLUMNS:
        raise ConfigError(f"{path}: expected header {','.join(COLUMNS)}, found {','.join(header)}")
    return {name: data[:, k].copy() for k, name in enumerate(COLUMNS)}


def summary_path(solution_path) -> Path:
    return Path(solution_path).with_suffix(".json")


def write_summary(path, summary: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable) + "\n")


def read_summary(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read run summary {path}: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def grid_functions(domain, table: dict):
    """Check the table's x column against the domain grid and wrap u, m, phi."""
    n = table["x"].size
    if n < 3:
        raise ConfigError("solution table has fewer than 3 rows")
    expected = domain.nodes(n)
    if not np.allclose(table["x"], expected, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(expected)))):
        raise ConfigError("solution grid does not match the configured domain")
    return {k: GridFunction(domain, table[k]) for k in ("u", "m", "phi")}

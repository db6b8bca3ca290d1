"""TOML run configuration: parsing, validation and resolved-value dump.

Every problem is a table ``[problem]`` plus one ``[[problem.component]]`` per
unknown; see ``configs/example.toml`` in the repository for an annotated file.
"""

from __future__ import annotations

import itertools
import re
import sys
from dataclasses import dataclass, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .problem import ProblemSpec, make_coefficient, make_nonlinearity
from .radial_core import MIN_NODES, RadialGrid
from .solver import DEFAULT_CEILING, DEFAULT_MAX_ITER

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "MODES"]

MODES = ("check", "solve", "classify", "sweep", "oracle")
SPACINGS = ("uniform", "graded")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based or None."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Component:
    coefficient: str
    coefficient_params: tuple
    nonlinearity: str
    nonlinearity_params: tuple


@dataclass(frozen=True)
class RunConfig:
    N: int
    components: tuple
    epsilon: float = 0.5
    r_max: float = 10.0
    n_nodes: int = 2001
    spacing: str = "graded"
    tol: float | None = None
    max_iter: int = DEFAULT_MAX_ITER
    blow_up_ceiling: float = DEFAULT_CEILING
    base: float | None = None
    solution_csv: str = "solution.csv"
    report: str = "report.txt"
    sweep_csv: str = "sweep.csv"
    oracle_threshold: float = 1e-4
    sweep: tuple = ()            # ((key, (values...)), ...) sorted by key
    mode: str = "check"
    path: str = ""

    def spec(self, **overrides):
        comps = overrides.get("components", self.components)
        return ProblemSpec(
            self.N,
            tuple(make_coefficient(c.coefficient, c.coefficient_params) for c in comps),
            tuple(make_nonlinearity(c.nonlinearity, c.nonlinearity_params) for c in comps),
            self.epsilon,
        )

    def grid(self):
        if self.spacing == "uniform":
            return RadialGrid.uniform(self.r_max, self.n_nodes)
        return RadialGrid.graded(self.r_max, self.n_nodes)

    def with_overrides(self, epsilon=None, r_max=None, n_nodes=None, mode=None):
        cfg = self
        if epsilon is not None:
            cfg = replace(cfg, epsilon=float(epsilon))
        if r_max is not None:
            cfg = replace(cfg, r_max=float(r_max))
        if n_nodes is not None:
            cfg = replace(cfg, n_nodes=int(n_nodes))
        if mode is not None:
            cfg = replace(cfg, mode=mode)
        cfg._validate_values()
        return cfg

    def _validate_values(self):
        if not self.r_max > 0.0:
            raise ConfigError("grid.r_max must be > 0")
        if self.n_nodes < MIN_NODES:
            raise ConfigError(f"grid.n_nodes must be >= {MIN_NODES}")
        if not self.epsilon > 0.0:
            raise ConfigError("problem.epsilon must be > 0")

    def sweep_cells(self):
        """Parameter cells in lexicographic order of the sorted sweep keys."""
        if not self.sweep:
            return []
        keys = [k for k, _ in self.sweep]
        values = [v for _, v in self.sweep]
        return [dict(zip(keys, combo)) for combo in itertools.product(*values)]

    def components_for(self, cell):
        """Apply ``coefficient.<param>`` / ``nonlinearity.<param>`` to every component."""
        out = []
        for c in self.components:
            cp, np_ = list(c.coefficient_params), list(c.nonlinearity_params)
            for key, val in cell.items():
                target, name = key.split(".", 1)
                family = c.coefficient if target == "coefficient" else c.nonlinearity
                params = cp if target == "coefficient" else np_
                idx = _param_index(target, family, name)
                if idx is None:
                    raise ConfigError(f"sweep key {key!r} is not a parameter of {family}")
                params[idx] = val
            out.append(replace(c, coefficient_params=tuple(cp), nonlinearity_params=tuple(np_)))
        return tuple(out)

    def items(self):
        """Resolved configuration as flat ``(key, value)`` pairs."""
        out = [("config.mode", self.mode), ("config.problem.N", str(self.N)),
               ("config.problem.epsilon", repr(self.epsilon))]
        for i, c in enumerate(self.components, 1):
            out += [
                (f"config.component_{i}.coefficient", c.coefficient),
                (f"config.component_{i}.coefficient_params", _fmt_list(c.coefficient_params)),
                (f"config.component_{i}.nonlinearity", c.nonlinearity),
                (f"config.component_{i}.nonlinearity_params", _fmt_list(c.nonlinearity_params)),
            ]
        out += [
            ("config.grid.r_max", repr(self.r_max)),
            ("config.grid.n_nodes", str(self.n_nodes)),
            ("config.grid.spacing", self.spacing),
            ("config.solver.tol", "default" if self.tol is None else repr(self.tol)),
            ("config.solver.max_iter", str(self.max_iter)),
            ("config.solver.blow_up_ceiling", repr(self.blow_up_ceiling)),
            ("config.solver.base", "default" if self.base is None else repr(self.base)),
            ("config.output.solution_csv", self.solution_csv),
            ("config.output.report", self.report),
            ("config.output.sweep_csv", self.sweep_csv),
            ("config.oracle.threshold", repr(self.oracle_threshold)),
        ]
        for k, v in self.sweep:
            out.append((f"config.sweep.{k}", _fmt_list(v)))
        return out


def _fmt_list(values):
    return "[" + ", ".join(repr(float(v)) for v in values) + "]"


_PARAM_NAMES = {
    ("coefficient", "anisotropic_rational"): ("c", "sigma"),
    ("nonlinearity", "power"): ("gamma",),
    ("nonlinearity", "constant_forcing"): ("k",),
    ("coefficient", "constant"): ("c",),
    ("coefficient", "power_decay"): ("c", "sigma"),
    ("coefficient", "rational_decay"): ("c", "sigma"),
    ("coefficient", "gaussian"): ("c",),
}


def _param_index(target, family, name):
    names = _PARAM_NAMES.get((target, family), ())
    return names.index(name) if name in names else None


def _line_of(text, *needles, start=1):
    """First line at or after ``start`` containing every needle, for error messages."""
    for no, line in enumerate(text.splitlines(), 1):
        if no >= start and all(n in line for n in needles):
            return no
    return None


def _component_line(text, i):
    """Line of the ``i``-th ``[[problem.component]]`` header (1-based)."""
    hits = [no for no, line in enumerate(text.splitlines(), 1)
            if line.strip().startswith("[[problem.component]]")]
    return hits[i - 1] if i <= len(hits) else None


_ALLOWED = {
    "problem": {"N", "epsilon", "component"},
    "grid": {"r_max", "n_nodes", "spacing"},
    "solver": {"tol", "max_iter", "blow_up_ceiling", "base"},
    "output": {"solution_csv", "report", "sweep_csv"},
    "oracle": {"threshold"},
    "sweep": None,
}
_COMPONENT_KEYS = {"coefficient", "coefficient_params", "nonlinearity", "nonlinearity_params"}


def _number(value, key, text, integer=False):
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{key} must be {kind}", _line_of(text, key.split(".")[-1]))
    return int(value) if integer else float(value)


def _numbers(value, key, text):
    if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ConfigError(f"{key} must be a list of numbers", _line_of(text, key.split(".")[-1]))
    return tuple(float(v) for v in value)


def parse_config(text, path=""):
    """Parse TOML text into a validated :class:`RunConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", int(m.group(1)) if m else None) from None

    for section, value in data.items():
        if section not in _ALLOWED:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section))
        allowed = _ALLOWED[section]
        if allowed is not None:
            for key in value:
                if key not in allowed:
                    raise ConfigError(f"unknown key {section}.{key}", _line_of(text, key))

    problem = data.get("problem")
    if problem is None:
        raise ConfigError("missing [problem] section")
    if "N" not in problem:
        raise ConfigError("problem.N is required", _line_of(text, "[problem]"))
    N = _number(problem["N"], "problem.N", text, integer=True)
    comps = problem.get("component", [])
    if not comps:
        raise ConfigError("at least one [[problem.component]] is required",
                          _line_of(text, "[problem]"))
    components = []
    for i, c in enumerate(comps, 1):
        line = _component_line(text, i)
        for key in c:
            if key not in _COMPONENT_KEYS:
                raise ConfigError(f"unknown key {key!r} in component {i}",
                                  _line_of(text, key, start=line or 1))
        for key in ("coefficient", "nonlinearity"):
            if not isinstance(c.get(key), str):
                at = _line_of(text, f"{key} ", start=line or 1) or _line_of(
                    text, f"{key}=", start=line or 1)
                raise ConfigError(f"component {i} needs a string {key!r}", at or line)
        components.append(Component(
            c["coefficient"], _numbers(c.get("coefficient_params", []), "coefficient_params", text),
            c["nonlinearity"], _numbers(c.get("nonlinearity_params", []), "nonlinearity_params", text)))

    grid = data.get("grid", {})
    solver = data.get("solver", {})
    output = data.get("output", {})
    oracle = data.get("oracle", {})
    spacing = grid.get("spacing", "graded")
    if spacing not in SPACINGS:
        raise ConfigError(f"grid.spacing must be one of {', '.join(SPACINGS)}",
                          _line_of(text, "spacing"))

    sweep = []
    for key, values in sorted(data.get("sweep", {}).items()):
        target = key.split(".", 1)
        if len(target) != 2 or target[0] not in ("coefficient", "nonlinearity"):
            raise ConfigError(f"sweep key {key!r} must be coefficient.<param> or "
                              "nonlinearity.<param>", _line_of(text, key))
        vals = _numbers(values, key, text)
        sweep.append((key, tuple(sorted(vals))))

    def opt(table, key, name, integer=False, default=None):
        return _number(table[key], name, text, integer) if key in table else default

    cfg = RunConfig(
        N=N,
        components=tuple(components),
        epsilon=opt(problem, "epsilon", "problem.epsilon", default=0.5),
        r_max=opt(grid, "r_max", "grid.r_max", default=10.0),
        n_nodes=opt(grid, "n_nodes", "grid.n_nodes", integer=True, default=2001),
        spacing=spacing,
        tol=opt(solver, "tol", "solver.tol"),
        max_iter=opt(solver, "max_iter", "solver.max_iter", integer=True, default=DEFAULT_MAX_ITER),
        blow_up_ceiling=opt(solver, "blow_up_ceiling", "solver.blow_up_ceiling",
                            default=DEFAULT_CEILING),
        base=opt(solver, "base", "solver.base"),
        solution_csv=str(output.get("solution_csv", "solution.csv")),
        report=str(output.get("report", "report.txt")),
        sweep_csv=str(output.get("sweep_csv", "sweep.csv")),
        oracle_threshold=opt(oracle, "threshold", "oracle.threshold", default=1e-4),
        sweep=tuple(sweep),
        path=str(path),
    )
    try:
        cfg._validate_values()
    except ConfigError as exc:
        key = str(exc).split(" ")[0].split(".")[-1]
        raise ConfigError(str(exc), _line_of(text, key)) from None
    if cfg.max_iter < 1:
        raise ConfigError("solver.max_iter must be >= 1", _line_of(text, "max_iter"))
    try:
        spec = cfg.spec()
    except ValueError as exc:
        needle = next((w.strip("'") for w in str(exc).split() if w.startswith("'")), "component")
        raise ConfigError(str(exc), _line_of(text, needle)) from None
    for key, _ in cfg.sweep:
        target, name = key.split(".", 1)
        for c in cfg.components:
            family = c.coefficient if target == "coefficient" else c.nonlinearity
            if _param_index(target, family, name) is None:
                raise ConfigError(f"sweep key {key!r} is not a parameter of {family}",
                                  _line_of(text, key))
    del spec
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path)

"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 inconclusive classification, 5 oracle disagreement.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace

from .conditions import BOUNDED_EXISTS, INCONCLUSIVE, evaluate_conditions
from .config import MODES, ConfigError, load_config
from .oracle import cross_validate, shoot
from .solver import solve_lower, solve_upper

__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NONCONVERGED", "EXIT_INCONCLUSIVE",
           "EXIT_ORACLE"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_INCONCLUSIVE = 4
EXIT_ORACLE = 5

log = logging.getLogger("elliptic_radial")

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("ELLIPTIC_LOG", "quiet").lower()
    logging.basicConfig(level=_LOG_LEVELS.get(level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _fmt(x):
    return repr(float(x))


def format_items(items):
    return "".join(f"{k}={v}\n" for k, v in items)


def solution_csv(grid, lower, upper=None):
    """``r,w_1..w_d[,v_1..v_d]`` with shortest round-trip floats."""
    d = lower.values.shape[0]
    header = ["r"] + [f"w_{i}" for i in range(1, d + 1)]
    cols = [grid.nodes] + list(lower.values)
    if upper is not None:
        header += [f"v_{i}" for i in range(1, d + 1)]
        cols += list(upper.values)
    rows = [",".join(header)]
    for row in zip(*cols):
        rows.append(",".join(_fmt(x) for x in row))
    return "\n".join(rows) + "\n"


class _Run:
    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out_dir = out_dir
        self.items = list(cfg.items())

    def write(self, name, text):
        if self.out_dir is None:
            return
        os.makedirs(self.out_dir, exist_ok=True)
        with open(os.path.join(self.out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def finish(self, code, stdout_extra=None):
        self.items.append(("exit_code", str(code)))
        text = format_items(self.items)
        self.write(self.cfg.report, text)
        sys.stdout.write(text)
        if stdout_extra is not None and self.out_dir is None:
            sys.stdout.write(stdout_extra)
        return code


def _classify(cfg, spec):
    report = evaluate_conditions(spec)
    return report, report.classification.verdict


def cmd_check(cfg, args):
    run = _Run(cfg, args.out)
    spec = cfg.spec()
    report, verdict = _classify(cfg, spec)
    if cfg.mode == "classify":
        c = report.classification
        run.items += [("classification.verdict", c.verdict), ("classification.clause", c.clause)]
        run.items += [(f"classification.applicable_{i}", f"{cl.verdict} [{cl.basis}]")
                      for i, cl in enumerate(c.clauses, 1)]
        run.items += [(f"classification.note_{i}", n) for i, n in enumerate(c.notes, 1)]
    else:
        run.items += report.items()
    return run.finish(EXIT_INCONCLUSIVE if verdict == INCONCLUSIVE else EXIT_OK)


def _solve_status_code(status, verdict):
    if status == "converged":
        return EXIT_OK
    if status == "blow_up_detected" and verdict != BOUNDED_EXISTS:
        return EXIT_OK
    return EXIT_NONCONVERGED


def cmd_solve(cfg, args):
    run = _Run(cfg, args.out)
    spec = cfg.spec()
    _, verdict = _classify(cfg, spec)
    run.items.append(("classification.verdict", verdict))
    run.items.append(("forced", str(bool(args.force)).lower()))
    if verdict == INCONCLUSIVE and not args.force:
        run.items.append(("solve.skipped", "classification inconclusive; rerun with --force"))
        return run.finish(EXIT_INCONCLUSIVE)
    grid = cfg.grid()
    lower = solve_lower(spec, grid, cfg.tol, cfg.max_iter, base=cfg.base,
                        ceiling=cfg.blow_up_ceiling, keep_trace=False)
    run.items += [(f"lower.{k}", v) for k, v in lower.diagnostics()]
    code = _solve_status_code(lower.status, verdict)
    upper = None
    if verdict == BOUNDED_EXISTS and lower.converged:
        up = solve_upper(spec, grid, tol=cfg.tol, max_iter=cfg.max_iter, lower=lower,
                         ceiling=cfg.blow_up_ceiling, keep_trace=False)
        run.items += [(f"upper.{k}", v) for k, v in up.diagnostics()]
        code = max(code, _solve_status_code(up.status, verdict))
        upper = up.fixed_point
    csv_text = solution_csv(grid, lower.fixed_point, upper)
    run.write(cfg.solution_csv, csv_text)
    return run.finish(code)


def cmd_sweep(cfg, args):
    run = _Run(cfg, args.out)
    keys = [k for k, _ in cfg.sweep]
    header = keys + ["keller_osserman", "verdict", "status", "sup"]
    rows = [",".join(header)]
    grid = cfg.grid()
    for cell in cfg.sweep_cells():
        comps = cfg.components_for(cell)
        cell_cfg = replace(cfg, components=comps)
        try:
            spec = cell_cfg.spec()
        except ValueError as exc:
            raise ConfigError(f"sweep cell {cell}: {exc}") from None
        report, verdict = _classify(cell_cfg, spec)
        out = solve_lower(spec, grid, cfg.tol, cfg.max_iter, base=cfg.base,
                          ceiling=cfg.blow_up_ceiling, keep_trace=False)
        total = out.fixed_point.total[-1]
        log.info("sweep cell %s: %s / %s", cell, verdict, out.status)
        rows.append(",".join([_fmt(cell[k]) for k in keys]
                             + [report.keller_osserman.status.value, verdict, out.status,
                                _fmt(total if math.isfinite(total) else math.inf)]))
    table = "\n".join(rows) + "\n"
    run.write(cfg.sweep_csv, table)
    run.items.append(("sweep.cells", str(len(rows) - 1)))
    return run.finish(EXIT_OK, stdout_extra=table)


def cmd_oracle(cfg, args):
    run = _Run(cfg, args.out)
    spec = cfg.spec()
    if not spec.is_radial:
        raise ConfigError("the oracle needs radial coefficients")
    grid = cfg.grid()
    picard = solve_lower(spec, grid, cfg.tol, cfg.max_iter, base=cfg.base,
                         ceiling=cfg.blow_up_ceiling, keep_trace=False)
    shot = shoot(spec, (picard.fixed_point.base,) * spec.d, grid, coefficient="phi")
    cv = cross_validate(picard, shot, cfg.oracle_threshold)
    run.items += [(f"lower.{k}", v) for k, v in picard.diagnostics()]
    run.items.append(("oracle.blow_up", str(shot.blow_up).lower()))
    run.items += cv.items()
    return run.finish(EXIT_OK if cv.passed else EXIT_ORACLE)


_COMMANDS = {"check": cmd_check, "classify": cmd_check, "solve": cmd_solve,
             "sweep": cmd_sweep, "oracle": cmd_oracle}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elliptic-radial",
        description="Radial solutions of semilinear elliptic systems: criteria, Picard "
                    "solves and an ODE shooting cross-check.")
    parser.add_argument("command", choices=MODES)
    parser.add_argument("--config", required=True, help="TOML problem configuration")
    parser.add_argument("--force", action="store_true",
                        help="solve even when the classification is inconclusive")
    parser.add_argument("--epsilon", type=float, help="override problem.epsilon")
    parser.add_argument("--rmax", type=float, help="override grid.r_max")
    parser.add_argument("--nodes", type=int, help="override grid.n_nodes")
    parser.add_argument("--out", help="directory for the report and CSV files")
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(args.epsilon, args.rmax, args.nodes,
                                                      args.command)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

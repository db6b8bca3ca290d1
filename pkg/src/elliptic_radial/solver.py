"""Monotone successive approximation for the radial integral equations.

Every solve iterates

    w^{k+1}_i = base + G[q_i f_i(w^k)]

on a :class:`~elliptic_radial.radial_core.RadialGrid`, where ``q`` is the
sphere maximum ``phi`` (lower envelope, base ``1/d``), the sphere minimum
``psi`` (upper envelope, base ``M``) or the radial coefficient ``p`` itself
(dominated iteration, base ``beta1``).  The scalar majorant solves
``z = z0 + G[(sum p)(sum f(z, ..., z))]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .conditions import Status, check_green_growth, check_monotonicity
from .problem import big_f_eval
from .radial_core import RadialFunction, RadialGrid, cumulative_integral

__all__ = [
    "DEFAULT_CEILING",
    "DEFAULT_MAX_ITER",
    "MONOTONE_TOL",
    "AUDIT_TOL",
    "IterateField",
    "MonotoneViolation",
    "SolveOutcome",
    "DominationReport",
    "LargenessReport",
    "BoundCertificate",
    "default_tol",
    "picard_step",
    "solve_lower",
    "solve_upper",
    "solve_majorant",
    "solve_dominated",
    "fixed_point_residual",
    "detect_largeness",
    "audit_proof_bounds",
]

log = logging.getLogger(__name__)

DEFAULT_CEILING = 1e12
DEFAULT_MAX_ITER = 10_000
MONOTONE_TOL = 1e-12
AUDIT_TOL = 1e-8
LARGENESS_RADII = (10.0, 30.0, 100.0)
SATURATION_TOL = 1e-3
_TINY = 1e-300


def default_tol(base):
    return 1e-10 * (1.0 + base)


@dataclass(frozen=True)
class IterateField:
    """One Picard iterate: ``d`` components on a shared grid.

    ``slopes`` holds the exact derivative ``r^(1-N) I(r)`` of each component,
    taken from the inner integral rather than by differencing.
    """

    k: int
    grid: RadialGrid
    values: np.ndarray
    base: float
    slopes: np.ndarray
    blow_up: bool = False

    @classmethod
    def constant(cls, grid, d, base):
        vals = np.full((d, len(grid)), float(base))
        return cls(0, grid, vals, float(base), np.zeros_like(vals))

    @property
    def d(self):
        return self.values.shape[0]

    @property
    def components(self):
        return tuple(RadialFunction(self.grid, v, self.blow_up) for v in self.values)

    @property
    def total(self):
        return self.values.sum(axis=0)

    @property
    def total_slope(self):
        return self.slopes.sum(axis=0)


def _step(prev, g, N, base):
    """``base + G[g]`` row by row; ``g`` is ``(d, n)`` and may overflow."""
    grid = prev.grid
    gw = grid.green_weights(N)
    d, n = g.shape
    bad = ~np.isfinite(g).all(axis=0)
    cut = int(np.argmax(bad)) if bad.any() else n
    values = np.full((d, n), np.inf)
    slopes = np.full((d, n), np.inf)
    for i in range(d):
        gi = g[i, :cut]
        if np.any(gi < 0.0):
            raise ValueError("negative right-hand side: coefficients and nonlinearities "
                             "must be nonnegative on the iterates")
        inner = gw.inner(gi)
        values[i, :cut] = base + gw.outer(gi, inner)
        slopes[i, :cut] = 0.0
        slopes[i, 1:cut] = inner[1:] / grid.nodes[1:cut] ** (N - 1)
    return IterateField(prev.k + 1, grid, values, base, slopes, blow_up=cut < n)


def _system_rhs(spec, coeffs, values):
    with np.errstate(all="ignore"):
        f = np.array([np.broadcast_to(v, values.shape[1:]) for v in spec.evaluate_f(list(values))])
        g = coeffs * f
    # 0 * inf from a vanishing coefficient is 0
    return np.where(coeffs == 0.0, 0.0, g)


def picard_step(prev, coeffs, spec):
    """Next iterate ``base + G[coeffs_i f_i(prev)]``.

    Overflow in ``f`` does not raise: the iterate is set to ``inf`` from the
    first affected node onward and flagged as blow-up.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != prev.values.shape:
        raise ValueError("coefficients must be sampled on the iterate's grid")
    return _step(prev, _system_rhs(spec, coeffs, prev.values), spec.N, prev.base)


@dataclass(frozen=True)
class MonotoneViolation:
    k: int
    kind: str        # iteration | floor | radius
    component: int
    r: float
    amount: float


@dataclass
class SolveOutcome:
    status: str                      # converged | blow_up_detected | max_iterations
    fixed_point: IterateField
    iterations: int
    sup_deltas: list
    tail_slope: float
    coefficient: str                 # phi | psi | p | majorant
    coefficients: np.ndarray
    spec: object
    trace: list = field(default_factory=list)
    previous: IterateField | None = None
    monotone_violations: list = field(default_factory=list)
    sandwich_margin: float | None = None
    tol: float = 0.0

    @property
    def grid(self):
        return self.fixed_point.grid

    @property
    def converged(self):
        return self.status == "converged"

    def diagnostics(self):
        return [
            ("status", self.status),
            ("coefficient", self.coefficient),
            ("iterations", str(self.iterations)),
            ("base", repr(self.fixed_point.base)),
            ("tail_slope", repr(self.tail_slope)),
            ("sup_deltas", " ".join(repr(float(x)) for x in self.sup_deltas)),
            ("monotone_violations", str(len(self.monotone_violations))),
        ] + ([] if self.sandwich_margin is None
             else [("sandwich_margin", repr(self.sandwich_margin))])


def _violations(prev, nxt, base):
    out = []
    fin = np.isfinite(nxt.values)
    r = nxt.grid.nodes
    for i in range(nxt.d):
        fi = fin[i]
        drop = (prev.values[i] - nxt.values[i])[fi]
        if drop.size and drop.max() > MONOTONE_TOL:
            j = int(np.argmax(drop))
            out.append(MonotoneViolation(nxt.k, "iteration", i, float(r[fi][j]), float(drop[j])))
        below = (base - nxt.values[i])[fi]
        if below.size and below.max() > 0.0:
            j = int(np.argmax(below))
            out.append(MonotoneViolation(nxt.k, "floor", i, float(r[fi][j]), float(below[j])))
        v = nxt.values[i][fi]
        dec = v[:-1] - v[1:]
        if dec.size and dec.max() > MONOTONE_TOL * max(1.0, float(np.abs(v).max())):
            j = int(np.argmax(dec))
            out.append(MonotoneViolation(nxt.k, "radius", i, float(r[j + 1]), float(dec[j])))
    return out


def _iterate(spec, grid, d, base, rhs, coefficient, coeffs, tol, max_iter, ceiling, rtol,
             keep_trace, observer=None):
    if base <= 0.0 or not math.isfinite(base):
        raise ValueError("base must be finite and > 0")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    tol = default_tol(base) if tol is None else float(tol)
    prev = IterateField.constant(grid, d, base)
    trace = [prev] if keep_trace else []
    deltas, violations = [], []
    status = "max_iterations"
    for _ in range(max_iter):
        nxt = _step(prev, rhs(prev.values), spec.N, base)
        violations.extend(_violations(prev, nxt, base))
        if observer is not None:
            observer(nxt)
        if keep_trace:
            trace.append(nxt)
        if nxt.blow_up or np.max(nxt.values) > ceiling:
            status = "blow_up_detected"
            deltas.append(math.inf)
            prev, last = nxt, prev
            break
        delta = float(np.max(np.abs(nxt.values - prev.values)))
        deltas.append(delta)
        prev, last = nxt, prev
        if delta < tol + rtol * float(np.max(np.abs(nxt.values))):
            status = "converged"
            break
    log.debug("%s solve: %s after %d iterations", coefficient, status, prev.k)
    tail = float(prev.total_slope[-1])
    return SolveOutcome(status, prev, prev.k, deltas, tail, coefficient, coeffs, spec,
                        trace, last, violations, tol=tol)


def _solve_system(spec, grid, coefficient, base, tol, max_iter, ceiling, rtol, keep_trace,
                  observer=None):
    coeffs = {"phi": spec.phi, "psi": spec.psi, "p": spec.p}[coefficient](grid.nodes)
    return _iterate(spec, grid, spec.d, base, lambda v: _system_rhs(spec, coeffs, v),
                    coefficient, coeffs, tol, max_iter, ceiling, rtol, keep_trace, observer)


def solve_lower(spec, grid, tol=None, max_iter=DEFAULT_MAX_ITER, *, base=None,
                ceiling=DEFAULT_CEILING, rtol=0.0, keep_trace=True):
    """Lower envelope: sphere maxima ``phi`` as coefficients, base ``1/d``.

    ``base`` overrides ``1/d``, e.g. to line up with a closed-form solution.
    """
    base = 1.0 / spec.d if base is None else float(base)
    return _solve_system(spec, grid, "phi", base, tol, max_iter, ceiling, rtol, keep_trace)


def solve_upper(spec, grid, M=None, tol=None, max_iter=DEFAULT_MAX_ITER, *, lower=None,
                ceiling=DEFAULT_CEILING, rtol=0.0, keep_trace=True):
    """Upper envelope: sphere minima ``psi`` as coefficients, base ``M``.

    ``M`` defaults to ``sum_i w_i(R_max)`` of the lower envelope, which is its
    supremum on the grid.  A smaller ``M`` is rejected.  The outcome carries
    the sandwich margin ``min_{i, r} (v_i - w_i)``.
    """
    if lower is None:
        lower = solve_lower(spec, grid, keep_trace=False)
    if lower.grid != grid:
        raise ValueError("lower envelope was computed on a different grid")
    if not np.all(np.isfinite(lower.fixed_point.values)):
        raise ValueError("lower envelope blew up: no finite M exists")
    sup = float(lower.fixed_point.total.max())
    M = sup if M is None else float(M)
    if M < sup:
        raise ValueError(f"M={M!r} is below the lower envelope supremum {sup!r}")
    out = _solve_system(spec, grid, "psi", M, tol, max_iter, ceiling, rtol, keep_trace)
    with np.errstate(invalid="ignore"):
        out.sandwich_margin = float(np.min(out.fixed_point.values - lower.fixed_point.values))
    return out


def solve_majorant(spec, grid, z0=1.0, tol=None, max_iter=DEFAULT_MAX_ITER, *,
                   ceiling=DEFAULT_CEILING, rtol=0.0, keep_trace=True):
    """Scalar majorant ``z = z0 + G[(sum_j p_j)(sum_i f_i(z, ..., z))]``."""
    if not spec.is_radial:
        raise ValueError("the majorant needs radial coefficients")
    psum = spec.p(grid.nodes).sum(axis=0)[None, :]

    def rhs(v):
        with np.errstate(all="ignore"):
            g = psum * spec.diagonal_sum(v[0])[None, :]
        return np.where(psum == 0.0, 0.0, g)

    return _iterate(spec, grid, 1, float(z0), rhs, "majorant", psum, tol, max_iter, ceiling,
                    rtol, keep_trace)


@dataclass(frozen=True)
class DominationReport:
    holds: bool
    max_excess: float
    first_violation: tuple | None = None    # (k, component, r, excess)


def solve_dominated(spec, grid, beta1, tol=None, max_iter=DEFAULT_MAX_ITER, *, z0=1.0,
                    majorant=None, ceiling=DEFAULT_CEILING, keep_trace=True):
    """Component iteration with coefficients ``p_j`` from base ``beta1``.

    Every iterate is checked against the converged majorant: ``u_j^k <= z + 10 tol``.
    """
    if not spec.is_radial:
        raise ValueError("the dominated iteration needs radial coefficients")
    if not 0.0 < beta1 <= z0:
        raise ValueError(f"beta1 must lie in (0, z0={z0!r}], got {beta1!r}")
    if majorant is None:
        majorant = solve_majorant(spec, grid, z0, tol, max_iter, ceiling=ceiling, keep_trace=False)
    if majorant.grid != grid:
        raise ValueError("majorant was computed on a different grid")
    z = majorant.fixed_point.values[0]
    tol_eff = default_tol(beta1) if tol is None else float(tol)
    state = {"excess": -math.inf, "first": None}

    def observe(it):
        excess = it.values - z[None, :] - 10.0 * tol_eff
        fin = np.isfinite(excess)
        if not fin.any():
            return
        worst = float(np.max(np.where(fin, excess, -np.inf)))
        state["excess"] = max(state["excess"], worst)
        if worst > 0.0 and state["first"] is None:
            i, j = np.unravel_index(int(np.argmax(np.where(fin, excess, -np.inf))), excess.shape)
            state["first"] = (it.k, int(i), float(grid.nodes[j]), worst)

    out = _solve_system(spec, grid, "p", float(beta1), tol, max_iter, ceiling, 0.0, keep_trace,
                        observe)
    report = DominationReport(state["first"] is None, state["excess"], state["first"])
    return out, report


def fixed_point_residual(outcome):
    """``sup |w - base - G[q f(w)]|`` over components and finite nodes."""
    fp = outcome.fixed_point
    spec = outcome.spec
    if outcome.coefficient == "majorant":
        psum = outcome.coefficients
        with np.errstate(all="ignore"):
            g = np.where(psum == 0.0, 0.0, psum * spec.diagonal_sum(fp.values[0])[None, :])
        nxt = _step(fp, g, spec.N, fp.base)
    else:
        nxt = picard_step(fp, outcome.coefficients, spec)
    diff = np.abs(nxt.values - fp.values)
    diff = diff[np.isfinite(diff)]
    return float(diff.max()) if diff.size else math.inf


# ---------------------------------------------------------------------------
# largeness detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LargenessReport:
    trend: str                   # large_trend | bounded_trend | inconclusive
    radii: tuple
    sums: tuple
    statuses: tuple
    last_increment: float
    green_growth: tuple
    lower_bound_R: float
    lower_bound_ok: bool
    lower_bound_slack: float


def _lower_bound_check(outcome, R):
    """``u_i(r) >= u_i(R) + f_i(u(R)) G_R[p_i](r)`` for ``r >= R``.

    ``G_R`` is the Green operator restarted at ``R``:
    ``G_R[q](r) = G[q](r) - G[q](R) - I_q(R) int_R^r t^(1-N) dt``.
    """
    fp = outcome.fixed_point
    grid = fp.grid
    spec = outcome.spec
    N = spec.N
    gw = grid.green_weights(N)
    k = grid.index_at(R)
    R = float(grid.nodes[k])
    finite = np.all(np.isfinite(fp.values), axis=0)
    stop = int(np.argmin(finite)) if not finite.all() else len(grid)
    if stop <= k + 1:
        return R, True, math.inf
    uR = fp.values[:, k]
    fR = np.array([np.asarray(v, dtype=float) for v in spec.evaluate_f(list(uR[:, None]))])[:, 0]
    tail_c0 = np.concatenate([[0.0], np.cumsum(gw.c0[k:stop - 1])])
    worst = math.inf
    for i in range(spec.d):
        p = outcome.coefficients[i, :stop]
        inner = gw.inner(p)
        green = gw.outer(p, inner)
        g_R = green[k:stop] - green[k] - inner[k] * tail_c0
        bound = uR[i] + fR[i] * g_R
        u = fp.values[i, k:stop]
        slack = (u - bound) / np.maximum(np.abs(u), _TINY)
        worst = min(worst, float(slack.min()))
    return R, worst >= -1e-10, worst


def detect_largeness(spec, outcome=None, radii=LARGENESS_RADII, *, nodes_per_unit=40,
                     max_iter=DEFAULT_MAX_ITER):
    """Classify the growth of ``sum_i u_i(R_max)`` over nested truncations.

    Solves with coefficients ``p`` on graded grids reaching each radius.  The
    base is taken from ``outcome`` when given, else ``1/d``.  A relative
    increment below 1e-3 over the last step reports ``bounded_trend``;
    strictly increasing sums together with a diverging Green growth integral
    for every component report ``large_trend``.
    """
    if not spec.is_radial:
        raise ValueError("largeness detection needs radial coefficients")
    base = outcome.fixed_point.base if outcome is not None else 1.0 / spec.d
    sums, statuses, outs = [], [], []
    for R in radii:
        grid = RadialGrid.graded(R, int(nodes_per_unit * R) + 1)
        out = _solve_system(spec, grid, "p", base, None, max_iter, 1e300, 1e-12, False)
        statuses.append(out.status)
        sums.append(float(out.fixed_point.total[-1]))
        outs.append(out)
    green = tuple(v.status for v in check_green_growth(spec))
    s = np.array(sums)
    with np.errstate(all="ignore"):
        last = float((s[-1] - s[-2]) / abs(s[-1])) if len(s) > 1 else math.nan
    increasing = bool(np.all(np.diff(s) > 0.0))
    if math.isfinite(last) and last < SATURATION_TOL:
        trend = "bounded_trend"
    elif increasing and all(g is Status.DIVERGES for g in green):
        trend = "large_trend"
    else:
        trend = "inconclusive"
    R, ok, slack = _lower_bound_check(outs[-1], 1.0)
    return LargenessReport(trend, tuple(radii), tuple(sums), tuple(statuses), last,
                           tuple(g.value for g in green), R, ok, slack)


# ---------------------------------------------------------------------------
# audit of the a priori bounds used in the existence proof
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCertificate:
    """Worst relative slack ``(rhs - lhs) / |rhs|`` of the three proof bounds.

    ``energy``: ``S'^2 <= 2 (sum phi^R) (F(S) - F(lower))`` on ``[0, R]``.
    ``slope``: ``S' <= sqrt(C) r^(1-N) + sqrt(2 sum phi(r) F(S))`` on ``[R, R_max]``.
    ``integrated``: ``int_{S(R)}^{S(r)} F^(-1/2) <= sqrt(C) F(S(R))^(-1/2)
    (R^(2-N) - r^(2-N)) / (N-2) + int_R^r t^(1+eps) sum phi + 1/(eps R^eps)``.
    Here ``S = sum_i w_i^k`` and ``C = [R^(N-1) S'(R)]^2``.
    """

    status: str                       # ok | violated | not_applicable
    R: float
    C: float = math.nan
    lhs_integrated: float = math.nan
    rhs_integrated: float = math.nan
    phi_R: tuple = ()
    phi_R_max: float = math.nan
    energy_slack: float = math.inf
    slope_slack: float = math.inf
    integrated_slack: float = math.inf
    lower_limit: float = 1.0
    modified: bool = False
    audited: int = 0
    worst_iterate: int | None = None
    reason: str = ""

    @property
    def holds(self):
        return self.status == "ok"

    def items(self):
        return [(f"audit.{k}", repr(v) if isinstance(v, float) else str(v))
                for k, v in self.__dict__.items()]


def _slack(lhs, rhs):
    return float(np.min((rhs - lhs) / np.maximum(np.abs(rhs), _TINY))) if lhs.size else math.inf


def audit_proof_bounds(trace, spec, grid=None, R=None):
    """Evaluate the energy, slope and integrated bounds on every iterate of ``trace``.

    ``R`` defaults to the start of monotonicity of ``r^(2N-2) sum phi``,
    raised to at least 1 and snapped to the next grid node.
    """
    trace = [it for it in trace if not it.blow_up]
    if not trace:
        return BoundCertificate("not_applicable", math.nan, reason="no finite iterates")
    grid = trace[0].grid if grid is None else grid
    mono = check_monotonicity(spec, "phi")
    if not mono.holds:
        return BoundCertificate("not_applicable", math.nan,
                                reason="r^(2N-2) sum phi is not eventually nondecreasing")
    R = max(mono.holds_from_R, 1.0) if R is None else float(R)
    if R <= 0.0 or R > grid.r_max:
        raise ValueError("R must lie in (0, R_max]")
    if R < mono.holds_from_R:
        raise ValueError(f"r^(2N-2) sum phi is only verified nondecreasing from {mono.holds_from_R!r}")
    N, eps = spec.N, spec.epsilon
    r = grid.nodes
    kR = grid.index_at(R)
    R = float(r[kR])
    F = spec.big_f
    phi = spec.phi(r)
    phi_R = tuple(float(x) for x in phi[:, : kR + 1].max(axis=1))
    phi_sum = phi.sum(axis=0)
    d_base = trace[0].d * trace[0].base
    lower = min(1.0, d_base)
    F_lower = big_f_eval(F, lower)

    head, tail = slice(0, kR + 1), slice(kR, None)
    rt = r[tail]
    moment = cumulative_integral(lambda t: t ** (1.0 + eps) * spec.phi(t).sum(axis=0), rt)
    geometric = (R ** (2 - N) - rt ** (2 - N)) / (N - 2)

    worst = {"energy": math.inf, "slope": math.inf, "integrated": math.inf}
    worst_k, C, lhs_end, rhs_end = None, math.nan, math.nan, math.nan
    for it in trace:
        S = it.total
        dS = it.total_slope
        FS = big_f_eval(F, S)

        e = _slack(dS[head] ** 2, 2.0 * sum(phi_R) * (FS[head] - F_lower))

        C = (R ** (N - 1) * dS[kR]) ** 2
        s = _slack(dS[tail], math.sqrt(C) * rt ** (1 - N) + np.sqrt(2.0 * phi_sum[tail] * FS[tail]))

        SR = S[kR]
        lhs = cumulative_integral(lambda x: big_f_eval(F, x) ** -0.5, S[tail]) \
            if S[-1] > SR else np.zeros(rt.size)
        first = 0.0 if C == 0.0 else math.sqrt(C) / math.sqrt(FS[kR]) * geometric
        rhs = first + moment + 1.0 / (eps * R ** eps)
        i = _slack(lhs, rhs)
        lhs_end, rhs_end = float(lhs[-1]), float(rhs[-1])

        for key, val in (("energy", e), ("slope", s), ("integrated", i)):
            if val < worst[key]:
                worst[key] = val
                if val < -AUDIT_TOL:
                    worst_k = it.k
    ok = min(worst.values()) >= -AUDIT_TOL
    return BoundCertificate(
        "ok" if ok else "violated", R, float(C), lhs_end, rhs_end, phi_R, max(phi_R),
        worst["energy"], worst["slope"], worst["integrated"], lower, d_base < 1.0,
        len(trace), worst_k, "" if ok else "a proof bound fails beyond tolerance: solver defect")

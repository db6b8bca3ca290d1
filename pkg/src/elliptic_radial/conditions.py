"""Integral criteria for bounded and large radial solutions, and the classifier.

Convergence of an improper integral is decided in two tiers:

1. *closed_form_exponent* -- every built-in family has a known tail, so the
   integrand behaves like ``t**a`` (times a power of ``log t``).  ``a < -1``
   converges, ``a > -1`` diverges.  At the critical ``a = -1`` only exact
   power laws are decided here; asymptotic ones go to tier 2.
2. *numeric_extrapolation* -- partial integrals ``P(L)`` at
   ``L = 10, 100, 1e3, 1e4`` and the growth metric ``L * h(L)`` of the
   integrand.  The least-squares slope of ``log P`` against ``log L`` at or
   above ``+0.1`` reports divergence; otherwise a slope of ``log(L h(L))`` at
   or below ``-0.1`` reports convergence; anything else is inconclusive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .problem import Tail, audits_pass, big_f_eval, dominant, hypothesis_audit
from .radial_core import RadialGrid, cumulative_integral, decade_grid

__all__ = [
    "Status",
    "Method",
    "IntegralVerdict",
    "MonotonicityResult",
    "Classification",
    "ConditionReport",
    "ImplicationCheck",
    "CUTOFFS",
    "SLOPE_THRESHOLD",
    "EPSILON_SWEEP",
    "check_keller_osserman",
    "check_phi_moment",
    "check_psi_moment",
    "check_green_growth",
    "check_p_moment",
    "check_monotonicity",
    "classify",
    "check_growth_implications",
    "evaluate_conditions",
    "extrapolate",
]

CUTOFFS = (10.0, 100.0, 1000.0, 10000.0)
SLOPE_THRESHOLD = 0.1
EPSILON_SWEEP = (0.1, 0.5, 1.0)
MONOTONE_TOL = 1e-12


class Status(str, enum.Enum):
    CONVERGES = "converges"
    DIVERGES = "diverges"
    INCONCLUSIVE = "inconclusive"
    NOT_APPLICABLE = "not_applicable"


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form_exponent"
    NUMERIC = "numeric_extrapolation"
    NONE = "none"


@dataclass(frozen=True)
class IntegralVerdict:
    status: Status
    method: Method
    label: str = ""
    exponent: float | None = None
    cutoffs: tuple = ()
    partials: tuple = ()
    growth_slope: float | None = None
    decay_slope: float | None = None
    epsilon: float | None = None

    @property
    def decisive(self):
        return self.status in (Status.CONVERGES, Status.DIVERGES)

    def evidence(self):
        if self.method is Method.CLOSED_FORM:
            if self.exponent is None:
                return "integrand identically infinite or zero"
            return f"tail exponent {self.exponent!r}"
        if self.method is Method.NUMERIC:
            parts = ";".join(f"{c:g}:{p!r}" for c, p in zip(self.cutoffs, self.partials))
            return (f"partials {parts}; growth slope {self.growth_slope!r}; "
                    f"decay slope {self.decay_slope!r}")
        return ""


def _not_applicable(label, epsilon=None):
    return IntegralVerdict(Status.NOT_APPLICABLE, Method.NONE, label, epsilon=epsilon)


def _closed(status, label, exponent, epsilon=None):
    return IntegralVerdict(status, Method.CLOSED_FORM, label, exponent, epsilon=epsilon)


def _decide_tail(tail):
    """Tier-1 status for ``int^inf h`` with ``h`` of the given tail, or None."""
    if tail.kind in ("zero", "superpoly"):
        return Status.CONVERGES
    a = tail.exponent
    if a < -1.0:
        return Status.CONVERGES
    if a > -1.0:
        return Status.DIVERGES
    if tail.exact and tail.log_power == 0.0:
        return Status.DIVERGES
    return None


def _slope(x, y):
    x = np.log10(np.asarray(x, dtype=float))
    y = np.log10(np.asarray(y, dtype=float))
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def _numeric_verdict(label, partials, rates, epsilon=None):
    partials = np.asarray(partials, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if not np.all(np.isfinite(partials)):
        return IntegralVerdict(Status.DIVERGES, Method.NUMERIC, label, cutoffs=CUTOFFS,
                               partials=tuple(map(float, partials)), epsilon=epsilon)
    if np.all(partials <= 0.0):
        return IntegralVerdict(Status.CONVERGES, Method.NUMERIC, label, cutoffs=CUTOFFS,
                               partials=tuple(map(float, partials)), epsilon=epsilon)
    growth = _slope(CUTOFFS, partials) if np.all(partials > 0.0) else math.inf
    decay = _slope(CUTOFFS, rates) if np.all(rates > 0.0) else -math.inf
    if growth >= SLOPE_THRESHOLD:
        status = Status.DIVERGES
    elif decay <= -SLOPE_THRESHOLD:
        status = Status.CONVERGES
    else:
        status = Status.INCONCLUSIVE
    return IntegralVerdict(status, Method.NUMERIC, label, cutoffs=CUTOFFS,
                           partials=tuple(map(float, partials)),
                           growth_slope=growth, decay_slope=decay, epsilon=epsilon)


def extrapolate(integrand, start=0.0, label="", epsilon=None):
    """Tier-2 verdict for ``int_start^inf integrand``."""
    nodes = decade_grid(start, CUTOFFS)
    with np.errstate(all="ignore"):
        running = cumulative_integral(integrand, nodes)
        idx = np.searchsorted(nodes, CUTOFFS)
        cut = np.asarray(CUTOFFS)
        rates = cut * np.asarray(integrand(cut), dtype=float)
    return _numeric_verdict(label, running[idx], rates, epsilon)


def _decide(tail, integrand, start, label, epsilon=None):
    status = _decide_tail(tail)
    if status is not None:
        exp = tail.exponent if tail.kind == "power" else None
        return _closed(status, label, exp, epsilon)
    return extrapolate(integrand, start, label, epsilon)


def _reciprocal_tail(tail, power):
    """Tail of ``h**(-power)`` for a growing ``h``."""
    return Tail("power", -power * tail.exponent, -power * tail.log_power, tail.exact)


# ---------------------------------------------------------------------------
# individual criteria
# ---------------------------------------------------------------------------

def check_keller_osserman(F):
    """``int_1^inf F(s)^(-1/2) ds`` -- divergence is the required property."""
    label = "keller_osserman"
    diag = F.diagonal_tail()
    if diag.kind == "zero":
        return _closed(Status.DIVERGES, label, None)
    tail = _reciprocal_tail(Tail("power", diag.exponent + 1.0, diag.log_power, diag.exact), 0.5)
    return _decide(tail, lambda s: big_f_eval(F, s) ** -0.5, 1.0, label)


def _moment(tails, weight_power, values, label, epsilon=None):
    tail = dominant(tails).times_power(weight_power)
    return _decide(tail, lambda t: t ** weight_power * np.sum(values(t), axis=0), 0.0, label, epsilon)


def check_phi_moment(spec, eps):
    """``int_0^inf t^(1+eps) sum_j phi_j(t) dt`` -- convergence is the sufficient case."""
    if eps <= 0:
        raise ValueError("epsilon must be > 0")
    return _moment([p.max_tail() for p in spec.coefficients], 1.0 + eps, spec.phi,
                   "phi_moment", float(eps))


def check_psi_moment(spec):
    """``int_0^inf t sum_j psi_j(t) dt`` -- divergence excludes bounded radial solutions."""
    return _moment([p.min_tail() for p in spec.coefficients], 1.0, spec.psi, "psi_moment")


def check_p_moment(spec, eps):
    """``int_0^inf r^(1+eps) sum_j p_j(r) dr`` for radial coefficients."""
    if not spec.is_radial:
        return _not_applicable("p_moment", float(eps))
    if eps <= 0:
        raise ValueError("epsilon must be > 0")
    return _moment([p.tail() for p in spec.coefficients], 1.0 + eps, spec.p, "p_moment", float(eps))


_green_grid_cache = {}


def _green_extrapolation_grid():
    if "grid" not in _green_grid_cache:
        _green_grid_cache["grid"] = RadialGrid.from_nodes(decade_grid(0.0, CUTOFFS))
    return _green_grid_cache["grid"]


def check_green_growth(spec):
    """``int_0^inf t^(1-N) int_0^t s^(N-1) p_j(s) ds dt`` for every ``j``.

    Tier 2 uses the Green operator itself: ``P(L) = G[p_j](L)`` and the
    integrand ``L^(1-N) I(L)``.
    """
    if not spec.is_radial:
        return [_not_applicable(f"green_growth_{j + 1}") for j in range(spec.d)]
    N = spec.N
    out = []
    for j, p in enumerate(spec.coefficients):
        label = f"green_growth_{j + 1}"
        tail = p.tail()
        if tail.kind == "power":
            sigma = -tail.exponent
            inner = Tail("power", 1.0 - min(sigma, N), exact=tail.exact)
        else:
            inner = tail
        status = _decide_tail(inner)
        if status is not None:
            out.append(_closed(status, label, inner.exponent if inner.kind == "power" else None))
            continue
        grid = _green_extrapolation_grid()
        gw = grid.green_weights(N)
        g = p.radial(grid.nodes)
        inner_vals = gw.inner(g)
        green = gw.outer(g, inner_vals)
        idx = np.searchsorted(grid.nodes, CUTOFFS)
        cut = grid.nodes[idx]
        rates = cut * inner_vals[idx] / cut ** (N - 1)
        out.append(_numeric_verdict(label, green[idx], rates))
    return out


@dataclass(frozen=True)
class MonotonicityResult:
    """Whether ``r^(2N-2) sum_j q_j(r)`` is nondecreasing for large ``r``."""

    which: str
    status: str                    # holds | fails | not_applicable
    holds_from_R: float | None = None
    tail_exponent: float | None = None
    evidence: str = ""

    @property
    def holds(self):
        return self.status == "holds"


def check_monotonicity(spec, which):
    """Closed-form verdict from tail exponents; ``R`` verified on a grid to 1e4."""
    if which not in ("phi", "psi", "p"):
        raise ValueError("which must be phi, psi or p")
    if which == "p" and not spec.is_radial:
        return MonotonicityResult(which, "not_applicable", evidence="coefficients are not radial")
    tails = {
        "phi": [p.max_tail() for p in spec.coefficients],
        "psi": [p.min_tail() for p in spec.coefficients],
        "p": [p.tail() for p in spec.coefficients],
    }[which]
    values = {"phi": spec.phi, "psi": spec.psi, "p": spec.p}[which]
    crit = 2.0 * spec.N - 2.0

    nodes = decade_grid(0.0, CUTOFFS)
    q = nodes ** (2 * spec.N - 2) * np.sum(values(nodes), axis=0)
    dq = np.diff(q)
    scale = np.maximum(np.abs(q[:-1]), np.abs(q[1:]))
    bad = np.nonzero(dq < -MONOTONE_TOL * scale)[0]
    grid_R = float(nodes[bad[-1] + 1]) if bad.size else 0.0
    tail_in_last_decade = bool(bad.size) and nodes[bad[-1]] >= CUTOFFS[-2]

    live = [t for t in tails if t.kind != "zero"]
    powers = [-t.exponent for t in live if t.kind == "power"]
    if not live:
        return MonotonicityResult(which, "holds", 0.0, None, "all coefficients vanish")
    if not powers:
        return MonotonicityResult(which, "fails", None, None,
                                  "super-polynomial decay: eventually decreasing")
    sigma = min(powers)
    if sigma > crit:
        return MonotonicityResult(which, "fails", None, sigma,
                                  f"decay exponent {sigma!r} > 2N-2 = {crit!r}")
    if sigma == crit and tail_in_last_decade:
        return MonotonicityResult(which, "fails", None, sigma,
                                  "critical decay exponent and decreasing up to r=1e4")
    return MonotonicityResult(which, "holds", grid_R, sigma,
                              f"decay exponent {sigma!r} <= 2N-2 = {crit!r}; "
                              f"grid-verified from R={grid_R!r}")


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

BOUNDED_EXISTS = "BoundedExists"
NO_BOUNDED_RADIAL = "NoBoundedRadial"
ALL_RADIAL_LARGE = "AllRadialSolutionsLarge"
LARGE_NECESSARY = "LargeExistenceNecessaryHolds"
INCONCLUSIVE = "Inconclusive"

_CLAUSE_TEXT = {
    BOUNDED_EXISTS: ("bounded existence: weighted phi moment converges, r^(2N-2) sum phi "
                     "eventually nondecreasing, hypotheses on p and f hold"),
    NO_BOUNDED_RADIAL: ("radial non-existence: psi moment diverges and r^(2N-2) sum psi "
                        "eventually nondecreasing"),
    ALL_RADIAL_LARGE: ("largeness: radial p, Green growth integral diverges for every "
                       "component, r^(2N-2) sum p eventually nondecreasing"),
    LARGE_NECESSARY: ("necessary condition for large solutions: p moment diverges at the "
                      "smallest swept epsilon (bookkeeping, asserts no existence)"),
}


@dataclass(frozen=True)
class Clause:
    verdict: str
    basis: str       # closed_form | numeric
    text: str


@dataclass(frozen=True)
class Classification:
    verdict: str
    clause: str
    clauses: tuple = ()
    notes: tuple = ()

    def applicable(self):
        return {c.verdict for c in self.clauses}


def _basis(*verdicts):
    return "numeric" if any(v.method is Method.NUMERIC for v in verdicts) else "closed_form"


def classify(*, audits_ok, keller_osserman, phi_moments, psi_moment, green_growth,
             p_moment, monotonicity_phi, monotonicity_psi, monotonicity_p, is_radial):
    """Apply the decision table.

    Clauses are checked in the order bounded existence, radial non-existence,
    largeness, necessary condition.  The verdict is the first applicable
    clause whose evidence is closed-form.  An applicable clause that rests on
    numeric extrapolation and precedes every closed-form one makes the
    verdict Inconclusive: extrapolation alone never settles a clause.
    """
    clauses = []
    notes = []

    converging = [v for v in phi_moments if v.status is Status.CONVERGES]
    if converging and monotonicity_phi.holds and audits_ok \
            and keller_osserman.status is Status.DIVERGES:
        # first closed-form entry; callers list the configured epsilon first
        best = min(converging, key=lambda v: v.method is Method.NUMERIC)
        clauses.append(Clause(BOUNDED_EXISTS, _basis(best, keller_osserman),
                              _CLAUSE_TEXT[BOUNDED_EXISTS] + f" (epsilon={best.epsilon!r})"))
    elif converging and not monotonicity_phi.holds:
        notes.append("phi moment converges but r^(2N-2) sum phi is not eventually "
                     "nondecreasing: bounded-existence clause withheld")
    elif converging and keller_osserman.status is not Status.DIVERGES:
        notes.append(f"Keller-Osserman integral {keller_osserman.status.value}: "
                     "bounded-existence clause withheld")
    elif converging:
        notes.append("hypothesis audit did not pass: bounded-existence clause withheld")

    if psi_moment.status is Status.DIVERGES and monotonicity_psi.holds:
        clauses.append(Clause(NO_BOUNDED_RADIAL, _basis(psi_moment), _CLAUSE_TEXT[NO_BOUNDED_RADIAL]))

    if is_radial and green_growth:
        diverging = [v.status is Status.DIVERGES for v in green_growth]
        if all(diverging):
            if monotonicity_p.holds and audits_ok and keller_osserman.status is Status.DIVERGES:
                clauses.append(Clause(ALL_RADIAL_LARGE, _basis(*green_growth),
                                      _CLAUSE_TEXT[ALL_RADIAL_LARGE]))
            else:
                notes.append("Green growth diverges but monotonicity of p or the hypotheses "
                             "on f fail: largeness clause withheld")
        elif any(diverging):
            notes.append("Green growth diverges for some components only: largeness undecided")

    if is_radial and p_moment.status is Status.DIVERGES:
        clauses.append(Clause(LARGE_NECESSARY, _basis(p_moment), _CLAUSE_TEXT[LARGE_NECESSARY]))

    got = {c.verdict for c in clauses}
    if BOUNDED_EXISTS in got and NO_BOUNDED_RADIAL in got:
        notes.append("bounded existence holds for the phi-majorized problem while no bounded "
                     "radial solution exists for the psi-minorized radial problem")

    verdict, clause = INCONCLUSIVE, "no clause applies"
    for c in clauses:
        if c.basis == "closed_form":
            verdict, clause = c.verdict, c.text
        else:
            clause = f"{c.verdict} suggested by numeric extrapolation only"
        break
    return Classification(verdict, clause, tuple(clauses), tuple(notes))


@dataclass(frozen=True)
class ConditionReport:
    spec_description: str
    audits: tuple
    keller_osserman: IntegralVerdict
    phi_moment: IntegralVerdict
    phi_moment_sweep: tuple
    psi_moment: IntegralVerdict
    green_growth: tuple
    p_moment: IntegralVerdict
    monotonicity_phi: MonotonicityResult
    monotonicity_psi: MonotonicityResult
    monotonicity_p: MonotonicityResult
    classification: Classification

    def items(self):
        """Flat ``(key, value)`` pairs in a fixed order."""
        out = [("spec", self.spec_description)]
        for e in self.audits:
            tag = "" if e.component is None else f"_{e.component + 1}"
            out.append((f"audit.{e.hypothesis}{tag}", f"{e.verdict} ({e.evidence})"))

        def verdict(key, v):
            out.append((f"{key}.status", v.status.value))
            out.append((f"{key}.method", v.method.value))
            if v.epsilon is not None:
                out.append((f"{key}.epsilon", repr(v.epsilon)))
            ev = v.evidence()
            if ev:
                out.append((f"{key}.evidence", ev))

        verdict("keller_osserman", self.keller_osserman)
        verdict("phi_moment", self.phi_moment)
        for v in self.phi_moment_sweep:
            out.append((f"phi_moment.sweep.{v.epsilon!r}", v.status.value))
        verdict("psi_moment", self.psi_moment)
        for v in self.green_growth:
            verdict(v.label, v)
        verdict("p_moment", self.p_moment)
        for m in (self.monotonicity_phi, self.monotonicity_psi, self.monotonicity_p):
            key = f"monotonicity_{m.which}"
            out.append((f"{key}.status", m.status))
            if m.holds_from_R is not None:
                out.append((f"{key}.holds_from_R", repr(m.holds_from_R)))
            if m.evidence:
                out.append((f"{key}.evidence", m.evidence))
        c = self.classification
        out.append(("classification.verdict", c.verdict))
        out.append(("classification.clause", c.clause))
        for i, cl in enumerate(c.clauses, 1):
            out.append((f"classification.applicable_{i}", f"{cl.verdict} [{cl.basis}]"))
        for i, n in enumerate(c.notes, 1):
            out.append((f"classification.note_{i}", n))
        return out


def evaluate_conditions(spec, eps_sweep=EPSILON_SWEEP):
    """Run the whole battery on ``spec`` and classify."""
    sweep = sorted(set(float(e) for e in eps_sweep) | {spec.epsilon})
    audits = tuple(hypothesis_audit(spec))
    ko = check_keller_osserman(spec.big_f)
    phi_sweep = tuple(check_phi_moment(spec, e) for e in sweep)
    phi_main = next(v for v in phi_sweep if v.epsilon == spec.epsilon)
    if phi_main.status is not Status.CONVERGES:
        phi_main = next((v for v in phi_sweep if v.status is Status.CONVERGES), phi_main)
    psi = check_psi_moment(spec)
    green = tuple(check_green_growth(spec))
    # t^(1+eps) grows with eps for t > 1, so the smallest epsilon is the binding case
    pm = check_p_moment(spec, sweep[0])
    mphi = check_monotonicity(spec, "phi")
    mpsi = check_monotonicity(spec, "psi")
    mp = check_monotonicity(spec, "p")
    ordered = (phi_main,) + tuple(v for v in phi_sweep if v is not phi_main)
    cls = classify(audits_ok=audits_pass(audits), keller_osserman=ko, phi_moments=ordered,
                   psi_moment=psi, green_growth=green, p_moment=pm, monotonicity_phi=mphi,
                   monotonicity_psi=mpsi, monotonicity_p=mp, is_radial=spec.is_radial)
    return ConditionReport(spec.describe(), audits, ko, phi_main, phi_sweep, psi, green, pm,
                           mphi, mpsi, mp, cls)


# ---------------------------------------------------------------------------
# implications between growth conditions on f
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImplicationCheck:
    """Numerical consistency of ``hypothesis diverges => conclusion diverges``."""

    name: str
    hypothesis: IntegralVerdict
    conclusions: tuple

    @property
    def consistent(self):
        """True / False, or None when a needed verdict is undecided."""
        if self.hypothesis.status is Status.CONVERGES:
            return True
        if self.hypothesis.status is not Status.DIVERGES:
            return None
        if all(c.status is Status.DIVERGES for c in self.conclusions):
            return True
        if any(c.status is Status.CONVERGES for c in self.conclusions):
            return False
        return None


def check_growth_implications(F):
    """Cross-check two implications between growth conditions on ``f``.

    ``diagonal``: Keller-Osserman divergence implies divergence of
    ``int_1^inf (int_0^t f_i(s..s) ds)^(-1/2) dt`` for each ``i``.
    ``reciprocal``: divergence of ``int_1^inf (sum_i f_i(s..s))^(-1) ds``
    implies Keller-Osserman divergence.
    """
    ko = check_keller_osserman(F)
    per_component = []
    for i, f in enumerate(F.underlying):
        label = f"diagonal_growth_{i + 1}"
        diag = f.diagonal_tail(F.d)
        if diag.kind == "zero":
            per_component.append(_closed(Status.DIVERGES, label, None))
            continue
        tail = _reciprocal_tail(Tail("power", diag.exponent + 1.0, diag.log_power, diag.exact), 0.5)
        per_component.append(_decide(tail, lambda s, i=i: F.component(i, s) ** -0.5, 1.0, label))
    diagonal = ImplicationCheck("diagonal", ko, tuple(per_component))

    diag = F.diagonal_tail()
    if diag.kind == "zero":
        hyp = _closed(Status.DIVERGES, "reciprocal_growth", None)
    else:
        hyp = _decide(_reciprocal_tail(diag, 1.0), lambda s: 1.0 / F.diagonal_sum(s), 1.0,
                      "reciprocal_growth")
    reciprocal = ImplicationCheck("reciprocal", hyp, (ko,))
    return diagonal, reciprocal

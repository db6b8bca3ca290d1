"""Coefficient and nonlinearity families, problem specifications and audits.

Functions enter the system as named, parameterized families so that sphere
extrema, tail exponents and antiderivatives are available in closed form.
Families are immutable after construction and validated on creation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

__all__ = [
    "Tail",
    "Coefficient",
    "Constant",
    "PowerDecay",
    "RationalDecay",
    "Gaussian",
    "AnisotropicRational",
    "Nonlinearity",
    "Power",
    "LinearMix",
    "LogGrowth",
    "ProductRoot",
    "ConstantForcing",
    "COEFFICIENT_FAMILIES",
    "NONLINEARITY_FAMILIES",
    "make_coefficient",
    "make_nonlinearity",
    "ProblemSpec",
    "BigF",
    "AuditEntry",
    "sphere_max",
    "sphere_min",
    "big_f_eval",
    "hypothesis_audit",
    "AUDIT_BOX",
    "AUDIT_POINTS_PER_AXIS",
    "AUDIT_MAX_POINTS",
]


@dataclass(frozen=True)
class Tail:
    """Large-argument behaviour ``~ coef * t**exponent * log(t)**log_power``.

    ``kind`` is ``"zero"`` (identically zero), ``"power"`` or ``"superpoly"``
    (decays faster than any power).  ``exact`` marks a pure power law for all
    large ``t`` with no lower-order corrections at all.
    """

    kind: str
    exponent: float = 0.0
    log_power: float = 0.0
    exact: bool = False

    @classmethod
    def zero(cls):
        return cls("zero")

    def times_power(self, alpha):
        if self.kind != "power":
            return self
        return Tail("power", self.exponent + alpha, self.log_power, self.exact)


def dominant(tails):
    """Tail of a sum of nonnegative terms."""
    powers = [t for t in tails if t.kind == "power"]
    if not powers:
        if any(t.kind == "superpoly" for t in tails):
            return Tail("superpoly")
        return Tail.zero()
    top = max(powers, key=lambda t: (t.exponent, t.log_power))
    ties = [t for t in powers if (t.exponent, t.log_power) == (top.exponent, top.log_power)]
    lower = [t for t in tails if t.kind != "zero" and t not in ties]
    exact = all(t.exact for t in ties) and not lower
    return Tail("power", top.exponent, top.log_power, exact)


# ---------------------------------------------------------------------------
# coefficient families p_j : R^N -> [0, inf)
# ---------------------------------------------------------------------------

def _nonneg(name, value):
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"parameter {name} must be finite and >= 0, got {value!r}")
    return value


class Coefficient:
    """Base class; subclasses are frozen dataclasses."""

    name: ClassVar[str]
    param_names: ClassVar[tuple]

    @property
    def params(self):
        return tuple(getattr(self, k) for k in self.param_names)

    @property
    def is_radial(self):
        return True

    def radial(self, r):
        raise NotImplementedError

    def __call__(self, x):
        """Evaluate at Cartesian points of shape ``(..., N)``."""
        x = np.asarray(x, dtype=float)
        return self.radial(np.linalg.norm(x, axis=-1))

    def sphere_max(self, t):
        return self.radial(np.asarray(t, dtype=float))

    def sphere_min(self, t):
        return self.radial(np.asarray(t, dtype=float))

    def max_tail(self):
        return self.tail()

    def min_tail(self):
        return self.tail()

    def tail(self):
        raise NotImplementedError

    def describe(self):
        return f"{self.name}({', '.join(repr(p) for p in _flat(self.params))})"


def _flat(params):
    for p in params:
        if isinstance(p, tuple):
            yield from p
        else:
            yield p


@dataclass(frozen=True)
class Constant(Coefficient):
    c: float
    name: ClassVar[str] = "constant"
    param_names: ClassVar[tuple] = ("c",)

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg("c", self.c))

    def radial(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.c)

    def tail(self):
        if self.c == 0.0:
            return Tail.zero()
        return Tail("power", 0.0, exact=True)


@dataclass(frozen=True)
class PowerDecay(Coefficient):
    """``c (1 + r)^(-sigma)``"""

    c: float
    sigma: float
    name: ClassVar[str] = "power_decay"
    param_names: ClassVar[tuple] = ("c", "sigma")

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg("c", self.c))
        object.__setattr__(self, "sigma", _nonneg("sigma", self.sigma))

    def radial(self, r):
        return self.c * (1.0 + np.asarray(r, dtype=float)) ** (-self.sigma)

    def tail(self):
        if self.c == 0.0:
            return Tail.zero()
        return Tail("power", -self.sigma, exact=self.sigma == 0.0)


@dataclass(frozen=True)
class RationalDecay(Coefficient):
    """``c (1 + r^2)^(-sigma)``"""

    c: float
    sigma: float
    name: ClassVar[str] = "rational_decay"
    param_names: ClassVar[tuple] = ("c", "sigma")

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg("c", self.c))
        object.__setattr__(self, "sigma", _nonneg("sigma", self.sigma))

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * (1.0 + r * r) ** (-self.sigma)

    def tail(self):
        if self.c == 0.0:
            return Tail.zero()
        return Tail("power", -2.0 * self.sigma, exact=self.sigma == 0.0)


@dataclass(frozen=True)
class Gaussian(Coefficient):
    """``c exp(-r^2)``"""

    c: float
    name: ClassVar[str] = "gaussian"
    param_names: ClassVar[tuple] = ("c",)

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg("c", self.c))

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * np.exp(-r * r)

    def tail(self):
        return Tail.zero() if self.c == 0.0 else Tail("superpoly")


@dataclass(frozen=True)
class AnisotropicRational(Coefficient):
    """``c (1 + sum_i a_i x_i^2)^(-sigma)``; one weight per space dimension."""

    c: float
    sigma: float
    a: tuple
    name: ClassVar[str] = "anisotropic_rational"
    param_names: ClassVar[tuple] = ("c", "sigma", "a")

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg("c", self.c))
        object.__setattr__(self, "sigma", _nonneg("sigma", self.sigma))
        a = tuple(_nonneg(f"a[{i}]", v) for i, v in enumerate(self.a))
        if not a:
            raise ValueError("anisotropic_rational needs at least one weight")
        object.__setattr__(self, "a", a)

    @property
    def is_radial(self):
        return len(set(self.a)) == 1

    def _along(self, weight, t):
        t = np.asarray(t, dtype=float)
        return self.c * (1.0 + weight * t * t) ** (-self.sigma)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != len(self.a):
            raise ValueError(f"expected points in R^{len(self.a)}")
        return self.c * (1.0 + np.sum(np.asarray(self.a) * x * x, axis=-1)) ** (-self.sigma)

    def radial(self, r):
        if not self.is_radial:
            raise ValueError("anisotropic_rational with unequal weights is not radial")
        return self._along(self.a[0], r)

    # the quadratic form on the sphere ranges over [min a, max a] t^2
    def sphere_max(self, t):
        return self._along(min(self.a), t)

    def sphere_min(self, t):
        return self._along(max(self.a), t)

    def _tail_for(self, weight):
        if self.c == 0.0:
            return Tail.zero()
        if weight == 0.0 or self.sigma == 0.0:
            return Tail("power", 0.0, exact=True)
        return Tail("power", -2.0 * self.sigma)

    def max_tail(self):
        return self._tail_for(min(self.a))

    def min_tail(self):
        return self._tail_for(max(self.a))

    def tail(self):
        return self.max_tail()


COEFFICIENT_FAMILIES = {
    cls.name: cls for cls in (Constant, PowerDecay, RationalDecay, Gaussian, AnisotropicRational)
}


def make_coefficient(name, params):
    """Build a coefficient family from its registry name and a flat parameter list."""
    try:
        cls = COEFFICIENT_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown coefficient family {name!r}") from None
    params = list(params)
    if cls is AnisotropicRational:
        if len(params) < 3:
            raise ValueError("anisotropic_rational expects c, sigma, a_1..a_N")
        return cls(params[0], params[1], tuple(params[2:]))
    if len(params) != len(cls.param_names):
        raise ValueError(f"{name} expects parameters {', '.join(cls.param_names)}")
    return cls(*params)


# ---------------------------------------------------------------------------
# nonlinearity families f_i : [0, inf)^d -> [0, inf)
# ---------------------------------------------------------------------------

class Nonlinearity:
    """Base class.  ``__call__`` takes ``d`` equally shaped arrays."""

    name: ClassVar[str]
    param_names: ClassVar[tuple]
    c1_strict: ClassVar[bool] = True
    oracle_only: ClassVar[bool] = False

    @property
    def params(self):
        return tuple(getattr(self, k) for k in self.param_names)

    def arity(self):
        return None

    def __call__(self, *s):
        raise NotImplementedError

    def diagonal(self, t, d):
        t = np.asarray(t, dtype=float)
        return self(*([t] * d))

    def antiderivative(self, s, d):
        """``int_0^s f(t, ..., t) dt``."""
        raise NotImplementedError

    def diagonal_tail(self, d):
        raise NotImplementedError

    def describe(self):
        return f"{self.name}({', '.join(repr(p) for p in _flat(self.params))})"


@dataclass(frozen=True)
class Power(Nonlinearity):
    """``(s_1 + ... + s_d)^gamma``"""

    gamma: float
    name: ClassVar[str] = "power"
    param_names: ClassVar[tuple] = ("gamma",)

    def __post_init__(self):
        g = float(self.gamma)
        if not math.isfinite(g) or g <= 0.0:
            raise ValueError(f"power exponent must be > 0, got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)

    def __call__(self, *s):
        return np.power(sum(np.asarray(x, dtype=float) for x in s), self.gamma)

    def antiderivative(self, s, d):
        s = np.asarray(s, dtype=float)
        return d ** self.gamma * s ** (self.gamma + 1.0) / (self.gamma + 1.0)

    def diagonal_tail(self, d):
        return Tail("power", self.gamma, exact=True)


@dataclass(frozen=True)
class LinearMix(Nonlinearity):
    """``sum_i b_i s_i``"""

    b: tuple
    name: ClassVar[str] = "linear_mix"
    param_names: ClassVar[tuple] = ("b",)

    def __post_init__(self):
        b = tuple(_nonneg(f"b[{i}]", v) for i, v in enumerate(self.b))
        if not b:
            raise ValueError("linear_mix needs at least one weight")
        object.__setattr__(self, "b", b)

    def arity(self):
        return len(self.b)

    def __call__(self, *s):
        out = 0.0
        for bi, si in zip(self.b, s):
            out = out + bi * np.asarray(si, dtype=float)
        return out * np.ones_like(np.asarray(s[0], dtype=float))

    def antiderivative(self, s, d):
        s = np.asarray(s, dtype=float)
        return sum(self.b) * s * s / 2.0

    def diagonal_tail(self, d):
        if sum(self.b) == 0.0:
            return Tail.zero()
        return Tail("power", 1.0, exact=True)


def _x_log1p_x_antiderivative(x):
    """``int_0^x u log(1 + u) du`` without cancellation near 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.1
    xs = x[small]
    acc = np.zeros_like(xs)
    for n in range(1, 25):
        acc += (-1.0) ** (n + 1) * xs ** (n + 2) / (n * (n + 2))
    out[small] = acc
    xl = x[~small]
    out[~small] = 0.5 * (xl * xl - 1.0) * np.log1p(xl) - 0.25 * xl * xl + 0.5 * xl
    return out


@dataclass(frozen=True)
class LogGrowth(Nonlinearity):
    """``S log(1 + S)`` with ``S = s_1 + ... + s_d``"""

    name: ClassVar[str] = "log_growth"
    param_names: ClassVar[tuple] = ()

    def __call__(self, *s):
        total = sum(np.asarray(x, dtype=float) for x in s)
        return total * np.log1p(total)

    def antiderivative(self, s, d):
        s = np.asarray(s, dtype=float)
        return _x_log1p_x_antiderivative(d * s) / d

    def diagonal_tail(self, d):
        return Tail("power", 1.0, log_power=1.0)


@dataclass(frozen=True)
class ProductRoot(Nonlinearity):
    """``prod_i s_i^gamma_i`` with ``sum gamma_i <= 1``.

    Vanishes whenever one argument does, so positivity away from the origin
    only holds in the interior of the orthant; the family is flagged.
    """

    gamma: tuple
    name: ClassVar[str] = "product_root"
    param_names: ClassVar[tuple] = ("gamma",)
    c1_strict: ClassVar[bool] = False

    def __post_init__(self):
        g = tuple(float(v) for v in self.gamma)
        if not g or any(not math.isfinite(v) or v <= 0.0 for v in g):
            raise ValueError("product_root exponents must be > 0")
        if sum(g) > 1.0 + 1e-12:
            raise ValueError("product_root exponents must sum to at most 1")
        object.__setattr__(self, "gamma", g)

    def arity(self):
        return len(self.gamma)

    def __call__(self, *s):
        out = 1.0
        for gi, si in zip(self.gamma, s):
            out = out * np.power(np.asarray(si, dtype=float), gi)
        return out * np.ones_like(np.asarray(s[0], dtype=float))

    def antiderivative(self, s, d):
        s = np.asarray(s, dtype=float)
        e = sum(self.gamma)
        return s ** (e + 1.0) / (e + 1.0)

    def diagonal_tail(self, d):
        return Tail("power", sum(self.gamma), exact=True)


@dataclass(frozen=True)
class ConstantForcing(Nonlinearity):
    """``f = k`` regardless of arguments.  Oracle fixtures only: ``f(0) != 0``."""

    k: float
    name: ClassVar[str] = "constant_forcing"
    param_names: ClassVar[tuple] = ("k",)
    oracle_only: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "k", _nonneg("k", self.k))

    def __call__(self, *s):
        return np.full_like(np.asarray(s[0], dtype=float), self.k)

    def antiderivative(self, s, d):
        return self.k * np.asarray(s, dtype=float)

    def diagonal_tail(self, d):
        return Tail.zero() if self.k == 0.0 else Tail("power", 0.0, exact=True)


NONLINEARITY_FAMILIES = {
    cls.name: cls for cls in (Power, LinearMix, LogGrowth, ProductRoot, ConstantForcing)
}


def make_nonlinearity(name, params):
    try:
        cls = NONLINEARITY_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown nonlinearity family {name!r}") from None
    params = list(params)
    if cls in (LinearMix, ProductRoot):
        return cls(tuple(params))
    if len(params) != len(cls.param_names):
        expected = ", ".join(cls.param_names) or "no parameters"
        raise ValueError(f"{name} expects {expected}")
    return cls(*params)


# ---------------------------------------------------------------------------
# problem specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """``Delta u_i = p_i(x) f_i(u_1, ..., u_d)`` on R^N, ``i = 1..d``."""

    N: int
    coefficients: tuple
    nonlinearities: tuple
    epsilon: float = 0.5

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError(f"N must be an integer >= 3, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        coeffs = tuple(self.coefficients)
        nonlins = tuple(self.nonlinearities)
        if not coeffs or len(coeffs) != len(nonlins):
            raise ValueError("need one coefficient and one nonlinearity per component")
        d = len(coeffs)
        for p in coeffs:
            if isinstance(p, AnisotropicRational) and len(p.a) != self.N:
                raise ValueError(f"anisotropic_rational needs {self.N} weights, got {len(p.a)}")
        for f in nonlins:
            if f.arity() is not None and f.arity() != d:
                raise ValueError(f"{f.name} needs exactly d={d} parameters, got {f.arity()}")
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps <= 0.0:
            raise ValueError("epsilon must be > 0")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "nonlinearities", nonlins)
        object.__setattr__(self, "epsilon", eps)

    @property
    def d(self):
        return len(self.coefficients)

    @property
    def is_radial(self):
        return all(p.is_radial for p in self.coefficients)

    @property
    def big_f(self):
        return BigF(self.nonlinearities)

    def phi(self, r):
        """Sphere maxima, shape ``(d, len(r))``."""
        r = np.asarray(r, dtype=float)
        return np.array([p.sphere_max(r) for p in self.coefficients]).reshape(self.d, *r.shape)

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        return np.array([p.sphere_min(r) for p in self.coefficients]).reshape(self.d, *r.shape)

    def p(self, r):
        if not self.is_radial:
            raise ValueError("coefficients are not radial")
        r = np.asarray(r, dtype=float)
        return np.array([q.radial(r) for q in self.coefficients]).reshape(self.d, *r.shape)

    def evaluate_f(self, components):
        return [f(*components) for f in self.nonlinearities]

    def diagonal_sum(self, t):
        """``sum_i f_i(t, ..., t)``."""
        t = np.asarray(t, dtype=float)
        return sum(f.diagonal(t, self.d) for f in self.nonlinearities)

    def scaled(self, lam):
        """Same problem with every coefficient multiplied by ``lam``."""
        out = []
        for q in self.coefficients:
            vals = dict(zip(q.param_names, q.params))
            vals["c"] = vals["c"] * lam
            out.append(type(q)(**vals))
        return ProblemSpec(self.N, tuple(out), self.nonlinearities, self.epsilon)

    def describe(self):
        parts = [f"N={self.N}", f"d={self.d}", f"epsilon={self.epsilon!r}"]
        for i, (p, f) in enumerate(zip(self.coefficients, self.nonlinearities), 1):
            parts.append(f"p_{i}={p.describe()}")
            parts.append(f"f_{i}={f.describe()}")
        return "; ".join(parts)


@dataclass(frozen=True)
class BigF:
    """``F(s) = int_0^s sum_i f_i(t, ..., t) dt``."""

    underlying: tuple

    def __post_init__(self):
        object.__setattr__(self, "underlying", tuple(self.underlying))

    @property
    def d(self):
        return len(self.underlying)

    def __call__(self, s):
        return big_f_eval(self, s)

    def component(self, i, s):
        """``int_0^s f_i(t, ..., t) dt`` for a single ``i``."""
        return self.underlying[i].antiderivative(s, self.d)

    def diagonal_sum(self, t):
        return sum(f.diagonal(t, self.d) for f in self.underlying)

    def diagonal_tail(self):
        return dominant([f.diagonal_tail(self.d) for f in self.underlying])


def sphere_max(coeff, t, N=None):
    """``max_{|x| = t} p(x)``, closed form for every built-in family."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("radius must be >= 0")
    return coeff.sphere_max(t)


def sphere_min(coeff, t, N=None):
    """``min_{|x| = t} p(x)``, closed form for every built-in family."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("radius must be >= 0")
    return coeff.sphere_min(t)


def big_f_eval(F, s):
    if np.any(np.asarray(s) < 0):
        raise ValueError("F is evaluated on s >= 0 only")
    s = np.asarray(s, dtype=float)
    out = sum(f.antiderivative(s, F.d) for f in F.underlying)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# hypothesis audit
# ---------------------------------------------------------------------------

AUDIT_BOX = 10.0
AUDIT_POINTS_PER_AXIS = 21
AUDIT_MAX_POINTS = 100_000
_COEFF_SAMPLE_RADII = np.linspace(0.0, AUDIT_BOX, AUDIT_POINTS_PER_AXIS)


@dataclass(frozen=True)
class AuditEntry:
    hypothesis: str
    verdict: str          # pass | fail | flagged
    evidence: str
    component: int | None = None


def _audit_lattice(d):
    per_axis = AUDIT_POINTS_PER_AXIS
    while per_axis ** d > AUDIT_MAX_POINTS:
        per_axis -= 1
    axis = np.linspace(0.0, AUDIT_BOX, per_axis)
    return axis, np.meshgrid(*([axis] * d), indexing="ij")


def _coefficient_samples(p, N):
    dirs = np.eye(N)
    diag = np.ones(N) / math.sqrt(N)
    pts = [r * v for r in _COEFF_SAMPLE_RADII for v in (*dirs, diag)]
    return p(np.array(pts))


def hypothesis_audit(spec):
    """Sampled checks of the standing hypotheses on ``p_j`` and ``f_i``.

    ``coefficient_nonnegative``: finite and >= 0 along axes and the diagonal,
    radii ``0..10``.  ``nonlinearity_vanishing_positive``: ``f(0) = 0`` and
    ``f > 0`` on lattice points other than the origin.
    ``nonlinearity_monotone``: forward differences along every axis of the
    ``[0, 10]^d`` lattice (21 points per axis, at most 1e5 points) are
    ``>= -1e-12``.  ``nonlinearity_strict`` reports strict increase
    separately and never gates anything.  The audit never raises.
    """
    entries = []
    for j, p in enumerate(spec.coefficients):
        vals = _coefficient_samples(p, spec.N)
        ok = bool(np.all(np.isfinite(vals)) and np.all(vals >= 0.0))
        entries.append(AuditEntry(
            "coefficient_nonnegative", "pass" if ok else "fail",
            f"{vals.size} samples, min={float(np.min(vals))!r}", j))

    d = spec.d
    axis, mesh = _audit_lattice(d)
    for i, f in enumerate(spec.nonlinearities):
        with np.errstate(all="ignore"):
            vals = np.asarray(f(*mesh), dtype=float) * np.ones_like(mesh[0])
        at_zero = float(vals[(0,) * d])
        off_origin = vals.reshape(-1)[1:]
        positive = bool(np.all(off_origin > 0.0))
        if at_zero != 0.0:
            verdict, note = "fail", f"f(0)={at_zero!r}"
        elif not positive and not f.c1_strict:
            verdict, note = "flagged", "vanishes on coordinate faces (family is not strictly positive)"
        elif not positive:
            verdict, note = "fail", f"f vanishes at {int(np.sum(off_origin <= 0.0))} lattice points"
        else:
            verdict, note = "pass", f"f(0)=0, positive on {off_origin.size} lattice points"
        entries.append(AuditEntry("nonlinearity_vanishing_positive", verdict, note, i))

        worst, strict = math.inf, True
        for ax in range(d):
            diff = np.diff(vals, axis=ax)
            if diff.size:
                worst = min(worst, float(np.min(diff)))
                strict = strict and bool(np.all(diff > 0.0))
        mono = worst >= -1e-12
        entries.append(AuditEntry(
            "nonlinearity_monotone", "pass" if mono else "fail",
            f"{axis.size}^{d} lattice on [0, {AUDIT_BOX:g}], min forward difference {worst!r}", i))
        entries.append(AuditEntry(
            "nonlinearity_strict", "pass" if strict else "flagged",
            "strictly increasing on the lattice" if strict else "some forward difference is zero", i))
    return entries


def audits_pass(entries):
    """True when every gating audit passed (strictness is informational)."""
    return all(e.verdict == "pass" for e in entries if e.hypothesis != "nonlinearity_strict")

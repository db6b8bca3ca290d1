import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elliptic_radial.radial_core import RadialGrid
from elliptic_radial.solver import (
    IterateField,
    audit_proof_bounds,
    detect_largeness,
    fixed_point_residual,
    picard_step,
    solve_dominated,
    solve_lower,
    solve_majorant,
    solve_upper,
)

from conftest import build_spec, sinhc


def _ones(grid, d=1):
    return np.ones((d, len(grid)))


class TestPicardStep:
    def test_zero_coefficient_is_identity(self, sinh_spec):
        g = RadialGrid.uniform(2.0, 41)
        prev = IterateField.constant(g, 1, 1.0)
        nxt = picard_step(prev, np.zeros((1, len(g))), sinh_spec)
        assert np.array_equal(nxt.values, prev.values)
        assert nxt.k == 1

    def test_first_step_from_one(self, sinh_spec):
        g = RadialGrid.uniform(2.0, 201)
        r = g.nodes
        nxt = picard_step(IterateField.constant(g, 1, 1.0), _ones(g), sinh_spec)
        assert np.allclose(nxt.values[0], 1 + r ** 2 / 6, rtol=1e-13, atol=0)
        assert np.allclose(nxt.slopes[0], r / 3, rtol=1e-12, atol=1e-15)

    def test_second_step_quadratic_integrand(self, sinh_spec):
        # the interpolant of 1 + r^2/6 is exact up to O(h^2)
        g = RadialGrid.uniform(2.0, 2001)
        r = g.nodes
        one = picard_step(IterateField.constant(g, 1, 1.0), _ones(g), sinh_spec)
        two = picard_step(one, _ones(g), sinh_spec)
        assert np.allclose(two.values[0], 1 + r ** 2 / 6 + r ** 4 / 120, rtol=1e-6, atol=0)

    def test_shape_checked(self, sinh_spec):
        g = RadialGrid.uniform(1.0, 20)
        with pytest.raises(ValueError):
            picard_step(IterateField.constant(g, 1, 1.0), np.ones((1, 19)), sinh_spec)

    def test_overflow_flags_blow_up(self):
        spec = build_spec(3, [("constant", [1.0])], [("power", [3.0])])
        g = RadialGrid.uniform(5.0, 50)
        prev = IterateField.constant(g, 1, 1.0)
        vals = prev.values.copy()
        vals[0, 30:] = 1e200
        prev = IterateField(0, g, vals, 1.0, np.zeros_like(vals))
        nxt = picard_step(prev, _ones(g), spec)
        assert nxt.blow_up
        assert np.all(np.isinf(nxt.values[0, 30:]))
        assert np.all(np.isfinite(nxt.values[0, :30]))


_COEFFS = st.one_of(
    st.tuples(st.just("constant"), st.tuples(st.floats(0.0, 2.0))),
    st.tuples(st.just("power_decay"), st.tuples(st.floats(0.1, 2.0), st.floats(0.0, 6.0))),
    st.tuples(st.just("rational_decay"), st.tuples(st.floats(0.1, 2.0), st.floats(0.0, 3.0))),
    st.tuples(st.just("gaussian"), st.tuples(st.floats(0.1, 2.0))),
)
_NONLINS = st.one_of(
    st.tuples(st.just("power"), st.tuples(st.floats(0.3, 3.0))),
    st.tuples(st.just("log_growth"), st.just(())),
)


class TestIterationInvariants:
    @given(st.integers(3, 5), st.lists(_COEFFS, min_size=1, max_size=2), _NONLINS)
    def test_monotone_and_above_base(self, N, coeffs, nonlin):
        spec = build_spec(N, [(n, list(p)) for n, p in coeffs], [(nonlin[0], list(nonlin[1]))]
                          * len(coeffs))
        g = RadialGrid.graded(5.0, 120)
        out = solve_lower(spec, g, max_iter=60)
        assert out.monotone_violations == []
        for a, b in zip(out.trace, out.trace[1:]):
            fin = np.isfinite(b.values)
            assert np.all(b.values[fin] >= a.values[fin] - 1e-12)
            assert np.all(b.values[fin] >= out.fixed_point.base)

    @given(st.floats(0.1, 3.0))
    def test_monotone_in_base(self, base):
        spec = build_spec(3, [("power_decay", [1.0, 4.0])], [("power", [1.0])])
        g = RadialGrid.graded(5.0, 100)
        lo = solve_lower(spec, g, base=base, keep_trace=False).fixed_point.values
        hi = solve_lower(spec, g, base=1.1 * base, keep_trace=False).fixed_point.values
        assert np.all(hi >= lo)


class TestSolveLower:
    def test_sinh_reproduced(self, sinh_spec):
        g = RadialGrid.uniform(5.0, 5001)
        out = solve_lower(sinh_spec, g, base=1.0)
        assert out.converged
        exact = sinhc(g.nodes)
        assert np.max(np.abs(out.fixed_point.values[0] / exact - 1)) < 1e-6
        assert fixed_point_residual(out) < 10 * out.tol

    def test_default_base_one_over_d(self, symmetric_pair):
        out = solve_lower(symmetric_pair, RadialGrid.uniform(2.0, 100))
        assert out.fixed_point.base == 0.5

    def test_symmetric_components_agree(self, symmetric_pair):
        out = solve_lower(symmetric_pair, RadialGrid.uniform(3.0, 1001), base=1.0)
        w = out.fixed_point.values
        assert np.array_equal(w[0], w[1])
        assert np.max(np.abs(w[0] / sinhc(out.grid.nodes) - 1)) < 1e-5

    def test_blow_up_detected(self):
        spec = build_spec(3, [("constant", [1.0])], [("power", [3.0])])
        out = solve_lower(spec, RadialGrid.uniform(10.0, 400), base=1.0)
        assert out.status == "blow_up_detected"
        assert math.isinf(out.sup_deltas[-1])

    def test_max_iterations(self, sinh_spec):
        out = solve_lower(sinh_spec, RadialGrid.uniform(5.0, 200), max_iter=3)
        assert out.status == "max_iterations"
        assert out.iterations == 3
        assert len(out.trace) == 4

    def test_rejects_bad_base(self, sinh_spec):
        with pytest.raises(ValueError):
            solve_lower(sinh_spec, RadialGrid.uniform(1.0, 20), base=0.0)

    def test_tail_slope_reported(self, sinh_spec):
        g = RadialGrid.uniform(3.0, 3001)
        out = solve_lower(sinh_spec, g, base=1.0)
        r = 3.0
        exact = (r * math.cosh(r) - math.sinh(r)) / r ** 2
        assert out.tail_slope == pytest.approx(exact, rel=1e-5)

    def test_diagnostics_keys(self, sinh_spec):
        out = solve_lower(sinh_spec, RadialGrid.uniform(1.0, 50))
        keys = [k for k, _ in out.diagnostics()]
        assert keys[:3] == ["status", "coefficient", "iterations"]


class TestSolveUpper:
    def _aniso(self):
        return build_spec(3, [("anisotropic_rational", [1.0, 3.0, 1.0, 4.0, 4.0])],
                          [("power", [1.0])])

    def test_sandwich(self):
        spec = self._aniso()
        g = RadialGrid.graded(10.0, 800)
        lower = solve_lower(spec, g, keep_trace=False)
        upper = solve_upper(spec, g, lower=lower, keep_trace=False)
        assert upper.converged
        assert upper.sandwich_margin >= 0.0
        assert np.all(upper.fixed_point.values >= lower.fixed_point.values)

    def test_rejects_small_M(self):
        spec = self._aniso()
        g = RadialGrid.graded(10.0, 200)
        with pytest.raises(ValueError, match="below"):
            solve_upper(spec, g, M=0.5)

    def test_grid_mismatch(self):
        spec = self._aniso()
        lower = solve_lower(spec, RadialGrid.graded(10.0, 200))
        with pytest.raises(ValueError):
            solve_upper(spec, RadialGrid.graded(10.0, 201), lower=lower)

    def test_radial_margin_at_least_base_gap(self):
        # same coefficients, larger base: the margin is at least M - base
        spec = build_spec(3, [("power_decay", [1.0, 4.0])], [("power", [1.0])])
        g = RadialGrid.graded(5.0, 300)
        lo = solve_lower(spec, g, base=1.0)
        M = float(lo.fixed_point.total.max())
        up = solve_upper(spec, g, M=M, lower=lo)
        assert up.sandwich_margin >= M - 1.0 - 1e-12


class TestMajorantAndDomination:
    def test_majorant_closed_form(self, symmetric_pair):
        # sum p = 2, sum f(z, z) = 2z: z = sinh(2r) / (2r)
        g = RadialGrid.uniform(2.0, 4001)
        out = solve_majorant(symmetric_pair, g, z0=1.0)
        assert out.converged
        assert np.max(np.abs(out.fixed_point.values[0] / sinhc(2 * g.nodes) - 1)) < 1e-5
        assert fixed_point_residual(out) < 10 * out.tol

    def test_domination_holds(self, symmetric_pair):
        g = RadialGrid.uniform(3.0, 601)
        out, rep = solve_dominated(symmetric_pair, g, 0.5, max_iter=1000)
        assert out.converged
        assert rep.holds and rep.first_violation is None
        assert rep.max_excess <= 0.0

    def test_beta_above_z0_rejected(self, symmetric_pair):
        with pytest.raises(ValueError):
            solve_dominated(symmetric_pair, RadialGrid.uniform(1.0, 20), 1.5)

    def test_nonradial_rejected(self):
        spec = build_spec(3, [("anisotropic_rational", [1.0, 1.0, 1.0, 4.0, 4.0])],
                          [("power", [1.0])])
        with pytest.raises(ValueError):
            solve_majorant(spec, RadialGrid.uniform(1.0, 20))

    @given(st.floats(0.05, 1.0))
    def test_domination_any_beta(self, beta):
        spec = build_spec(3, [("power_decay", [1.0, 3.0])] * 2, [("linear_mix", [0.5, 0.5])] * 2)
        g = RadialGrid.graded(5.0, 150)
        _, rep = solve_dominated(spec, g, beta)
        assert rep.holds


class TestLargeness:
    def test_constant_coefficient_large(self, sinh_spec):
        rep = detect_largeness(sinh_spec, nodes_per_unit=20)
        assert rep.trend == "large_trend"
        s = rep.sums
        assert s[1] / s[0] >= 10 and s[2] / s[1] >= 10
        assert rep.lower_bound_ok

    def test_zero_coefficient_bounded(self):
        spec = build_spec(3, [("constant", [0.0])], [("power", [1.0])])
        rep = detect_largeness(spec, nodes_per_unit=2)
        assert rep.trend == "bounded_trend"
        assert rep.sums == (1.0, 1.0, 1.0)

    def test_gaussian_saturates_in_five_dimensions(self):
        # the tail approaches its limit like r^(2-N); N = 5 makes the last step tiny
        spec = build_spec(5, [("gaussian", [1.0])], [("power", [1.0])])
        rep = detect_largeness(spec, nodes_per_unit=10)
        assert rep.trend == "bounded_trend"
        assert rep.last_increment < 1e-3

    def test_harmonic_tail_blocks_saturation_in_three_dimensions(self):
        # u ~ c - a/r: the relative step from 30 to 100 stays near a (1/30 - 1/100) / c
        spec = build_spec(3, [("gaussian", [1.0])], [("power", [1.0])])
        rep = detect_largeness(spec, nodes_per_unit=10)
        s = np.array(rep.sums)
        a = (s[1] - s[0]) / (1 / 10 - 1 / 30)
        assert rep.last_increment == pytest.approx(a * (1 / 30 - 1 / 100) / s[2], rel=0.05)
        assert rep.trend == "inconclusive"


class TestProofBoundAudit:
    def test_sinh_run_ok(self, sinh_spec):
        out = solve_lower(sinh_spec, RadialGrid.uniform(5.0, 2001), base=1.0)
        cert = audit_proof_bounds(out.trace, sinh_spec)
        assert cert.holds
        assert cert.audited == len(out.trace)
        assert min(cert.energy_slack, cert.slope_slack, cert.integrated_slack) >= -1e-8

    def test_symmetric_run_ok(self, symmetric_pair):
        out = solve_lower(symmetric_pair, RadialGrid.uniform(5.0, 2001))
        cert = audit_proof_bounds(out.trace, symmetric_pair)
        assert cert.holds
        assert cert.lower_limit == 1.0

    def test_zero_coefficient_trace(self):
        spec = build_spec(3, [("constant", [0.0])], [("power", [1.0])])
        out = solve_lower(spec, RadialGrid.uniform(3.0, 100), base=1.0)
        cert = audit_proof_bounds(out.trace, spec, R=1.0)
        assert cert.holds
        assert cert.C == 0.0

    def test_not_applicable_without_monotonicity(self):
        spec = build_spec(3, [("gaussian", [1.0])], [("power", [1.0])])
        out = solve_lower(spec, RadialGrid.uniform(3.0, 100))
        assert audit_proof_bounds(out.trace, spec).status == "not_applicable"

    def test_empty_trace(self, sinh_spec):
        assert audit_proof_bounds([], sinh_spec).status == "not_applicable"

    def test_R_outside_grid(self, sinh_spec):
        out = solve_lower(sinh_spec, RadialGrid.uniform(2.0, 100))
        with pytest.raises(ValueError):
            audit_proof_bounds(out.trace, sinh_spec, R=3.0)

    def test_small_base_modified_limit(self, sinh_spec):
        out = solve_lower(sinh_spec, RadialGrid.uniform(3.0, 600), base=0.25)
        cert = audit_proof_bounds(out.trace, sinh_spec)
        assert cert.modified and cert.lower_limit == 0.25
        assert cert.holds

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import numpy as np
import pytest

from elliptic_radial.cli import main
from elliptic_radial.conditions import (
    ALL_RADIAL_LARGE,
    BOUNDED_EXISTS,
    NO_BOUNDED_RADIAL,
    Method,
    Status,
    evaluate_conditions,
)
from elliptic_radial.oracle import shoot
from elliptic_radial.radial_core import RadialFunction, RadialGrid, green_apply
from elliptic_radial.solver import (
    audit_proof_bounds,
    detect_largeness,
    solve_dominated,
    solve_lower,
    solve_upper,
)

from conftest import build_spec, sinhc
from test_cli import config_text


@pytest.fixture
def report(capsys):
    def _report(label, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, detail
    return _report


def _sinh_spec():
    return build_spec(3, [("constant", [1.0])], [("power", [1.0])])


def _symmetric_pair():
    return build_spec(3, [("constant", [1.0])] * 2, [("linear_mix", [0.5, 0.5])] * 2)


def _sinh_run():
    spec = _sinh_spec()
    return spec, solve_lower(spec, RadialGrid.uniform(5.0, 5001), base=1.0)


# families and parameter ranges of the randomized invariant suite
_RANDOM_COEFFICIENTS = {
    "constant": lambda rng, N: [rng.uniform(0.0, 2.0)],
    "power_decay": lambda rng, N: [rng.uniform(0.1, 2.0), rng.uniform(0.0, 6.0)],
    "rational_decay": lambda rng, N: [rng.uniform(0.1, 2.0), rng.uniform(0.0, 3.0)],
    "gaussian": lambda rng, N: [rng.uniform(0.1, 2.0)],
    "anisotropic_rational": lambda rng, N: [rng.uniform(0.1, 2.0), rng.uniform(0.0, 4.0)]
    + list(rng.uniform(0.2, 5.0, N)),
}
_RANDOM_NONLINEARITIES = {
    "power": lambda rng, d: [rng.uniform(0.3, 3.0)],
    "linear_mix": lambda rng, d: list(rng.uniform(0.0, 1.0, d)),
    "log_growth": lambda rng, d: [],
    "product_root": lambda rng, d: list(rng.dirichlet(np.ones(d)) * rng.uniform(0.2, 1.0)),
}


def _random_spec(rng):
    N = int(rng.integers(3, 6))
    d = int(rng.integers(1, 3))
    coeffs = []
    for _ in range(d):
        name = rng.choice(sorted(_RANDOM_COEFFICIENTS))
        coeffs.append((str(name), _RANDOM_COEFFICIENTS[name](rng, N)))
    nonlins = []
    for _ in range(d):
        name = rng.choice(sorted(_RANDOM_NONLINEARITIES))
        nonlins.append((str(name), _RANDOM_NONLINEARITIES[name](rng, d)))
    return build_spec(N, coeffs, nonlins)


class TestAcceptance:
    def test_01_closed_form_reproduction(self, report):
        spec, out = _sinh_run()
        exact = sinhc(out.grid.nodes)
        picard = float(np.max(np.abs(out.fixed_point.values[0] / exact - 1)))
        shot = shoot(spec, 1.0, out.grid)
        shooting = float(np.max(np.abs(shot.values[0] / exact - 1)))
        ok = out.converged and picard < 1e-6 and shooting < 1e-8
        report("criterion 1 closed-form reproduction", ok,
               f"picard rel err {picard:.2e} (< 1e-6), shooting rel err {shooting:.2e} (< 1e-8)")

    def test_02_green_operator_exactness(self, report):
        g = RadialGrid.uniform(5.0, 5001)
        r = g.nodes
        worst = 0.0
        for N in (3, 4, 5):
            out = green_apply(RadialFunction(g, np.ones(len(g))), N).values
            exact = r ** 2 / (2 * N)
            assert out[0] == 0.0
            worst = max(worst, float(np.max(np.abs(out[1:] / exact[1:] - 1))))
        report("criterion 2 Green operator exactness", worst < 1e-10,
               f"max rel err {worst:.2e} over N in (3, 4, 5) (< 1e-10)")

    def test_03_monotone_iteration_invariant(self, report):
        rng = np.random.default_rng(20240601)
        n_specs, steps, violations = 60, 0, 0
        for _ in range(n_specs):
            spec = _random_spec(rng)
            out = solve_lower(spec, RadialGrid.graded(5.0, 150), max_iter=200, ceiling=1e100)
            steps += len(out.trace) - 1
            violations += len(out.monotone_violations)
            base = out.fixed_point.base
            for a, b in zip(out.trace, out.trace[1:]):
                fin = np.isfinite(b.values)
                violations += int(np.sum(b.values[fin] < a.values[fin] - 1e-12))
                violations += int(np.sum(a.values < base))
        report("criterion 3 monotone iteration invariant", violations == 0,
               f"{n_specs} random specs, {steps} steps, {violations} violations (0)")

    def test_04_proof_bound_audit(self, report):
        spec, out = _sinh_run()
        sinh_cert = audit_proof_bounds(out.trace, spec)
        pair = _symmetric_pair()
        run = solve_lower(pair, RadialGrid.uniform(5.0, 5001))
        pair_cert = audit_proof_bounds(run.trace, pair)
        slack = min(min(c.energy_slack, c.slope_slack, c.integrated_slack)
                    for c in (sinh_cert, pair_cert))
        ok = sinh_cert.holds and pair_cert.holds and slack >= -1e-8
        report("criterion 4 proof-bound audit", ok,
               f"{sinh_cert.audited} + {pair_cert.audited} iterates, worst slack {slack:.2e} "
               f"(>= -1e-8)")

    def test_05_domination(self, report):
        out, dom = solve_dominated(_symmetric_pair(), RadialGrid.uniform(5.0, 2001), 0.5,
                                   max_iter=1000, z0=1.0)
        report("criterion 5 domination by the scalar majorant", dom.holds,
               f"{out.iterations} iterations ({out.status}), max excess over z + 10 tol "
               f"{dom.max_excess:.2e} (<= 0)")

    def test_06_classifier_truth_table(self, report):
        a = evaluate_conditions(build_spec(3, [("power_decay", [1.0, 4.0])], [("power", [1.0])],
                                           epsilon=0.5))
        ok_a = (a.classification.verdict == BOUNDED_EXISTS
                and a.phi_moment.method is Method.CLOSED_FORM
                and a.keller_osserman.method is Method.CLOSED_FORM)

        b = evaluate_conditions(build_spec(3, [("constant", [1.0])], [("power", [1.0])]))
        ok_b = ({NO_BOUNDED_RADIAL, ALL_RADIAL_LARGE} <= b.classification.applicable()
                and all(cl.basis == "closed_form" for cl in b.classification.clauses))

        c = evaluate_conditions(build_spec(3, [("power_decay", [1.0, 4.0])], [("power", [3.0])]))
        ok_c = (c.keller_osserman.status is Status.CONVERGES
                and c.keller_osserman.method is Method.CLOSED_FORM
                and BOUNDED_EXISTS not in c.classification.applicable()
                and c.classification.verdict != BOUNDED_EXISTS)

        d = evaluate_conditions(build_spec(3, [("gaussian", [1.0])], [("power", [1.0])]))
        ok_d = (d.monotonicity_phi.status == "fails"
                and d.phi_moment.status is Status.CONVERGES
                and BOUNDED_EXISTS not in d.classification.applicable())

        report("criterion 6 classifier truth table", ok_a and ok_b and ok_c and ok_d,
               f"(a) {a.classification.verdict} (b) {sorted(b.classification.applicable())} "
               f"(c) KO {c.keller_osserman.status.value}, verdict {c.classification.verdict} "
               f"(d) monotonicity {d.monotonicity_phi.status}, "
               f"moment {d.phi_moment.status.value}")

    def test_07a_largeness_trend_constant_coefficient(self, report):
        rep = detect_largeness(_sinh_spec())
        s = rep.sums
        ratios = [s[1] / s[0], s[2] / s[1]]
        ok = rep.trend == "large_trend" and min(ratios) >= 10
        report("criterion 7 largeness trend, p = 1", ok,
               f"sums {s[0]:.4g}, {s[1]:.4g}, {s[2]:.4g}, step ratios "
               f"{ratios[0]:.3g}, {ratios[1]:.3g} (>= 10), trend {rep.trend}")

    def test_07b_largeness_trend_decaying_coefficient(self, report):
        rep = detect_largeness(build_spec(3, [("power_decay", [1.0, 4.0])], [("power", [1.0])]))
        ok = rep.trend == "bounded_trend" and rep.last_increment < 1e-3
        report("criterion 7 saturation, p = (1+r)^-4", ok,
               f"sums {', '.join(f'{x:.6g}' for x in rep.sums)}, last relative increment "
               f"{rep.last_increment:.3e} (< 1e-3), trend {rep.trend}")

    def test_08_quadrature_and_integrator_order(self, report):
        spec = _sinh_spec()
        green, shooting = [], []
        for n in (101, 201):
            g = RadialGrid.uniform(5.0, n)
            u = sinhc(g.nodes)
            out = green_apply(RadialFunction(g, u), 3).values
            green.append(float(np.max(np.abs(out - (u - 1.0)))))
            shooting.append(float(np.max(np.abs(shoot(spec, 1.0, g).values[0] - u))))
        g_ratio, s_ratio = green[0] / green[1], shooting[0] / shooting[1]
        report("criterion 8 quadrature and integrator order", g_ratio >= 3.5 and s_ratio >= 12,
               f"green_apply ratio {g_ratio:.3f} (>= 3.5), shooting ratio {s_ratio:.3f} (>= 12)")

    def test_09_sandwich_ordering(self, report):
        spec = build_spec(3, [("anisotropic_rational", [1.0, 3.0, 1.0, 4.0, 4.0])],
                          [("power", [1.0])])
        g = RadialGrid.graded(10.0, 2001)
        lower = solve_lower(spec, g, keep_trace=False)
        upper = solve_upper(spec, g, lower=lower, keep_trace=False)
        ok = (lower.converged and upper.converged and upper.sandwich_margin >= 0.0
              and bool(np.all(upper.fixed_point.values >= lower.fixed_point.values)))
        report("criterion 9 sandwich ordering", ok,
               f"lower {lower.status}, upper {upper.status}, margin "
               f"{upper.sandwich_margin:.4g} (>= 0)")

    def test_10_determinism_and_exit_codes(self, report, tmp_path, capsys):
        def run(text, command="solve", *extra):
            path = tmp_path / f"c{len(list(tmp_path.iterdir()))}.toml"
            path.write_text(text)
            return main([command, "--config", str(path), *extra])

        good = config_text()
        run(good, "solve", "--out", str(tmp_path / "a"))
        run(good, "solve", "--out", str(tmp_path / "b"))
        same = ((tmp_path / "a" / "solution.csv").read_bytes()
                == (tmp_path / "b" / "solution.csv").read_bytes())

        codes = {
            0: run(good),
            2: run(config_text(n_nodes=3)),
            3: run(config_text(extra="[solver]\nmax_iter = 2\n")),
            4: run(config_text(cparams="[1.0, 2.0]")),
            5: run(config_text(coefficient="constant", cparams="[1.0]", r_max=10.0, n_nodes=16),
                   "oracle"),
        }
        capsys.readouterr()
        ok = same and all(k == v for k, v in codes.items())
        report("criterion 10 determinism and exit codes", ok,
               f"CSV byte-identical {same}, exit codes expected/got "
               + ", ".join(f"{k}/{v}" for k, v in codes.items()))

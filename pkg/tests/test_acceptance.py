"""The eight acceptance criteria at their stated tolerances and time limits.

Each test records a one-line verdict that conftest prints in the terminal
summary; ``python3 tests/test_acceptance.py`` runs the same checks directly.
"""

import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

try:
    from conftest import ACCEPTANCE_RESULTS
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_RESULTS = {}

from gjms.cli import run as cli_run
from gjms.constants import ProblemParams, expand_gjms_polynomial, q_curvature
from gjms.diagnostics import (
    boundary_decay_check,
    chain_verify,
    log_sobolev_trial_suite,
    pohozaev_residual,
    sobolev_trial_suite,
)
from gjms.radial_ie import gamma_identity_error, ie_residual, solve_picard, standard_bubble, trivial_profile
from gjms.stereo import kelvin, pullback_to_plane, pushforward_to_sphere
from gjms.variational import (
    CONFORMAL_NOTE,
    QuotientFunctional,
    constancy,
    liouville_sweep,
    mass_balance_residual,
    minimize_quotient,
    seeded_initial,
)
from gjms.zonal import ZonalFunction, analyze, build_quadrature, l2_norm_sq, lebesgue_integral, synthesize

S3 = 2 * math.pi**2


def _record(idx, ok, text):
    ACCEPTANCE_RESULTS[idx] = (bool(ok), f"{idx}. {text}")


def test_1_exact_constants():
    t0 = time.perf_counter()
    q_ok = [q_curvature(3, 2), q_curvature(3, 3), q_curvature(5, 3)] == [Fraction(15, 8), Fraction(-105, 32), Fraction(945, 32)]
    polys = {
        (3, 2): ["-15/16", "-1/2", "1"],
        (3, 3): ["315/64", "27/16", "-23/4", "1"],
        (5, 3): ["-945/64", "-93/16", "13/4", "1"],
    }
    p_ok = all(expand_gjms_polynomial(n, m) == [Fraction(c) for c in cs] for (n, m), cs in polys.items())
    dt = time.perf_counter() - t0
    ok = q_ok and p_ok and dt < 1
    _record(1, ok, f"exact constants: Q and polynomials exact={q_ok and p_ok}, {dt:.3f}s (< 1s)")
    assert q_ok and p_ok
    assert dt < 1


def test_2_gamma_identity():
    t0 = time.perf_counter()
    radii = np.concatenate([[0.0], np.logspace(-2, 1, 19)])
    errs = {nm: float(np.max(gamma_identity_error(*nm, radii, 128))) for nm in [(3, 2), (3, 3)]}
    dt = time.perf_counter() - t0
    ok = all(e < 1e-8 for e in errs.values()) and dt < 10
    _record(2, ok, f"gamma identity at 20 radii: max rel err (3,2)={errs[(3, 2)]:.2e}, (3,3)={errs[(3, 3)]:.2e} (< 1e-8), {dt:.2f}s")
    assert len(radii) == 20 and radii.max() == 10
    assert all(e < 1e-8 for e in errs.values())
    assert dt < 10


def test_3_variational_reproduction():
    rule = build_quadrature(3, 64)
    L = 24
    lines, ok = [], True
    cases = [
        (ProblemParams(alpha=7.0, eps=0.1), 0.9 * (-15 / 16) * S3 ** (4 / 3), True),
        (ProblemParams(alpha=3.0, eps=0.0), -15 / 16 * S3**2, False),
    ]
    for p, target, critical in cases:
        t0 = time.perf_counter()
        res = minimize_quotient(p, rule, L, initial=seeded_initial(0, L))
        dt = time.perf_counter() - t0
        rel = abs(res.value / target - 1)
        c = constancy(res.phi, rule)
        # the subcritical target is stated as an absolute 1e-6, which is the stricter reading
        close = rel < 1e-6 if critical else abs(res.value - target) < 1e-6
        case_ok = close and dt < 60 and (c < 1e-5 or not critical)
        ok = ok and case_ok
        lines.append(f"(eps={p.eps:g},alpha={p.alpha:g}) S rel err {rel:.1e}, constancy {c:.1e}, {dt:.2f}s")
    _record(3, ok, "variational: " + "; ".join(lines))
    assert ok


def test_4_liouville_sweep():
    t0 = time.perf_counter()
    eps_grid = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5]
    sweep = liouville_sweep(eps_grid, [0.5, 3.0, 7.0], build_quadrature(3, 64), L=12, runs=5, seed=0,
                            dilation_rule=build_quadrature(3, 128))
    dt = time.perf_counter() - t0
    cells = [r for r in sweep.rows if not r.note]
    worst = max(r.constancy for r in cells)
    flagged = [r for r in sweep.rows if r.note == CONFORMAL_NOTE]
    q = [d.quotient for d in sweep.dilation]
    spread = max(abs(x / q[0] - 1) for x in q)
    maxes = [d.max_v for d in sweep.dilation]
    grows = all(a < b for a, b in zip(maxes, maxes[1:]))
    required = [r for r in cells if r.eps > 0]
    ok = len(required) == 15 and worst < 1e-5 and len(flagged) == 1 and spread < 1e-6 and grows and dt < 600
    _record(4, ok, f"Liouville sweep: {len(required)} cells (+{len(cells) - len(required)} at eps=0) x 5 runs worst constancy {worst:.1e} (< 1e-5); "
                   f"dilation quotient spread {spread:.1e} (< 1e-6), max v {['%.3f' % x for x in maxes]}; {dt:.1f}s")
    assert [d.delta for d in sweep.dilation] == [1.0, 0.5, 0.2, 0.1]
    assert ok


def test_5_integral_equation():
    rule = build_quadrature(3, 128)
    p = ProblemParams(alpha=7.0, eps=0.0)
    b = standard_bubble(p, rule)
    init = b.with_values(1.3 * b.values, 1.3 * b.tail, 1.3 * b.origin)
    res = solve_picard(p, rule, init, tol=1e-10)
    r1 = ie_residual(res.profile, p)
    dist = float(np.max(np.abs(res.profile.values / b.values - 1)))

    p2 = ProblemParams(alpha=3.0, eps=0.3)
    res2 = solve_picard(p2, rule, standard_bubble(p2, rule, 1.3), tol=1e-10)
    r2 = ie_residual(res2.profile, p2)
    mb = mass_balance_residual(res2.profile.sphere_function(), p2, rule)
    dev = float(np.max(np.abs(res2.profile.values / trivial_profile(p2, rule).values - 1)))
    ok = res.converged and r1 < 1e-6 and dist < 1e-6 and r2 < 1e-8 and mb < 1e-8 and dev < 1e-6
    _record(5, ok, f"IE solver: bubble residual {r1:.1e} (< 1e-6, distance {dist:.1e}); "
                   f"trivial branch residual {r2:.1e} (< 1e-8), mass balance {mb:.1e} (< 1e-8)")
    assert ok


def test_6_pohozaev():
    rule = build_quadrature(3, 128)
    res = {}
    for alpha in (3.0, 5.0):
        p = ProblemParams(alpha=alpha, eps=0.0)
        res[f"bubble a={alpha:g}"] = pohozaev_residual(standard_bubble(p, rule), p).residual
    for eps in (0.0, 0.1, 0.2):
        p = ProblemParams(alpha=3.0, eps=eps)
        sol = solve_picard(p, rule, standard_bubble(p, rule, 1.3))
        assert sol.converged
        res[f"solver eps={eps:g}"] = pohozaev_residual(sol.profile, p).residual
    p = ProblemParams(alpha=3.0, eps=0.0)
    table = boundary_decay_check(standard_bubble(p, rule), p)
    worst = max(res.values())
    ok = worst < 1e-6 and table.decaying and table.ratio >= 1e4
    _record(6, ok, f"Pohozaev: worst residual {worst:.1e} over {len(res)} cases (< 1e-6); boundary decay R=1..100 x{table.ratio:.3g} (>= 1e4)")
    assert table.radii[0] == 1 and table.radii[-1] == 100
    assert ok


def test_7_inequality_suites():
    rule = build_quadrature(3, 64)
    suites = [sobolev_trial_suite(ProblemParams(alpha=a, eps=0.0), rule, 1000, tol=1e-10) for a in (0.5, 3.0, 7.0)]
    suites.append(log_sobolev_trial_suite(3, 2, rule, 1000, tol=1e-10))
    chain = chain_verify(ProblemParams(), rule, 500, tol=1e-10)
    suites.append(chain)
    violations = sum(len(s.violations) for s in suites)
    eq = max(s.equality_error for s in suites)
    per_arrow = chain.details["checked_per_step"]
    ok = violations == 0 and eq < 1e-12 and min(per_arrow.values()) >= 500
    _record(7, ok, f"inequality suites: {violations} violations in 3x1000 Sobolev + 1000 log-Sobolev + "
                   f"{min(per_arrow.values())} chain trials per arrow; constant-trial equality {eq:.1e} (< 1e-12)")
    assert ok


def _gradient_fd_error():
    rule = build_quadrature(3, 64)
    worst = 0.0
    for alpha in (0.5, 3.0, 7.0):
        J = QuotientFunctional(ProblemParams(alpha=alpha, eps=0.1), rule, 8)
        c = seeded_initial(1, 8)
        _, g = J.value_and_grad(c)
        h = 1e-5
        fd = np.array([(J.value(c + h * e) - J.value(c - h * e)) / (2 * h) for e in np.eye(9)])
        worst = max(worst, float(np.max(np.abs(fd - g)) / np.max(np.abs(g))))
    return worst


def test_8_property_suite(capsys):
    rule = build_quadrature(3, 64)
    rng = np.random.default_rng(0)
    a = rng.standard_normal(40)
    f = ZonalFunction(3, a)
    rt = float(np.max(np.abs(analyze(synthesize(f, rule), rule, 39).coeffs - a)) / np.max(np.abs(a)))
    pars = abs(lebesgue_integral(f, 2, rule) / l2_norm_sq(f) - 1)
    u = pullback_to_plane(ZonalFunction(3, np.array([1.0, 0.3, 0.1])), rule, 2)
    kv = float(np.max(np.abs(kelvin(kelvin(u)).values / u.values - 1)))
    gr = _gradient_fd_error()

    t0 = time.perf_counter()
    code = cli_run(["all", "--timestamp", "acceptance"])
    capsys.readouterr()
    dt = time.perf_counter() - t0
    ok = gr < 1e-6 and rt < 1e-12 and kv < 1e-10 and pars < 1e-10 and code == 0 and dt < 900
    _record(8, ok, f"properties: gradient/FD {gr:.1e} (< 1e-6), round trip {rt:.1e} (< 1e-12), "
                   f"Kelvin {kv:.1e} (< 1e-10), Parseval {pars:.1e} (< 1e-10); `gjms all` exit {code} in {dt:.1f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

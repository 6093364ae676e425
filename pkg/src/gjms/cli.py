"""Command-line entry point: run checks and write JSON/CSV reports.

Exit status is 0 when every check passes, 1 when any fails and 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from gjms import __version__
from gjms import constants as C
from gjms import diagnostics as D
from gjms import radial_ie as IE
from gjms import stereo as ST
from gjms import variational as V
from gjms import zonal as Z

FLOOR = 1e-14

# displayed polynomials and curvatures used as external reference values
KNOWN_Q = {(3, 2): Fraction(15, 8), (3, 3): Fraction(-105, 32), (5, 3): Fraction(945, 32)}
KNOWN_POLY = {
    (3, 2): [Fraction(-15, 16), Fraction(-1, 2), Fraction(1)],
    (3, 3): [Fraction(315, 64), Fraction(27, 16), Fraction(-23, 4), Fraction(1)],
    (5, 3): [Fraction(-945, 64), Fraction(-93, 16), Fraction(13, 4), Fraction(1)],
}


# ---------------------------------------------------------------------------
# report


@dataclass
class CheckRecord:
    """One check.  ``kind`` selects the predicate:

    equality   |computed - reference| <= tolerance * max(|reference|, floor)
    at_least   computed >= reference - tolerance * max(|reference|, floor)
    at_most    computed <= reference + tolerance * max(|reference|, floor)
    """

    name: str
    computed: object
    reference: object
    tolerance: float
    kind: str = "equality"
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.evaluate()

    def evaluate(self) -> bool:
        c, r = self.computed, self.reference
        if isinstance(c, bool) or isinstance(r, bool):
            return bool(c) == bool(r)
        if isinstance(c, (list, tuple)):
            return list(c) == list(r)
        if isinstance(c, Fraction) and isinstance(r, Fraction) and self.tolerance == 0:
            return c == r
        c, r = float(c), float(r)
        if not math.isfinite(c):
            return False
        slack = self.tolerance * max(abs(r), FLOOR)
        if self.kind == "equality":
            return abs(c - r) <= slack
        if self.kind == "at_least":
            return c >= r - slack
        if self.kind == "at_most":
            return c <= r + slack
        raise ValueError(f"unknown check kind {self.kind}")


@dataclass
class Report:
    command: str
    params: dict
    seed: int
    records: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: str = ""

    def add(self, name, computed, reference, tolerance, kind="equality") -> CheckRecord:
        rec = CheckRecord(name, computed, reference, tolerance, kind)
        self.records.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def ordered(self) -> dict:
        return {
            "tool": "gjms",
            "version": self.version,
            "timestamp": self.timestamp,
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "passed": self.passed,
            "records": [
                {
                    "name": r.name,
                    "computed": r.computed,
                    "reference": r.reference,
                    "tolerance": r.tolerance,
                    "kind": r.kind,
                    "pass": r.passed,
                }
                for r in self.records
            ],
            "info": self.info,
            "artifacts": self.artifacts,
        }

    def to_json(self) -> str:
        return _dump(self.ordered()) + "\n"

    def to_csv(self) -> str:
        lines = ["name,computed,reference,tolerance,kind,pass"]
        for r in self.records:
            lines.append(
                ",".join(
                    [r.name, _scalar(r.computed), _scalar(r.reference), _scalar(r.tolerance), r.kind, str(r.passed).lower()]
                )
            )
        return "\n".join(lines) + "\n"


def _scalar(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return f"{x:.17g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (list, tuple)):
        return " ".join(_scalar(v) for v in x)
    return str(x)


def _dump(x, indent: int = 0) -> str:
    """JSON with keys in insertion order and floats at 17 significant digits.

    Exact rationals are written as strings such as "15/8"; non-finite
    floats as the strings "inf", "-inf", "nan".
    """
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f'{pad}"{k}": {_dump(v, indent + 1)}' for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        items = [pad + _dump(v, indent + 1) for v in x]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return f'"{x}"'
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return f"{x:.17g}"
        return f'"{x}"'
    s = str(x).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


# ---------------------------------------------------------------------------
# commands


def _params(args, liouville=False) -> C.ProblemParams:
    p = C.ProblemParams.unchecked(args.n, args.m, float(args.alpha), float(args.eps))
    p.validate(liouville=liouville)
    return p


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


class _Artifacts:
    def __init__(self, args, report: Report):
        self.base = Path(args.out) if args.out else None
        self.report = report

    def write(self, suffix: str, text: str) -> None:
        if self.base is None:
            return
        path = self.base.with_name(f"{self.base.stem}_{suffix}")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.report.artifacts.append(path.name)


def cmd_constants(args, rep: Report, art: _Artifacts) -> None:
    n, m = args.n, args.m
    C._check_nm(n, m)
    Q = C.q_curvature(n, m)
    poly = C.expand_gjms_polynomial(n, m)
    e0 = C.gjms_eigenvalue(n, m, 0)
    rep.info.update(
        {
            "Q": Q,
            "P(1)": C.gamma_ratio(n, m),
            "eigenvalues": [C.gjms_eigenvalue(n, m, ell) for ell in range(4)],
            "critical_alpha": C.critical_alpha(n, m),
            "c_alpha": C.c_alpha(n, m, float(args.alpha)),
            "surface_area": C.sphere_surface_area(n),
        }
    )
    if (n, m) in KNOWN_Q:
        rep.add("q_curvature", Q, KNOWN_Q[(n, m)], 0)
        rep.add("polynomial", [str(c) for c in poly], [str(c) for c in KNOWN_POLY[(n, m)]], 0)
    rep.add("constant_term_is_P(1)", poly[0], e0, 0)
    rep.add("Q_times_(n-2m)/2_is_e0", Q * Fraction(n - 2 * m, 2), e0, 0)
    rep.add("c_alpha_at_critical", C.c_alpha(n, m, C.critical_alpha(n, m)), Fraction(0), 0)
    if n == 2 * m - 1 and 0 < args.alpha <= 2 * n + 1 and args.alpha != 1:
        rep.info["sharp_constant"] = C.sharp_constant(n, m, float(args.alpha))


def cmd_expand(args, rep: Report, art: _Artifacts) -> None:
    n, m = args.n, args.m
    poly = C.expand_gjms_polynomial(n, m)
    rep.info["coefficients_neg_laplacian"] = poly
    rep.info["coefficients_laplacian"] = C.to_laplacian_powers(poly)
    rep.add("leading_coefficient", poly[-1], Fraction(1), 0)
    for ell in range(11):
        val = C.evaluate_polynomial(poly, C.laplace_eigenvalue(n, ell))
        rep.add(f"reproduces_e_{ell}", val, C.gjms_eigenvalue(n, m, ell), 0)
    if (n, m) in KNOWN_POLY:
        rep.add("polynomial", [str(c) for c in poly], [str(c) for c in KNOWN_POLY[(n, m)]], 0)


def cmd_gamma(args, rep: Report, art: _Artifacts) -> None:
    n, m = args.n, args.m
    C._check_nm(n, m)
    res = _ie_nodes(args)
    g = ST.compute_gamma(n, m, res)
    rep.add("gamma_vs_closed_form", g, ST.gamma_closed_form(n, m), _tol(args, 1e-8))
    rep.add("gamma_positive", g, 0.0, 0, "at_least")
    radii = np.concatenate([[0.0], np.logspace(-2, 1, 19)])
    err = IE.gamma_identity_error(n, m, radii, res)
    rep.records.append(CheckRecord("identity_max_rel_error_20_radii", float(err.max()), _tol(args, 1e-8), 0, "at_most"))
    rep.info["gamma"] = g
    rep.info["identity_nodes"] = res
    rep.info["fundamental_constant_c_2m_n"] = ST.fundamental_constant(n, m, res)


def _ie_nodes(args) -> int:
    # the plane grid defaults to 128 nodes; --resolution can only raise it
    return max(args.resolution, IE.DEFAULT_IE_NODES)


def _ie_rule(args):
    return Z.build_quadrature(args.n, _ie_nodes(args))


def cmd_solve_ie(args, rep: Report, art: _Artifacts) -> None:
    p = _params(args)
    rule = _ie_rule(args)
    b = IE.standard_bubble(p, rule)
    init = b.with_values(1.3 * b.values, 1.3 * b.tail, 1.3 * b.origin)
    tol = _tol(args, 1e-9)
    res = IE.solve_picard(p, rule, init, tol=tol)
    art.write("picard_trace.csv", res.trace_csv())
    art.write("solution.csv", res.profile.to_csv())
    rep.records.append(CheckRecord("picard_converged", res.converged, True, 0))
    rep.records.append(CheckRecord("ie_residual", IE.ie_residual(res.profile, p), max(tol, 1e-8), 0, "at_most"))
    rep.records.append(CheckRecord("tail_exponent", res.profile.fit_exponent(), p.k, 0.02))
    v = res.profile.sphere_function()
    rep.records.append(CheckRecord("mass_balance", V.mass_balance_residual(v, p, rule), 1e-8, 0, "at_most"))
    rep.info["iterations"] = len(res.trace) - 1
    rep.info["constancy_of_pushforward"] = V.constancy(v, rule)
    if p.is_critical and p.eps == 0:
        err = float(np.max(np.abs(res.profile.values / b.values - 1)))
        rep.records.append(CheckRecord("distance_to_bubble", err, 1e-6, 0, "at_most"))
    else:
        rep.info["trivial_solution"] = p.trivial_solution()


def cmd_minimize(args, rep: Report, art: _Artifacts) -> None:
    p = _params(args)
    rule = Z.build_quadrature(args.n, args.resolution)
    L = min(args.degree, rule.size - 1)
    res = V.minimize_quotient(p, rule, L, initial=V.seeded_initial(args.seed, L))
    S = V.multiplier(res.phi, res.value, p, rule)
    sol = V.rescale_to_solution(res.phi, S, p)
    art.write("minimizer.csv", Z.to_csv(res.phi, rule))
    rep.records.append(CheckRecord("descent_converged", res.converged, True, 0))
    rep.records.append(CheckRecord("constancy", V.constancy(res.phi, rule), V.CONSTANCY_TOL, 0, "at_most"))
    rep.add("S_eps_vs_closed_form", res.value, C.predicted_infimum(p.n, p.m, p.alpha, p.eps), _tol(args, 1e-6))
    rep.records.append(CheckRecord("euler_lagrange_residual", V.euler_lagrange_residual(res.phi, p, S, rule), 1e-6, 0, "at_most"))
    rep.records.append(CheckRecord("mass_balance_rescaled", V.mass_balance_residual(sol, p, rule), 1e-6, 0, "at_most"))
    trace = np.asarray(res.trace)
    rise = float(np.max(np.diff(trace) / np.abs(trace[:-1]))) if len(trace) > 1 else 0.0
    rep.records.append(CheckRecord("trace_nonincreasing", rise, 1e-14, 0, "at_most"))
    rep.info.update({"iterations": res.iterations, "message": res.message, "multiplier": S})


def cmd_sweep_liouville(args, rep: Report, art: _Artifacts) -> None:
    C._check_nm(args.n, args.m)
    rule = Z.build_quadrature(args.n, args.resolution)
    crit = float(C.critical_alpha(args.n, args.m))
    eps_grid = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5]
    alpha_grid = [0.5, 3.0, crit]
    L = min(12, args.degree)
    sw = V.liouville_sweep(
        eps_grid, alpha_grid, rule, args.n, args.m, L=L, runs=5, seed=args.seed,
        dilation_rule=Z.build_quadrature(args.n, max(256, args.resolution)),
    )
    art.write("liouville.csv", sw.to_csv())
    for r in sw.rows:
        tag = f"eps={r.eps:g},alpha={r.alpha:g}"
        if r.note:
            qs = [d.quotient for d in sw.dilation]
            spread = max(abs(q / qs[0] - 1) for q in qs)
            rep.records.append(CheckRecord(f"dilation_quotient_spread[{tag}]", spread, 1e-6, 0, "at_most"))
            mx = [d.max_v for d in sw.dilation]
            rep.records.append(CheckRecord(f"dilation_max_increasing[{tag}]", bool(np.all(np.diff(mx) > 0)), True, 0))
            rep.info[f"note[{tag}]"] = r.note
        else:
            rep.records.append(CheckRecord(f"constancy[{tag}]", r.constancy, V.CONSTANCY_TOL, 0, "at_most"))
            rep.add(f"S_eps[{tag}]", r.S_eps, r.S_eps_predicted, 1e-6)
    rep.info["empirical_constancy_threshold"] = sw.threshold


def cmd_sweep_compactness(args, rep: Report, art: _Artifacts) -> None:
    p = _params(args)
    rule = Z.build_quadrature(args.n, args.resolution)
    eps_grid = [0.1 * j for j in range(1, 10)]
    L = min(12, args.degree)
    if p.is_critical:
        dil = V.dilation_family(p, Z.build_quadrature(args.n, max(256, args.resolution)))
        mx = [d.max_v for d in dil]
        rep.records.append(CheckRecord("dilation_max_increasing", bool(np.all(np.diff(mx) > 0)), True, 0))
        rep.info["dilation_max_v"] = mx
    cs = V.compactness_sweep(eps_grid, p.alpha, rule, p.n, p.m, L=L, seed=args.seed)
    art.write("compactness.csv", cs.to_csv())
    rep.records.append(CheckRecord("empirical_C_finite", math.isfinite(cs.two_sided_bound), True, 0))
    for r in cs.rows:
        exact = C.ProblemParams.unchecked(p.n, p.m, p.alpha, r.eps).trivial_solution()
        rep.add(f"min_v[eps={r.eps:.1f}]", r.min_v, exact, 1e-6)
        rep.add(f"max_v[eps={r.eps:.1f}]", r.max_v, exact, 1e-6)
    rep.info["empirical_C_ratio"] = cs.ratio_bound
    rep.info["empirical_C_two_sided"] = cs.two_sided_bound


def _suite_records(rep: Report, suite: D.SuiteResult, rule, art: _Artifacts, tol: float) -> None:
    rep.records.append(CheckRecord(f"{suite.name}_violations", len(suite.violations), 0, 0))
    rep.records.append(CheckRecord(f"{suite.name}_min_relative_slack", suite.min_slack, -tol, 0, "at_least"))
    rep.records.append(CheckRecord(f"{suite.name}_constant_equality", suite.equality_error, 1e-12, 0, "at_most"))
    rep.info[f"{suite.name}_skipped"] = suite.skipped
    if suite.violations and art.base is not None:
        for path in D.dump_violations(suite, rule, art.base.parent):
            rep.artifacts.append(path.name)


def _sobolev_n_m(args):
    C._check_nm(args.n, args.m)
    if args.n != 2 * args.m - 1:
        raise ValueError("inequality suites need n = 2m - 1")


def cmd_check_sobolev(args, rep: Report, art: _Artifacts) -> None:
    _sobolev_n_m(args)
    rule = Z.build_quadrature(args.n, args.resolution)
    tol = _tol(args, D.DEFAULT_TOL)
    alphas = [float(args.alpha)] if args.alpha_given else [0.5, 3.0, float(2 * args.n + 1)]
    for a in alphas:
        p = C.ProblemParams.unchecked(args.n, args.m, a, 0.0)
        suite = D.sobolev_trial_suite(p, rule, args.trials, args.seed, L=args.degree, tol=tol)
        _suite_records(rep, suite, rule, art, tol)


def cmd_check_logsobolev(args, rep: Report, art: _Artifacts) -> None:
    _sobolev_n_m(args)
    rule = Z.build_quadrature(args.n, args.resolution)
    tol = _tol(args, D.DEFAULT_TOL)
    suite = D.log_sobolev_trial_suite(args.n, args.m, rule, args.trials, args.seed, L=args.degree, tol=tol)
    _suite_records(rep, suite, rule, art, tol)


def cmd_check_chain(args, rep: Report, art: _Artifacts) -> None:
    _sobolev_n_m(args)
    rule = Z.build_quadrature(args.n, args.resolution)
    tol = _tol(args, D.DEFAULT_TOL)
    p = C.ProblemParams.unchecked(args.n, args.m, 1.0, 0.0)
    suite = D.chain_verify(p, rule, args.trials, args.seed, L=args.degree, tol=tol)
    _suite_records(rep, suite, rule, art, tol)
    rep.info["chain_checked_per_step"] = suite.details.get("checked_per_step", {})


def cmd_check_pohozaev(args, rep: Report, art: _Artifacts) -> None:
    C._check_nm(args.n, args.m)
    rule = _ie_rule(args)
    crit = float(C.critical_alpha(args.n, args.m))
    tol = _tol(args, 1e-6)
    for a in sorted({3.0, 5.0, min(crit, 7.0)}):
        if a > crit:
            continue
        p = C.ProblemParams.unchecked(args.n, args.m, a, 0.0)
        res = D.pohozaev_residual(IE.standard_bubble(p, rule), p)
        rep.records.append(CheckRecord(f"pohozaev_bubble[alpha={a:g}]", res.residual, tol, 0, "at_most"))
    for eps in (0.0, 0.1, 0.2):
        p = C.ProblemParams.unchecked(args.n, args.m, 3.0, eps)
        sol = IE.solve_picard(p, rule, IE.standard_bubble(p, rule))
        res = D.pohozaev_residual(sol.profile, p)
        rep.records.append(CheckRecord(f"pohozaev_solution[eps={eps:g},alpha=3]", res.residual, tol, 0, "at_most"))
    p = C.ProblemParams.unchecked(args.n, args.m, 3.0, 0.0)
    table = D.boundary_decay_check(IE.standard_bubble(p, rule), p)
    rep.records.append(CheckRecord("boundary_term_decay_ratio_R1_to_R100", table.ratio, 1e4, 0, "at_least"))
    rep.records.append(CheckRecord("boundary_term_monotone", table.decaying, True, 0))
    value, mass = D.kelvin_antisymmetry(IE.standard_bubble(p, rule), p)
    rep.records.append(CheckRecord("antisymmetric_double_sum", abs(value) / mass, 1e-8, 0, "at_most"))


def cmd_check_moving_plane(args, rep: Report, art: _Artifacts) -> None:
    p = _params(args)
    rule = _ie_rule(args)
    lambdas = [0.1, 0.5, 1.0, 2.0]
    b = IE.standard_bubble(p, rule)
    for lam, w in D.moving_plane_min(b, lambdas).items():
        rep.records.append(CheckRecord(f"w_min_bubble[lambda={lam:g}]", w, -1e-12, 0, "at_least"))
    p0 = p.replace(eps=0.0)
    cmp0 = D.f_comparison_check(b, p0, lambdas)
    for lam, val in cmp0.minima.items():
        rep.records.append(CheckRecord(f"F_comparison_bubble_eps0[lambda={lam:g}]", val, -1e-12, 0, "at_least"))
    if p.eps > 0:
        sol = IE.solve_picard(p, rule, b).profile
        for lam, w in D.moving_plane_min(sol, lambdas).items():
            rep.records.append(CheckRecord(f"w_min_solution[lambda={lam:g}]", w, -1e-10, 0, "at_least"))
        cmp = D.f_comparison_check(sol, p, lambdas)
        for lam, val in cmp.minima.items():
            rep.records.append(CheckRecord(f"F_comparison_solution[lambda={lam:g}]", val, -1e-8, 0, "at_least"))
        for lam, why in cmp.skipped.items():
            rep.info[f"F_comparison_skipped[lambda={lam:g}]"] = why


def cmd_properties(args, rep: Report, art: _Artifacts) -> None:
    """Gradient, transform and Kelvin consistency checks."""
    rule = Z.build_quadrature(args.n, args.resolution)
    rng = np.random.default_rng(args.seed)
    L = min(args.degree, rule.size // 2)
    # analyze o synthesize
    a = rng.standard_normal(L + 1) / (1 + np.arange(L + 1))
    f = Z.ZonalFunction(args.n, a)
    back = Z.analyze(Z.synthesize(f, rule), rule, L)
    rep.records.append(CheckRecord("round_trip", float(np.max(np.abs(back.coeffs - a)) / np.max(np.abs(a))), 1e-12, 0, "at_most"))
    # Parseval
    par = Z.lebesgue_integral(Z.synthesize(f, rule), 2, rule)
    rep.add("parseval", par, Z.l2_norm_sq(f), 1e-10)
    # spectral vs pointwise energy
    pointwise = rule.integrate(f.values(rule) * Z.apply_gjms(f, args.m).values(rule))
    rep.add("energy_spectral_vs_pointwise", Z.energy(f, args.m), pointwise, 1e-10)
    # Kelvin involution and the south-pole identity
    v = Z.random_positive_zonal(args.seed, 6, 0.5, rule)
    u = ST.pullback_to_plane(v, rule, args.m)
    kk = ST.kelvin(ST.kelvin(u))
    rep.records.append(CheckRecord("kelvin_involution", float(np.max(np.abs(kk.values / u.values - 1))), 1e-10, 0, "at_most"))
    us = ST.pullback_to_plane(v, rule, args.m, pole="south")
    rep.records.append(
        CheckRecord("south_pole_equals_kelvin", float(np.max(np.abs(ST.kelvin(u).values / us.values - 1))), 1e-10, 0, "at_most")
    )
    # gradient vs central differences
    p = _params(args)
    Lg = min(12, rule.size - 1)
    J = V.QuotientFunctional(p, rule, Lg)
    worst = 0.0
    h = 1e-5
    for _ in range(10):
        c = 0.2 * rng.standard_normal(Lg + 1) / (1 + np.arange(Lg + 1))
        _, g = J.value_and_grad(c)
        fd = np.empty_like(g)
        for i in range(Lg + 1):
            e = np.zeros(Lg + 1)
            e[i] = h
            fd[i] = (J.value(c + e) - J.value(c - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - g)) / np.max(np.abs(g))))
    rep.records.append(CheckRecord("gradient_vs_finite_differences", worst, 1e-6, 0, "at_most"))


COMMANDS = {
    "constants": (cmd_constants, "exact Q-curvature, P(1), eigenvalues (anchor: Q = 2/(n-2m) P(1))"),
    "expand": (cmd_expand, "GJMS polynomial in powers of -Laplacian (anchor: product of shifted Laplacians)"),
    "gamma": (cmd_gamma, "gamma_{2m,n} and the v = 1 kernel identity (anchor: integral form of the equation)"),
    "solve-ie": (cmd_solve_ie, "damped Picard solve of the radial integral equation (anchor: u = gamma K[F])"),
    "minimize": (cmd_minimize, "minimize the eps-perturbed quotient (anchor: S_eps infimum and its minimizer)"),
    "sweep-liouville": (cmd_sweep_liouville, "constancy of minimizers over eps x alpha (anchor: Liouville-type constancy)"),
    "sweep-compactness": (cmd_sweep_compactness, "uniform bounds across eps (anchor: 1/C <= v <= C)"),
    "check-sobolev": (cmd_check_sobolev, "sharp Sobolev inequality on random trials (anchor: sharp constant Gamma-ratio |S^n|^((a+1)/(a-1)))"),
    "check-logsobolev": (cmd_check_logsobolev, "limiting log-Sobolev inequality (anchor: alpha -> 1 limit)"),
    "check-pohozaev": (cmd_check_pohozaev, "Pohozaev identity and boundary decay (anchor: x . grad Q identity)"),
    "check-moving-plane": (cmd_check_moving_plane, "moving-plane positivity and F comparison (anchor: w_lambda >= 0)"),
    "check-chain": (cmd_check_chain, "implication chain critical -> beta -> log -> alpha (anchor: Hoelder and Jensen steps)"),
    "all": (None, "run every command above plus the property checks"),
}

ALL_ORDER = [
    "constants", "expand", "gamma", "solve-ie", "minimize", "sweep-liouville", "sweep-compactness",
    "check-sobolev", "check-logsobolev", "check-pohozaev", "check-moving-plane", "check-chain",
]


def build_parser() -> argparse.ArgumentParser:
    epilog = "commands:\n" + "\n".join(f"  {name:<20} {text}" for name, (_, text) in COMMANDS.items())
    parser = argparse.ArgumentParser(
        prog="gjms",
        description="Numerical checks for GJMS operators on odd spheres.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=list(COMMANDS), metavar="command", help="one of the commands listed below")
    parser.add_argument("--n", type=int, default=3, help="sphere dimension (odd, >= 3)")
    parser.add_argument("--m", type=int, default=2, help="half the operator order (2m > n)")
    parser.add_argument("--alpha", type=float, default=None, help="exponent alpha (default 7)")
    parser.add_argument("--eps", type=float, default=0.1, help="perturbation eps in [0, 1)")
    parser.add_argument("--degree", type=int, default=24, help="spectral degree L")
    parser.add_argument("--resolution", type=int, default=64, help="quadrature nodes N")
    parser.add_argument("--trials", type=int, default=1000, help="trials per inequality suite")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed")
    parser.add_argument("--tol", type=float, default=None, help="override the headline tolerance")
    parser.add_argument("--out", default=None, help="report path (default: standard output)")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--timestamp", default=None, help=argparse.SUPPRESS)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.alpha_given = args.alpha is not None
    if args.alpha is None:
        args.alpha = 7.0
    if args.resolution < 4:
        parser.print_usage(sys.stderr)
        print("gjms: error: --resolution must be >= 4", file=sys.stderr)
        return 2
    params = {"n": args.n, "m": args.m, "alpha": args.alpha, "eps": args.eps, "degree": args.degree,
              "resolution": args.resolution, "trials": args.trials, "tol": args.tol}
    rep = Report(args.command, params, args.seed)
    rep.timestamp = args.timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    art = _Artifacts(args, rep)
    names = ALL_ORDER if args.command == "all" else [args.command]
    try:
        for name in names:
            before = len(rep.records)
            COMMANDS[name][0](args, rep, art)
            for r in rep.records[before:]:
                r.name = f"{name}:{r.name}" if args.command == "all" else r.name
        if args.command == "all":
            before = len(rep.records)
            cmd_properties(args, rep, art)
            for r in rep.records[before:]:
                r.name = f"properties:{r.name}"
    except (ValueError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"gjms: error: {exc}", file=sys.stderr)
        return 2
    text = rep.to_json() if args.format == "json" else rep.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Minimization of the eps-perturbed Sobolev quotient over positive zonal functions.

Trial functions are parametrized as phi = exp(psi) with psi a zonal
polynomial of degree L, so positivity is structural.  The discrete
functional evaluates int phi^{1-alpha} by Gauss quadrature and the quadratic
part spectrally after projecting phi onto degrees < N.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from gjms.constants import ProblemParams, predicted_infimum, sphere_surface_area
from gjms.zonal import (
    QuadratureRule,
    ZonalFunction,
    analysis_matrix,
    analyze,
    apply_gjms,
    basis_sq_norms,
    gjms_spectrum,
    lebesgue_integral,
    sobolev_quotient,
)
from gjms.stereo import dilate

log = logging.getLogger(__name__)


class QuotientFunctional:
    """J(c) = A(c)^{2/(alpha-1)} E(c) as a function of the psi-coefficients c."""

    def __init__(self, params: ProblemParams, rule: QuadratureRule, L: int):
        if params.alpha == 1:
            raise ValueError("alpha = 1 is excluded from the quotient")
        if L > rule.size - 1:
            raise ValueError("psi degree exceeds the quadrature resolution")
        self.params = params
        self.rule = rule
        self.L = L
        n, m = params.n, params.m
        N = rule.size
        self.synth = rule.basis[: L + 1].T  # (N, L+1)
        self.M = analysis_matrix(rule)  # (N, N)
        hsq = basis_sq_norms(n, N - 1)
        e = gjms_spectrum(n, m, N - 1)
        self.D = (e - params.eps * params.p1) * hsq
        self.p = 2.0 / (params.alpha - 1.0)
        self.area = sphere_surface_area(n)
        # Sobolev-type metric used to precondition the gradient
        self.metric = (np.abs(e[: L + 1] - params.eps * params.p1) + abs(params.p1)) * hsq[: L + 1]

    def phi(self, c: np.ndarray) -> np.ndarray:
        return np.exp(self.synth @ c)

    def parts(self, phi: np.ndarray):
        a = self.M @ phi
        E = float(np.sum(self.D * a * a))
        A = self.rule.integrate(phi ** (1 - self.params.alpha))
        return A, E, a

    def value(self, c: np.ndarray) -> float:
        A, E, _ = self.parts(self.phi(c))
        return A**self.p * E

    def value_and_grad(self, c: np.ndarray):
        alpha = self.params.alpha
        phi = self.phi(c)
        A, E, a = self.parts(phi)
        Ap = A**self.p
        dphi = self.p * A ** (self.p - 1) * E * (1 - alpha) * self.rule.sphere_weights * phi ** (-alpha)
        dphi += 2 * Ap * (self.M.T @ (self.D * a))
        return Ap * E, self.synth.T @ (phi * dphi)

    def precondition(self, c: np.ndarray, g: np.ndarray) -> np.ndarray:
        # A^p * mean(phi^2) makes the step invariant under phi -> s phi
        phi = self.phi(c)
        A, _, _ = self.parts(phi)
        scale = A**self.p * self.rule.integrate(phi * phi) / self.area
        return g / (2 * scale * self.metric)


@dataclass
class MinimizeResult:
    phi: ZonalFunction
    value: float
    psi: np.ndarray
    trace: list = field(default_factory=list)
    converged: bool = False
    message: str = ""
    iterations: int = 0


def minimize_quotient(
    params: ProblemParams,
    rule: QuadratureRule,
    L: int = 12,
    initial: np.ndarray | None = None,
    gtol: float = 1e-9,
    max_iter: int = 5000,
    armijo: float = 1e-4,
    min_step: float = 1e-12,
) -> MinimizeResult:
    """Preconditioned steepest descent with Armijo backtracking.

    ``initial`` holds psi-coefficients (length <= L+1); the default is psi = 0,
    i.e. phi = 1, which is already a critical point.  The returned minimizer
    is normalized so that int phi^{1-alpha} dmu = 1.
    """
    J = QuotientFunctional(params, rule, L)
    c = np.zeros(L + 1)
    if initial is not None:
        initial = np.asarray(initial, dtype=float)
        c[: len(initial)] = initial[: L + 1]
    val, g = J.value_and_grad(c)
    trace = [val]
    step = 1.0
    converged = False
    message = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        # relative to |J|: the quotient spans many orders of magnitude across alpha
        gnorm = np.max(np.abs(g[1:])) / abs(val) if L > 0 else 0.0
        if gnorm < gtol:
            converged = True
            message = "gradient below tolerance"
            it -= 1
            break
        d = -J.precondition(c, g)
        slope = float(g @ d)
        step = min(1.0, 2 * step)
        accepted = False
        while step >= min_step:
            trial = c + step * d
            # long trial steps may overflow phi^{-alpha}; such steps are simply rejected
            with np.errstate(over="ignore", invalid="ignore"):
                tval, tg = J.value_and_grad(trial)
            if not (np.isfinite(tval) and np.all(np.isfinite(tg))):
                step *= 0.5
                continue
            if tval <= val + armijo * step * slope:
                accepted = True
                break
            # below the rounding floor of J, fall back to a decrease of the gradient
            if abs(tval - val) <= 8 * np.finfo(float).eps * abs(val) and (
                np.max(np.abs(tg[1:])) < np.max(np.abs(g[1:]))
            ):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            message = "line search stalled"
            converged = gnorm < 1e3 * gtol
            it -= 1
            break
        c, val, g = trial, tval, tg
        trace.append(val)
    phi_grid = J.phi(c)
    A = rule.integrate(phi_grid ** (1 - params.alpha))
    scale = A ** (-1.0 / (1 - params.alpha))
    c[0] += math.log(scale)  # C_0 = 1, so the constant mode shifts log phi
    phi_grid = J.phi(c)
    phi = analyze(phi_grid, rule)
    return MinimizeResult(phi, J.value(c), c, trace, converged, message, it)


# ---------------------------------------------------------------------------
# Euler-Lagrange equation and the main equation


def multiplier(phi: ZonalFunction, value: float, params: ProblemParams, rule: QuadratureRule) -> float:
    """S = quotient / ||phi^{-1}||_{L^{alpha-1}}^{alpha+1}, the Lagrange multiplier of a minimizer."""
    A = lebesgue_integral(phi, 1 - params.alpha, rule)
    return value / A ** ((params.alpha + 1) / (params.alpha - 1))


def euler_lagrange_residual(v: ZonalFunction, params: ProblemParams, S: float, rule: QuadratureRule) -> float:
    """sup |P v - eps P(1) v - S v^{-alpha}| / sup |S v^{-alpha}| on the grid.

    P v is applied spectrally, v^{-alpha} pointwise.
    """
    vals = v.values(rule)
    if np.min(vals) <= 0:
        raise ValueError("v must be positive on the grid")
    Pv = apply_gjms(v, params.m).values(rule)
    rhs = S * vals ** (-params.alpha)
    lhs = Pv - params.eps * params.p1 * vals
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


def mass_balance_residual(v: ZonalFunction, params: ProblemParams, rule: QuadratureRule) -> float:
    """|(1-eps) int v - int v^{-alpha}| / int v."""
    I1 = lebesgue_integral(v, 1.0, rule)
    Ia = lebesgue_integral(v, -params.alpha, rule)
    return abs((1 - params.eps) * I1 - Ia) / I1


def rescale_to_solution(phi: ZonalFunction, S: float, params: ProblemParams) -> ZonalFunction:
    """t phi solving P v - eps P(1) v = P(1) v^{-alpha}, given P phi - eps P(1) phi = S phi^{-alpha}.

    Substituting v = t phi gives t^{1+alpha} = P(1) / S.
    """
    ratio = params.p1 / S
    if ratio <= 0:
        raise ValueError("multiplier and P(1) have opposite signs; no positive rescaling exists")
    return phi.scaled(ratio ** (1 / (1 + params.alpha)))


def constancy(v: ZonalFunction, rule: QuadratureRule) -> float:
    """sup |v / avg(v) - 1| over the grid."""
    vals = v.values(rule)
    avg = rule.integrate(vals) / sphere_surface_area(rule.n)
    return float(np.max(np.abs(vals / avg - 1)))


def seeded_initial(seed: int, L: int, amplitude: float = 0.3) -> np.ndarray:
    """Non-constant psi-coefficients with mode-ell size ~ amplitude / ell."""
    rng = np.random.default_rng(seed)
    c = np.zeros(L + 1)
    ell = np.arange(1, L + 1)
    c[1:] = amplitude * rng.standard_normal(L) / ell
    return c


# ---------------------------------------------------------------------------
# the critical case: conformal dilations


@dataclass
class DilationRow:
    delta: float
    quotient: float
    max_v: float
    min_v: float


def dilation_family(params: ProblemParams, rule: QuadratureRule, deltas=(1.0, 0.5, 0.2, 0.1)) -> list[DilationRow]:
    """Quotients and extrema of the dilated constants.

    At the critical exponent the eps = 0 quotient is the same for every
    member while max v = delta^{-(2m-n)/2} blows up as delta -> 0.
    """
    p0 = ProblemParams.unchecked(params.n, params.m, params.alpha, 0.0)
    rows = []
    for d in deltas:
        v = dilate(ZonalFunction.constant(params.n), d, rule, params.m)
        vals = v.values(rule)
        rows.append(DilationRow(float(d), sobolev_quotient(v, p0, rule), float(vals.max()), float(vals.min())))
    return rows


# ---------------------------------------------------------------------------
# sweeps

CONFORMAL_NOTE = "conformally invariant - Liouville fails"
CONSTANCY_TOL = 1e-5


@dataclass
class SweepRow:
    eps: float
    alpha: float
    constancy: float
    S_eps: float
    S_eps_predicted: float
    converged: bool
    note: str = ""


@dataclass
class LiouvilleSweep:
    rows: list
    threshold: float | None  # largest eps with all cells up to it below CONSTANCY_TOL
    dilation: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["eps,alpha,constancy,S_eps,S_eps_predicted,converged"]
        for r in self.rows:
            lines.append(
                f"{r.eps:.17g},{r.alpha:.17g},{r.constancy:.17g},{r.S_eps:.17g},{r.S_eps_predicted:.17g},{str(r.converged).lower()}"
            )
        return "\n".join(lines) + "\n"


def _cell(params: ProblemParams, rule: QuadratureRule, L: int, runs: int, seed: int) -> SweepRow:
    predicted = predicted_infimum(params.n, params.m, params.alpha, params.eps)
    worst, best, ok = 0.0, math.inf, True
    for j in range(runs):
        init = seeded_initial(seed + j, L)
        try:
            res = minimize_quotient(params, rule, L, initial=init)
        except (FloatingPointError, ValueError) as exc:
            log.warning("cell eps=%g alpha=%g run %d failed: %s", params.eps, params.alpha, j, exc)
            ok = False
            continue
        worst = max(worst, constancy(res.phi, rule))
        best = min(best, res.value)
        ok = ok and res.converged
    return SweepRow(params.eps, params.alpha, worst, best, predicted, ok)


def empirical_threshold(rows, tol: float = CONSTANCY_TOL) -> float | None:
    """Largest eps such that every cell with eps' <= eps has constancy below ``tol``."""
    flagged = [r for r in rows if not r.note]
    best = None
    for eps in sorted({r.eps for r in flagged}):
        if all(r.constancy < tol for r in flagged if r.eps <= eps):
            best = eps
        else:
            break
    return best


def liouville_sweep(
    eps_grid,
    alpha_grid,
    rule: QuadratureRule,
    n: int = 3,
    m: int = 2,
    L: int = 12,
    runs: int = 5,
    seed: int = 0,
    dilation_rule: QuadratureRule | None = None,
) -> LiouvilleSweep:
    """Minimize from ``runs`` seeded non-constant initials in every (eps, alpha) cell.

    The cell eps = 0 at the critical exponent is not minimized: the dilation
    family is evaluated instead and the cell is flagged.
    """
    rows, dil = [], []
    for eps in eps_grid:
        for alpha in alpha_grid:
            params = ProblemParams.unchecked(n, m, float(alpha), float(eps))
            if eps == 0 and params.is_critical:
                dil = dilation_family(params, dilation_rule or rule)
                qs = [d.quotient for d in dil]
                maxes = [d.max_v for d in dil]
                spread = max(abs(q / qs[0] - 1) for q in qs)
                rows.append(
                    SweepRow(
                        float(eps), float(alpha), max(maxes) / min(d.min_v for d in dil) - 1, min(qs),
                        predicted_infimum(n, m, alpha, 0.0), spread < 1e-6, CONFORMAL_NOTE,
                    )
                )
                continue
            rows.append(_cell(params, rule, L, runs, seed))
    return LiouvilleSweep(rows, empirical_threshold(rows), dil)


@dataclass
class CompactnessRow:
    eps: float
    min_v: float
    max_v: float
    converged: bool


@dataclass
class CompactnessSweep:
    rows: list
    ratio_bound: float  # sup over eps of max v / min v
    two_sided_bound: float  # smallest C with 1/C <= v <= C on every row

    def to_csv(self) -> str:
        lines = ["eps,min_v,max_v,converged"]
        lines += [f"{r.eps:.17g},{r.min_v:.17g},{r.max_v:.17g},{str(r.converged).lower()}" for r in self.rows]
        return "\n".join(lines) + "\n"


def compactness_sweep(
    eps_grid,
    alpha: float,
    rule: QuadratureRule,
    n: int = 3,
    m: int = 2,
    L: int = 12,
    seed: int = 0,
) -> CompactnessSweep:
    """Extrema of minimizers, rescaled to solve the main equation, across ``eps_grid``."""
    rows = []
    for j, eps in enumerate(eps_grid):
        params = ProblemParams.unchecked(n, m, float(alpha), float(eps))
        res = minimize_quotient(params, rule, L, initial=seeded_initial(seed + j, L))
        S = multiplier(res.phi, res.value, params, rule)
        v = rescale_to_solution(res.phi, S, params).values(rule)
        rows.append(CompactnessRow(float(eps), float(v.min()), float(v.max()), res.converged))
    ratio = max(r.max_v / r.min_v for r in rows)
    two = max(max(r.max_v, 1 / r.min_v) for r in rows)
    return CompactnessSweep(rows, ratio, two)

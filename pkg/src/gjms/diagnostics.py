"""Numerical checks of identities and inequalities on computed or sampled functions.

Covers the Pohozaev identity for radial solutions, decay of its boundary
term, moving-plane positivity, the F-comparison, the sharp Sobolev and
log-Sobolev trial suites and the chain of inequalities linking them.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from gjms.constants import ProblemParams, gamma_ratio, sharp_constant, sphere_surface_area
from gjms.radial_ie import kernel_spherical_mean, measure_weights
from gjms.stereo import RadialProfile, compute_gamma, conformal_factor, eval_F
from gjms.zonal import (
    QuadratureRule,
    ZonalFunction,
    energy,
    lebesgue_integral,
    log_sobolev_quotient,
    random_positive_zonal,
    sobolev_quotient,
    to_csv,
)

log = logging.getLogger(__name__)

ABS_FLOOR = 1e-14
DEFAULT_TOL = 1e-10


class GrowthHypothesisError(ValueError):
    """u does not grow like |x|^{2m-n} at infinity."""


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return str(x)


# ---------------------------------------------------------------------------
# Pohozaev identity


@dataclass
class PohozaevResult:
    lhs: float
    rhs: float
    residual: float


def certify_growth(u: RadialProfile, rel: float = 0.02) -> float:
    """Fitted tail exponent of u; raises unless it is 2m-n within ``rel``."""
    slope = u.fit_exponent()
    if abs(slope - u.k) > rel * abs(u.k):
        raise GrowthHypothesisError(f"tail exponent {slope:.4f} differs from {u.k}")
    if not u.certify_tail():
        raise GrowthHypothesisError("tail coefficient does not match the outermost values")
    return slope


def pohozaev_sides(u: RadialProfile, params: ProblemParams):
    """Both sides of int (x . grad Q) u^{1-alpha} = c_alpha int Q u^{1-alpha}.

    Here Q = gamma (eps f^{2m} u^{1+alpha} + f^{-c_alpha}).  Written on the
    sphere through u = f^{(n-2m)/2} v, with t the height,

        Q u^{1-alpha} dx      = gamma (eps v^2 + v^{1-alpha}) dmu
        (x . grad Q) u^{1-alpha} dx
            = gamma (1+t) [eps c_a v^2 + eps (1+alpha)(1-t) v v' + c_a v^{1-alpha}] dmu.

    Returns (lhs, rhs, mass) where mass integrates |lhs integrand|.
    """
    if params.alpha == 1:
        raise ValueError("the identity needs alpha != 1")
    if u.rule is None:
        raise ValueError("profile must live on a sphere grid")
    rule = u.rule
    v = u.sphere_function()
    t = rule.nodes
    vv = v.values(rule)
    if np.min(vv) <= 0:
        raise ValueError("u must be positive")
    dv = v.derivative().values(rule)
    gamma = compute_gamma(params.n, params.m, max(64, rule.size))
    alpha, eps, ca = params.alpha, params.eps, params.c_alpha
    dens = (1 + t) * (eps * ca * vv**2 + eps * (1 + alpha) * (1 - t) * vv * dv + ca * vv ** (1 - alpha))
    lhs = gamma * rule.integrate(dens)
    rhs = ca * gamma * rule.integrate(eps * vv**2 + vv ** (1 - alpha))
    mass = gamma * rule.integrate(np.abs(dens))
    return lhs, rhs, mass


def pohozaev_residual(u: RadialProfile, params: ProblemParams, check_growth: bool = True) -> PohozaevResult:
    """Relative Pohozaev residual |lhs - rhs| / max(|rhs|, int |lhs integrand|).

    Normalizing by the absolute mass keeps the residual meaningful at the
    critical exponent, where c_alpha = 0 and both sides vanish.
    """
    if check_growth:
        certify_growth(u)
    lhs, rhs, mass = pohozaev_sides(u, params)
    denom = max(abs(rhs), mass, ABS_FLOOR)
    return PohozaevResult(lhs, rhs, abs(lhs - rhs) / denom)


def _as_radial_callable(u) -> Callable:
    if isinstance(u, RadialProfile):
        return u.evaluate
    if callable(u):
        return u
    raise TypeError("expected a RadialProfile or a callable of the radius")


@dataclass
class DecayTable:
    radii: np.ndarray
    values: np.ndarray
    exponent: float
    decaying: bool
    ratio: float
    reason: str = ""


def boundary_decay_check(
    u,
    params: ProblemParams,
    radii=(1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0),
    min_ratio: float = 1e4,
    rel: float = 0.02,
) -> DecayTable:
    """R int_{|x|=R} Q u^{1-alpha} dsigma at each R.

    ``u`` is a RadialProfile or a callable u(r).  The table is flagged when
    the values fail to decrease monotonically, when first/last falls short
    of ``min_ratio``, or when the growth exponent of u measured between the
    two largest radii differs from 2m-n by more than ``rel``.
    """
    if params.alpha == 1:
        raise ValueError("the identity needs alpha != 1")
    R = np.asarray(radii, dtype=float)
    ufun = _as_radial_callable(u)
    uR = np.asarray(ufun(R), dtype=float)
    if np.min(uR) <= 0:
        raise ValueError("u must be positive")
    f = conformal_factor(R)
    gamma = compute_gamma(params.n, params.m)
    Qu = gamma * (params.eps * f ** (2 * params.m) * uR**2 + f ** (-params.c_alpha) * uR ** (1 - params.alpha))
    vals = R * sphere_surface_area(params.n - 1) * R ** (params.n - 1) * Qu
    exponent = float(np.log(uR[-1] / uR[-2]) / np.log(R[-1] / R[-2]))
    ratio = float(vals[0] / vals[-1]) if vals[-1] > 0 else math.inf
    reasons = []
    if np.any(np.diff(vals) >= 0):
        reasons.append("not monotonically decreasing")
    if ratio < min_ratio:
        reasons.append(f"decay ratio {ratio:.3g} below {min_ratio:.3g}")
    if abs(exponent - params.k) > rel * abs(params.k):
        reasons.append(f"growth exponent {exponent:.4f} differs from {params.k}")
    return DecayTable(R, vals, exponent, not reasons, ratio, "; ".join(reasons))


def kelvin_antisymmetry(u: RadialProfile, params: ProblemParams) -> tuple[float, float]:
    """Double sum of (|x|^2-|y|^2) |x-y|^{2m-n-2} Q u^{-alpha}(x) Q u^{-alpha}(y).

    Returns (value, absolute mass); the integrand is antisymmetric, so the
    value should vanish relative to the mass.
    """
    if u.rule is None:
        raise ValueError("profile must live on a sphere grid")
    rule = u.rule
    r = u.r
    gamma = compute_gamma(params.n, params.m, max(64, rule.size))
    g = gamma * eval_F(u, params) * measure_weights(rule)
    M = kernel_spherical_mean(params.n, params.k - 2, r[:, None], r[None, :])
    A = (r[:, None] ** 2 - r[None, :] ** 2) * M * g[:, None] * g[None, :]
    return float(np.sum(A)), float(np.sum(np.abs(A)))


# ---------------------------------------------------------------------------
# moving planes


def default_samples(lam: float, count: int = 64, span: float = 10.0):
    """x1 in [lam, lam+span] and rho in {0} U [0, span], log-spaced towards the plane and the axis."""
    off = np.logspace(-4, math.log10(span), count)
    x1 = lam + off
    rho = np.concatenate([[0.0], off])
    return x1, rho


def _planar_sampler(u) -> Callable:
    """Return g(x1, rho) for a radial profile or a planar callable."""
    if isinstance(u, RadialProfile):
        return lambda x1, rho: u.evaluate(np.hypot(x1, rho).ravel()).reshape(np.shape(x1))
    if callable(u):
        return u
    raise TypeError("expected a RadialProfile or a callable g(x1, rho)")


def moving_plane_min(u, lambdas, samples=None) -> dict:
    """min over x in Sigma_lambda of w_lambda(x) = u(x) - u(x^lambda), per lambda.

    ``u`` is a RadialProfile (radial about the origin) or a callable
    g(x1, rho) for functions that are only axially symmetric.
    """
    g = _planar_sampler(u)
    out = {}
    for lam in lambdas:
        x1, rho = samples if samples is not None else default_samples(lam)
        X1, RHO = np.meshgrid(x1, rho, indexing="ij")
        w = g(X1, RHO) - g(2 * lam - X1, RHO)
        out[float(lam)] = float(np.min(w))
    return out


@dataclass
class ComparisonResult:
    minima: dict
    skipped: dict = field(default_factory=dict)

    @property
    def overall_min(self) -> float:
        return min(self.minima.values()) if self.minima else math.nan


def f_comparison_check(
    u,
    params: ProblemParams,
    lambdas,
    samples=None,
    hypothesis_tol: float = 1e-10,
) -> ComparisonResult:
    """min over Sigma_lambda of F(x^lambda) - F(x), for each lambda where w_lambda >= 0 holds."""
    g = _planar_sampler(u)
    wmin = moving_plane_min(u, lambdas, samples)

    def F(x1, rho):
        vals = g(x1, rho)
        r = np.hypot(x1, rho)
        return eval_F(None, params, r=r.ravel(), values=vals.ravel()).reshape(np.shape(x1))

    res = ComparisonResult({})
    for lam in lambdas:
        lam = float(lam)
        if wmin[lam] < -hypothesis_tol:
            res.skipped[lam] = f"w_lambda has negative minimum {wmin[lam]:.3e}"
            continue
        x1, rho = samples if samples is not None else default_samples(lam)
        X1, RHO = np.meshgrid(x1, rho, indexing="ij")
        res.minima[lam] = float(np.min(F(2 * lam - X1, RHO) - F(X1, RHO)))
    return res


# ---------------------------------------------------------------------------
# trial suites


@dataclass
class Violation:
    trial: int
    check: str
    lhs: float
    rhs: float
    coeffs: list


@dataclass
class SuiteResult:
    name: str
    trials: int
    violations: list = field(default_factory=list)
    skipped: int = 0
    skip_reason: str = ""
    min_slack: float = math.inf  # min over trials of (lhs - rhs) / max(|rhs|, floor)
    worst_trial: int = -1
    equality_error: float = math.nan  # relative gap on the constant trial
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _relative_slack(lhs: float, rhs: float) -> float:
    return (lhs - rhs) / max(abs(rhs), ABS_FLOOR)


def sample_trial(seed_base: int, index: int, rule: QuadratureRule, L: int) -> ZonalFunction:
    """The ``index``-th random positive zonal trial; index 0 is the constant 1."""
    if index == 0:
        return ZonalFunction.constant(rule.n)
    rng = np.random.default_rng([seed_base, index])
    amplitude = rng.uniform(0.05, 0.95)
    degree = int(rng.integers(1, L + 1))
    return random_positive_zonal(int(rng.integers(2**62)), degree, amplitude, rule)


class _Recorder:
    def __init__(self, result: SuiteResult, tol: float):
        self.result = result
        self.tol = tol

    def check(self, trial: int, name: str, lhs: float, rhs: float, phi: ZonalFunction) -> None:
        """Record lhs >= rhs up to tol * max(|rhs|, floor)."""
        slack = _relative_slack(lhs, rhs)
        res = self.result
        if slack < res.min_slack:
            res.min_slack = slack
            res.worst_trial = trial
        if slack < -self.tol:
            res.violations.append(Violation(trial, name, lhs, rhs, phi.coeffs.tolist()))

    def equality(self, lhs: float, rhs: float) -> None:
        err = abs(lhs - rhs) / max(abs(rhs), ABS_FLOOR)
        if math.isnan(self.result.equality_error) or err > self.result.equality_error:
            self.result.equality_error = err


def sobolev_trial_suite(
    params: ProblemParams,
    rule: QuadratureRule,
    trials: int = 1000,
    seed_base: int = 0,
    L: int = 24,
    tol: float = DEFAULT_TOL,
) -> SuiteResult:
    """Sharp Sobolev inequality (eps = 0) on ``trials`` positive zonal samples."""
    n, m, alpha = params.n, params.m, params.alpha
    rhs = sharp_constant(n, m, alpha)
    p0 = ProblemParams.unchecked(n, m, alpha, 0.0)
    res = SuiteResult(f"sobolev[alpha={alpha:g}]", trials)
    rec = _Recorder(res, tol)
    for i in range(trials):
        phi = sample_trial(seed_base, i, rule, L)
        lhs = sobolev_quotient(phi, p0, rule)
        rec.check(i, "sobolev", lhs, rhs, phi)
        if i == 0:
            rec.equality(lhs, rhs)
    return res


def log_sobolev_trial_suite(
    n: int,
    m: int,
    rule: QuadratureRule,
    trials: int = 1000,
    seed_base: int = 0,
    L: int = 24,
    tol: float = DEFAULT_TOL,
) -> SuiteResult:
    """exp(-2 avg log phi) avg(phi P phi) >= Gamma(n/2+m)/Gamma(n/2-m) on random samples."""
    rhs = float(gamma_ratio(n, m))
    res = SuiteResult("log-sobolev", trials)
    rec = _Recorder(res, tol)
    for i in range(trials):
        phi = sample_trial(seed_base, i, rule, L)
        lhs = log_sobolev_quotient(phi, m, rule)
        rec.check(i, "log-sobolev", lhs, rhs, phi)
        if i == 0:
            rec.equality(lhs, rhs)
    return res


def chain_quantities(phi: ZonalFunction, n: int, m: int, beta: float, alpha: float, rule: QuadratureRule) -> dict:
    """Each step of the chain critical -> beta -> log-Sobolev -> alpha as (lhs, rhs) pairs with lhs >= rhs."""
    area = sphere_surface_area(n)
    P1 = float(gamma_ratio(n, m))
    E = energy(phi, m)
    v = phi.values(rule)
    mean_log = rule.integrate(np.log(v)) / area
    I_beta = lebesgue_integral(v, 1 - beta, rule)
    I_alpha = lebesgue_integral(v, 1 - alpha, rule)
    I_crit = lebesgue_integral(v, -2 * n, rule)
    g = 1 - alpha
    q = {}
    # Hoelder: (int phi^{1-beta})^{2/(beta-1)} <= |S|^{(2n+1-beta)/(n(beta-1))} (int phi^{-2n})^{1/n}
    q["holder"] = (area ** ((2 * n + 1 - beta) / (n * (beta - 1))) * I_crit ** (1 / n), I_beta ** (2 / (beta - 1)))
    # Jensen with gamma = beta - 1: exp(-2 avg log phi) <= (avg phi^{1-beta})^{2/(beta-1)}
    q["jensen"] = ((I_beta / area) ** (2 / (beta - 1)), math.exp(-2 * mean_log))
    # reverse Jensen with gamma = 1 - alpha: exp(-2 avg log phi) >= (avg phi^{1-alpha})^{2/(alpha-1)}
    q["reverse_jensen"] = (math.exp(-2 * mean_log), (I_alpha / area) ** (2 / (alpha - 1)))
    # direct alpha-beta Hoelder
    q["holder_alpha_beta"] = (
        area ** ((alpha - beta) / ((beta - 1) * (1 - alpha))) * I_beta ** (1 / (beta - 1)),
        I_alpha ** (1 / (alpha - 1)),
    )
    # the inequalities themselves
    q["sobolev_critical"] = (I_crit ** (1 / n) * E, P1 * area ** ((2 * m) / n))
    q["sobolev_beta"] = (I_beta ** (2 / (beta - 1)) * E, P1 * area ** ((beta + 1) / (beta - 1)))
    q["log_sobolev"] = (math.exp(-2 * mean_log) * E / area, P1)
    q["sobolev_alpha"] = (I_alpha ** (2 / (alpha - 1)) * E, P1 * area ** ((alpha + 1) / (alpha - 1)))
    # gamma-form: avg phi P phi >= P1 (avg phi^gamma)^{2/gamma}, gamma = 1 - alpha > 0
    q["gamma_form"] = (E / area, P1 * (lebesgue_integral(v, g, rule) / area) ** (2 / g))
    return q


def chain_verify(
    params: ProblemParams,
    rule: QuadratureRule,
    trials: int = 500,
    seed_base: int = 0,
    beta: float = 3.0,
    alpha: float = 0.5,
    L: int = 24,
    tol: float = DEFAULT_TOL,
    max_draws: int | None = None,
) -> SuiteResult:
    """Check every step of the implication chain on ``trials`` random samples.

    Samples with int phi P phi >= 0 are skipped (the inequalities are only
    informative when that energy is negative) and further samples are drawn
    until ``trials`` have been checked, up to ``max_draws`` in total.
    """
    n, m = params.n, params.m
    if n != 2 * m - 1:
        raise ValueError("the chain needs n = 2m - 1")
    if not 1 < beta < 2 * n + 1 or not 0 < alpha < 1:
        raise ValueError("need beta in (1, 2n+1) and alpha in (0, 1)")
    res = SuiteResult(f"chain[beta={beta:g},alpha={alpha:g}]", trials)
    rec = _Recorder(res, tol)
    counts: dict[str, int] = {}
    max_draws = 20 * trials if max_draws is None else max_draws
    checked = draws = 0
    for i in range(max_draws):
        if checked >= trials:
            break
        draws += 1
        phi = sample_trial(seed_base, i, rule, L)
        if energy(phi, m) >= 0:
            res.skipped += 1
            res.skip_reason = "convention not met: int phi P phi >= 0"
            continue
        for name, (lhs, rhs) in chain_quantities(phi, n, m, beta, alpha, rule).items():
            rec.check(i, name, lhs, rhs, phi)
            counts[name] = counts.get(name, 0) + 1
            if i == 0:
                rec.equality(lhs, rhs)
        checked += 1
    res.details["checked_per_step"] = counts
    res.details["draws"] = draws
    if checked < trials:
        log.warning("chain check ran out of draws: %d of %d trials checked", checked, trials)
    return res


def dump_violations(result: SuiteResult, rule: QuadratureRule, outdir) -> list[Path]:
    """Write each offending trial as CSV (grid values) plus one JSON record per suite."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    safe = "".join(c if c.isalnum() else "_" for c in result.name)
    for k, viol in enumerate(result.violations):
        phi = ZonalFunction(rule.n, np.array(viol.coeffs))
        p = outdir / f"{safe}_violation_{k}.csv"
        p.write_text(to_csv(phi, rule))
        paths.append(p)
    p = outdir / f"{safe}_violations.json"
    p.write_text(json.dumps(result.to_dict(), default=_json_default, indent=2))
    paths.append(p)
    return paths

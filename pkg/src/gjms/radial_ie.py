"""The radial integral equation u = gamma int |x-y|^{2m-n} F_{eps,u}(y) dy.

All plane integrals run over the stereographic image of a sphere rule, so
the measure weight of node j is dy_j = |S^{n-1}| w_j f_j^{-n}.  For radial F
the angular part of the kernel is integrated out exactly by
:func:`kernel_spherical_mean`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from gjms.constants import ProblemParams
from gjms.stereo import (
    RadialProfile,
    compute_gamma,
    conformal_factor,
    eval_F,
    grid_radii,
    pullback_to_plane,
)
from gjms.zonal import PositivityError, QuadratureRule, ZonalFunction, gauss_jacobi

log = logging.getLogger(__name__)

DEFAULT_IE_NODES = 128
# below this ratio min(r,s)/max(r,s) the closed forms lose digits to cancellation
_SMALL_RATIO = 0.5
_ANGLE_NODES = 48


class DecayHypothesisError(ValueError):
    """The source term does not decay fast enough for the kernel integral."""


class PicardDivergence(RuntimeError):
    pass


@lru_cache(maxsize=16)
def _angle_rule(n: int):
    # weight (1-t^2)^{(n-3)/2}, normalized to total mass 1
    a = (n - 3) / 2
    t, w = gauss_jacobi(_ANGLE_NODES, a, a)
    return t, w / w.sum()


def _mean_by_quadrature(n, k, big, q):
    t, w = _angle_rule(n)
    base = 1 + q[..., None] ** 2 - 2 * q[..., None] * t
    return big**k * np.sum(w * base ** (k / 2), axis=-1)


def _mean_closed_form(n, k, r, s):
    """Exact integral after the substitution w = r^2 + s^2 - 2 r s t."""
    p = (n - 3) // 2
    lo = (r - s) ** 2
    hi = (r + s) ** 2
    # [(w - lo)(hi - w)]^p = sum_j c_j w^j, expanded per point
    out = np.zeros(np.broadcast(r, s).shape)
    for i in range(p + 1):
        for j in range(p + 1):
            # (w - lo)^i-term times (hi - w)^j-term from the two binomials
            ci = math.comb(p, i) * (-lo) ** (p - i)
            cj = math.comb(p, j) * hi ** (p - j) * (-1) ** j
            e = k / 2 + i + j + 1
            out = out + ci * cj * (hi**e - lo**e) / e
    norm = math.exp(math.lgamma(p + 1) * 2 + math.log(2) * (2 * p + 1) - math.lgamma(2 * p + 2))
    return out / ((2 * r * s) ** (2 * p + 1) * norm)


def kernel_spherical_mean(n: int, k: float, r, s):
    """Average of |x - y|^k over the sphere |y| = s, for |x| = r, in R^n.

    Uses the exact antiderivative when r and s are comparable and a Gauss
    rule in the angle otherwise; r = 0 or s = 0 gives max(r, s)^k.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError("n must be odd and >= 3")
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(r < 0) or np.any(s < 0):
        raise ValueError("radii must be nonnegative")
    r, s = np.broadcast_arrays(r, s)
    big = np.maximum(r, s)
    small = np.minimum(r, s)
    if np.any(big == 0):
        raise ValueError("r and s may not both vanish")
    q = small / big
    out = np.empty(r.shape)
    near = q >= _SMALL_RATIO
    if np.any(near):
        out[near] = _mean_closed_form(n, k, r[near], s[near])
    far = ~near
    if np.any(far):
        out[far] = _mean_by_quadrature(n, k, big[far], q[far])
    return float(out) if out.ndim == 0 else out


def measure_weights(rule: QuadratureRule) -> np.ndarray:
    """dy_j on the stereographic grid of ``rule``."""
    return rule.sphere_weights * (1 - rule.nodes) ** (-rule.n)


@lru_cache(maxsize=16)
def _kernel_matrix(rule: QuadratureRule, k: int) -> np.ndarray:
    r = grid_radii(rule)
    K = kernel_spherical_mean(rule.n, k, r[:, None], r[None, :])
    K.flags.writeable = False
    return K


def kernel_matrix(rule: QuadratureRule, k: int, radii=None) -> np.ndarray:
    """K_ij = mean of |x-y|^k with |x| = radii_i and |y| on the grid of ``rule``."""
    if radii is None:
        return _kernel_matrix(rule, k)
    radii = np.asarray(radii, dtype=float)
    return kernel_spherical_mean(rule.n, k, radii[:, None], grid_radii(rule)[None, :])


def decay_slope(r: np.ndarray, F: np.ndarray, fraction: float = 0.1) -> float:
    """Least-squares slope of log|F| against log r over the outermost nodes."""
    count = max(2, int(round(fraction * len(r))))
    x = np.log(r[-count:])
    y = np.log(np.abs(F[-count:]))
    return float(np.polyfit(x, y, 1)[0])


def check_decay(r, F, params: ProblemParams, slack: float = 0.05) -> float:
    """Slope of F on the tail; raises unless F decays like r^{-(2n + 2m - n)} or faster."""
    F = np.asarray(F, dtype=float)
    if not np.any(F):
        return -math.inf
    if np.any(F[-max(2, len(F) // 10):] == 0):
        return -math.inf
    slope = decay_slope(np.asarray(r), F)
    need = -(2 * params.n + params.k)
    if slope > need * (1 - slack):
        raise DecayHypothesisError(f"F decays like r^{slope:.3f}, need r^{need} or faster")
    return slope


def apply_newtonian_kernel(
    F,
    params: ProblemParams,
    rule: QuadratureRule,
    radii=None,
    check: bool = True,
):
    """gamma int |x-y|^{2m-n} F(y) dy for radial F given on the grid of ``rule``.

    Returns a RadialProfile on the same grid, or plain values when ``radii``
    is given (radii may include 0).  The tail coefficient is gamma int F dy,
    the origin value gamma int |y|^{2m-n} F dy.
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (rule.size,):
        raise ValueError("F must be sampled on the grid of the rule")
    r = grid_radii(rule)
    if check:
        check_decay(r, F, params)
    gamma = compute_gamma(params.n, params.m, max(64, rule.size))
    dy = measure_weights(rule)
    Fdy = gamma * F * dy
    if radii is not None:
        return kernel_matrix(rule, params.k, radii) @ Fdy
    u = _kernel_matrix(rule, params.k) @ Fdy
    tail = float(np.sum(Fdy))
    origin = float(np.sum(r**params.k * Fdy))
    return RadialProfile(params.n, params.m, r, u, tail, origin, rule)


def standard_bubble(params: ProblemParams, rule: QuadratureRule, scale: float = 1.0) -> RadialProfile:
    """Pullback of the constant ``scale``: scale * ((1 + r^2)/2)^{(2m-n)/2}."""
    return pullback_to_plane(ZonalFunction.constant(params.n, scale), rule, params.m)


def trivial_profile(params: ProblemParams, rule: QuadratureRule) -> RadialProfile:
    """Pullback of the trivial solution (1-eps)^{-1/(alpha+1)}."""
    return standard_bubble(params, rule, params.trivial_solution())


def ie_image(u: RadialProfile, params: ProblemParams) -> RadialProfile:
    if u.rule is None:
        raise ValueError("profile must live on a sphere grid")
    return apply_newtonian_kernel(eval_F(u, params), params, u.rule)


def ie_residual(u: RadialProfile, params: ProblemParams) -> float:
    """sup |u - gamma K[F_{eps,u}]| / sup |u| over the grid."""
    Tu = ie_image(u, params)
    return float(np.max(np.abs(u.values - Tu.values)) / np.max(np.abs(u.values)))


@dataclass
class PicardResult:
    profile: RadialProfile
    converged: bool
    residual: float
    trace: list = field(default_factory=list)  # (iter, residual, damping)
    message: str = ""

    def trace_csv(self) -> str:
        lines = ["iter,residual,damping"]
        lines += [f"{i},{res:.17g},{tau:.17g}" for i, res, tau in self.trace]
        return "\n".join(lines) + "\n"


def solve_picard(
    params: ProblemParams,
    rule: QuadratureRule,
    initial: RadialProfile | None = None,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 500,
    min_damping: float = 1 / 64,
) -> PicardResult:
    """Damped fixed-point iteration u <- (1 - tau) u + tau gamma K[F_{eps,u}].

    A step that increases the residual is rejected and tau is halved, down to
    ``min_damping``.  The default initial guess is the trivial solution.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    u = trivial_profile(params, rule) if initial is None else initial
    if u.rule is not rule:
        raise ValueError("initial profile must live on the grid of ``rule``")
    if not u.is_positive:
        raise PositivityError("initial guess must be positive")
    tau = damping
    Tu = ie_image(u, params)
    res = float(np.max(np.abs(u.values - Tu.values)) / np.max(np.abs(u.values)))
    trace = [(0, res, tau)]
    if res <= tol:
        return PicardResult(u, True, res, trace, "initial guess within tolerance")
    for it in range(1, max_iter + 1):
        vals = (1 - tau) * u.values + tau * Tu.values
        if np.min(vals) <= 0:
            raise PositivityError(f"iterate lost positivity at step {it}")
        cand = u.with_values(vals, (1 - tau) * u.tail + tau * Tu.tail, (1 - tau) * (u.origin or 0) + tau * Tu.origin)
        Tc = ie_image(cand, params)
        cres = float(np.max(np.abs(cand.values - Tc.values)) / np.max(np.abs(cand.values)))
        if cres > res and tau > min_damping:
            tau = max(tau / 2, min_damping)
            trace.append((it, res, tau))
            continue
        u, Tu, res = cand, Tc, cres
        trace.append((it, res, tau))
        if res <= tol:
            return PicardResult(u, True, res, trace, "residual below tolerance")
    log.warning("Picard iteration stopped at residual %.3e after %d steps", res, max_iter)
    return PicardResult(u, False, res, trace, f"max_iter reached with residual {res:.3e}")


def gamma_identity_error(n: int, m: int, radii, resolution: int = 128) -> np.ndarray:
    """Relative error of f(x)^{(n-2m)/2} = gamma int |x-y|^{2m-n} f(y)^{(n+2m)/2} dy at |x| = radii."""
    from gjms.zonal import build_quadrature

    params = ProblemParams.unchecked(n, m, 1.0, 0.0)
    rule = build_quadrature(n, resolution)
    r = grid_radii(rule)
    F = conformal_factor(r) ** ((n + 2 * m) / 2)
    radii = np.asarray(radii, dtype=float)
    lhs = conformal_factor(radii) ** ((n - 2 * m) / 2)
    rhs = apply_newtonian_kernel(F, params, rule, radii=radii)
    return np.abs(rhs / lhs - 1)

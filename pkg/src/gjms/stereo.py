"""Stereographic projection, Kelvin transform and the constant gamma_{2m,n}.

Radial profiles on R^n live on the image of the sphere quadrature under
stereographic projection from the north pole: a node of height t maps to
r = sqrt((1+t)/(1-t)) = tan(theta_S/2), theta_S being the angle from the
south pole.  The standard relation dx = f(x)^{-n} dmu with the conformal
factor f(x) = 2/(1+|x|^2) = 1 - t turns plane integrals of pulled-back
functions into sphere integrals, so R^n never has to be truncated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from gjms.constants import ProblemParams, gamma_ratio, sphere_surface_area
from gjms.zonal import PositivityError, QuadratureRule, ZonalFunction, analyze, gauss_jacobi


def conformal_factor(r):
    """f(r) = 2 / (1 + r^2)."""
    r = np.asarray(r, dtype=float)
    out = 2.0 / (1.0 + r * r)
    return float(out) if out.ndim == 0 else out


def radius_from_height(t, pole: str = "north"):
    t = np.asarray(t, dtype=float)
    if pole == "south":
        t = -t
    return np.sqrt((1 + t) / (1 - t))


def height_from_radius(r, pole: str = "north"):
    r = np.asarray(r, dtype=float)
    t = (r * r - 1) / (r * r + 1)
    return -t if pole == "south" else t


def stereo_inverse(x, pole: str = "north") -> np.ndarray:
    """pi^{-1}(x) in R^{n+1} for points x of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    last = (r2 - 1) / (r2 + 1)
    if pole == "south":
        last = -last
    return np.concatenate([2 * x / (r2 + 1), last], axis=-1)


def stereo_project(xi, pole: str = "north") -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    last = xi[..., -1:]
    denom = 1 - last if pole == "north" else 1 + last
    return xi[..., :-1] / denom


class TailWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A positive radial function u(|x|) on R^n sampled on a radial grid.

    ``tail`` is A in u(r) ~ A r^{2m-n} as r -> infinity and ``origin`` is
    u(0).  When ``rule`` is set the grid is the stereographic image of that
    sphere rule and the profile can be evaluated anywhere spectrally.
    """

    n: int
    m: int
    r: np.ndarray
    values: np.ndarray
    tail: float
    origin: float | None = None
    rule: QuadratureRule | None = None

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        u = np.asarray(self.values, dtype=float)
        if r.shape != u.shape:
            raise ValueError("radii and values differ in shape")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", u)

    @property
    def k(self) -> int:
        return 2 * self.m - self.n

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.values > 0))

    def fit_tail(self, fraction: float = 0.1) -> float:
        """Least-squares A in u ~ A r^{2m-n} over the outermost ``fraction`` of nodes."""
        count = max(2, int(round(fraction * len(self.r))))
        rr = self.r[-count:] ** self.k
        return float(np.dot(rr, self.values[-count:]) / np.dot(rr, rr))

    def fit_exponent(self, fraction: float = 0.1) -> float:
        """Least-squares growth exponent of u over the outermost ``fraction`` of nodes."""
        count = max(2, int(round(fraction * len(self.r))))
        return float(np.polyfit(np.log(self.r[-count:]), np.log(self.values[-count:]), 1)[0])

    def tail_consistency(self) -> float:
        """Relative gap between the fitted and the recorded tail coefficient."""
        if self.tail == 0:
            return math.inf
        return abs(self.fit_tail() / self.tail - 1)

    def certify_tail(self, tol: float = 0.1) -> bool:
        ok = self.tail_consistency() <= tol
        if not ok:
            warnings.warn(f"tail coefficient inconsistent with the last nodes ({self.tail_consistency():.3g})", TailWarning, stacklevel=2)
        return ok

    def with_values(self, values, tail=None, origin=None) -> "RadialProfile":
        return RadialProfile(
            self.n, self.m, self.r, values,
            self.tail if tail is None else tail,
            self.origin if origin is None else origin,
            self.rule,
        )

    def sphere_function(self) -> ZonalFunction:
        if self.rule is None:
            raise ValueError("profile is not attached to a sphere grid")
        return pushforward_to_sphere(self, self.rule)

    def evaluate(self, radii) -> np.ndarray:
        """u at arbitrary radii through the spectral sphere representation."""
        v = self.sphere_function()
        radii = np.asarray(radii, dtype=float)
        return conformal_factor(radii) ** (-self.k / 2) * v(height_from_radius(radii))

    def radial_derivative(self, radii) -> np.ndarray:
        """r u'(r) at arbitrary radii."""
        v = self.sphere_function()
        dv = v.derivative()
        radii = np.asarray(radii, dtype=float)
        t = height_from_radius(radii)
        f = 1 - t
        return f ** (-self.k / 2) * (1 + t) * (self.k / 2 * v(t) + f * dv(t))

    def to_csv(self) -> str:
        """CSV dump with header ``r,value`` and a trailing tail-coefficient comment."""
        lines = ["r,value"]
        lines += [f"{r:.17g},{u:.17g}" for r, u in zip(self.r, self.values)]
        lines.append(f"# tail_coefficient={self.tail:.17g}")
        return "\n".join(lines) + "\n"


def grid_radii(rule: QuadratureRule) -> np.ndarray:
    return radius_from_height(rule.nodes)


def pullback_to_plane(v: ZonalFunction, rule: QuadratureRule, m: int, pole: str = "north") -> RadialProfile:
    """u(x) = f(x)^{(n-2m)/2} v(pi^{-1} x) on the stereographic image of ``rule``."""
    n = rule.n
    k = 2 * m - n
    t = rule.nodes
    f = 1 - t
    sample = v.values(rule) if pole == "north" else v(-t)
    if np.min(sample) <= 0:
        raise PositivityError("pullback requires a positive function")
    values = f ** (-k / 2) * sample
    at_north, at_south = float(v(np.array([1.0]))[0]), float(v(np.array([-1.0]))[0])
    far, near = (at_north, at_south) if pole == "north" else (at_south, at_north)
    scale = 2.0 ** (-k / 2)
    return RadialProfile(n, m, grid_radii(rule), values, scale * far, scale * near, rule)


def pushforward_to_sphere(u: RadialProfile, rule: QuadratureRule, L: int | None = None) -> ZonalFunction:
    """Inverse of :func:`pullback_to_plane` on the matched grid."""
    if u.n != rule.n or len(u.r) != rule.size:
        raise ValueError("profile grid does not match the quadrature rule")
    if not np.allclose(u.r, grid_radii(rule), rtol=1e-12):
        raise ValueError("profile radii are not the stereographic image of the rule")
    f = 1 - rule.nodes
    return analyze(u.values * f ** (u.k / 2), rule, L)


def kelvin(u: RadialProfile) -> RadialProfile:
    """|x|^{2m-n} u(x / |x|^2) on the reciprocal grid.

    For a grid built from a symmetric sphere rule the reciprocal grid is the
    same grid, so the result stays attached to ``u.rule``.
    """
    rho = 1.0 / u.r[::-1]
    values = rho**u.k * u.values[::-1]
    rule = u.rule
    if rule is not None and not np.allclose(rho, u.r, rtol=1e-12):
        rule = None
    r = u.r if rule is not None else rho
    return RadialProfile(u.n, u.m, r, values, u.origin, u.tail, rule)


def eval_F(u: RadialProfile, params: ProblemParams, r=None, values=None) -> np.ndarray:
    """F_{eps,u} = eps f^{2m} u + f^{(n+2m)/2 + alpha(n-2m)/2} u^{-alpha}."""
    r = u.r if r is None else np.asarray(r, dtype=float)
    values = u.values if values is None else np.asarray(values, dtype=float)
    if np.min(values) <= 0:
        raise PositivityError("F needs u > 0")
    f = conformal_factor(r)
    return params.eps * f ** (2 * params.m) * values + f ** (-params.c_alpha) * values ** (-params.alpha)


def F_exponent(params: ProblemParams) -> float:
    """Exponent (n+2m)/2 + alpha (n-2m)/2 of the conformal factor, which equals -c_alpha."""
    n, m = params.n, params.m
    return (n + 2 * m) / 2 + params.alpha * (n - 2 * m) / 2


def dilate(v: ZonalFunction, delta: float, rule: QuadratureRule, m: int, L: int | None = None) -> ZonalFunction:
    """The conformal image of v under the dilation x -> delta x in stereographic coordinates.

    Equivalently u_delta(x) = delta^{(n-2m)/2} u(delta x) for the pullback u;
    this preserves the critical equation and the critical quotient.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta < 0.05:
        warnings.warn(f"delta={delta} concentrates beyond reliable grid resolution", stacklevel=2)
    k = 2 * m - v.n
    t = rule.nodes
    a = 1 - t
    b = delta * delta * (1 + t)
    t_new = (b - a) / (b + a)
    # f(r)/f(delta r) = (a + b) / 2 with a, b as above
    vals = (0.5 * (a + b) / delta) ** (k / 2) * v(t_new)
    return analyze(vals, rule, L)


# ---------------------------------------------------------------------------
# gamma_{2m,n}


def gamma_closed_form(n: int, m: int) -> float:
    """2^{1-2m} / (|S^{n-1}| B(m, n/2)), obtained by Beta-integral evaluation."""
    logB = math.lgamma(m) + math.lgamma(n / 2) - math.lgamma(m + n / 2)
    return 2.0 ** (1 - 2 * m) / (sphere_surface_area(n - 1) * math.exp(logB))


class QuadratureConvergenceError(RuntimeError):
    pass


def _bubble_moment(n: int, m: int, N: int) -> float:
    """int_{R^n} |y|^{2m-n} f(y)^{(n+2m)/2} dy by Gauss-Jacobi quadrature.

    With s = |y| and sigma = s^2/(1+s^2) the radial integrand becomes
    2^{(n+2m)/2 - 1} sigma^{m-1} (1-sigma)^{n/2-1}; the endpoint factor at
    sigma = 1 is taken into the Jacobi weight.
    """
    x, w = gauss_jacobi(N, n / 2 - 1, 0.0)
    sigma = 0.5 * (x + 1)
    # map [-1,1] -> [0,1]: (1-x)^a dx = 2^{a+1} (1-sigma)^a dsigma
    scale = 2.0 ** (-(n / 2 - 1) - 1)
    integral = scale * float(np.dot(w, sigma ** (m - 1)))
    return sphere_surface_area(n - 1) * 2.0 ** ((n + 2 * m) / 2 - 1) * integral


@lru_cache(maxsize=32)
def compute_gamma(n: int, m: int, resolution: int = 64, rtol: float = 1e-14) -> float:
    """gamma_{2m,n} defined by the v = 1 identity at x = 0.

    2^{(n-2m)/2} = gamma * int |y|^{2m-n} f(y)^{(n+2m)/2} dy.  The moment is
    refined by doubling the node count until two successive values agree.
    """
    ProblemParams.unchecked(n, m, 1.0, 0.0)
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    N = max(4, resolution // 16)
    prev = _bubble_moment(n, m, N)
    while N < resolution:
        N *= 2
        cur = _bubble_moment(n, m, N)
        if abs(cur - prev) <= rtol * abs(cur):
            break
        prev = cur
    else:
        if abs(cur - prev) > 1e3 * rtol * abs(cur):
            raise QuadratureConvergenceError(f"moment did not converge at resolution {resolution}")
    gamma = 2.0 ** ((n - 2 * m) / 2) / cur
    if not gamma > 0:
        raise QuadratureConvergenceError("gamma must be positive")
    return gamma


def fundamental_constant(n: int, m: int, resolution: int = 64) -> float:
    """c_{2m,n} = gamma / ((n-2m)/2 Q), reported for information only."""
    return compute_gamma(n, m, resolution) / float(gamma_ratio(n, m))

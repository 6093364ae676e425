"""Spectral calculus for zonal functions on S^n.

A zonal function depends only on the height t = x_{n+1} in [-1, 1] (the
cosine of the polar angle measured from the north pole).  It is stored by
its coefficients in the Gegenbauer basis C_ell^{(n-1)/2}(t).  Integrals over
S^n reduce to

    int_{S^n} g dmu = |S^{n-1}| int_{-1}^{1} g(t) (1 - t^2)^{(n-2)/2} dt,

which is discretized by a Gauss rule for that weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from gjms.constants import ProblemParams, gjms_eigenvalue, gamma_ratio, sphere_surface_area

DEFAULT_NODES = 64
DEFAULT_DEGREE = 24


class QuadratureError(RuntimeError):
    pass


class PositivityError(ValueError):
    """A negative power of a function that is not strictly positive."""


# ---------------------------------------------------------------------------
# Gauss rules


def _jacobi_recurrence(N: int, a: float, b: float):
    """Recurrence coefficients of the orthonormal Jacobi polynomials.

    Returns (alpha_k, sqrt(beta_k)) for k = 0..N, and the zeroth moment.
    """
    k = np.arange(N + 1, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(np.abs(s * (s + 2)) > 0, (b * b - a * a) / (s * (s + 2)), 0.0)
    if N >= 0 and abs(a + b + 2) > 0:
        alpha[0] = (b - a) / (a + b + 2)
    beta = np.zeros(N + 1)
    kk = k[1:]
    ss = s[1:]
    beta[1:] = 4 * kk * (kk + a) * (kk + b) * (kk + a + b) / (ss**2 * (ss + 1) * (ss - 1))
    mu0 = 2.0 ** (a + b + 1) * math.exp(math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(a + b + 2))
    return alpha, np.sqrt(beta), mu0


def _orthonormal_eval(t, N, alpha, sqbeta, mu0, with_derivative=False):
    """Values p_0..p_{N} at t (shape (N+1, len(t))) and optionally p_N'."""
    t = np.asarray(t, dtype=float)
    P = np.empty((N + 1,) + t.shape)
    P[0] = 1.0 / math.sqrt(mu0)
    dp_prev = np.zeros_like(t)
    dp = np.zeros_like(t)
    if N >= 1:
        P[1] = (t - alpha[0]) * P[0] / sqbeta[1]
        dp_prev, dp = dp, P[0] / sqbeta[1]
    for j in range(1, N):
        P[j + 1] = ((t - alpha[j]) * P[j] - sqbeta[j] * P[j - 1]) / sqbeta[j + 1]
        if with_derivative:
            dnew = (P[j] + (t - alpha[j]) * dp - sqbeta[j] * dp_prev) / sqbeta[j + 1]
            dp_prev, dp = dp, dnew
    if with_derivative:
        return P, dp
    return P


def gauss_jacobi(N: int, a: float, b: float, tol: float = 1e-15, max_iter: int = 50):
    """Gauss rule for the weight (1-t)^a (1+t)^b on [-1, 1].

    Starting points come from the eigenvalues of the Jacobi matrix; each root
    is then polished by Newton's method on the three-term recurrence.  The
    weights use the Christoffel formula 1 / sum_k p_k(t_j)^2.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if a + b <= -1 + 1e-12:
        raise ValueError("a + b must exceed -1")
    alpha, sqbeta, mu0 = _jacobi_recurrence(N, a, b)
    J = np.diag(alpha[:N]) + np.diag(sqbeta[1:N], 1) + np.diag(sqbeta[1:N], -1)
    t = np.linalg.eigvalsh(J)
    for it in range(max_iter):
        P, dP = _orthonormal_eval(t, N, alpha, sqbeta, mu0, with_derivative=True)
        step = P[N] / dP
        t = t - step
        if np.max(np.abs(step)) <= tol:
            break
    else:
        if np.max(np.abs(step)) > 1e3 * tol:
            raise QuadratureError(f"Newton did not converge for N={N}, a={a}, b={b}")
    t = np.sort(t)
    if np.any(np.diff(t) <= 0) or t[0] <= -1 or t[-1] >= 1:
        raise QuadratureError("Gauss nodes are not strictly increasing inside (-1, 1)")
    P = _orthonormal_eval(t, N - 1, alpha, sqbeta, mu0)
    w = 1.0 / np.sum(P**2, axis=0)
    return t, w


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss rule for the zonal measure of S^n.

    ``weights`` integrate against (1-t^2)^{(n-2)/2} dt; multiply by
    ``sphere_factor`` = |S^{n-1}| to integrate over S^n.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def sphere_factor(self) -> float:
        return sphere_surface_area(self.n - 1)

    @cached_property
    def sphere_weights(self) -> np.ndarray:
        """Weights for int_{S^n} g dmu."""
        return self.weights * self.sphere_factor

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arccos(self.nodes)

    @cached_property
    def basis(self) -> np.ndarray:
        """C_ell(t_j) for ell = 0..N-1, shape (N, N)."""
        return gegenbauer_table(self.n, self.size - 1, self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.sphere_weights, values))


def build_quadrature(n: int, N: int = DEFAULT_NODES) -> QuadratureRule:
    """Gauss rule exact to degree 2N-1 for the weight (1-t^2)^{(n-2)/2}."""
    if N < 4:
        raise ValueError("need at least 4 nodes")
    if n < 2:
        raise ValueError("n must be >= 2")
    a = (n - 2) / 2
    t, w = gauss_jacobi(N, a, a)
    # the weight is even: enforce exact mirror symmetry of the rule
    t = 0.5 * (t - t[::-1])
    w = 0.5 * (w + w[::-1])
    if N % 2:
        t[N // 2] = 0.0
    return QuadratureRule(n, t, w)


# ---------------------------------------------------------------------------
# Gegenbauer basis


def gegenbauer_param(n: int) -> float:
    return (n - 1) / 2


def gegenbauer_table(n: int, L: int, t) -> np.ndarray:
    """C_ell^{lam}(t) for ell = 0..L via the three-term recurrence."""
    lam = gegenbauer_param(n)
    t = np.asarray(t, dtype=float)
    C = np.empty((L + 1,) + t.shape)
    C[0] = 1.0
    if L >= 1:
        C[1] = 2 * lam * t
    for ell in range(1, L):
        C[ell + 1] = (2 * (ell + lam) * t * C[ell] - (ell + 2 * lam - 1) * C[ell - 1]) / (ell + 1)
    return C


def gegenbauer_norms(n: int, L: int) -> np.ndarray:
    """int_{-1}^1 C_ell(t)^2 (1-t^2)^{lam-1/2} dt for ell = 0..L (exact)."""
    lam = gegenbauer_param(n)
    ell = np.arange(L + 1)
    lg = np.array([math.lgamma(e + 2 * lam) - math.lgamma(e + 1) for e in ell])
    return math.pi * 2.0 ** (1 - 2 * lam) * np.exp(lg) / ((ell + lam) * math.gamma(lam) ** 2)


def basis_sq_norms(n: int, L: int) -> np.ndarray:
    """Squared L^2(S^n) norms of the zonal basis functions C_ell(t)."""
    return sphere_surface_area(n - 1) * gegenbauer_norms(n, L)


@lru_cache(maxsize=64)
def _spectrum(n: int, m: int, L: int) -> np.ndarray:
    e = np.array([float(gjms_eigenvalue(n, m, ell)) for ell in range(L + 1)])
    e.flags.writeable = False
    return e


def gjms_spectrum(n: int, m: int, L: int) -> np.ndarray:
    """Eigenvalues e_0..e_L of P^{2m}_n (read-only array)."""
    return _spectrum(n, m, L)


@dataclass(frozen=True, eq=False)
class ZonalFunction:
    """A zonal function on S^n given by Gegenbauer coefficients a_0..a_L."""

    n: int
    coeffs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a finite 1-d array")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, n: int, c: float = 1.0) -> "ZonalFunction":
        return cls(n, np.array([float(c)]))

    def __call__(self, t) -> np.ndarray:
        return self.coeffs @ gegenbauer_table(self.n, self.degree, t)

    def values(self, rule: QuadratureRule) -> np.ndarray:
        key = id(rule)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not rule:
            hit = (rule, synthesize(self, rule))
            self._cache[key] = hit
        return hit[1]

    def scaled(self, s: float) -> "ZonalFunction":
        return ZonalFunction(self.n, s * self.coeffs)

    def reflected(self) -> "ZonalFunction":
        """f(-t): the antipodal reflection."""
        sign = (-1.0) ** np.arange(self.degree + 1)
        return ZonalFunction(self.n, sign * self.coeffs)

    def derivative(self) -> "ZonalFunction":
        """d/dt as a function of t, re-expanded in the same basis."""
        return _differentiate(self)

    def padded(self, L: int) -> np.ndarray:
        out = np.zeros(max(L, self.degree) + 1)
        out[: self.degree + 1] = self.coeffs
        return out


def _differentiate(f: ZonalFunction) -> ZonalFunction:
    # d/dt C_ell = 2 lam C_{ell-1}^{lam+1} and
    # C_j^{lam+1} = sum_{i = j, j-2, ...} (i+lam)/lam C_i^{lam}
    lam = gegenbauer_param(f.n)
    L = f.degree
    out = np.zeros(max(L, 1))
    for ell in range(1, L + 1):
        a = f.coeffs[ell]
        if a == 0:
            continue
        for i in range(ell - 1, -1, -2):
            out[i] += a * 2 * (i + lam)
    return ZonalFunction(f.n, out)


def synthesize(f: ZonalFunction, rule: QuadratureRule) -> np.ndarray:
    """Values sum_ell a_ell C_ell(t_j) at the nodes of ``rule``."""
    if f.n != rule.n:
        raise ValueError("dimension mismatch")
    if f.degree < rule.size:
        return f.coeffs @ rule.basis[: f.degree + 1]
    return f(rule.nodes)


def analyze(values, rule: QuadratureRule, L: int | None = None) -> ZonalFunction:
    """Gegenbauer coefficients up to degree L from grid values on ``rule``."""
    N = rule.size
    explicit = L is not None
    if L is None:
        L = N - 1
    if L > N - 1:
        raise ValueError(f"degree {L} exceeds N - 1 = {N - 1}")
    # full interpolation (L omitted) is exact on the grid; only truncations can alias
    if explicit and 2 * L > 2 * N - 4:
        warnings.warn(f"degree {L} is close to the node count {N}; products may alias", stacklevel=2)
    values = np.asarray(values, dtype=float)
    h = gegenbauer_norms(rule.n, L)
    a = rule.basis[: L + 1] @ (rule.weights * values) / h
    return ZonalFunction(rule.n, a)


def analysis_matrix(rule: QuadratureRule, L: int | None = None) -> np.ndarray:
    """Matrix M with analyze(v).coeffs = M @ v."""
    L = rule.size - 1 if L is None else L
    h = gegenbauer_norms(rule.n, L)
    return rule.basis[: L + 1] * rule.weights[None, :] / h[:, None]


# ---------------------------------------------------------------------------
# Operators and functionals


def apply_gjms(f: ZonalFunction, m: int) -> ZonalFunction:
    """P^{2m}_n f, acting diagonally on the Gegenbauer coefficients."""
    e = gjms_spectrum(f.n, m, f.degree)
    return ZonalFunction(f.n, e * f.coeffs)


def energy(f: ZonalFunction, m: int) -> float:
    """int_{S^n} f P^{2m}_n(f) dmu, computed spectrally."""
    e = gjms_spectrum(f.n, m, f.degree)
    return float(np.sum(e * basis_sq_norms(f.n, f.degree) * f.coeffs**2))


def l2_norm_sq(f: ZonalFunction) -> float:
    return float(np.sum(basis_sq_norms(f.n, f.degree) * f.coeffs**2))


def _grid_values(f, rule: QuadratureRule) -> np.ndarray:
    if isinstance(f, ZonalFunction):
        return f.values(rule)
    return np.asarray(f, dtype=float)


def lebesgue_integral(f, p: float, rule: QuadratureRule) -> float:
    """int_{S^n} f^p dmu by quadrature; ``f`` is a ZonalFunction or grid values."""
    v = _grid_values(f, rule)
    if p < 0 or p != int(p):
        if np.min(v) <= 0:
            raise PositivityError(f"min grid value {np.min(v):.3e} <= 0 with exponent {p}")
    return rule.integrate(v**p)


def sobolev_quotient(f: ZonalFunction, params: ProblemParams, rule: QuadratureRule) -> float:
    """(int f^{1-alpha})^{2/(alpha-1)} int [f P f - eps P(1) f^2] dmu."""
    alpha, eps = params.alpha, params.eps
    if alpha == 1:
        raise ValueError("alpha = 1 is excluded; use log_sobolev_quotient")
    A = lebesgue_integral(f, 1 - alpha, rule)
    E = energy(f, params.m) - eps * params.p1 * l2_norm_sq(f)
    return A ** (2 / (alpha - 1)) * E


def log_sobolev_quotient(f: ZonalFunction, m: int, rule: QuadratureRule) -> float:
    """exp(-2 avg log f) * avg(f P f): the alpha -> 1 limiting functional."""
    v = f.values(rule)
    if np.min(v) <= 0:
        raise PositivityError("log of a non-positive function")
    area = sphere_surface_area(f.n)
    return math.exp(-2 * rule.integrate(np.log(v)) / area) * energy(f, m) / area


def random_positive_zonal(
    seed: int,
    L: int,
    amplitude: float,
    rule: QuadratureRule,
    decay: float = 1.0,
) -> ZonalFunction:
    """f = 1 + sum_{ell=1}^{L} g_ell C_ell, scaled so that min over the grid is >= 1 - amplitude.

    Coefficients are Gaussian with variance shrinking like ell^{-2 decay}
    relative to the basis size; the perturbation is rescaled so its sup over
    the grid equals ``amplitude``.
    """
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    coeffs = np.zeros(L + 1)
    coeffs[0] = 1.0
    if amplitude == 0 or L == 0:
        return ZonalFunction(rule.n, coeffs)
    rng = np.random.default_rng(seed)
    ell = np.arange(1, L + 1)
    g = rng.standard_normal(L) * ell ** (-decay) / np.sqrt(gegenbauer_norms(rule.n, L)[1:])
    pert = g @ rule.basis[1 : L + 1]
    scale = amplitude / np.max(np.abs(pert))
    coeffs[1:] = scale * g
    return ZonalFunction(rule.n, coeffs)


def to_csv(f: ZonalFunction, rule: QuadratureRule) -> str:
    """CSV dump with header ``t,theta,value``; 17 significant digits."""
    v = f.values(rule)
    lines = ["t,theta,value"]
    for t, th, x in zip(rule.nodes, rule.theta, v):
        lines.append(f"{t:.17g},{th:.17g},{x:.17g}")
    return "\n".join(lines) + "\n"


def p1_value(n: int, m: int) -> float:
    return float(gamma_ratio(n, m))

"""Closed-form constants of the GJMS operator on the round sphere S^n.

Everything that is a ratio of Gamma functions at half-integer arguments is
kept as an exact :class:`fractions.Fraction`; floating point only enters
through the surface area |S^n|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

ExactRational = Fraction


def _check_nm(n: int, m: int) -> None:
    if not isinstance(n, int) or not isinstance(m, int):
        raise TypeError("n and m must be integers")
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n}")
    if 2 * m <= n:
        raise ValueError(f"need 2m > n, got n={n}, m={m}")


def _shift(n: int, i: int) -> Fraction:
    """(i + n/2)(i - n/2 + 1), the i-th shift in the product formula."""
    half = Fraction(n, 2)
    return (i + half) * (i - half + 1)


def laplace_eigenvalue(n: int, ell: int) -> int:
    """Eigenvalue of -Laplacian on degree-ell spherical harmonics of S^n."""
    return ell * (ell + n - 1)


def gamma_ratio(n: int, m: int) -> Fraction:
    """Gamma(n/2 + m) / Gamma(n/2 - m) as an exact telescoped product."""
    _check_nm(n, m)
    out = Fraction(1)
    for i in range(2 * m):
        out *= Fraction(n, 2) - m + i
    return out


def gjms_eigenvalue(n: int, m: int, ell: int) -> Fraction:
    """Eigenvalue of P^{2m}_n on degree-ell spherical harmonics."""
    _check_nm(n, m)
    if ell < 0:
        raise ValueError("ell must be >= 0")
    lam = laplace_eigenvalue(n, ell)
    out = Fraction(1)
    for i in range(m):
        out *= lam - _shift(n, i)
    return out


def q_curvature(n: int, m: int) -> Fraction:
    """Q^{2m}_n = 2/(n-2m) * P^{2m}_n(1)."""
    return Fraction(2, n - 2 * m) * gamma_ratio(n, m)


def expand_gjms_polynomial(n: int, m: int) -> list[Fraction]:
    """Coefficients c_0..c_m of P^{2m}_n = sum_k c_k (-Laplacian)^k.

    Obtained by multiplying out the m linear factors exactly; index k holds
    the coefficient of (-Laplacian)^k, so the last entry is always 1.
    """
    _check_nm(n, m)
    coeffs = [Fraction(1)]
    for i in range(m):
        root = _shift(n, i)
        nxt = [Fraction(0)] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            nxt[k + 1] += c
            nxt[k] -= root * c
        coeffs = nxt
    return coeffs


def evaluate_polynomial(coeffs: list[Fraction], x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def to_laplacian_powers(coeffs: list[Fraction]) -> list[Fraction]:
    """Rewrite sum c_k (-Laplacian)^k as sum d_k Laplacian^k (display form)."""
    return [c if k % 2 == 0 else -c for k, c in enumerate(coeffs)]


def critical_alpha(n: int, m: int) -> Fraction:
    return Fraction(n + 2 * m, 2 * m - n)


def c_alpha(n: int, m: int, alpha: float) -> float:
    """alpha (2m-n)/2 - (2m+n)/2; exact when alpha is a Fraction or int."""
    if isinstance(alpha, (int, Fraction)):
        return Fraction(alpha) * Fraction(2 * m - n, 2) - Fraction(2 * m + n, 2)
    return alpha * (2 * m - n) / 2 - (2 * m + n) / 2


def sphere_surface_area(n: int) -> float:
    """|S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def sharp_constant(n: int, m: int, alpha: float) -> float:
    """Right-hand side Gamma(n/2+m)/Gamma(n/2-m) |S^n|^{(alpha+1)/(alpha-1)}.

    Only defined for n = 2m - 1 and alpha in (0,1) U (1, 2n+1].
    """
    _check_nm(n, m)
    if n != 2 * m - 1:
        raise ValueError(f"sharp constant needs n = 2m - 1, got n={n}, m={m}")
    if alpha == 1:
        raise ValueError("alpha = 1 has no sharp constant; use the log-Sobolev form")
    if not 0 < alpha <= 2 * n + 1:
        raise ValueError(f"alpha must lie in (0,1) U (1, {2 * n + 1}], got {alpha}")
    return float(gamma_ratio(n, m)) * sphere_surface_area(n) ** ((alpha + 1) / (alpha - 1))


def predicted_infimum(n: int, m: int, alpha: float, eps: float) -> float:
    """(1-eps) P(1) |S^n|^{(alpha+1)/(alpha-1)}: the quotient of any constant."""
    if alpha == 1:
        raise ValueError("alpha = 1 is excluded")
    return (1 - eps) * float(gamma_ratio(n, m)) * sphere_surface_area(n) ** ((alpha + 1) / (alpha - 1))


@dataclass(frozen=True)
class ProblemParams:
    """The tuple (n, m, alpha, eps).

    The default constructor enforces the standing hypotheses; use
    :meth:`unchecked` for exploratory sweeps outside them.
    """

    n: int = 3
    m: int = 2
    alpha: float = 7.0
    eps: float = 0.1

    def __post_init__(self):
        self.validate()

    def validate(self, liouville: bool = False) -> None:
        _check_nm(self.n, self.m)
        crit = float(critical_alpha(self.n, self.m))
        if not 0 < self.alpha <= crit + 1e-12:
            raise ValueError(f"alpha must lie in (0, {crit}], got {self.alpha}")
        if not 0 <= self.eps < 1:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")
        if liouville and self.eps == 0 and self.alpha >= crit:
            raise ValueError("eps = 0 requires subcritical alpha for the Liouville statement")

    @classmethod
    def unchecked(cls, n: int, m: int, alpha: float, eps: float) -> "ProblemParams":
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "m", m)
        object.__setattr__(obj, "alpha", alpha)
        object.__setattr__(obj, "eps", eps)
        return obj

    def replace(self, **changes) -> "ProblemParams":
        d = {"n": self.n, "m": self.m, "alpha": self.alpha, "eps": self.eps}
        d.update(changes)
        return ProblemParams(**d)

    @property
    def k(self) -> int:
        """Kernel exponent 2m - n (also the growth exponent at infinity)."""
        return 2 * self.m - self.n

    @property
    def p1(self) -> float:
        """P^{2m}_n(1) = (n-2m)/2 Q^{2m}_n."""
        return float(gamma_ratio(self.n, self.m))

    @property
    def c_alpha(self) -> float:
        return c_alpha(self.n, self.m, float(self.alpha))

    @property
    def is_critical(self) -> bool:
        return abs(self.alpha - float(critical_alpha(self.n, self.m))) < 1e-12

    def trivial_solution(self) -> float:
        """The constant (1-eps)^{-1/(alpha+1)} solving the main equation."""
        return (1.0 - self.eps) ** (-1.0 / (self.alpha + 1.0))

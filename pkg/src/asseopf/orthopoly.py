"""Orthonormal univariate polynomial families and their tensor products.

Production fits use Legendre polynomials rescaled to a subdomain box edge,
orthonormal under the uniform probability measure on that edge.  The
probabilists' Hermite family (orthonormal under the standard normal density)
is included for cross-checks on Gaussian toy problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolynomialFamily",
    "legendre_family",
    "hermite_family",
    "eval_univariate",
    "eval_univariate_all",
    "eval_multivariate",
]


@dataclass(frozen=True)
class PolynomialFamily:
    """Univariate orthonormal family: 'legendre' on [lower, upper] or 'hermite'."""

    kind: str
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        if self.kind not in ("legendre", "hermite"):
            raise ValueError(f"unknown polynomial family {self.kind!r}")
        if self.kind == "legendre" and not self.lower < self.upper:
            raise ValueError("legendre family requires lower < upper")

    def recurrence_coefficients(self, nmax: int):
        """(a, b) of the orthonormal recurrence x p_k = a_{k+1} p_{k+1} + b_k p_k + a_k p_{k-1}.

        Coefficients refer to the standardized variable (t in [-1, 1] for
        Legendre, x for Hermite); both families have b_k = 0 by symmetry.
        """
        k = np.arange(nmax + 1, dtype=float)
        if self.kind == "legendre":
            a = np.zeros(nmax + 1)
            a[1:] = k[1:] / np.sqrt((2 * k[1:] - 1) * (2 * k[1:] + 1))
        else:
            a = np.sqrt(k)
        return a, np.zeros(nmax + 1)


def legendre_family(lower: float, upper: float) -> PolynomialFamily:
    return PolynomialFamily("legendre", float(lower), float(upper))


def hermite_family() -> PolynomialFamily:
    return PolynomialFamily("hermite")


def _check_domain(family: PolynomialFamily, x: np.ndarray):
    if family.kind == "legendre":
        tol = 1e-12 * max(1.0, abs(family.lower), abs(family.upper))
        if np.any(x < family.lower - tol) or np.any(x > family.upper + tol):
            raise ValueError(
                f"argument outside legendre interval [{family.lower}, {family.upper}]"
            )


def eval_univariate_all(family: PolynomialFamily, max_degree: int, x) -> np.ndarray:
    """Evaluate orthonormal degrees 0..max_degree at x; shape (len(x), max_degree+1)."""
    if max_degree < 0:
        raise ValueError("degree must be >= 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(family, x)
    out = np.empty((x.size, max_degree + 1))
    if family.kind == "legendre":
        span = family.upper - family.lower
        t = 2.0 * (x - family.lower) / span - 1.0
        # classic recurrence for P_k, scaled to unit norm afterwards
        pkm1 = np.ones_like(t)
        out[:, 0] = 1.0
        if max_degree >= 1:
            pk = t.copy()
            out[:, 1] = math.sqrt(3.0) * pk
            for k in range(1, max_degree):
                pkp1 = ((2 * k + 1) * t * pk - k * pkm1) / (k + 1)
                out[:, k + 1] = math.sqrt(2 * k + 3) * pkp1
                pkm1, pk = pk, pkp1
    else:
        hkm1 = np.ones_like(x)
        out[:, 0] = 1.0
        if max_degree >= 1:
            hk = x.copy()
            out[:, 1] = hk
            norm = 1.0
            for k in range(1, max_degree):
                hkp1 = x * hk - k * hkm1
                norm *= math.sqrt(k + 1)
                out[:, k + 1] = hkp1 / norm
                hkm1, hk = hk, hkp1
    return out


def eval_univariate(family: PolynomialFamily, degree: int, x):
    """Orthonormal polynomial of given degree at x (scalar in, scalar out)."""
    vals = eval_univariate_all(family, degree, x)[:, degree]
    return float(vals[0]) if np.isscalar(x) or np.ndim(x) == 0 else vals


def eval_multivariate(multi_index, families, point) -> float:
    """Tensor-product basis value: product over dimensions of the univariate values."""
    multi_index = np.asarray(multi_index, dtype=int)
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if not (len(multi_index) == len(families) == point.size):
        raise ValueError("multi-index, families, and point dimensions must agree")
    val = 1.0
    for beta, fam, xj in zip(multi_index, families, point):
        val *= eval_univariate(fam, int(beta), float(xj))
    return val

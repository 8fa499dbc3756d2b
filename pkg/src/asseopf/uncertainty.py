"""Input uncertainty model.

Marginal distributions for the independent random inputs, quasi-Monte Carlo
designs in the unit hypercube, and the isoprobabilistic (CDF) transform
between physical space and unit space.  All subdomain geometry downstream
lives in the unit hypercube, so a subdomain's probability mass is simply its
volume.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.stats import qmc

__all__ = [
    "Space",
    "MarginalDistribution",
    "RandomVector",
    "SampleMatrix",
    "eval_marginal",
    "sample_qmc",
    "to_physical",
    "to_unit",
]

#: Largest dimension supported by the Sobol' direction numbers shipped with scipy.
MAX_QMC_DIM = 21201


class Space(enum.Enum):
    UNIT = "unit"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class MarginalDistribution:
    """One univariate input distribution.

    kind selects the family; (a, b) are its two parameters:
      gaussian: a = mean, b = standard deviation (> 0)
      weibull:  a = scale (> 0), b = shape (> 0)
      beta:     a, b = shape parameters (> 0), support [0, 1]
      uniform:  a = lower, b = upper (a < b)
    """

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "weibull", "beta", "uniform"):
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.kind == "gaussian" and not self.b > 0:
            raise ValueError("gaussian standard deviation must be > 0")
        if self.kind == "weibull" and not (self.a > 0 and self.b > 0):
            raise ValueError("weibull scale and shape must be > 0")
        if self.kind == "beta" and not (self.a > 0 and self.b > 0):
            raise ValueError("beta shape parameters must be > 0")
        if self.kind == "uniform" and not self.a < self.b:
            raise ValueError("uniform requires lower < upper")

    def _frozen(self):
        if self.kind == "gaussian":
            return stats.norm(loc=self.a, scale=self.b)
        if self.kind == "weibull":
            return stats.weibull_min(c=self.b, scale=self.a)
        if self.kind == "beta":
            return stats.beta(self.a, self.b)
        return stats.uniform(loc=self.a, scale=self.b - self.a)

    def pdf(self, x):
        return self._frozen().pdf(x)

    def cdf(self, x):
        return self._frozen().cdf(x)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValueError("quantile argument must lie strictly inside (0, 1)")
        return self._frozen().ppf(p)

    def mean(self) -> float:
        return float(self._frozen().mean())


def eval_marginal(dist: MarginalDistribution, x, mode: str):
    """Evaluate pdf, cdf, or quantile of a marginal at x."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("eval_marginal requires finite arguments")
    if mode == "pdf":
        return dist.pdf(x)
    if mode == "cdf":
        return dist.cdf(x)
    if mode == "quantile":
        return dist.quantile(x)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class RandomVector:
    """Ordered list of mutually independent marginals."""

    marginals: tuple[MarginalDistribution, ...]

    def __post_init__(self):
        if len(self.marginals) < 1:
            raise ValueError("RandomVector needs at least one marginal")
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def joint_pdf(self, x: np.ndarray) -> np.ndarray:
        """Product of marginal densities, rows of x = points."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dens = np.ones(x.shape[0])
        for j, m in enumerate(self.marginals):
            dens *= m.pdf(x[:, j])
        return dens


@dataclass(frozen=True)
class SampleMatrix:
    """n x M matrix of sample points tagged with the space they live in."""

    points: np.ndarray
    space: Space

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.space is Space.UNIT:
            if pts.size and (pts.min() < 0.0 or pts.max() >= 1.0):
                raise ValueError("unit-space samples must lie in [0, 1)")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def sample_qmc(n: int, m: int, seed_skip: int = 1) -> SampleMatrix:
    """Generate n Sobol' points in [0, 1)^m.

    seed_skip is the number of leading sequence elements discarded; it is
    clamped to >= 1 so the all-zeros point is never emitted (it would map to
    the lower support endpoint of every marginal).  Output is deterministic
    for fixed (n, m, seed_skip).
    """
    if n < 1 or m < 1:
        raise ValueError("sample_qmc requires n >= 1 and m >= 1")
    if m > MAX_QMC_DIM:
        raise ValueError(f"dimension {m} exceeds supported Sobol' dimension {MAX_QMC_DIM}")
    skip = max(int(seed_skip), 1)
    engine = qmc.Sobol(d=m, scramble=False)
    engine.fast_forward(skip)
    with warnings.catch_warnings():
        # scipy warns when n is not a power of two; arbitrary n is part of
        # the sampling contract here.
        warnings.simplefilter("ignore", UserWarning)
        pts = engine.random(n)
    return SampleMatrix(pts, Space.UNIT)


def to_physical(u: SampleMatrix, rv: RandomVector) -> SampleMatrix:
    """Map unit-space samples through the marginal quantile functions."""
    if u.space is not Space.UNIT:
        raise ValueError("to_physical expects unit-space samples")
    if u.dim != rv.dim:
        raise ValueError(f"sample dimension {u.dim} != random vector dimension {rv.dim}")
    out = np.empty_like(u.points)
    for j, m in enumerate(rv.marginals):
        out[:, j] = m.quantile(u.points[:, j])
    return SampleMatrix(out, Space.PHYSICAL)


def to_unit(x: SampleMatrix, rv: RandomVector) -> SampleMatrix:
    """Map physical samples through the marginal CDFs into the unit cube."""
    if x.space is not Space.PHYSICAL:
        raise ValueError("to_unit expects physical-space samples")
    if x.dim != rv.dim:
        raise ValueError(f"sample dimension {x.dim} != random vector dimension {rv.dim}")
    out = np.empty_like(x.points)
    for j, m in enumerate(rv.marginals):
        out[:, j] = m.cdf(x.points[:, j])
    # CDF values can hit 1.0 exactly in floating point; keep them inside the
    # half-open cube so downstream domain membership stays well defined.
    np.clip(out, 0.0, np.nextafter(1.0, 0.0), out=out)
    return SampleMatrix(out, Space.UNIT)

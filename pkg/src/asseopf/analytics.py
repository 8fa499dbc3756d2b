"""Post-processing of surrogate and Monte Carlo outputs.

Sample summaries (moments, quantiles, empirical CDF, histogram PDF), the
normalized validation error, and method-comparison tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SurrogateReport",
    "summarize",
    "ecdf",
    "ecdf_eval",
    "validation_error",
    "compare_methods",
]

DEFAULT_QUANTILES = (0.05, 0.95)
CDF_GRID_SIZE = 512


@dataclass
class SurrogateReport:
    """Distributional summary of one response under one method."""

    method: str
    response: str
    n_samples: int
    mean: float
    variance: float
    quantiles: dict[float, float]
    cdf_x: np.ndarray
    cdf_y: np.ndarray
    pdf_x: np.ndarray  # bin centers
    pdf_y: np.ndarray  # densities
    e_val: float | None = None
    n_ed: int | None = None
    n_val: int | None = None
    wall_time_s: float | None = None


def ecdf(samples) -> tuple[np.ndarray, np.ndarray]:
    """Right-continuous empirical CDF as (sorted values, step heights)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    return x, np.arange(1, x.size + 1) / x.size


def ecdf_eval(samples, at) -> np.ndarray:
    """Empirical CDF evaluated at arbitrary points (fraction of samples <= at)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    at = np.asarray(at, dtype=float)
    return np.searchsorted(x, at, side="right") / x.size


def summarize(
    samples,
    p_list=DEFAULT_QUANTILES,
    method: str = "",
    response: str = "",
    grid_size: int = CDF_GRID_SIZE,
) -> SurrogateReport:
    """Sample statistics: unbiased mean/variance, interpolated quantiles,
    empirical-CDF grid, and a Freedman-Diaconis histogram density."""
    z = np.asarray(samples, dtype=float).ravel()
    z = z[np.isfinite(z)]
    if z.size < 2:
        raise ValueError("summarize requires at least 2 finite samples")
    mean = float(z.mean())
    variance = float(np.var(z, ddof=1))
    quantiles = {float(p): float(np.quantile(z, p)) for p in p_list}

    lo, hi = float(z.min()), float(z.max())
    if hi == lo:
        cdf_x = np.array([lo, lo])
        cdf_y = np.array([1.0, 1.0])
        pdf_x = np.array([lo])
        pdf_y = np.array([np.inf])
    else:
        cdf_x = np.linspace(lo, hi, grid_size)
        cdf_y = ecdf_eval(z, cdf_x)
        dens, edges = np.histogram(z, bins="fd", density=True)
        pdf_x = 0.5 * (edges[:-1] + edges[1:])
        pdf_y = dens
    return SurrogateReport(
        method=method,
        response=response,
        n_samples=int(z.size),
        mean=mean,
        variance=variance,
        quantiles=quantiles,
        cdf_x=cdf_x,
        cdf_y=cdf_y,
        pdf_x=pdf_x,
        pdf_y=pdf_y,
    )


def validation_error(truth, predicted) -> float:
    """Normalized mean-square prediction error on an independent sample set:
    ((N-1)/N) * sum((z - zhat)^2) / sum((z - mean(z))^2)."""
    z = np.asarray(truth, dtype=float).ravel()
    zhat = np.asarray(predicted, dtype=float).ravel()
    if z.size != zhat.size:
        raise ValueError("truth and predictions must have equal length")
    n = z.size
    if n < 2:
        raise ValueError("validation error needs at least 2 samples")
    denom = float(np.sum((z - z.mean()) ** 2))
    if denom == 0.0:
        raise ValueError("degenerate truth: all responses identical")
    num = float(np.sum((z - zhat) ** 2))
    return (n - 1) / n * num / denom


def compare_methods(reports: list[SurrogateReport], baseline: SurrogateReport) -> list[dict]:
    """Rows of per-method statistics with errors normalized against the
    baseline: e% = 100 * (baseline - method) / baseline."""
    if baseline is None:
        raise ValueError("comparison requires a baseline report")

    def err_pct(ref: float, val: float) -> float | None:
        if ref == 0.0:
            return None
        return 100.0 * (ref - val) / ref

    rows = []
    for rep in reports:
        if rep.response != baseline.response:
            raise ValueError(
                f"report response {rep.response!r} does not match baseline {baseline.response!r}"
            )
        row = {
            "response": rep.response,
            "method": rep.method,
            "mean": rep.mean,
            "variance": rep.variance,
            "err_mean_pct": err_pct(baseline.mean, rep.mean),
            "e_val": rep.e_val,
        }
        for p in sorted(rep.quantiles):
            row[f"q{p:g}"] = rep.quantiles[p]
            base_q = baseline.quantiles.get(p)
            row[f"err_q{p:g}_pct"] = (
                err_pct(base_q, rep.quantiles[p]) if base_q is not None else None
            )
        rows.append(row)
    return rows

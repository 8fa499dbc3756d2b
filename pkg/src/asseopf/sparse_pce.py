"""Sparse polynomial chaos models on box subdomains of the unit hypercube.

Basis sets come from hyperbolic truncation of tensor-product Legendre
polynomials; coefficients come from hybrid least angle regression (LAR ranks
candidate bases, ordinary least squares refits every nested prefix of the
ranking, and the prefix with the smallest corrected leave-one-out error
wins).  Moments and first-order Sobol' indices follow in closed form from
the orthonormal coefficients.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .orthopoly import eval_univariate_all, legendre_family
from .uncertainty import SampleMatrix

__all__ = [
    "MultiIndexSet",
    "PceModel",
    "LarFitResult",
    "hyperbolic_index_set",
    "hybrid_lar_fit",
    "loo_error",
    "adaptive_fit",
    "pce_moments",
    "sobol_first_order",
]

_UNIT_LEVERAGE_TOL = 1e-10
_RANK_TOL = 1e-12
_EVAL_CHUNK = 4096


@dataclass(frozen=True)
class MultiIndexSet:
    """Hyperbolically truncated multi-index set in graded lexicographic order."""

    indices: np.ndarray  # (L, M) nonnegative ints
    m: int
    h: int
    q: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.shape[0]


@functools.lru_cache(maxsize=None)
def _hyperbolic_rows(m: int, h: int, q: float) -> np.ndarray:
    if h == 0:
        rows = np.zeros((1, m), dtype=int)
    else:
        grid = np.indices((h + 1,) * m).reshape(m, -1).T
        grid = grid[grid.sum(axis=1) <= h]
        if q < 1.0:
            norm = np.power(np.power(grid, q).sum(axis=1), 1.0 / q)
            grid = grid[norm <= h * (1.0 + 1e-12) + 1e-12]
        rows = np.array(sorted(map(tuple, grid), key=lambda b: (sum(b), b)), dtype=int)
    rows = rows.reshape(-1, m)
    rows.setflags(write=False)
    return rows


def hyperbolic_index_set(m: int, h: int, q: float) -> MultiIndexSet:
    """All multi-indices with (sum_j beta_j^q)^(1/q) <= h.

    q = 1 recovers the total-degree set of size (m+h)!/(m!h!); q < 1 thins
    out high-interaction indices.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    if h < 0:
        raise ValueError("order must be >= 0")
    if not 0.0 < q <= 1.0:
        raise ValueError("hyperbolic norm parameter must lie in (0, 1]")
    return MultiIndexSet(_hyperbolic_rows(int(m), int(h), float(q)), m, h, q)


# ---------------------------------------------------------------------------
# design matrices on a box


def _as_box(domain, m: int) -> np.ndarray:
    if domain is None:
        box = np.column_stack([np.zeros(m), np.ones(m)])
    else:
        box = np.asarray(domain, dtype=float).reshape(m, 2)
    if np.any(box[:, 0] >= box[:, 1]):
        raise ValueError("domain box must have low < high per dimension")
    return box


def _univariate_table(points: np.ndarray, box: np.ndarray, max_degree: int) -> np.ndarray:
    """Per-dimension orthonormal Legendre values; shape (n, max_degree+1, M)."""
    n, m = points.shape
    table = np.empty((n, max_degree + 1, m))
    for j in range(m):
        fam = legendre_family(box[j, 0], box[j, 1])
        table[:, :, j] = eval_univariate_all(fam, max_degree, points[:, j])
    return table


def _design_from_table(table: np.ndarray, indices: np.ndarray) -> np.ndarray:
    m = indices.shape[1]
    x = table[:, indices[:, 0], 0].copy()
    for j in range(1, m):
        x *= table[:, indices[:, j], j]
    return x


def design_matrix(points: np.ndarray, indices: np.ndarray, domain=None) -> np.ndarray:
    """Basis evaluations at points (rows) for each multi-index (columns)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    box = _as_box(domain, points.shape[1])
    max_deg = int(indices.max()) if indices.size else 0
    return _design_from_table(_univariate_table(points, box, max_deg), indices)


# ---------------------------------------------------------------------------
# hybrid LAR


@dataclass
class LarFitResult:
    """Outcome of one hybrid-LAR fit on an explicit design matrix."""

    active: np.ndarray  # column ids into X, ascending
    coefficients: np.ndarray
    e_loo: float  # plain leave-one-out mean-square error
    e_cloo: float  # small-sample corrected value used for selection
    dropped: list[int] = field(default_factory=list)  # zero / dependent columns
    degenerate: bool = False


def _lar_order(xc: np.ndarray, yc: np.ndarray, max_steps: int):
    """Yield the least-angle-regression activation order (ranking only).

    Lazy so a caller that truncates its candidate scan never pays for the
    tail of the path.
    """
    n, p = xc.shape
    if p == 0 or max_steps == 0:
        return
    r = yc.copy()
    active: list[int] = []
    inactive = np.ones(p, dtype=bool)
    while len(active) < max_steps:
        c = xc.T @ r
        if not active:
            cm = np.where(inactive, np.abs(c), -np.inf)
            j = int(np.argmax(cm))
            if not np.isfinite(cm[j]) or cm[j] <= 1e-14:
                return
            active.append(j)
            inactive[j] = False
            yield j
            continue
        cols = np.array(active)
        s = np.sign(c[cols])
        s[s == 0] = 1.0
        g = xc[:, cols].T @ xc[:, cols]
        try:
            w0 = np.linalg.solve(g, s)
        except np.linalg.LinAlgError:
            return
        denom = float(s @ w0)
        if denom <= 1e-14:
            return
        aa = 1.0 / math.sqrt(denom)
        u = xc[:, cols] @ (aa * w0)
        cmax = float(np.max(np.abs(c[cols])))
        if not inactive.any():
            return
        a = xc[:, inactive].T @ u
        cj = c[inactive]
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = (cmax - cj) / (aa - a)
            g2 = (cmax + cj) / (aa + a)
        cand = np.concatenate([g1, g2])
        cand[~np.isfinite(cand)] = np.inf
        cand[cand <= 1e-12] = np.inf
        kbest = int(np.argmin(cand))
        gamma = float(cand[kbest])
        if not np.isfinite(gamma):
            return
        inact_ids = np.flatnonzero(inactive)
        jnew = int(inact_ids[kbest % len(inact_ids)])
        r = r - gamma * u
        active.append(jnew)
        inactive[jnew] = False
        yield jnew


class _IncrementalOls:
    """Grow an OLS fit one column at a time via an updated thin QR factor."""

    def __init__(self, y: np.ndarray, max_cols: int, rank_tol: float = _RANK_TOL):
        n = y.size
        self.y = y
        self.n = n
        self.q = np.empty((n, max_cols))
        self.rinv = np.zeros((max_cols, max_cols))
        self.d = np.empty(max_cols)
        self.h = np.zeros(n)
        self.m = 0
        self.rank_tol = rank_tol

    def try_append(self, v: np.ndarray) -> bool:
        m = self.m
        vnorm = float(np.linalg.norm(v))
        if vnorm == 0.0:
            return False
        w = np.zeros(m)
        vp = v.astype(float, copy=True)
        if m:
            w = self.q[:, :m].T @ vp
            vp -= self.q[:, :m] @ w
            w2 = self.q[:, :m].T @ vp  # one re-orthogonalization pass
            vp -= self.q[:, :m] @ w2
            w += w2
        rho = float(np.linalg.norm(vp))
        if rho <= self.rank_tol * vnorm:
            return False
        qnew = vp / rho
        self.q[:, m] = qnew
        if m:
            self.rinv[:m, m] = -(self.rinv[:m, :m] @ w) / rho
        self.rinv[m, m] = 1.0 / rho
        self.d[m] = float(qnew @ self.y)
        self.h += qnew**2
        self.m = m + 1
        return True

    def stats(self):
        """(coefficients, residuals, e_loo, e_cloo) for the current column set."""
        m = self.m
        resid = self.y - self.q[:, :m] @ self.d[:m]
        one_minus_h = 1.0 - self.h
        if np.any(one_minus_h <= _UNIT_LEVERAGE_TOL):
            e_loo = math.inf
        else:
            e_loo = float(np.mean((resid / one_minus_h) ** 2))
        if self.n > m and math.isfinite(e_loo):
            trace = float(np.sum(self.rinv[:m, :m] ** 2))
            e_cloo = e_loo * (self.n / (self.n - m)) * (1.0 + trace)
        else:
            e_cloo = math.inf
        coef = self.rinv[:m, :m] @ self.d[:m]
        return coef, resid, e_loo, e_cloo


def hybrid_lar_fit(x: np.ndarray, z: np.ndarray, patience: int | None = None) -> LarFitResult:
    """LAR-ranked, OLS-refitted sparse fit of z on the columns of x.

    Column 0 must be the constant basis; it is always kept.  Candidate sets
    are the nested prefixes of the LAR activation order, each refit by OLS;
    the one minimizing the corrected leave-one-out error is returned.  With
    patience set, the scan stops once that error has failed to improve for
    the given number of consecutive path extensions.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.asarray(z, dtype=float).ravel()
    n, ncols = x.shape
    if n == 0 or z.size == 0:
        raise ValueError("hybrid_lar_fit requires at least one sample")
    if z.size != n:
        raise ValueError("design matrix and response sizes disagree")

    norms = np.linalg.norm(x, axis=0)
    dropped = [int(j) for j in np.flatnonzero(norms == 0.0)]

    # center/normalize the nonconstant candidates for the LAR ranking
    cand_ids = [j for j in range(1, ncols) if norms[j] > 0.0]
    zc = z - z.mean()
    xc_cols, xc_ids = [], []
    for j in cand_ids:
        col = x[:, j] - x[:, j].mean()
        cn = float(np.linalg.norm(col))
        if cn <= _RANK_TOL * norms[j]:
            dropped.append(j)  # collinear with the intercept
            continue
        xc_cols.append(col / cn)
        xc_ids.append(j)
    xc = np.column_stack(xc_cols) if xc_cols else np.empty((n, 0))

    max_steps = min(len(xc_ids), max(n - 1, 0))

    ols = _IncrementalOls(z, max_cols=min(ncols, n) + 1)
    if not ols.try_append(x[:, 0]):
        raise ValueError("constant design column is identically zero")

    best = None  # (e_cloo, active_ids, coef, e_loo)
    coef, _, e_loo, e_cloo = ols.stats()
    best = (e_cloo, [0], coef.copy(), e_loo)
    active = [0]
    since_best = 0
    for k in _lar_order(xc, zc, max_steps):
        j = xc_ids[k]
        if ols.m >= ols.n:
            break
        if not ols.try_append(x[:, j]):
            dropped.append(j)
            continue
        active.append(j)
        coef, _, e_loo, e_cloo = ols.stats()
        if e_cloo < best[0]:
            best = (e_cloo, list(active), coef.copy(), e_loo)
            since_best = 0
        else:
            since_best += 1
            if patience is not None and since_best >= patience:
                break

    e_cloo, act, coef, e_loo = best[0], best[1], best[2], best[3]
    # report in ascending column order
    perm = np.argsort(act)
    act_arr = np.array(act)[perm]
    coef_arr = np.asarray(coef)[perm]
    return LarFitResult(
        active=act_arr,
        coefficients=coef_arr,
        e_loo=e_loo,
        e_cloo=e_cloo,
        dropped=sorted(set(dropped)),
        degenerate=not math.isfinite(e_cloo),
    )


def loo_error(x_active: np.ndarray, z: np.ndarray, coefficients: np.ndarray) -> float:
    """Leave-one-out mean-square error via the hat-matrix identity (no refits)."""
    x_active = np.atleast_2d(np.asarray(x_active, dtype=float))
    z = np.asarray(z, dtype=float).ravel()
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    resid = z - x_active @ coefficients
    q, _ = np.linalg.qr(x_active)
    h = np.sum(q**2, axis=1)
    one_minus_h = 1.0 - h
    if np.any(one_minus_h <= _UNIT_LEVERAGE_TOL):
        return math.inf
    return float(np.mean((resid / one_minus_h) ** 2))


# ---------------------------------------------------------------------------
# fitted model


@dataclass(frozen=True)
class PceModel:
    """Sparse PCE over a box subdomain of the unit hypercube.

    e_loo is the corrected leave-one-out error that won model selection;
    e_loo_raw is the plain mean-square leave-one-out value used for
    refinement scoring.
    """

    indices: np.ndarray  # (L_active, M)
    coefficients: np.ndarray
    domain: np.ndarray  # (M, 2)
    e_loo: float
    e_loo_raw: float
    n_train: int
    h: int = 0
    q: float = 1.0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        coef = np.asarray(self.coefficients, dtype=float)
        box = np.asarray(self.domain, dtype=float)
        if coef.size != idx.shape[0]:
            raise ValueError("one coefficient per active multi-index required")
        for arr in (idx, coef, box):
            arr.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "domain", box)

    @property
    def dim(self) -> int:
        return self.domain.shape[0]

    def evaluate(self, points) -> np.ndarray:
        pts = points.points if isinstance(points, SampleMatrix) else points
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(pts.shape[0])
        for lo in range(0, pts.shape[0], _EVAL_CHUNK):
            chunk = pts[lo : lo + _EVAL_CHUNK]
            x = design_matrix(chunk, self.indices, self.domain)
            out[lo : lo + _EVAL_CHUNK] = x @ self.coefficients
        return out


def adaptive_fit(
    points,
    z,
    h_range,
    q_range,
    domain=None,
    patience: int | None = None,
    early_stop: bool = False,
) -> PceModel:
    """Sweep the (order, norm) grid, hybrid-LAR fit each cell, keep the best.

    The grid cell with the smallest corrected leave-one-out error wins; ties
    go to the earliest cell in (order, norm) sweep order.  With early_stop
    the sweep is abandoned once that error has worsened for two consecutive
    orders (and, within an order, two consecutive norms), which keeps
    small-sample fits at low order instead of letting a lucky rich cell win.
    If every cell is degenerate the constant-mean model is returned with its
    error set to the sample variance.
    """
    pts = points.points if isinstance(points, SampleMatrix) else points
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    z = np.asarray(z, dtype=float).ravel()
    n, m = pts.shape
    if n == 0:
        raise ValueError("adaptive_fit requires at least one training point")
    if z.size != n:
        raise ValueError("points and responses disagree in length")
    h_list = [int(h) for h in h_range]
    q_list = [float(q) for q in q_range]
    if not h_list or not q_list:
        raise ValueError("order and norm ranges must be nonempty")
    box = _as_box(domain, m)

    max_h = max(h_list)
    table = _univariate_table(pts, box, max_h)

    best = None  # (e_cloo, fit, index_set)
    seen: set[bytes] = set()
    bad_h = 0
    for h in h_list:
        best_this_h = math.inf
        bad_q = 0
        for q in q_list:
            idxset = hyperbolic_index_set(m, h, q)
            key = idxset.indices.tobytes()
            if key not in seen:
                seen.add(key)
                x = _design_from_table(table, idxset.indices)
                fit = hybrid_lar_fit(x, z, patience=patience)
                if fit.e_cloo < best_this_h:
                    best_this_h = fit.e_cloo
                    bad_q = 0
                else:
                    bad_q += 1
                if best is None or fit.e_cloo < best[0]:
                    best = (fit.e_cloo, fit, idxset)
                if early_stop and bad_q >= 2:
                    break
        if early_stop:
            if best is not None and best_this_h > best[0]:
                bad_h += 1
                if bad_h >= 2:
                    break
            else:
                bad_h = 0

    fit, idxset = best[1], best[2]
    if fit.degenerate or not math.isfinite(fit.e_cloo):
        mean = float(z.mean())
        var = float(np.var(z, ddof=1)) if n > 1 else 0.0
        return PceModel(
            indices=np.zeros((1, m), dtype=int),
            coefficients=np.array([mean]),
            domain=box,
            e_loo=var,
            e_loo_raw=var,
            n_train=n,
        )
    return PceModel(
        indices=idxset.indices[fit.active],
        coefficients=fit.coefficients,
        domain=box,
        e_loo=fit.e_cloo,
        e_loo_raw=fit.e_loo,
        n_train=n,
        h=idxset.h,
        q=idxset.q,
    )


def pce_moments(model: PceModel) -> tuple[float, float]:
    """Mean and variance implied by the orthonormal coefficients."""
    nonzero = model.indices.any(axis=1)
    mean = 0.0
    if (~nonzero).any():
        mean = float(model.coefficients[~nonzero][0])
    variance = float(np.sum(model.coefficients[nonzero] ** 2))
    return mean, variance


def sobol_first_order(model: PceModel) -> np.ndarray:
    """First-order Sobol' indices from coefficient sums of squares.

    The numerator for dimension j sums only indices whose sole nonzero
    degree is in dimension j.  A zero-variance model yields the uniform
    vector 1/M so a preferred direction is still defined.
    """
    m = model.dim
    nonzero = model.indices != 0
    nonconstant = nonzero.any(axis=1)
    denom = float(np.sum(model.coefficients[nonconstant] ** 2))
    if denom <= 0.0 or not math.isfinite(denom):
        return np.full(m, 1.0 / m)
    s = np.empty(m)
    for j in range(m):
        only_j = nonzero[:, j] & (nonzero.sum(axis=1) == 1)
        s[j] = float(np.sum(model.coefficients[only_j] ** 2)) / denom
    return s

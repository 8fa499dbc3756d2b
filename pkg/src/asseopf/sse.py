"""Adaptive stochastic spectral embedding over the unit hypercube.

A binary tree of box subdomains; each node carries a sparse PCE fitted to
the residual its ancestors leave behind.  Refinement repeatedly picks the
terminal domain with the largest (leave-one-out error x probability mass)
score and bisects it at the midpoint of the direction with the largest
first-order Sobol' index, so probability mass splits exactly in half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sparse_pce import PceModel, adaptive_fit, sobol_first_order, pce_moments
from .uncertainty import RandomVector, SampleMatrix, Space, to_unit

__all__ = [
    "Subdomain",
    "SseNode",
    "SseTree",
    "SseConfig",
    "compute_residuals",
    "refinement_score",
    "select_refinement_domain",
    "split_node",
    "fit_asse",
    "evaluate_sse",
]

DEFAULT_H_RANGE = tuple(range(0, 7))
DEFAULT_Q_RANGE = tuple(round(0.5 + 0.05 * i, 10) for i in range(7))


@dataclass(frozen=True)
class Subdomain:
    """Axis-aligned box inside [0,1]^M with half-open membership per side."""

    bounds: np.ndarray  # (M, 2)

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        if np.any(b[:, 0] < 0.0) or np.any(b[:, 1] > 1.0) or np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("subdomain bounds must satisfy 0 <= low < high <= 1")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def mass(self) -> float:
        return float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership mask; intervals are [low, high) except high = 1 is closed."""
        pts = np.atleast_2d(points)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        upper = np.where(hi >= 1.0, pts <= hi, pts < hi)
        return np.all((pts >= lo) & upper, axis=1)

    def split(self, dim: int) -> tuple["Subdomain", "Subdomain"]:
        lo, hi = self.bounds[dim]
        mid = 0.5 * (lo + hi)
        left = self.bounds.copy()
        right = self.bounds.copy()
        left[dim, 1] = mid
        right[dim, 0] = mid
        return Subdomain(left), Subdomain(right)


@dataclass
class SseNode:
    """One subdomain of the embedding tree."""

    level: int
    index: int
    domain: Subdomain
    parent: "SseNode | None" = field(default=None, repr=False)
    expansion: PceModel | None = None
    score: float = 0.0
    split_dim: int | None = None
    split_reason: str = ""
    refine_rejected: bool = False  # a trial split increased the error mass
    children: "tuple[SseNode, SseNode] | None" = field(default=None, repr=False)
    point_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int), repr=False)
    # training residual entering this node (before its own expansion), and
    # what is left after it; populated during fitting
    residual_in: np.ndarray | None = field(default=None, repr=False)
    residual_out: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_points(self) -> int:
        return int(self.point_ids.size)

    @property
    def e_loo_raw(self) -> float:
        if self.expansion is None:
            raise ValueError("node has no expansion")
        return self.expansion.e_loo_raw

    @property
    def is_terminal(self) -> bool:
        return self.children is None


@dataclass(frozen=True)
class SseConfig:
    n_ref_min: int = 10
    k_max: int = 1000
    n_split: int = 2
    h_range: tuple[int, ...] = DEFAULT_H_RANGE
    q_range: tuple[float, ...] = DEFAULT_Q_RANGE
    # stop scanning LAR candidates after this many non-improving extensions
    lar_patience: int | None = 12
    # abandon the (order, norm) sweep after two consecutive worsening steps
    hq_early_stop: bool = True

    def __post_init__(self):
        if self.n_split != 2:
            raise ValueError("only bisection (n_split = 2) is supported")
        if self.n_ref_min < 1 or self.k_max < 0:
            raise ValueError("n_ref_min >= 1 and k_max >= 0 required")


@dataclass
class SseTree:
    """Fitted embedding: root node plus fitting configuration and transforms."""

    root: SseNode
    config: SseConfig
    rv: RandomVector | None = None
    refine_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.root.domain.dim

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if node.children is not None:
                stack.extend(reversed(node.children))

    def terminal_nodes(self):
        return [n for n in self.nodes() if n.is_terminal]

    def depth(self) -> int:
        return max(n.level for n in self.nodes())

    def evaluate(self, points, stats: dict | None = None) -> np.ndarray:
        return evaluate_sse(self, points, stats=stats)


def compute_residuals(node: SseNode, points, z_raw) -> np.ndarray:
    """Raw responses minus the expansions of all strict ancestors of node."""
    pts = points.points if isinstance(points, SampleMatrix) else points
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    z = np.asarray(z_raw, dtype=float).ravel()
    if not np.all(node.domain.contains(pts)):
        raise ValueError("points must lie inside the node's subdomain")
    resid = z.copy()
    anc = node.parent
    while anc is not None:
        if anc.expansion is not None:
            resid -= anc.expansion.evaluate(pts)
        anc = anc.parent
    return resid


def refinement_score(node: SseNode) -> float:
    """Leave-one-out error times probability mass; parent error stands in
    when the node has too few points for an expansion of its own."""
    if node.expansion is not None:
        return node.e_loo_raw * node.domain.mass
    if node.parent is None or node.parent.expansion is None:
        raise ValueError("scoring a node with no expansion requires a fitted parent")
    return node.parent.e_loo_raw * node.domain.mass


def _splittable(node: SseNode, config: SseConfig) -> bool:
    return (
        node.is_terminal
        and not node.refine_rejected
        and node.n_points >= 2 * config.n_ref_min
        and node.level < config.k_max
    )


def select_refinement_domain(tree: SseTree) -> SseNode | None:
    """Splittable terminal with the largest score; ties go to the lower
    (level, index).  None signals that refinement is exhausted."""
    best = None
    for node in tree.nodes():
        if not _splittable(node, tree.config):
            continue
        key = (-node.score, node.level, node.index)
        if best is None or key < best[0]:
            best = (key, node)
    return None if best is None else best[1]


def split_node(node: SseNode, points: np.ndarray) -> tuple[SseNode, SseNode]:
    """Bisect a node along its peak-Sobol' direction at the bound midpoint."""
    if node.children is not None:
        raise ValueError("node is already split")
    if node.expansion is None:
        raise ValueError("cannot split a node without an expansion")
    _, variance = pce_moments(node.expansion)
    if variance > 0.0 and math.isfinite(variance):
        s = sobol_first_order(node.expansion)
        dim = int(np.argmax(s))
        reason = "sobol"
    else:
        widths = node.domain.bounds[:, 1] - node.domain.bounds[:, 0]
        dim = int(np.argmax(widths))
        reason = "degenerate-variance"
    dom_lo, dom_hi = node.domain.split(dim)
    mid = dom_lo.bounds[dim, 1]
    coords = points[node.point_ids, dim]
    low_mask = coords < mid
    low = SseNode(
        level=node.level + 1,
        index=2 * node.index - 1,
        domain=dom_lo,
        parent=node,
        point_ids=node.point_ids[low_mask],
    )
    high = SseNode(
        level=node.level + 1,
        index=2 * node.index,
        domain=dom_hi,
        parent=node,
        point_ids=node.point_ids[~low_mask],
    )
    node.children = (low, high)
    node.split_dim = dim
    node.split_reason = reason
    return low, high


def _total_training_mse(terminals: list[SseNode], n_total: int) -> float:
    sse = 0.0
    for node in terminals:
        resid = node.residual_out if node.residual_out is not None else node.residual_in
        if resid is not None:
            sse += float(resid @ resid)
    return sse / n_total


def fit_asse(points, z, config: SseConfig | None = None, rv: RandomVector | None = None) -> SseTree:
    """Build the embedding tree on unit-space training data.

    The root expansion is fitted to the raw responses; afterwards the loop
    selects the highest-scoring splittable terminal, bisects it, and fits
    residual expansions in children that have at least n_ref_min points.  A
    refinement is accepted only if it does not increase the terminal
    leave-one-out error mass (children without expansions count with the
    parent's error); rejected splits are rolled back and the node is left
    alone.  The loop stops when nothing remains splittable or the level cap
    is hit.
    """
    config = config or SseConfig()
    pts = points.points if isinstance(points, SampleMatrix) else np.asarray(points, dtype=float)
    pts = np.atleast_2d(pts)
    z = np.asarray(z, dtype=float).ravel()
    n, m = pts.shape
    if n == 0:
        raise ValueError("fit_asse requires at least one training point")
    if z.size != n:
        raise ValueError("points and responses disagree in length")
    if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
        raise ValueError("training points must lie in the unit hypercube")

    root = SseNode(
        level=0,
        index=1,
        domain=Subdomain(np.column_stack([np.zeros(m), np.ones(m)])),
        point_ids=np.arange(n),
    )
    root.residual_in = z.copy()
    root.expansion = adaptive_fit(
        pts, z, config.h_range, config.q_range, root.domain.bounds,
        patience=config.lar_patience, early_stop=config.hq_early_stop,
    )
    root.residual_out = z - root.expansion.evaluate(pts)
    root.score = refinement_score(root)

    tree = SseTree(root=root, config=config, rv=rv)
    tree.refine_history.append(_total_training_mse([root], n))

    while True:
        node = select_refinement_domain(tree)
        if node is None:
            break
        low, high = split_node(node, pts)
        for child in (low, high):
            child.residual_in = node.residual_out[
                np.searchsorted(node.point_ids, child.point_ids)
            ]
            if child.n_points >= config.n_ref_min:
                child.expansion = adaptive_fit(
                    pts[child.point_ids],
                    child.residual_in,
                    config.h_range,
                    config.q_range,
                    child.domain.bounds,
                    patience=config.lar_patience,
                    early_stop=config.hq_early_stop,
                )
                child.residual_out = child.residual_in - child.expansion.evaluate(
                    pts[child.point_ids]
                )
            else:
                child.residual_out = child.residual_in
            child.score = refinement_score(child)
        # error mass before and after (children without expansions inherit
        # the parent error, so a pointless split is a wash, not a win)
        before = node.e_loo_raw * node.domain.mass
        after = sum(
            (c.e_loo_raw if c.expansion is not None else node.e_loo_raw) * c.domain.mass
            for c in (low, high)
        )
        if after <= before * (1.0 + 1e-12):
            tree.refine_history.append(_total_training_mse(tree.terminal_nodes(), n))
        else:
            node.children = None
            node.split_dim = None
            node.split_reason = ""
            node.refine_rejected = True
    return tree


def evaluate_sse(tree: SseTree, points, stats: dict | None = None) -> np.ndarray:
    """Sum of expansion values along each point's root-to-terminal path.

    Physical-space SampleMatrix inputs are CDF-transformed first (the tree
    must then carry its RandomVector).  Points outside the unit cube are
    clamped to the boundary; the count is reported through stats.
    """
    if isinstance(points, SampleMatrix):
        if points.space is Space.PHYSICAL:
            if tree.rv is None:
                raise ValueError("tree has no random vector for physical-space input")
            points = to_unit(points, tree.rv)
        pts = np.array(points.points, dtype=float)
    else:
        pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    if pts.shape[1] != tree.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, tree expects {tree.dim}")

    outside = np.any((pts < 0.0) | (pts > 1.0), axis=1)
    n_clamped = int(outside.sum())
    if n_clamped:
        np.clip(pts, 0.0, 1.0, out=pts)
    if stats is not None:
        stats["clamped"] = stats.get("clamped", 0) + n_clamped

    out = np.zeros(pts.shape[0])
    frontier = [(tree.root, np.arange(pts.shape[0]))]
    while frontier:
        node, ids = frontier.pop()
        if ids.size == 0:
            continue
        if node.expansion is not None:
            out[ids] += node.expansion.evaluate(pts[ids])
        if node.children is not None:
            mid = node.children[0].domain.bounds[node.split_dim, 1]
            low_mask = pts[ids, node.split_dim] < mid
            frontier.append((node.children[0], ids[low_mask]))
            frontier.append((node.children[1], ids[~low_mask]))
    return out

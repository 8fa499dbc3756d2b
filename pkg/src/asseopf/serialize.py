"""Versioned, self-describing surrogate documents.

A fitted embedding tree (a global sparse PCE is one with a single node)
serializes to JSON: node list with bounds, multi-indices, coefficients, and
the input marginals, so a surrogate can be re-evaluated without the
training data.  JSON floats round-trip exactly, which keeps re-evaluation
bit-identical with the in-process model.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .sparse_pce import PceModel
from .sse import SseConfig, SseNode, SseTree, Subdomain
from .uncertainty import MarginalDistribution, RandomVector

__all__ = ["FORMAT_NAME", "FORMAT_VERSION", "save_surrogate", "load_surrogate"]

FORMAT_NAME = "asseopf-surrogate"
FORMAT_VERSION = 1


def _expansion_to_dict(model: PceModel | None):
    if model is None:
        return None
    return {
        "indices": model.indices.tolist(),
        "coefficients": model.coefficients.tolist(),
        "e_loo": model.e_loo,
        "e_loo_raw": model.e_loo_raw,
        "n_train": model.n_train,
        "h": model.h,
        "q": model.q,
    }


def _expansion_from_dict(d, domain: np.ndarray) -> PceModel | None:
    if d is None:
        return None
    return PceModel(
        indices=np.array(d["indices"], dtype=int).reshape(-1, domain.shape[0]),
        coefficients=np.array(d["coefficients"], dtype=float),
        domain=domain,
        e_loo=d["e_loo"],
        e_loo_raw=d["e_loo_raw"],
        n_train=d["n_train"],
        h=d.get("h", 0),
        q=d.get("q", 1.0),
    )


def surrogate_document(tree: SseTree, method: str = "", response: str = "") -> dict:
    nodes = []
    order = list(tree.nodes())
    ids = {id(node): k for k, node in enumerate(order)}
    for node in order:
        nodes.append(
            {
                "level": node.level,
                "index": node.index,
                "bounds": node.domain.bounds.tolist(),
                "parent": ids[id(node.parent)] if node.parent is not None else None,
                "children": (
                    [ids[id(c)] for c in node.children] if node.children is not None else None
                ),
                "split_dim": node.split_dim,
                "split_reason": node.split_reason,
                "score": node.score,
                "n_points": node.n_points,
                "expansion": _expansion_to_dict(node.expansion),
            }
        )
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "method": method,
        "response": response,
        "dim": tree.dim,
        "config": {
            "n_ref_min": tree.config.n_ref_min,
            "k_max": tree.config.k_max,
            "h_range": list(tree.config.h_range),
            "q_range": list(tree.config.q_range),
        },
        "marginals": (
            [{"kind": m.kind, "a": m.a, "b": m.b} for m in tree.rv.marginals]
            if tree.rv is not None
            else None
        ),
        "nodes": nodes,
    }
    return doc


def save_surrogate(tree: SseTree, path, method: str = "", response: str = "") -> None:
    doc = surrogate_document(tree, method=method, response=response)
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def tree_from_document(doc: dict) -> tuple[SseTree, dict]:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} document")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"surrogate document version {version} is not supported "
            f"(this build reads version {FORMAT_VERSION}); re-fit or upgrade"
        )
    cfg = doc["config"]
    config = SseConfig(
        n_ref_min=cfg["n_ref_min"],
        k_max=cfg["k_max"],
        h_range=tuple(cfg["h_range"]),
        q_range=tuple(cfg["q_range"]),
    )
    rv = None
    if doc.get("marginals"):
        rv = RandomVector(
            tuple(MarginalDistribution(m["kind"], m["a"], m["b"]) for m in doc["marginals"])
        )
    nodes: list[SseNode] = []
    for nd in doc["nodes"]:
        domain = Subdomain(np.array(nd["bounds"], dtype=float))
        node = SseNode(
            level=nd["level"],
            index=nd["index"],
            domain=domain,
            expansion=_expansion_from_dict(nd["expansion"], domain.bounds),
            score=nd["score"],
            split_dim=nd["split_dim"],
            split_reason=nd.get("split_reason", ""),
        )
        nodes.append(node)
    for nd, node in zip(doc["nodes"], nodes):
        if nd["parent"] is not None:
            node.parent = nodes[nd["parent"]]
        if nd["children"] is not None:
            node.children = (nodes[nd["children"][0]], nodes[nd["children"][1]])
    tree = SseTree(root=nodes[0], config=config, rv=rv)
    meta = {"method": doc.get("method", ""), "response": doc.get("response", "")}
    return tree, meta


def load_surrogate(path) -> tuple[SseTree, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return tree_from_document(doc)

"""End-to-end experiment stages: design generation, batch OPF evaluation,
surrogate fitting, validation, and reporting.

Every stage is deterministic for a fixed configuration: quasi-Monte Carlo
designs, fixed tie-breaks in the fits, and no random state anywhere.  The
OPF batch is the dominant cost and can run as a parallel map over samples.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report
from .analytics import summarize, validation_error
from .config import ExperimentConfig
from .grid.acopf import OpfSolution, solve_ac_opf, warm_start_from
from .grid.case import PowerSystemCase, load_case
from .grid.renewables import ResModel, apply_uncertainty
from .serialize import save_surrogate
from .sse import SseConfig, SseTree, fit_asse
from .uncertainty import RandomVector, sample_qmc, to_physical

__all__ = [
    "StageError",
    "StageTimer",
    "run_experiment",
    "sweep_experiment",
    "extract_response",
    "solve_batch",
]


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class StageTimer:
    """Accumulates wall time per named stage."""

    def __init__(self):
        self.seconds: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def stage(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self_inner):
                self_inner.start = time.perf_counter()
                return None

            def __exit__(self_inner, exc_type, exc, tb):
                dt = time.perf_counter() - self_inner.start
                timer.seconds[name] = timer.seconds.get(name, 0.0) + dt
                if exc is not None and not isinstance(exc, StageError):
                    raise StageError(name, exc) from exc
                return False

        return _Ctx()

    @property
    def total(self) -> float:
        return time.perf_counter() - self._t0


def extract_response(case: PowerSystemCase, sol: OpfSolution, name: str) -> float:
    """Pull one named response (Pg<i>, Qg<i>, Vg<i>, or cost) from a solution."""
    if name == "cost":
        return float(sol.objective)
    try:
        kind, num = name[:2], int(name[2:])
    except ValueError:
        raise ValueError(f"unknown response {name!r}") from None
    if not 1 <= num <= case.n_gen:
        raise ValueError(f"response {name!r} indexes a missing generator")
    if kind == "Pg":
        return float(sol.pg[num - 1])
    if kind == "Qg":
        return float(sol.qg[num - 1])
    if kind == "Vg":
        pos = case.bus_index()[case.generators[num - 1].bus]
        return float(sol.vm[pos])
    raise ValueError(f"unknown response {name!r}")


def _solve_chunk(args):
    case, res, load_buses, x0, start, zetas = args
    stats: dict = {}
    sols = []
    for zeta in zetas:
        modified = apply_uncertainty(case, res, zeta, load_buses, stats=stats)
        sols.append(solve_ac_opf(modified, x0=x0))
    return start, sols, stats


def solve_batch(
    case: PowerSystemCase,
    res: ResModel,
    load_buses,
    zetas: np.ndarray,
    x0: np.ndarray,
    workers: int = 1,
    stats: dict | None = None,
) -> list[OpfSolution]:
    """Deterministic parallel map of per-sample OPF solves."""
    n = zetas.shape[0]
    if n == 0:
        return []
    load_buses = tuple(load_buses)
    if workers <= 1:
        start, sols, st = _solve_chunk((case, res, load_buses, x0, 0, zetas))
        if stats is not None:
            for k, v in st.items():
                stats[k] = stats.get(k, 0) + v
        return sols
    chunk = max(8, -(-n // (workers * 8)))
    tasks = [
        (case, res, load_buses, x0, lo, zetas[lo : lo + chunk])
        for lo in range(0, n, chunk)
    ]
    out: list[OpfSolution | None] = [None] * n
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for start, sols, st in pool.map(_solve_chunk, tasks):
            out[start : start + len(sols)] = sols
            if stats is not None:
                for k, v in st.items():
                    stats[k] = stats.get(k, 0) + v
    return out  # type: ignore[return-value]


def _sse_config(cfg: ExperimentConfig, global_only: bool = False) -> SseConfig:
    return SseConfig(
        n_ref_min=cfg.n_ref_min,
        k_max=0 if global_only else cfg.k_max,
        h_range=cfg.h_range,
        q_range=cfg.q_range,
    )


@dataclass
class _RunData:
    case: PowerSystemCase
    rv: RandomVector
    res: ResModel
    responses: tuple[str, ...]


def _validate_response_names(case: PowerSystemCase, names):
    for r in names:
        if r == "cost":
            continue
        kind, num = r[:2], r[2:]
        if kind not in ("Pg", "Qg", "Vg") or not num.isdigit():
            raise ValueError(f"unknown response {r!r}")
        if not 1 <= int(num) <= case.n_gen:
            raise ValueError(f"response {r!r} indexes a missing generator")


def _prepare(cfg: ExperimentConfig) -> _RunData:
    case = load_case(cfg.case_path)
    cfg.validate_against_case(case)
    rv = cfg.random_vector(case)
    res = cfg.res_model()
    responses = cfg.responses or cfg.default_responses(case)
    _validate_response_names(case, responses)
    _validate_response_names(case, cfg.sweep_responses)
    return _RunData(case=case, rv=rv, res=res, responses=responses)


def run_experiment(
    cfg: ExperimentConfig,
    out_dir=None,
    workers: int | None = None,
    methods=None,
    figures: bool | None = None,
) -> dict:
    """Full pipeline: design, OPF batch, surrogate fits, validation, reports.

    Returns the manifest dictionary (also written to manifest.json).
    """
    out = Path(out_dir) if out_dir is not None else cfg.output_dir
    workers = cfg.workers if workers is None else workers
    methods = tuple(methods) if methods is not None else cfg.methods
    render_figures = cfg.figures if figures is None else figures
    out.mkdir(parents=True, exist_ok=True)
    failed_marker = out / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()

    timer = StageTimer()
    counts: dict = {}
    try:
        with timer.stage("parse_case"):
            data = _prepare(cfg)
        case, rv, res = data.case, data.rv, data.res
        responses = data.responses

        with timer.stage("design"):
            u_ed = sample_qmc(cfg.n_ed, rv.dim, cfg.qmc_skip)
            x_ed = to_physical(u_ed, rv)

        with timer.stage("opf_ed"):
            nominal = solve_ac_opf(case, x0=warm_start_from(case))
            x0 = warm_start_from(case, nominal if nominal.converged else None)
            sols_ed = solve_batch(
                case, res, cfg.load_buses, x_ed.points, x0, workers, stats=counts
            )
        ed_ok = np.array([s.converged for s in sols_ed])
        counts["opf_ed_failed"] = int((~ed_ok).sum())

        with timer.stage("write_design"):
            report.write_design_csv(out / "design.csv", case, x_ed.points, sols_ed)

        fit_methods = [m for m in ("ASSE", "SPCE") if m in methods]
        trees: dict[str, dict[str, SseTree]] = {m: {} for m in fit_methods}
        with timer.stage("fit"):
            z_ed = {
                r: np.array([extract_response(case, s, r) for s in sols_ed])
                for r in responses
            }
            (out / "surrogates").mkdir(exist_ok=True)
            train_pts = u_ed.points[ed_ok]
            for method in fit_methods:
                sse_cfg = _sse_config(cfg, global_only=(method == "SPCE"))
                for r in responses:
                    tree = fit_asse(train_pts, z_ed[r][ed_ok], sse_cfg, rv=rv)
                    trees[method][r] = tree
                    save_surrogate(
                        tree,
                        out / "surrogates" / f"{method.lower()}_{r}.json",
                        method=method,
                        response=r,
                    )

        with timer.stage("design_val"):
            u_val = sample_qmc(cfg.n_val, rv.dim, cfg.qmc_skip + cfg.n_ed)
            x_val = to_physical(u_val, rv)

        sols_val: list[OpfSolution] | None = None
        truth: dict[str, np.ndarray] = {}
        val_ok = np.ones(cfg.n_val, dtype=bool)
        if "MC" in methods:
            with timer.stage("opf_val"):
                sols_val = solve_batch(
                    case, res, cfg.load_buses, x_val.points, x0, workers, stats=counts
                )
                val_ok = np.array([s.converged for s in sols_val])
                counts["opf_val_failed"] = int((~val_ok).sum())
                truth = {
                    r: np.array([extract_response(case, s, r) for s in sols_val])
                    for r in responses
                }

        preds: dict[str, dict[str, np.ndarray]] = {m: {} for m in fit_methods}
        e_vals: dict[str, dict[str, float]] = {m: {} for m in fit_methods}
        with timer.stage("predict"):
            eval_stats: dict = {}
            for method in fit_methods:
                for r in responses:
                    preds[method][r] = trees[method][r].evaluate(
                        u_val.points, stats=eval_stats
                    )
                    if "MC" in methods and val_ok.sum() >= 2:
                        e_vals[method][r] = validation_error(
                            truth[r][val_ok], preds[method][r][val_ok]
                        )
            counts.update(eval_stats)

        with timer.stage("report"):
            report.write_validation_csv(
                out / "validation.csv",
                x_val.points,
                responses,
                truth=truth if "MC" in methods else None,
                val_status=(
                    [s.status.value for s in sols_val] if sols_val is not None else None
                ),
                predictions=preds,
            )
            reports = {}
            for r in responses:
                per_method = []
                if "MC" in methods:
                    rep = summarize(truth[r][val_ok], method="MC", response=r)
                    rep.n_ed, rep.n_val = cfg.n_ed, cfg.n_val
                    per_method.append(rep)
                for method in fit_methods:
                    rep = summarize(preds[method][r], method=method, response=r)
                    rep.n_ed, rep.n_val = cfg.n_ed, cfg.n_val
                    rep.e_val = e_vals[method].get(r)
                    per_method.append(rep)
                reports[r] = per_method
            report.write_summary_csv(out / "summary.csv", reports, has_baseline="MC" in methods)
            if "MC" in methods:
                report.write_comparison_csv(out / "comparison.csv", reports)
            report.write_distribution_csvs(out, reports)
            if render_figures:
                from . import figures as figmod

                figdir = out / "figures"
                figdir.mkdir(exist_ok=True)
                for r in responses:
                    figmod.cdf_figure(figdir / f"cdf_{r}.png", r, reports[r])
                    figmod.pdf_figure(figdir / f"pdf_{r}.png", r, reports[r])

        manifest = {
            "command": "run",
            "package_version": _version(),
            "case": str(cfg.case_path),
            "methods": list(methods),
            "responses": list(responses),
            "n_ed": cfg.n_ed,
            "n_val": cfg.n_val,
            "qmc_skip": cfg.qmc_skip,
            "workers": workers,
            "deterministic": cfg.deterministic,
            "counts": counts,
            "stage_seconds": timer.seconds,
            "total_seconds": timer.total,
            "e_val": e_vals,
        }
        report.write_manifest(out / "manifest.json", manifest)
        return manifest
    except StageError as err:
        failed_marker.write_text(f"{err.stage}: {err.cause}\n", encoding="utf-8")
        raise


def sweep_experiment(
    cfg: ExperimentConfig,
    n_ed_list=None,
    out_dir=None,
    workers: int | None = None,
    figures: bool | None = None,
) -> list[dict]:
    """Validation error per method per training size, on one shared design.

    Training designs are nested prefixes of a single quasi-Monte Carlo
    stream; the validation set (and its reference OPF solves) is generated
    once and shared by every sweep point.
    """
    out = Path(out_dir) if out_dir is not None else cfg.output_dir
    workers = cfg.workers if workers is None else workers
    render_figures = cfg.figures if figures is None else figures
    n_list = sorted(int(n) for n in (n_ed_list if n_ed_list is not None else cfg.sweep_n_ed))
    if not n_list:
        raise ValueError("sweep requires at least one training size")
    out.mkdir(parents=True, exist_ok=True)
    failed_marker = out / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()

    timer = StageTimer()
    counts: dict = {}
    try:
        with timer.stage("parse_case"):
            data = _prepare(cfg)
        case, rv, res = data.case, data.rv, data.res
        responses = cfg.sweep_responses or data.responses

        n_max = max(n_list)
        with timer.stage("design"):
            u_tr = sample_qmc(n_max, rv.dim, cfg.qmc_skip)
            x_tr = to_physical(u_tr, rv)
            u_val = sample_qmc(cfg.n_val, rv.dim, cfg.qmc_skip + n_max)
            x_val = to_physical(u_val, rv)

        with timer.stage("opf_ed"):
            nominal = solve_ac_opf(case, x0=warm_start_from(case))
            x0 = warm_start_from(case, nominal if nominal.converged else None)
            sols_tr = solve_batch(
                case, res, cfg.load_buses, x_tr.points, x0, workers, stats=counts
            )
        with timer.stage("opf_val"):
            sols_val = solve_batch(
                case, res, cfg.load_buses, x_val.points, x0, workers, stats=counts
            )

        fit_methods = [m for m in ("ASSE", "SPCE") if m in cfg.methods] or ["ASSE", "SPCE"]
        rows: list[dict] = []
        with timer.stage("fit"):
            tr_ok = np.array([s.converged for s in sols_tr])
            val_ok = np.array([s.converged for s in sols_val])
            counts["opf_ed_failed"] = int((~tr_ok).sum())
            counts["opf_val_failed"] = int((~val_ok).sum())
            z_tr = {
                r: np.array([extract_response(case, s, r) for s in sols_tr])
                for r in responses
            }
            truth = {
                r: np.array([extract_response(case, s, r) for s in sols_val])
                for r in responses
            }
            for n in n_list:
                ok = tr_ok[:n]
                pts = u_tr.points[:n][ok]
                for r in responses:
                    for method in fit_methods:
                        sse_cfg = _sse_config(cfg, global_only=(method == "SPCE"))
                        tree = fit_asse(pts, z_tr[r][:n][ok], sse_cfg, rv=rv)
                        pred = tree.evaluate(u_val.points)
                        e_val = validation_error(truth[r][val_ok], pred[val_ok])
                        rows.append(
                            {
                                "n_ed": n,
                                "response": r,
                                "method": method,
                                "e_val": e_val,
                                "n_terminal": len(tree.terminal_nodes()),
                            }
                        )

        with timer.stage("report"):
            report.write_sweep_csv(out / "sweep.csv", rows)
            if render_figures:
                from . import figures as figmod

                figdir = out / "figures"
                figdir.mkdir(exist_ok=True)
                for r in responses:
                    figmod.sweep_figure(figdir / f"sweep_{r}.png", r, rows)

        manifest = {
            "command": "sweep",
            "package_version": _version(),
            "case": str(cfg.case_path),
            "methods": fit_methods,
            "responses": list(responses),
            "n_ed_list": n_list,
            "n_val": cfg.n_val,
            "qmc_skip": cfg.qmc_skip,
            "workers": workers,
            "deterministic": cfg.deterministic,
            "counts": counts,
            "stage_seconds": timer.seconds,
            "total_seconds": timer.total,
        }
        report.write_manifest(out / "manifest.json", manifest)
        return rows
    except StageError as err:
        failed_marker.write_text(f"{err.stage}: {err.cause}\n", encoding="utf-8")
        raise


def _version() -> str:
    from . import __version__

    return __version__

"""CSV artifact writers and the run manifest.

All numeric cells are written with shortest round-trip float formatting so
repeated runs of a deterministic pipeline produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analytics import SurrogateReport
from .grid.case import PowerSystemCase

__all__ = [
    "fmt",
    "write_csv",
    "read_points_csv",
    "write_design_csv",
    "write_validation_csv",
    "write_summary_csv",
    "write_comparison_csv",
    "write_distribution_csvs",
    "write_sweep_csv",
    "write_predictions_csv",
    "write_manifest",
]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_points_csv(path) -> tuple[list[str], np.ndarray, str]:
    """Read an input-points table; returns (ids, points, space).

    Coordinate columns are zeta_1..zeta_M (physical space) or u_1..u_M
    (unit space); an optional leading sample_id column is preserved.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("points file is empty (missing header)") from None
        cols_zeta = [i for i, name in enumerate(header) if name.startswith("zeta_")]
        cols_u = [i for i, name in enumerate(header) if name.startswith("u_")]
        if cols_zeta and cols_u:
            raise ValueError("points file mixes zeta_* and u_* columns")
        cols = cols_zeta or cols_u
        space = "physical" if cols_zeta else "unit"
        if not cols:
            raise ValueError("points file needs zeta_* or u_* coordinate columns")
        id_col = header.index("sample_id") if "sample_id" in header else None
        ids, pts = [], []
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                pts.append([float(row[i]) for i in cols])
            except (ValueError, IndexError):
                raise ValueError(f"line {ln}: malformed points row") from None
            ids.append(row[id_col] if id_col is not None else str(len(ids)))
    arr = np.array(pts, dtype=float).reshape(len(pts), len(cols))
    return ids, arr, space


def write_design_csv(path, case: PowerSystemCase, zetas: np.ndarray, solutions) -> None:
    m = zetas.shape[1]
    header = (
        ["sample_id"]
        + [f"zeta_{j + 1}" for j in range(m)]
        + ["status"]
        + [f"Pg_{i + 1}" for i in range(case.n_gen)]
        + [f"Qg_{i + 1}" for i in range(case.n_gen)]
        + [f"V_{b.id}" for b in case.buses]
        + [f"theta_{b.id}" for b in case.buses]
        + ["objective"]
    )
    rows = []
    for k, sol in enumerate(solutions):
        rows.append(
            [k]
            + list(zetas[k])
            + [sol.status.value]
            + list(sol.pg)
            + list(sol.qg)
            + list(sol.vm)
            + list(sol.va)
            + [sol.objective]
        )
    write_csv(path, header, rows)


def write_validation_csv(path, zetas, responses, truth, val_status, predictions) -> None:
    m = zetas.shape[1]
    header = ["sample_id"] + [f"zeta_{j + 1}" for j in range(m)]
    if truth is not None:
        header += ["status"] + [f"truth_{r}" for r in responses]
    methods = sorted(predictions)
    for method in methods:
        header += [f"{method.lower()}_{r}" for r in responses]
    rows = []
    for k in range(zetas.shape[0]):
        row = [k] + list(zetas[k])
        if truth is not None:
            row += [val_status[k]] + [truth[r][k] for r in responses]
        for method in methods:
            row += [predictions[method][r][k] for r in responses]
        rows.append(row)
    write_csv(path, header, rows)


def _summary_header(p_values, has_baseline: bool):
    header = ["response", "method", "n_samples", "mean", "variance"]
    header += [f"q{p:g}" for p in p_values]
    header += ["e_val"]
    if not has_baseline:
        header += ["e_val_note"]
    return header


def write_summary_csv(path, reports: dict[str, list[SurrogateReport]], has_baseline: bool) -> None:
    first = next(iter(reports.values()))[0]
    p_values = sorted(first.quantiles)
    rows = []
    for response in reports:
        for rep in reports[response]:
            row = [rep.response, rep.method, rep.n_samples, rep.mean, rep.variance]
            row += [rep.quantiles[p] for p in p_values]
            row += [rep.e_val]
            if not has_baseline:
                row += ["baseline absent"]
            rows.append(row)
    write_csv(path, _summary_header(p_values, has_baseline), rows)


def write_comparison_csv(path, reports: dict[str, list[SurrogateReport]]) -> None:
    from .analytics import compare_methods

    rows_out = []
    p_values = None
    for response in reports:
        reps = reports[response]
        baseline = next(r for r in reps if r.method == "MC")
        table = compare_methods(reps, baseline)
        for row in table:
            if p_values is None:
                p_values = [k for k in row if k.startswith("q")]
            rows_out.append(row)
    header = ["response", "method", "mean", "variance", "err_mean_pct", "e_val"] + (
        p_values or []
    )
    write_csv(path, header, [[r.get(k) for k in header] for r in rows_out])


def write_distribution_csvs(out_dir, reports: dict[str, list[SurrogateReport]]) -> None:
    out_dir = Path(out_dir)
    for response, reps in reports.items():
        cdf_rows, pdf_rows = [], []
        for rep in reps:
            cdf_rows += [[rep.method, x, y] for x, y in zip(rep.cdf_x, rep.cdf_y)]
            pdf_rows += [[rep.method, x, y] for x, y in zip(rep.pdf_x, rep.pdf_y)]
        write_csv(out_dir / f"cdf_{response}.csv", ["method", "value", "cdf"], cdf_rows)
        write_csv(out_dir / f"pdf_{response}.csv", ["method", "value", "density"], pdf_rows)


def write_sweep_csv(path, rows) -> None:
    header = ["n_ed", "response", "method", "e_val", "n_terminal"]
    write_csv(path, header, [[r[k] for k in header] for r in rows])


def write_predictions_csv(path, ids, predictions) -> None:
    write_csv(path, ["sample_id", "prediction"], list(zip(ids, predictions)))


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")

"""Writers for per-step CSV, legacy VTK snapshots, and run summaries.

Floats are written with 17 significant digits so files round-trip exactly;
plots are produced externally from these files, the package itself draws
nothing.
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING

import numpy as np

from .mesh import Triangulation

if TYPE_CHECKING:
    from .scheme import RunReport

__all__ = [
    "CSV_HEADER",
    "format_float",
    "write_csv",
    "write_vtk",
    "write_compare_csv",
    "write_run_outputs",
    "append_summary",
]

CSV_HEADER = "step,time,minT,maxT,minN,maxN,minPhi,maxPhi,cg_iters,cg_residual,energy_acc"


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_csv(report: RunReport, path: str) -> None:
    """One row per recorded step (step 0 holds the initial diagnostics)."""
    with open(path, "w", encoding="ascii") as f:
        f.write(CSV_HEADER + "\n")
        for d in report.steps:
            row = [
                str(d.step),
                format_float(d.time),
                format_float(d.min_t),
                format_float(d.max_t),
                format_float(d.min_n),
                format_float(d.max_n),
                format_float(d.min_phi),
                format_float(d.max_phi),
                str(d.cg_iters),
                format_float(d.cg_residual),
                format_float(d.energy_acc),
            ]
            f.write(",".join(row) + "\n")


def write_vtk(path: str, mesh: Triangulation, fields: dict[str, np.ndarray], title: str = "tumorfem snapshot") -> None:
    """Legacy ASCII unstructured-grid VTK file with nodal scalar fields."""
    with open(path, "w", encoding="ascii") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(title + "\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.nodes:
            f.write(f"{format_float(x)} {format_float(y)} 0\n")
        f.write(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {mesh.n_triangles}\n")
        for _ in range(mesh.n_triangles):
            f.write("5\n")
        f.write(f"POINT_DATA {mesh.n_vertices}\n")
        for name, values in fields.items():
            f.write(f"SCALARS {name} double 1\n")
            f.write("LOOKUP_TABLE default\n")
            for v in values:
                f.write(format_float(float(v)) + "\n")


def write_compare_csv(report_a: RunReport, report_b: RunReport, path: str) -> None:
    """Joined per-step CSV for side-by-side plotting of two runs on one grid."""
    if len(report_a.steps) != len(report_b.steps):
        raise ValueError("runs have different step counts")
    cols = ["minT", "maxT", "minN", "maxN", "minPhi", "maxPhi", "energy_acc"]
    header = "step,time," + ",".join(f"{c}_a" for c in cols) + "," + ",".join(
        f"{c}_b" for c in cols
    )
    attr = {
        "minT": "min_t", "maxT": "max_t", "minN": "min_n", "maxN": "max_n",
        "minPhi": "min_phi", "maxPhi": "max_phi", "energy_acc": "energy_acc",
    }
    with open(path, "w", encoding="ascii") as f:
        f.write(header + "\n")
        for da, db in zip(report_a.steps, report_b.steps):
            if da.step != db.step or da.time != db.time:
                raise ValueError(f"time grids differ at step {da.step}")
            row = [str(da.step), format_float(da.time)]
            row += [format_float(getattr(da, attr[c])) for c in cols]
            row += [format_float(getattr(db, attr[c])) for c in cols]
            f.write(",".join(row) + "\n")


def append_summary(path: str, lines: list[str]) -> None:
    with open(path, "a", encoding="ascii") as f:
        for line in lines:
            f.write(line + "\n")


def snapshot_path(directory: str, prefix: str, step: int) -> str:
    return os.path.join(directory, f"{prefix}_{step:06d}.vtk")


def write_snapshot(directory: str, prefix: str, mesh: Triangulation, state) -> None:
    write_vtk(
        snapshot_path(directory, prefix, state.step),
        mesh,
        {"T": state.T, "N": state.N, "Phi": state.Phi},
    )


def write_run_outputs(report: RunReport) -> None:
    """Write the per-step CSV and the summary header for a finished run."""
    out = report.config.output
    os.makedirs(out.directory, exist_ok=True)
    write_csv(report, os.path.join(out.directory, out.csv_name))
    summary = os.path.join(out.directory, out.summary_name)
    with open(summary, "w", encoding="ascii") as f:
        f.write(f"label={report.config.label}\n")
        f.write(f"variant={report.config.variant.value}\n")
        f.write(f"steps={report.config.n_steps}\n")
        f.write(f"energy={format_float(report.energy)}\n")
        f.write(f"non_obtuse_mesh={report.non_obtuse}\n")

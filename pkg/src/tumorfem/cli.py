"""Command-line interface.

Subcommands:

* ``run <config>`` or ``run --preset <name>`` executes one run (or a
  preset's bundle of runs) and writes CSV/VTK/summary files.
* ``check-mesh <file>`` audits a mesh file's angles; exit 0 iff non-obtuse.
* ``compare <configA> <configB>`` runs two configs on the same grid and
  writes a joined per-step CSV for side-by-side plotting.

Exit codes: 0 success, 1 numerical failure, 2 configuration or input
error. Runs inside a preset are independent; ``--threads N`` executes them
in N worker processes (default 1, fully deterministic either way).
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys

from . import config as config_mod
from . import output as output_mod
from .linalg import CgError
from .mesh import audit_angles, read_mesh
from .model import ModelParams
from .scheme import (
    ConstantProfile,
    GaussianProfile,
    InitialConditions,
    MeshSpec,
    OutputOptions,
    RunConfig,
    SchemeError,
    SchemeVariant,
    SolverOptions,
    run,
)

__all__ = ["main", "build_preset", "PRESET_NAMES"]

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

PRESET_NAMES = ("bounds-comparison", "energy-sweep", "lumping-comparison")

# Initial data shared by the experiment presets. The tumor seed is a narrow
# Gaussian at the domain center; necrosis starts near capacity with a small
# healthy pocket at the seed (the close-to-capacity regime of the decay
# envelopes); vasculature starts uniform at half capacity. Widths and
# centers are package choices, documented in the README.
_PRESET_INITIAL = InitialConditions(
    T=GaussianProfile(base=0.0, amplitude=1.0, center=(0.5, 0.5), width=0.015),
    N=GaussianProfile(base=1.0, amplitude=-0.05, center=(0.5, 0.5), width=0.05),
    Phi=ConstantProfile(value=0.5),
)

_PRESET_SOLVER = SolverOptions(tol=1e-12, maxit=0, jacobi=False)

TABLE_BOUNDS = ModelParams(
    kappa1=8e-5, kappa0=8e-5, rho=1.0, alpha=0.8, beta1=0.8, beta2=0.8,
    gamma=0.008, delta=0.8, K=1.0,
)
TABLE_ENERGY = ModelParams(
    kappa1=2.9e-7, kappa0=2.9e-7, rho=1.0, alpha=0.0029, beta1=0.0029,
    beta2=0.0, gamma=0.0029, delta=0.00029, K=1.0,
)
TABLE_LUMPING = ModelParams(
    kappa1=8e-4, kappa0=8e-4, rho=1.0, alpha=0.0, beta1=0.0, beta2=0.0,
    gamma=0.0, delta=0.0, K=1.0,
)

ENERGY_SWEEP_STEPS = (10, 60, 110, 160, 210, 260, 310, 360, 410, 460, 510)


def _preset_config(params, mesh, dt, tf, variant, label) -> RunConfig:
    return RunConfig(
        mesh=mesh,
        params=params,
        dt=dt,
        tf=tf,
        variant=variant,
        initial=_PRESET_INITIAL,
        solver=_PRESET_SOLVER,
        output=OutputOptions(),
        label=label,
    )


def build_preset(name: str) -> list[RunConfig]:
    """The bundled runs of one named experiment preset."""
    if name == "bounds-comparison":
        mesh = MeshSpec(nx=40, ny=40, lx=1.0, ly=1.0)
        return [
            _preset_config(TABLE_BOUNDS, mesh, 1e-2, 1.0, SchemeVariant.IMEX_LUMPED,
                           "bounds-imex-lumped"),
            _preset_config(TABLE_BOUNDS, mesh, 1e-2, 1.0, SchemeVariant.EXPLICIT_LUMPED,
                           "bounds-explicit-lumped"),
        ]
    if name == "energy-sweep":
        mesh = MeshSpec(nx=40, ny=40, lx=1.0, ly=1.0)
        configs = []
        for kf in ENERGY_SWEEP_STEPS:
            for variant in (SchemeVariant.IMEX_LUMPED, SchemeVariant.EXPLICIT_LUMPED):
                configs.append(
                    _preset_config(
                        TABLE_ENERGY, mesh, 0.01 / kf, 0.01, variant,
                        f"energy-{variant.value}-Kf{kf:03d}",
                    )
                )
        return configs
    if name == "lumping-comparison":
        mesh = MeshSpec(nx=10, ny=10, lx=1.0, ly=1.0)
        return [
            _preset_config(TABLE_LUMPING, mesh, 1e-2, 1.0, SchemeVariant.IMEX_LUMPED,
                           "lumping-imex-lumped"),
            _preset_config(TABLE_LUMPING, mesh, 1e-2, 1.0, SchemeVariant.IMEX_CONSISTENT,
                           "lumping-imex-consistent"),
        ]
    raise config_mod.ConfigError(
        f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
    )


def _with_output(cfg: RunConfig, directory: str, snapshot_every: int | None) -> RunConfig:
    from dataclasses import replace

    out = OutputOptions(
        directory=directory,
        csv_name=cfg.output.csv_name,
        summary_name=cfg.output.summary_name,
        snapshot_every=cfg.output.snapshot_every if snapshot_every is None else snapshot_every,
        vtk_prefix=cfg.output.vtk_prefix,
    )
    return replace(cfg, output=out)


def _run_and_summarize(cfg: RunConfig):
    report = run(cfg)
    if cfg.output.directory:
        from .diagnostics import run_summary_lines

        output_mod.append_summary(
            os.path.join(cfg.output.directory, cfg.output.summary_name),
            run_summary_lines(report),
        )
    return report


def _run_one_serialized(text: str) -> str:
    # Worker entry for --threads > 1; configs travel as their own file format.
    cfg = config_mod.parse_config(text)
    report = _run_and_summarize(cfg)
    return f"{cfg.label}: {cfg.n_steps} steps, energy={report.energy:.12g}"


def _cmd_run(args) -> int:
    if args.preset:
        configs = build_preset(args.preset)
    else:
        if not args.config:
            print("error: need a config path or --preset", file=sys.stderr)
            return EXIT_CONFIG
        configs = [config_mod.parse_config_file(args.config)]

    prepared = []
    for cfg in configs:
        if len(configs) > 1:
            directory = os.path.join(args.output_dir or ".", cfg.label)
        else:
            # an explicit --output-dir wins over the config's own directory
            directory = args.output_dir or cfg.output.directory or "."
        prepared.append(_with_output(cfg, directory, args.snapshot_every))

    if args.threads > 1 and len(prepared) > 1:
        texts = [config_mod.serialize_config(c) for c in prepared]
        with multiprocessing.Pool(processes=args.threads) as pool:
            for line in pool.map(_run_one_serialized, texts):
                print(line)
    else:
        for cfg in prepared:
            report = _run_and_summarize(cfg)
            print(f"{cfg.label}: {cfg.n_steps} steps, energy={report.energy:.12g}")
    return EXIT_OK


def _cmd_check_mesh(args) -> int:
    mesh = read_mesh(args.mesh)
    rep = audit_angles(mesh)
    print(
        f"vertices={mesh.n_vertices} elements={mesh.n_triangles} h={mesh.h:.6g}\n"
        f"max(-cos angle)={rep.max_neg_cosine:.6g} worst_element={rep.worst_element}\n"
        f"strictly_acute={rep.strictly_acute} non_obtuse={rep.non_obtuse}"
    )
    if not rep.non_obtuse:
        print(
            f"element {rep.worst_element} has an obtuse angle", file=sys.stderr
        )
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg_a = config_mod.parse_config_file(args.config_a)
    cfg_b = config_mod.parse_config_file(args.config_b)
    if cfg_a.mesh != cfg_b.mesh:
        print("error: configs use different meshes", file=sys.stderr)
        return EXIT_CONFIG
    if cfg_a.dt != cfg_b.dt or cfg_a.tf != cfg_b.tf:
        print("error: configs use different time grids", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    report_a = _run_and_summarize(
        _with_output(cfg_a, os.path.join(out_dir, cfg_a.label + "-a"), args.snapshot_every)
    )
    report_b = _run_and_summarize(
        _with_output(cfg_b, os.path.join(out_dir, cfg_b.label + "-b"), args.snapshot_every)
    )
    joined = os.path.join(out_dir, "compare.csv")
    output_mod.write_compare_csv(report_a, report_b, joined)
    print(f"wrote {joined}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tumorfem", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default="", help="directory for CSV/VTK/summary files")
    common.add_argument("--snapshot-every", type=int, default=None, metavar="N",
                        help="write a VTK snapshot every N steps (0 disables)")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker processes for preset bundles (default 1)")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; the model is deterministic and ignores it")

    p_run = sub.add_parser("run", parents=[common], help="execute a run or preset")
    p_run.add_argument("config", nargs="?", default="", help="config file path")
    p_run.add_argument("--preset", choices=PRESET_NAMES, default="",
                       help="run a bundled experiment instead of a config file")
    p_run.set_defaults(func=_cmd_run)

    p_mesh = sub.add_parser("check-mesh", help="audit a mesh file's angles")
    p_mesh.add_argument("mesh", help="mesh file path")
    p_mesh.set_defaults(func=_cmd_check_mesh)

    p_cmp = sub.add_parser("compare", parents=[common], help="run two configs and join their CSVs")
    p_cmp.add_argument("config_a")
    p_cmp.add_argument("config_b")
    p_cmp.set_defaults(func=_cmd_compare)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (config_mod.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemeError, CgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

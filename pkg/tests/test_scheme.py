import numpy as np
import pytest

from tumorfem.fem import build_context
from tumorfem.linalg import spmv
from tumorfem.mesh import build_structured_mesh, triangulation_from_arrays
from tumorfem.model import ModelParams, State
from tumorfem.scheme import (
    ConstantProfile,
    GaussianProfile,
    InitialConditions,
    MeshSpec,
    RunConfig,
    SchemeVariant,
    SolverOptions,
    element_diffusivity,
    initial_state,
    run,
    step_explicit_lumped,
    step_imex_consistent,
    step_imex_lumped,
)

PARAMS = ModelParams(
    kappa1=8e-5, kappa0=8e-5, rho=1.0, alpha=0.8, beta1=0.8, beta2=0.8,
    gamma=0.008, delta=0.8, K=1.0,
)
NO_REACTIONS = ModelParams(
    kappa1=8e-4, kappa0=8e-4, rho=0.0, alpha=0.0, beta1=0.0, beta2=0.0,
    gamma=0.0, delta=0.0, K=1.0,
)
STEPPERS = (step_imex_lumped, step_explicit_lumped, step_imex_consistent)


def small_config(variant=SchemeVariant.IMEX_LUMPED, nx=6, dt=1e-2, tf=0.05, **kw):
    defaults = dict(
        mesh=MeshSpec(nx=nx, ny=nx, lx=1.0, ly=1.0),
        params=PARAMS,
        dt=dt,
        tf=tf,
        variant=variant,
        initial=InitialConditions(
            T=GaussianProfile(base=0.0, amplitude=1.0, center=(0.5, 0.5), width=0.25),
            N=GaussianProfile(base=0.3, amplitude=0.5, center=(0.5, 0.5), width=0.25),
            Phi=ConstantProfile(value=0.5),
        ),
        solver=SolverOptions(tol=1e-12),
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def zero_state(n):
    return State(T=np.zeros(n), N=np.zeros(n), Phi=np.zeros(n), step=0, time=0.0)


def test_config_validation():
    with pytest.raises(ValueError, match="dt"):
        small_config(dt=0.0, tf=0.0)
    with pytest.raises(ValueError, match="integer"):
        small_config(dt=0.3, tf=1.0)
    cfg = small_config(dt=0.01, tf=0.05)
    assert cfg.n_steps == 5


@pytest.mark.parametrize("stepper", STEPPERS)
def test_zero_state_is_a_fixed_point(stepper):
    mesh = build_structured_mesh(5, 5, 1.0, 1.0)
    ctx = build_context(mesh)
    state = zero_state(mesh.n_vertices)
    for _ in range(3):
        state, diag = stepper(state, ctx, PARAMS, 1e-2)
        assert np.all(state.T == 0.0)
        assert np.all(state.N == 0.0)
        assert np.all(state.Phi == 0.0)
    assert diag.step == 3


def test_uniform_capacity_tumor_follows_closed_recursion():
    # With P = 0 (no vasculature) a spatially uniform tumor field decays by
    # the factor 1/(1 + alpha dt) per step and diffusion contributes nothing.
    # beta1 = 0 keeps the growing necrosis out of the tumor decay, which is
    # what makes the one-parameter recursion exact at every step.
    params = ModelParams(
        kappa1=8e-5, kappa0=8e-5, rho=1.0, alpha=0.8, beta1=0.0, beta2=0.8,
        gamma=0.008, delta=0.8, K=1.0,
    )
    mesh = build_structured_mesh(8, 8, 1.0, 1.0)
    ctx = build_context(mesh)
    n = mesh.n_vertices
    state = State(T=np.full(n, 1.0), N=np.zeros(n), Phi=np.zeros(n), step=0, time=0.0)
    dt = 1e-2
    solver = SolverOptions(tol=1e-14)
    expected = 1.0
    for _ in range(100):
        state, _ = step_imex_lumped(state, ctx, params, dt, solver=solver)
        expected = expected / (1.0 + params.alpha * dt)
        assert np.abs(state.T - expected).max() <= 1e-10
    assert np.all(state.N > 0.0)


def test_explicit_equals_imex_without_reactions():
    mesh = build_structured_mesh(7, 7, 1.0, 1.0)
    ctx = build_context(mesh)
    rng = np.random.default_rng(5)
    T0 = rng.uniform(0.0, 1.0, mesh.n_vertices)
    s_imex = State(T=T0.copy(), N=np.zeros(mesh.n_vertices), Phi=np.full(mesh.n_vertices, 0.5), step=0, time=0.0)
    s_expl = State(T=T0.copy(), N=np.zeros(mesh.n_vertices), Phi=np.full(mesh.n_vertices, 0.5), step=0, time=0.0)
    for _ in range(5):
        s_imex, _ = step_imex_lumped(s_imex, ctx, NO_REACTIONS, 1e-2)
        s_expl, _ = step_explicit_lumped(s_expl, ctx, NO_REACTIONS, 1e-2)
    assert np.array_equal(s_imex.T, s_expl.T)
    assert np.array_equal(s_imex.N, s_expl.N)
    assert np.array_equal(s_imex.Phi, s_expl.Phi)


def test_consistent_equals_lumped_on_single_element_constant_fields():
    mesh = triangulation_from_arrays([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)])
    ctx = build_context(mesh)
    mk = lambda: State(
        T=np.full(3, 0.4), N=np.full(3, 0.2), Phi=np.full(3, 0.5), step=0, time=0.0
    )
    solver = SolverOptions(tol=1e-14)
    s_lumped, _ = step_imex_lumped(mk(), ctx, PARAMS, 1e-2, solver=solver)
    s_cons, _ = step_imex_consistent(mk(), ctx, PARAMS, 1e-2, solver=solver)
    assert np.abs(s_lumped.T - s_cons.T).max() <= 1e-12
    assert np.abs(s_lumped.N - s_cons.N).max() <= 1e-12
    assert np.abs(s_lumped.Phi - s_cons.Phi).max() <= 1e-12


def test_element_diffusivity_range():
    mesh = build_structured_mesh(6, 6, 1.0, 1.0)
    ctx = build_context(mesh)
    rng = np.random.default_rng(1)
    T = rng.uniform(0, 1, mesh.n_vertices)
    Phi = rng.uniform(0, 1, mesh.n_vertices)
    coeff = element_diffusivity(ctx, T, Phi, PARAMS)
    assert coeff.shape == (mesh.n_triangles,)
    assert coeff.min() >= PARAMS.kappa0
    assert coeff.max() <= PARAMS.kappa1 + PARAMS.kappa0


def test_step_system_residual_self_check():
    # Post-verify the solved tumor system through spmv, independent of the CG
    # internals.
    import scipy.sparse as sp

    from tumorfem.model import imex_coefficients_T

    mesh = build_structured_mesh(10, 10, 1.0, 1.0)
    ctx = build_context(mesh)
    cfg = small_config(nx=10)
    state = initial_state(cfg, mesh)
    new, diag = step_imex_lumped(state, ctx, PARAMS, cfg.dt, solver=cfg.solver)
    A = ctx.stiffness_template.assemble(element_diffusivity(ctx, state.T, state.Phi, PARAMS))
    src, dec = imex_coefficients_T(state.T, state.N, state.Phi, PARAMS)
    B = (sp.diags(ctx.lumped / cfg.dt) + A + sp.diags(ctx.lumped * dec)).tocsr()
    rhs = ctx.lumped * (state.T / cfg.dt + src)
    assert np.linalg.norm(rhs - spmv(B, new.T)) <= cfg.solver.tol * np.linalg.norm(rhs)
    assert diag.cg_iters <= 10 * mesh.n_vertices


def test_run_reports_initial_row_and_energy():
    cfg = small_config(tf=0.03)
    report = run(cfg)
    assert len(report.steps) == 4
    assert report.steps[0].step == 0
    assert report.steps[0].time == 0.0
    assert report.steps[0].cg_iters == 0
    assert report.energy > 0.0
    assert report.steps[-1].energy_acc == pytest.approx(report.energy)
    # energy is nondecreasing across steps
    acc = [d.energy_acc for d in report.steps[1:]]
    assert all(b >= a for a, b in zip(acc, acc[1:]))


def test_run_zero_steps_yields_only_initial_diagnostics():
    cfg = small_config(tf=0.0)
    report = run(cfg)
    assert len(report.steps) == 1
    assert report.steps[0].step == 0
    assert report.energy == 0.0


def test_run_is_deterministic():
    cfg = small_config(tf=0.05)
    r1 = run(cfg)
    r2 = run(cfg)
    for d1, d2 in zip(r1.steps, r2.steps):
        assert d1 == d2
    assert np.array_equal(r1.final_state.T, r2.final_state.T)


def test_debug_checks_pass_on_lumped_scheme():
    cfg = small_config(tf=0.02, debug_checks=True)
    run(cfg)  # must not raise


def test_empty_mesh_rejected(tmp_path):
    path = tmp_path / "novolume.txt"
    path.write_text("3 0\n0.0 0.0\n1.0 0.0\n0.0 1.0\n")
    cfg = small_config(mesh=MeshSpec(path=str(path)), tf=0.01)
    with pytest.raises(ValueError, match="no elements"):
        run(cfg)


def test_obtuse_mesh_rejected_for_lumped_variants(tmp_path):
    from tumorfem.mesh import write_mesh

    nodes = [(0.0, 0.0), (1.0, 0.0), (-1.0, 1.0), (1.2, 1.4)]
    tris = [(0, 1, 2), (1, 3, 2)]
    mesh = triangulation_from_arrays(nodes, tris)
    path = tmp_path / "obtuse.txt"
    write_mesh(mesh, path)
    cfg = small_config(mesh=MeshSpec(path=str(path)), tf=0.01)
    with pytest.raises(ValueError, match="non-obtuse audit.*element 0"):
        run(cfg)
    # the un-lumped variant does not require the audit
    cfg2 = small_config(
        mesh=MeshSpec(path=str(path)), tf=0.01, variant=SchemeVariant.IMEX_CONSISTENT
    )
    report = run(cfg2)
    assert not report.non_obtuse


def test_nondecreasing_necrosis_in_imex_run():
    cfg = small_config(tf=0.1)
    report = run(cfg)
    mins = [d.min_n for d in report.steps]
    assert all(b >= a for a, b in zip(mins, mins[1:]))


def test_snapshots_written(tmp_path):
    from tumorfem.scheme import OutputOptions

    cfg = small_config(
        tf=0.04,
        output=OutputOptions(directory=str(tmp_path), snapshot_every=2),
    )
    run(cfg)
    names = sorted(p.name for p in tmp_path.glob("*.vtk"))
    assert names == ["snapshot_000000.vtk", "snapshot_000002.vtk", "snapshot_000004.vtk"]
    assert (tmp_path / "per_step.csv").exists()
    assert (tmp_path / "summary.txt").exists()

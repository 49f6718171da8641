import math

import numpy as np
import pytest

from oracles import A, F_LOG, log_profile, mms_coefficient, mms_exact, mms_source, rates, squeeze_profile
from sealsim.mesh import REFINE, AnnulusMesh, hanging_constraints
from sealsim.reynolds import (
    FilmSnapshot,
    NonPositiveGap,
    OutOfFilm,
    PressureField,
    SolverDiverged,
    assemble,
    discretization,
    kelly_indicator,
    l2_error,
    locate,
    pressure_force,
    solve_pressure,
    source_term,
    velocity_profile,
)

FLAT = FilmSnapshot(1.0, 0.0)


def solve(mesh, snap=FLAT, bc=(1.0, 2.0), **kw):
    return solve_pressure(assemble(mesh, snap, bc), **kw)


def adapted(seed=0):
    mesh = AnnulusMesh(A, 8, 40)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        marks = rng.choice([REFINE, 0], size=mesh.n_active, p=[0.1, 0.9])
        mesh.refine_and_coarsen(list(marks))
    return mesh


def test_source_term_examples():
    assert source_term(0.5, 1.0, FilmSnapshot(1.0, 0.0)) == 0.0
    assert source_term(0.5, 1.0, FilmSnapshot(1.0, 0.0, dh_dt=-2.0)) == pytest.approx(2.0)
    assert source_term(1.0, math.pi / 2, FilmSnapshot(1.0, 0.0, beta=0.25)) == pytest.approx(1.5)


def test_snapshot_cartesian_forms_match_polar():
    s = FilmSnapshot(1.4, 0.2, dh_dt=0.3, beta=0.25, source_phase=0.7, re_star=1.3, sigma_t=2.0)
    r, th = 0.63, 2.1
    x, y = r * math.cos(th), r * math.sin(th)
    assert s.source_xy(x, y) == pytest.approx(source_term(r, th, s))
    assert s.gap_xy(x, y) == pytest.approx(1.4 - 0.2 - r * 0.25 * math.sin(th - 0.7))


def test_matrix_symmetric_and_equals_laplacian(coarse):
    mesh = adapted()
    s1 = assemble(mesh, FLAT)
    s2 = assemble(mesh, None, coefficient=lambda x, y: 1.0)
    diff = (s1.matrix - s2.matrix).tocoo()
    assert np.max(np.abs(diff.data), initial=0.0) == 0.0
    a = s1.matrix
    assert abs(a - a.T).max() < 1e-13
    tilted = assemble(mesh, FilmSnapshot(1.5, 0.0, beta=0.3)).matrix
    assert abs(tilted - tilted.T).max() < 1e-13
    # positive definite
    assert np.linalg.eigvalsh(a.toarray()).min() > 0


def test_constant_solution(coarse):
    f = solve(coarse, bc=(1.0, 1.0))
    assert np.allclose(f.values, 1.0, atol=1e-12)
    assert pressure_force(f, 1.0) == pytest.approx(0.0, abs=1e-12)
    f2 = solve(coarse, bc=(2.0, 2.0))
    assert pressure_force(f2, 1.0) == pytest.approx(coarse.total_area(), rel=1e-12)


def test_dirichlet_data_and_residual(coarse):
    f = solve(coarse)
    disc = f.disc
    assert np.all(f.values[disc.inner] == 1.0) and np.all(f.values[disc.outer] == 2.0)
    assert f.info["residual"] <= 1e-10


def test_log_profile_nodal_values_and_force():
    mesh = AnnulusMesh(A, 8, 40).refine_all(1)
    f = solve(mesh)
    exact = log_profile(*f.disc.node_xy.T)
    assert np.max(np.abs(f.values - exact)) < 5e-3
    assert pressure_force(f) == pytest.approx(F_LOG, rel=5e-3)
    assert F_LOG == pytest.approx(2.2046, abs=1e-4)


def test_squeeze_profile_converges():
    errs = []
    for k in range(3):
        mesh = AnnulusMesh(A, 8, 40).refine_all(k)
        f = solve(mesh, FilmSnapshot(1.0, 0.0, dh_dt=-0.8))
        errs.append(l2_error(f, lambda x, y: squeeze_profile(x, y, -0.8)))
    assert np.all(rates(errs) > 1.9)


def test_squeeze_force_exceeds_static(coarse):
    static = pressure_force(solve(coarse))
    squeeze = pressure_force(solve(coarse, FilmSnapshot(1.0, 0.0, dh_dt=-0.5)))
    assert squeeze > static


def test_manufactured_solution_two_levels():
    errs = []
    for k in range(2):
        mesh = AnnulusMesh(A, 8, 40).refine_all(k)
        sysm = assemble(mesh, None, (0.0, 0.0), coefficient=mms_coefficient, source=mms_source)
        errs.append(l2_error(solve_pressure(sysm), mms_exact))
    assert 1.9 < rates(errs)[0] < 2.1


@pytest.mark.parametrize("seed", [0, 1])
def test_maximum_principle(seed):
    for mesh in (AnnulusMesh(A, 8, 40), adapted(seed)):
        f = solve(mesh, bc=(1.0, 2.0))
        assert f.values.min() >= 1.0 - 1e-12 and f.values.max() <= 2.0 + 1e-12


def test_hanging_values_equal_master_combination():
    mesh = adapted(2)
    f = solve(mesh, FilmSnapshot(1.5, 0.0, beta=0.3, dh_dt=-0.2))
    disc = f.disc
    for v, masters in hanging_constraints(mesh).items():
        assert f.at_vertex(v) == pytest.approx(sum(w * f.at_vertex(m) for m, w in masters), abs=1e-14)
    assert isinstance(f, PressureField) and len(f.values) == disc.n_dofs


def test_rotation_equivariance(coarse):
    snap = FilmSnapshot(1.5, 0.0, beta=0.25)
    base = solve(coarse, snap)
    rot = solve(coarse, FilmSnapshot(1.5, 0.0, beta=0.25, source_phase=2 * math.pi / 40))
    assert pressure_force(rot) == pytest.approx(pressure_force(base), rel=1e-12)
    assert np.allclose(np.sort(rot.values), np.sort(base.values), atol=1e-12)


def test_reflection_symmetry(coarse):
    up = solve(coarse, FilmSnapshot(1.5, 0.0, beta=0.25))
    down = solve(coarse, FilmSnapshot(1.5, 0.0, beta=-0.25))
    assert pressure_force(down) == pytest.approx(pressure_force(up), rel=1e-12)
    xy = up.disc.node_xy
    lookup = {(round(x, 10), round(y, 10)): i for i, (x, y) in enumerate(xy)}
    mirror = np.array([lookup[(round(x, 10), round(-y, 10) + 0.0)] for x, y in xy])
    assert np.allclose(down.values, up.values[mirror], atol=1e-12)
    # no rotational symmetry in the tilted film
    assert np.ptp(up.values[up.disc.free]) > 0
    assert abs(up.values[mirror] - up.values).max() > 1e-3


def test_non_positive_gap_reported(coarse):
    with pytest.raises(NonPositiveGap) as info:
        assemble(coarse, FilmSnapshot(0.2, 0.0, beta=0.3))
    err = info.value
    assert err.value <= 0.0
    assert math.hypot(*err.location) <= 1.0 and err.location[1] > 0


def test_cg_matches_direct_and_diverges_on_tiny_cap():
    mesh = adapted(3)
    sysm = assemble(mesh, FilmSnapshot(1.5, 0.0, beta=0.3, dh_dt=0.4))
    d = solve_pressure(sysm)
    c = solve_pressure(sysm, tol=1e-12, method="cg")
    assert np.allclose(c.values, d.values, atol=1e-9)
    assert c.info["residual"] <= 1e-12 and c.info["iterations"] > 0
    with pytest.raises(SolverDiverged):
        solve_pressure(sysm, method="cg", maxiter=2)


def test_kelly_zero_for_constant_and_linear():
    mesh = adapted(4)
    disc = discretization(mesh)
    for nodal in (np.full(disc.n_nodes, 3.0), 0.5 + 2.0 * disc.node_xy[:, 0] - disc.node_xy[:, 1]):
        eta = kelly_indicator(PressureField(mesh, disc, nodal))
        assert eta.shape == (mesh.n_active,)
        assert eta.max() < 1e-12


def test_kelly_unit_jump_hand_value():
    # four-cell ring; phi = |y| / 2 has a unit normal-gradient jump across the
    # straight radial edges at theta = 0 and pi and none at theta = +-pi/2
    mesh = AnnulusMesh(0.5, 1, 4)
    disc = discretization(mesh)
    nodal = 0.5 * np.abs(disc.node_xy[:, 1])
    eta = kelly_indicator(PressureField(mesh, disc, nodal))
    length = 1.0 - 0.5
    diam = mesh.cell_diameters(disc.cells)
    assert np.allclose(eta**2, diam * length, rtol=1e-12)


def test_velocity_profile_examples():
    mesh = AnnulusMesh(A, 8, 40).refine_all(1)
    snap = FilmSnapshot(1.3, 0.3)
    flat = solve(mesh, snap, bc=(1.0, 1.0))
    r, th = 0.55, 0.4
    assert velocity_profile(r, th, 1.3, flat, snap) == pytest.approx((0.0, 0.0), abs=1e-15)
    u, v = velocity_profile(r, th, 0.3, flat, snap)
    assert u == pytest.approx(0.0, abs=1e-12) and v == pytest.approx(r)
    logp = solve(AnnulusMesh(A, 8, 40).refine_all(3), FilmSnapshot(1.0, 0.0))
    u, _ = velocity_profile(r, th, 0.5, logp, FilmSnapshot(1.0, 0.0))
    dpdr = 1.0 / (r * math.log(1 / A))
    assert u == pytest.approx(-dpdr / 8.0, rel=2e-2)
    with pytest.raises(OutOfFilm):
        velocity_profile(r, th, 1.5, flat, snap)


def test_locate_ties_go_to_lowest_cell(coarse):
    f = solve(coarse)
    # a shared coarse vertex touches four cells
    x, y = f.disc.node_xy[np.argmin(np.abs(f.disc.node_xy[:, 0] - 0.6) + np.abs(f.disc.node_xy[:, 1]))]
    k, _ = locate(f, x, y)
    owners = [i for i, c in enumerate(f.disc.coords) if np.any(np.all(np.isclose(c, [x, y]), axis=1))]
    assert f.disc.cells[k] == min(f.disc.cells[owners])
    with pytest.raises(OutOfFilm):
        locate(f, 0.05, 0.0)

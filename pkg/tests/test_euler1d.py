from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from exact_riemann import cell_averaged_density, star_state  # noqa: E402

from linboltz.errors import ParameterError, PositivityError
from linboltz.euler1d import (
    EulerConfig,
    FluxType,
    conserved_from_primitive,
    hyperbolic_update,
    initial_state,
    numerical_flux,
    physical_flux,
    primitive_from_conserved,
    run_euler,
    source_update,
    st_limit_reference,
    step,
)
from linboltz.grid import Grid1D
from linboltz.initial import InitialCondition
from linboltz.model import BackgroundState, SClosure, derive_params, equilibrium_temperature_model
from linboltz.moment_ode import OdeState, integrate

P = derive_params(3, 1, 0.5, 1)
BG = BackgroundState()
S1 = SClosure.constant(1.0)


def test_exact_riemann_oracle_reproduces_textbook_sod():
    p, u = star_state((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 1.4)
    assert p == pytest.approx(0.30313, abs=1e-5)
    assert u == pytest.approx(0.92745, abs=1e-5)


def test_primitive_examples():
    rho, u, T = primitive_from_conserved(np.array([1.0, 0, 0, 0, 1.5]))
    assert rho == 1 and np.all(u == 0) and T == pytest.approx(1.0)
    rho, u, T = primitive_from_conserved(np.array([2.0, 2, 0, 0, 4]))
    np.testing.assert_allclose(u, [1, 0, 0])
    assert T == pytest.approx(1.0)


def test_round_trip_on_many_states():
    gen = np.random.default_rng(1)
    n = 1_000_000
    rho = gen.uniform(0.01, 10, n)
    u = gen.normal(size=(n, 3))
    T = gen.uniform(0.01, 10, n)
    r2, u2, T2 = primitive_from_conserved(conserved_from_primitive(rho, u, T))
    np.testing.assert_allclose(r2, rho, rtol=1e-14)
    np.testing.assert_allclose(u2, u, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(T2, T, rtol=1e-13, atol=1e-14)


def test_positivity_errors_name_cells():
    U = conserved_from_primitive(np.ones(4), np.zeros((4, 3)), np.ones(4))
    U[2, 4] = 0.1 * U[2, 4] - 1.0
    with pytest.raises(PositivityError) as info:
        primitive_from_conserved(U)
    assert list(info.value.cells) == [2]
    U[1, 0] = -1.0
    with pytest.raises(PositivityError) as info:
        primitive_from_conserved(U)
    assert list(info.value.cells) == [1]


def test_physical_flux_examples():
    F = physical_flux(conserved_from_primitive(np.array(2.0), np.zeros(3), np.array(1.5)))
    np.testing.assert_allclose(F, [0, 3.0, 0, 0, 0])
    F = physical_flux(conserved_from_primitive(np.array(1.0), np.array([1.0, 0, 0]), np.array(1.0)))
    np.testing.assert_allclose(F, [1, 2, 0, 0, 3])


@pytest.mark.parametrize("flux", list(FluxType))
def test_numerical_flux_is_consistent(flux):
    gen = np.random.default_rng(4)
    U = conserved_from_primitive(gen.uniform(0.1, 2, 50), gen.normal(size=(50, 3)), gen.uniform(0.1, 2, 50))
    np.testing.assert_allclose(numerical_flux(U, U, flux), physical_flux(U), rtol=1e-14, atol=1e-14)


def test_hll_is_upwind_for_supersonic_flow():
    UL = conserved_from_primitive(np.array([1.0]), np.array([[-5.0, 0, 0]]), np.array([1.0]))
    UR = conserved_from_primitive(np.array([0.5]), np.array([[-4.0, 0.3, 0]]), np.array([0.8]))
    np.testing.assert_allclose(numerical_flux(UR, UL, "hll"), physical_flux(UL))
    np.testing.assert_allclose(numerical_flux(UL, UR, "hll"), physical_flux(UR))


@pytest.mark.parametrize("flux, bound", [(FluxType.HLL, 0.01), (FluxType.RUSANOV, 0.015)])
def test_sod_density_error(flux, bound):
    cfg = EulerConfig(cfl=0.5, flux=flux, bc="transmissive", t_end=0.2, sources=False)
    grid = Grid1D(400)
    res = run_euler(grid, cfg, P, BG, S1, InitialCondition(kind="sod"))
    exact = cell_averaged_density((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 5 / 3, grid.edges, 0.5, 0.2)
    assert np.sum(np.abs(res.rho[-1] - exact)) * grid.dx < bound


def test_source_identity_without_collisions():
    U = conserved_from_primitive(np.ones(5), np.ones((5, 3)), np.full(5, 0.3))
    out = source_update(U, derive_params(3, 1, 0.5, math.inf), BG, S1, 0.5)
    np.testing.assert_array_equal(out, U)


def test_source_is_stable_when_stiff():
    k1 = 2 / 3 * 4 * P.a
    U = conserved_from_primitive(np.ones(3), np.tile([1.0, 0, 0], (3, 1)), np.full(3, 0.5))
    _, u, T = primitive_from_conserved(source_update(U, P, BG, S1, 10.0 / k1))
    assert np.max(np.abs(u)) < 1e-4
    assert np.all(T > 0)


def test_single_cell_source_matches_ode():
    u0, T0 = (1.0, 0.5, 0.0), 0.2
    U = conserved_from_primitive(np.ones(1), np.array([u0]), np.array([T0]))
    traj = integrate(OdeState(u0, T0), P, BG, S1, 1e-3, 5.0, 0.05)
    worst = 0.0
    for i in range(1, len(traj.t)):
        U = source_update(U, P, BG, S1, 0.05)
        _, u, T = primitive_from_conserved(U)
        worst = max(worst, np.max(np.abs(u[0] - traj.u[i])), abs(T[0] - traj.T[i]))
    assert worst < 1e-8


def test_uniform_equilibrium_is_a_fixed_point_with_moving_background():
    bg = BackgroundState(u1=[0.4, -0.2, 0.1], T1=1.3)
    T_eq = equilibrium_temperature_model(P, bg.T1)
    grid = Grid1D(16)
    U0 = conserved_from_primitive(np.ones(16), np.tile(bg.u1, (16, 1)), np.full(16, T_eq))
    U = U0
    for _ in range(100):
        U, _ = step(U, grid, EulerConfig(flux="hll"), P, bg, SClosure.expected_relative_speed())
    assert np.max(np.abs(U - U0)) < 1e-13


def test_mass_conserved_over_many_periodic_steps():
    grid = Grid1D(32)
    U = initial_state(grid, InitialCondition(kind="sine", amplitude=0.3, u=(0.5, 0, 0)))
    m0 = U[:, 0].sum() * grid.dx
    for _ in range(10_000):
        U, _ = step(U, grid, EulerConfig(cfl=0.5, flux="hll"), P, BG, S1)
    assert abs(U[:, 0].sum() * grid.dx - m0) < 1e-13


def test_momentum_budget_is_the_source_alone():
    grid = Grid1D(32)
    cfg = EulerConfig(flux="hll", splitting="godunov")
    U = initial_state(grid, InitialCondition(kind="gaussian_bump", amplitude=0.5, u=(0.8, 0.2, 0), T=0.7))
    dt = 0.01
    hyp = hyperbolic_update(U, dt, grid, cfg)
    np.testing.assert_allclose(hyp[:, 1:4].sum(axis=0), U[:, 1:4].sum(axis=0), atol=1e-13)
    after, _ = step(U, grid, cfg, P, BG, S1, dt)
    rho, u, _ = primitive_from_conserved(hyp)
    k1 = 2 / 3 * 4 * P.a
    expected = np.sum(rho[:, None] * (BG.u1 + (u - BG.u1) * math.exp(-k1 * dt)), axis=0)
    np.testing.assert_allclose(after[:, 1:4].sum(axis=0), expected, atol=1e-10)


def test_first_order_convergence_on_smooth_advection():
    ic = InitialCondition(kind="sine", amplitude=0.2, isobaric=True, u=(1, 0, 0))
    cfg = EulerConfig(flux="hll", t_end=0.1, sources=False)
    errs = []
    for n in (100, 200):
        grid = Grid1D(n)
        res = run_euler(grid, cfg, P, BG, S1, ic)
        ref = grid.cell_average(lambda x: st_limit_reference(lambda y: ic.fields(y, grid)[0], x, (1, 0, 0), 0.1, grid))
        errs.append(np.sum(np.abs(res.rho[-1] - ref)) * grid.dx)
    assert errs[0] / errs[1] == pytest.approx(2.0, abs=0.2)


def test_frozen_S_splitting_converges_for_nonlinear_closure():
    u0, T0 = (1.0, 0.5, 0.0), 0.2
    closure = SClosure.expected_relative_speed()
    traj = integrate(OdeState(u0, T0), P, BG, closure, 1e-3, 1.0, 1.0)
    errs = []
    for max_dt in (0.02, 0.01):
        cfg = EulerConfig(t_end=1.0, max_dt=max_dt)
        res = run_euler(Grid1D(4), cfg, P, BG, closure, InitialCondition(u=u0, T=T0))
        errs.append(abs(res.T[-1, 0] - traj.T[-1]))
    assert errs[1] < errs[0] and errs[1] < 1e-3


def test_st_limit_reference_examples():
    grid = Grid1D(64)
    x = grid.centers

    def rho0(y):
        return 1 + 0.2 * np.sin(2 * np.pi * y)

    np.testing.assert_array_equal(st_limit_reference(rho0, x, (1, 0, 0), 0.0, grid), rho0(x))
    np.testing.assert_array_equal(st_limit_reference(rho0, x, (0, 0, 0), 3.0, grid), rho0(x))
    np.testing.assert_allclose(
        st_limit_reference(rho0, x, (1, 0, 0), 0.25, grid), 1 - 0.2 * np.cos(2 * np.pi * x), atol=1e-14
    )


def test_output_times_are_hit_exactly():
    res = run_euler(Grid1D(8), EulerConfig(t_end=0.3, output_interval=0.1), P, BG, S1, InitialCondition(T=1.0))
    np.testing.assert_array_equal(res.times, [0.0, 0.1, 0.2, 0.3])


@pytest.mark.parametrize("cfl", [0.0, 0.95])
def test_cfl_range(cfl):
    with pytest.raises(ParameterError):
        EulerConfig(cfl=cfl)

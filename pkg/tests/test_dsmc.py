from __future__ import annotations

import math

import numpy as np
import pytest

from linboltz.dsmc import (
    KineticConfig,
    ParticleEnsemble,
    batch_moments,
    batch_sigma,
    cell_moments,
    collision_step,
    poisson_counts,
    run_dsmc,
    transport_step,
)
from linboltz.errors import MajorantViolationError, ParameterError, StepSizeError
from linboltz.grid import Grid1D
from linboltz.initial import InitialCondition
from linboltz.model import BackgroundState, SClosure, derive_params
from linboltz.moment_ode import OdeState, integrate

P = derive_params(3.0, 1.0, 0.5, 1.0)
BG = BackgroundState()
S1 = SClosure.constant(1.0)


def maxwellian_ensemble(n, u=(0, 0, 0), T=1.0, seed=0, x=None):
    gen = np.random.default_rng(seed)
    return ParticleEnsemble(np.asarray(u) + math.sqrt(T) * gen.standard_normal((n, 3)), 1.0 / n, x)


# --- collision step -------------------------------------------------------------------------


def test_zero_rate_leaves_ensemble_unchanged():
    ens = maxwellian_ensemble(1000)
    out = collision_step(ens, P, BG, S1, 0.0, 0.01, seed=1, step=0)
    np.testing.assert_array_equal(out.ensemble.v, ens.v)
    assert out.collisions == 0


def test_collision_rate_matches_prefactor():
    cfg = KineticConfig(dt=0.0125, t_end=10.0, n_particles=100_000, seed=42, output_interval=10.0)
    res = run_dsmc(cfg, P, BG, S1, InitialCondition())
    rate = res.collisions.sum() / (cfg.n_particles * cfg.t_end)
    assert rate == pytest.approx(4.0, rel=0.01)


def test_step_size_guard():
    ens = maxwellian_ensemble(10)
    with pytest.raises(StepSizeError):
        collision_step(ens, P, BG, S1, 1.0, 0.2, seed=1, step=0)


def test_majorant_violation_reports_speed():
    ens = maxwellian_ensemble(2000, T=4.0)
    with pytest.raises(MajorantViolationError) as info:
        collision_step(ens, P, BG, SClosure.hard_sphere(), 0.5, 0.05, seed=1, step=0)
    assert info.value.speed > info.value.majorant == 0.5


def test_particle_count_conserved_and_momentum_changes():
    ens = maxwellian_ensemble(5000, u=(1, 0, 0))
    out = collision_step(ens, P, BG, S1, 1.0, 0.1, seed=3, step=7)
    assert out.ensemble.count == ens.count
    assert out.collisions > 0
    assert not np.allclose(out.ensemble.v.mean(axis=0), ens.v.mean(axis=0))


@pytest.mark.parametrize("closure", [S1, SClosure.hard_sphere()])
def test_partitioning_does_not_change_results(closure):
    ens = maxwellian_ensemble(20_000, u=(0.5, 0, 0), seed=4)
    S = 1.0 if closure is S1 else 14.0
    a = collision_step(ens, P, BG, closure, S, 0.005, seed=11, step=3, workers=1)
    b = collision_step(ens, P, BG, closure, S, 0.005, seed=11, step=3, workers=7)
    np.testing.assert_array_equal(a.ensemble.v, b.ensemble.v)
    assert a.collisions == b.collisions and a.candidates == b.candidates


def test_poisson_counts_distribution():
    gen = np.random.default_rng(2)
    k = poisson_counts(gen.random(400_000), 0.7)
    assert k.mean() == pytest.approx(0.7, rel=0.01)
    assert k.var() == pytest.approx(0.7, rel=0.02)
    for j in range(4):
        assert np.mean(k == j) == pytest.approx(math.exp(-0.7) * 0.7**j / math.factorial(j), abs=3e-3)


# --- transport -------------------------------------------------------------------------------


def test_transport_examples():
    grid = Grid1D(10)
    still = ParticleEnsemble(np.zeros((5, 3)), 0.2, np.linspace(0.05, 0.95, 5))
    np.testing.assert_array_equal(transport_step(still, 1.0, grid, "periodic").x, still.x)
    one = ParticleEnsemble([[0.2, 0, 0]], 1.0, [0.9])
    assert transport_step(one, 1.0, grid, "periodic").x[0] == pytest.approx(0.1, abs=1e-15)
    two = ParticleEnsemble([[1.0, 0, 0], [0.0, 0, 0]], 1.0, [0.99, 0.5])
    out = transport_step(two, 0.02, grid, "outflow")
    assert out.count == 1 and out.x[0] == 0.5 and out.ids[0] == 1


def test_transport_needs_positions():
    with pytest.raises(ParameterError):
        transport_step(maxwellian_ensemble(3), 0.1, Grid1D(4), "periodic")


# --- moments ---------------------------------------------------------------------------------


def test_cell_moments_examples():
    mono = ParticleEnsemble(np.tile([1.0, 2.0, 3.0], (50, 1)), 0.02)
    m = cell_moments(mono)
    np.testing.assert_allclose(m.u[0], [1, 2, 3])
    assert m.T[0] == pytest.approx(0.0, abs=1e-28) and m.rho[0] == pytest.approx(1.0)

    warm = maxwellian_ensemble(1_000_000, T=2.0, seed=8)
    assert cell_moments(warm).T[0] == pytest.approx(2.0, rel=0.01)

    grid = Grid1D(4)
    sparse = ParticleEnsemble([[1, 0, 0], [2, 0, 0], [5, 0, 0]], 0.5, [0.1, 0.15, 0.6])
    m = cell_moments(sparse, grid)
    assert list(m.count) == [2, 0, 1, 0]
    assert m.rho[1] == 0.0 and np.all(np.isnan(m.u[1])) and np.isnan(m.T[1])
    assert m.u_defined[2] and not m.T_defined[2]
    assert m.state(1).u is None and m.state(2).T is None
    assert m.rho[0] == pytest.approx(2 * 0.5 / 0.25)


def test_batch_sigma_matches_analytic_standard_error():
    ens = maxwellian_ensemble(160_000, T=1.0, seed=21)
    sig = batch_sigma(batch_moments(ens, None, 16))
    expected = math.sqrt(1.0 / ens.count)
    assert 0.5 * expected < sig["ux"][0] < 1.6 * expected
    assert sig["rho"][0] == 0.0  # every batch holds exactly N/16 particles


def test_batch_sigma_is_calibrated_against_the_moment_equations():
    """Pooled (DSMC - ODE)/sigma over many seeds looks like a t-statistic with 15 dof."""
    u0, T0 = (1.0, 0.0, 0.0), 1.0
    traj = integrate(OdeState(u0, T0), P, BG, S1, 0.025, 3.0, 0.5)
    z = []
    for seed in range(16):
        cfg = KineticConfig(dt=0.025, t_end=3.0, n_particles=5000, seed=seed, output_interval=0.5)
        res = run_dsmc(cfg, P, BG, S1, InitialCondition(u=u0, T=T0))
        for i, snap in enumerate(res.snapshots):
            m, s = snap.moments, snap.sigma
            z += [(m.u[0, k] - traj.u[i, k]) / s[f][0] for k, f in enumerate(("ux", "uy", "uz"))]
            z.append((m.T[0] - traj.T[i]) / s["T"][0])
    z = np.array(z)
    assert abs(z.mean()) < 0.2
    assert 0.85 < z.std() < 1.35
    assert np.mean(np.abs(z) > 3) < 0.03


# --- driver ---------------------------------------------------------------------------------


def test_free_streaming_matches_free_molecular_solution():
    A, t_end, grid = 0.3, 0.2, Grid1D(16)
    cfg = KineticConfig(dt=0.0125, t_end=t_end, n_particles=200_000, seed=5, mode="slab1d", grid=grid, output_interval=t_end)
    res = run_dsmc(cfg, derive_params(1, 1, 1, math.inf), BG, S1, InitialCondition(kind="sine", amplitude=A, T=1.0))
    dx = grid.dx
    damp = math.exp(-0.5 * (2 * math.pi * t_end) ** 2)
    exact = 1 + A * damp * np.sin(2 * math.pi * grid.centers) * math.sin(math.pi * dx) / (math.pi * dx)
    rho = res.snapshots[-1].moments.rho
    sigma = np.sqrt(exact * dx * cfg.n_particles) / (cfg.n_particles * dx)
    assert np.all(np.abs(rho - exact) < 4 * sigma)
    assert res.collisions.sum() == 0


def test_outflow_loses_mass_periodic_keeps_it():
    grid = Grid1D(8)
    common = dict(dt=0.01, t_end=0.5, n_particles=4000, seed=1, mode="slab1d", grid=grid)
    ic = InitialCondition(T=1.0)
    periodic = run_dsmc(KineticConfig(**common), P, BG, S1, ic)
    outflow = run_dsmc(KineticConfig(bc="outflow", **common), P, BG, S1, ic)
    assert periodic.final.count == 4000
    assert outflow.final.count < 4000
    assert outflow.snapshots[-1].moments.rho.sum() * grid.dx == pytest.approx(outflow.final.count / 4000)


def test_relaxation_toward_background_changes_moments_but_not_count():
    cfg = KineticConfig(dt=0.0125, t_end=5.0, n_particles=20_000, seed=2, output_interval=5.0)
    res = run_dsmc(cfg, P, BG, S1, InitialCondition(u=(1, 0, 0), T=0.2))
    first, last = res.snapshots[0].moments, res.snapshots[-1].moments
    assert res.final.count == cfg.n_particles and last.rho[0] == first.rho[0]
    assert abs(last.u[0, 0]) < 0.05
    assert last.T[0] == pytest.approx(9 / 7, rel=0.05)


def test_pseudo_maxwellian_tracks_hard_sphere_qualitatively():
    ic = InitialCondition(u=(1, 0, 0), T=1.0)
    cfg = KineticConfig(dt=0.005, t_end=1.5, n_particles=20_000, seed=3, output_interval=0.25)
    pm = run_dsmc(cfg, P, BG, SClosure.expected_relative_speed(), ic)
    hs = run_dsmc(cfg, P, BG, SClosure.hard_sphere(), ic)
    for res in (pm, hs):
        ux = np.array([s.moments.u[0, 0] for s in res.snapshots])
        assert np.all(np.diff(ux) < 0)
        assert res.snapshots[-1].moments.T[0] > 1.0
    gap = abs(pm.snapshots[-1].moments.T[0] - hs.snapshots[-1].moments.T[0])
    print(f"pseudo-Maxwellian vs hard-sphere temperature gap at t=1.5: {gap:.4f}")


def test_config_validation():
    with pytest.raises(ParameterError):
        KineticConfig(dt=0.0, t_end=1.0, n_particles=10)
    with pytest.raises(ParameterError):
        KineticConfig(dt=0.1, t_end=1.0, n_particles=0)
    with pytest.raises(ParameterError):
        KineticConfig(dt=0.1, t_end=1.0, n_particles=10, mode="slab1d")
    with pytest.raises(ParameterError):
        KineticConfig(dt=0.3, t_end=1.0, n_particles=10).n_steps

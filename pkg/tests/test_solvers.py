from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import LinAlgError

from nodalrbf.errors import SeriesDivergenceError, UnsupportedConfigurationError
from nodalrbf.exact import ExactGaussian, VelocityProfile
from nodalrbf.interpolation import assemble_gram, kernel_derivative_matrix
from nodalrbf.kernels import wendland
from nodalrbf.nodal import derivative_matrix
from nodalrbf.nodes import build_node_set
from nodalrbf.solvers import (AdvectionProblem, BoundarySpec, SeriesConfig, advection_matrix,
                              apply_boundary, binomial_weight_g, binomial_weight_rho, build_g_star,
                              ci_step, direct_propagator, error_mask, lw_step, nrbf_step_direct,
                              nrbf_step_series, rbf_derivative_operator, rbf_propagator, rbf_step,
                              run_simulation)


def _system(n=20, q=3, alpha=5.0, ghosts=0):
    ns = build_node_set((-1.0, 1.0), n, ghosts)
    return assemble_gram(ns, wendland(3, q), alpha)


def _operator(n=20, u=1.0, **kw):
    return advection_matrix(derivative_matrix(_system(n, **kw)), u)


def _norm_inf(A):
    return np.max(np.sum(np.abs(A), axis=1))


# advection matrix

def test_advection_matrix_special_velocities():
    D = derivative_matrix(_system())
    assert np.all(advection_matrix(D, 0.0).A == 0)
    np.testing.assert_array_equal(advection_matrix(D, np.ones(20)).A, -D.D)


def test_advection_matrix_varying_loop_oracle():
    s = _system()
    D = derivative_matrix(s).D
    u = VelocityProfile(gamma=0.5)(s.nodes.coords)
    ref = np.empty_like(D)
    for i in range(20):
        for j in range(20):
            ref[i, j] = -u[j] * D[i, j]
    np.testing.assert_array_equal(advection_matrix(D, u).A, ref)


@given(st.lists(st.floats(-3, 3), min_size=20, max_size=20))
def test_advection_matrix_linear_in_velocity(u):
    D = derivative_matrix(_system())
    u = np.array(u)
    np.testing.assert_allclose(advection_matrix(D, 2 * u).A, 2 * advection_matrix(D, u).A, rtol=1e-15, atol=1e-300)


def test_advection_matrix_length_check():
    with pytest.raises(ValueError):
        advection_matrix(np.eye(3), np.ones(4))


# configuration and weights

@pytest.mark.parametrize("kw", [dict(dt=0.0, P=1), dict(dt=1.0, P=0), dict(dt=1.0, P=2.5),
                                dict(dt=1.0, P=1, M=0), dict(dt=1.0, P=1, N=65)])
def test_series_config_rejects(kw):
    with pytest.raises(ValueError):
        SeriesConfig(**kw)


def test_series_config_outer():
    c = SeriesConfig.from_outer(0.016, 10**10)
    assert c.P == 10**10
    assert c.dT == pytest.approx(0.016, rel=1e-15)
    assert (c.M, c.N) == (15, 15)


def test_weight_examples():
    assert binomial_weight_g(7, 0) == 1.0
    assert binomial_weight_g(4, 1) == pytest.approx(0.375, rel=1e-15)
    assert binomial_weight_g(4, 4) == 0.0
    exact = Fraction(1, 24) * np.prod([1 - Fraction(j, 10**10) for j in range(4)])
    assert binomial_weight_g(10**10, 3) == pytest.approx(float(exact), rel=1e-15)
    assert binomial_weight_rho(9, 0) == 1.0
    assert all(binomial_weight_rho(1, k) == 1.0 for k in range(30))
    assert binomial_weight_rho(10, 2) == pytest.approx(0.55, rel=1e-15)
    assert binomial_weight_rho(10, 2) == pytest.approx(comb(11, 9) / 100, rel=1e-15)


@given(st.integers(1, 100), st.integers(0, 20))
def test_weights_vs_big_integer_binomials(P, k):
    g = Fraction(comb(P, k + 1), P ** (k + 1))
    r = Fraction(comb(k + P - 1, P - 1), P ** k)
    got_g, got_r = binomial_weight_g(P, k), binomial_weight_rho(P, k)
    if g == 0:
        assert got_g == 0.0
    else:
        assert abs(Fraction(got_g) - g) <= 1e-13 * g
    assert abs(Fraction(got_r) - r) <= 1e-13 * r


def test_weights_finite_for_huge_P():
    P = 10**10
    assert all(np.isfinite(binomial_weight_g(P, k)) for k in range(64))
    assert all(np.isfinite(binomial_weight_rho(P, k)) for k in range(65))


def test_scalar_binomial_identity():
    x, P = 0.1, 10
    lhs = sum((1 - x) ** k for k in range(P))
    rhs = sum((-1) ** k * comb(P, k + 1) * x ** k for k in range(P))
    assert abs(lhs - rhs) <= 1e-12


# source series

def test_g_star_without_source():
    op = _operator()
    rho = np.arange(20.0)
    cfg = SeriesConfig(dt=1e-3, P=4)
    out = build_g_star(rho, None, op, cfg)
    np.testing.assert_array_equal(out, rho)
    assert out is not rho
    np.testing.assert_array_equal(build_g_star(rho, np.zeros(20), op, cfg), rho)


def test_g_star_zero_operator():
    cfg = SeriesConfig(dt=0.05, P=4)
    s = np.linspace(1, 2, 10)
    out = build_g_star(np.ones(10), s, np.zeros((10, 10)), cfg)
    np.testing.assert_allclose(out, 1.0 + cfg.dT * s, rtol=1e-15)


def test_g_star_vs_p_term_oracle():
    op = _operator(10, alpha=3.0)
    A = op.A
    P = 4
    dT = 0.2 / _norm_inf(A)
    cfg = SeriesConfig.from_outer(dT, P, M=20)
    dt = cfg.dt
    rng = np.random.default_rng(0)
    rho, S = rng.normal(size=10), rng.normal(size=10)
    step = np.eye(10) - dt * A
    ref = rho + sum(np.linalg.matrix_power(step, k) @ S * dt for k in range(P))
    got = build_g_star(rho, S, op, cfg)
    assert np.max(np.abs(got - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_g_star_length_check():
    with pytest.raises(ValueError):
        build_g_star(np.ones(3), np.ones(4), np.eye(3), SeriesConfig(dt=1.0, P=1))


# solution series and direct solve

def test_series_zero_operator():
    g = np.linspace(0, 1, 5)
    np.testing.assert_array_equal(nrbf_step_series(np.zeros((5, 5)), g, SeriesConfig(dt=1.0, P=3)), g)


def test_series_scalar_geometric():
    a, dt = 2.0, 0.05
    got = nrbf_step_series(np.array([[a]]), np.array([1.0]), SeriesConfig(dt=dt, P=1, N=30))
    assert got[0] == pytest.approx(1.0 / (1.0 - dt * a), rel=1e-12)


def test_series_vs_dense_power_solve():
    op = _operator()
    A = op.A
    P = 4
    cfg = SeriesConfig.from_outer(0.05 / _norm_inf(A), P, N=20)
    g = np.random.default_rng(1).normal(size=20)
    ref = np.linalg.solve(np.linalg.matrix_power(np.eye(20) - cfg.dt * A, P), g)
    got = nrbf_step_series(op, g, cfg)
    assert np.max(np.abs(got - ref)) <= 1e-10 * np.max(np.abs(ref))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 16), st.floats(0.01, 0.1), st.integers(0, 1000))
def test_series_consistent_with_direct(P, scale, seed):
    op = _operator()
    cfg = SeriesConfig.from_outer(scale / _norm_inf(op.A), P, M=30, N=30)
    g = np.random.default_rng(seed).normal(size=20)
    a = nrbf_step_series(op, g, cfg)
    b = nrbf_step_direct(op, g, cfg)
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(b))


@pytest.mark.parametrize("P", [2, 4, 8])
def test_induction_identity(P):
    op = _operator()
    A = op.A
    cfg = SeriesConfig.from_outer(0.1 / _norm_inf(A), P, M=64, N=64)
    rng = np.random.default_rng(P)
    rho, S = rng.normal(size=20), rng.normal(size=20)
    inv = np.linalg.inv(np.eye(20) - cfg.dt * A)
    stepped = rho.copy()
    for _ in range(P):
        stepped = inv @ (stepped + S * cfg.dt)
    once = nrbf_step_series(op, build_g_star(rho, S, op, cfg), cfg)
    assert np.max(np.abs(once - stepped)) <= 1e-10 * np.max(np.abs(stepped))


def test_series_divergence_reports_term():
    big = np.diag(np.full(4, 1e300))
    with pytest.raises(SeriesDivergenceError) as info:
        nrbf_step_series(big, np.ones(4), SeriesConfig(dt=1.0, P=1, N=5))
    # the first term is still finite, its square is not
    assert info.value.term == 2


def test_direct_examples():
    g = np.arange(6.0)
    np.testing.assert_array_equal(nrbf_step_direct(np.zeros((6, 6)), g, SeriesConfig(dt=0.1, P=7)), g)
    op = _operator()
    cfg = SeriesConfig.from_outer(0.05 / _norm_inf(op.A), 1, N=60)
    g = np.random.default_rng(2).normal(size=20)
    a = nrbf_step_direct(op, g, cfg)
    b = nrbf_step_series(op, g, cfg)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


def test_direct_rejects():
    with pytest.raises(LinAlgError):
        nrbf_step_direct(np.eye(3) / 0.5, np.ones(3), SeriesConfig(dt=0.5, P=1))
    with pytest.raises(ValueError):
        nrbf_step_direct(np.zeros((2, 2)), np.ones(2), SeriesConfig(dt=1.0, P=10**6 + 1))


def test_direct_propagator_matches_substeps():
    op = _operator()
    cfg = SeriesConfig.from_outer(2.0 / _norm_inf(op.A), 13)
    g = np.random.default_rng(3).normal(size=20)
    np.testing.assert_allclose(direct_propagator(op, cfg) @ g, nrbf_step_direct(op, g, cfg),
                               rtol=1e-10, atol=1e-12)


# weight-space solver

def test_rbf_zero_velocity_keeps_weights():
    s = _system()
    B = rbf_derivative_operator(s, 0.0)
    w = np.random.default_rng(4).normal(size=20)
    np.testing.assert_allclose(rbf_step(s, B, w, SeriesConfig(dt=0.1, P=3)), w, rtol=1e-12)


def test_rbf_one_step_vs_dense_oracle():
    s = _system()
    u = 0.7
    x = s.nodes.coords
    B = -u * kernel_derivative_matrix(s.kernel, s.alpha, x, x)
    np.testing.assert_array_equal(rbf_derivative_operator(s, u), B)
    w = np.random.default_rng(5).normal(size=20)
    dt = 0.01
    ref = s.gram @ (np.linalg.inv(s.gram - dt * B) @ (s.gram @ w))
    got = s.gram @ rbf_step(s, B, w, SeriesConfig(dt=dt, P=1))
    assert np.max(np.abs(got - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_rbf_propagator_matches_substeps():
    s = _system()
    B = rbf_derivative_operator(s, 1.0)
    cfg = SeriesConfig(dt=0.01, P=6)
    w = np.random.default_rng(6).normal(size=20)
    np.testing.assert_allclose(rbf_propagator(s, B, cfg) @ w, rbf_step(s, B, w, cfg), rtol=1e-9, atol=1e-9)


def test_rbf_rejects_varying_velocity():
    s = _system()
    with pytest.raises(UnsupportedConfigurationError, match="not the nodal products"):
        rbf_derivative_operator(s, VelocityProfile(gamma=0.5)(s.nodes.coords))
    # a constant array is fine
    rbf_derivative_operator(s, np.full(20, 0.5))


# finite-difference references

def _ci_dense(rho, u, dx, dT):
    n = rho.size
    c = u * dT / (12 * dx)
    M = np.eye(n)
    for i in range(2, n - 2):
        M[i, i + 2] += -c
        M[i, i + 1] += 8 * c
        M[i, i - 1] += -8 * c
        M[i, i - 2] += c
    return np.linalg.solve(M, rho)


def test_ci_examples():
    x = np.linspace(-2, 2, 101)
    rho = ExactGaussian(-0.5, 1.0, 0.2)(x, 0.0)
    np.testing.assert_array_equal(ci_step(rho, 0.0, 0.04, 0.1), rho)
    np.testing.assert_allclose(ci_step(np.full(50, 1.7), 1.0, 0.04, 0.1), 1.7, rtol=1e-15)
    got = ci_step(rho, 1.0, 0.04, 0.08)
    ref = _ci_dense(rho, 1.0, 0.04, 0.08)
    assert np.max(np.abs(got - ref)) <= 1e-12


def test_lw_examples():
    x = np.linspace(-2, 2, 101)
    dx = x[1] - x[0]
    rho = ExactGaussian(-0.5, 1.0, 0.2)(x, 0.0)
    np.testing.assert_array_equal(lw_step(rho, 0.0, dx, 0.1), rho)
    shifted = lw_step(rho, 1.0, dx, dx)
    np.testing.assert_allclose(shifted[1:-1], rho[:-2], rtol=0, atol=4e-16)
    np.testing.assert_allclose(lw_step(np.full(20, 3.0), 1.0, dx, 0.5 * dx), 3.0, rtol=1e-15)
    dt = 0.5 * dx
    ref = rho.copy()
    for i in range(1, rho.size - 1):
        ref[i] = (rho[i] - dt / (2 * dx) * (rho[i + 1] - rho[i - 1])
                  + dt * dt / (2 * dx * dx) * (rho[i + 1] - 2 * rho[i] + rho[i - 1]))
    assert np.max(np.abs(lw_step(rho, 1.0, dx, dt) - ref)) <= 1e-14
    with pytest.raises(UnsupportedConfigurationError):
        lw_step(rho, 1.0, dx, 1.01 * dx)


# boundaries

def test_apply_boundary_contracts():
    ns = build_node_set((-2.0, 2.0), 21, 3)
    ex = ExactGaussian(-2.0, 1.0, 0.2)
    x = ns.coords
    spec = BoundarySpec.for_nodes(ns)
    np.testing.assert_array_equal(apply_boundary(ex(x, 0.3), spec, x, ex, 0.3), ex(x, 0.3))
    left_only = BoundarySpec.for_nodes(ns, right="open")
    out = apply_boundary(np.zeros(ns.n), left_only, x, ex, 0.0)
    assert np.count_nonzero(out) == ns.n_ghost_left + 1
    np.testing.assert_array_equal(out[:4], ex(x[:4], 0.0))
    both = apply_boundary(np.zeros(ns.n), spec, x, ex, 0.0)
    assert np.count_nonzero(both) == 8


def test_boundary_spec_validation():
    with pytest.raises(ValueError):
        BoundarySpec(left="periodic")
    with pytest.raises(ValueError):
        BoundarySpec(left_count=-1)
    with pytest.raises(ValueError):
        BoundarySpec(left_count=3, right_count=3).pinned_mask(5)


def test_error_mask_excludes_pinned_and_ghost():
    ns = build_node_set((0.0, 1.0), 11, 2)
    m = error_mask(ns, BoundarySpec.for_nodes(ns, right="open"))
    assert not m[:3].any() and not m[-2:].any()
    assert m[3:-2].all()


# full runs

def _problem(n=201, t_final=1.0, alpha=20.0, q=4, **kw):
    ns = build_node_set((-2.0, 2.0), n, 3)
    return AdvectionProblem(nodes=ns, exact=ExactGaussian(-2.0, 1.0, 0.2), t_final=t_final,
                            kernel=wendland(3, q), alpha_in_spacings=alpha, **kw)


def test_zero_length_run_echoes_initial_condition():
    p = _problem(t_final=0.0)
    spec = BoundarySpec.for_nodes(p.nodes)
    run = run_simulation("NRBF", p, SeriesConfig(dt=1e-3, P=1), spec)
    assert run.times == [0.0]
    np.testing.assert_array_equal(run.state, p.exact(p.nodes.coords, 0.0))
    assert run.e_max == [0.0]


def test_callback_streams_running_stats():
    p = _problem(t_final=0.2)
    spec = BoundarySpec.for_nodes(p.nodes)
    records = []
    run = run_simulation("NRBF", p, SeriesConfig.from_outer(0.04, 1000), spec, callback=records.append)
    assert len(records) == len(run.times) == 6
    assert records[-1]["t"] == pytest.approx(0.2)
    errs = [r["e_max"] for r in records]
    assert records[-1]["running_avg"] == pytest.approx(np.mean(errs))
    assert records[-1]["running_min"] == min(errs)


def test_outer_step_lands_on_final_time():
    p = _problem(t_final=0.1)
    run = run_simulation("NRBF", p, SeriesConfig.from_outer(0.03, 10), BoundarySpec.for_nodes(p.nodes))
    assert run.times[-1] == pytest.approx(0.1, rel=1e-12)
    assert run.cfg.dT <= 0.03


def test_divergence_is_flagged():
    p = _problem(t_final=20.0)
    spec = BoundarySpec.for_nodes(p.nodes)
    cfg = SeriesConfig.from_outer(60 * p.nodes.eps0, 10**6, N=64)
    run = run_simulation("NRBF", p, cfg, spec)
    assert run.diverged
    assert run.diverged_step >= 1
    assert "step" in run.message


def test_schemes_reject_varying_velocity():
    p = _problem(t_final=0.1, velocity=VelocityProfile(gamma=0.5))
    spec = BoundarySpec.for_nodes(p.nodes)
    for scheme in ("RBF", "CI", "LW"):
        with pytest.raises(UnsupportedConfigurationError):
            run_simulation(scheme, p, SeriesConfig(dt=1e-3, P=1), spec)


def test_constant_field_stays_constant_for_fd_schemes():
    ns = build_node_set((-2.0, 2.0), 101, 3)
    flat = lambda x, t: np.ones_like(np.asarray(x, dtype=float))
    p = AdvectionProblem(nodes=ns, exact=flat, t_final=0.5)
    spec = BoundarySpec.for_nodes(ns)
    for scheme in ("CI", "LW"):
        run = run_simulation(scheme, p, SeriesConfig.from_outer(2 * ns.eps0, 1), spec)
        assert max(run.e_max) <= 1e-14


def test_lw_zero_velocity_error_constant():
    ns = build_node_set((-2.0, 2.0), 201, 3)
    p = AdvectionProblem(nodes=ns, exact=ExactGaussian(0.0, 0.0, 0.2), t_final=0.5, velocity=0.0)
    spec = BoundarySpec.for_nodes(p.nodes)
    run = run_simulation("LW", p, SeriesConfig.from_outer(0.05, 1), spec)
    assert max(run.e_max) == 0.0


@pytest.mark.slow
def test_open_boundary_outflow_without_reflection():
    p = _problem(n=501, t_final=6.0, alpha=30.0)
    spec = BoundarySpec.for_nodes(p.nodes, right="open")
    run = run_simulation("NRBF", p, SeriesConfig.from_outer(2 * p.nodes.eps0, 10**6), spec)
    t, e = np.array(run.times), np.array(run.e_max)
    interior = np.median(e[(t > 0.5) & (t < 3.0)])
    assert np.max(e[t > 4.5]) <= 10 * interior
    far = run.state[p.nodes.interior]
    assert np.max(np.abs(far - 1.0)) <= 10 * interior


@pytest.mark.slow
def test_series_and_direct_runs_agree():
    p = _problem(n=201, t_final=2.0, alpha=20.0, q=3)
    spec = BoundarySpec.for_nodes(p.nodes)
    cfg = SeriesConfig.from_outer(2 * p.nodes.eps0, 10**6)
    a = run_simulation("NRBF", p, cfg, spec)
    b = run_simulation("DNRBF", p, cfg, spec)
    np.testing.assert_allclose(a.e_max, b.e_max, rtol=0.05, atol=1e-9)


@pytest.mark.slow
def test_conservative_run_stats():
    p = _problem(n=501, t_final=6.0, alpha=30.0)
    run = run_simulation("NRBF", p, SeriesConfig.from_outer(2 * p.nodes.eps0, 10**6),
                         BoundarySpec.for_nodes(p.nodes))
    lo, avg, hi = run.summary()
    assert lo <= avg <= hi
    assert avg / lo <= 2

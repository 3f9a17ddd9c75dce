"""Turn an :class:`ExperimentConfig` into solver runs, sweeps and data dumps."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import os

import numpy as np

from .config import basis_columns, validate
from .errors import (VARYING_VELOCITY_OBSTRUCTION, NotPositiveDefiniteError,
                     UnsupportedConfigurationError)
from .exact import BallisticGaussian, ExactGaussian, VelocityProfile, transit_time
from .interpolation import assemble_gram, eval_interpolant, solve_weights
from .kernels import make_kernel
from .nodal import eval_nrbf, nodal_coefficients, nrbf_interpolate
from .nodes import build_node_set
from .solvers import AdvectionProblem, BoundarySpec, Scheme, SeriesConfig, run_simulation

WORKERS_ENV = "NRBF_WORKERS"

SWEEP_AXES = {
    "ratio": "ratio",
    "alpha": "alpha",
    "kernel_q": "kernel_q",
    "ghost_count": "ghost_count",
    "sigma": "sigma",
    "n_nodes": "n_nodes",
    "jitter": "jitter",
    "truncation": "truncation",
}


def build_nodes(cfg):
    return build_node_set((cfg.domain_a, cfg.domain_b), cfg.n_nodes, cfg.ghost_count,
                          jitter_fraction=cfg.jitter, seed=cfg.seed)


def build_kernel(cfg):
    return make_kernel(cfg.kernel_family, cfg.kernel_p, cfg.kernel_q)


def velocity_of(cfg):
    if cfg.varying_velocity:
        return VelocityProfile(xc=cfg.xc, gamma=cfg.gamma, sigma_u=cfg.sigma_u)
    return float(cfg.u)


def exact_of(cfg):
    if cfg.varying_velocity:
        return BallisticGaussian(velocity_of(cfg), cfg.peak_start, cfg.sigma)
    return ExactGaussian(cfg.peak_start, cfg.u, cfg.sigma)


@dataclass(frozen=True)
class Setup:
    problem: AdvectionProblem
    series: SeriesConfig
    boundary: BoundarySpec


def build_setup(cfg, t_final=None, mask=None):
    """Problem, series configuration and boundary spec for ``cfg``."""
    nodes = build_nodes(cfg)
    problem = AdvectionProblem(
        nodes=nodes, exact=exact_of(cfg),
        t_final=cfg.t_final if t_final is None else t_final,
        velocity=velocity_of(cfg),
        kernel=None if cfg.scheme in ("CI", "LW") else build_kernel(cfg),
        alpha_in_spacings=cfg.alpha, width_unit=cfg.width_unit,
        truncation=cfg.truncation, truncation_mode=cfg.truncation_mode,
        lw_cfl=cfg.lw_cfl, error_mask=mask)
    umax = float(np.max(np.abs(problem.velocity_samples())))
    # unit-speed reference when the flow is at rest
    dT_cfl = nodes.eps0 / umax if umax > 0 else nodes.eps0
    dT = cfg.dT if cfg.dT > 0 else cfg.cfl_multiple * dT_cfl
    series = SeriesConfig.from_outer(dT, cfg.ratio, cfg.M, cfg.N)
    boundary = BoundarySpec.for_nodes(nodes, cfg.left, cfg.right)
    return Setup(problem, series, boundary)


def run_config(cfg, callback=None, t_final=None, mask=None):
    s = build_setup(cfg, t_final=t_final, mask=mask)
    return run_simulation(cfg.scheme, s.problem, s.series, s.boundary, callback=callback)


@dataclass(frozen=True)
class SweepRow:
    value: object
    e_min: float
    e_avg: float
    e_max: float
    status: str


def sweep_point(cfg, axis, value):
    """One sweep run; failures become the row status instead of raising."""
    try:
        point = cfg.with_values(**{SWEEP_AXES[axis]: value})
        run = run_config(point)
    except (NotPositiveDefiniteError, UnsupportedConfigurationError, np.linalg.LinAlgError,
            ValueError, FloatingPointError) as exc:
        return SweepRow(value, np.nan, np.nan, np.nan, f"error: {exc}")
    lo, avg, hi = run.summary()
    status = f"diverged at step {run.diverged_step}" if run.diverged else "ok"
    return SweepRow(value, lo, avg, hi, status)


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg, axis, values, workers=None):
    """Rows in the order of ``values``; runs in parallel when ``workers > 1``."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    cfg = validate(cfg)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(values) == 1:
        return [sweep_point(cfg, axis, v) for v in values]
    with ProcessPoolExecutor(max_workers=min(workers, len(values))) as pool:
        return list(pool.map(sweep_point, [cfg] * len(values), [axis] * len(values), values))


def uniform_region_mask(cfg, nodes, tol=1e-12):
    """Interior nodes right of ``xc`` where the velocity is 1 within ``tol``."""
    x = nodes.coords
    u = VelocityProfile(cfg.xc, cfg.gamma, cfg.sigma_u)(x) if cfg.varying_velocity else np.ones_like(x)
    return (~nodes.is_ghost()) & (x > cfg.xc) & (np.abs(1.0 - u) < tol)


@dataclass(frozen=True)
class VariableVelocityResult:
    kernel_q: int
    alpha: float
    e_final: float
    t_final: float
    status: str


def variable_velocity_run(cfg):
    """Run until the ballistic peak reaches the right end; error near that end.

    The error is sampled right of ``xc`` where ``u = 1`` to machine precision,
    since the Gaussian is an exact solution only there.
    """
    if cfg.scheme == Scheme.RBF.value and cfg.varying_velocity:
        raise UnsupportedConfigurationError(VARYING_VELOCITY_OBSTRUCTION)
    if cfg.scheme not in (Scheme.NRBF.value, Scheme.DNRBF.value):
        raise UnsupportedConfigurationError("variable-velocity runs need an NRBF scheme")
    profile = VelocityProfile(cfg.xc, cfg.gamma, cfg.sigma_u)
    t_end = transit_time(profile, cfg.peak_start, cfg.domain_b)
    nodes = build_nodes(cfg)
    s = build_setup(cfg, t_final=t_end, mask=uniform_region_mask(cfg, nodes))
    run = run_simulation(cfg.scheme, s.problem, s.series, s.boundary)
    status = f"diverged at step {run.diverged_step}" if run.diverged else "ok"
    return VariableVelocityResult(cfg.kernel_q, cfg.alpha, run.e_max[-1], t_end, status)


def weight_obstruction(n=50, kernel_q=3, alpha=5.0, gamma=0.5, sigma_u=0.5, sigma=0.3):
    """Relative gap between the weights of ``rho u`` and ``omega_rho * u``.

    Linearity of the weight-space scheme needs them to coincide; for a
    spatially varying ``u`` they do not.
    """
    nodes = build_node_set((-2.0, 2.0), n)
    system = assemble_gram(nodes, make_kernel("wendland", 3, kernel_q), alpha)
    x = nodes.coords
    rho = ExactGaussian(-0.5, 1.0, sigma)(x, 0.0)
    u = VelocityProfile(0.0, gamma, sigma_u)(x)
    w_flux = solve_weights(system, rho * u)
    w_prod = solve_weights(system, rho) * u
    return float(np.max(np.abs(w_flux - w_prod)) / np.max(np.abs(w_flux)))


def basis_dump(cfg):
    """``(kind, j, x, value)`` rows: fine samples of Psi_j and |Omega_ij|."""
    nodes = build_nodes(cfg)
    system = assemble_gram(nodes, build_kernel(cfg), cfg.alpha, unit=cfg.width_unit)
    coeffs = nodal_coefficients(system)
    x = nodes.coords
    fine = np.linspace(x[0], x[-1], cfg.fine_points)
    rows = []
    for j in basis_columns(cfg):
        vals = eval_nrbf(system, coeffs, j, fine)
        rows.extend(("psi", j, float(xf), float(v)) for xf, v in zip(fine, vals))
        col = np.abs(coeffs.omega[:, j])
        rows.extend(("omega", j, float(xi), float(v)) for xi, v in zip(x, col))
    return rows


def _interp_target(cfg):
    if cfg.interp_function == "sin":
        return lambda x: np.sin(np.pi * x)
    if cfg.interp_function == "runge":
        return lambda x: 1.0 / (1.0 + 25.0 * x * x)
    return lambda x: ExactGaussian(0.0, 0.0, cfg.sigma)(x, 0.0)


def interpolation_dump(cfg):
    """``(x, f, rbf, nrbf)`` rows on a fine grid spanning the nodes."""
    nodes = build_nodes(cfg)
    system = assemble_gram(nodes, build_kernel(cfg), cfg.alpha, unit=cfg.width_unit)
    f = _interp_target(cfg)
    values = f(nodes.coords)
    fine = np.linspace(nodes.coords[0], nodes.coords[-1], cfg.fine_points)
    rbf = eval_interpolant(system, solve_weights(system, values), fine)
    nrbf = nrbf_interpolate(system, nodal_coefficients(system), values, fine)
    return [(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(fine, f(fine), rbf, nrbf)]


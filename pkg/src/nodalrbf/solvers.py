"""Implicit advection solvers on nodal radial basis functions and references.

All schemes advance ``d rho/dt + d(rho u)/dx = S`` by outer steps ``dT``.
The NRBF schemes treat one outer step as ``P`` backward-Euler sub-steps of
size ``dt = dT / P`` and evaluate ``(I - dt A)^-P`` either through the
truncated binomial series (``NRBF``, matrix-vector products only) or through
an LU factorization (``DNRBF``). ``RBF`` works on interpolation weights,
``CI`` is the implicit centered finite-difference scheme and ``LW`` explicit
Lax-Wendroff.
"""

from dataclasses import dataclass, field
from enum import Enum
import math
import warnings

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve, solve_banded

from .errors import (VARYING_VELOCITY_OBSTRUCTION, SeriesDivergenceError,
                     UnsupportedConfigurationError)
from .exact import ErrorSeries, max_error
from .interpolation import assemble_gram, kernel_derivative_matrix
from .nodal import (derivative_from_coefficients, derivative_matrix,
                    nodal_coefficients, truncate_coefficients)

MAX_TERMS = 64
MAX_DIRECT_SUBSTEPS = 10**6


class Scheme(str, Enum):
    NRBF = "NRBF"
    DNRBF = "DNRBF"
    RBF = "RBF"
    CI = "CI"
    LW = "LW"


@dataclass(frozen=True)
class SeriesConfig:
    """Inner step ``dt``, sub-cycle count ``P`` (``dT = P dt``) and truncations.

    ``M`` truncates the source series, ``N`` the solution series.
    """

    dt: float
    P: int
    M: int = 15
    N: int = 15

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.P) != self.P or self.P < 1:
            raise ValueError("P must be a positive integer")
        object.__setattr__(self, "P", int(self.P))
        for name in ("M", "N"):
            v = getattr(self, name)
            if not 1 <= v <= MAX_TERMS:
                raise ValueError(f"{name} must lie in [1, {MAX_TERMS}]")

    @classmethod
    def from_outer(cls, dT, P, M=15, N=15):
        P = int(P)
        return cls(dt=dT / P, P=P, M=M, N=N)

    @property
    def dT(self):
        return self.dt * self.P


@dataclass(frozen=True)
class AdvectionOperator:
    A: np.ndarray
    velocity: np.ndarray

    @property
    def n(self):
        return self.A.shape[0]


def advection_matrix(D, velocity):
    """``A_ij = -u_j D_ij``: the nodal flux ``rho_j u_j`` differentiated."""
    Dm = D.D if hasattr(D, "D") else np.asarray(D)
    u = np.asarray(velocity, dtype=float)
    if u.ndim == 0:
        u = np.full(Dm.shape[1], float(u))
    if u.shape != (Dm.shape[1],):
        raise ValueError("velocity must have one sample per node")
    return AdvectionOperator(A=-Dm * u[None, :], velocity=u)


def binomial_weight_g(P, k):
    """``C(P, k+1) / P^(k+1)`` as ``prod_{j<=k} (1 - j/P) / (k+1)!``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k >= P:
        return 0.0
    w = 1.0
    for j in range(k + 1):
        w *= (1.0 - j / P) / (j + 1)
    return w


def binomial_weight_rho(P, k):
    """``C(k+P-1, P-1) / P^k`` as ``prod_{j<k} (1 + j/P) / k!``."""
    if k < 0 or P < 1:
        raise ValueError("need k >= 0 and P >= 1")
    w = 1.0
    for j in range(k):
        w *= (1.0 + j / P) / (j + 1)
    return w


def _matvec(A, v):
    return (A.A if isinstance(A, AdvectionOperator) else A) @ v


def build_g_star(rho_prev, source, A, cfg):
    """Right-hand side of one outer step including the sub-cycled source.

    ``G* = rho_prev + sum_{k=0}^{M} (-1)^k w_k (dT A)^k S dT`` with
    ``w_k = binomial_weight_g(P, k)``.
    """
    rho_prev = np.asarray(rho_prev, dtype=float)
    if source is None:
        return rho_prev.copy()
    source = np.asarray(source, dtype=float)
    if source.shape != rho_prev.shape:
        raise ValueError("source and state differ in length")
    out = rho_prev.copy()
    if not np.any(source):
        return out
    dT = cfg.dT
    w = source * dT
    for k in range(cfg.M + 1):
        c = binomial_weight_g(cfg.P, k)
        if c == 0.0:
            break
        out += (-1) ** k * c * w
        w = dT * _matvec(A, w)
    return out


def nrbf_step_series(A, g_star, cfg):
    """``sum_{k=0}^{N} binomial_weight_rho(P, k) (dT A)^k g_star``.

    Only repeated matrix-vector products ``A (A v)`` are formed.
    """
    out = np.array(g_star, dtype=float)
    w = out.copy()
    dT = cfg.dT
    c = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, cfg.N + 1):
            w = dT * _matvec(A, w)
            c *= (1.0 + (k - 1) / cfg.P) / k
            out += c * w
            if not np.all(np.isfinite(out)):
                raise SeriesDivergenceError(k)
    return out


def _lu_checked(M):
    # singularity is reported below as an exception, not a warning
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(M, check_finite=False)
    if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0.0):
        raise LinAlgError("singular matrix in LU factorization")
    return lu, piv


def nrbf_step_direct(A, g, cfg):
    """``(I - dt A)^-P g`` by ``P`` LU back-substitutions."""
    if cfg.P > MAX_DIRECT_SUBSTEPS:
        raise ValueError(f"P={cfg.P} too large for sub-step iteration; use direct_propagator")
    Am = A.A if isinstance(A, AdvectionOperator) else np.asarray(A)
    fac = _lu_checked(np.eye(Am.shape[0]) - cfg.dt * Am)
    x = np.array(g, dtype=float)
    for _ in range(cfg.P):
        x = lu_solve(fac, x, check_finite=False)
    return x


def direct_propagator(A, cfg):
    """Explicit ``(I - dt A)^-P``: LU inverse raised to ``P`` by repeated squaring."""
    Am = A.A if isinstance(A, AdvectionOperator) else np.asarray(A)
    n = Am.shape[0]
    fac = _lu_checked(np.eye(n) - cfg.dt * Am)
    inv = lu_solve(fac, np.eye(n), check_finite=False)
    return np.linalg.matrix_power(inv, cfg.P)


def rbf_derivative_operator(system, velocity):
    """``B_ij = -u d/dx Phi_j(x_i)`` for a constant velocity ``u``."""
    u = np.asarray(velocity, dtype=float)
    if u.ndim > 0:
        if u.size and not np.all(u == u.flat[0]):
            raise UnsupportedConfigurationError(VARYING_VELOCITY_OBSTRUCTION)
        u = u.flat[0]
    x = system.nodes.coords
    return -float(u) * kernel_derivative_matrix(system.kernel, system.alpha, x, x)


def rbf_step(system, B, weights_prev, cfg):
    """Advance weights by ``P`` solves of ``[Phi - dt B] w_new = Phi w``."""
    if cfg.P > MAX_DIRECT_SUBSTEPS:
        raise ValueError(f"P={cfg.P} too large for sub-step iteration; use rbf_propagator")
    fac = _lu_checked(system.gram - cfg.dt * B)
    w = np.array(weights_prev, dtype=float)
    for _ in range(cfg.P):
        w = lu_solve(fac, system.gram @ w, check_finite=False)
    return w


def rbf_propagator(system, B, cfg):
    """``([Phi - dt B]^-1 Phi)^P`` formed explicitly."""
    fac = _lu_checked(system.gram - cfg.dt * B)
    T = lu_solve(fac, system.gram, check_finite=False)
    return np.linalg.matrix_power(T, cfg.P)


def ci_step(rho, u, dx, dT):
    """One implicit step of the fourth-difference centered scheme.

    Row ``i`` reads ``rho_i + c(-rho_{i+2} + 8 rho_{i+1} - 8 rho_{i-1} +
    rho_{i-2}) = rho_i^n`` with ``c = u dT / (12 dx)``; the two rows at each
    end are identity rows.
    """
    rho = np.asarray(rho, dtype=float)
    n = rho.size
    c = u * dT / (12.0 * dx)
    ab = np.zeros((5, n))
    ab[2, :] = 1.0
    # ab[2 + i - j, j] = M[i, j]
    rows = np.arange(2, n - 2)
    ab[2 - 2, rows + 2] = -c
    ab[2 - 1, rows + 1] = 8 * c
    ab[2 + 1, rows - 1] = -8 * c
    ab[2 + 2, rows - 2] = c
    try:
        return solve_banded((2, 2), ab, rho, check_finite=False)
    except LinAlgError as exc:
        raise LinAlgError(f"singular centered-implicit system: {exc}") from exc


def lw_step(rho, u, dx, dt):
    """One explicit Lax-Wendroff step on interior nodes (ends untouched)."""
    cfl = abs(u) * dt / dx
    if cfl > 1.0 + 1e-12:
        raise UnsupportedConfigurationError(f"Lax-Wendroff needs CFL <= 1, got {cfl:.6g}")
    rho = np.asarray(rho, dtype=float)
    out = rho.copy()
    a = u * dt / (2.0 * dx)
    b = (u * dt) ** 2 / (2.0 * dx * dx)
    out[1:-1] = (rho[1:-1] - a * (rho[2:] - rho[:-2])
                 + b * (rho[2:] - 2.0 * rho[1:-1] + rho[:-2]))
    return out


@dataclass(frozen=True)
class BoundarySpec:
    """Dirichlet data on the ``count`` outermost nodes of a side, or ``open``."""

    left: str = "dirichlet"
    right: str = "dirichlet"
    left_count: int = 4
    right_count: int = 4

    def __post_init__(self):
        for side in (self.left, self.right):
            if side not in ("dirichlet", "open"):
                raise ValueError(f"unknown boundary type {side!r}")
        if self.left_count < 0 or self.right_count < 0:
            raise ValueError("boundary counts must be non-negative")

    @classmethod
    def for_nodes(cls, nodes, left="dirichlet", right="dirichlet"):
        return cls(left=left, right=right, left_count=nodes.n_ghost_left + 1,
                   right_count=nodes.n_ghost_right + 1)

    def pinned_mask(self, n):
        if self.left_count + self.right_count > n:
            raise ValueError("boundary ranges exceed the node count")
        mask = np.zeros(n, dtype=bool)
        if self.left == "dirichlet":
            mask[:self.left_count] = True
        if self.right == "dirichlet" and self.right_count:
            mask[n - self.right_count:] = True
        return mask


def apply_boundary(rho, spec, coords, exact, t):
    """Overwrite Dirichlet nodes with ``exact(x, t)``; open sides untouched."""
    rho = np.array(rho, dtype=float)
    mask = spec.pinned_mask(rho.size)
    if mask.any():
        rho[mask] = exact(np.asarray(coords)[mask], t)
    return rho


@dataclass
class AdvectionProblem:
    """What to solve: nodes, kernel, velocity, exact solution and duration.

    ``velocity`` is a number, a callable of ``x`` or an array of nodal
    samples. ``error_mask`` overrides the nodes used for ``e_max``.
    """

    nodes: object
    exact: object
    t_final: float
    velocity: object = 1.0
    kernel: object = None
    alpha_in_spacings: float = 30.0
    width_unit: str = "spacing"
    source: object = None
    truncation: float = 0.0
    truncation_mode: str = "relative"
    lw_cfl: float = 0.8
    error_mask: object = None

    def velocity_samples(self):
        x = self.nodes.coords
        if callable(self.velocity):
            return np.asarray(self.velocity(x), dtype=float)
        u = np.asarray(self.velocity, dtype=float)
        return np.full(x.size, float(u)) if u.ndim == 0 else u

    def dT_cfl(self):
        return self.nodes.eps0 / np.max(np.abs(self.velocity_samples()))


@dataclass
class SolverRun:
    scheme: Scheme
    cfg: SeriesConfig
    errors: ErrorSeries
    state: np.ndarray
    states: list = field(default_factory=list)
    diverged: bool = False
    diverged_step: int = None
    message: str = ""

    @property
    def times(self):
        return self.errors.times

    @property
    def e_max(self):
        return self.errors.e_max

    def summary(self):
        """``(min, avg, max)`` of ``e_max`` over the outer steps after ``t = 0``."""
        vals = self.errors.e_max[1:] if len(self.errors) > 1 else self.errors.e_max
        vals = np.asarray(vals, dtype=float)
        return float(vals.min()), float(vals.mean()), float(vals.max())

    def error_at(self, t):
        ts = np.asarray(self.errors.times)
        return self.errors.e_max[int(np.argmin(np.abs(ts - t)))]


def error_mask(nodes, spec):
    """Interior nodes that are not pinned by Dirichlet data."""
    mask = ~nodes.is_ghost()
    return mask & ~spec.pinned_mask(nodes.n)


def _constant_velocity(problem, scheme):
    u = problem.velocity_samples()
    if not np.all(u == u[0]):
        if scheme is Scheme.RBF:
            raise UnsupportedConfigurationError(VARYING_VELOCITY_OBSTRUCTION)
        raise UnsupportedConfigurationError(f"{scheme.value} needs a constant velocity")
    return float(u[0])


def build_nrbf_operator(problem, system=None):
    """Kernel system and advection operator for the NRBF schemes."""
    if system is None:
        system = assemble_gram(problem.nodes, problem.kernel, problem.alpha_in_spacings,
                               unit=problem.width_unit)
    if problem.truncation > 0:
        coeffs = truncate_coefficients(nodal_coefficients(system), problem.truncation,
                                       mode=problem.truncation_mode)
        D = derivative_from_coefficients(system, coeffs)
    else:
        D = derivative_matrix(system)
    return system, advection_matrix(D, problem.velocity_samples())


def run_simulation(scheme, problem, cfg, spec, callback=None, keep_states=False):
    """Integrate from ``t = 0`` to ``problem.t_final`` in outer steps.

    The outer step ``cfg.dT`` is shrunk (``P`` kept) so that a whole number
    of steps lands on ``t_final``. Boundary data are imposed and ``e_max``
    recorded after every outer step; ``callback(record)`` receives a dict
    with ``t``, ``e_max``, ``running_min`` and ``running_avg``.
    """
    scheme = Scheme(scheme)
    nodes = problem.nodes
    x = nodes.coords
    exact = problem.exact
    n_steps = 0
    if problem.t_final > 0:
        n_steps = max(1, math.ceil(problem.t_final / cfg.dT - 1e-9))
        cfg = SeriesConfig.from_outer(problem.t_final / n_steps, cfg.P, cfg.M, cfg.N)
    dT = cfg.dT
    mask = problem.error_mask if problem.error_mask is not None else error_mask(nodes, spec)

    rho = apply_boundary(exact(x, 0.0), spec, x, exact, 0.0)
    errors = ErrorSeries()
    run = SolverRun(scheme=scheme, cfg=cfg, errors=errors, state=rho)
    stats = {"sum": 0.0, "min": np.inf, "count": 0}

    def record(t, state):
        e = max_error(state, exact(x, t), mask)
        errors.append(t, e)
        stats["sum"] += e
        stats["count"] += 1
        stats["min"] = min(stats["min"], e)
        if keep_states:
            run.states.append(state.copy())
        if callback is not None:
            callback({"t": t, "e_max": e, "running_min": stats["min"],
                      "running_avg": stats["sum"] / stats["count"]})

    record(0.0, rho)
    if n_steps == 0:
        return run

    step = _make_stepper(scheme, problem, cfg, spec)
    weights = step.init(rho) if hasattr(step, "init") else None
    for s in range(1, n_steps + 1):
        t_prev, t = (s - 1) * dT, s * dT
        try:
            if weights is not None:
                rho, weights = step(weights, t_prev, t)
            else:
                rho = step(rho, t_prev, t)
        except SeriesDivergenceError as exc:
            run.diverged, run.diverged_step = True, s
            run.message = str(SeriesDivergenceError(exc.term, s))
            break
        if not np.all(np.isfinite(rho)):
            run.diverged, run.diverged_step = True, s
            run.message = f"non-finite state at outer step {s}"
            break
        run.state = rho
        record(t, rho)
    return run


class _NRBFStepper:
    def __init__(self, problem, cfg, spec):
        _, self.op = build_nrbf_operator(problem)
        self.problem, self.cfg, self.spec = problem, cfg, spec

    def __call__(self, rho, t_prev, t):
        p = self.problem
        src = None if p.source is None else p.source(p.nodes.coords, t_prev)
        g = build_g_star(rho, src, self.op, self.cfg)
        new = nrbf_step_series(self.op, g, self.cfg)
        return apply_boundary(new, self.spec, p.nodes.coords, p.exact, t)


class _DirectStepper:
    def __init__(self, problem, cfg, spec):
        if problem.source is not None:
            raise UnsupportedConfigurationError("DNRBF runs take no source term")
        _, op = build_nrbf_operator(problem)
        self.T = direct_propagator(op, cfg)
        self.problem, self.spec = problem, spec

    def __call__(self, rho, t_prev, t):
        p = self.problem
        return apply_boundary(self.T @ rho, self.spec, p.nodes.coords, p.exact, t)


class _RBFStepper:
    """Weights are advanced; values are rebuilt each step for the boundary."""

    def __init__(self, problem, cfg, spec):
        if problem.source is not None:
            raise UnsupportedConfigurationError("RBF runs take no source term")
        u = _constant_velocity(problem, Scheme.RBF)
        self.system = assemble_gram(problem.nodes, problem.kernel, problem.alpha_in_spacings,
                                    unit=problem.width_unit)
        B = rbf_derivative_operator(self.system, u)
        self.T = rbf_propagator(self.system, B, cfg)
        self.problem, self.spec = problem, spec

    def init(self, rho):
        return self.system.solve(rho)

    def __call__(self, weights, t_prev, t):
        p = self.problem
        rho = self.system.gram @ (self.T @ weights)
        rho = apply_boundary(rho, self.spec, p.nodes.coords, p.exact, t)
        return rho, self.system.solve(rho)


class _CIStepper:
    def __init__(self, problem, cfg, spec):
        self.u = _constant_velocity(problem, Scheme.CI)
        self.dx = problem.nodes.spacing
        self.problem, self.cfg, self.spec = problem, cfg, spec

    def __call__(self, rho, t_prev, t):
        p = self.problem
        x = p.nodes.coords
        rhs = apply_boundary(rho, self.spec, x, p.exact, t)
        new = ci_step(rhs, self.u, self.dx, self.cfg.dT)
        return apply_boundary(new, self.spec, x, p.exact, t)


class _LWStepper:
    def __init__(self, problem, cfg, spec):
        self.u = _constant_velocity(problem, Scheme.LW)
        self.dx = problem.nodes.spacing
        limit = problem.lw_cfl * self.dx / abs(self.u) if self.u else cfg.dT
        self.substeps = max(1, math.ceil(cfg.dT / limit - 1e-9))
        self.problem, self.cfg, self.spec = problem, cfg, spec

    def __call__(self, rho, t_prev, t):
        p = self.problem
        x = p.nodes.coords
        h = (t - t_prev) / self.substeps
        for k in range(1, self.substeps + 1):
            rho = lw_step(rho, self.u, self.dx, h)
            rho = apply_boundary(rho, self.spec, x, p.exact, t_prev + k * h)
        return rho


_STEPPERS = {
    Scheme.NRBF: _NRBFStepper,
    Scheme.DNRBF: _DirectStepper,
    Scheme.RBF: _RBFStepper,
    Scheme.CI: _CIStepper,
    Scheme.LW: _LWStepper,
}


def _make_stepper(scheme, problem, cfg, spec):
    if scheme in (Scheme.NRBF, Scheme.DNRBF, Scheme.RBF) and problem.kernel is None:
        raise ValueError(f"{scheme.value} needs a kernel")
    return _STEPPERS[scheme](problem, cfg, spec)

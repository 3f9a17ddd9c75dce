"""Acceptance criteria: each check returns a :class:`CriterionResult`.

The solver criteria (5-11) run full simulations and take seconds each;
results of shared runs are cached for the lifetime of the process.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import ExperimentConfig
from .errors import UnsupportedConfigurationError
from .exact import VelocityProfile, transit_time
from .experiments import build_nodes, run_config, variable_velocity_run, weight_obstruction
from .interpolation import assemble_gram, eval_interpolant, solve_weights
from .kernels import Polynomial, apply_operator_I, build_wendland, wendland
from .nodal import (derivative_matrix, inner_product, nodal_coefficients, nrbf_derivative_at,
                    nrbf_interpolate)
from .nodes import build_node_set
from .solvers import (SeriesConfig, advection_matrix, binomial_weight_g, binomial_weight_rho,
                      build_g_star, nrbf_step_series, rbf_derivative_operator)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    checks: list = field(default_factory=list)

    def add(self, name, ok, detail):
        self.checks.append((name, bool(ok), detail))
        self.passed = self.passed and bool(ok)

    def line(self):
        state = "PASS" if self.passed else "FAIL"
        parts = "; ".join(f"{n}: {d}{'' if ok else ' [fail]'}" for n, ok, d in self.checks)
        return f"criterion {self.number:2d} {state} {self.title} | {parts}"


def _result(number, title):
    return CriterionResult(number, title, True)


def _random_smooth(rng, n_modes=4):
    amps = rng.normal(size=n_modes)
    freqs = rng.uniform(0.2, 1.5, size=n_modes)
    phases = rng.uniform(0, 2 * np.pi, size=n_modes)
    return lambda x: sum(a * np.sin(f * np.asarray(x) + p) for a, f, p in zip(amps, freqs, phases))


def criterion_1():
    res = _result(1, "cardinality and orthonormality of the nodal basis")
    nodes = build_node_set((-1.0, 1.0), 101)
    worst = 0.0
    for q in (1, 2, 3, 4):
        for a in (3.0, 7.0, 15.0):
            system = assemble_gram(nodes, wendland(3, q), a)
            omega = nodal_coefficients(system).omega
            # Psi_j(x_i) = sum_k Omega_kj phi(|x_k - x_i|)
            worst = max(worst, float(np.max(np.abs(system.gram @ omega - np.eye(nodes.n)))))
    res.add("max|Psi_j(x_i) - delta_ij|", worst <= 1e-8, f"{worst:.2e} <= 1e-08")
    eye = np.eye(nodes.n)
    exact = all(inner_product(eye[i], eye[j]) == float(i == j)
                for i in range(0, nodes.n, 5) for j in range(0, nodes.n, 5))
    res.add("inner_product(e_i, e_j) == delta_ij", exact, "exact" if exact else "mismatch")
    return res


def criterion_2():
    res = _result(2, "nodal and weight interpolants coincide")
    rng = np.random.default_rng(2)
    nodes = build_node_set((-1.0, 1.0), 81)
    worst = 0.0
    # the two routes differ by about cond(gram) * eps; these widths keep cond <= 1e5
    for q, a in ((1, 5.0), (3, 10.0), (4, 10.0)):
        system = assemble_gram(nodes, wendland(3, q), a)
        coeffs = nodal_coefficients(system)
        f = _random_smooth(rng)
        vals = f(nodes.coords)
        x = rng.uniform(-1.0, 1.0, 100)
        gap = np.max(np.abs(nrbf_interpolate(system, coeffs, vals, x)
                            - eval_interpolant(system, solve_weights(system, vals), x)))
        worst = max(worst, float(gap / np.max(np.abs(vals))))
    res.add("max|fbar - fbarbar| / max|f|", worst <= 1e-10, f"{worst:.2e} <= 1e-10")
    return res


def _piecewise_gauss(fn, breaks, order=16):
    t, w = leggauss(order)
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi > lo:
            xm, xr = 0.5 * (hi + lo), 0.5 * (hi - lo)
            total += xr * float(np.dot(w, fn(xm + xr * t)))
    return total


def criterion_3():
    res = _result(3, "conservative derivative integrates to boundary values")
    rng = np.random.default_rng(3)
    a, b = -1.0, 1.0
    nodes = build_node_set((a, b), 41, ghost_count=2)
    system = assemble_gram(nodes, wendland(3, 3), 6.0)
    coeffs = nodal_coefficients(system)
    x = nodes.coords
    # the integrand is polynomial between these points
    breaks = np.unique(np.clip(np.concatenate([x, x - system.alpha, x + system.alpha, [a, b]]), a, b))
    worst = 0.0
    for _ in range(5):
        vals = _random_smooth(rng)(x)
        integral = _piecewise_gauss(lambda s: nrbf_derivative_at(system, coeffs, vals, s), breaks)
        ends = nrbf_interpolate(system, coeffs, vals, np.array([a, b]))
        worst = max(worst, abs(integral - (ends[1] - ends[0])))
    res.add("|int d~f - (fbar(b) - fbar(a))|", worst <= 1e-8, f"{worst:.2e} <= 1e-08")
    return res


def _small_operator(n=20, q=3, alpha=5.0):
    nodes = build_node_set((-1.0, 1.0), n)
    system = assemble_gram(nodes, wendland(3, q), alpha)
    return advection_matrix(derivative_matrix(system), 1.0)


def criterion_4():
    res = _result(4, "series machinery")
    xv, P = 0.1, 10
    lhs = sum((1 - xv) ** k for k in range(P))
    rhs = sum((-1) ** k * comb(P, k + 1) * xv ** k for k in range(P))
    res.add("scalar identity", abs(lhs - rhs) <= 1e-12, f"{abs(lhs - rhs):.1e} <= 1e-12")

    op = _small_operator()
    A = op.A
    n = A.shape[0]
    rng = np.random.default_rng(4)
    rho0, S = rng.normal(size=n), rng.normal(size=n)
    norm = np.max(np.sum(np.abs(A), axis=1))
    worst = 0.0
    for P in (2, 4, 8):
        dT = 0.1 / norm
        dt = dT / P
        M_inv = np.linalg.inv(np.eye(n) - dt * A)
        stepped = rho0.copy()
        for _ in range(P):
            stepped = M_inv @ (stepped + S * dt)
        cfg = SeriesConfig.from_outer(dT, P, M=64, N=64)
        series = nrbf_step_series(op, build_g_star(rho0, S, op, cfg), cfg)
        worst = max(worst, float(np.max(np.abs(series - stepped)) / np.max(np.abs(stepped))))
    res.add("P-fold step vs large-step series", worst <= 1e-10, f"{worst:.1e} <= 1e-10")

    worst = 0.0
    for P in range(1, 101):
        for k in range(21):
            g_exact = Fraction(comb(P, k + 1), P ** (k + 1))
            r_exact = Fraction(comb(k + P - 1, P - 1), P ** k)
            for got, ref in ((binomial_weight_g(P, k), g_exact), (binomial_weight_rho(P, k), r_exact)):
                if ref == 0:
                    err = abs(got)
                else:
                    err = abs(Fraction(got) - ref) / ref
                worst = max(worst, float(err))
    res.add("binomial product forms vs exact", worst <= 1e-13, f"{worst:.1e} <= 1e-13")
    big = [binomial_weight_g(10**10, k) for k in range(64)] + [binomial_weight_rho(10**10, k) for k in range(65)]
    res.add("finite at P = 1e10", all(np.isfinite(big)), "finite")
    return res


BASELINE = ExperimentConfig()


@lru_cache(maxsize=None)
def _run(**kw):
    return run_config(BASELINE.with_values(**kw))


def plateau(run, t0=0.5):
    """Median ``e_max`` after the start-up transient."""
    t = np.asarray(run.times)
    return float(np.median(np.asarray(run.e_max)[t >= t0]))


def increasing_until(run, t_end=4.0):
    """Unit-time bin means of ``e_max`` strictly increase on ``(0, t_end]``."""
    t, e = np.asarray(run.times), np.asarray(run.e_max)
    means = [e[(t > k) & (t <= k + 1)].mean() for k in range(int(t_end))]
    slope = np.polyfit(t[(t > 0) & (t <= t_end)], e[(t > 0) & (t <= t_end)], 1)[0]
    return bool(np.all(np.diff(means) > 0) and slope > 0), means


def criterion_5():
    res = _result(5, "constant-velocity comparison of solvers")
    for scheme in ("LW", "CI"):
        ok, means = increasing_until(_run(scheme=scheme))
        res.add(f"{scheme} increasing to t=4", ok, "bins " + ", ".join(f"{m:.2e}" for m in means))
    rbf = plateau(_run(scheme="RBF", ratio=3_000_000))
    nrbf_run = _run(scheme="NRBF")
    nrbf = plateau(nrbf_run)
    best = plateau(_run(scheme="NRBF", alpha=60.0))
    res.add("RBF plateau", 2e-5 <= rbf <= 5e-4, f"{rbf:.2e} in [2e-05, 5e-04]")
    res.add("RBF/NRBF", rbf / nrbf >= 5, f"{rbf / nrbf:.1f} >= 5")
    res.add("RBF/NRBF_best", rbf / best >= 10, f"{rbf / best:.0f} >= 10")
    flat = nrbf_run.error_at(5.5) / nrbf_run.error_at(0.5)
    res.add("NRBF e(5.5)/e(0.5)", flat <= 2, f"{flat:.2f} <= 2")
    return res


def criterion_6():
    res = _result(6, "series and direct NRBF agree")
    a = _run(scheme="NRBF", kernel_q=3)
    b = _run(scheme="DNRBF", kernel_q=3)
    ok_run = not (a.diverged or b.diverged)
    ratio = a.e_max[-1] / b.e_max[-1]
    res.add("final e_max NRBF/DNRBF", ok_run and 0.5 <= ratio <= 2, f"{ratio:.4f} in [0.5, 2]")
    return res


def criterion_7():
    res = _result(7, "stability beyond the CFL limit")
    for q, mult in ((4, 3.0), (3, 4.0)):
        run = _run(scheme="NRBF", kernel_q=q, cfl_multiple=mult, M=32, N=32)
        level = plateau(run)
        peak = float(np.max(run.e_max))
        ok = not run.diverged and np.isfinite(peak) and peak <= 10 * level
        res.add(f"q={q} at {mult:g} x CFL", ok, f"max {peak:.2e} <= 10 x plateau {level:.2e}")
    return res


SWEEP = BASELINE.with_values(right="open")


def criterion_8():
    res = _result(8, "width and smoothness sweep")
    lo = run_config(SWEEP.with_values(alpha=10.0)).summary()[1]
    hi = run_config(SWEEP.with_values(alpha=60.0)).summary()[1]
    decades = np.log10(lo / hi)
    res.add("alpha 10 -> 60 e_avg drop", decades >= 3, f"{decades:.2f} decades >= 3")
    avgs = [run_config(SWEEP.with_values(alpha=5.0, kernel_q=q)).summary()[1] for q in (1, 2, 3, 4)]
    spread = max(avgs) / min(avgs)
    res.add("q spread at alpha=5", spread <= 3, f"{spread:.2f} <= 3")
    return res


def criterion_9():
    res = _result(9, "sub-cycling ratio sweep")
    ratios = (10**2, 10**3, 10**4, 10**5, 10**6)
    cons = []
    for P in ratios:
        lo, avg, _ = run_config(SWEEP.with_values(ratio=P)).summary()
        cons.append(avg / lo)
    res.add("smallest ratio non-conservative", cons[0] >= 10, f"e_avg/e_min {cons[0]:.1f} >= 10")
    res.add("largest ratio conservative", cons[-1] <= 2, f"e_avg/e_min {cons[-1]:.2f} <= 2")
    res.add("monotone transition", bool(np.all(np.diff(cons) < 0)),
            ", ".join(f"{c:.3g}" for c in cons))
    return res


JITTER = ExperimentConfig(n_nodes=200, alpha=20.0, seed=42, t_final=10.0, right="open")


def criterion_10():
    res = _result(10, "jittered nodes")
    finals, steady, complete = {}, {}, True
    for j in (0.0, 0.1, 0.2, 0.3):
        cfg = JITTER.with_values(jitter=j)
        run = run_config(cfg)
        complete = complete and not run.diverged and np.all(np.isfinite(run.state))
        finals[j] = run.e_max[-1]
        interior = ~build_nodes(cfg).is_ghost()
        steady[j] = float(np.max(np.abs(run.state[interior] - 1.0)))
    res.add("all runs complete", complete, "no divergence")
    worst = max(finals.values()) / finals[0.0]
    res.add("final error vs unjittered", worst <= 10,
            f"{worst:.1f} <= 10 (" + ", ".join(f"{k:g}: {v:.1e}" for k, v in finals.items()) + ")")
    dev = max(steady.values())
    res.add("steady state near 1", dev <= 1e-2, f"max|rho - 1| {dev:.1e} <= 1e-02")
    return res


VARIABLE = ExperimentConfig(domain_a=-4.0, domain_b=4.0, gamma=0.5, right="open")


def _transit_oracle(profile, a, b, steps=10**6):
    """Fixed-step RK4 on ``dt/dx = 1/u(x)`` (reduces to composite Simpson)."""
    h = (b - a) / steps
    x = a + h * np.arange(steps)
    k1 = 1.0 / profile(x)
    k23 = 1.0 / profile(x + 0.5 * h)
    k4 = 1.0 / profile(x + h)
    return float(np.sum(h / 6.0 * (k1 + 4.0 * k23 + k4)))


def criterion_11():
    res = _result(11, "spatially varying velocity")
    var = variable_velocity_run(VARIABLE)
    const = variable_velocity_run(VARIABLE.with_values(gamma=0.0))
    ratio = var.e_final / const.e_final
    ok = var.status == "ok" and const.status == "ok" and 0.1 <= ratio <= 10
    res.add("e_final varying/constant", ok,
            f"{var.e_final:.2e}/{const.e_final:.2e} = {ratio:.2f} in [0.1, 10]")
    profile = VelocityProfile(VARIABLE.xc, VARIABLE.gamma, VARIABLE.sigma_u)
    t_ode = transit_time(profile, -4.0, 4.0)
    t_ref = _transit_oracle(profile, -4.0, 4.0)
    rel = abs(t_ode - t_ref) / t_ref
    res.add("ballistic transit vs fixed-step oracle", rel <= 1e-8, f"{rel:.1e} <= 1e-08")
    try:
        run_config(VARIABLE.with_values(scheme="RBF", t_final=0.1))
        rejected = False
    except UnsupportedConfigurationError:
        rejected = True
    try:
        nodes = build_node_set((-4.0, 4.0), 11)
        rbf_derivative_operator(assemble_gram(nodes, wendland(3, 3), 3.0), profile(nodes.coords))
        rejected = False
    except UnsupportedConfigurationError:
        pass
    res.add("RBF rejects varying velocity", rejected, "obstruction error raised")
    gap = weight_obstruction()
    res.add("weights of rho*u vs omega_rho*u", gap > 1e-3, f"relative gap {gap:.2e} > 1e-03")
    return res


def criterion_12():
    res = _result(12, "exact kernel construction")
    k31 = build_wendland(3, 1)
    closed = Polynomial.one_minus_r_power(4) * Polynomial([1, 4])
    same = k31.poly == closed and wendland(3, 1).poly == closed
    res.add("psi_{3,1} == (1-r)^4 (4r+1)", same, "exact" if same else "mismatch")
    ok = True
    f = Polynomial.one_minus_r_power(3)
    for _ in range(4):
        g = apply_operator_I(f)
        ok = ok and g.derivative() == -(f.times_r())
        f = g
    res.add("d_r(I f) == -r f for q = 1..4", ok, "exact" if ok else "mismatch")
    return res


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}


def run_all(only=None):
    numbers = sorted(only) if only else sorted(CRITERIA)
    return [CRITERIA[i]() for i in numbers]

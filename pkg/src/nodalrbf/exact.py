"""Exact solutions, velocity profiles and error statistics."""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp


@dataclass(frozen=True)
class ExactGaussian:
    """Pulse ``1 + exp(-((x - x0 - u t) / sigma)^2)`` moving at speed ``u``."""

    x0: float
    u: float = 1.0
    sigma: float = 0.2

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def __call__(self, x, t):
        return gaussian_value(self, x, t)


def gaussian_value(g, x, t):
    s = (np.asarray(x, dtype=float) - g.x0 - g.u * t) / g.sigma
    return 1.0 + np.exp(-s * s)


@dataclass(frozen=True)
class VelocityProfile:
    """``u(x) = 1 - gamma * exp(-((x - xc) / sigma_u)^2)``."""

    xc: float = 0.0
    gamma: float = 0.5
    sigma_u: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.sigma_u <= 0:
            raise ValueError("sigma_u must be positive")

    def __call__(self, x):
        return velocity_value(self, x)


def velocity_value(p, x):
    s = (np.asarray(x, dtype=float) - p.xc) / p.sigma_u
    return 1.0 - p.gamma * np.exp(-s * s)


def _ballistic(p, x_start, t0, t_end, **kw):
    sol = solve_ivp(lambda t, y: velocity_value(p, y), (t0, t_end), [x_start],
                    method="DOP853", rtol=1e-12, atol=1e-12, **kw)
    if not sol.success:
        raise RuntimeError(f"ballistic integration failed: {sol.message}")
    return sol


def ballistic_peak(p, x_start, t0, t):
    """Position at time ``t`` of a point released at ``x_start`` at ``t0``."""
    if t < t0:
        raise ValueError("t must not precede t0")
    if t == t0:
        return float(x_start)
    return float(_ballistic(p, x_start, t0, t).y[0, -1])


def transit_time(p, x_start, x_end):
    """Time for the ballistic trajectory to travel from ``x_start`` to ``x_end``."""
    if x_end < x_start:
        raise ValueError("x_end must lie right of x_start")

    def hit(t, y):
        return y[0] - x_end

    hit.terminal = True
    # u >= 1 - gamma, so the crossing happens before this bound
    t_max = 2.0 * (x_end - x_start) / (1.0 - p.gamma) + 1.0
    sol = _ballistic(p, x_start, 0.0, t_max, events=hit)
    if not sol.t_events[0].size:
        raise RuntimeError("ballistic trajectory did not reach x_end")
    return float(sol.t_events[0][0])


@dataclass(frozen=True)
class BallisticGaussian:
    """Gaussian pulse whose peak follows the ballistic trajectory of ``profile``.

    Exact for the advection equation only where the velocity equals 1.
    """

    profile: VelocityProfile
    x0: float
    sigma: float = 0.2
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def peak(self, t):
        if t not in self._cache:
            self._cache[t] = ballistic_peak(self.profile, self.x0, 0.0, t)
        return self._cache[t]

    def __call__(self, x, t):
        s = (np.asarray(x, dtype=float) - self.peak(t)) / self.sigma
        return 1.0 + np.exp(-s * s)


def max_error(numeric, exact_values, mask=None):
    numeric = np.asarray(numeric, dtype=float)
    exact_values = np.asarray(exact_values, dtype=float)
    if numeric.shape != exact_values.shape:
        raise ValueError("numeric and exact vectors differ in length")
    diff = np.abs(numeric - exact_values)
    if mask is not None:
        diff = diff[np.asarray(mask, dtype=bool)]
    return float(diff.max()) if diff.size else 0.0


@dataclass
class ErrorSeries:
    times: list = field(default_factory=list)
    e_max: list = field(default_factory=list)

    def append(self, t, e):
        self.times.append(float(t))
        self.e_max.append(float(e))

    def __len__(self):
        return len(self.times)

    @property
    def summary(self):
        return series_stats(self)


def series_stats(e):
    """``(min, avg, max)`` of the recorded errors."""
    vals = np.asarray(e.e_max, dtype=float)
    if vals.size == 0:
        raise ValueError("empty error series")
    return float(vals.min()), float(vals.mean()), float(vals.max())

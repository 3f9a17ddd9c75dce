"""Gram matrix assembly, Cholesky factorization and plain RBF interpolation."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from .errors import NotPositiveDefiniteError


def kernel_matrix(kernel, alpha, x_eval, centers):
    """``K[m, j] = phi(|x_eval[m] - centers[j]| / alpha)``."""
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    r = np.abs(x_eval[:, None] - centers[None, :]) / alpha
    return kernel.values(r)


def kernel_derivative_matrix(kernel, alpha, x_eval, centers):
    """``K[m, j] = d/dx phi(|x - centers[j]| / alpha)`` at ``x = x_eval[m]``.

    Uses ``d/dx |x - c| = sign(x - c)``, taken as 0 when ``x = c``.
    """
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    diff = x_eval[:, None] - centers[None, :]
    return kernel.derivatives(np.abs(diff) / alpha) * np.sign(diff) / alpha


@dataclass(frozen=True)
class KernelSystem:
    nodes: object
    kernel: object
    alpha: float
    gram: np.ndarray
    factor: np.ndarray

    @property
    def n(self):
        return self.gram.shape[0]

    @property
    def factor_diagonal_range(self):
        d = np.diag(self.factor)
        return float(d.min()), float(d.max())

    def solve(self, rhs):
        """Solve ``gram @ X = rhs`` by forward/back substitution."""
        return cho_solve((self.factor, True), rhs, check_finite=False)


def cholesky_lower(gram):
    """Lower Cholesky factor; raises :class:`NotPositiveDefiniteError`."""
    factor, info = dpotrf(gram, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return factor


def assemble_gram(nodes, kernel, alpha_in_spacings, unit="spacing"):
    """Assemble and factorize ``[phi(|x_i - x_j| / alpha)]``.

    ``alpha = alpha_in_spacings * nodes.spacing`` by default (nominal grid
    step); ``unit="eps0"`` measures the width in minimum node gaps instead.
    The two agree on uniform grids.
    """
    if alpha_in_spacings <= 0:
        raise ValueError("alpha_in_spacings must be positive")
    if unit == "spacing":
        base = nodes.spacing
    elif unit == "eps0":
        base = nodes.eps0
    else:
        raise ValueError(f"unknown width unit {unit!r}")
    alpha = float(alpha_in_spacings) * base
    x = nodes.coords
    gram = kernel_matrix(kernel, alpha, x, x)
    factor = cholesky_lower(gram)
    return KernelSystem(nodes=nodes, kernel=kernel, alpha=alpha, gram=gram, factor=factor)


def _check_len(system, vec, what):
    vec = np.asarray(vec, dtype=float)
    if vec.shape[0] != system.n:
        raise ValueError(f"{what} has length {vec.shape[0]}, expected {system.n}")
    return vec


def solve_weights(system, samples):
    """Interpolation weights ``omega`` with ``gram @ omega = samples``."""
    samples = _check_len(system, samples, "samples")
    return system.solve(samples)


def eval_interpolant(system, weights, x):
    """``sum_j omega_j phi(|x - x_j| / alpha)`` at scalar or array ``x``."""
    weights = _check_len(system, weights, "weights")
    out = kernel_matrix(system.kernel, system.alpha, x, system.nodes.coords) @ weights
    return float(out[0]) if np.ndim(x) == 0 else out

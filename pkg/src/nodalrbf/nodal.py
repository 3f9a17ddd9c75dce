"""Nodal radial basis functions: cardinal interpolants of the nodal impulses.

``Psi_j(x) = sum_i Omega_ij phi(|x_i - x| / alpha)`` with ``Omega`` the inverse
Gram matrix, so ``Psi_j(x_i) = delta_ij``. The solvers only ever need the
nodal derivative samples ``D_ij = d/dx Psi_j(x_i)``, which are obtained from
triangular solves against the Cholesky factor; ``Omega`` itself is formed
only for inspection and truncation studies.
"""

from dataclasses import dataclass

import numpy as np

from .interpolation import kernel_derivative_matrix, kernel_matrix


@dataclass(frozen=True)
class NodalCoefficients:
    omega: np.ndarray
    truncation_threshold: float = 0.0

    @property
    def sparsity(self):
        return float(np.mean(self.omega == 0.0))


@dataclass(frozen=True)
class NodalDerivativeOperator:
    D: np.ndarray
    # R[m, i] = d/dx phi(|x - x_i| / alpha) at x = x_m
    kernel_derivatives: np.ndarray = None

    def __matmul__(self, values):
        return self.D @ values


def _vector(system, values, what="values"):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != system.n:
        raise ValueError(f"{what} has length {values.shape[0]}, expected {system.n}")
    return values


def nodal_coefficients(system):
    """``Omega = gram^-1`` column by column from unit right-hand sides."""
    return NodalCoefficients(omega=system.solve(np.eye(system.n)))


def eval_nrbf(system, coeffs, j, x):
    """``Psi_j`` at scalar or array ``x``."""
    if not 0 <= j < system.n:
        raise IndexError(f"node index {j} out of range")
    out = kernel_matrix(system.kernel, system.alpha, x, system.nodes.coords) @ coeffs.omega[:, j]
    return float(out[0]) if np.ndim(x) == 0 else out


def derivative_matrix(system):
    """Dense ``D[i, j] = d/dx Psi_j(x_i)`` without forming the inverse Gram.

    ``D = R gram^-1`` with ``R`` the kernel-derivative matrix, so
    ``gram @ D.T = R.T`` is solved with the Cholesky factor.
    """
    x = system.nodes.coords
    R = kernel_derivative_matrix(system.kernel, system.alpha, x, x)
    D = system.solve(R.T).T
    return NodalDerivativeOperator(D=np.ascontiguousarray(D), kernel_derivatives=R)


def derivative_from_coefficients(system, coeffs):
    """``D = R @ Omega`` for a given (possibly truncated) coefficient table."""
    x = system.nodes.coords
    R = kernel_derivative_matrix(system.kernel, system.alpha, x, x)
    return NodalDerivativeOperator(D=R @ coeffs.omega, kernel_derivatives=R)


def nrbf_interpolate(system, coeffs, values, x):
    """``sum_i f(x_i) Psi_i(x)``."""
    values = _vector(system, values)
    out = kernel_matrix(system.kernel, system.alpha, x, system.nodes.coords) @ (coeffs.omega @ values)
    return float(out[0]) if np.ndim(x) == 0 else out


def nrbf_derivative_at(system, coeffs, values, x):
    """Continuous conservative derivative ``sum_i f(x_i) d/dx Psi_i(x)``."""
    values = _vector(system, values)
    K = kernel_derivative_matrix(system.kernel, system.alpha, x, system.nodes.coords)
    out = K @ (coeffs.omega @ values)
    return float(out[0]) if np.ndim(x) == 0 else out


def inner_product(f_values, g_values):
    """``sum_k |f(x_k) g(x_k)|`` over nodal samples."""
    f_values = np.asarray(f_values, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    if f_values.shape != g_values.shape:
        raise ValueError("inner product needs equal-length vectors")
    return float(np.sum(np.abs(f_values * g_values)))


def conservative_derivative(system, D, values):
    """Nodal samples of the conservative derivative, ``D @ values``."""
    return D.D @ _vector(system, values)


def truncate_coefficients(coeffs, threshold, mode="relative"):
    """Zero small entries of ``Omega``.

    ``mode="relative"`` drops ``|Omega_ij| < threshold * max_i |Omega_ij|``
    column by column; ``mode="absolute"`` drops ``|Omega_ij| < threshold``.
    The largest entry of every column is always kept.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    om = coeffs.omega
    mag = np.abs(om)
    if mode == "relative":
        cut = threshold * mag.max(axis=0, keepdims=True)
    elif mode == "absolute":
        cut = np.full((1, om.shape[1]), float(threshold))
    else:
        raise ValueError(f"unknown truncation mode {mode!r}")
    keep = mag >= cut
    keep[np.argmax(mag, axis=0), np.arange(om.shape[1])] = True
    return NodalCoefficients(omega=np.where(keep, om, 0.0), truncation_threshold=float(threshold))

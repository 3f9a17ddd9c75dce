"""Exception types raised by the library."""

from numpy.linalg import LinAlgError


class NotPositiveDefiniteError(LinAlgError):
    """Cholesky factorization of a Gram matrix hit a non-positive pivot."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        if message is None:
            message = (f"Gram matrix is not positive definite or too ill-conditioned "
                       f"(non-positive pivot at index {pivot})")
        super().__init__(message)


class SeriesDivergenceError(FloatingPointError):
    """A truncated matrix series produced a non-finite term."""

    def __init__(self, term, step=None):
        self.term = term
        self.step = step
        where = f" at outer step {step}" if step is not None else ""
        super().__init__(f"series diverged: non-finite value in term k={term}{where}")


class UnsupportedConfigurationError(ValueError):
    pass


VARYING_VELOCITY_OBSTRUCTION = (
    "the weight-space RBF solver cannot handle a spatially varying velocity: "
    "the weights of rho*u are not the nodal products omega_rho_j * u_j, so the "
    "implicit update is not a linear system in the weights"
)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

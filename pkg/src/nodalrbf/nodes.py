"""One-dimensional node sets with ghost nodes and optional random jitter."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NodeSet:
    """Ordered 1-D nodes.

    ``coords`` holds the left ghosts, then the ``n_interior`` nodes covering
    ``interval`` (endpoints included), then the right ghosts. ``spacing`` is
    the nominal grid step ``(b - a) / (n_interior - 1)`` and ``eps0`` the
    smallest gap between consecutive nodes.
    """

    coords: np.ndarray
    n_interior: int
    n_ghost_left: int
    n_ghost_right: int
    interval: tuple
    spacing: float
    eps0: float

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size != self.n_interior + self.n_ghost_left + self.n_ghost_right:
            raise ValueError("coords length does not match node counts")
        gaps = np.diff(c)
        if c.size > 1 and not np.all(gaps > 0):
            raise ValueError("node coordinates must be strictly increasing")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.size

    @property
    def interior(self):
        """Slice selecting the nodes on the physical interval."""
        return slice(self.n_ghost_left, self.n_ghost_left + self.n_interior)

    @property
    def left_index(self):
        return self.n_ghost_left

    @property
    def right_index(self):
        return self.n_ghost_left + self.n_interior - 1

    def is_ghost(self):
        mask = np.ones(self.n, dtype=bool)
        mask[self.interior] = False
        return mask


def distance(x, y):
    """Euclidean distance in one dimension."""
    return abs(x - y)


def build_node_set(interval, n, ghost_count=0, jitter_fraction=0.0, seed=0):
    """Uniform nodes on ``interval`` plus ``ghost_count`` ghosts per side.

    Interior (non-endpoint) nodes are displaced by independent uniform offsets
    in ``[-jitter_fraction*h, jitter_fraction*h]`` drawn from numpy's PCG64
    generator seeded with ``seed``. Endpoints and ghosts are never jittered;
    ghosts sit at the nominal spacing ``h`` beyond each endpoint.
    """
    a, b = float(interval[0]), float(interval[1])
    if n < 2:
        raise ValueError("need at least two nodes")
    if not b > a:
        raise ValueError("interval must satisfy b > a")
    if ghost_count < 0:
        raise ValueError("ghost_count must be non-negative")
    if not 0.0 <= jitter_fraction < 0.5:
        raise ValueError("jitter_fraction must lie in [0, 0.5)")

    h = (b - a) / (n - 1)
    inner = a + h * np.arange(n)
    if jitter_fraction > 0 and n > 2:
        rng = np.random.Generator(np.random.PCG64(seed))
        inner[1:-1] += rng.uniform(-jitter_fraction * h, jitter_fraction * h, n - 2)
    left = a - h * np.arange(ghost_count, 0, -1)
    right = b + h * np.arange(1, ghost_count + 1)
    coords = np.concatenate([left, inner, right])
    gaps = np.diff(coords)
    if not np.all(gaps > 0):
        raise ValueError("jittered nodes crossed; reduce jitter_fraction")
    return NodeSet(coords=coords, n_interior=n, n_ghost_left=ghost_count,
                   n_ghost_right=ghost_count, interval=(a, b), spacing=h,
                   eps0=float(gaps.min()))

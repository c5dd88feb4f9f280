"""Simple cubic lattice: grids, Bloch wave vectors and Brillouin-zone paths.

Wave vectors are dimensionless: the Bloch phase across one lattice period
along axis ``l`` is ``exp(2j*pi*k[l])``.  The ``2*pi/a`` factor never appears
in stored values, so paths for different lattice constants coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid over one primitive cell of side ``a``."""

    a: float
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"lattice constant must be positive, got a={self.a}")
        for name in ("n1", "n2", "n3"):
            value = getattr(self, name)
            if int(value) != value or value < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {value}")

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape of a scalar grid function, x fastest (C order)."""
        return (self.n3, self.n2, self.n1)

    @property
    def n(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def delta_x(self) -> float:
        return self.a / self.n1

    @property
    def delta_y(self) -> float:
        return self.a / self.n2

    @property
    def delta_z(self) -> float:
        return self.a / self.n3

    @property
    def deltas(self) -> tuple[float, float, float]:
        return (self.delta_x, self.delta_y, self.delta_z)


def make_grid(a: float, n1: int, n2: int, n3: int) -> Grid:
    return Grid(float(a), int(n1), int(n2), int(n3))


@dataclass(frozen=True)
class WaveVector:
    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        for value in self.as_tuple():
            if not 0.0 <= value <= 0.5:
                raise ValueError(f"wave vector components must lie in [0, 1/2], got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.k1, self.k2, self.k3)

    def is_zero(self) -> bool:
        return self.k1 == 0.0 and self.k2 == 0.0 and self.k3 == 0.0

    @classmethod
    def of(cls, k) -> "WaveVector":
        if isinstance(k, WaveVector):
            return k
        k1, k2, k3 = (float(x) for x in k)
        return cls(k1, k2, k3)


G_POINT = WaveVector(0.0, 0.0, 0.0)
X_POINT = WaveVector(0.5, 0.0, 0.0)
M_POINT = WaveVector(0.5, 0.5, 0.0)
R_POINT = WaveVector(0.5, 0.5, 0.5)


@dataclass(frozen=True)
class BrillouinPath:
    corners: tuple[WaveVector, ...]
    labels: tuple[str, ...]
    samples_per_segment: int = 10
    gamma_shift: float = 1e-3

    def __post_init__(self):
        if len(self.corners) < 2:
            raise ValueError("a path needs at least two corners")
        if len(self.labels) != len(self.corners):
            raise ValueError("one label per corner is required")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be positive")
        for c0, c1 in zip(self.corners[:-1], self.corners[1:]):
            if c0 == c1:
                raise ValueError(f"consecutive corners must differ, got {c0} twice")

    @property
    def segments(self) -> int:
        return len(self.corners) - 1

    @property
    def sample_count(self) -> int:
        return self.segments * self.samples_per_segment + 1


def gamma_shift_for(n1: int, n2: int, n3: int) -> float:
    """Replacement magnitude for the excluded k = 0 sample."""
    return 1.0 / (64 * max(n1, n2, n3))


def sc_brillouin_path(a: float = 1.0, samples_per_segment: int = 10,
                      gamma_shift: float = 1e-3) -> BrillouinPath:
    """Closed G-X-M-R-G perimeter of the irreducible zone of the SC lattice.

    ``a`` only has to be positive: corners are dimensionless, so the path is
    the same for every lattice constant.
    """
    if not a > 0:
        raise ValueError(f"lattice constant must be positive, got a={a}")
    return BrillouinPath(
        corners=(G_POINT, X_POINT, M_POINT, R_POINT, G_POINT),
        labels=("G", "X", "M", "R", "G"),
        samples_per_segment=samples_per_segment,
        gamma_shift=gamma_shift,
    )


@dataclass(frozen=True)
class PathSample:
    k: WaveVector
    arclength: float
    shifted: bool = field(default=False)


def sample_path_detailed(path: BrillouinPath) -> list[PathSample]:
    """Sample ``path`` uniformly, keeping arc length and Gamma-shift flags.

    Every exact zero vector is replaced by ``(gamma_shift, 0, 0)``; the
    ``shifted`` flag marks those samples.  Arc length is measured on the
    unshifted corners.
    """
    m = path.samples_per_segment
    samples: list[PathSample] = []
    s0 = 0.0
    for seg, (c0, c1) in enumerate(zip(path.corners[:-1], path.corners[1:])):
        p0 = np.array(c0.as_tuple())
        p1 = np.array(c1.as_tuple())
        length = float(np.linalg.norm(p1 - p0))
        start = 0 if seg == 0 else 1
        for j in range(start, m + 1):
            t = j / m
            # endpoints are taken verbatim to avoid rounding drift
            if j == 0:
                p = p0
            elif j == m:
                p = p1
            else:
                p = p0 + t * (p1 - p0)
            shifted = False
            if not np.any(p):
                p = np.array([path.gamma_shift, 0.0, 0.0])
                shifted = True
            samples.append(PathSample(WaveVector.of(p), s0 + t * length, shifted))
        s0 += length
    return samples


def sample_path(path: BrillouinPath) -> list[WaveVector]:
    return [s.k for s in sample_path_detailed(path)]


def corner_arclengths(path: BrillouinPath) -> list[float]:
    out = [0.0]
    for c0, c1 in zip(path.corners[:-1], path.corners[1:]):
        out.append(out[-1] + float(np.linalg.norm(np.subtract(c1.as_tuple(), c0.as_tuple()))))
    return out

"""Yee-scheme discrete single-curl operator with quasi-periodic boundaries.

Fields of length ``3n`` are three contiguous ``n``-blocks (x, y, z
components); each block is a grid function flattened x-fastest, i.e. a C-order
ravel of an array of shape ``(n3, n2, n1)``.  With that layout the Kronecker
factors ``I (x) I (x) K`` act along the last array axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import Grid, WaveVector

# assemble_dense refuses anything larger than this many rows
DENSE_LIMIT = 3 * 16**3

# array axis of the (n3, n2, n1) grid function that each Cartesian axis runs along
_ARRAY_AXIS = {0: 2, 1: 1, 2: 0}


@dataclass(frozen=True)
class ShiftBlock:
    """Forward difference ``K`` of size ``m``: -1 diagonal, +1 superdiagonal,
    Bloch ``phase`` in the lower-left corner, scaled by ``scale = 1/delta``."""

    m: int
    phase: complex
    scale: float

    def __post_init__(self):
        if abs(abs(self.phase) - 1.0) > 1e-14:
            raise ValueError(f"Bloch phase must have unit modulus, got {self.phase}")

    def matrix(self) -> sp.csr_matrix:
        m = self.m
        rows = list(range(m)) + list(range(m - 1)) + [m - 1]
        cols = list(range(m)) + list(range(1, m)) + [0]
        vals = [-1.0] * m + [1.0] * (m - 1) + [self.phase]
        return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(m, m))


def _forward(u: np.ndarray, axis: int, phase: complex, scale: float) -> np.ndarray:
    # (K u)_j = u_{j+1} - u_j, with u_m := phase * u_0
    ahead = np.roll(u, -1, axis=axis)
    last = [slice(None)] * u.ndim
    last[axis] = -1
    ahead[tuple(last)] *= phase
    ahead -= u
    ahead *= scale
    return ahead


def _backward(u: np.ndarray, axis: int, phase: complex, scale: float) -> np.ndarray:
    # (K^* u)_j = u_{j-1} - u_j, with u_{-1} := conj(phase) * u_{m-1}
    behind = np.roll(u, 1, axis=axis)
    first = [slice(None)] * u.ndim
    first[axis] = 0
    behind[tuple(first)] *= np.conj(phase)
    behind -= u
    behind *= scale
    return behind


class CurlOperator:
    """Matrix-free discrete curl ``C`` and its adjoint ``C^*``.

    ``C`` has the block pattern::

        [  0  -C3   C2 ]
        [ C3    0  -C1 ]
        [-C2   C1    0 ]

    with ``C_l`` the scaled shift block acting along axis ``l``.
    """

    def __init__(self, grid: Grid, k):
        self.grid = grid
        self.k = WaveVector.of(k)
        ks = self.k.as_tuple()
        ms = (grid.n1, grid.n2, grid.n3)
        self.blocks = tuple(
            ShiftBlock(ms[l], complex(np.exp(2j * np.pi * ks[l])), 1.0 / grid.deltas[l])
            for l in range(3)
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (3 * self.grid.n, 3 * self.grid.n)

    def _split(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (3 * self.grid.n,):
            raise ValueError(f"expected a vector of length {3 * self.grid.n}, got shape {v.shape}")
        return v.reshape((3,) + self.grid.shape)

    def _d(self, u, l):
        b = self.blocks[l]
        return _forward(u, _ARRAY_AXIS[l], b.phase, b.scale)

    def _dstar(self, u, l):
        b = self.blocks[l]
        return _backward(u, _ARRAY_AXIS[l], b.phase, b.scale)

    def apply(self, v: np.ndarray) -> np.ndarray:
        vx, vy, vz = self._split(v)
        out = np.empty((3,) + self.grid.shape, dtype=complex)
        out[0] = self._d(vz, 1) - self._d(vy, 2)
        out[1] = self._d(vx, 2) - self._d(vz, 0)
        out[2] = self._d(vy, 0) - self._d(vx, 1)
        return out.ravel()

    def apply_adjoint(self, w: np.ndarray) -> np.ndarray:
        wx, wy, wz = self._split(w)
        out = np.empty((3,) + self.grid.shape, dtype=complex)
        # C^* = [[0, C3^*, -C2^*], [-C3^*, 0, C1^*], [C2^*, -C1^*, 0]]
        out[0] = self._dstar(wy, 2) - self._dstar(wz, 1)
        out[1] = self._dstar(wz, 0) - self._dstar(wx, 2)
        out[2] = self._dstar(wx, 1) - self._dstar(wy, 0)
        return out.ravel()

    __call__ = apply

    def component_matrices(self) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
        """Sparse ``C1, C2, C3`` built from Kronecker products."""
        g = self.grid
        eye = lambda m: sp.identity(m, dtype=complex, format="csr")
        K1, K2, K3 = (b.matrix() * b.scale for b in self.blocks)
        C1 = sp.kron(eye(g.n3), sp.kron(eye(g.n2), K1))
        C2 = sp.kron(eye(g.n3), sp.kron(K2, eye(g.n1)))
        C3 = sp.kron(K3, sp.kron(eye(g.n2), eye(g.n1)))
        return C1.tocsr(), C2.tocsr(), C3.tocsr()

    def assemble_sparse(self) -> sp.csr_matrix:
        C1, C2, C3 = self.component_matrices()
        return sp.bmat([[None, -C3, C2], [C3, None, -C1], [-C2, C1, None]], format="csr")

    def assemble_dense(self) -> np.ndarray:
        if 3 * self.grid.n > DENSE_LIMIT:
            raise ValueError(
                f"refusing to assemble a dense {3 * self.grid.n}x{3 * self.grid.n} curl; "
                f"limit is {DENSE_LIMIT} rows"
            )
        return self.assemble_sparse().toarray()


def build_curl(grid: Grid, k) -> CurlOperator:
    return CurlOperator(grid, k)

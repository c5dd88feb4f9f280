"""Closed-form SVD of the discrete curl, applied through 3-D FFTs.

The unitary ``T`` diagonalizes each shift block ``C_l``; in the Fourier
coordinates ``C`` becomes the pointwise cross product ``q -> lam x q`` with
``lam = (lam1, lam2, lam3)``.  The singular vectors of ``C`` are therefore
``(I_3 (x) T)`` applied to 3-vectors per frequency, and every basis block is
stored as a ``(3, n)`` array of diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Grid, WaveVector

# diagonals below this fraction of their maximum count as rank deficient
RANK_TOL = 1e-14


class RankConditionError(ValueError):
    """The basis parameters or wave vector make ``lambda_q`` or ``lambda_p`` singular."""


def check_rank_parameters(grid: Grid, alpha: float, beta: float) -> None:
    """Raise if ``alpha`` and ``beta`` break the full-rank conditions of ``lambda_p``."""
    dx, dy, dz = grid.deltas
    if alpha == 0 or beta == 0:
        raise RankConditionError(f"alpha and beta must be nonzero, got alpha={alpha}, beta={beta}")
    if np.isclose(alpha * dx, beta * dy, rtol=1e-14, atol=0.0):
        raise RankConditionError(
            f"alpha*delta_x == beta*delta_y ({alpha}*{dx} == {beta}*{dy}); lambda_p may lose rank"
        )
    if np.isclose(dz, beta * dy, rtol=1e-14, atol=0.0):
        raise RankConditionError(
            f"delta_z == beta*delta_y ({dz} == {beta}*{dy}); lambda_p may lose rank"
        )


@dataclass(frozen=True)
class SpectralDiagonals:
    grid: Grid
    k: WaveVector
    alpha: float
    beta: float
    lam: np.ndarray  # (3, n) complex: lambda1, lambda2, lambda3
    lambda_q: np.ndarray  # (n,) positive
    lambda_p: np.ndarray  # (3, n) complex

    @property
    def lambda1(self):
        return self.lam[0]

    @property
    def lambda2(self):
        return self.lam[1]

    @property
    def lambda3(self):
        return self.lam[2]

    @property
    def lambda_p_norm2(self) -> np.ndarray:
        return np.sum(np.abs(self.lambda_p) ** 2, axis=0)


def axis_eigenvalues(m: int, k: float, delta: float) -> np.ndarray:
    """Eigenvalues ``(exp(2j*pi*(i + k)/m) - 1)/delta`` of one scaled shift block."""
    i = np.arange(m)
    return (np.exp(2j * np.pi * (i + k) / m) - 1.0) / delta


def eigen_diagonals(grid: Grid, k, alpha: float = 1.0, beta: float = 2.0) -> SpectralDiagonals:
    k = WaveVector.of(k)
    if k.is_zero():
        raise RankConditionError("k = 0 makes lambda_q singular; perturb the wave vector")
    check_rank_parameters(grid, alpha, beta)
    k1, k2, k3 = k.as_tuple()
    l1 = axis_eigenvalues(grid.n1, k1, grid.delta_x)
    l2 = axis_eigenvalues(grid.n2, k2, grid.delta_y)
    l3 = axis_eigenvalues(grid.n3, k3, grid.delta_z)
    shape = grid.shape
    lam = np.empty((3, grid.n), dtype=complex)
    lam[0] = np.broadcast_to(l1[None, None, :], shape).ravel()
    lam[1] = np.broadcast_to(l2[None, :, None], shape).ravel()
    lam[2] = np.broadcast_to(l3[:, None, None], shape).ravel()
    lambda_q = np.sum(np.abs(lam) ** 2, axis=0)
    lambda_p = np.array([
        beta * lam[2] - lam[1],
        lam[0] - alpha * lam[2],
        alpha * lam[1] - beta * lam[0],
    ])
    if lambda_q.min() <= RANK_TOL * lambda_q.max():
        raise RankConditionError(f"lambda_q is singular at k={k.as_tuple()} (min entry {lambda_q.min():.3e})")
    lp2 = np.sum(np.abs(lambda_p) ** 2, axis=0)
    if lp2.min() <= RANK_TOL**2 * lp2.max():
        raise RankConditionError(f"lambda_p loses column rank at k={k.as_tuple()}")
    return SpectralDiagonals(grid, k, float(alpha), float(beta), lam, lambda_q, lambda_p)


class FourierTransformer:
    """``T = n**-1/2 (D3 (x) D2 (x) D1)(U3 (x) U2 (x) U1)`` with ``U_m[i, j] = exp(+2j*pi*i*j/m)``.

    ``forward`` is therefore a phase ramp times an orthonormal inverse FFT.
    Both directions accept a trailing batch of grid functions stacked on the
    first axis.
    """

    def __init__(self, grid: Grid, k):
        self.grid = grid
        self.k = WaveVector.of(k)
        k1, k2, k3 = self.k.as_tuple()
        r1 = np.exp(2j * np.pi * k1 * np.arange(grid.n1) / grid.n1)
        r2 = np.exp(2j * np.pi * k2 * np.arange(grid.n2) / grid.n2)
        r3 = np.exp(2j * np.pi * k3 * np.arange(grid.n3) / grid.n3)
        self.ramp = (r3[:, None, None] * r2[None, :, None] * r1[None, None, :])

    def _grid_view(self, v):
        v = np.asarray(v)
        n = self.grid.n
        if v.shape[-1] != n:
            raise ValueError(f"expected trailing length {n}, got shape {v.shape}")
        return v.reshape(v.shape[:-1] + self.grid.shape)

    def forward(self, v: np.ndarray) -> np.ndarray:
        u = self._grid_view(v)
        out = np.fft.ifftn(u, axes=(-3, -2, -1), norm="ortho")
        out *= self.ramp
        return out.reshape(np.shape(v))

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        u = self._grid_view(v) * np.conj(self.ramp)
        out = np.fft.fftn(u, axes=(-3, -2, -1), norm="ortho")
        return out.reshape(np.shape(v))


def forward_T(transformer: FourierTransformer, v: np.ndarray) -> np.ndarray:
    return transformer.forward(v)


def adjoint_T(transformer: FourierTransformer, v: np.ndarray) -> np.ndarray:
    return transformer.adjoint(v)


class SvdFactors:
    """Singular vectors of ``C`` in diagonal form.

    ``Q = (I_3 (x) T)[pi1, pi2, pi0]`` and
    ``P = (I_3 (x) T)[-conj(pi2), conj(pi1), conj(pi0)]``, with
    ``C = P_r Sigma_r Q_r^*``, ``Q_r = [Q1, Q2]``, ``P_r = [P2, P1]`` and
    ``Sigma_r = diag(sqrt(lambda_q), sqrt(lambda_q))``.
    """

    def __init__(self, diag: SpectralDiagonals):
        self.diag = diag
        self.grid = diag.grid
        self.k = diag.k
        self.transformer = FourierTransformer(diag.grid, diag.k)
        lam, lq, lp = diag.lam, diag.lambda_q, diag.lambda_p
        lp2 = diag.lambda_p_norm2
        l1, l2, l3 = lam
        self.pi0 = lam / np.sqrt(lq)
        # component of (alpha, beta, 1) orthogonal to lam, scaled by lambda_q;
        # its column norm is sqrt(lambda_q * |lambda_p|^2)
        numer = np.array([
            lp[2] * l2.conj() - lp[1] * l3.conj(),
            lp[0] * l3.conj() - lp[2] * l1.conj(),
            lp[1] * l1.conj() - lp[0] * l2.conj(),
        ])
        self.pi1 = numer / np.sqrt(lp2 * lq)
        self.pi2 = lp.conj() / np.sqrt(lp2)
        self.sigma = np.sqrt(lq)
        self.sigma_r = np.concatenate([self.sigma, self.sigma])

    @property
    def n(self) -> int:
        return self.grid.n

    def _check(self, v, length):
        v = np.asarray(v)
        if v.shape != (length,):
            raise ValueError(f"expected a vector of length {length}, got shape {v.shape}")
        return v

    def apply_Qr(self, y: np.ndarray) -> np.ndarray:
        y = self._check(y, 2 * self.n)
        y1, y2 = y[: self.n], y[self.n:]
        return self.transformer.forward(self.pi1 * y1 + self.pi2 * y2).ravel()

    def apply_Qr_adjoint(self, v: np.ndarray) -> np.ndarray:
        v = self._check(v, 3 * self.n)
        q = self.transformer.adjoint(v.reshape(3, self.n))
        return np.concatenate([
            np.sum(self.pi1.conj() * q, axis=0),
            np.sum(self.pi2.conj() * q, axis=0),
        ])

    def apply_Pr(self, y: np.ndarray) -> np.ndarray:
        y = self._check(y, 2 * self.n)
        y1, y2 = y[: self.n], y[self.n:]
        return self.transformer.forward(self.pi1.conj() * y2 - self.pi2.conj() * y1).ravel()

    def apply_Pr_adjoint(self, v: np.ndarray) -> np.ndarray:
        v = self._check(v, 3 * self.n)
        p = self.transformer.adjoint(v.reshape(3, self.n))
        return np.concatenate([
            -np.sum(self.pi2 * p, axis=0),
            np.sum(self.pi1 * p, axis=0),
        ])

    def apply_Q0(self, y: np.ndarray) -> np.ndarray:
        y = self._check(y, self.n)
        return self.transformer.forward(self.pi0 * y).ravel()

    def apply_P0(self, y: np.ndarray) -> np.ndarray:
        y = self._check(y, self.n)
        return self.transformer.forward(self.pi0.conj() * y).ravel()

    def block_columns(self, name: str) -> np.ndarray:
        """Dense ``3n x n`` block ``Q0, Q1, Q2, P0, P1`` or ``P2`` (small grids only)."""
        diag_of = {
            "Q0": self.pi0, "Q1": self.pi1, "Q2": self.pi2,
            "P0": self.pi0.conj(), "P1": self.pi1.conj(), "P2": -self.pi2.conj(),
        }[name]
        eye = np.eye(self.n, dtype=complex)
        T = self.transformer.forward(eye.T).T  # columns T e_j
        return np.vstack([T * diag_of[c][None, :] for c in range(3)])


def build_svd(grid: Grid, k, alpha: float = 1.0, beta: float = 2.0) -> SvdFactors:
    return SvdFactors(eigen_diagonals(grid, k, alpha, beta))


def apply_Qr(factors: SvdFactors, y):
    return factors.apply_Qr(y)


def apply_Qr_adjoint(factors: SvdFactors, v):
    return factors.apply_Qr_adjoint(v)


def apply_Pr(factors: SvdFactors, y):
    return factors.apply_Pr(y)


def apply_Pr_adjoint(factors: SvdFactors, v):
    return factors.apply_Pr_adjoint(v)

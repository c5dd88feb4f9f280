"""Dense brute-force counterparts of the matrix-free operators.

Everything here assembles explicit matrices and calls LAPACK, so it is only
usable on tiny grids (``6n <= 1536``).  It exists to falsify the fast path:
the unitary ``T`` is built from Kronecker products of DFT matrices rather
than FFTs, ``B^-1`` is a dense inverse rather than the factored form, and the
Hermitian reformulation uses dense Cholesky factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .curl import CurlOperator
from .lattice import Grid, WaveVector
from .media import MediumModel, check_assumption, tensor_to_sparse
from .spectral import RANK_TOL, SvdFactors, build_svd

# 6n above this refuses to assemble
MAX_DENSE_ROWS = 1536
# eigenvalues with |omega| <= ZERO_RTOL * max|omega| count as zero
ZERO_RTOL = 1e-10


class DenseSizeError(ValueError):
    pass


class AssumptionViolation(ValueError):
    pass


def _guard(grid: Grid) -> None:
    if 6 * grid.n > MAX_DENSE_ROWS:
        raise DenseSizeError(
            f"dense oracle needs 6n <= {MAX_DENSE_ROWS}, got 6n = {6 * grid.n} "
            f"for a {grid.n1}x{grid.n2}x{grid.n3} grid"
        )


def dense_T(grid: Grid, k) -> np.ndarray:
    """``n^-1/2 (D3 (x) D2 (x) D1)(U3 (x) U2 (x) U1)`` as an explicit matrix."""
    k = WaveVector.of(k)
    factors = []
    for m, kl in zip((grid.n3, grid.n2, grid.n1), (k.k3, k.k2, k.k1)):
        j = np.arange(m)
        U = np.exp(2j * np.pi * np.outer(j, j) / m)
        D = np.exp(2j * np.pi * kl * j / m)
        factors.append(D[:, None] * U)
    return np.kron(factors[0], np.kron(factors[1], factors[2])) / np.sqrt(grid.n)


def dense_basis(factors: SvdFactors) -> dict[str, np.ndarray]:
    """Dense ``Q = [Q1, Q2, Q0]`` and ``P = [P2, P1, P0]`` plus their reduced parts."""
    T = dense_T(factors.grid, factors.k)

    def block(d):
        return np.vstack([T * d[c][None, :] for c in range(3)])

    Q1, Q2, Q0 = block(factors.pi1), block(factors.pi2), block(factors.pi0)
    P1, P2, P0 = block(factors.pi1.conj()), block(-factors.pi2.conj()), block(factors.pi0.conj())
    Qr, Pr = np.hstack([Q1, Q2]), np.hstack([P2, P1])
    return {"Q": np.hstack([Qr, Q0]), "P": np.hstack([Pr, P0]), "Qr": Qr, "Pr": Pr, "Q0": Q0, "P0": P0}


@dataclass
class DenseBundle:
    grid: Grid
    k: WaveVector
    medium: MediumModel
    C: np.ndarray
    B: np.ndarray
    gep_lhs: np.ndarray  # diag(C, C^*)
    nfsep: np.ndarray
    A_r: np.ndarray | None
    J: np.ndarray
    A: np.ndarray | None
    basis: dict = field(repr=False, default_factory=dict)
    factors: SvdFactors | None = field(repr=False, default=None)


def _material_dense(medium: MediumModel):
    as_dense = lambda t: tensor_to_sparse(t).toarray()
    return as_dense(medium.eps_d), as_dense(medium.mu_d), as_dense(medium.xi_d), as_dense(medium.zeta_d)


def dense_hermitian_matrix(C: np.ndarray, medium: MediumModel) -> np.ndarray:
    """Hermitian ``A`` with the same eigenvalues as the GEP, from Cholesky factors of ``mu_d`` and ``Phi``."""
    eps, mu, xi, zeta = _material_dense(medium)
    mu_inv = np.linalg.inv(mu)
    phi = eps - xi @ mu_inv @ zeta
    phi = 0.5 * (phi + phi.conj().T)
    mu_c = np.linalg.cholesky(0.5 * (mu + mu.conj().T))
    phi_c = np.linalg.cholesky(phi)
    solve_lo = lambda L, M: sla.solve_triangular(L, M, lower=True)
    # (L^*)^-1 on the right: M (L^*)^-1 = (L^-1 M^*)^*
    right = lambda M, L: solve_lo(L, M.conj().T).conj().T
    coupling = xi @ mu_inv @ C - C.conj().T @ mu_inv @ zeta
    top_left = -right(solve_lo(phi_c, coupling), phi_c)
    top_right = -right(solve_lo(phi_c, C.conj().T), mu_c)
    bottom_left = right(solve_lo(mu_c, C), phi_c)
    zero = np.zeros_like(top_left)
    return -1j * np.block([[top_left, top_right], [bottom_left, zero]])


def build_dense_bundle(grid: Grid, k, medium: MediumModel, alpha: float = 1.0,
                       beta: float = 2.0) -> DenseBundle:
    _guard(grid)
    k = WaveVector.of(k)
    n = grid.n
    C = CurlOperator(grid, k).assemble_dense()
    eps, mu, xi, zeta = _material_dense(medium)
    B = 1j * np.block([[zeta, mu], [-eps, -xi]])
    Z = np.zeros((3 * n, 3 * n))
    gep_lhs = np.block([[C, Z], [Z, C.conj().T]])
    factors = build_svd(grid, k, alpha, beta)
    basis = dense_basis(factors)
    Pr, Qr = basis["Pr"], basis["Qr"]
    s_half = np.sqrt(np.concatenate([factors.sigma, factors.sigma]))
    Binv = np.linalg.inv(B)
    Z2 = np.zeros((3 * n, 2 * n))
    right = np.block([[Pr * s_half, Z2], [Z2, Qr * s_half]])
    left = np.block([[Qr.conj().T * s_half[:, None], Z2.T], [Z2.T, Pr.conj().T * s_half[:, None]]])
    nfsep = left @ Binv @ right
    sig_inv = np.diag(1.0 / factors.sigma_r)
    Zr = np.zeros((2 * n, 2 * n))
    J = 1j * np.block([[Zr, sig_inv], [-sig_inv, Zr]])
    A_r = A = None
    if check_assumption(medium).passed:
        lift = np.block([[Pr, Z2], [Z2, Qr]])
        swap = np.block([[Z, np.eye(3 * n)], [-np.eye(3 * n), Z]])
        A_r = lift.conj().T @ (1j * swap @ Binv) @ lift
        A = dense_hermitian_matrix(C, medium)
    return DenseBundle(grid, k, medium, C, B, gep_lhs, nfsep, A_r, J, A, basis, factors)


@dataclass
class GepSpectrum:
    omega: np.ndarray  # all 6n eigenvalues, sorted by (|omega|, real part)
    vectors: np.ndarray
    zero_mask: np.ndarray
    scale: float

    @property
    def zero(self) -> np.ndarray:
        return self.omega[self.zero_mask]

    @property
    def nonzero(self) -> np.ndarray:
        return self.omega[~self.zero_mask]


def _split_zero(omega: np.ndarray):
    scale = float(np.abs(omega).max())
    return np.abs(omega) <= ZERO_RTOL * scale, scale


def dense_gep_eigen(bundle: DenseBundle) -> GepSpectrum:
    """All eigenpairs of ``diag(C, C^*) x = omega B x`` via QZ."""
    _guard(bundle.grid)
    w, V = sla.eig(bundle.gep_lhs, bundle.B)
    if not np.all(np.isfinite(w)):
        raise ValueError("QZ returned infinite eigenvalues; B is singular")
    order = np.lexsort((w.real, np.abs(w)))
    w, V = w[order], V[:, order]
    mask, scale = _split_zero(w)
    return GepSpectrum(w, V, mask, scale)


@dataclass
class HermitianSpectrum:
    A: np.ndarray
    omega: np.ndarray  # ascending
    hermitian_defect: float
    zero_mask: np.ndarray

    @property
    def nonzero(self) -> np.ndarray:
        return self.omega[~self.zero_mask]


def dense_hsep(bundle: DenseBundle, herm_tol: float = 1e-12) -> HermitianSpectrum:
    """Spectrum of the Hermitian reformulation ``A``."""
    if bundle.A is None:
        report = check_assumption(bundle.medium)
        raise AssumptionViolation("Hermitian reformulation needs mu_d > 0, Phi > 0, xi_d^* = zeta_d: "
                                  + "; ".join(report.messages))
    A = bundle.A
    defect = float(np.linalg.norm(A - A.conj().T) / np.linalg.norm(A))
    if defect > herm_tol:
        raise AssertionError(f"A is not Hermitian: relative defect {defect:.3e} > {herm_tol:.1e}")
    w = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    mask, _ = _split_zero(w)
    return HermitianSpectrum(A, w, defect, mask)


@dataclass(frozen=True)
class SvdReport:
    svd_defect: float  # ||C - Pr Sr Qr^*||_F / ||C||_F
    q_unitary: float  # ||Q^* Q - I||_F
    p_unitary: float
    ctc_defect: float  # ||C^*C - Qr Sr^2 Qr^*||_F / ||C^*C||_F
    cct_defect: float
    null_defect: float  # max(||C Q0||, ||C^* P0||) / ||C||
    singular_value_error: float  # max relative error of the 2n nonzero singular values
    null_singular_values: float  # largest of the n trailing singular values / ||C||_2

    def max_defect(self) -> float:
        return max(self.svd_defect, self.q_unitary, self.p_unitary, self.ctc_defect,
                   self.cct_defect, self.null_defect, self.singular_value_error)


def dense_svd_check(bundle: DenseBundle, factors: SvdFactors | None = None) -> SvdReport:
    _guard(bundle.grid)
    factors = factors or bundle.factors
    basis = dense_basis(factors) if factors is not bundle.factors else bundle.basis
    C = bundle.C
    n = bundle.grid.n
    Q, P, Qr, Pr = basis["Q"], basis["P"], basis["Qr"], basis["Pr"]
    s = factors.sigma_r
    eye = np.eye(3 * n)
    fro = np.linalg.norm
    CtC = C.conj().T @ C
    CCt = C @ C.conj().T
    sv = np.linalg.svd(C, compute_uv=False)
    expect = np.sort(s)[::-1]
    return SvdReport(
        svd_defect=float(fro(C - (Pr * s) @ Qr.conj().T) / fro(C)),
        q_unitary=float(fro(Q.conj().T @ Q - eye)),
        p_unitary=float(fro(P.conj().T @ P - eye)),
        ctc_defect=float(fro(CtC - (Qr * s**2) @ Qr.conj().T) / fro(CtC)),
        cct_defect=float(fro(CCt - (Pr * s**2) @ Pr.conj().T) / fro(CCt)),
        null_defect=float(max(fro(C @ basis["Q0"]), fro(C.conj().T @ basis["P0"])) / fro(C)),
        singular_value_error=float(np.max(np.abs(sv[: 2 * n] - expect) / expect)),
        null_singular_values=float(sv[2 * n:].max() / sv[0]),
    )


@dataclass
class ScanReport:
    parameters_ok: bool
    parameter_messages: tuple[str, ...]
    checked: int
    failures: list[tuple[tuple[float, float, float], str]]

    @property
    def passed(self) -> bool:
        return self.parameters_ok and not self.failures


def lemma_conditions_scan(grid: Grid, ks, alpha: float = 1.0, beta: float = 2.0) -> ScanReport:
    """Check the full-rank conditions of ``lambda_q`` and ``lambda_p`` over sample wave vectors.

    The mesh inequalities ``alpha*dx != beta*dy`` and ``dz != beta*dy`` are
    checked first; when they fail no wave vector is scanned.
    """
    if alpha == 0 or beta == 0:
        raise ValueError(f"alpha and beta must be nonzero, got alpha={alpha}, beta={beta}")
    dx, dy, dz = grid.deltas
    msgs = []
    if np.isclose(alpha * dx, beta * dy, rtol=1e-14, atol=0.0):
        msgs.append(f"alpha*delta_x == beta*delta_y ({alpha}*{dx:g} == {beta}*{dy:g})")
    if np.isclose(dz, beta * dy, rtol=1e-14, atol=0.0):
        msgs.append(f"delta_z == beta*delta_y ({dz:g} == {beta}*{dy:g})")
    if msgs:
        return ScanReport(False, tuple(msgs), 0, [])
    failures = []
    count = 0
    for k in ks:
        kt = tuple(float(x) for x in k)
        count += 1
        if not any(kt):
            failures.append((kt, "k = 0: lambda_q is singular"))
            continue
        lam = []
        for m, kl, d in zip((grid.n1, grid.n2, grid.n3), kt, grid.deltas):
            lam.append((np.exp(2j * np.pi * (np.arange(m) + kl) / m) - 1.0) / d)
        l1 = lam[0][None, None, :]
        l2 = lam[1][None, :, None]
        l3 = lam[2][:, None, None]
        lq = np.abs(l1) ** 2 + np.abs(l2) ** 2 + np.abs(l3) ** 2
        if lq.min() <= RANK_TOL * lq.max():
            failures.append((kt, f"lambda_q singular (min {lq.min():.3e})"))
            continue
        p = [beta * l3 - l2, l1 - alpha * l3, alpha * l2 - beta * l1]
        pmax = np.maximum.reduce([np.abs(x) for x in np.broadcast_arrays(*p)])
        if pmax.min() <= RANK_TOL * pmax.max():
            failures.append((kt, "all three lambda_p diagonals vanish at one index"))
    return ScanReport(True, (), count, failures)


def dump_triplets(matrix: np.ndarray, path, drop_tol: float = 0.0) -> int:
    """Write nonzero entries as ``row col re im`` lines (0-based); returns the entry count."""
    M = np.asarray(matrix)
    rows, cols = np.nonzero(np.abs(M) > drop_tol)
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# {M.shape[0]} {M.shape[1]} {len(rows)}\n# row col re im\n")
        for r, c in zip(rows, cols):
            v = complex(M[r, c])
            fh.write(f"{r} {c} {v.real!r} {v.imag!r}\n")
    return len(rows)


def load_triplets(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    m, n, _ = (int(x) for x in lines[0].lstrip("# ").split())
    M = np.zeros((m, n), dtype=complex)
    for line in lines[2:]:
        r, c, re, im = line.split()
        M[int(r), int(c)] = complex(float(re), float(im))
    return M

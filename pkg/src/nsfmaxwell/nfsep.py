"""Null-space-free eigensolvers for the discrete chiral Maxwell GEP.

The generalized problem ``diag(C, C^*) x = omega B x`` with
``B = 1j*[[zeta_d, mu_d], [-eps_d, -xi_d]]`` has a ``2n``-dimensional null
space.  Projecting onto the singular vectors of ``C`` removes it:

* general media: the ``4n x 4n`` standard problem
  ``diag(S^1/2 Qr^*, S^1/2 Pr^*) B^-1 diag(Pr S^1/2, Qr S^1/2) y = omega y``,
  solved by shift-invert Arnoldi with GMRES inner solves;
* media with ``mu_d > 0``, ``Phi > 0`` and ``xi_d^* = zeta_d``: the pencil
  ``J y = omega^-1 A_r y`` with ``J = 1j*[[0, S^-1], [-S^-1, 0]]`` Hermitian and
  ``A_r`` Hermitian positive definite, solved by invert Lanczos with
  conjugate-gradient inner solves.

Every product with ``Pr``, ``Qr`` and their adjoints costs three FFTs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .curl import CurlOperator
from .media import MediumModel, check_assumption
from .spectral import SvdFactors

CG_TOL = 1e-14
# inner tolerance of solve_hhpd: near Gamma, J = 1j diag(S^-1) K amplifies the
# solve error by 1/min(S), and 1e-14 leaves GEP residuals well above 10*tol
HHPD_CG_TOL = 1e-15
# Chebyshev degree of the final filter and its pass band relative to the largest wanted omega
POLISH_DEGREE = 16
POLISH_CUTOFF = 1.5
# restarts without a 10% residual improvement before a Ritz pair counts as stalled
STALL_RESTARTS = 8
# ARPACK's Ritz estimates are relative to |theta|; asking for a tenth of the
# tolerance keeps the reconstructed GEP residuals well inside 10*tol
RITZ_MARGIN = 0.1


class CGNotConverged(RuntimeError):
    def __init__(self, iters: int, relres: float):
        super().__init__(f"CG did not converge in {iters} iterations (relative residual {relres:.3e})")
        self.iters = iters
        self.relres = relres


class InnerSolveStagnation(RuntimeError):
    pass


class SingularMaterialError(ValueError):
    pass


def default_eig_tol(grid) -> float:
    """Eigensolver stopping tolerance ``1e4*eps / (2*sqrt(dx^-2 + dy^-2 + dz^-2))``."""
    dx, dy, dz = grid.deltas
    return 1e4 * np.finfo(float).eps / (2.0 * np.sqrt(dx**-2 + dy**-2 + dz**-2))


class _PointOp:
    """``(n, 3, 3)`` point tensor with a fast path for purely diagonal tensors."""

    def __init__(self, t: np.ndarray):
        self.n = t.shape[0]
        off = t.copy()
        idx = np.arange(3)
        off[:, idx, idx] = 0
        self.diag = None if off.any() else np.ascontiguousarray(t[:, idx, idx].T)
        self.full = t

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v3 = v.reshape(3, self.n)
        if self.diag is not None:
            return (self.diag * v3).ravel()
        return np.einsum("pcd,dp->cp", self.full, v3).ravel()


class MaterialBlock:
    """``B = 1j*[[zeta_d, mu_d], [-eps_d, -xi_d]]`` with its factored inverse."""

    def __init__(self, medium: MediumModel):
        self.medium = medium
        self.n = medium.n
        m = medium
        det_phi = np.linalg.det(m.phi)
        scale = max(np.abs(m.phi).max(), 1.0) ** 3
        worst = int(np.argmin(np.abs(det_phi)))
        if abs(det_phi[worst]) <= 1e-14 * scale:
            raise SingularMaterialError(
                f"Phi = eps_d - xi_d mu_d^-1 zeta_d is singular at grid index {worst} "
                f"(|det| = {abs(det_phi[worst]):.3e}, block {np.round(m.phi[worst], 6).tolist()})"
            )
        self._eps = _PointOp(m.eps_d)
        self._mu = _PointOp(m.mu_d)
        self._xi = _PointOp(m.xi_d)
        self._zeta = _PointOp(m.zeta_d)
        self._mu_inv = _PointOp(m.mu_inv)
        self._phi_inv = _PointOp(np.linalg.inv(m.phi))
        self._xi_muinv = _PointOp(m.xi_d @ m.mu_inv)
        self._muinv_zeta = _PointOp(m.mu_inv @ m.zeta_d)

    def _split(self, v):
        v = np.asarray(v)
        if v.shape != (6 * self.n,):
            raise ValueError(f"expected a vector of length {6 * self.n}, got shape {v.shape}")
        return v[: 3 * self.n], v[3 * self.n:]

    def apply_B(self, v: np.ndarray) -> np.ndarray:
        e, h = self._split(v)
        return 1j * np.concatenate([self._zeta(e) + self._mu(h), -self._eps(e) - self._xi(h)])

    def apply_Binv(self, v: np.ndarray) -> np.ndarray:
        v1, v2 = self._split(v)
        t1 = -self._phi_inv(self._xi_muinv(v1) + v2)
        t2 = self._mu_inv(v1)
        return -1j * np.concatenate([t1, t2 - self._muinv_zeta(t1)])

    def hhpd_core_norm(self) -> float:
        """Largest point-wise 2-norm of the middle factor of ``A_r``; bounds ``||A_r||``."""
        m = self.medium
        phi_inv = np.linalg.inv(m.phi)
        left = m.mu_inv @ m.zeta_d
        right = m.xi_d @ m.mu_inv
        core = np.block([[left @ phi_inv @ right + m.mu_inv, left @ phi_inv],
                         [phi_inv @ right, phi_inv]])
        return float(np.linalg.norm(core, ord=2, axis=(1, 2)).max())

    def apply_hhpd_core(self, a: np.ndarray, b: np.ndarray):
        """Middle factor of ``A_r`` applied to ``(a, b)`` in the ``3n + 3n`` field space."""
        t1 = self._phi_inv(self._xi_muinv(a) + b)
        t2 = -self._mu_inv(a)
        return self._muinv_zeta(t1) - t2, t1


def apply_Binv(material: MaterialBlock, v):
    return material.apply_Binv(v)


@dataclass
class EigenResult:
    omega: np.ndarray
    reduced_vectors: np.ndarray  # (4n, l) in the solver's reduced coordinates
    fields: np.ndarray  # (6n, l) reconstructed (E, H)
    residuals: np.ndarray
    lanczos_iters: int = 0
    cg_iters_total: int = 0
    inner_solves: int = 0
    seconds: float = 0.0
    mode: str = "hhpd"
    seed: int | None = None
    rounds: int = 0
    multiplets: list = field(default_factory=list)

    @property
    def avg_cg_iters(self) -> float:
        return self.cg_iters_total / self.inner_solves if self.inner_solves else 0.0

    def telemetry(self, k=None) -> dict:
        return {
            "k": None if k is None else list(k),
            "l": int(len(self.omega)),
            "eigenvalues": [float(np.real(w)) for w in self.omega],
            "residuals": [float(r) for r in self.residuals],
            "lanczos_iters": int(self.lanczos_iters),
            "total_cg_iters": int(self.cg_iters_total),
            "avg_cg_iters": float(self.avg_cg_iters),
            "seconds": float(self.seconds),
        }


class NfsepOperator:
    """Reduced operators built from the SVD of ``C`` and the material block."""

    def __init__(self, svd: SvdFactors, material: MaterialBlock, mode: str = "general"):
        if mode not in ("general", "hhpd"):
            raise ValueError(f"mode must be 'general' or 'hhpd', got {mode!r}")
        if mode == "hhpd":
            report = check_assumption(material.medium)
            if not report.passed:
                raise ValueError("Hermitian positive definite reduction unavailable: " + "; ".join(report.messages))
        self.svd = svd
        self.material = material
        self.mode = mode
        self.n = svd.n
        self.sqrt_sigma = np.sqrt(svd.sigma_r)

    @property
    def size(self) -> int:
        return 4 * self.n

    def _check(self, y):
        y = np.asarray(y)
        if y.shape != (4 * self.n,):
            raise ValueError(f"expected a vector of length {4 * self.n}, got shape {y.shape}")
        return y

    def lift(self, y: np.ndarray) -> np.ndarray:
        """``diag(Pr, Qr) y`` into the ``6n`` field space."""
        n2 = 2 * self.n
        return np.concatenate([self.svd.apply_Pr(y[:n2]), self.svd.apply_Qr(y[n2:])])

    def matvec(self, y: np.ndarray) -> np.ndarray:
        y = self._check(y)
        n2 = 2 * self.n
        s = self.sqrt_sigma
        v = np.concatenate([self.svd.apply_Pr(s * y[:n2]), self.svd.apply_Qr(s * y[n2:])])
        w = self.material.apply_Binv(v)
        n3 = 3 * self.n
        return np.concatenate([s * self.svd.apply_Qr_adjoint(w[:n3]), s * self.svd.apply_Pr_adjoint(w[n3:])])

    def apply_Ar(self, u: np.ndarray) -> np.ndarray:
        u = self._check(u)
        n2 = 2 * self.n
        a = self.svd.apply_Pr(u[:n2])
        b = self.svd.apply_Qr(u[n2:])
        r1, r2 = self.material.apply_hhpd_core(a, b)
        return np.concatenate([self.svd.apply_Pr_adjoint(r1), self.svd.apply_Qr_adjoint(r2)])

    def apply_J(self, u: np.ndarray) -> np.ndarray:
        n2 = 2 * self.n
        s = self.svd.sigma_r
        return np.concatenate([1j * u[n2:] / s, -1j * u[:n2] / s])

    def apply_M(self, y: np.ndarray) -> np.ndarray:
        """``1j K diag(S, S) A_r y`` with ``K = [[0, I], [-I, 0]]``.

        Its eigenpairs are ``(omega, y)`` of the pencil; it is self-adjoint in
        the ``A_r`` inner product and involves no ``S^-1``.
        """
        n2 = 2 * self.n
        w = np.concatenate([self.svd.sigma_r, self.svd.sigma_r]) * self.apply_Ar(y)
        return 1j * np.concatenate([w[n2:], -w[:n2]])

    def omega_bound(self) -> float:
        """Upper bound on ``|omega|`` over the whole reduced spectrum."""
        return float(self.svd.sigma.max() * self.material.hhpd_core_norm())

    def gep_residual(self, theta, y, Jy, Ay) -> float:
        """Residual of the field pair that ``(1/theta, y)`` reconstructs, without forming it.

        The GEP residual lies in the range of ``diag(Pr, Qr)``, where it equals
        ``omega * diag(S, S) (J y - theta A_r y)`` up to a unitary factor.
        """
        s = np.concatenate([self.svd.sigma_r, self.svd.sigma_r])
        r = np.linalg.norm(s * (Jy - theta * Ay)) / abs(theta)
        return float(r / np.linalg.norm(self.to_fields(y, scaled=True)))

    def to_fields(self, y: np.ndarray, scaled: bool) -> np.ndarray:
        """Map reduced vectors back to ``x = B^-1 diag(Pr, Qr) y``.

        ``scaled`` is False for eigenvectors of the standard reduced problem,
        which first need ``y <- diag(S^1/2, S^1/2) y``.
        """
        if not scaled:
            y = np.concatenate([self.sqrt_sigma, self.sqrt_sigma]) * y
        return self.material.apply_Binv(self.lift(y))


def nfsep_matvec(op: NfsepOperator, y):
    return op.matvec(y)


def cg_solve(apply_A, b: np.ndarray, tol: float = CG_TOL, max_iter: int = 2000, x0=None):
    """Unpreconditioned conjugate gradients for a Hermitian positive definite operator.

    Returns ``(x, iterations)``; stops when ``||b - A x|| <= tol ||b||``.
    """
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply_A(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = np.vdot(r, r).real
    target = (tol * bnorm) ** 2
    iters = 0
    while rr > target:
        if iters >= max_iter:
            raise CGNotConverged(iters, np.sqrt(rr) / bnorm)
        Ap = apply_A(p)
        alpha = rr / np.vdot(p, Ap).real
        x += alpha * p
        r -= alpha * Ap
        rr_new = np.vdot(r, r).real
        p *= rr_new / rr
        p += r
        rr = rr_new
        iters += 1
    return x, iters


# --- invert Lanczos ---------------------------------------------------------

@dataclass
class _Locked:
    values: list = field(default_factory=list)
    X: list = field(default_factory=list)
    AX: list = field(default_factory=list)

    def arrays(self, N):
        if not self.X:
            return np.zeros((N, 0), complex), np.zeros((N, 0), complex)
        return np.column_stack(self.X), np.column_stack(self.AX)


class _Counter:
    def __init__(self):
        self.steps = 0
        self.cg = 0
        self.solves = 0


def _a_orthogonalize(w, Aw, X, AX):
    """Remove the A-projection of ``w`` onto the columns of ``X`` (two passes)."""
    total = np.zeros(X.shape[1], dtype=complex)
    for _ in range(2):
        if X.shape[1] == 0:
            break
        c = AX.conj().T @ w
        w = w - X @ c
        Aw = Aw - AX @ c
        total += c
    return w, Aw, total


def relative_pencil_residual(theta, y, Jy, Ay) -> float:
    """``||J y - theta A y|| / (|theta| ||A y||)``."""
    return float(np.linalg.norm(Jy - theta * Ay) / (abs(theta) * np.linalg.norm(Ay)))


def _stalled(history) -> bool:
    """True when the last ``STALL_RESTARTS`` restarts neither converged a further
    pair nor cut the leading unconverged residual by 10%."""
    if len(history) <= STALL_RESTARTS:
        return False
    recent, earlier = history[-STALL_RESTARTS:], history[:-STALL_RESTARTS]
    best = max(p for p, _ in earlier)
    if max(p for p, _ in recent) > best:
        return False
    now = min((r for p, r in recent if p == best), default=np.inf)
    before = min(r for p, r in earlier if p == best)
    return now > 0.9 * before


def _krylov_schur_round(apply_A, solve_A, apply_J, N, nev, m, tol, rng, locked: _Locked,
                        threshold: float, counter: _Counter, max_restarts: int, pair_residual):
    """One thick-restart Lanczos run in the A-orthogonal complement of ``locked``.

    Finds the largest eigenvalues of ``S = A^-1 J``, which is self-adjoint in
    the A-inner product.  The projected pencil is formed explicitly from the
    stored ``A V`` and ``J V`` so that inexact inner solves only perturb the
    search space, never the Ritz pairs; a pair counts as converged when
    ``pair_residual`` is at most ``tol``.  Stops once ``nev`` leading Ritz
    pairs have converged, or once the converged leading pairs already fall
    to ``threshold`` (nothing larger remains in this subspace).
    """
    LX, LAX = locked.arrays(N)
    m = min(m, N - LX.shape[1] - 1)
    if m < 1:
        return [], [], []
    nev = min(nev, m - 1) if m > 1 else 1

    def fresh_vector():
        v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        Av = apply_A(v)
        v, Av, _ = _a_orthogonalize(v, Av, LX, LAX)
        return v, Av

    V = np.zeros((N, m + 1), dtype=complex)
    Z = np.zeros((N, m + 1), dtype=complex)  # A V
    W = np.zeros((N, m), dtype=complex)  # J V
    v, Av = fresh_vector()
    nrm = np.sqrt(np.vdot(v, Av).real)
    V[:, 0] = v / nrm
    Z[:, 0] = Av / nrm
    k = 0
    history: list[tuple[int, float]] = []
    accept = tol
    for _restart in range(max_restarts):
        for j in range(k, m):
            Jv = apply_J(V[:, j])
            W[:, j] = Jv
            w, its = solve_A(Jv)
            counter.steps += 1
            counter.cg += its
            counter.solves += 1
            Aw = Jv
            # one sweep over locked and current basis together: projecting them
            # separately feeds the basis' tiny locked components back in scaled by |h|/beta
            w, Aw, c = _a_orthogonalize(w, Aw, np.hstack([LX, V[:, : j + 1]]),
                                        np.hstack([LAX, Z[:, : j + 1]]))
            h = c[LX.shape[1]:]
            # the tracked A w loses accuracy through cancellation; refresh it
            Aw = apply_A(w)
            beta = np.sqrt(max(np.vdot(w, Aw).real, 0.0))
            scale = max(np.abs(h).max(), 1e-300)
            if beta <= 1e-12 * scale:
                # invariant subspace: continue with a fresh direction
                w, Aw = fresh_vector()
                w, Aw, _ = _a_orthogonalize(w, Aw, np.hstack([LX, V[:, : j + 1]]),
                                            np.hstack([LAX, Z[:, : j + 1]]))
                beta = np.sqrt(np.vdot(w, Aw).real)
            V[:, j + 1] = w / beta
            Z[:, j + 1] = Aw / beta

        Hm = V[:, :m].conj().T @ W
        theta, Y = np.linalg.eigh(0.5 * (Hm + Hm.conj().T))
        order = np.argsort(theta)[::-1]
        theta, Y = theta[order], Y[:, order]
        X, AX, JX = V[:, :m] @ Y, Z[:, :m] @ Y, W @ Y

        def converged_prefix(level):
            p, r = 0, np.inf
            while p < min(nev, m):
                r = pair_residual(theta[p], X[:, p], JX[:, p], AX[:, p])
                if r > level:
                    break
                p += 1
            return p, r

        prefix, r = converged_prefix(accept)
        # a residual that has stopped improving sits at the attainable accuracy of
        # the inexact inner solves: accept from there on
        history.append((prefix, r))
        if prefix < nev and _stalled(history):
            accept = max(accept, 1.1 * min(h for p, h in history[-STALL_RESTARTS:] if p == prefix))
            history.clear()
            prefix, r = converged_prefix(accept)
        done = prefix >= nev or (prefix > 0 and theta[prefix - 1] <= threshold)
        if done:
            sel = slice(0, min(prefix, nev))
            return list(theta[sel]), list(X[:, sel].T), list(AX[:, sel].T)
        # keep the wanted part plus a buffer; converged-but-unwanted leave the basis
        keep = min(max(nev + (m - nev) // 2, prefix + 1), m - 1)
        V[:, :keep] = X[:, :keep]
        Z[:, :keep] = AX[:, :keep]
        W[:, :keep] = JX[:, :keep]
        V[:, keep] = V[:, m]
        Z[:, keep] = Z[:, m]
        k = keep
    raise RuntimeError(f"Lanczos did not converge within {max_restarts} restarts")


def invert_lanczos(apply_A, solve_A, apply_J, N: int, nev: int, tol: float, seed: int = 0,
                   basis_size: int | None = None, max_restarts: int = 500, max_rounds: int = 64,
                   pair_residual=relative_pencil_residual):
    """Largest ``nev`` eigenvalues of the Hermitian pencil ``J y = theta A y``.

    ``pair_residual(theta, y, J y, A y)`` decides convergence (default: the
    relative pencil residual).  Repeated eigenvalues are resolved by deflated
    rounds: each round restarts from a random vector A-orthogonal to
    everything found so far, and the search ends when a round adds nothing
    above the current ``nev``-th value.
    """
    m = basis_size or max(3 * nev, 20)
    rng = np.random.default_rng(seed)
    locked = _Locked()
    counter = _Counter()
    rounds = 0
    while rounds < max_rounds:
        vals = sorted(locked.values, reverse=True)
        threshold = vals[nev - 1] if len(vals) >= nev else -np.inf
        # multiplet tolerance: a copy of the current nev-th value changes nothing
        cut = threshold + 1e-8 * abs(threshold) if np.isfinite(threshold) else -np.inf
        theta, X, AX = _krylov_schur_round(apply_A, solve_A, apply_J, N, nev, m, tol, rng, locked,
                                           cut, counter, max_restarts, pair_residual)
        rounds += 1
        fresh = [i for i, t in enumerate(theta) if t > cut]
        if not fresh:
            break
        for i in fresh:
            locked.values.append(theta[i])
            locked.X.append(X[i])
            locked.AX.append(AX[i])
        if len(locked.values) >= N - 1:
            break
    order = np.argsort(locked.values)[::-1][:nev]
    thetas = np.array([locked.values[i] for i in order])
    vecs = np.column_stack([locked.X[i] for i in order]) if len(order) else np.zeros((N, 0), complex)
    return thetas, vecs, counter, rounds


def _multiplets(omega: np.ndarray, rtol: float = 1e-8) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, w in enumerate(omega):
        if groups and abs(w - omega[groups[-1][0]]) <= rtol * abs(w):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def residual(curl: CurlOperator, material: MaterialBlock, omega: complex, x: np.ndarray) -> float:
    """``||diag(C, C^*) x - omega B x|| / ||x||``."""
    n3 = 3 * curl.grid.n
    lhs = np.concatenate([curl.apply(x[:n3]), curl.apply_adjoint(x[n3:])])
    return float(np.linalg.norm(lhs - omega * material.apply_B(x)) / np.linalg.norm(x))


def polish_pairs(op: NfsepOperator, omega: np.ndarray, Y: np.ndarray, degree: int = POLISH_DEGREE):
    """Filter converged pairs with a Chebyshev polynomial in ``M**2`` and redo Rayleigh-Ritz.

    Inexact inner solves leave small components along eigenvectors with large
    ``|omega|``, which the GEP residual weights by ``|omega_j - omega|``.  The
    filter damps every ``|omega| > POLISH_CUTOFF * max(omega)`` relative to the
    wanted pairs using products with ``M`` only.  Returns ``(omega, Y, M Y)``
    or ``None`` when the filter does not apply.
    """
    nev = len(omega)
    if nev == 0 or degree < 1:
        return None
    lo = (POLISH_CUTOFF * float(np.max(omega))) ** 2
    hi = op.omega_bound() ** 2
    if lo >= hi:
        return None
    c, h = 0.5 * (hi + lo), 0.5 * (hi - lo)

    def step(u):
        return (op.apply_M(op.apply_M(u)) - c * u) / h

    F = np.empty_like(Y)
    for i in range(nev):
        t0, t1 = Y[:, i], step(Y[:, i])
        for _ in range(degree - 1):
            t0, t1 = t1, 2 * step(t1) - t0
        F[:, i] = t1 / np.linalg.norm(t1)
    AF = np.column_stack([op.apply_Ar(F[:, i]) for i in range(nev)])
    MF = np.column_stack([op.apply_M(F[:, i]) for i in range(nev)])
    Hm, Ha = AF.conj().T @ MF, F.conj().T @ AF
    w, C = sla.eigh(0.5 * (Hm + Hm.conj().T), 0.5 * (Ha + Ha.conj().T))
    keep = np.argsort(np.where(w > 0, w, np.inf))
    w, C = w[keep], C[:, keep]
    if not np.all(w > 0):
        return None
    return w, F @ C, MF @ C


def solve_hhpd(op: NfsepOperator, nev: int = 10, tol: float | None = None, cg_tol: float = HHPD_CG_TOL,
               cg_max_iter: int = 5000, seed: int = 0, curl: CurlOperator | None = None,
               basis_size: int | None = None, polish: bool = True) -> EigenResult:
    """Smallest positive frequencies through invert Lanczos on ``(J, A_r)``.

    A pair is accepted once its reconstructed GEP residual is at most ``tol``
    (or has stopped improving); ``polish`` then filters the converged block
    and keeps the result only if it lowers the worst residual without moving
    any frequency by more than ``1e-8`` relative.
    """
    t0 = time.perf_counter()
    if op.mode != "hhpd":
        raise ValueError("solve_hhpd needs an operator built in 'hhpd' mode")
    N = op.size
    if nev == 0:
        empty = np.zeros(0)
        return EigenResult(empty, np.zeros((N, 0), complex), np.zeros((6 * op.n, 0), complex), empty,
                           mode="hhpd", seed=seed)
    tol = default_eig_tol(op.svd.grid) if tol is None else tol

    def solve_A(b):
        return cg_solve(op.apply_Ar, b, tol=cg_tol, max_iter=cg_max_iter)

    thetas, Y, counter, rounds = invert_lanczos(op.apply_Ar, solve_A, op.apply_J, N, nev, tol,
                                                seed=seed, basis_size=basis_size,
                                                pair_residual=op.gep_residual)
    positive = thetas > 0
    omega = 1.0 / thetas[positive]
    Y = Y[:, positive]
    order = np.argsort(omega)
    omega, Y = omega[order], Y[:, order]
    curl = curl or CurlOperator(op.svd.grid, op.svd.k)

    def reconstruct(omega, Y):
        X = np.column_stack([op.to_fields(Y[:, i], scaled=True) for i in range(len(omega))]) \
            if len(omega) else np.zeros((6 * op.n, 0), complex)
        res = np.array([residual(curl, op.material, omega[i], X[:, i]) for i in range(len(omega))])
        return X, res

    X, res = reconstruct(omega, Y)
    if polish and len(omega):
        better = polish_pairs(op, omega, Y)
        if better is not None and len(better[0]) >= len(omega):
            w2, Y2 = better[0][: len(omega)], better[1][:, : len(omega)]
            if np.all(np.abs(w2 - omega) <= 1e-8 * np.abs(omega)):
                X2, res2 = reconstruct(w2, Y2)
                if res2.max() < res.max():
                    omega, Y, X, res = w2, Y2, X2, res2
    return EigenResult(omega, Y, X, res, counter.steps, counter.cg, counter.solves,
                       time.perf_counter() - t0, "hhpd", seed, rounds, _multiplets(omega))


def solve_general(op: NfsepOperator, nev: int = 10, sigma: float = 0.0, tol: float | None = None,
                  inner_tol: float = 1e-14, seed: int = 0, curl: CurlOperator | None = None,
                  extra: int = 6, inner_restart: int = 60, inner_maxiter: int = 200) -> EigenResult:
    """Eigenvalues of the reduced standard problem nearest ``sigma`` (shift-invert Arnoldi).

    Works for any invertible ``B``.  Returns the ``nev`` smallest eigenvalues
    with positive real part among those found near ``sigma``.
    """
    t0 = time.perf_counter()
    N = op.size
    if nev == 0:
        empty = np.zeros(0)
        return EigenResult(empty, np.zeros((N, 0), complex), np.zeros((6 * op.n, 0), complex), empty,
                           mode="general", seed=seed)
    tol = default_eig_tol(op.svd.grid) if tol is None else tol
    A = spla.LinearOperator((N, N), matvec=op.matvec, dtype=complex)
    # (D G D - sigma I) x = b is solved as (G - sigma D^-2) z = D^-1 b, x = D^-1 z, with
    # D = Sigma_r^(1/2) twice over; the unscaled core is far better conditioned
    d = np.sqrt(np.concatenate([op.svd.sigma_r, op.svd.sigma_r]))
    core = spla.LinearOperator(
        (N, N), matvec=lambda v: op.matvec(v / d) / d - (sigma / d**2) * v, dtype=complex)
    stats = {"solves": 0, "iters": 0}

    def opinv(b):
        count = [0]

        def cb(_):
            count[0] += 1

        z, info = spla.gmres(core, b / d, rtol=inner_tol, atol=0.0, restart=inner_restart,
                             maxiter=inner_maxiter, callback=cb, callback_type="pr_norm")
        x = z / d
        stats["solves"] += 1
        stats["iters"] += count[0]
        if info != 0:
            rel = np.linalg.norm(A.matvec(x) - sigma * x - b) / np.linalg.norm(b)
            raise InnerSolveStagnation(
                f"GMRES stalled after {count[0]} iterations (relative residual {rel:.3e}, info={info})"
            )
        return x

    kk = min(2 * nev + extra, N - 2)
    ncv = min(max(2 * kk + 1, 40), N - 1)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    OPinv = spla.LinearOperator((N, N), matvec=opinv, dtype=complex)
    vals, vecs = spla.eigs(A, k=kk, sigma=sigma, OPinv=OPinv, which="LM", ncv=ncv,
                           tol=RITZ_MARGIN * tol, v0=v0)
    keep = vals.real > 0
    vals, vecs = vals[keep], vecs[:, keep]
    order = np.argsort(vals.real)[:nev]
    omega, Y = vals[order], vecs[:, order]
    if np.all(np.abs(omega.imag) <= 1e-10 * np.abs(omega)):
        omega = omega.real
    X = np.column_stack([op.to_fields(Y[:, i], scaled=False) for i in range(len(omega))]) \
        if len(omega) else np.zeros((6 * op.n, 0), complex)
    curl = curl or CurlOperator(op.svd.grid, op.svd.k)
    res = np.array([residual(curl, op.material, omega[i], X[:, i]) for i in range(len(omega))])
    return EigenResult(omega, Y, X, res, stats["solves"], stats["iters"], stats["solves"],
                       time.perf_counter() - t0, "general", seed, 1, _multiplets(np.real(omega)))

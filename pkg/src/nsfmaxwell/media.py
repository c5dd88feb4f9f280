"""Discrete material tensors for chiral and pseudochiral simple-cubic crystals.

Every discrete tensor (``eps_d``, ``mu_d``, ``xi_d``, ``zeta_d``) couples
field components only at the same grid index, so it is stored as an array of
shape ``(n, 3, 3)``: entry ``[p, c, d]`` is the ``(c, d)`` block's diagonal at
grid index ``p``.  Applying such a tensor to a ``3n`` field is a batched
3x3 product, and inverses or Cholesky factors are computed point by point.

Sampling: the structure indicator is evaluated at grid nodes; the value at
the x-edge centre ``((i+1/2) dx, j dy, l dz)`` is the mean of the two nodes
along x, and likewise for y and z.  Permittivity and the magnetoelectric
filling ``I~`` both use these edge fractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid

KINDS = ("chiral", "pseudochiral", "custom")


@dataclass(frozen=True)
class Geometry:
    """Corner spheres of radius ``r`` joined by edge cylinders of radius ``s``."""

    r: float = 0.345
    s: float = 0.11
    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"lattice constant must be positive, got {self.a}")
        if not 0 < self.s < self.r:
            raise ValueError(f"need 0 < s < r, got r={self.r}, s={self.s}")


def indicator(geometry: Geometry, point) -> np.ndarray:
    """1 inside the sphere/cylinder network, 0 outside.

    ``point`` may be a single 3-vector or an array with the coordinates on the
    last axis; coordinates are wrapped into the primitive cell.
    """
    a = geometry.a
    p = np.mod(np.asarray(point, dtype=float), a)
    d = np.minimum(p, a - p)  # distance to the nearest cell face along each axis
    d2 = d**2
    in_sphere = d2.sum(axis=-1) < geometry.r**2
    s2 = geometry.s**2
    in_cyl = (
        (d2[..., 1] + d2[..., 2] < s2)  # x-directed edges
        | (d2[..., 0] + d2[..., 2] < s2)
        | (d2[..., 0] + d2[..., 1] < s2)
    )
    return (in_sphere | in_cyl).astype(int)


def node_indicator(grid: Grid, geometry: Geometry) -> np.ndarray:
    """Indicator at grid nodes as an array of shape ``(n3, n2, n1)``."""
    z = np.arange(grid.n3) * grid.delta_z
    y = np.arange(grid.n2) * grid.delta_y
    x = np.arange(grid.n1) * grid.delta_x
    Z, Y, X = np.meshgrid(z, y, x, indexing="ij")
    return indicator(geometry, np.stack([X, Y, Z], axis=-1)).astype(float)


def edge_fractions(grid: Grid, geometry: Geometry) -> np.ndarray:
    """Two-node averages of the indicator at the x, y and z edge centres, shape ``(3, n)``."""
    chi = node_indicator(grid, geometry)
    out = np.empty((3, grid.n))
    for c, axis in enumerate((2, 1, 0)):
        out[c] = 0.5 * (chi + np.roll(chi, -1, axis=axis)).ravel()
    return out


# --- point-tensor helpers --------------------------------------------------

def diagonal_tensor(values) -> np.ndarray:
    """``(3, n)`` component diagonals -> ``(n, 3, 3)`` point tensor."""
    values = np.asarray(values)
    n = values.shape[1]
    t = np.zeros((n, 3, 3), dtype=complex)
    idx = np.arange(3)
    t[:, idx, idx] = values.T
    return t


def tensor_apply(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply an ``(n, 3, 3)`` point tensor to a flat ``3n`` field."""
    n = t.shape[0]
    return np.einsum("pcd,dp->cp", t, v.reshape(3, n)).ravel()


def tensor_adjoint(t: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(t, 1, 2))


def tensor_to_sparse(t: np.ndarray):
    """Explicit ``3n x 3n`` sparse matrix of a point tensor."""
    import scipy.sparse as sp

    n = t.shape[0]
    blocks = [[sp.diags(t[:, c, d]) for d in range(3)] for c in range(3)]
    return sp.bmat(blocks, format="csr")


@dataclass(frozen=True, eq=False)
class MediumModel:
    kind: str
    eps_d: np.ndarray
    mu_d: np.ndarray
    xi_d: np.ndarray
    zeta_d: np.ndarray
    eps_inside: float = 1.0
    eps_outside: float = 1.0
    gamma: float = 0.0
    phi: np.ndarray = field(init=False, repr=False)
    mu_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown medium kind {self.kind!r}; expected one of {KINDS}")
        shapes = {t.shape for t in (self.eps_d, self.mu_d, self.xi_d, self.zeta_d)}
        if len(shapes) != 1 or next(iter(shapes))[1:] != (3, 3):
            raise ValueError(f"material tensors must share one (n, 3, 3) shape, got {shapes}")
        mu_inv = np.linalg.inv(self.mu_d)
        object.__setattr__(self, "mu_inv", mu_inv)
        object.__setattr__(self, "phi", self.eps_d - self.xi_d @ mu_inv @ self.zeta_d)

    @property
    def n(self) -> int:
        return self.eps_d.shape[0]

    def is_vacuum_like(self) -> bool:
        """True when every tensor is a multiple of the identity and there is no coupling."""
        eye = np.eye(3)
        scalar = lambda t: np.allclose(t, t[0, 0, 0] * eye, rtol=0, atol=0)
        return (scalar(self.eps_d) and scalar(self.mu_d)
                and not self.xi_d.any() and not self.zeta_d.any())


def build_medium(grid: Grid, geometry: Geometry, kind: str = "chiral",
                 eps_inside: float = 13.0, eps_outside: float = 1.0, gamma: float = 0.0,
                 require_hhpd: bool = False) -> MediumModel:
    """Sample a chiral or pseudochiral crystal onto the Yee grid.

    ``mu_d`` is the identity.  Chiral media couple every component with
    ``xi_d = 1j*gamma*I~`` and ``zeta_d = -1j*gamma*I~``; pseudochiral media
    couple only x with z, with a filling equal to the smaller of the x- and
    z-edge fractions so that ``Phi`` stays positive whenever
    ``eps_inside >= eps_outside`` and ``gamma < sqrt(eps_inside)``.
    """
    if kind not in ("chiral", "pseudochiral"):
        raise ValueError(f"build_medium builds chiral or pseudochiral media, got {kind!r}")
    if not (eps_inside > 0 and eps_outside > 0):
        raise ValueError(f"permittivities must be positive, got eps_i={eps_inside}, eps_o={eps_outside}")
    if gamma < 0:
        raise ValueError(f"chirality gamma must be >= 0, got {gamma}")
    if require_hhpd and gamma >= np.sqrt(eps_inside):
        raise ValueError(
            f"gamma={gamma} >= sqrt(eps_i)={np.sqrt(eps_inside):.6g}: Phi is not positive definite, "
            "the Hermitian positive definite reduction needs gamma < sqrt(eps_i)"
        )
    frac = edge_fractions(grid, geometry)
    eps = diagonal_tensor(eps_outside + (eps_inside - eps_outside) * frac)
    mu = diagonal_tensor(np.ones((3, grid.n)))
    xi = np.zeros((grid.n, 3, 3), dtype=complex)
    if kind == "chiral":
        idx = np.arange(3)
        xi[:, idx, idx] = 1j * gamma * frac.T
    else:
        fill = np.minimum(frac[0], frac[2])
        xi[:, 0, 2] = 1j * gamma * fill
        xi[:, 2, 0] = 1j * gamma * fill
    zeta = tensor_adjoint(xi)
    return MediumModel(kind, eps, mu, xi, zeta, float(eps_inside), float(eps_outside), float(gamma))


def custom_medium(eps_d, mu_d, xi_d, zeta_d) -> MediumModel:
    """Wrap user-supplied ``(n, 3, 3)`` tensors (no checks beyond shape)."""
    as_c = lambda t: np.asarray(t, dtype=complex)
    return MediumModel("custom", as_c(eps_d), as_c(mu_d), as_c(xi_d), as_c(zeta_d))


@dataclass(frozen=True)
class AssumptionReport:
    passed: bool
    mu_min_eig: float
    phi_min_eig: float
    xi_adjoint_is_zeta: bool
    hermitian: bool
    messages: tuple[str, ...] = ()


def _hermitian(t) -> bool:
    return np.allclose(t, tensor_adjoint(t), rtol=0, atol=1e-14 * max(1.0, np.abs(t).max()))


def check_assumption(model: MediumModel) -> AssumptionReport:
    """Check ``mu_d > 0``, ``Phi > 0`` and ``xi_d^* == zeta_d``."""
    msgs = []
    herm = _hermitian(model.mu_d) and _hermitian(model.phi)
    if not herm:
        msgs.append("mu_d or Phi is not Hermitian")
    mu_min = float(np.linalg.eigvalsh(0.5 * (model.mu_d + tensor_adjoint(model.mu_d))).min())
    phi_min = float(np.linalg.eigvalsh(0.5 * (model.phi + tensor_adjoint(model.phi))).min())
    if mu_min <= 0:
        msgs.append(f"mu_d is not positive definite (min eigenvalue {mu_min:.6g})")
    if phi_min <= 0:
        msgs.append(f"Phi is not positive definite (min eigenvalue {phi_min:.6g})")
    adj = bool(np.array_equal(tensor_adjoint(model.xi_d), model.zeta_d))
    if not adj:
        msgs.append("xi_d^* != zeta_d")
    passed = herm and mu_min > 0 and phi_min > 0 and adj
    return AssumptionReport(passed, mu_min, phi_min, adj, herm, tuple(msgs))

"""Null-space-free band structures of 3-D chiral and pseudochiral photonic crystals.

The Yee discretization of the source-free Maxwell equations gives
``diag(C, C^*) x = omega B x``; the closed-form SVD of the single curl ``C``
(applied with FFTs) removes its ``2n``-dimensional null space before any
iterative eigensolve.
"""

from .lattice import (BrillouinPath, Grid, WaveVector, gamma_shift_for, make_grid, sample_path,
                      sample_path_detailed, sc_brillouin_path)
from .curl import CurlOperator, build_curl
from .spectral import (RankConditionError, SvdFactors, apply_Pr, apply_Pr_adjoint, apply_Qr,
                       apply_Qr_adjoint, build_svd, eigen_diagonals)
from .media import Geometry, MediumModel, build_medium, check_assumption, custom_medium
from .nfsep import (EigenResult, MaterialBlock, NfsepOperator, apply_Binv, cg_solve, default_eig_tol,
                    nfsep_matvec, residual, solve_general, solve_hhpd)

__all__ = [
    "BrillouinPath", "Grid", "WaveVector", "gamma_shift_for", "make_grid", "sample_path",
    "sample_path_detailed", "sc_brillouin_path",
    "CurlOperator", "build_curl",
    "RankConditionError", "SvdFactors", "apply_Pr", "apply_Pr_adjoint", "apply_Qr", "apply_Qr_adjoint",
    "build_svd", "eigen_diagonals",
    "Geometry", "MediumModel", "build_medium", "check_assumption", "custom_medium",
    "EigenResult", "MaterialBlock", "NfsepOperator", "apply_Binv", "cg_solve", "default_eig_tol",
    "nfsep_matvec", "residual", "solve_general", "solve_hhpd",
]

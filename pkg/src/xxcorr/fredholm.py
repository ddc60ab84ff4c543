"""Nystrom discretisation of the integrable kernel and assembly of g(n, t).

The kernel
    V(lam, mu) = [e_+(lam) e_-(mu) - e_-(lam) e_+(mu)] / (pi (lam - mu))
acts on functions on the unit circle through the plain line element dmu,
discretised by the trapezoidal rule on a :class:`CircleGrid`.  From the
resolvent solutions f_+- of (1 + V) f = e the potentials B_kj, the
dressed potentials b_++, b_-- and the correlator
    g = SIGN * exp(-2iht) * b_++ * det(1 + V)
are assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import NumericalFailure, SingularDeterminant
from .grid import CircleGrid
from .model import ModelParams
from .special import GridWeights, green_G, weights_on_grid

# Global sign relating exp(-2iht) b_++ det(1+V) to the thermal average
# <sigma^+_{n2}(t) sigma^-_{n1}(0)>; fixed once against exact diagonalisation.
SIGN = -1.0

# Operator measure: (V f)(lam) = MEASURE * contour int V(lam, mu) f(mu) dmu.
MEASURE = 1.0

# Reciprocal condition number below which 1 + V is treated as singular.
SINGULAR_RCOND = 1e-12

RESOLVENT_TOL = 1e-10

PLUS, MINUS = +1, -1


@dataclass
class KernelSystem:
    params: ModelParams
    grid: CircleGrid
    kernel: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    lu: tuple = field(repr=False)
    rcond: float
    weights: GridWeights = field(repr=False)

    @property
    def singular(self) -> bool:
        return self.rcond < SINGULAR_RCOND

    def failure_context(self) -> dict:
        p = self.params
        return dict(n=p.n, t=p.t, h=p.h, T=p.T, N=self.grid.size)

    def e(self, k: int) -> np.ndarray:
        return self.weights.e_plus if k == PLUS else self.weights.e_minus


def kernel_matrix(w: GridWeights, grid: CircleGrid) -> np.ndarray:
    """V(lam_j, lam_k) with the diagonal taken as the limit e_-^2 E' / pi."""
    lam = grid.lam
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, 1.0)
    V = np.outer(w.e_minus, w.e_minus) * (w.E[:, None] - w.E[None, :]) / (np.pi * diff)
    np.fill_diagonal(V, w.e_minus**2 * w.dE / np.pi)
    return V


def build_kernel(params: ModelParams, grid: CircleGrid) -> KernelSystem:
    """Discretise 1 + V on ``grid`` and LU-factorise it."""
    w = weights_on_grid(params, grid)
    V = kernel_matrix(w, grid)
    matrix = np.eye(grid.size, dtype=complex) + MEASURE * V * grid.weights[None, :]
    lu, piv = sla.lu_factor(matrix, check_finite=False)
    ctx = dict(n=params.n, t=params.t, h=params.h, T=params.T, N=grid.size)
    if np.any(np.diag(lu) == 0):
        raise NumericalFailure("exact zero pivot in LU of 1 + V", **ctx)
    anorm = np.linalg.norm(matrix, 1)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0:
        raise NumericalFailure("condition estimate failed", **ctx)
    return KernelSystem(params, grid, V, matrix, (lu, piv), float(rcond), w)


def _log_det_lu(lu: np.ndarray, piv: np.ndarray) -> complex:
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    # fixed summation order keeps repeated runs bit-identical
    total = complex(np.sum(np.log(np.diag(lu).astype(complex))))
    if swaps % 2:
        total += 1j * math.pi
    return total


def log_det(system: KernelSystem) -> complex:
    """sigma = sum of principal logs of the U pivots (+ i pi for an odd permutation)."""
    if system.singular:
        raise SingularDeterminant(
            "det(1 + V) vanishes to working precision", rcond=system.rcond, **system.failure_context()
        )
    return _log_det_lu(*system.lu)


def solve_resolvent(system: KernelSystem, k: int) -> np.ndarray:
    """Solve (1 + V) f_k = e_k at the grid nodes, checking the residual."""
    if system.singular:
        raise SingularDeterminant("1 + V is singular", rcond=system.rcond, **system.failure_context())
    e = system.e(k)
    f = sla.lu_solve(system.lu, e, check_finite=False)
    resid = np.max(np.abs(system.matrix @ f - e))
    scale = np.max(np.abs(e))
    if resid > RESOLVENT_TOL * max(scale, np.finfo(float).tiny):
        raise NumericalFailure("resolvent residual too large", residual=resid, k=k, **system.failure_context())
    return f


def nystrom_interpolate(system: KernelSystem, f: np.ndarray, k: int, p: np.ndarray) -> np.ndarray:
    """Evaluate f_k at arbitrary angles through the Nystrom formula f = e_k - V f."""
    from .special import _e_minus, pv_E
    from .grid import CirclePoint
    from .model import fermi_weight

    params, grid = system.params, system.grid
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty(p.size, dtype=complex)
    w = system.weights
    for i, angle in enumerate(p):
        point = CirclePoint.from_angle(angle)
        pb = grid.branch + (point.p - grid.branch) % (2 * math.pi)
        em = complex(_e_minus(params.n, params.t, pb, point.p, fermi_weight(point.p, params)))
        E = pv_E(params.n, params.t, point, grid)
        ek = em * E if k == PLUS else em
        diff = point.lam - grid.lam
        row = em * w.e_minus * (E - w.E) / (np.pi * diff)
        out[i] = ek - MEASURE * np.sum(row * grid.weights * f)
    return out


def potentials(f_plus, f_minus, e_plus, e_minus, grid: CircleGrid) -> np.ndarray:
    """B_kj = (1/2 pi i) contour int f_k e_j dlam / lam; index 0 is '+', 1 is '-'."""
    measure = grid.weights / (2j * np.pi * grid.lam)
    fs = (f_plus, f_minus)
    es = (e_plus, e_minus)
    return np.array([[np.sum(fk * ej * measure) for ej in es] for fk in fs])


@dataclass
class PotentialSet:
    """Everything assembled at one (n, t).

    When det(1 + V) vanishes on the grid (``singular``), sigma is -inf, the
    B/b entries are NaN and g is obtained from bordered determinants.
    """

    params: ModelParams
    grid_size: int
    G: complex
    B: np.ndarray
    b_pp: complex
    b_mm: complex
    sigma: complex
    g: complex
    singular: bool = False
    warnings: list[str] = field(default_factory=list)


def _bordered_det(matrix: np.ndarray, u: np.ndarray, v: np.ndarray) -> complex:
    """det([[M, u], [v^T, 0]]) = -det(M) v^T M^{-1} u, finite even when M is singular."""
    size = matrix.shape[0]
    big = np.zeros((size + 1, size + 1), dtype=complex)
    big[:size, :size] = matrix
    big[:size, size] = u
    big[size, :size] = v
    lu, piv = sla.lu_factor(big, check_finite=False)
    return complex(np.exp(_log_det_lu(lu, piv)))


def _assemble_singular(system: KernelSystem, G: complex) -> PotentialSet:
    grid = system.grid
    measure = grid.weights / (2j * np.pi * grid.lam)
    w = system.weights
    # det(M) B_kj = -det([[M, e_k], [e_j * measure, 0]]) and det(M) ~ 0
    dB_pp = -_bordered_det(system.matrix, w.e_plus, w.e_plus * measure)
    dB_pm = -_bordered_det(system.matrix, w.e_plus, w.e_minus * measure)
    b_pp_det = dB_pp - 2j * G * dB_pm
    p = system.params
    g = SIGN * np.exp(-2j * p.h * p.t) * b_pp_det
    nan = complex(np.nan, np.nan)
    return PotentialSet(
        p, grid.size, G, np.full((2, 2), nan), nan, nan, complex(-np.inf, 0.0), complex(g),
        singular=True,
        warnings=p.warnings + ["det(1+V) vanishes on the grid; g from bordered determinants"],
    )


def assemble(params: ModelParams, grid: CircleGrid | None = None) -> PotentialSet:
    """Full pipeline: weights, kernel, log-det, resolvent, B, b and g."""
    if grid is None:
        grid = CircleGrid.for_point(params.n, params.t)
    return _assemble_cached(params, grid.size, grid.offset, grid.branch)


@lru_cache(maxsize=4096)
def _assemble_cached(params: ModelParams, size: int, offset: float, branch: float) -> PotentialSet:
    grid = CircleGrid(size, offset, branch)
    system = build_kernel(params, grid)
    G = green_G(params.n, params.t)
    if system.singular:
        return _assemble_singular(system, G)
    sigma = log_det(system)
    f_plus = solve_resolvent(system, PLUS)
    f_minus = solve_resolvent(system, MINUS)
    B = potentials(f_plus, f_minus, system.weights.e_plus, system.weights.e_minus, grid)
    b_mm = complex(B[1, 1])
    b_pp = complex(B[0, 0] - 2j * G * B[0, 1] - G)
    g = SIGN * np.exp(-2j * params.h * params.t) * b_pp * np.exp(sigma)
    warnings = list(params.warnings)
    if abs(g) > 1 + 1e-8:
        raise NumericalFailure("|g| exceeds 1", abs_g=abs(g), n=params.n, t=params.t, h=params.h, T=params.T, N=size)
    return PotentialSet(params, size, G, B, b_pp, b_mm, sigma, complex(g), warnings=warnings)


def correlator(n: int, t: float, h: float, T: float, grid_size: int | None = None) -> complex:
    """Convenience wrapper returning g(n, t) only."""
    params = ModelParams(h, T, n, t)
    grid = CircleGrid(grid_size) if grid_size else None
    return assemble(params, grid).g

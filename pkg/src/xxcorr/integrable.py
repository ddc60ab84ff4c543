"""Residual checks of the Ablowitz-Ladik equations and the tau-function identities.

The potentials b_++(n, t), b_--(n, t) and sigma(n, t) computed from the
determinant are inserted into

    AL_minus:  (i/2) d/dt b_--(n) = (1 + 4 b_-- b_++)(b_--(n+1) + b_--(n-1))
    AL_plus:  -(i/2) d/dt b_++(n) = (1 + 4 b_-- b_++)(b_++(n+1) + b_++(n-1))
    TAU_20:   (1/16) d^2/dt^2 sigma(n) = 2 b_-- b_++ - b_++(n-1) b_--(n+1) - b_--(n-1) b_++(n+1)
                                         - 4 b_++ b_-- [b_++(n-1) b_--(n+1) + b_--(n-1) b_++(n+1)]
    TAU_21:   sigma(n+1) + sigma(n-1) - 2 sigma(n) = ln(1 + 4 b_-- b_++)      (mod 2 pi i)
    TAU_22:   d/dt [sigma(n+1) - sigma(n)] = 8i [b_++(n+1) b_--(n) - b_++(n) b_--(n+1)]

Time derivatives are central differences with step ``fd_step``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import DomainError
from .fredholm import PotentialSet, assemble
from .grid import CircleGrid
from .model import ModelParams

Potential = Callable[[int, float], complex]


class EquationId(str, Enum):
    AL_MINUS = "AL_minus"
    AL_PLUS = "AL_plus"
    TAU_20 = "TAU_20"
    TAU_21 = "TAU_21"
    TAU_22 = "TAU_22"


@dataclass(frozen=True)
class ResidualReport:
    equation_id: EquationId
    point: tuple[int, float, float, float]
    lhs: complex
    rhs: complex
    abs_residual: float
    fd_step: float | None = None

    @classmethod
    def of(cls, equation_id, point, lhs, rhs, fd_step=None) -> "ResidualReport":
        return cls(EquationId(equation_id), point, complex(lhs), complex(rhs), abs(lhs - rhs), fd_step)


def _check_step(fd_step: float) -> None:
    if not 1e-5 <= fd_step <= 1e-2:
        raise DomainError(f"fd_step must lie in [1e-5, 1e-2], got {fd_step!r}")


class _Evaluator:
    """Memoised access to assembled quantities at neighbouring (n, t)."""

    def __init__(self, params: ModelParams, grid_size: int | None, offset: float, branch: float):
        self.params = params
        self.grid_size = grid_size
        self.offset = offset
        self.branch = branch

    def __call__(self, n: int, t: float) -> PotentialSet:
        p = self.params.at(n=n, t=t)
        size = self.grid_size or CircleGrid.for_point(p.n, p.t).size
        return assemble(p, CircleGrid(size, self.offset, self.branch))

    def sigma(self, n, t):
        return self(n, t).sigma

    def b_pp(self, n, t):
        return self(n, t).b_pp

    def b_mm(self, n, t):
        return self(n, t).b_mm

    def require_regular(self, *points):
        from .errors import SingularDeterminant

        for n, t in points:
            ps = self(n, t)
            if ps.singular:
                p = self.params
                raise SingularDeterminant(
                    "identity needs sigma and b at a point where det(1+V) = 0",
                    n=n, t=t, h=p.h, T=p.T, N=ps.grid_size,
                )


def _grid_for(params: ModelParams, grid_size: int | None) -> int:
    # one grid for all neighbours keeps the finite differences consistent
    if grid_size:
        return grid_size
    return CircleGrid.for_point(abs(params.n) + 1, abs(params.t) + 0.01).size


def al_residuals_from(b_mm: Potential, b_pp: Potential, n: int, t: float, fd_step: float,
                      point=None) -> tuple[ResidualReport, ResidualReport]:
    """AL residuals for arbitrary potential functions (n, t) -> complex."""
    d = fd_step
    point = point or (n, t, math.nan, math.nan)
    mm, pp = b_mm(n, t), b_pp(n, t)
    coupling = 1 + 4 * mm * pp
    lhs_m = 0.5j * (b_mm(n, t + d) - b_mm(n, t - d)) / (2 * d)
    rhs_m = coupling * (b_mm(n + 1, t) + b_mm(n - 1, t))
    lhs_p = -0.5j * (b_pp(n, t + d) - b_pp(n, t - d)) / (2 * d)
    rhs_p = coupling * (b_pp(n + 1, t) + b_pp(n - 1, t))
    return (
        ResidualReport.of(EquationId.AL_MINUS, point, lhs_m, rhs_m, d),
        ResidualReport.of(EquationId.AL_PLUS, point, lhs_p, rhs_p, d),
    )


def al_residuals(params: ModelParams, fd_step: float = 1e-3, grid_size: int | None = None,
                 offset: float = 0.0, branch: float = 0.0) -> tuple[ResidualReport, ResidualReport]:
    """Ablowitz-Ladik residuals at (params.n, params.t) from determinant data."""
    _check_step(fd_step)
    ev = _Evaluator(params, _grid_for(params, grid_size), offset, branch)
    n, t, d = params.n, params.t, fd_step
    ev.require_regular((n, t), (n + 1, t), (n - 1, t), (n, t + d), (n, t - d))
    return al_residuals_from(ev.b_mm, ev.b_pp, n, t, d, point=(n, t, params.h, params.T))


def _wrap_2pi_i(z: complex) -> complex:
    """Multiple of 2 pi i nearest to z."""
    return 2j * math.pi * round(z.imag / (2 * math.pi))


def tau_residuals(params: ModelParams, fd_step: float = 1e-3, grid_size: int | None = None,
                  offset: float = 0.0, branch: float = 0.0) -> tuple[ResidualReport, ResidualReport, ResidualReport]:
    """Residuals of the three sigma identities at (params.n, params.t)."""
    _check_step(fd_step)
    ev = _Evaluator(params, _grid_for(params, grid_size), offset, branch)
    n, t, d = params.n, params.t, fd_step
    point = (n, t, params.h, params.T)
    ev.require_regular(
        (n, t), (n + 1, t), (n - 1, t), (n, t + d), (n, t - d), (n + 1, t + d), (n + 1, t - d)
    )
    s, b_pp, b_mm = ev.sigma, ev.b_pp, ev.b_mm

    # sigma is a canonical sum of principal logs; only differences mod 2 pi i matter
    s0 = s(n, t)
    dp, dm = s(n, t + d) - s0, s(n, t - d) - s0
    dp -= _wrap_2pi_i(dp)
    dm -= _wrap_2pi_i(dm)
    lhs20 = (dp + dm) / d**2 / 16
    pp, mm = b_pp(n, t), b_mm(n, t)
    cross = b_pp(n - 1, t) * b_mm(n + 1, t) + b_mm(n - 1, t) * b_pp(n + 1, t)
    rhs20 = 2 * mm * pp - b_pp(n - 1, t) * b_mm(n + 1, t) - b_mm(n - 1, t) * b_pp(n + 1, t) - 4 * pp * mm * cross
    r20 = ResidualReport.of(EquationId.TAU_20, point, lhs20, rhs20, d)

    lhs21 = s(n + 1, t) + s(n - 1, t) - 2 * s0
    rhs21 = complex(_log(1 + 4 * mm * pp))
    lhs21 -= _wrap_2pi_i(lhs21 - rhs21)
    r21 = ResidualReport.of(EquationId.TAU_21, point, lhs21, rhs21)

    up = s(n + 1, t + d) - s(n, t + d)
    down = s(n + 1, t - d) - s(n, t - d)
    delta = up - down
    delta -= _wrap_2pi_i(delta)
    lhs22 = delta / (2 * d)
    rhs22 = 8j * (b_pp(n + 1, t) * mm - pp * b_mm(n + 1, t))
    r22 = ResidualReport.of(EquationId.TAU_22, point, lhs22, rhs22, d)
    return r20, r21, r22


def _log(z: complex) -> complex:
    import cmath

    return cmath.log(z)


def richardson_ratio(residual: Callable[[float], float], coarse: float = 1e-2, fine: float = 1e-3) -> float:
    """residual(coarse) / residual(fine); about (coarse/fine)^2 for a second-order difference."""
    return residual(coarse) / residual(fine)

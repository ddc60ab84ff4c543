"""Special functions of the determinant representation.

* ``bessel_j``: integer-order Bessel function (series / Miller recurrence),
  used as an independent check of the lattice Green function.
* ``green_G``: G(n, t) = (1/2 pi i) * contour int lam^(n-1) exp(2it(lam + 1/lam)) dlam.
* ``pv_E``: principal-value Cauchy integral
  E(n, t, lam) = (1/pi) v.p. int exp(2it(mu + 1/mu)) mu^n dmu / (mu - lam).
* ``weights``: the pair e_-(lam) = lam^(-n/2) e^(-it(lam + 1/lam)) sqrt(v), e_+ = e_- E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import CircleGrid, CirclePoint, node_count
from .model import ModelParams, fermi_weight

SERIES_LIMIT = 12.0
# Below this distance to a node the difference quotient is replaced by a Taylor expansion.
NEAR_NODE = 1e-7


def bessel_j(n: int, x: float) -> float:
    """Bessel function J_n(x) of integer order.

    Ascending series for |x| <= 12, Miller's backward recurrence normalised
    by J_0 + 2 * sum J_2k = 1 otherwise.
    """
    n = int(n)
    x = float(x)
    sign = 1.0
    if n < 0:
        n = -n
        sign *= (-1) ** n
    if x < 0:
        x = -x
        sign *= (-1) ** n
    if x == 0.0:
        return sign * (1.0 if n == 0 else 0.0)
    if x <= SERIES_LIMIT:
        return sign * _bessel_series(n, x)
    return sign * _bessel_miller(n, x)


def _bessel_series(n: int, x: float) -> float:
    half = 0.5 * x
    term = math.exp(n * math.log(half) - math.lgamma(n + 1))
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= -q / (k * (k + n))
        total += term
        if abs(term) < 1e-17 * abs(total) and k > q:
            return total


def _bessel_miller(n: int, x: float) -> float:
    top = max(n, int(x))
    start = top + 30 + int(math.sqrt(40.0 * top))
    start += start % 2
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            result *= 1e-250
        if (k - 1) == n:
            result = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur
    return result / norm


def green_G(n: int, t: float) -> complex:
    """Lattice Green function G(n, t) by trapezoidal quadrature on the unit circle.

    Equals i^n J_n(4t); satisfies dG/dt = 2i (G(n+1) + G(n-1)).
    """
    size = node_count(n, t)
    p = 2 * np.pi * np.arange(size) / size
    return complex(np.mean(np.exp(1j * (n * p + 4 * t * np.cos(p)))))


def _phi(mu, n, t):
    return np.exp(2j * t * (mu + 1 / mu)) * mu**n


def _phi_derivatives(mu, n, t):
    phi = _phi(mu, n, t)
    g = n / mu + 2j * t * (1 - mu**-2)
    dg = -n / mu**2 + 4j * t / mu**3
    return phi, phi * g, phi * (g * g + dg)


def pv_E(n: int, t: float, lam: CirclePoint, grid: CircleGrid) -> complex:
    """E(n, t, lam) for one point on the circle, by singularity subtraction on ``grid``.

    E = (1/pi) [ contour int (phi(mu) - phi(lam)) / (mu - lam) dmu + i pi phi(lam) ],
    with phi(mu) = exp(2it(mu + 1/mu)) mu^n. Nodes coinciding with ``lam`` take
    the limit phi'(lam).
    """
    l0 = lam.lam
    phi0, dphi0, d2phi0 = _phi_derivatives(l0, n, t)
    mu = grid.lam
    diff = mu - l0
    near = np.abs(diff) < NEAR_NODE
    safe = np.where(near, 1.0, diff)
    quotient = np.where(near, dphi0 + 0.5 * d2phi0 * diff, (_phi(mu, n, t) - phi0) / safe)
    return complex((np.sum(quotient * grid.weights) + 1j * np.pi * phi0) / np.pi)


def pv_E_on_grid(n: int, t: float, grid: CircleGrid) -> np.ndarray:
    """E(n, t, lam_j) at every node of ``grid`` (the nodes also serve as quadrature points)."""
    lam = grid.lam
    phi, dphi, _ = _phi_derivatives(lam, n, t)
    diff = lam[None, :] - lam[:, None]
    np.fill_diagonal(diff, 1.0)
    quotient = (phi[None, :] - phi[:, None]) / diff
    np.fill_diagonal(quotient, dphi)
    return (quotient @ grid.weights + 1j * np.pi * phi) / np.pi


def spectral_derivative(values: np.ndarray) -> np.ndarray:
    """d/dp of periodic samples on an equispaced grid (Nyquist mode dropped)."""
    size = values.shape[-1]
    k = np.fft.fftfreq(size, 1.0 / size)
    if size % 2 == 0:
        k[size // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(values))


@dataclass(frozen=True)
class WeightPair:
    e_minus: complex
    e_plus: complex
    E_value: complex


def _e_minus(n, t, p_branch, p, v):
    return np.exp(-0.5j * n * p_branch) * np.exp(-2j * t * np.cos(p)) * np.sqrt(v)


def weights(n: int, t: float, lam: CirclePoint, params: ModelParams, grid: CircleGrid) -> WeightPair:
    """e_-(lam) and e_+(lam) = e_-(lam) E(n, t, lam) at a single point.

    lam^(-n/2) is exp(-i n p / 2) with p taken in [grid.branch, grid.branch + 2 pi).
    """
    p_branch = grid.branch + (lam.p - grid.branch) % (2 * math.pi)
    v = fermi_weight(lam.p, params)
    e_minus = complex(_e_minus(n, t, p_branch, lam.p, v))
    E = pv_E(n, t, lam, grid)
    return WeightPair(e_minus, e_minus * E, E)


@dataclass(frozen=True)
class GridWeights:
    """Vectorised weights on all nodes of a grid, plus dE/dlam for the kernel diagonal."""

    e_minus: np.ndarray
    e_plus: np.ndarray
    E: np.ndarray
    dE: np.ndarray
    v: np.ndarray


def weights_on_grid(params: ModelParams, grid: CircleGrid) -> GridWeights:
    n, t = params.n, params.t
    v = fermi_weight(grid.p, params)
    e_minus = _e_minus(n, t, grid.branch_angle(), grid.p, v)
    E = pv_E_on_grid(n, t, grid)
    dE = spectral_derivative(E) / (1j * grid.lam)
    return GridWeights(e_minus, e_minus * E, E, dE, v)

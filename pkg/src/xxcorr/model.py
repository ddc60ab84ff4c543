"""Physical parameters of the XX chain, the Fermi weight and the free energy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import graded_quad


@dataclass(frozen=True)
class ModelParams:
    """Field ``h``, temperature ``T`` and the separations ``n`` (sites), ``t`` (time)."""

    h: float
    T: float
    n: int = 0
    t: float = 0.0

    def __post_init__(self):
        for name in ("h", "T", "t"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite, got {getattr(self, name)!r}")
        if self.T <= 0:
            raise DomainError(f"temperature must be positive, got T={self.T!r}")
        if int(self.n) != self.n:
            raise DomainError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def warnings(self) -> list[str]:
        if 0 <= self.h < 2:
            return []
        return [f"field h={self.h:g} outside the regime 0 <= h < 2"]

    def at(self, n: int | None = None, t: float | None = None) -> "ModelParams":
        """Same field and temperature at another space-time point."""
        return ModelParams(self.h, self.T, self.n if n is None else n, self.t if t is None else t)


def quasiparticle_energy(p, h):
    """Single-fermion dispersion -4 cos p + 2h."""
    return -4.0 * np.cos(p) + 2.0 * h


def _logistic(x):
    # 1 / (1 + e^x) without overflow for either sign of x
    x = np.asarray(x, dtype=float)
    ex = np.exp(-np.abs(x))
    return np.where(x >= 0, ex / (1.0 + ex), 1.0 / (1.0 + ex))


def fermi_weight(p, params: ModelParams):
    """Thermal occupation v(p) = 1 / (1 + exp((2h - 4 cos p) / T)) of the mode e^{ip}."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise DomainError("fermi_weight needs finite angles")
    v = _logistic(quasiparticle_energy(p, params.h) / params.T)
    return v if v.ndim else float(v)


def _log1p_exp(z):
    """Principal branch of ln(1 + e^z) for complex z, stable for large |Re z|."""
    z = np.asarray(z, dtype=complex)
    big = z.real > 0
    out = np.empty_like(z)
    out[~big] = np.log1p(np.exp(z[~big]))
    zb = z[big]
    w = zb + np.log1p(np.exp(-zb))
    # fold the imaginary part back to the principal branch (-pi, pi]
    w = w - 2j * np.pi * np.round(w.imag / (2 * np.pi))
    out[big] = w
    return out


def free_energy(h: complex, T: float) -> complex:
    """Free energy per site f(h) = -h - T/(2 pi) * int ln(1 + exp((4 cos p - 2h)/T)) dp.

    Complex ``h`` is accepted; the logarithm is taken on its principal
    branch pointwise. When ``Im h`` makes 1 + e^z vanish on the circle the
    integrand has logarithmic singularities at cos p = Re(h)/2, which are
    handled by graded quadrature.
    """
    if not T > 0:
        raise DomainError(f"temperature must be positive, got T={T!r}")
    h = complex(h)
    singular = []
    if h.imag != 0 and abs(h.real) <= 2:
        p0 = math.acos(h.real / 2)
        singular = [-p0, p0]

    def integrand(p):
        return _log1p_exp((4.0 * np.cos(p) - 2.0 * h) / T)

    if h.imag == 0:
        integral = graded_quad(lambda p: integrand(p).real, -math.pi, math.pi)
    else:
        integral = graded_quad(integrand, -math.pi, math.pi, singular=singular, tol=1e-12)
    f = -h - T / (2 * math.pi) * integral
    return complex(f)


def magnetization(h: float, T: float) -> float:
    """<sigma^z> per site, equal to 1 - (1/pi) * int v(p) dp = -df/dh."""
    params = ModelParams(h, T)
    return 1.0 - graded_quad(lambda p: fermi_weight(p, params), -math.pi, math.pi) / math.pi


def mean_fermi_weight(h: float, T: float) -> float:
    """(1 / 2 pi) * int v(p) dp over the circle."""
    params = ModelParams(h, T)
    return graded_quad(lambda p: fermi_weight(p, params), -math.pi, math.pi) / (2 * math.pi)

"""Asymptotic decay of g(n, t) in the space-like and time-like cones.

Direction: n / 4t = cot(phi).  Space-like (n > 4t):
    ln|g| ~ ln C + n * rate(h, T),   rate = (1/2 pi) int ln|tanh((h - 2 cos p)/T)| dp
Time-like (n < 4t):
    ln|g| ~ ln C + (2 nu_+^2 + 2 nu_-^2) ln t + (1/2 pi) int |n - 4t sin p| ln|tanh((h - 2 cos p)/T)| dp
with nu_+- = (1/2 pi) ln|tanh((h -+ 2 cos p0)/T)|, sin p0 = n / 4t.
The constants C are never predicted; fits absorb them into an intercept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DomainError
from .model import free_energy
from .quadrature import graded_quad

LIGHT_CONE_TOL = 1e-12
EXCEPTIONAL_TOL = 1e-9
LOG_UNDERFLOW = math.log(1e-280)


class Regime(str, Enum):
    SPACE_LIKE = "SPACE_LIKE"
    TIME_LIKE = "TIME_LIKE"
    LIGHT_CONE = "LIGHT_CONE"
    EXCEPTIONAL = "EXCEPTIONAL"


def classify(n: int, t: float) -> tuple[Regime, float]:
    """Regime and direction angle phi in [0, pi/2] with n / 4t = cot(phi)."""
    if n < 0 or t < 0:
        raise DomainError(f"classify expects n >= 0 and t >= 0, got n={n}, t={t}")
    if n == 0 and t == 0:
        raise DomainError("direction undefined at n = t = 0")
    phi = math.atan2(4 * t, n)
    if t == 0:
        return Regime.SPACE_LIKE, 0.0
    ratio = n / (4 * t)
    if abs(ratio - 1) < LIGHT_CONE_TOL:
        return Regime.LIGHT_CONE, phi
    return (Regime.SPACE_LIKE if ratio > 1 else Regime.TIME_LIKE), phi


def _log_tanh(h, T):
    def f(p):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.tanh((h - 2 * np.cos(p)) / T)))
    return f


def _field_zeros(h: float) -> list[float]:
    if abs(h) > 2:
        return []
    p0 = math.acos(h / 2)
    return [-p0, p0] if p0 > 0 else [0.0]


def spacelike_rate(h: float, T: float) -> float:
    """Per-site decay rate (1/2 pi) int_{-pi}^{pi} ln|tanh((h - 2 cos p)/T)| dp (negative)."""
    if not T > 0:
        raise DomainError(f"temperature must be positive, got T={T!r}")
    return graded_quad(_log_tanh(h, T), -math.pi, math.pi, singular=_field_zeros(h)) / (2 * math.pi)


def free_energy_rate(h: float, T: float) -> float:
    """(1/T) Re[f(h) - f(h - i pi T / 2)], the free-energy form of the space-like rate."""
    return ((free_energy(h, T) - free_energy(complex(h, -math.pi * T / 2), T)) / T).real


def timelike_exponent(n: int, t: float, h: float, T: float) -> float:
    """(1/2 pi) int |n - 4t sin p| ln|tanh((h - 2 cos p)/T)| dp."""
    if not T > 0:
        raise DomainError(f"temperature must be positive, got T={T!r}")
    if not t > 0:
        raise DomainError(f"time-like exponent needs t > 0, got t={t!r}")
    log_tanh = _log_tanh(h, T)
    singular = _field_zeros(h)
    s = n / (4 * t)
    if abs(s) < 1:
        a = math.asin(s)
        kinks = [a, math.pi - a if a >= 0 else -math.pi - a]
        singular += [k for k in kinks if -math.pi < k < math.pi]
    return graded_quad(lambda p: np.abs(n - 4 * t * np.sin(p)) * log_tanh(p),
                       -math.pi, math.pi, singular=singular) / (2 * math.pi)


@dataclass(frozen=True)
class NuPair:
    nu_plus: float
    nu_minus: float
    exceptional: bool


def nu_pm(n: int, t: float, h: float, T: float) -> NuPair:
    """Exponents nu_+- of the time-like prefactor at sin p0 = n / 4t."""
    if not t > 0 or not 0 <= n / (4 * t) <= 1 + LIGHT_CONE_TOL:
        raise DomainError(f"nu_pm needs 0 <= n/4t <= 1, got n={n}, t={t}")
    p0 = math.asin(min(n / (4 * t), 1.0))
    exceptional = abs(h - 2 * math.cos(p0)) < EXCEPTIONAL_TOL
    with np.errstate(divide="ignore"):
        nu_plus = float(np.log(abs(np.tanh((h - 2 * math.cos(p0)) / T)))) / (2 * math.pi)
        nu_minus = float(np.log(abs(np.tanh((h + 2 * math.cos(p0)) / T)))) / (2 * math.pi)
    return NuPair(nu_plus, nu_minus, exceptional)


@dataclass(frozen=True)
class AsymptoticPrediction:
    regime: Regime
    phi: float
    exponent: float
    p0: float | None = None
    nu_plus: float | None = None
    nu_minus: float | None = None
    prefactor_power: float | None = None
    log_prefactor: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def log_g(self) -> float:
        """Predicted ln|g| up to the unknown additive ln C."""
        return self.exponent + self.log_prefactor


def predict_log_g(n: int, t: float, h: float, T: float) -> AsymptoticPrediction:
    regime, phi = classify(n, t)
    if regime is Regime.SPACE_LIKE:
        return AsymptoticPrediction(regime, phi, float(n * spacelike_rate(h, T)))
    exponent = float(timelike_exponent(n, t, h, T))
    nu = nu_pm(n, t, h, T)
    p0 = math.asin(min(n / (4 * t), 1.0))
    if regime is Regime.LIGHT_CONE:
        return AsymptoticPrediction(regime, phi, exponent, p0, nu.nu_plus, nu.nu_minus,
                                    warnings=["light cone: prefactor power not predicted"])
    if nu.exceptional:
        return AsymptoticPrediction(Regime.EXCEPTIONAL, phi, exponent, p0, nu.nu_plus, nu.nu_minus,
                                    warnings=["exceptional direction h = 2 cos p0: time-like formula invalid"])
    power = 2 * nu.nu_plus**2 + 2 * nu.nu_minus**2
    return AsymptoticPrediction(regime, phi, exponent, p0, nu.nu_plus, nu.nu_minus, power, power * math.log(t))


class FitMode(str, Enum):
    SLOPE_N = "SLOPE_N"
    RAY_T = "RAY_T"


class UnderdeterminedFit(ValueError):
    pass


@dataclass(frozen=True)
class FitReport:
    mode: FitMode
    slope: float
    intercept: float
    expected_slope: float
    residuals: np.ndarray
    used_points: int

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    @property
    def relative_slope_error(self) -> float:
        return abs(self.slope / self.expected_slope - 1)


def fit_against_data(points: Sequence[tuple[int, float, float]], mode: FitMode | str, h: float, T: float) -> FitReport:
    """Least-squares comparison of computed ln|g| with the predictions.

    SLOPE_N regresses ln|g| on the predicted exponent (expected slope 1).
    RAY_T regresses ln|g| - exponent on ln t (expected slope 2 nu_+^2 + 2 nu_-^2).
    Points with |g| below 1e-280 are dropped.
    """
    mode = FitMode(mode)
    kept = [(n, t, y) for n, t, y in points if y > LOG_UNDERFLOW]
    if len(kept) < 4:
        raise UnderdeterminedFit(f"need at least 4 usable points, got {len(kept)}")
    preds = [predict_log_g(n, t, h, T) for n, t, _ in kept]
    y = np.array([p for _, _, p in kept])
    if mode is FitMode.SLOPE_N:
        x = np.array([pr.exponent for pr in preds])
        expected = 1.0
    else:
        powers = {pr.prefactor_power for pr in preds}
        if None in powers or len({round(p, 12) for p in powers}) != 1:
            raise UnderdeterminedFit("RAY_T needs time-like points on a single ray")
        x = np.log([t for _, t, _ in kept])
        y = y - np.array([pr.exponent for pr in preds])
        expected = preds[0].prefactor_power
    if np.ptp(x) == 0:
        raise UnderdeterminedFit("all points share the same abscissa")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    return FitReport(mode, float(slope), float(intercept), float(expected), y - A @ [slope, intercept], len(kept))

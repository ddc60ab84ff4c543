"""Points and trapezoidal grids on the unit circle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_NODES = 64
PRODUCTION_MIN_NODES = 128


@dataclass(frozen=True)
class CirclePoint:
    p: float
    lam: complex

    @classmethod
    def from_angle(cls, p: float) -> "CirclePoint":
        p = float(p) % (2 * math.pi)
        return cls(p, complex(np.exp(1j * p)))


def node_count(n: int, t: float, minimum: int = MIN_NODES) -> int:
    """Power of two at least max(minimum, 4|n| + 16 ceil|t|)."""
    need = max(minimum, 4 * abs(int(n)) + 16 * math.ceil(abs(t)))
    return 1 << (need - 1).bit_length()


@dataclass(frozen=True)
class CircleGrid:
    """N equispaced nodes p_j = offset + 2 pi (j + 1/2) / N with weights dmu = i mu dp.

    ``branch`` fixes the cut used for half-integer powers of lambda: angles
    are reduced to [branch, branch + 2 pi) before halving.
    """

    size: int
    offset: float = 0.0
    branch: float = 0.0
    p: np.ndarray = field(init=False, repr=False, compare=False)
    lam: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"grid needs at least 2 nodes, got {self.size}")
        p = self.offset + 2 * np.pi * (np.arange(self.size) + 0.5) / self.size
        lam = np.exp(1j * p)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "weights", (2 * np.pi / self.size) * 1j * lam)

    @classmethod
    def for_point(cls, n: int, t: float, minimum: int = PRODUCTION_MIN_NODES, **kw) -> "CircleGrid":
        return cls(node_count(n, t, minimum), **kw)

    @property
    def nodes(self) -> list[CirclePoint]:
        return [CirclePoint(float(p), complex(l)) for p, l in zip(self.p, self.lam)]

    def branch_angle(self) -> np.ndarray:
        """Node angles reduced to [branch, branch + 2 pi)."""
        return self.branch + np.mod(self.p - self.branch, 2 * np.pi)

    def refined(self, factor: int = 2) -> "CircleGrid":
        return CircleGrid(self.size * factor, self.offset, self.branch)

    def integrate(self, values: np.ndarray) -> complex:
        """Trapezoidal approximation of the contour integral of ``values`` dmu."""
        return complex(np.sum(values * self.weights))

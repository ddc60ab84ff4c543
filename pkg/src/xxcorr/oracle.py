"""Exact diagonalisation of the open XX chain as ground truth for g(n, t).

H = -sum_{j=0}^{L-2} [sx_j sx_{j+1} + sy_j sy_{j+1}] - h sum_j sz_j conserves the
number of up spins, so the Hamiltonian is diagonalised sector by sector.
Basis states are bit strings with bit j set when site j points up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DomainError

MAX_SITES = 14


@dataclass(frozen=True)
class ChainSpec:
    L: int
    h: float
    T: float
    boundary: str = "open"

    def __post_init__(self):
        if not 2 <= self.L <= MAX_SITES:
            raise DomainError(f"chain length must lie in [2, {MAX_SITES}], got L={self.L}")
        if self.boundary != "open":
            raise DomainError("only open boundaries are supported")
        if not self.T > 0:
            raise DomainError(f"temperature must be positive, got T={self.T!r}")


def center_sites(L: int, n: int) -> tuple[int, int]:
    """(site1, site2) with site2 - site1 = n placed symmetrically about the chain center."""
    site1 = (L - 1 - n) // 2
    if site1 < 0:
        raise DomainError(f"separation n={n} does not fit in L={L}")
    return site1, site1 + n


@dataclass(frozen=True)
class _Sector:
    states: np.ndarray
    index: dict
    energies: np.ndarray
    vectors: np.ndarray


@lru_cache(maxsize=16)
def _sectors(L: int, h: float) -> tuple[_Sector, ...]:
    out = []
    for m in range(L + 1):
        states = np.array(sorted(sum(1 << i for i in c) for c in combinations(range(L), m)), dtype=np.int64)
        index = {int(s): i for i, s in enumerate(states)}
        H = np.zeros((states.size, states.size))
        bits = (states[:, None] >> np.arange(L)) & 1
        np.fill_diagonal(H, -h * (2 * bits.sum(axis=1) - L))
        for j in range(L - 1):
            flip = bits[:, j] != bits[:, j + 1]
            for a in np.nonzero(flip)[0]:
                H[index[int(states[a] ^ (3 << j))], a] = -2.0
        e, U = np.linalg.eigh(H)
        out.append(_Sector(states, index, e, U))
    return tuple(out)


def _lower(L, site, src: _Sector, dst: _Sector) -> np.ndarray:
    """Matrix of sigma^-_site from the src sector to the dst sector."""
    M = np.zeros((dst.states.size, src.states.size))
    for a, s in enumerate(src.states):
        s = int(s)
        if (s >> site) & 1:
            M[dst.index[s ^ (1 << site)], a] = 1.0
    return M


def _boltzmann(spec: ChainSpec):
    sectors = _sectors(spec.L, float(spec.h))
    e_min = min(s.energies.min() for s in sectors)
    weights = [np.exp(-(s.energies - e_min) / spec.T) for s in sectors]
    Z = sum(w.sum() for w in weights)
    return sectors, [w / Z for w in weights]


@lru_cache(maxsize=64)
def _lowering_eigenbasis(L: int, h: float, site: int) -> tuple[np.ndarray, ...]:
    """<b|sigma^-_site|a> between eigenstates of sectors m -> m - 1, for m = 1..L."""
    sectors = _sectors(L, h)
    return tuple(
        sectors[m - 1].vectors.T @ _lower(L, site, sectors[m], sectors[m - 1]) @ sectors[m].vectors
        for m in range(1, L + 1)
    )


def ed_correlator(spec: ChainSpec, site1: int, site2: int, t: float) -> complex:
    """Tr[rho sigma^+_{site2}(t) sigma^-_{site1}(0)] with rho = e^{-H/T}/Z."""
    for s in (site1, site2):
        if not 0 <= s < spec.L:
            raise DomainError(f"site {s} outside chain of length {spec.L}")
    sectors, probs = _boltzmann(spec)
    downs = _lowering_eigenbasis(spec.L, float(spec.h), site1)
    ups = _lowering_eigenbasis(spec.L, float(spec.h), site2)
    g = 0.0j
    for m in range(1, spec.L + 1):
        upper, lower = sectors[m], sectors[m - 1]
        # sum_ab p_a e^{i(E_a - E_b)t} <a|s+_{site2}|b><b|s-_{site1}|a>
        phase = np.exp(1j * t * (upper.energies[:, None] - lower.energies[None, :]))
        g += np.sum(probs[m][:, None] * phase * ups[m - 1].T * downs[m - 1].T)
    return complex(g)


def sz_expectation(spec: ChainSpec, site: int) -> float:
    """Thermal <sigma^z_site> directly from the diagonal of the density matrix."""
    sectors, probs = _boltzmann(spec)
    total = 0.0
    for sec, p in zip(sectors, probs):
        sz = 2.0 * ((sec.states >> site) & 1) - 1.0
        total += np.sum(p * ((sec.vectors**2).T @ sz))
    return float(total)


@dataclass(frozen=True)
class JordanWignerReport:
    site1: int
    site2: int
    direct: complex
    string_form: complex
    string_form_reversed: complex
    relative_sign: int

    @property
    def mismatch(self) -> float:
        return abs(self.direct - self.relative_sign * self.string_form)


def jw_check(spec: ChainSpec, site1: int, site2: int) -> JordanWignerReport:
    """Compare <s+_{n2} s-_{n1}> with <psi_{n2} exp(i pi sum_{n1<k<n2} psi+_k psi_k) psi+_{n1}>.

    Fermions are psi_k = (prod_{j<k} sz_j) s+_k, so psi+_k psi_k = (1 - sz_k)/2 and
    exp(i pi psi+_k psi_k) = sz_k. For n2 > n1 the string product equals
    -s+_{n2} s-_{n1}; ``relative_sign`` records the factor linking the two sides.
    """
    if not 0 <= site1 <= site2 < spec.L:
        raise DomainError("jw_check needs 0 <= site1 <= site2 < L")
    sectors, probs = _boltzmann(spec)
    L = spec.L
    below1 = (1 << site1) - 1
    below2 = (1 << site2) - 1
    middle = below2 & ~((1 << (site1 + 1)) - 1)
    direct = 0.0
    string = 0.0
    string_rev = 0.0
    for m in range(1, L + 1):
        upper, lower = sectors[m], sectors[m - 1]
        s_minus = _lower(L, site1, upper, lower)
        s_plus = _lower(L, site2, upper, lower).T
        psi_dag1 = _string(lower, below1) @ s_minus
        psi2 = _string(upper, below2) @ s_plus

        def expect(op):
            return np.sum(probs[m] * np.einsum("ia,ij,ja->a", upper.vectors, op, upper.vectors))

        direct += expect(s_plus @ s_minus)
        string += expect(psi2 @ _string(lower, middle, 1j * math.pi) @ psi_dag1)
        string_rev += expect(psi2 @ _string(lower, middle, -1j * math.pi) @ psi_dag1)
    sign = 1 if site1 == site2 else -1
    return JordanWignerReport(site1, site2, complex(direct), complex(string), complex(string_rev), sign)


def _string(sector: _Sector, mask: int, phase: complex = 1j * math.pi) -> np.ndarray:
    """exp(phase * sum_{j in mask} psi+_j psi_j) as a diagonal matrix; psi+ psi counts down spins."""
    downs = np.array([bin(~int(s) & mask).count("1") for s in sector.states])
    return np.diag(np.exp(phase * downs))

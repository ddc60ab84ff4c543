import itertools
import math

import numpy as np
import pytest
from scipy.integrate import quad

from xxcorr import fredholm
from xxcorr.errors import SingularDeterminant
from xxcorr.fredholm import (
    MINUS,
    PLUS,
    assemble,
    build_kernel,
    log_det,
    nystrom_interpolate,
    potentials,
    solve_resolvent,
)
from xxcorr.grid import CircleGrid, CirclePoint
from xxcorr.model import ModelParams
from xxcorr.special import weights


def mean_weight(h, T):
    val, _ = quad(lambda p: 1 / (1 + math.exp((2 * h - 4 * math.cos(p)) / T)), 0, 2 * math.pi, epsabs=1e-14)
    return val / (2 * math.pi)


def leibniz_det(A):
    size = A.shape[0]
    total = 0j
    for perm in itertools.permutations(range(size)):
        inversions = sum(1 for i in range(size) for j in range(i + 1, size) if perm[i] > perm[j])
        term = (-1) ** inversions
        for i, j in enumerate(perm):
            term = term * A[i, j]
        total += term
    return total


def test_grid_residue_and_ordering():
    grid = CircleGrid(128, offset=0.01)
    assert abs(np.sum(grid.weights / (2j * np.pi * grid.lam)) - 1) < 1e-14
    assert np.all(np.diff(grid.p) > 0)
    assert np.min(np.abs(np.mod(CircleGrid(64).p, 2 * np.pi))) > 0


def test_kernel_vanishes_at_origin():
    system = build_kernel(ModelParams(0.8, 1.0, 0, 0.0), CircleGrid(64))
    assert np.max(np.abs(system.kernel)) < 1e-14
    assert np.max(np.abs(system.matrix - np.eye(64))) < 1e-14


def test_kernel_symmetry():
    system = build_kernel(ModelParams(1.0, 1.0, 4, 0.8), CircleGrid(128))
    V = system.kernel
    assert np.max(np.abs(V - V.T)) < 1e-12


@pytest.mark.parametrize("j", [0, 17, 63])
def test_kernel_diagonal_is_the_limit(j):
    params = ModelParams(1.0, 1.0, 4, 0.8)
    grid = CircleGrid(128)
    system = build_kernel(params, grid)
    lam = grid.nodes[j]
    here = weights(params.n, params.t, lam, params, grid)

    def off_diagonal(eps):
        mu = CirclePoint.from_angle(lam.p + eps)
        there = weights(params.n, params.t, mu, params, grid)
        return (here.e_plus * there.e_minus - here.e_minus * there.e_plus) / (np.pi * (lam.lam - mu.lam))

    limit = 0.5 * (off_diagonal(1e-5) + off_diagonal(-1e-5))
    assert abs(system.kernel[j, j] - limit) < 1e-6


def test_log_det_zero_at_origin():
    assert assemble(ModelParams(0.3, 1.0, 0, 0.0), CircleGrid(64)).sigma == 0


def test_log_det_against_leibniz_expansion():
    system = build_kernel(ModelParams(1.0, 1.0, 1, 0.2), CircleGrid(8))
    assert abs(np.exp(log_det(system)) - leibniz_det(system.matrix)) < 1e-12


def _same_mod_2pi_i(a, b, tol):
    d = a - b
    d -= 2j * math.pi * round(d.imag / (2 * math.pi))
    return abs(d) < tol


@pytest.mark.parametrize("n", [0, 3, 8])
@pytest.mark.parametrize("t", [0.5, 2.0])
@pytest.mark.parametrize("h,T", [(0.0, 1.0), (1.0, 2.0)])
def test_log_det_grid_doubling(n, t, h, T):
    params = ModelParams(h, T, n, t)
    if h == 0 and n % 2:
        pytest.skip("det(1+V) vanishes at h = 0 for odd n")
    a = log_det(build_kernel(params, CircleGrid(128)))
    b = log_det(build_kernel(params, CircleGrid(256)))
    assert _same_mod_2pi_i(a, b, 1e-10)


def test_singular_determinant_at_zero_field_odd_n():
    system = build_kernel(ModelParams(0.0, 2.0, 1, 0.3), CircleGrid(128))
    assert system.singular
    with pytest.raises(SingularDeterminant):
        log_det(system)
    with pytest.raises(SingularDeterminant):
        solve_resolvent(system, PLUS)


def test_resolvent_identity_operator():
    system = build_kernel(ModelParams(0.5, 1.0, 0, 0.0), CircleGrid(64))
    for k in (PLUS, MINUS):
        assert np.array_equal(solve_resolvent(system, k), system.e(k))


def test_resolvent_residual():
    system = build_kernel(ModelParams(1.0, 1.0, 5, 1.0), CircleGrid(256))
    for k in (PLUS, MINUS):
        f = solve_resolvent(system, k)
        e = system.e(k)
        assert np.max(np.abs(system.matrix @ f - e)) <= 1e-10 * np.max(np.abs(e))


def test_resolvent_grid_refinement():
    params = ModelParams(1.0, 1.0, 5, 1.0)
    coarse = build_kernel(params, CircleGrid(128))
    fine = build_kernel(params, CircleGrid(256))
    angles = np.array([0.3, 1.7, 4.0])
    for k in (PLUS, MINUS):
        a = nystrom_interpolate(coarse, solve_resolvent(coarse, k), k, angles)
        b = nystrom_interpolate(fine, solve_resolvent(fine, k), k, angles)
        assert np.max(np.abs(a - b)) < 1e-9


def test_nystrom_interpolation_reproduces_nodes():
    system = build_kernel(ModelParams(1.0, 1.0, 2, 0.5), CircleGrid(128))
    f = solve_resolvent(system, MINUS)
    # evaluating off but very near a node should reproduce the nodal value
    p = system.grid.p[10] + 1e-9
    assert abs(nystrom_interpolate(system, f, MINUS, p)[0] - f[10]) < 1e-6


@pytest.mark.parametrize("h,T", [(0.0, 1.0), (1.0, 1.0), (0.5, 3.0)])
def test_potentials_at_origin(h, T):
    grid = CircleGrid(128)
    system = build_kernel(ModelParams(h, T, 0, 0.0), grid)
    ep, em = system.e(PLUS), system.e(MINUS)
    B = potentials(ep, em, ep, em, grid)
    vbar = mean_weight(h, T)
    assert abs(B[1, 1] - vbar) < 1e-12
    assert abs(B[0, 1] - 1j * vbar) < 1e-12
    assert abs(B[0, 0] + vbar) < 1e-12


@pytest.mark.parametrize("h,T", [(0.0, 1.0), (1.0, 1.0), (1.5, 0.7)])
def test_assemble_at_origin(h, T):
    ps = assemble(ModelParams(h, T, 0, 0.0), CircleGrid(128))
    vbar = mean_weight(h, T)
    assert abs(ps.sigma) < 1e-14
    assert abs(ps.b_mm - vbar) < 1e-10
    assert abs(ps.b_pp - (vbar - 1)) < 1e-10
    assert abs(abs(ps.g) - (1 - vbar)) < 1e-10


def test_half_filling_at_zero_field():
    assert abs(assemble(ModelParams(0.0, 1.0, 0, 0.0)).g) == pytest.approx(0.5, abs=1e-12)
    assert mean_weight(0.0, 1.0) == pytest.approx(0.5, abs=1e-14)


def test_potential_set_invariants():
    params = ModelParams(1.0, 1.0, 3, 0.7)
    ps = assemble(params)
    assert ps.b_mm == ps.B[1, 1]
    assert ps.b_pp == ps.B[0, 0] - 2j * ps.G * ps.B[0, 1] - ps.G
    assert ps.g == fredholm.SIGN * np.exp(-2j * params.h * params.t) * ps.b_pp * np.exp(ps.sigma)


@pytest.mark.parametrize("n,t", [(2, 0.3), (5, 1.2), (1, 0.0)])
@pytest.mark.parametrize("h,T", [(1.0, 1.0), (0.0, 2.0)])
def test_branch_and_offset_invariance(n, t, h, T):
    params = ModelParams(h, T, n, t)
    ref = assemble(params, CircleGrid(256))
    for grid in (CircleGrid(256, offset=0.1), CircleGrid(256, branch=1.3), CircleGrid(256, offset=0.1, branch=-2.0)):
        other = assemble(params, grid)
        assert abs(other.g - ref.g) < 1e-9
        if not ref.singular:
            assert _same_mod_2pi_i(other.sigma, ref.sigma, 1e-9)
            assert abs(other.b_pp - ref.b_pp) < 1e-9
            assert abs(other.b_mm - ref.b_mm) < 1e-9


def test_spectral_convergence():
    params = ModelParams(1.0, 1.0, 6, 1.5)
    ref = assemble(params, CircleGrid(512)).g
    errors = [abs(assemble(params, CircleGrid(size)).g - ref) for size in (16, 24, 32)]
    assert errors[1] / errors[0] < 0.1
    assert errors[2] / errors[1] < 0.1


@pytest.mark.parametrize("h,T", [(0.0, 1.0), (1.0, 1.0), (0.0, 2.0), (1.0, 2.0)])
def test_equal_time_modulus_decreasing(h, T):
    values = [abs(assemble(ModelParams(h, T, n, 0.0)).g) for n in range(1, 15)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert max(values) <= 1


def test_modulus_bounded_on_sample():
    for n, t in itertools.product(range(0, 7), (0.0, 0.5, 1.5, 3.0)):
        assert abs(assemble(ModelParams(0.5, 1.0, n, t)).g) <= 1 + 1e-8


def test_alternative_measure_fails_calibration(monkeypatch):
    from xxcorr.integrable import tau_residuals

    params = ModelParams(1.0, 1.0, 3, 0.8)
    assert tau_residuals(params, grid_size=256)[1].abs_residual < 1e-8
    monkeypatch.setattr(fredholm, "MEASURE", 1 / (2 * math.pi))
    fredholm._assemble_cached.cache_clear()
    try:
        assert tau_residuals(params, grid_size=256)[1].abs_residual > 1e-3
    finally:
        monkeypatch.undo()
        fredholm._assemble_cached.cache_clear()


def test_repeat_runs_bitwise_identical():
    params = ModelParams(1.0, 1.0, 4, 0.9)
    a = fredholm._assemble_cached.__wrapped__(params, 128, 0.0, 0.0)
    b = fredholm._assemble_cached.__wrapped__(params, 128, 0.0, 0.0)
    assert a.g == b.g and a.sigma == b.sigma

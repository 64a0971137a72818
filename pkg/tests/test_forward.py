"""Forward solver tests: assembly oracle, manufactured solutions,
spectrum closed forms, near-singular detection."""

import numpy as np
import pytest

from hybridlab import Grid, NearSingularError, PriorBounds, ScalarField
from hybridlab.fields import boundary_values
from hybridlab.forward import (
    DiscreteOperator,
    assemble,
    eigen_gap,
    solve_dirichlet,
)


def coscos(x, y):
    return np.cos(x) * np.cos(y)


def mu_min_2d(h: float) -> float:
    """Smallest eigenvalue of the discrete 2D Dirichlet -laplacian on the
    unit square, from the closed-form tensor spectrum."""
    return (4.0 / h**2) * (1.0 - np.cos(np.pi * h))


# --- assembly ---------------------------------------------------------------

def test_1d_three_nodes_harmonic_midpoint():
    g = Grid(nx=3, lx=1.0)
    rep = solve_dirichlet(ScalarField.constant(g, 0.0), np.array([0.0, 1.0]))
    assert rep.u.values[0, 1] == pytest.approx(0.5, abs=1e-12)
    assert rep.u.values[0, 0] == 0.0 and rep.u.values[0, 2] == 1.0


def test_dense_assembly_oracle_5x5():
    grid = Grid(nx=5, ny=5, lx=1.0, ly=1.0)
    q = ScalarField.constant(grid, 2.0)
    gvec = boundary_values(grid, coscos)
    op, b = assemble(q, gvec)

    # independent dense assembly: loop over interior nodes in row-major order
    h = grid.h
    n = 9
    idx = {}
    for j in range(1, 4):
        for i in range(1, 4):
            idx[(i, j)] = len(idx)
    a_ref = np.zeros((n, n))
    b_ref = np.zeros(n)
    gfull = np.zeros((5, 5))
    for (i, j), gv in zip(op_boundary_nodes(grid), gvec):
        gfull[j, i] = gv
    for (i, j), row in idx.items():
        a_ref[row, row] = -4.0 / h**2 + 2.0
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if (ni, nj) in idx:
                a_ref[row, idx[(ni, nj)]] = 1.0 / h**2
            else:
                b_ref[row] -= gfull[nj, ni] / h**2

    np.testing.assert_array_equal(op.matrix.toarray(), a_ref)
    np.testing.assert_array_equal(b, b_ref)


def op_boundary_nodes(grid):
    from hybridlab.fields import boundary_nodes

    return boundary_nodes(grid)


def test_matrix_structure_and_symmetry():
    grid = Grid(nx=9, ny=9, lx=1.0, ly=1.0)
    rng = np.random.default_rng(0)
    q = ScalarField(grid, rng.uniform(0.5, 2.0, grid.shape))
    op = DiscreteOperator(q)
    nnz_per_row = np.diff(op.matrix.indptr)
    assert nnz_per_row.max() <= 5
    asym = (op.matrix - op.matrix.T).toarray()
    assert np.max(np.abs(asym)) == 0.0

    g1 = Grid(nx=9, lx=1.0)
    op1 = DiscreteOperator(ScalarField.constant(g1, 1.0))
    assert np.diff(op1.matrix.indptr).max() <= 3


def test_out_of_bounds_coefficient_warns_not_raises():
    grid = Grid(nx=7, ny=7, lx=1.0, ly=1.0)
    bounds = PriorBounds(k_bound=2.0, e_bound=10.0, h_bound=0.5, d_margin=0.1)
    q = ScalarField.constant(grid, 5.0)  # above K = 2
    with pytest.warns(UserWarning):
        op = DiscreteOperator(q, bounds=bounds)
    assert not op.q_in_bounds
    ok = DiscreteOperator(ScalarField.constant(grid, 1.5), bounds=bounds)
    assert ok.q_in_bounds


# --- solves -----------------------------------------------------------------

def test_harmonic_maximum_principle():
    grid = Grid(nx=17, ny=17, lx=1.0, ly=1.0)
    rng = np.random.default_rng(5)
    q = ScalarField.constant(grid, 0.0)
    gvec = rng.uniform(-1.0, 3.0, 4 * 16)
    rep = solve_dirichlet(q, gvec)
    assert rep.u.values.min() >= gvec.min() - 1e-10
    assert rep.u.values.max() <= gvec.max() + 1e-10


@pytest.mark.parametrize("nx", [17, 33, 65])
def test_manufactured_2d_error_bound(nx):
    grid = Grid(nx=nx, ny=nx, lx=1.0, ly=1.0)
    q = ScalarField.constant(grid, 2.0)
    rep = solve_dirichlet(q, coscos)
    exact = ScalarField.from_function(grid, coscos)
    err = np.max(np.abs(rep.u.values - exact.values))
    assert err <= 5.0 * grid.h**2
    assert rep.converged
    res_bound = rep.residual_linf  # contract: already checked inside
    assert np.isfinite(res_bound)


def test_manufactured_2d_convergence_order():
    errs = []
    for nx in (17, 33, 65):
        grid = Grid(nx=nx, ny=nx, lx=1.0, ly=1.0)
        rep = solve_dirichlet(ScalarField.constant(grid, 2.0), coscos)
        exact = ScalarField.from_function(grid, coscos)
        errs.append(np.max(np.abs(rep.u.values - exact.values)))
    orders = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
    for p in orders:
        assert 1.8 <= p <= 2.2


def test_manufactured_1d_sine():
    errs = []
    for nx in (33, 65):
        grid = Grid(nx=nx, lx=np.pi / 2)
        rep = solve_dirichlet(ScalarField.constant(grid, 1.0), np.array([0.0, 1.0]))
        exact = np.sin(grid.xs())
        errs.append(np.max(np.abs(rep.u.values[0] - exact)))
        assert errs[-1] <= 2.0 * grid.h**2
    assert 1.8 <= np.log2(errs[0] / errs[1]) <= 2.2


def test_iterative_path_used_and_contract_holds():
    grid = Grid(nx=61, ny=61, lx=1.0, ly=1.0)  # 3481 unknowns: beyond dense
    q = ScalarField.constant(grid, 2.0)
    op, b = assemble(q, coscos)
    rep = op.solve(coscos, tol=1e-9)
    assert rep.method == "minres"
    assert rep.iterations > 0
    assert rep.residual_linf <= 1e-9 * np.max(np.abs(b))


def test_solve_rejects_bad_tol():
    grid = Grid(nx=5, ny=5, lx=1.0, ly=1.0)
    from hybridlab import ContractViolation

    with pytest.raises(ContractViolation):
        solve_dirichlet(ScalarField.constant(grid, 1.0), 0.0, tol=0.0)


# --- spectrum ---------------------------------------------------------------

def test_eigen_gap_against_dense_oracle():
    grid = Grid(nx=11, ny=11, lx=1.0, ly=1.0)
    q = ScalarField.constant(grid, 2.0)
    op = DiscreteOperator(q)
    lam = np.linalg.eigvalsh(op.matrix.toarray())
    oracle = np.min(np.abs(lam))
    got = eigen_gap(op)
    assert got.converged
    assert got.value == pytest.approx(oracle, rel=1e-3)
    # coarse-grid gap sits near the continuum value |2 - 2 pi^2|
    assert got.value == pytest.approx(abs(2.0 - 2.0 * np.pi**2), rel=0.02)


def test_eigen_gap_1d_closed_form():
    grid = Grid(nx=41, lx=1.0)
    gap = eigen_gap(ScalarField.constant(grid, 0.0))
    h = grid.h
    assert gap.value == pytest.approx((2.0 / h**2) * (1.0 - np.cos(np.pi * h)),
                                      rel=1e-6)
    assert gap.value == pytest.approx(np.pi**2, rel=0.01)


def test_eigen_gap_planted_discrete_eigenvalue():
    grid = Grid(nx=33, ny=33, lx=1.0, ly=1.0)
    q = ScalarField.constant(grid, mu_min_2d(grid.h))
    gap = eigen_gap(q)
    assert gap.value <= 1e-8


def test_near_singular_raises_with_partial_report():
    grid = Grid(nx=33, ny=33, lx=1.0, ly=1.0)
    q = ScalarField.constant(grid, mu_min_2d(grid.h))
    with pytest.raises(NearSingularError) as exc:
        solve_dirichlet(q, 1.0)
    rep = exc.value.report
    assert rep is not None
    assert not rep.converged
    assert rep.degenerate


def test_continuum_eigenvalue_zero_data_flags_degenerate():
    # q = 2 pi^2 with g = 0: u = 0 is the discrete solution, but the gap
    # collapses as the grid resolves the continuum eigenvalue
    grid = Grid(nx=65, ny=65, lx=1.0, ly=1.0)
    q = ScalarField.constant(grid, 2.0 * np.pi**2)
    rep = solve_dirichlet(q, 0.0)
    assert rep.degenerate
    assert np.all(rep.u.values == 0.0)


def test_load_vector_with_source_term():
    # laplacian(u) = -2 with u = 0 on (0,1) boundary: u = x(1-x), exact
    # discretely since fourth derivatives vanish
    grid = Grid(nx=21, lx=1.0)
    q = ScalarField.constant(grid, 0.0)
    src = ScalarField.constant(grid, -2.0)
    rep = solve_dirichlet(q, 0.0, source=src)
    x = grid.xs()
    np.testing.assert_allclose(rep.u.values[0], x * (1 - x), atol=1e-10)

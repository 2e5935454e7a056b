"""Grid discretisation: masks, the discrete action and its variation,
per-cell momenta, conservation form, continuum consistency, and the
Dirichlet Newton solver."""

import numpy as np
import pytest

from fieldtriple import autodiff
from fieldtriple.autodiff import ScalarField
from fieldtriple.bundles import Jet
from fieldtriple.errors import (
    GridDomainError,
    InvalidInputError,
    InvalidParameterError,
)
from fieldtriple.grid import (
    Grid,
    GridField,
    boundary_momentum,
    discrete_action,
    discrete_action_gradient,
    discrete_el_residual,
    momentum_divergence,
    solve_dirichlet,
)
from fieldtriple.lagrangian import LagrangianModel, SecondJet, el_residual_pointwise
from fieldtriple.models import get_lagrangian

HARM1 = get_lagrangian("harmonic")
NAMBU = get_lagrangian("nambu")


def minimal_surface_model() -> LagrangianModel:
    """Area of the graph of a scalar field: L = sqrt(1 + |grad u|^2)."""

    def eval_L(xs):
        return autodiff.sqrt(1.0 + xs[1] * xs[1] + xs[2] * xs[2])

    return LagrangianModel(m=1, L=ScalarField(arity=3, eval=eval_L),
                           admissible=lambda j: True, name="graph-area")


def boundary_rows(field: GridField) -> np.ndarray:
    b = field.grid.boundary_nodes
    return field.values[b[:, 0], b[:, 1]]


def near_flat_sheet(eps: float):
    return lambda x, y: np.array([x, y, eps * x * y, 0.0])


# ---------------------------------------------------------------------------
# Grid and GridField


def test_square_grid_layout():
    g = Grid.square(5, 9)
    assert (g.nx, g.ny) == (5, 9)
    assert g.hx == pytest.approx(0.25) and g.hy == pytest.approx(0.125)
    assert np.sum(g.mask == 2) == 3 * 7
    assert np.sum(g.mask == 1) == 5 * 9 - 3 * 7
    assert len(g.active_cells) == 4 * 8
    assert len(g.interior_nodes) + len(g.boundary_nodes) == 5 * 9


def test_grid_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        Grid.square(2, 5)
    with pytest.raises(InvalidParameterError):
        Grid.square(5, 5, lx=-1.0)
    with pytest.raises(InvalidInputError):
        Grid(nx=3, ny=3, hx=0.5, hy=0.5, mask=np.zeros((3, 4)))
    with pytest.raises(InvalidInputError):
        Grid(nx=3, ny=3, hx=0.5, hy=0.5, mask=np.full((3, 3), 7))
    with pytest.raises(InvalidInputError):
        Grid(nx=3, ny=3, hx=0.5, hy=0.5, mask=np.zeros((3, 3)))  # no boundary


def test_grid_rejects_interior_node_with_outside_neighbor():
    mask = np.full((4, 4), 1, dtype=np.int8)
    mask[1, 1] = 2
    mask[0, 1] = 0
    with pytest.raises(InvalidInputError):
        Grid(nx=4, ny=4, hx=0.5, hy=0.5, mask=mask)


def test_disc_mask_counts():
    g = Grid.disc_mask(17, 17)
    assert int(np.sum(g.mask == 2)) == 153
    assert int(np.sum(g.mask == 1)) == 44
    assert len(g.active_cells) == 164


def test_grid_field_validation():
    g = Grid.square(4, 4)
    with pytest.raises(InvalidInputError):
        GridField(grid=g, values=np.zeros((4, 3, 1)))
    bad = np.zeros((4, 4, 1))
    bad[1, 1, 0] = np.nan
    with pytest.raises(InvalidInputError):
        GridField(grid=g, values=bad)


def test_grid_field_from_function():
    g = Grid.square(5, 5)
    f = GridField.from_function(g, lambda x, y: np.array([x + 2 * y]), m=1)
    assert f.values[4, 0, 0] == pytest.approx(1.0)
    assert f.values[0, 4, 0] == pytest.approx(2.0)
    assert f.m == 1


def test_from_function_outside_nodes_are_nan():
    g = Grid.disc_mask(9, 9)
    f = GridField.from_function(g, lambda x, y: np.array([1.0]), m=1)
    assert np.all(np.isnan(f.values[g.mask == 0]))
    assert np.all(np.isfinite(f.values[g.mask > 0]))


# ---------------------------------------------------------------------------
# action, gradient, residual


def test_action_of_linear_ramp_is_exact():
    g = Grid.square(33, 33)
    f = GridField.from_function(g, lambda x, y: np.array([x]), m=1)
    assert discrete_action(HARM1, f) == 0.5


def test_saddle_is_discretely_stationary():
    g = Grid.square(33, 33)
    f = GridField.from_function(g, lambda x, y: np.array([x * x - y * y]), m=1)
    r = discrete_el_residual(HARM1, f)
    assert np.max(np.abs(r)) == 0.0
    assert discrete_action(HARM1, f) == 1.3330078125


@pytest.mark.parametrize("name,m,fn", [
    ("harmonic", 1, lambda x, y: np.array([np.sin(2 * x) + y * y])),
    ("sigma", 2, lambda x, y: np.array([x * y, np.cos(x + y)])),
    ("nambu", 4, near_flat_sheet(0.3)),
])
def test_gradient_matches_finite_differences(name, m, fn):
    model = get_lagrangian(name, m)
    g = Grid.square(5, 5)
    f = GridField.from_function(g, fn, m)
    grad = discrete_action_gradient(model, f)
    scale = max(1.0, float(np.nanmax(np.abs(grad))))
    h = 1e-6
    for i in range(g.nx):
        for j in range(g.ny):
            if g.mask[i, j] == 0:
                continue
            for k in range(m):
                vp = f.values.copy()
                vm = f.values.copy()
                vp[i, j, k] += h
                vm[i, j, k] -= h
                fd = (discrete_action(model, GridField(grid=g, values=vp))
                      - discrete_action(model, GridField(grid=g, values=vm))) / (2 * h)
                assert abs(grad[i, j, k] - fd) / scale <= 1e-6


def test_el_residual_is_interior_gradient_block():
    g = Grid.square(7, 7)
    f = GridField.from_function(
        g, lambda x, y: np.array([np.sin(x) * y + x * x]), m=1)
    grad = discrete_action_gradient(HARM1, f)
    res = discrete_el_residual(HARM1, f)
    assert np.array_equal(res, grad[g.mask == 2])


@pytest.mark.parametrize("grid", [Grid.square(9, 9), Grid.disc_mask(17, 17)])
def test_first_variation_splits_into_interior_and_boundary(grid):
    """Summing the interior residual against a variation and the boundary
    pairing against the same variation reproduces the full directional
    derivative of the action: the discrete divergence theorem."""
    f = GridField.from_function(
        grid, lambda x, y: np.array([np.exp(x) * np.cos(y) + x * y]), m=1)
    grad = discrete_action_gradient(HARM1, f)
    _, pairing = boundary_momentum(HARM1, f)
    rng = np.random.default_rng(101)
    for _ in range(5):
        delta = rng.standard_normal((grid.nx, grid.ny, 1))
        delta[grid.mask == 0] = 0.0
        full = float(np.sum(grad[grid.mask > 0] * delta[grid.mask > 0]))
        interior = float(np.sum(grad[grid.mask == 2] * delta[grid.mask == 2]))
        assert abs(full - interior - pairing(delta)) <= 1e-12


def test_momenta_of_linear_ramp():
    g = Grid.square(9, 9)
    f = GridField.from_function(g, lambda x, y: np.array([x]), m=1)
    mom, _ = boundary_momentum(HARM1, f)
    cells = g.active_cells
    assert np.max(np.abs(mom.p1[cells[:, 0], cells[:, 1]] - 1.0)) == 0.0
    assert np.max(np.abs(mom.p2[cells[:, 0], cells[:, 1]])) == 0.0


def test_conservation_form_relates_divergence_and_residual():
    g = Grid.square(11, 11)
    f = GridField.from_function(
        g, lambda x, y: np.array([x ** 3 * y + np.sin(2 * y)]), m=1)
    res = discrete_el_residual(HARM1, f)
    mom, _ = boundary_momentum(HARM1, f)
    div, nodes = momentum_divergence(mom)
    area = g.hx * g.hy
    lookup = {tuple(n): r for n, r in zip(g.interior_nodes, res)}
    assert len(nodes) == len(g.interior_nodes)
    for n, d in zip(nodes, div):
        r = lookup[tuple(n)]
        assert np.max(np.abs(d + r / area)) <= 1e-10


# ---------------------------------------------------------------------------
# continuum consistency


def test_cubic_residual_equals_pointwise_operator_times_area():
    """For a cubic the forward-difference stencil reproduces the second
    derivatives exactly, so residual / cell area equals the pointwise
    field-equation residual at every interior node."""
    g = Grid.square(9, 9)
    f = GridField.from_function(g, lambda x, y: np.array([x ** 3]), m=1)
    res = discrete_el_residual(HARM1, f)
    area = g.hx * g.hy
    X, _ = g.node_coords()
    for (i, j), r in zip(g.interior_nodes, res):
        x = X[i, j]
        s = SecondJet(Jet([x ** 3], [3 * x * x], [0.0]),
                      [6 * x], [0.0], [0.0])
        want = el_residual_pointwise(HARM1, s) * area
        assert np.max(np.abs(r - want)) <= 1e-14


def test_residual_converges_to_pointwise_operator():
    def exact(x, y):
        return np.array([np.exp(x) * np.cos(2 * y)])

    errs = []
    for n in (9, 17, 33):
        g = Grid.square(n, n)
        f = GridField.from_function(g, exact, m=1)
        res = discrete_el_residual(HARM1, f)
        area = g.hx * g.hy
        X, Y = g.node_coords()
        worst = 0.0
        for (i, j), r in zip(g.interior_nodes, res):
            x, y = X[i, j], Y[i, j]
            u = np.exp(x) * np.cos(2 * y)
            s = SecondJet(Jet([u], [u], [-2 * np.exp(x) * np.sin(2 * y)]),
                          [u], [-2 * np.exp(x) * np.sin(2 * y)], [-4 * u])
            want = el_residual_pointwise(HARM1, s)
            worst = max(worst, float(np.max(np.abs(r / area - want))))
        errs.append(worst)
    orders = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(orders) >= 1.8


# ---------------------------------------------------------------------------
# solve_dirichlet


def _solve_with_bc(model, grid, fn, m, interior=None, **kw):
    bc_field = GridField.from_function(grid, fn, m)
    bvals = boundary_rows(bc_field)
    if interior is None:
        initial = bc_field
    else:
        values = GridField.from_function(grid, interior, m).values
        values[grid.mask == 1] = bvals
        initial = GridField(grid=grid, values=values)
    return solve_dirichlet(model, grid, bvals, initial, **kw)


def test_harmonic_saddle_solved_exactly():
    g = Grid.square(33, 33)

    def exact(x, y):
        return np.array([x * x - y * y])

    sol, rep = _solve_with_bc(HARM1, g, exact,
                              m=1, interior=lambda x, y: np.array([0.0]))
    assert rep.converged
    assert rep.iterations <= 2
    f_exact = GridField.from_function(g, exact, m=1)
    assert np.max(np.abs(sol.values - f_exact.values)) <= 1e-9
    assert rep.action == pytest.approx(1.3330078125, abs=1e-12)


def test_harmonic_solution_converges_at_second_order():
    def exact(x, y):
        return np.array([np.sin(x) * np.sinh(y)])

    frozen = {17: 2.770342e-05, 33: 6.892371e-06, 65: 1.722204e-06}
    errs = []
    for n in (17, 33, 65):
        g = Grid.square(n, n)
        sol, rep = _solve_with_bc(HARM1, g, exact,
                                  m=1, interior=lambda x, y: np.array([0.0]))
        assert rep.converged
        err = float(np.max(np.abs(sol.values
                                  - GridField.from_function(g, exact, 1).values)))
        assert err == pytest.approx(frozen[n], rel=0.01)
        errs.append(err)
    orders = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(orders) >= 1.8


def test_minimal_surface_newton_contracts():
    model = minimal_surface_model()
    g = Grid.square(17, 17)
    sol, rep = _solve_with_bc(
        model, g, lambda x, y: np.array([0.5 * (x * x - y * y)]), m=1)
    assert rep.converged
    assert 1 <= rep.iterations <= 6
    assert rep.final_residual <= 1e-12
    assert rep.action == pytest.approx(1.280215867759, abs=1e-9)


def test_string_near_flat_boundary_converges():
    g = Grid.square(17, 17)
    sol, rep = _solve_with_bc(NAMBU, g, near_flat_sheet(1e-3), m=4,
                              tol=1e-10, max_iter=50)
    assert rep.converged
    assert rep.final_residual <= 1e-10
    mom, _ = boundary_momentum(NAMBU, sol)
    div, _ = momentum_divergence(mom)
    assert np.max(np.abs(div)) <= 1e-8


def test_string_strongly_curved_boundary_stalls_gracefully():
    """At large boundary amplitude the string system is degenerate along
    reparametrisations and the Newton iteration stalls; the contract is a
    clean non-converged report with the best iterate, not an exception."""
    g = Grid.square(9, 9)
    sol, rep = _solve_with_bc(NAMBU, g, near_flat_sheet(0.1), m=4,
                              tol=1e-10, max_iter=8)
    initial = GridField.from_function(g, near_flat_sheet(0.1), 4)
    r0 = float(np.max(np.abs(discrete_el_residual(NAMBU, initial))))
    assert not rep.converged
    assert rep.message != ""
    assert rep.final_residual <= r0
    assert rep.final_residual > 1e-10
    assert np.all(np.isfinite(sol.values))


def test_string_affine_boundary_is_exact_solution():
    g = Grid.square(9, 9)
    sol, rep = _solve_with_bc(NAMBU, g, lambda x, y:
                              np.array([x, y, 0.0, 0.0]), m=4)
    assert rep.converged
    assert rep.iterations == 0
    assert rep.final_residual == 0.0


def test_solve_on_disc_domain():
    """On the masked disc the solver reaches the discrete stationary point
    and lands there from any starting field (the interior system of the
    quadratic action is a fixed linear system)."""
    g = Grid.disc_mask(17, 17)

    def saddle(x, y):
        return np.array([x * x - y * y])

    sol, rep = _solve_with_bc(HARM1, g, saddle, m=1)
    assert rep.converged
    assert rep.final_residual <= 1e-10
    bc_field = GridField.from_function(g, saddle, m=1)
    assert np.array_equal(boundary_rows(sol), boundary_rows(bc_field))
    sol2, rep2 = _solve_with_bc(HARM1, g, saddle, m=1,
                                interior=lambda x, y: np.array([5.0]))
    assert rep2.converged
    inside = g.mask > 0
    assert np.max(np.abs(sol.values[inside] - sol2.values[inside])) <= 1e-9


def test_solver_rejects_boundary_mismatch():
    g = Grid.square(9, 9)
    f = GridField.from_function(g, lambda x, y: np.array([x]), m=1)
    bvals = boundary_rows(f) + 0.5
    with pytest.raises(InvalidInputError):
        solve_dirichlet(HARM1, g, bvals, f)


def test_solver_rejects_inadmissible_initial_cell():
    g = Grid.square(9, 9)
    f = GridField.from_function(g, lambda x, y:
                                np.array([0.0, 0.0, x, y]), m=4)
    bvals = boundary_rows(f)
    with pytest.raises(GridDomainError) as exc:
        solve_dirichlet(NAMBU, g, bvals, f)
    assert "cell" in str(exc.value)


def test_solver_rejects_bad_parameters():
    g = Grid.square(9, 9)
    f = GridField.from_function(g, lambda x, y: np.array([x]), m=1)
    bvals = boundary_rows(f)
    with pytest.raises(InvalidParameterError):
        solve_dirichlet(HARM1, g, bvals, f, tol=-1.0)
    with pytest.raises(InvalidParameterError):
        solve_dirichlet(HARM1, g, bvals, f, max_iter=0)
    other = GridField.from_function(Grid.square(7, 9),
                                    lambda x, y: np.array([x]), m=1)
    with pytest.raises(InvalidInputError):
        solve_dirichlet(HARM1, g, bvals, other)

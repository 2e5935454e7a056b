"""Variational discretization of the field action on a rectangular grid.

The action S(u) = integral of L(u, d1 u, d2 u) over the domain is discretized
by cell-centered one-point quadrature.  A grid cell with corner values
u00, u10, u01, u11 (first index along x1, second along x2) carries the jet

    qbar  = (u00 + u10 + u01 + u11) / 4
    qdot1 = (u10 + u11 - u00 - u01) / (2 hx)
    qdot2 = (u01 + u11 - u00 - u10) / (2 hy)

and contributes L(qbar, qdot1, qdot2) * hx * hy.  The discrete action is an
explicit smooth function of the nodal values, so its exact gradient is
available cell by cell through forward AD: there is no discretization gap
between ``discrete_action`` and ``discrete_action_gradient``, only float
rounding.

The discrete Euler-Lagrange residual is *defined* as the interior block of
that exact gradient (variational-integrator convention, no sign flip).  Its
continuum limit at an interior node is the pointwise Euler-Lagrange residual
dL/dq - D1(dL/dqdot1) - D2(dL/dqdot2) times the cell area, and the discrete
analog of integration by parts,

    <full gradient, delta u> = <interior block, delta u> + boundary pairing,

holds by construction up to float reassociation rather than up to mesh error:
the pairing functional returned by ``boundary_momentum`` re-sums exactly the
per-cell corner contributions that land on boundary nodes.  At a discrete
stationary point with Dirichlet data the interior block vanishes, so the
boundary pairing alone reproduces the action's first variation.

Lagrangians must be written in generic arithmetic (as the built-in catalog
models are): the solver evaluates them with array-valued dual channels, one
batched pass over all active cells per derivative slot.

Node (i, j) sits at (i*hx, j*hy).  The mask tags nodes 0 = outside,
1 = boundary, 2 = interior; cells enter the quadrature when all four corners
are non-outside.  All loops are deterministic (ordered numpy reductions), so
results are bitwise reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .autodiff import Dual, HyperDual
from .errors import (
    DomainError,
    GridDomainError,
    InvalidInputError,
    InvalidParameterError,
    SingularJacobianError,
)
from .lagrangian import LagrangianModel

__all__ = [
    "Grid",
    "GridField",
    "GridMomentum",
    "SolveReport",
    "discrete_action",
    "discrete_action_gradient",
    "discrete_el_residual",
    "boundary_momentum",
    "momentum_divergence",
    "solve_dirichlet",
]

OUTSIDE, BOUNDARY, INTERIOR = 0, 1, 2

# Corner table: offsets within a cell and the signs of the forward-difference
# coefficients dqdot1/du = sx/(2hx), dqdot2/du = sy/(2hy) at that corner.
_CORNERS = ((0, 0, -1.0, -1.0), (1, 0, 1.0, -1.0),
            (0, 1, -1.0, 1.0), (1, 1, 1.0, 1.0))


@dataclass(frozen=True, eq=False)
class Grid:
    """Rectangular node grid with an interior/boundary/outside mask.

    ``mask`` has shape (nx, ny) with values 0 (outside the domain),
    1 (boundary: value prescribed), 2 (interior: value solved for).  Every
    interior node must have its four edge neighbors non-outside, and the
    boundary set must be nonempty.  Equality on grids is identity; use
    ``same_layout`` for structural comparison.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    mask: np.ndarray

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise InvalidParameterError(
                f"grid needs nx, ny >= 3, got {self.nx} x {self.ny}")
        if not (self.hx > 0.0 and self.hy > 0.0):
            raise InvalidParameterError(
                f"grid spacings must be positive, got hx={self.hx}, hy={self.hy}")
        mask = np.asarray(self.mask)
        if mask.shape != (self.nx, self.ny):
            raise InvalidInputError(
                f"mask has shape {mask.shape}, expected ({self.nx}, {self.ny})")
        if not np.isin(mask, (OUTSIDE, BOUNDARY, INTERIOR)).all():
            raise InvalidInputError("mask entries must be 0, 1 or 2")
        mask = mask.astype(np.int8)
        inside = np.pad(mask > OUTSIDE, 1, constant_values=False)
        neighbors_ok = (inside[2:, 1:-1] & inside[:-2, 1:-1]
                        & inside[1:-1, 2:] & inside[1:-1, :-2])
        if np.any((mask == INTERIOR) & ~neighbors_ok):
            raise InvalidInputError(
                "interior node with an outside (or missing) edge neighbor")
        if not np.any(mask == BOUNDARY):
            raise InvalidInputError("boundary set is empty")
        object.__setattr__(self, "mask", mask)

    @classmethod
    def square(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid":
        """Full rectangle [0, lx] x [0, ly]: border nodes boundary, rest interior."""
        if nx < 3 or ny < 3:
            raise InvalidParameterError(
                f"grid needs nx, ny >= 3, got {nx} x {ny}")
        if not (lx > 0.0 and ly > 0.0):
            raise InvalidParameterError(
                f"side lengths must be positive, got {lx}, {ly}")
        mask = np.full((nx, ny), INTERIOR, dtype=np.int8)
        mask[0, :] = mask[-1, :] = BOUNDARY
        mask[:, 0] = mask[:, -1] = BOUNDARY
        return cls(nx=nx, ny=ny, hx=lx / (nx - 1), hy=ly / (ny - 1), mask=mask)

    @classmethod
    def disc_mask(cls, nx: int, ny: int) -> "Grid":
        """Stair-step disc (x-1/2)^2 + (y-1/2)^2 <= 1/4 inside the unit square.

        Inside nodes with all four edge neighbors inside are interior; inside
        nodes touching the outside (or the array edge) form the boundary.
        First-order accurate at the curved boundary by construction.
        """
        if nx < 3 or ny < 3:
            raise InvalidParameterError(
                f"grid needs nx, ny >= 3, got {nx} x {ny}")
        hx, hy = 1.0 / (nx - 1), 1.0 / (ny - 1)
        x = np.arange(nx) * hx
        y = np.arange(ny) * hy
        inside = ((x[:, None] - 0.5) ** 2 + (y[None, :] - 0.5) ** 2) <= 0.25
        padded = np.pad(inside, 1, constant_values=False)
        surrounded = (padded[2:, 1:-1] & padded[:-2, 1:-1]
                      & padded[1:-1, 2:] & padded[1:-1, :-2])
        mask = np.where(inside & surrounded, INTERIOR,
                        np.where(inside, BOUNDARY, OUTSIDE)).astype(np.int8)
        return cls(nx=nx, ny=ny, hx=hx, hy=hy, mask=mask)

    def same_layout(self, other: "Grid") -> bool:
        return (self.nx == other.nx and self.ny == other.ny
                and self.hx == other.hx and self.hy == other.hy
                and np.array_equal(self.mask, other.mask))

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (nx, ny) with node coordinates."""
        x = np.arange(self.nx) * self.hx
        y = np.arange(self.ny) * self.hy
        return (np.broadcast_to(x[:, None], (self.nx, self.ny)).copy(),
                np.broadcast_to(y[None, :], (self.nx, self.ny)).copy())

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        """(k, 2) int array of interior node indices, lexicographic in (i, j)."""
        return np.argwhere(self.mask == INTERIOR)

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        """(k, 2) int array of boundary node indices, lexicographic in (i, j)."""
        return np.argwhere(self.mask == BOUNDARY)

    @cached_property
    def active_cells(self) -> np.ndarray:
        """(k, 2) int array of cells whose four corners are non-outside; cell
        (i, j) spans nodes (i..i+1, j..j+1)."""
        inside = self.mask > OUTSIDE
        active = (inside[:-1, :-1] & inside[1:, :-1]
                  & inside[:-1, 1:] & inside[1:, 1:])
        return np.argwhere(active)


@dataclass(frozen=True, eq=False)
class GridField:
    """Nodal values of a discrete field u: grid -> R^m.

    ``values`` has shape (nx, ny, m) and must be finite on every non-outside
    node; entries at outside nodes are never read (``from_function`` fills
    them with nan).  The array is adopted, not copied.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3 or values.shape[:2] != (self.grid.nx, self.grid.ny):
            raise InvalidInputError(
                f"values have shape {values.shape}, expected "
                f"({self.grid.nx}, {self.grid.ny}, m)")
        if values.shape[2] < 1:
            raise InvalidInputError("field needs at least one component")
        if not np.isfinite(values[self.grid.mask > OUTSIDE]).all():
            raise InvalidInputError("non-finite value at a non-outside node")
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[2]

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable, m: int) -> "GridField":
        """Sample ``fn(x, y) -> length-m sequence`` at every non-outside node."""
        values = np.full((grid.nx, grid.ny, m), np.nan)
        x, y = grid.node_coords()
        for i, j in np.argwhere(grid.mask > OUTSIDE):
            v = np.asarray(fn(x[i, j], y[i, j]), dtype=float)
            if v.shape != (m,):
                raise InvalidInputError(
                    f"function returned shape {v.shape}, expected ({m},)")
            values[i, j] = v
        return cls(grid=grid, values=values)


@dataclass(frozen=True, eq=False)
class GridMomentum:
    """Per-cell momenta (p1, p2) = (dL/dqdot1, dL/dqdot2) at the cell jets.

    ``p1`` and ``p2`` have shape (nx-1, ny-1, m); entries are finite on
    active cells and nan elsewhere.
    """

    grid: Grid
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        shape = (self.grid.nx - 1, self.grid.ny - 1)
        for name in ("p1", "p2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 3 or arr.shape[:2] != shape:
                raise InvalidInputError(
                    f"{name} has shape {arr.shape}, expected {shape} + (m,)")
            object.__setattr__(self, name, arr)
        if self.p1.shape != self.p2.shape:
            raise InvalidInputError("p1 and p2 must have the same shape")
        cells = self.grid.active_cells
        if not (np.isfinite(self.p1[cells[:, 0], cells[:, 1]]).all()
                and np.isfinite(self.p2[cells[:, 0], cells[:, 1]]).all()):
            raise InvalidInputError("non-finite momentum on an active cell")

    @property
    def m(self) -> int:
        return self.p1.shape[2]


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a Dirichlet solve: accepted Newton steps, final max-norm
    of the discrete Euler-Lagrange residual, action at the returned field."""

    converged: bool
    iterations: int
    final_residual: float
    action: float
    message: str = ""


def _require_model_field(model: LagrangianModel, f: GridField) -> None:
    if not isinstance(f, GridField):
        raise InvalidInputError("expected a GridField")
    if f.m != model.m:
        raise InvalidInputError(f"field has m={f.m}, model has m={model.m}")


def _cell_jets(grid: Grid, values: np.ndarray):
    """Cell-jet blocks (qbar, qdot1, qdot2), each (ncells, m), over active cells."""
    cells = grid.active_cells
    ci, cj = cells[:, 0], cells[:, 1]
    u00 = values[ci, cj]
    u10 = values[ci + 1, cj]
    u01 = values[ci, cj + 1]
    u11 = values[ci + 1, cj + 1]
    qbar = 0.25 * (u00 + u10 + u01 + u11)
    qdot1 = (u10 + u11 - u00 - u01) / (2.0 * grid.hx)
    qdot2 = (u01 + u11 - u00 - u10) / (2.0 * grid.hy)
    return qbar, qdot1, qdot2


def _wrap_cell_domain_error(grid: Grid, e: DomainError) -> GridDomainError:
    cells = grid.active_cells
    cell = None
    if e.component is not None and 0 <= e.component < len(cells):
        cell = (int(cells[e.component, 0]), int(cells[e.component, 1]))
    at = "" if cell is None else f" at cell {cell}"
    return GridDomainError(f"inadmissible cell jet{at}: {e}", cell=cell)


def _cell_values(model: LagrangianModel, grid: Grid, values: np.ndarray) -> np.ndarray:
    """L at every active cell jet, one batched plain evaluation."""
    qbar, qdot1, qdot2 = _cell_jets(grid, values)
    slots = list(np.concatenate([qbar, qdot1, qdot2], axis=1).T)
    try:
        out = model.L(slots)
    except GridDomainError:
        raise
    except DomainError as e:
        raise _wrap_cell_domain_error(grid, e) from e
    return np.broadcast_to(np.asarray(out, dtype=float), (len(qbar),))


def _cell_values_and_gradients(model: LagrangianModel, grid: Grid,
                               values: np.ndarray):
    """L and dL/d(slot) at every active cell jet.

    One batched dual pass: slot s carries value (ncells,) and derivative
    rows (3m, ncells) seeded with the unit vector e_s, so the result's
    derivative stacks the full slot gradient per cell.  Returns
    (L (ncells,), G (3m, ncells)).
    """
    qbar, qdot1, qdot2 = _cell_jets(grid, values)
    ncells, m = qbar.shape
    k = 3 * m
    flat = np.concatenate([qbar, qdot1, qdot2], axis=1)
    slots = []
    for s in range(k):
        seed = np.zeros((k, ncells))
        seed[s] = 1.0
        slots.append(Dual(flat[:, s], seed))
    try:
        out = model.L(slots)
    except GridDomainError:
        raise
    except DomainError as e:
        raise _wrap_cell_domain_error(grid, e) from e
    if not isinstance(out, Dual):
        raise InvalidInputError("Lagrangian did not propagate dual numbers")
    value = np.broadcast_to(np.asarray(out.value, dtype=float), (ncells,))
    deriv = np.broadcast_to(np.asarray(out.deriv, dtype=float), (k, ncells))
    return value, deriv


def _cell_hessians(model: LagrangianModel, grid: Grid,
                   values: np.ndarray) -> np.ndarray:
    """Per-cell Hessian of L over the 3m jet slots, shape (ncells, 3m, 3m).

    One batched hyper-dual pass per slot pair i <= j; symmetry fills the
    lower triangle.
    """
    qbar, qdot1, qdot2 = _cell_jets(grid, values)
    ncells, m = qbar.shape
    k = 3 * m
    flat = np.concatenate([qbar, qdot1, qdot2], axis=1)
    H = np.empty((ncells, k, k))
    for i in range(k):
        for j in range(i, k):
            slots = [HyperDual(flat[:, s],
                               1.0 if s == i else 0.0,
                               1.0 if s == j else 0.0, 0.0)
                     for s in range(k)]
            try:
                out = model.L(slots)
            except GridDomainError:
                raise
            except DomainError as e:
                raise _wrap_cell_domain_error(grid, e) from e
            if not isinstance(out, HyperDual):
                raise InvalidInputError(
                    "Lagrangian did not propagate hyper-dual numbers")
            H[:, i, j] = out.d12
            H[:, j, i] = H[:, i, j]
    return H


def discrete_action(model: LagrangianModel, f: GridField) -> float:
    """Quadrature value of the action: sum of L(cell jet) * hx * hy over
    active cells.  Raises a grid domain error naming the first inadmissible
    cell."""
    _require_model_field(model, f)
    L = _cell_values(model, f.grid, f.values)
    return float(f.grid.hx * f.grid.hy * np.sum(L))


def _corner_coefficients(grid: Grid, G: np.ndarray, m: int):
    """Per-corner nodal contributions of the per-cell slot gradient ``G``.

    Yields (node_i, node_j, contrib (ncells, m)) for each of the four cell
    corners; ``contrib`` already carries the quadrature weight hx*hy, the
    quarter weight of the cell average and the signed forward-difference
    coefficients.  Summing contributions over incident cells is exactly the
    chain rule for the discrete action.
    """
    cells = grid.active_cells
    ci, cj = cells[:, 0], cells[:, 1]
    area = grid.hx * grid.hy
    Gq = G[:m].T
    Gv1 = G[m:2 * m].T
    Gv2 = G[2 * m:].T
    for di, dj, sx, sy in _CORNERS:
        contrib = area * (0.25 * Gq + (sx / (2.0 * grid.hx)) * Gv1
                          + (sy / (2.0 * grid.hy)) * Gv2)
        yield ci + di, cj + dj, contrib


def discrete_action_gradient(model: LagrangianModel, f: GridField) -> np.ndarray:
    """Exact gradient of ``discrete_action`` with respect to every nodal
    value, shape (nx, ny, m); rows of outside nodes are zero.

    Accumulation order is fixed (corner by corner, cells in lexicographic
    order), so repeated evaluation is bitwise reproducible.
    """
    _require_model_field(model, f)
    grid = f.grid
    _, G = _cell_values_and_gradients(model, grid, f.values)
    grad = np.zeros((grid.nx, grid.ny, model.m))
    for ni, nj, contrib in _corner_coefficients(grid, G, model.m):
        np.add.at(grad, (ni, nj), contrib)
    return grad


def discrete_el_residual(model: LagrangianModel, f: GridField) -> np.ndarray:
    """Discrete Euler-Lagrange residual: the interior block of
    ``discrete_action_gradient``, shape (n_interior, m), rows aligned with
    ``grid.interior_nodes``.

    Zero exactly at a discrete stationary point with Dirichlet data; the
    continuum limit of residual/(hx*hy) is the pointwise Euler-Lagrange
    residual.
    """
    grad = discrete_action_gradient(model, f)
    return grad[f.grid.mask == INTERIOR]


def boundary_momentum(model: LagrangianModel, f: GridField):
    """Per-cell momenta and the boundary part of the action's first variation.

    Returns ``(momenta, pairing)``: ``momenta`` holds (p1, p2) =
    (dL/dqdot1, dL/dqdot2) at every active cell jet, and ``pairing(delta)``
    evaluates the boundary-node part of <d(discrete_action), delta> for a
    nodal variation ``delta`` of shape (nx, ny, m).  The pairing re-sums the
    same per-cell corner terms the gradient accumulates (momentum flux through
    the forward differences plus the quarter-weighted dL/dq share of boundary
    corners), so

        <gradient, delta> = <interior block, delta> + pairing(delta)

    holds up to float reassociation.  For Lagrangians with no explicit q
    dependence the pairing is the pure flux of (p1, p2).
    """
    _require_model_field(model, f)
    grid = f.grid
    m = model.m
    _, G = _cell_values_and_gradients(model, grid, f.values)
    cells = grid.active_cells
    ci, cj = cells[:, 0], cells[:, 1]
    nan_shape = (grid.nx - 1, grid.ny - 1, m)
    p1 = np.full(nan_shape, np.nan)
    p2 = np.full(nan_shape, np.nan)
    p1[ci, cj] = G[m:2 * m].T
    p2[ci, cj] = G[2 * m:].T
    momenta = GridMomentum(grid=grid, p1=p1, p2=p2)

    corner_terms = []
    for ni, nj, contrib in _corner_coefficients(grid, G, m):
        on_boundary = grid.mask[ni, nj] == BOUNDARY
        corner_terms.append((ni[on_boundary], nj[on_boundary],
                             contrib[on_boundary]))

    def pairing(delta: np.ndarray) -> float:
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (grid.nx, grid.ny, m):
            raise InvalidInputError(
                f"variation has shape {delta.shape}, expected "
                f"({grid.nx}, {grid.ny}, {m})")
        total = 0.0
        for ni, nj, contrib in corner_terms:
            if len(ni):
                total += float(np.sum(contrib * delta[ni, nj]))
        return total

    return momenta, pairing


def momentum_divergence(mom: GridMomentum) -> tuple[np.ndarray, np.ndarray]:
    """Discrete divergence D1 p1 + D2 p2 of per-cell momenta, one value per
    interior node whose four incident cells are all active.

    Returns ``(div, nodes)`` with ``div`` of shape (k, m) and ``nodes`` the
    (k, 2) node indices.  Cell differences are averaged over the transverse
    pair exactly as the action gradient accumulates them: for a Lagrangian
    with no explicit q dependence the Euler-Lagrange residual at such a node
    equals -hx*hy times this divergence, so the conservation form of the
    field equations reads div = 0 at a discrete stationary point.
    """
    grid = mom.grid
    inside = grid.mask > OUTSIDE
    cell_active = (inside[:-1, :-1] & inside[1:, :-1]
                   & inside[:-1, 1:] & inside[1:, 1:])
    # Node (i, j) touches cells (i-1..i, j-1..j).
    eligible = np.zeros((grid.nx, grid.ny), dtype=bool)
    eligible[1:-1, 1:-1] = ((grid.mask == INTERIOR)[1:-1, 1:-1]
                            & cell_active[:-1, :-1] & cell_active[1:, :-1]
                            & cell_active[:-1, 1:] & cell_active[1:, 1:])
    nodes = np.argwhere(eligible)
    ni, nj = nodes[:, 0], nodes[:, 1]
    p1, p2 = mom.p1, mom.p2
    d1 = ((p1[ni, nj - 1] + p1[ni, nj] - p1[ni - 1, nj - 1] - p1[ni - 1, nj])
          / (2.0 * grid.hx))
    d2 = ((p2[ni - 1, nj] + p2[ni, nj] - p2[ni - 1, nj - 1] - p2[ni, nj - 1])
          / (2.0 * grid.hy))
    return d1 + d2, nodes


def _assemble_jacobian(model: LagrangianModel, grid: Grid, values: np.ndarray,
                       free_dof: np.ndarray, nfree: int):
    """Sparse Hessian of the discrete action restricted to interior dofs.

    Per cell, the nodal Hessian block is T H T^t * hx*hy with H the 3m x 3m
    slot Hessian and T the (4m x 3m) corner-coefficient matrix; blocks land
    in a COO triplet list and duplicate entries are summed on conversion.
    """
    m = model.m
    k = 3 * m
    H = _cell_hessians(model, grid, values)
    coeff = np.array([(0.25, sx / (2.0 * grid.hx), sy / (2.0 * grid.hy))
                      for _, _, sx, sy in _CORNERS])
    T = np.zeros((4 * m, k))
    for c in range(4):
        for blk in range(3):
            T[c * m:(c + 1) * m, blk * m:(blk + 1) * m] = (
                coeff[c, blk] * np.eye(m))
    blocks = grid.hx * grid.hy * np.einsum("as,nst,bt->nab", T, H, T)
    cells = grid.active_cells
    ci, cj = cells[:, 0], cells[:, 1]
    corner_flat = np.stack([(ci + di) * grid.ny + (cj + dj)
                            for di, dj, _, _ in _CORNERS], axis=1)
    dofs = (corner_flat[:, :, None] * m + np.arange(m)).reshape(len(cells), 4 * m)
    free = free_dof[dofs]
    rows = np.broadcast_to(free[:, :, None], blocks.shape)
    cols = np.broadcast_to(free[:, None, :], blocks.shape)
    valid = (rows >= 0) & (cols >= 0)
    J = scipy.sparse.coo_matrix(
        (blocks[valid], (rows[valid], cols[valid])), shape=(nfree, nfree))
    return J.tocsc()


def _max_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r), initial=0.0))


def _cells_admissible(model: LagrangianModel, grid: Grid,
                      values: np.ndarray) -> bool:
    """Cheap whole-grid admissibility pre-check via the model's vectorized
    domain indicator; models without one fall back to the evaluation path's
    own domain errors."""
    if model.domain_indicator is None:
        return True
    qbar, qdot1, qdot2 = _cell_jets(grid, values)
    slots = list(np.concatenate([qbar, qdot1, qdot2], axis=1).T)
    return bool(np.all(np.asarray(model.domain_indicator(slots)) > 0.0))


def solve_dirichlet(model: LagrangianModel, grid: Grid,
                    boundary_values: np.ndarray, initial: GridField, *,
                    tol: float = 1e-10, max_iter: int = 50,
                    max_halvings: int = 30) -> tuple[GridField, SolveReport]:
    """Damped Newton solve of the discrete Euler-Lagrange equations with
    Dirichlet data.

    ``boundary_values`` has shape (n_boundary, m), rows aligned with
    ``grid.boundary_nodes``; ``initial`` must carry exactly those values on
    the boundary and admissible cell jets.  Each Newton step solves the
    sparse interior Hessian system by direct factorization and backtracks
    (halving the step) until the trial iterate is admissible and strictly
    decreases the residual max-norm, so accepted steps never increase it.

    Returns ``(field, report)``.  Non-convergence (stalled line search or
    iteration cap) is reported through ``report.converged`` with the best
    iterate returned; a step that cannot restore admissibility at any
    length raises a grid domain error.
    """
    if not isinstance(initial, GridField):
        raise InvalidInputError("initial must be a GridField")
    if not (initial.grid is grid or initial.grid.same_layout(grid)):
        raise InvalidInputError("initial field lives on a different grid")
    _require_model_field(model, initial)
    if tol <= 0.0:
        raise InvalidParameterError(f"tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise InvalidParameterError(f"max_iter must be >= 1, got {max_iter}")
    m = model.m
    bnodes = grid.boundary_nodes
    bvals = np.asarray(boundary_values, dtype=float)
    if bvals.shape != (len(bnodes), m):
        raise InvalidInputError(
            f"boundary values have shape {bvals.shape}, expected "
            f"({len(bnodes)}, {m})")
    if not np.array_equal(initial.values[bnodes[:, 0], bnodes[:, 1]], bvals):
        raise InvalidInputError("initial field does not satisfy the boundary values")

    inodes = grid.interior_nodes
    nfree = len(inodes) * m
    free_dof = np.full(grid.nx * grid.ny * m, -1, dtype=np.int64)
    node_flat = inodes[:, 0] * grid.ny + inodes[:, 1]
    for c in range(m):
        free_dof[node_flat * m + c] = np.arange(len(inodes)) * m + c

    u = initial.values.copy()
    grad = discrete_action_gradient(model, GridField(grid=grid, values=u))
    res = grad[grid.mask == INTERIOR]
    res_norm = _max_norm(res)
    iterations = 0
    message = ""
    while res_norm > tol and iterations < max_iter:
        J = _assemble_jacobian(model, grid, u, free_dof, nfree)
        try:
            lu = scipy.sparse.linalg.splu(J)
        except RuntimeError as e:
            raise SingularJacobianError(
                f"Newton system is singular at iteration {iterations}: {e}") from e
        step = lu.solve(-res.ravel()).reshape(len(inodes), m)
        if not np.isfinite(step).all():
            raise SingularJacobianError(
                f"Newton step is non-finite at iteration {iterations}")
        t = 1.0
        accepted = False
        saw_admissible = False
        for _ in range(max_halvings):
            u_try = u.copy()
            u_try[inodes[:, 0], inodes[:, 1]] += t * step
            if not _cells_admissible(model, grid, u_try):
                t *= 0.5
                continue
            try:
                grad_try = discrete_action_gradient(
                    model, GridField(grid=grid, values=u_try))
            except GridDomainError:
                t *= 0.5
                continue
            saw_admissible = True
            res_try = grad_try[grid.mask == INTERIOR]
            norm_try = _max_norm(res_try)
            if norm_try < res_norm or norm_try <= tol:
                u, res, res_norm = u_try, res_try, norm_try
                accepted = True
                break
            t *= 0.5
        if accepted:
            iterations += 1
            continue
        if not saw_admissible:
            raise GridDomainError(
                "line search could not restore admissibility at iteration "
                f"{iterations}")
        message = "line search stalled: no step decreased the residual"
        break
    if res_norm <= tol:
        converged = True
    else:
        converged = False
        if not message:
            message = f"iteration cap {max_iter} reached"
    final = GridField(grid=grid, values=u)
    return final, SolveReport(converged=converged, iterations=iterations,
                              final_residual=res_norm,
                              action=discrete_action(model, final),
                              message=message)

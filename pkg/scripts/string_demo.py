#!/usr/bin/env python3
"""End-to-end tour of the relativistic string model.

Three stages, each printing the figures the library guarantees:

1. Pointwise structure: closed-form worldsheet momenta against automatic
   differentiation, the Legendre round trip, and agreement between the
   velocity-side and momentum-side descriptions of the dynamics on random
   admissible points.
2. Canonical-map identities on the iterated bundles for the string
   dimension (m = 4).
3. Boundary-value problems on a square parameter patch: a family of
   spanning surfaces with boundary (x, y, eps*x*y, 0).  Near-flat boundary
   data converges to machine residual; at eps = 0.1 the Newton iteration
   stalls against the reparametrisation degeneracy of the area functional
   and the run reports the stall honestly instead of pretending progress.

Usage:
    python3 scripts/string_demo.py [--points 500] [--grid 17] [--seed 0]
"""

import argparse
import sys

import numpy as np

from fieldtriple.bundles import (
    alpha,
    beta,
    beta_tilde,
    kappa,
    pair_covector,
    pair_jet,
    project_to_jet,
    random_jet_tangent,
    random_phase_jet,
)
from fieldtriple.grid import (
    Grid,
    GridField,
    boundary_momentum,
    momentum_divergence,
    solve_dirichlet,
)
from fieldtriple.hamiltonian import ham_phase_residual
from fieldtriple.lagrangian import legendre, phase_dynamics_member
from fieldtriple.models import (
    get_lagrangian,
    nambu_hamiltonian,
    nambu_legendre_closed_form,
    nambu_legendre_inverse_closed_form,
    sample_admissible_string_jet,
)


def pointwise_structure(points, seed):
    rng = np.random.default_rng(seed)
    model = get_lagrangian("nambu")
    ham = nambu_hamiltonian()
    momenta_gap = round_trip = dynamics_gap = 0.0
    for _ in range(points):
        j = sample_admissible_string_jet(rng)
        ad = legendre(model, j)
        cf = nambu_legendre_closed_form(j)
        momenta_gap = max(momenta_gap,
                          float(np.max(np.abs(ad.p1 - cf.p1))),
                          float(np.max(np.abs(ad.p2 - cf.p2))))
        rec = nambu_legendre_inverse_closed_form(cf)
        round_trip = max(round_trip,
                         float(np.max(np.abs(rec.qdot1 - j.qdot1))),
                         float(np.max(np.abs(rec.qdot2 - j.qdot2))))
        w = phase_dynamics_member(model, j, rng)
        dynamics_gap = max(dynamics_gap, ham_phase_residual(ham, w))
    print("pointwise structure "
          f"({points} random admissible worldsheet jets):")
    print(f"  closed-form momenta vs automatic differentiation  {momenta_gap:.3e}")
    print(f"  Legendre round trip                               {round_trip:.3e}")
    print(f"  velocity-side members satisfy momentum-side law   {dynamics_gap:.3e}")


def map_identities(points, seed):
    rng = np.random.default_rng(seed + 1)
    pairing_gap = 0.0
    both_equal = True
    for _ in range(points):
        w = random_phase_jet(rng, 4)
        v = random_jet_tangent(rng, 4, jet=project_to_jet(w))
        pairing_gap = max(pairing_gap, abs(
            pair_covector(alpha(w), v) - pair_jet(w, kappa(v))))
        both_equal = both_equal and beta(w) == beta_tilde(w)
    print("\ncanonical maps on the iterated bundles (m = 4):")
    print(f"  velocity-side pairing identity                    {pairing_gap:.3e}")
    print(f"  both constructions of the momentum-side map agree {both_equal}")


def spanning_surfaces(n, seed):
    model = get_lagrangian("nambu")
    grid = Grid.square(n, n)
    print(f"\nboundary-value problems on a {n}x{n} parameter grid,")
    print("boundary (x, y, eps*x*y, 0):")
    print("   eps      converged  iter  residual       conservation   action")
    for eps in (0.0, 1e-4, 1e-3, 0.1):
        f = GridField.from_function(
            grid, lambda x, y: np.array([x, y, eps * x * y, 0.0]), 4)
        b = grid.boundary_nodes
        bvals = f.values[b[:, 0], b[:, 1]]
        sol, rep = solve_dirichlet(model, grid, bvals, f,
                                   tol=1e-10, max_iter=50)
        mom, _ = boundary_momentum(model, sol)
        div, _ = momentum_divergence(mom)
        conservation = float(np.max(np.abs(div))) if len(div) else 0.0
        print(f"  {eps:7.1e}  {str(rep.converged):9s}  {rep.iterations:4d}"
              f"  {rep.final_residual:.6e}  {conservation:.6e}"
              f"  {rep.action:.9f}")
    print("\nthe eps = 0.1 row demonstrates the documented stall: the area")
    print("functional is degenerate along tangential reparametrisations, so")
    print("the damped Newton iteration cannot push the residual below the")
    print("soft-mode floor and reports converged = False with the best")
    print("iterate instead of raising.")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=500)
    ap.add_argument("--grid", type=int, default=17)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    pointwise_structure(args.points, args.seed)
    map_identities(args.points, args.seed)
    spanning_surfaces(args.grid, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Hamiltonian side of the phase dynamics.

A Hamiltonian H(q, p1, p2) generates the phase equations through beta: a
phase jet w belongs to the Hamiltonian dynamics when beta(w) = dH at the
base of w, i.e. in coordinates

    -(p1dot1 + p2dot2) = dH/dq,   qdot1 = dH/dp1,   qdot2 = dH/dp2.

Like the Lagrangian relation, this is membership in a subset, represented by
the residual functional ``ham_phase_residual``.

``hamiltonian_from_lagrangian`` builds H as the pointwise Legendre transform
H(q, p1, p2) = p1.v1 + p2.v2 - L(q, v1, v2), with the velocities recovered
by Newton inversion of the Legendre map.  Since p = dL/dv at the recovered
velocities, first derivatives of H do not see dv/dp (the envelope property):
dH/dp_i = v_i and dH/dq = -dL/dq.  The transformed H therefore supports
plain and first-order dual evaluation exactly; hyper-dual (second-order)
evaluation is refused rather than done wrong -- differentiate the Lagrangian
side instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff
from .autodiff import Dual, HyperDual, ScalarField
from .bundles import Jet, Phase, PhaseCovector, PhaseJet, beta
from .errors import (DomainError, InvalidInputError, NoConvergenceError,
                     SingularJacobianError)
from .lagrangian import LagrangianModel, dL, legendre

__all__ = [
    "HamiltonianModel",
    "dH",
    "ham_phase_residual",
    "ham_dynamics_member",
    "legendre_invert",
    "hamiltonian_from_lagrangian",
]


@dataclass(frozen=True)
class HamiltonianModel:
    """A Hamiltonian with its admissible domain.

    ``H`` has arity 3m over the flattened phase point (q, p1, p2) and must
    be finite on every admissible Phase.
    """

    m: int
    H: ScalarField
    admissible: Callable[[Phase], bool]
    name: str = ""

    def __post_init__(self):
        if self.m < 1:
            raise InvalidInputError(f"m must be >= 1, got {self.m}")
        if self.H.arity != 3 * self.m:
            raise InvalidInputError(
                f"H has arity {self.H.arity}, expected 3m = {3 * self.m}")


def _flat_phase(ph: Phase) -> np.ndarray:
    return np.concatenate([ph.q, ph.p1, ph.p2])


def _require_admissible(model: HamiltonianModel, ph: Phase) -> None:
    if ph.m != model.m:
        raise InvalidInputError(f"phase has m={ph.m}, model has m={model.m}")
    if not model.admissible(ph):
        raise DomainError("phase point outside the admissible domain of the Hamiltonian")


def dH(model: HamiltonianModel, ph: Phase) -> PhaseCovector:
    """Differential of H at an admissible phase point."""
    _require_admissible(model, ph)
    g = autodiff.grad(model.H, _flat_phase(ph))
    m = model.m
    return PhaseCovector(phase=ph, phi=g[:m], psi1=g[m:2 * m], psi2=g[2 * m:])


def ham_phase_residual(model: HamiltonianModel, w: PhaseJet) -> float:
    """Distance of a phase jet from the Hamiltonian phase dynamics:
    max-norm of beta(w) - dH(model, w.base) over the 3m covector components."""
    c = dH(model, w.base)
    b = beta(w)
    return float(max(np.max(np.abs(b.phi - c.phi)),
                     np.max(np.abs(b.psi1 - c.psi1)),
                     np.max(np.abs(b.psi2 - c.psi2))))


def ham_dynamics_member(model: HamiltonianModel, ph: Phase,
                        rng: np.random.Generator | None = None) -> PhaseJet:
    """One member of the Hamiltonian dynamics over the phase point ``ph``.

    The relation fixes qdot1, qdot2 and the combination p1dot1 + p2dot2 =
    -dH/dq; the split and the cross derivatives are free (canonical choice:
    p1dot1 = -dH/dq, p2dot2 = 0, cross blocks 0; ``rng`` randomises them).
    """
    c = dH(model, ph)
    m = model.m
    if rng is None:
        split = np.zeros(m)
        cross1 = np.zeros(m)
        cross2 = np.zeros(m)
    else:
        split = rng.standard_normal(m)
        cross1 = rng.standard_normal(m)
        cross2 = rng.standard_normal(m)
    return PhaseJet(base=ph,
                    qdot1=c.psi1,
                    p1dot1=-c.phi - split,
                    p2dot1=cross1,
                    qdot2=c.psi2,
                    p1dot2=cross2,
                    p2dot2=split)


def _velocity_hessian(model: LagrangianModel, z: np.ndarray) -> np.ndarray:
    """Hessian block d^2 L / dv dv (2m x 2m) at the flattened jet z."""
    m = model.m
    out = np.empty((2 * m, 2 * m))
    for i in range(2 * m):
        for j in range(i, 2 * m):
            out[i, j] = autodiff.hessian_mixed(model.L, z, m + i, m + j)
            out[j, i] = out[i, j]
    return out


def _momenta(model: LagrangianModel, z: np.ndarray) -> np.ndarray:
    """(dL/dqdot1, dL/dqdot2) at the flattened jet z, as one 2m vector."""
    g = autodiff.grad(model.L, z)
    return g[model.m:]


def legendre_invert(model: LagrangianModel, ph: Phase, guess: Jet,
                    tol: float = 1e-10, max_iter: int = 50) -> Jet:
    """Invert the Legendre map of ``model`` at the phase point ``ph``.

    Damped Newton iteration on F(v) = momenta(q, v) - (p1, p2) in the 2m
    velocity unknowns, starting from the admissible ``guess``; the step is
    halved (up to 20 times) whenever the residual fails to decrease or the
    iterate leaves the admissible domain.
    """
    if ph.m != model.m:
        raise InvalidInputError(f"phase has m={ph.m}, model has m={model.m}")
    if not model.admissible(guess):
        raise DomainError("inversion guess outside the admissible domain")
    m = model.m
    target = np.concatenate([ph.p1, ph.p2])
    v = np.concatenate([guess.qdot1, guess.qdot2])

    def jet_of(vv: np.ndarray) -> Jet:
        return Jet(q=ph.q, qdot1=vv[:m], qdot2=vv[m:])

    z = np.concatenate([ph.q, v])
    F = _momenta(model, z) - target
    res = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if res <= tol:
            return jet_of(v)
        J = _velocity_hessian(model, z)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as e:
            raise SingularJacobianError(
                f"Legendre map degenerate at iterate (residual {res:.3e})") from e
        t = 1.0
        for _ in range(20):
            cand = v + t * step
            if model.admissible(jet_of(cand)):
                zc = np.concatenate([ph.q, cand])
                Fc = _momenta(model, zc) - target
                rc = float(np.max(np.abs(Fc)))
                if rc < res:
                    v, z, F, res = cand, zc, Fc, rc
                    break
            t *= 0.5
        else:
            raise NoConvergenceError(
                f"Legendre inversion stalled at residual {res:.3e}",
                last_iterate=jet_of(v), residual=res)
    if res <= tol:
        return jet_of(v)
    raise NoConvergenceError(
        f"Legendre inversion did not reach tolerance {tol:.1e} "
        f"in {max_iter} iterations (residual {res:.3e})",
        last_iterate=jet_of(v), residual=res)


class _LegendreTransform:
    """Pointwise Legendre transform of a Lagrangian, with warm-started
    inversion.  Instances hold per-instance cache state only; parallel
    callers must use independent HamiltonianModel instances."""

    def __init__(self, model: LagrangianModel, invert: Callable):
        self.model = model
        self.invert = invert
        self._last_jet: Jet | None = None

    def _velocities(self, q: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> Jet:
        ph = Phase(q=q, p1=p1, p2=p2)
        j = self.invert(self.model, ph, self._last_jet)
        self._last_jet = j
        return j

    def _eval_point(self, xs: list):
        m = self.model.m
        plain = [x.value if isinstance(x, Dual) else x for x in xs]
        q = np.asarray(plain[:m], dtype=float)
        p1 = np.asarray(plain[m:2 * m], dtype=float)
        p2 = np.asarray(plain[2 * m:], dtype=float)
        j = self._velocities(q, p1, p2)
        # The recovered velocities enter as constants: p = dL/dv there, so
        # their dependence on (q, p) drops out of first derivatives.
        acc = 0.0
        for a in range(m):
            acc = acc + xs[m + a] * j.qdot1[a] + xs[2 * m + a] * j.qdot2[a]
        largs = list(xs[:m]) + [float(c) for c in j.qdot1] + [float(c) for c in j.qdot2]
        return acc - self.model.L(largs)

    def __call__(self, xs):
        if any(isinstance(x, HyperDual) for x in xs):
            raise InvalidInputError(
                "second-order evaluation of a transformed Hamiltonian is not "
                "supported; differentiate the Lagrangian side instead")
        if any(isinstance(x, np.ndarray)
               or (isinstance(x, Dual) and isinstance(x.value, np.ndarray))
               for x in xs):
            # Batched call: fall back to an element-wise loop.
            def entry(x, k):
                if isinstance(x, Dual):
                    return Dual(float(x.value[k]), float(np.asarray(x.deriv)[k])
                                if np.ndim(x.deriv) else float(x.deriv))
                return float(x[k]) if np.ndim(x) else float(x)
            n = max(np.shape(x.value if isinstance(x, Dual) else x)[0]
                    for x in xs
                    if np.ndim(x.value if isinstance(x, Dual) else x))
            outs = [self._eval_point([entry(x, k) for x in xs]) for k in range(n)]
            if any(isinstance(o, Dual) for o in outs):
                return Dual(np.array([o.value for o in outs]),
                            np.array([o.deriv for o in outs]))
            return np.array(outs)
        return self._eval_point(list(xs))


def _default_invert(model: LagrangianModel, ph: Phase, warm: Jet | None) -> Jet:
    if warm is None or not model.admissible(warm):
        warm = Jet(q=ph.q, qdot1=np.zeros(model.m), qdot2=np.zeros(model.m))
    else:
        warm = Jet(q=ph.q, qdot1=warm.qdot1, qdot2=warm.qdot2)
    return legendre_invert(model, ph, warm)


def hamiltonian_from_lagrangian(model: LagrangianModel,
                                invert: Callable | None = None,
                                admissible: Callable[[Phase], bool] | None = None,
                                ) -> HamiltonianModel:
    """Legendre transform of a Lagrangian model.

    H(q, p1, p2) = p1.v1 + p2.v2 - L(q, v1, v2) with the velocities obtained
    from ``invert(model, ph, warm_start_jet_or_None) -> Jet``.  The default
    strategy runs ``legendre_invert`` warm-started from the previously
    recovered jet (H is typically evaluated at many nearby points during AD
    sweeps) and from zero velocities initially; models whose admissible
    region excludes zero velocities need a custom strategy.  The admissible
    predicate defaults to accepting every phase point; pass one for models
    with a restricted dual domain.
    """
    transform = _LegendreTransform(model, invert if invert is not None
                                   else _default_invert)
    H = ScalarField(arity=3 * model.m, eval=transform)
    return HamiltonianModel(m=model.m, H=H,
                            admissible=admissible if admissible is not None
                            else (lambda ph: True),
                            name=f"legendre-transform({model.name})" if model.name
                            else "legendre-transform")

"""Built-in model catalog: harmonic/sigma maps and the Minkowski string.

The harmonic model L = (1/2) g_ab (v1^a v1^b + v2^a v2^b) with an SPD target
metric g is the canonical smooth test case: its Euler-Lagrange equation is
the (metric-weighted) Laplace equation, admissible everywhere, Legendre map
linear.  "sigma" is the same functional with a fixed non-trivial constant
metric, so cross-component coupling gets exercised.

The string model ("nambu") lives in 4-dimensional Minkowski space with
signature (+,-,-,-).  Writing g for the 2x2 Gram matrix of the worldsheet
tangent vectors v1, v2 under the metric eta,

    L(q, v1, v2) = sqrt(-det g),

admissible exactly where det g < 0 (a timelike/spacelike pair).  The
Legendre map and its inverse have closed forms, implemented here and
cross-checked against AD in the tests:

    p1 = [eta(v1,v2) low(v2) - eta(v2,v2) low(v1)] / sqrt(-det g)
    p2 = [eta(v1,v2) low(v1) - eta(v1,v1) low(v2)] / sqrt(-det g)

    v1 = [eta(p1,p2) raise(p2) - eta(p2,p2) raise(p1)] / sqrt(-det gd)
    v2 = [eta(p1,p2) raise(p1) - eta(p1,p1) raise(p2)] / sqrt(-det gd)

where gd = [[-eta(p2,p2), eta(p1,p2)], [eta(p1,p2), -eta(p1,p1)]] is the
dual-side Gram matrix (equal to g along the image of the Legendre map: the
momenta satisfy eta(p1,p1) = -eta(v2,v2), eta(p2,p2) = -eta(v1,v1),
eta(p1,p2) = eta(v1,v2)).  Both formulas carry the same overall sign; this
is forced by direct linear inversion of the momentum formulas and is
verified numerically in the tests (forward then inverse is the identity).

The string Hamiltonian is the Legendre transform

    H(q, p1, p2) = p1.v1 + p2.v2 - L = sqrt(-det gd),

with the positive root: L is jointly degree-2 homogeneous in (v1, v2), so
p1.v1 + p2.v2 = 2L and H = L > 0 on the admissible region.  With this root
dH/dp_i reproduces the inverse-Legendre velocities, making the Hamiltonian
phase equations literally equivalent to the Lagrangian ones; the negative
root would generate the parameter-reversed dynamics instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff
from .autodiff import Dual, HyperDual, ScalarField
from .bundles import Jet, Phase
from .errors import DomainError, InvalidParameterError
from .hamiltonian import HamiltonianModel
from .lagrangian import LagrangianModel

__all__ = [
    "MinkowskiMetric",
    "GramMatrix",
    "harmonic_lagrangian",
    "harmonic_hamiltonian",
    "sigma_metric",
    "nambu_lagrangian",
    "nambu_legendre_closed_form",
    "nambu_legendre_inverse_closed_form",
    "nambu_hamiltonian",
    "sample_admissible_string_jet",
    "sample_admissible_string_phase",
    "MODEL_NAMES",
    "get_lagrangian",
    "get_hamiltonian",
]


def _value(x):
    return x.value if isinstance(x, (Dual, HyperDual)) else x


def _require_negative(x, what: str) -> None:
    val = np.asarray(_value(x))
    ok = val < 0.0
    if not bool(np.all(ok)):
        comp = None if val.ndim == 0 else int(np.argmax(~ok))
        at = "" if comp is None else f" at component {comp}"
        raise DomainError(f"{what} must be negative{at}", component=comp)


@dataclass(frozen=True)
class MinkowskiMetric:
    """Flat metric of signature (+,-,-,-) on R^4, in a fixed inertial chart.

    With the metric diagonal, lowering and raising an index are the same
    componentwise sign flip, and the dual-side bilinear form has the same
    components as the primal one.
    """

    dim: int = 4

    @property
    def signs(self) -> np.ndarray:
        s = -np.ones(self.dim)
        s[0] = 1.0
        return s

    def inner(self, v, w):
        """eta(v, w) for two vectors given as length-4 sequences; entries may
        be plain numbers, arrays, or dual kinds."""
        acc = v[0] * w[0]
        for i in range(1, self.dim):
            acc = acc - v[i] * w[i]
        return acc

    # The form is diagonal with entries +-1, so it equals its own inverse
    # and the dual pairing has the identical component formula.
    inner_dual = inner

    def lower(self, v: np.ndarray) -> np.ndarray:
        return self.signs * np.asarray(v, dtype=float)

    def raise_(self, p: np.ndarray) -> np.ndarray:
        return self.signs * np.asarray(p, dtype=float)


MINKOWSKI = MinkowskiMetric()


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric 2x2 Gram matrix; the worldsheet is admissible iff det < 0."""

    g11: object
    g12: object
    g22: object

    @property
    def det(self):
        return self.g11 * self.g22 - self.g12 * self.g12

    @property
    def admissible(self) -> bool:
        return bool(np.all(np.asarray(_value(self.det)) < 0.0))

    @classmethod
    def from_velocities(cls, metric: MinkowskiMetric, v1, v2) -> "GramMatrix":
        return cls(g11=metric.inner(v1, v1), g12=metric.inner(v1, v2),
                   g22=metric.inner(v2, v2))

    @classmethod
    def from_momenta(cls, metric: MinkowskiMetric, p1, p2) -> "GramMatrix":
        return cls(g11=-metric.inner_dual(p2, p2),
                   g12=metric.inner_dual(p1, p2),
                   g22=-metric.inner_dual(p1, p1))


def _check_metric(m: int, target_metric) -> np.ndarray:
    if target_metric is None:
        return np.eye(m)
    g = np.asarray(target_metric, dtype=float)
    if g.shape != (m, m):
        raise InvalidParameterError(
            f"target metric has shape {g.shape}, expected ({m}, {m})")
    if not np.allclose(g, g.T, rtol=1e-12, atol=1e-12):
        raise InvalidParameterError("target metric must be symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as e:
        raise InvalidParameterError("target metric must be positive definite") from e
    return g


def harmonic_lagrangian(m: int = 1, target_metric=None,
                        name: str = "harmonic") -> LagrangianModel:
    """L = (1/2) g_ab (v1^a v1^b + v2^a v2^b), admissible everywhere."""
    if m < 1:
        raise InvalidParameterError(f"m must be >= 1, got {m}")
    g = _check_metric(m, target_metric)

    def eval_L(xs):
        v1 = xs[m:2 * m]
        v2 = xs[2 * m:]
        acc = 0.0
        for a in range(m):
            for b in range(m):
                gab = g[a, b]
                if gab != 0.0:
                    acc = acc + gab * (v1[a] * v1[b] + v2[a] * v2[b])
        return 0.5 * acc

    return LagrangianModel(m=m, L=ScalarField(arity=3 * m, eval=eval_L),
                           admissible=lambda j: True, name=name)


def harmonic_hamiltonian(m: int = 1, target_metric=None,
                         name: str = "harmonic") -> HamiltonianModel:
    """Closed-form Legendre transform of the harmonic model:
    H = (1/2) g^ab (p1_a p1_b + p2_a p2_b)."""
    if m < 1:
        raise InvalidParameterError(f"m must be >= 1, got {m}")
    ginv = np.linalg.inv(_check_metric(m, target_metric))

    def eval_H(xs):
        p1 = xs[m:2 * m]
        p2 = xs[2 * m:]
        acc = 0.0
        for a in range(m):
            for b in range(m):
                gab = ginv[a, b]
                if gab != 0.0:
                    acc = acc + gab * (p1[a] * p1[b] + p2[a] * p2[b])
        return 0.5 * acc

    return HamiltonianModel(m=m, H=ScalarField(arity=3 * m, eval=eval_H),
                            admissible=lambda ph: True, name=name)


def sigma_metric(m: int) -> np.ndarray:
    """Constant SPD target metric for the "sigma" model: identity plus a
    rank-one bump, eigenvalues 1 (multiplicity m-1) and 3/2."""
    return np.eye(m) + 0.5 * np.ones((m, m)) / m


def _string_gram_from_slots(xs) -> GramMatrix:
    v1 = xs[4:8]
    v2 = xs[8:12]
    return GramMatrix.from_velocities(MINKOWSKI, v1, v2)


def nambu_lagrangian() -> LagrangianModel:
    """String Lagrangian L = sqrt(-det g) in Minkowski R^4 (m = 4)."""

    def eval_L(xs):
        g = _string_gram_from_slots(xs)
        det = g.det
        _require_negative(det, "worldsheet Gram determinant")
        return autodiff.sqrt(-det)

    def admissible(j: Jet) -> bool:
        return GramMatrix.from_velocities(MINKOWSKI, j.qdot1, j.qdot2).admissible

    def indicator(xs):
        return -_value(_string_gram_from_slots(xs).det)

    return LagrangianModel(m=4, L=ScalarField(arity=12, eval=eval_L),
                           admissible=admissible, domain_indicator=indicator,
                           name="nambu")


def nambu_legendre_closed_form(j: Jet) -> Phase:
    """Closed-form string momenta (see module docstring for the formulas)."""
    if j.m != 4:
        raise InvalidParameterError(f"string model needs m=4, got m={j.m}")
    v1, v2 = j.qdot1, j.qdot2
    A = float(MINKOWSKI.inner(v1, v1))
    B = float(MINKOWSKI.inner(v1, v2))
    C = float(MINKOWSKI.inner(v2, v2))
    det = A * C - B * B
    _require_negative(det, "worldsheet Gram determinant")
    s = np.sqrt(-det)
    w1 = MINKOWSKI.lower(v1)
    w2 = MINKOWSKI.lower(v2)
    return Phase(q=j.q, p1=(B * w2 - C * w1) / s, p2=(B * w1 - A * w2) / s)


def nambu_legendre_inverse_closed_form(ph: Phase) -> Jet:
    """Closed-form inverse of the string Legendre map.

    Same structure as the forward map with indices raised instead of
    lowered; the overall sign is +1/sqrt(-det gd), which is what direct
    linear inversion of the momentum formulas gives (and what the
    round-trip tests enforce).
    """
    if ph.m != 4:
        raise InvalidParameterError(f"string model needs m=4, got m={ph.m}")
    p1, p2 = ph.p1, ph.p2
    P11 = float(MINKOWSKI.inner_dual(p1, p1))
    P12 = float(MINKOWSKI.inner_dual(p1, p2))
    P22 = float(MINKOWSKI.inner_dual(p2, p2))
    det_d = P11 * P22 - P12 * P12  # equals det gd for gd built from momenta
    _require_negative(det_d, "dual-side Gram determinant")
    s = np.sqrt(-det_d)
    r1 = MINKOWSKI.raise_(p1)
    r2 = MINKOWSKI.raise_(p2)
    return Jet(q=ph.q, qdot1=(P12 * r2 - P22 * r1) / s,
               qdot2=(P12 * r1 - P11 * r2) / s)


_DUAL_DET_MARGIN = 1e-8


def nambu_hamiltonian() -> HamiltonianModel:
    """String Hamiltonian H = sqrt(-det gd) on the dual-side Gram matrix.

    Positive root: H is the Legendre transform of L = sqrt(-det g) and
    p1.v1 + p2.v2 = 2L by homogeneity, so H = L > 0 (see module docstring).
    Admissibility requires det gd < 0 with a small margin, keeping the
    square-root derivatives bounded.
    """

    def eval_H(xs):
        p1 = xs[4:8]
        p2 = xs[8:12]
        g = GramMatrix.from_momenta(MINKOWSKI, p1, p2)
        det = g.det
        _require_negative(det, "dual-side Gram determinant")
        return autodiff.sqrt(-det)

    def admissible(ph: Phase) -> bool:
        g = GramMatrix.from_momenta(MINKOWSKI, ph.p1, ph.p2)
        return bool(_value(g.det) < -_DUAL_DET_MARGIN)

    return HamiltonianModel(m=4, H=ScalarField(arity=12, eval=eval_H),
                            admissible=admissible, name="nambu")


def sample_admissible_string_jet(rng: np.random.Generator) -> Jet:
    """Random admissible worldsheet jet, away from the degenerate boundary.

    v1 = e0 + 0.5 * (random spatial unit vector) is timelike, v2 is a random
    spatial vector with |v2| in [0.5, 2]; rejection-sample until
    det g < -1e-3 so that sqrt derivatives stay bounded.
    """
    while True:
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        v1 = np.concatenate([[1.0], 0.5 * u])
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        v2 = np.concatenate([[0.0], rng.uniform(0.5, 2.0) * d])
        j = Jet(q=rng.standard_normal(4), qdot1=v1, qdot2=v2)
        g = GramMatrix.from_velocities(MINKOWSKI, v1, v2)
        if float(g.det) < -1e-3:
            return j


def sample_admissible_string_phase(rng: np.random.Generator) -> Phase:
    """Random admissible dual-side point: the image of an admissible jet
    (the dual Gram determinant there equals the primal one)."""
    return nambu_legendre_closed_form(sample_admissible_string_jet(rng))


MODEL_NAMES = ("harmonic", "sigma", "nambu")


def _validated_m(name: str, m: int | None) -> int:
    if name == "nambu":
        if m is not None and m != 4:
            raise InvalidParameterError(f"model 'nambu' requires m=4, got m={m}")
        return 4
    m = 1 if m is None else m
    if m < 1:
        raise InvalidParameterError(f"m must be >= 1, got {m}")
    return m


def get_lagrangian(name: str, m: int | None = None) -> LagrangianModel:
    """Catalog lookup by CLI name: "harmonic", "sigma", or "nambu"."""
    if name not in MODEL_NAMES:
        raise InvalidParameterError(
            f"unknown model '{name}' (available: {', '.join(MODEL_NAMES)})")
    mm = _validated_m(name, m)
    if name == "harmonic":
        return harmonic_lagrangian(mm)
    if name == "sigma":
        return harmonic_lagrangian(mm, sigma_metric(mm), name="sigma")
    return nambu_lagrangian()


def get_hamiltonian(name: str, m: int | None = None) -> HamiltonianModel:
    """Closed-form Hamiltonian counterpart of each catalog model."""
    if name not in MODEL_NAMES:
        raise InvalidParameterError(
            f"unknown model '{name}' (available: {', '.join(MODEL_NAMES)})")
    mm = _validated_m(name, m)
    if name == "harmonic":
        return harmonic_hamiltonian(mm)
    if name == "sigma":
        return harmonic_hamiltonian(mm, sigma_metric(mm), name="sigma")
    return nambu_hamiltonian()

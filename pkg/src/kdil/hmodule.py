"""Free Hilbert modules ``A^k`` and group actions on them.

A module vector is stored as ``k*N`` coordinates, component-major: index
``m*N + i`` is the algebra basis element ``e_i`` sitting in component ``m``.
As with algebras, modules expose two coordinate tables so that generic code
(the phi-map checks, the dilation) also runs on crossed-product modules:

* ``inner_table[p, q, :]`` = coordinates of ``<b_p, b_q>``
* ``right_table[p, i, :]`` = coordinates of ``b_p e_i``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import AlgebraElement, CoordinateAlgebra, automorphism_residuals
from .errors import ModuleMismatch, NotDynamicalSystem
from .numkit import DEFAULT_TOL, TolerancePolicy, opnorm, einsum
from .report import Check, Report


class CoordinateModule:
    algebra: CoordinateAlgebra
    dim: int

    @cached_property
    def inner_table(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def right_table(self) -> np.ndarray:
        raise NotImplementedError

    def inner(self, x, y) -> np.ndarray:
        return einsum("p,q,pqk->k", np.conj(x), y, self.inner_table)

    def right(self, x, a) -> np.ndarray:
        return einsum("p,i,piq->q", x, a, self.right_table)

    def norm(self, x) -> float:
        return float(np.sqrt(max(self.algebra.norm(self.inner(x, x)), 0.0)))

    def basis_vector(self, p: int) -> np.ndarray:
        v = np.zeros(self.dim, complex)
        v[p] = 1.0
        return v

    def element(self, coords) -> "ModuleElement":
        c = np.asarray(coords, dtype=complex).reshape(-1)
        if c.shape != (self.dim,):
            raise ModuleMismatch(f"expected {self.dim} coordinates, got {c.shape[0]}")
        return ModuleElement(self, c)

    def random_coords(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)

    def fullness_residual(self) -> float:
        """Distance from the unit to the span of the inner products of basis vectors."""
        span = self.inner_table.reshape(-1, self.algebra.dim).T
        sol, *_ = np.linalg.lstsq(span, self.algebra.unit, rcond=None)
        return float(np.linalg.norm(span @ sol - self.algebra.unit))


class FreeHilbertModule(CoordinateModule):
    """``X = A^k`` with ``<x, y> = sum_m x_m^* y_m``."""

    def __init__(self, algebra: CoordinateAlgebra, rank: int = 1):
        if rank < 1:
            raise ValueError("module rank must be at least 1")
        self.algebra = algebra
        self.rank = int(rank)
        self.dim = self.rank * algebra.dim

    def __repr__(self):
        return f"FreeHilbertModule({self.algebra!r}, rank={self.rank})"

    @cached_property
    def inner_table(self) -> np.ndarray:
        n = self.algebra.dim
        # <e_i, e_j> = e_i^* e_j
        blk = einsum("li,ljk->ijk", self.algebra.star_matrix, self.algebra.struct)
        t = np.zeros((self.dim, self.dim, n), complex)
        for m in range(self.rank):
            t[m * n:(m + 1) * n, m * n:(m + 1) * n] = blk
        return t

    @cached_property
    def right_table(self) -> np.ndarray:
        n = self.algebra.dim
        r = np.zeros((self.dim, n, self.dim), complex)
        for m in range(self.rank):
            r[m * n:(m + 1) * n, :, m * n:(m + 1) * n] = self.algebra.struct
        return r

    def inner(self, x, y) -> np.ndarray:
        alg = self.algebra
        xs, ys = np.reshape(x, (self.rank, -1)), np.reshape(y, (self.rank, -1))
        return sum(alg.mul(alg.star(a), b) for a, b in zip(xs, ys))

    def right(self, x, a) -> np.ndarray:
        xs = np.reshape(x, (self.rank, -1))
        return np.concatenate([self.algebra.mul(c, a) for c in xs])

    def from_components(self, comps) -> "ModuleElement":
        parts = [c.coords if isinstance(c, AlgebraElement) else np.asarray(c, complex) for c in comps]
        if len(parts) != self.rank:
            raise ModuleMismatch(f"expected {self.rank} components")
        return self.element(np.concatenate(parts))

    def componentwise(self, beta_matrix: np.ndarray) -> np.ndarray:
        """``eta = beta`` applied in every component."""
        return np.kron(np.eye(self.rank), beta_matrix)


@dataclass(frozen=True, eq=False)
class ModuleElement:
    parent: CoordinateModule
    coords: np.ndarray

    def _same(self, other):
        if other.parent is not self.parent:
            raise ModuleMismatch("elements belong to different modules")

    @property
    def components(self) -> list[AlgebraElement]:
        alg = self.parent.algebra
        return [alg.element(c) for c in np.reshape(self.coords, (-1, alg.dim))]

    def __add__(self, other):
        self._same(other)
        return ModuleElement(self.parent, self.coords + other.coords)

    def __rmul__(self, scalar):
        return ModuleElement(self.parent, scalar * self.coords)

    def __mul__(self, a):
        if isinstance(a, AlgebraElement):
            return right_action(self, a)
        return ModuleElement(self.parent, self.coords * a)

    def norm(self) -> float:
        return self.parent.norm(self.coords)


def inner_product(x: ModuleElement, y: ModuleElement) -> AlgebraElement:
    x._same(y)
    return x.parent.algebra.element(x.parent.inner(x.coords, y.coords))


def right_action(x: ModuleElement, a: AlgebraElement) -> ModuleElement:
    alg = x.parent.algebra
    if a.parent is not alg and a.parent != alg:
        raise ModuleMismatch("algebra element does not act on this module")
    return ModuleElement(x.parent, x.parent.right(x.coords, a.coords))


@dataclass(frozen=True, eq=False)
class ModuleAction:
    """Group action ``t -> eta_t`` on a module with induced ``t -> beta_t`` on the algebra.

    ``group`` is anything with ``order``, ``table``, ``identity`` (see
    :class:`kdil.covariant.FiniteGroup`).
    """

    group: object
    module: CoordinateModule
    eta: tuple
    beta: tuple
    residuals: dict = field(default_factory=dict)


def infer_beta(module: FreeHilbertModule, eta: np.ndarray) -> np.ndarray:
    """Read ``beta_t`` off ``eta_t`` via ``beta_t(a) = <eta_t x0, eta_t(x0 a)>``, x0 = (1, 0, ..)."""
    alg = module.algebra
    x0 = np.zeros(module.dim, complex)
    x0[:alg.dim] = alg.unit
    ex0 = eta @ x0
    cols = [module.inner(ex0, eta @ module.right(x0, alg.basis_vector(i))) for i in range(alg.dim)]
    return np.stack(cols, axis=1)


def make_action(group, module: CoordinateModule, eta, beta=None) -> ModuleAction:
    eta = tuple(np.asarray(e, dtype=complex) for e in eta)
    if len(eta) != group.order:
        raise NotDynamicalSystem(f"need one eta per group element ({group.order}), got {len(eta)}")
    for e in eta:
        if e.shape != (module.dim, module.dim):
            raise NotDynamicalSystem(f"eta has shape {e.shape}, expected {(module.dim,) * 2}")
    if beta is None:
        beta = [infer_beta(module, e) for e in eta]
    beta = tuple(np.asarray(b, dtype=complex) for b in beta)
    if len(beta) != group.order:
        raise NotDynamicalSystem("need one beta per group element")
    return ModuleAction(group, module, eta, beta)


def action_report(act: ModuleAction, tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    g, mod = act.group, act.module
    alg = mod.algebra
    n = g.order
    T, R = mod.inner_table, mod.right_table
    e = g.identity
    scale = max([1.0] + [opnorm(x) for x in act.eta] + [opnorm(b) for b in act.beta]) ** 2
    thr = tol.threshold(scale)

    ident = max(opnorm(act.eta[e] - np.eye(mod.dim)), opnorm(act.beta[e] - np.eye(alg.dim)))
    hom, hom_w = 0.0, None
    for s in range(n):
        for t in range(n):
            r = max(opnorm(act.eta[g.table[s][t]] - act.eta[s] @ act.eta[t]),
                    opnorm(act.beta[g.table[s][t]] - act.beta[s] @ act.beta[t]))
            if r > hom:
                hom, hom_w = r, [s, t]
    inner_res, inner_w = 0.0, None
    right_res, right_w = 0.0, None
    auto_res, auto_w = 0.0, None
    for t in range(n):
        eta, beta = act.eta[t], act.beta[t]
        lhs = einsum("rp,sq,rsk->pqk", np.conj(eta), eta, T)
        rhs = einsum("kl,pql->pqk", beta, T)
        r = float(np.max(np.linalg.norm(lhs - rhs, axis=2), initial=0.0))
        if r > inner_res:
            inner_res, inner_w = r, t
        lhs = einsum("rq,piq->pir", eta, R)
        rhs = einsum("rp,li,rls->pis", eta, beta, R)
        r = float(np.max(np.linalg.norm(lhs - rhs, axis=2), initial=0.0))
        if r > right_res:
            right_res, right_w = r, t
        ar = automorphism_residuals(beta, alg)
        r = max(ar["unital"], ar["star"], ar["multiplicative"])
        if ar["bijective"] <= tol.abs_tol:
            r = float("inf")
        if r > auto_res:
            auto_res, auto_w = r, t

    rep = Report()
    rep.add(Check("action_identity", "eta_e = id, beta_e = id", ident, thr, error=NotDynamicalSystem))
    rep.add(Check("action_homomorphism", "eta_st = eta_s eta_t", hom, thr, error=NotDynamicalSystem,
                  witness=hom_w))
    rep.add(Check("inner_compatibility", "<eta_t x, eta_t y> = beta_t(<x, y>)", inner_res, thr,
                  error=NotDynamicalSystem, witness=inner_w))
    rep.add(Check("right_compatibility", "eta_t(x a) = eta_t(x) beta_t(a)", right_res, thr,
                  error=NotDynamicalSystem, witness=right_w))
    rep.add(Check("beta_automorphism", "beta_t is a *-automorphism", auto_res, thr,
                  error=NotDynamicalSystem, witness=auto_w))
    return rep


def verify_action_compatibility(act: ModuleAction, tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    """Check the dynamical-system axioms; raise NotDynamicalSystem naming the failed identity."""
    rep = action_report(act, tol)
    for chk in rep.failures:
        raise NotDynamicalSystem(f"{chk.name} fails (residual {chk.residual:.3e}, group element "
                                 f"{chk.witness})", residual=chk.residual, witness=chk.name)
    return rep

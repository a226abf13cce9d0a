"""Crossed products by finite groups (counting measure).

``G x_beta A`` has basis ``delta_t (x) e_i`` at index ``t*N + i`` with

    (f * g)(s) = sum_t f(t) beta_t(g(t^-1 s)),     f^*(t) = beta_t(f(t^-1)^*),

and ``G x_eta X`` has basis ``delta_t (x) b_p`` at index ``t*dim(X) + p`` with

    <x, y>(s) = sum_t beta_{t^-1}(<x(t), y(ts)>),  (x f)(s) = sum_t x(t) beta_t(f(t^-1 s)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import AlgebraElement, CoordinateAlgebra, FiniteCStarAlgebra, verify_automorphism
from .covariant import CovariantDilation, FiniteGroup, PseudoUnitaryRep
from .errors import AlgebraMismatch, IdentityResidualTooLarge, ModuleMismatch
from .hmodule import CoordinateModule, ModuleAction
from .ksgns import KsgnsDilation, verify_ksgns
from .maps import AlphaCPMap, PhiMap, verify_alpha_cp, verify_phi_map
from .numkit import DEFAULT_TOL, TolerancePolicy, einsum, opnorm, opnorms
from .report import Check, Report


class CrossedProductAlgebra(CoordinateAlgebra):
    def __init__(self, base: CoordinateAlgebra, group: FiniteGroup, beta):
        self.base = base
        self.group = group
        self.beta = tuple(np.asarray(b, complex) for b in beta)
        if len(self.beta) != group.order:
            raise AlgebraMismatch("need one beta per group element")
        self.dim = group.order * base.dim

    def __repr__(self):
        return f"CrossedProductAlgebra({self.base!r}, order={self.group.order})"

    def split(self, x) -> np.ndarray:
        """Coordinates as an array ``f[t]`` of base-algebra coordinates."""
        return np.reshape(np.asarray(x, complex), (self.group.order, self.base.dim))

    def delta(self, t: int, a) -> np.ndarray:
        f = np.zeros((self.group.order, self.base.dim), complex)
        f[t] = getattr(a, "coords", a)
        return f.reshape(-1)

    @cached_property
    def struct(self) -> np.ndarray:
        g, n = self.group, self.base.dim
        c = np.zeros((self.dim,) * 3, complex)
        for t in range(g.order):
            # e_i beta_t(e_j)
            blk = einsum("lj,ilk->ijk", self.beta[t], self.base.struct)
            for s in range(g.order):
                ts = g.table[t][s]
                c[t * n:(t + 1) * n, s * n:(s + 1) * n, ts * n:(ts + 1) * n] = blk
        return c

    @cached_property
    def star_matrix(self) -> np.ndarray:
        g, n = self.group, self.base.dim
        s_mat = np.zeros((self.dim, self.dim), complex)
        for t in range(g.order):
            ti = g.inverse[t]
            s_mat[ti * n:(ti + 1) * n, t * n:(t + 1) * n] = self.beta[ti] @ self.base.star_matrix
        return s_mat

    @cached_property
    def unit(self) -> np.ndarray:
        return self.delta(self.group.identity, self.base.unit)

    def regular_rep(self, x) -> np.ndarray:
        """``(pi(f) xi)(s) = sum_t pi(beta_{s^-1}(f(t))) xi(t^-1 s)`` on ``l^2(G, C^D)``."""
        if not isinstance(self.base, FiniteCStarAlgebra):
            raise AlgebraMismatch("regular representation needs a matrix-block base algebra")
        g = self.group
        f = self.split(x)
        dd = self.base.matrix_size
        out = np.zeros((g.order * dd, g.order * dd), complex)
        for s in range(g.order):
            si = g.inverse[s]
            for t in range(g.order):
                r = g.table[g.inverse[t]][s]
                out[s * dd:(s + 1) * dd, r * dd:(r + 1) * dd] += self.base.to_matrix(self.beta[si] @ f[t])
        return out

    def norm(self, x) -> float:
        return opnorm(self.regular_rep(x))

    def lift_alpha(self, alpha_matrix: np.ndarray) -> np.ndarray:
        """Coordinate matrix of ``f -> alpha o f``."""
        return np.kron(np.eye(self.group.order), alpha_matrix)


def convolve(f: AlgebraElement, g: AlgebraElement) -> AlgebraElement:
    """Convolution product evaluated group element by group element."""
    alg = f.parent
    if not isinstance(alg, CrossedProductAlgebra) or g.parent is not alg:
        raise AlgebraMismatch("convolution needs two elements of the same crossed product")
    grp, base = alg.group, alg.base
    fs, gs = alg.split(f.coords), alg.split(g.coords)
    out = np.zeros_like(fs)
    for s in range(grp.order):
        for t in range(grp.order):
            out[s] += base.mul(fs[t], alg.beta[t] @ gs[grp.table[grp.inverse[t]][s]])
    return alg.element(out.reshape(-1))


def crossed_star(f: AlgebraElement) -> AlgebraElement:
    alg = f.parent
    grp, base = alg.group, alg.base
    fs = alg.split(f.coords)
    out = np.stack([alg.beta[t] @ base.star(fs[grp.inverse[t]]) for t in range(grp.order)])
    return alg.element(out.reshape(-1))


class CrossedModule(CoordinateModule):
    def __init__(self, module: CoordinateModule, algebra: CrossedProductAlgebra):
        if module.algebra is not algebra.base and module.algebra != algebra.base:
            raise ModuleMismatch("module and crossed product have different coefficient algebras")
        self.base = module
        self.algebra = algebra
        self.group = algebra.group
        self.dim = self.group.order * module.dim

    def split(self, x) -> np.ndarray:
        return np.reshape(np.asarray(x, complex), (self.group.order, self.base.dim))

    def delta(self, t: int, x) -> np.ndarray:
        f = np.zeros((self.group.order, self.base.dim), complex)
        f[t] = getattr(x, "coords", x)
        return f.reshape(-1)

    @cached_property
    def inner_table(self) -> np.ndarray:
        g, m, n = self.group, self.base.dim, self.algebra.base.dim
        tab = np.zeros((self.dim, self.dim, self.algebra.dim), complex)
        base_tab = self.base.inner_table
        for t in range(g.order):
            ti = g.inverse[t]
            blk = einsum("kl,pql->pqk", self.algebra.beta[ti], base_tab)
            for s in range(g.order):
                r = g.table[ti][s]
                tab[t * m:(t + 1) * m, s * m:(s + 1) * m, r * n:(r + 1) * n] = blk
        return tab

    @cached_property
    def right_table(self) -> np.ndarray:
        g, m, n = self.group, self.base.dim, self.algebra.base.dim
        tab = np.zeros((self.dim, self.algebra.dim, self.dim), complex)
        base_tab = self.base.right_table
        for t in range(g.order):
            blk = einsum("li,plq->piq", self.algebra.beta[t], base_tab)
            for s in range(g.order):
                ts = g.table[t][s]
                tab[t * m:(t + 1) * m, s * n:(s + 1) * n, ts * m:(ts + 1) * m] = blk
        return tab


def crossed_inner_product(xh, yh, module: CrossedModule) -> np.ndarray:
    """``<x, y>(s) = sum_t beta_{t^-1}(<x(t), y(ts)>)`` evaluated term by term."""
    g, alg = module.group, module.algebra
    xs, ys = module.split(xh), module.split(yh)
    out = np.zeros((g.order, alg.base.dim), complex)
    for s in range(g.order):
        for t in range(g.order):
            out[s] += alg.beta[g.inverse[t]] @ module.base.inner(xs[t], ys[g.table[t][s]])
    return out.reshape(-1)


def crossed_right_action(xh, f, module: CrossedModule) -> np.ndarray:
    g, alg = module.group, module.algebra
    xs, fs = module.split(xh), alg.split(f)
    out = np.zeros_like(xs)
    for s in range(g.order):
        for t in range(g.order):
            out[s] += module.base.right(xs[t], alg.beta[t] @ fs[g.table[g.inverse[t]][s]])
    return out.reshape(-1)


@dataclass(frozen=True, eq=False)
class InducedMaps:
    algebra: CrossedProductAlgebra
    module: CrossedModule
    phi_tilde: AlphaCPMap
    Phi_tilde: PhiMap
    pi_hat_phi: np.ndarray   # (|G| N, r, r)
    pi_hat_X: np.ndarray     # (|G| dim X, s, r)
    dilation: KsgnsDilation
    report: Report


def phi_tilde_naive(phi: AlphaCPMap, u: PseudoUnitaryRep, f: np.ndarray) -> np.ndarray:
    """``sum_t phi(f(t)) u_t`` with an explicit loop."""
    fs = np.reshape(f, (len(u.u), -1))
    return sum(phi(fs[t]) @ u.u[t] for t in range(len(u.u)))


def Phi_tilde_naive(Phi: PhiMap, u: PseudoUnitaryRep, xh: np.ndarray) -> np.ndarray:
    xs = np.reshape(xh, (len(u.u), -1))
    return sum(Phi(xs[t]) @ u.u[t] for t in range(len(u.u)))


def induce_crossed_maps(c: CovariantDilation, Phi: PhiMap, act: ModuleAction, u: PseudoUnitaryRep,
                        u_prime: PseudoUnitaryRep | None = None,
                        tol: TolerancePolicy = DEFAULT_TOL) -> InducedMaps:
    """phi~, Phi~, and the induced dilation on the crossed products, with their checks.

    ``u_prime`` is accepted for symmetry with the covariant construction; the
    induced maps only involve ``u`` and ``v``.
    """
    phi = Phi.phi
    grp = act.group
    alg = CrossedProductAlgebra(phi.algebra, grp, act.beta)
    mod = CrossedModule(Phi.module, alg)
    alpha_t = verify_automorphism(alg.lift_alpha(phi.alpha.matrix), alg, tol)
    base = c.base

    phi_vals = np.concatenate([einsum("kab,bc->kac", phi.values, u.u[t]) for t in range(grp.order)])
    phi_t = AlphaCPMap(alg, alpha_t, phi.space, phi_vals)
    Phi_vals = np.concatenate([einsum("kab,bc->kac", Phi.values, u.u[t]) for t in range(grp.order)])
    Phi_t = PhiMap(mod, phi_t, Phi.h2, Phi_vals)
    pi_hat_phi = np.concatenate([einsum("kab,bc->kac", base.pi_phi, c.v.u[t]) for t in range(grp.order)])
    pi_hat_X = np.concatenate([einsum("kab,bc->kac", base.pi_X, c.v.u[t]) for t in range(grp.order)])
    dil = KsgnsDilation(None, base.K1, base.K2, pi_hat_phi, pi_hat_X,
                        base.V, base.W, base.minimal)

    rep = Report()
    rep.extend(verify_alpha_cp(phi_t, tol=tol, n_random=2), prefix="phi_tilde_")
    rep.extend(verify_phi_map(Phi_t, tol), prefix="Phi_tilde_")
    rep.extend(verify_ksgns(dil, Phi_t, tol), prefix="induced_")
    # the sums against the defining formulas
    res = max(opnorm(phi_t.values[p] - phi_tilde_naive(phi, u, alg.basis_vector(p))) for p in range(alg.dim))
    rep.add(Check("phi_tilde_formula", "phi~(f) = sum_t phi(f(t)) u_t", res, tol.threshold(1.0),
                  error=IdentityResidualTooLarge))
    res = max(opnorm(Phi_t.values[p] - Phi_tilde_naive(Phi, u, mod.basis_vector(p))) for p in range(mod.dim))
    rep.add(Check("Phi_tilde_formula", "Phi~(x) = sum_t Phi(x(t)) u_t", res, tol.threshold(1.0),
                  error=IdentityResidualTooLarge))
    for chk in rep.failures:
        raise IdentityResidualTooLarge(f"{chk.name} fails (residual {chk.residual:.3e}, witness {chk.witness})",
                                       residual=chk.residual, witness=chk.witness)
    return InducedMaps(alg, mod, phi_t, Phi_t, pi_hat_phi, pi_hat_X, dil, rep)


def phi_tilde_covariance_residual(maps: InducedMaps, phi: AlphaCPMap, u: PseudoUnitaryRep) -> float:
    """``u_{t0} phi~(f) u_{t0}^# = phi~(f')`` with ``f'(s) = beta_{t0}(f(t0^-1 s t0))``, on basis f."""
    alg = maps.algebra
    g = alg.group
    j = phi.space.J
    worst = 0.0
    for t0 in range(g.order):
        ut = u.u[t0]
        ut_sharp = j @ ut.conj().T @ j
        t0i = g.inverse[t0]
        for p in range(alg.dim):
            f = alg.split(alg.basis_vector(p))
            fp = np.stack([alg.beta[t0] @ f[g.table[g.table[t0i][s]][t0]] for s in range(g.order)])
            lhs = ut @ phi_tilde_naive(phi, u, f.reshape(-1)) @ ut_sharp
            rhs = phi_tilde_naive(phi, u, fp.reshape(-1))
            worst = max(worst, opnorm(lhs - rhs))
    return worst


def phi_map_identity_table(maps: InducedMaps) -> np.ndarray:
    """Residual of ``Phi~(z1)^# Phi~(z2) = phi~(<z1, z2>)`` for every crossed-basis pair."""
    Phi_t, phi_t = maps.Phi_tilde, maps.phi_tilde
    j1 = phi_t.space.J
    vals = Phi_t.values
    lhs = einsum("ab,pcb,qcd->pqad", j1, np.conj(vals), vals)
    rhs = einsum("pqk,kad->pqad", maps.module.inner_table, phi_t.values)
    return opnorms(lhs - rhs)


def phi_map_identity_naive(Phi: PhiMap, u: PseudoUnitaryRep,
                           module: CrossedModule) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the crossed phi-map identity by nested loops (independent of the tables)."""
    phi = Phi.phi
    j1 = phi.space.J
    n = module.dim
    lhs = np.zeros((n, n, phi.d, phi.d), complex)
    rhs = np.zeros_like(lhs)
    for p in range(n):
        zp = module.basis_vector(p)
        a = Phi_tilde_naive(Phi, u, zp)
        a_sharp = j1 @ a.conj().T
        for q in range(n):
            zq = module.basis_vector(q)
            lhs[p, q] = a_sharp @ Phi_tilde_naive(Phi, u, zq)
            rhs[p, q] = phi_tilde_naive(phi, u, crossed_inner_product(zp, zq, module))
    return lhs, rhs

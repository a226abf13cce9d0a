"""Finite groups, pseudo-unitary representations and covariant dilations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    NotCovariant,
    NotGroup,
    NotInvariant,
    NotRepresentation,
    NotSimultaneous,
    RepIntertwiningFailed,
)
from .hmodule import ModuleAction
from .krein import KreinSpace, pseudo_unitary_report, sharp_matrix
from .ksgns import Equivalence, KsgnsDilation, construct_ksgns, conjugate_dilation, unitary_equivalence
from .maps import PhiMap
from .numkit import DEFAULT_TOL, TolerancePolicy, dagger, opnorm, pushforward, einsum
from .report import Check, Report


class FiniteGroup:
    """A finite group given by its multiplication table ``table[s][t] = st``."""

    def __init__(self, table, labels=None):
        tab = np.asarray(table, dtype=int)
        n = tab.shape[0] if tab.ndim == 2 else 0
        if n == 0 or tab.shape != (n, n):
            raise NotGroup("multiplication table must be a non-empty square array")
        if tab.min() < 0 or tab.max() >= n:
            raise NotGroup("table entries must be element indices")
        ids = [e for e in range(n) if all(tab[e, t] == t and tab[t, e] == t for t in range(n))]
        if not ids:
            raise NotGroup("no identity element")
        e = ids[0]
        inv = []
        for t in range(n):
            cands = [s for s in range(n) if tab[t, s] == e and tab[s, t] == e]
            if not cands:
                raise NotGroup(f"element {t} has no inverse", witness=t)
            inv.append(cands[0])
        for r, s, t in itertools.product(range(n), repeat=3):
            if tab[tab[r, s], t] != tab[r, tab[s, t]]:
                raise NotGroup(f"table is not associative at {(r, s, t)}", witness=[r, s, t])
        self.order = n
        self.table = tuple(tuple(int(x) for x in row) for row in tab)
        self.identity = e
        self.inverse = tuple(inv)
        self.labels = tuple(labels) if labels is not None else tuple(range(n))

    def __repr__(self):
        return f"FiniteGroup(order={self.order})"

    def mul(self, s: int, t: int) -> int:
        return self.table[s][t]

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls([[0]])

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        return cls([[(s + t) % n for t in range(n)] for s in range(n)])

    @classmethod
    def from_permutations(cls, perms) -> "FiniteGroup":
        """Group of permutations (tuples of images) under composition ``(st)(x) = s(t(x))``."""
        perms = [tuple(p) for p in perms]
        index = {p: k for k, p in enumerate(perms)}
        table = []
        for s in perms:
            row = []
            for t in perms:
                st = tuple(s[t[x]] for x in range(len(t)))
                if st not in index:
                    raise NotGroup("permutations are not closed under composition")
                row.append(index[st])
            table.append(row)
        return cls(table, labels=perms)

    @classmethod
    def symmetric(cls, n: int) -> "FiniteGroup":
        return cls.from_permutations(itertools.permutations(range(n)))

    @classmethod
    def dihedral(cls, n: int) -> "FiniteGroup":
        rots = [tuple((i + k) % n for i in range(n)) for k in range(n)]
        refl = [tuple((k - i) % n for i in range(n)) for k in range(n)]
        return cls.from_permutations(rots + refl)


def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class PseudoUnitaryRep:
    group: FiniteGroup
    space: KreinSpace
    u: tuple
    simultaneous: bool
    report: Report | None = None


def rep_report(u, group: FiniteGroup, space: KreinSpace, tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    """Representation and pseudo-unitarity checks; simultaneity is reported separately."""
    u = [np.asarray(x, complex) for x in u]
    j = space.J
    n = group.order
    eye = np.eye(space.dim)
    scale = max([1.0] + [opnorm(x) for x in u]) ** 2
    thr = tol.threshold(scale)
    rep = Report()
    rep.add(Check("rep_identity", "u_e = I", opnorm(u[group.identity] - eye), thr, error=NotRepresentation,
                  witness=group.identity))
    worst, wit = 0.0, None
    for s in range(n):
        for t in range(n):
            r = opnorm(u[group.table[s][t]] - u[s] @ u[t])
            if r > worst:
                worst, wit = r, [s, t]
    rep.add(Check("rep_homomorphism", "u_st = u_s u_t", worst, thr, error=NotRepresentation, witness=wit))
    worst, wit = 0.0, None
    for t in range(n):
        r = opnorm(u[group.inverse[t]] - sharp_matrix(u[t], j, j))
        if r > worst:
            worst, wit = r, t
    rep.add(Check("rep_inverse_is_sharp", "u_{t^-1} = u_t^#", worst, thr, error=NotRepresentation, witness=wit))
    pu = [pseudo_unitary_report(x, j, tol, require_simultaneous=True) for x in u]
    for name, err in (("pseudo_unitary", NotRepresentation), ("unitary", NotSimultaneous),
                      ("commutes_J", NotSimultaneous)):
        vals = [p[name].residual for p in pu]
        t = int(np.argmax(vals))
        rep.add(Check(f"rep_{name}", pu[0][name].anchor, vals[t], thr, error=err, witness=t))
    return rep


def verify_rep(u, group: FiniteGroup, space: KreinSpace, require_simultaneous: bool = False,
               tol: TolerancePolicy = DEFAULT_TOL) -> PseudoUnitaryRep:
    u = tuple(np.asarray(x, complex) for x in u)
    if len(u) != group.order:
        raise NotRepresentation(f"need one operator per group element ({group.order}), got {len(u)}")
    for x in u:
        if x.shape != (space.dim, space.dim):
            raise NotRepresentation(f"operator of shape {x.shape} on a space of dim {space.dim}")
    rep = rep_report(u, group, space, tol)
    simultaneous = rep["rep_unitary"].passed and rep["rep_commutes_J"].passed
    for c in rep.failures:
        if c.error is NotSimultaneous and not require_simultaneous:
            continue
        raise c.error(f"{c.name} fails (residual {c.residual:.3e}, witness {c.witness})",
                      residual=c.residual, witness=c.witness)
    return PseudoUnitaryRep(group, space, u, simultaneous, rep)


def trivial_rep(group: FiniteGroup, space: KreinSpace) -> PseudoUnitaryRep:
    return verify_rep([np.eye(space.dim)] * group.order, group, space)


# covariance -------------------------------------------------------------------

def _worst(pairs):
    worst, wit = 0.0, None
    for key, val in pairs:
        if val > worst:
            worst, wit = val, key
    return worst, wit


def covariance_report(Phi: PhiMap, act: ModuleAction, u: PseudoUnitaryRep, u_prime: PseudoUnitaryRep,
                      tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    phi = Phi.phi
    alg = phi.algebra
    j1 = phi.space.J
    g = act.group
    alpha = phi.alpha.matrix
    rep = Report()
    res, wit = _worst(
        ([t, i], float(np.linalg.norm((act.beta[t] @ alpha - alpha @ act.beta[t])[:, i])))
        for t in range(g.order) for i in range(alg.dim)
    )
    rep.add(Check("alpha_beta_commute", "beta_t alpha = alpha beta_t", res,
                  tol.threshold(max(1.0, max(opnorm(b) for b in act.beta))), error=NotCovariant, witness=wit))
    nPhi = max([1.0] + [opnorm(v) for v in Phi.values])
    nu = max([1.0] + [opnorm(x) for x in u.u] + [opnorm(x) for x in u_prime.u])
    res, wit = _worst(
        ([t, m], opnorm(einsum("k,kab->ab", act.eta[t][:, m], Phi.values)
                        - u_prime.u[t] @ Phi.values[m] @ sharp_matrix(u.u[t], j1, j1)))
        for t in range(g.order) for m in range(Phi.module.dim)
    )
    rep.add(Check("Phi_covariant", "Phi(eta_t x) = u'_t Phi(x) u_t^#", res, tol.threshold(nPhi * nu**2),
                  error=NotCovariant, witness=wit))
    nphi = max([1.0] + [opnorm(v) for v in phi.values])
    res, wit = _worst(
        ([t, i], opnorm(einsum("k,kab->ab", act.beta[t][:, i], phi.values)
                        - u.u[t] @ phi.values[i] @ sharp_matrix(u.u[t], j1, j1)))
        for t in range(g.order) for i in range(alg.dim)
    )
    rep.add(Check("phi_covariant", "phi(beta_t a) = u_t phi(a) u_t^#", res, tol.threshold(nphi * nu**2),
                  error=NotCovariant, witness=wit))
    return rep


def verify_covariance(Phi: PhiMap, act: ModuleAction, u: PseudoUnitaryRep, u_prime: PseudoUnitaryRep,
                      tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    """Raise NotCovariant (with witness ``[t, basis index]``) unless all identities hold."""
    return covariance_report(Phi, act, u, u_prime, tol).require()


def induce_v(dil: KsgnsDilation, act: ModuleAction, u: PseudoUnitaryRep,
             tol: TolerancePolicy = DEFAULT_TOL) -> PseudoUnitaryRep:
    """``v_t`` = class of ``beta_t (x) u_t`` on the Gram quotient."""
    if dil.quotient is None:
        raise ValueError("induce_v needs a dilation built by construct_ksgns")
    vs = [pushforward(np.kron(b, x), dil.quotient, tol) for b, x in zip(act.beta, u.u)]
    return verify_rep(vs, act.group, dil.K1, require_simultaneous=True, tol=tol)


@dataclass(frozen=True, eq=False)
class CovariantDilation:
    base: KsgnsDilation
    v: PseudoUnitaryRep
    v_prime: PseudoUnitaryRep
    report: Report


def invariance_residual(W: np.ndarray, op: np.ndarray) -> float:
    """``|(I - W* W) op W*|``: zero iff op maps the range of W* into itself."""
    proj = dagger(W) @ W
    return opnorm((np.eye(proj.shape[0]) - proj) @ op @ dagger(W))


def covariant_report(c_base: KsgnsDilation, v: PseudoUnitaryRep, v_prime: PseudoUnitaryRep, Phi: PhiMap,
                     act: ModuleAction, u: PseudoUnitaryRep, u_prime: PseudoUnitaryRep,
                     tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    d = c_base
    j3 = d.K1.J
    g = act.group
    n = g.order
    scale = max([1.0, opnorm(d.V), opnorm(d.W)] + [opnorm(p) for p in d.pi_phi] + [opnorm(p) for p in d.pi_X]
                + [opnorm(x) for x in v.u])
    thr = tol.threshold(scale**3)
    rep = covariance_report(Phi, act, u, u_prime, tol)
    vsh = [sharp_matrix(x, j3, j3) for x in v.u]

    def add(name, anchor, items, err=NotCovariant):
        res, wit = _worst(items)
        rep.add(Check(name, anchor, res, thr, error=err, witness=wit))

    add("v_sharp_is_adjoint", "v_t^# = v_t*", ((t, opnorm(vsh[t] - dagger(v.u[t]))) for t in range(n)))
    j4 = d.K2.J
    add("vprime_sharp_is_adjoint", "v'_t^# = v'_t*",
        ((t, opnorm(sharp_matrix(v_prime.u[t], j4, j4) - dagger(v_prime.u[t]))) for t in range(n)))
    add("V_intertwines", "V u_t = v_t V", ((t, opnorm(d.V @ u.u[t] - v.u[t] @ d.V)) for t in range(n)))
    add("W_intertwines", "W u'_t = v'_t W",
        ((t, opnorm(d.W @ u_prime.u[t] - v_prime.u[t] @ d.W)) for t in range(n)))
    add("K2_invariant", "u'_t K2 in K2",
        ((t, max(invariance_residual(d.W, u_prime.u[t]), invariance_residual(d.W, dagger(u_prime.u[t]))))
         for t in range(n)), NotInvariant)
    add("pi_X_covariant", "pi_X(eta_t x) = v'_t pi_X(x) v_t^#",
        (([t, m], opnorm(einsum("k,kab->ab", act.eta[t][:, m], d.pi_X)
                          - v_prime.u[t] @ d.pi_X[m] @ vsh[t]))
         for t in range(n) for m in range(Phi.module.dim)))
    add("pi_phi_covariant", "pi_phi(beta_t a) = v_t pi_phi(a) v_t^#",
        (([t, i], opnorm(einsum("k,kab->ab", act.beta[t][:, i], d.pi_phi) - v.u[t] @ d.pi_phi[i] @ vsh[t]))
         for t in range(n) for i in range(Phi.phi.algebra.dim)))
    for name, r in (("v", v), ("v_prime", v_prime)):
        rr = r.report
        rep.add(Check(f"{name}_simultaneous", "unitary and commuting with J",
                      max(rr["rep_unitary"].residual, rr["rep_commutes_J"].residual), thr, error=NotSimultaneous))
    return rep


def covariant_construct(Phi: PhiMap, act: ModuleAction, u: PseudoUnitaryRep, u_prime: PseudoUnitaryRep,
                        tol: TolerancePolicy = DEFAULT_TOL) -> CovariantDilation:
    pre = covariance_report(Phi, act, u, u_prime, tol)
    chk = pre["alpha_beta_commute"]
    if not chk.passed:
        raise NotCovariant(f"beta_t and alpha do not commute (residual {chk.residual:.3e}, "
                           f"[t, basis] = {chk.witness})", residual=chk.residual, witness=chk.witness)
    base = construct_ksgns(Phi, tol)
    for t in range(act.group.order):
        res = max(invariance_residual(base.W, u_prime.u[t]), invariance_residual(base.W, dagger(u_prime.u[t])))
        if res > tol.threshold(max(1.0, opnorm(u_prime.u[t]))):
            raise NotInvariant(f"u'_{t} does not leave K2 = [Phi(X) H1] invariant (residual {res:.3e})",
                               residual=res, witness=t)
    v = induce_v(base, act, u, tol)
    vp = [base.W @ x @ dagger(base.W) for x in u_prime.u]
    v_prime = verify_rep(vp, act.group, base.K2, require_simultaneous=True, tol=tol)
    rep = covariant_report(base, v, v_prime, Phi, act, u, u_prime, tol)
    rep.require()
    return CovariantDilation(base, v, v_prime, rep)


def conjugate_covariant(c: CovariantDilation, U1: np.ndarray, U2: np.ndarray) -> CovariantDilation:
    base = conjugate_dilation(c.base, U1, U2)
    g = c.v.group
    v = PseudoUnitaryRep(g, base.K1, tuple(U1 @ x @ dagger(U1) for x in c.v.u), c.v.simultaneous)
    vp = PseudoUnitaryRep(g, base.K2, tuple(U2 @ x @ dagger(U2) for x in c.v_prime.u), c.v_prime.simultaneous)
    return CovariantDilation(base, v, vp, c.report)


def covariant_equivalence(c1: CovariantDilation, c2: CovariantDilation, Phi: PhiMap | None = None,
                          tol: TolerancePolicy = DEFAULT_TOL) -> Equivalence:
    eq = unitary_equivalence(c1.base, c2.base, Phi, tol)
    U1, U2 = eq.U1, eq.U2
    u1_sharp = sharp_matrix(U1, c1.base.K1.J, c2.base.K1.J)
    n = c1.v.group.order
    scale = max([1.0] + [opnorm(x) for x in c1.v.u])
    rep = eq.report
    res, wit = _worst((t, opnorm(U1 @ c1.v.u[t] @ u1_sharp - c2.v.u[t])) for t in range(n))
    rep.add(Check("U1_v", "U1 v_t U1^# = w_t", res, tol.threshold(scale), error=RepIntertwiningFailed,
                  witness=wit))
    res, wit = _worst((t, opnorm(U2 @ c1.v_prime.u[t] @ dagger(U2) - c2.v_prime.u[t])) for t in range(n))
    rep.add(Check("U2_vprime", "U2 v'_t U2^# = w'_t", res, tol.threshold(scale),
                  error=RepIntertwiningFailed, witness=wit))
    rep.require()
    return eq

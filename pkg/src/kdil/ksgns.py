"""The KSGNS dilation of a phi-map, its verification, and uniqueness unitaries.

``K1`` is realized as the Gram quotient of ``A (x) H1`` and ``K2`` as the
column span of ``{Phi(x) xi}`` inside ``H2``.  All operators are stored as
plain matrices in the orthonormal coordinates of those spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotQuotientCompatible, ResidualTooLarge
from .krein import KreinSpace, sharp_matrix, verify_fundamental_symmetry, verify_krein_representation
from .maps import PhiMap, alpha_gram
from .numkit import (
    DEFAULT_TOL,
    GramQuotient,
    TolerancePolicy,
    dagger,
    einsum,
    gram_quotient,
    opnorm,
    opnorms,
    polar_unitary,
    pushforward,
    pushforward_residual,
    span_basis,
    span_rank,
)
from .report import Check, Report


@dataclass(frozen=True, eq=False)
class KsgnsDilation:
    quotient: GramQuotient | None
    K1: KreinSpace
    K2: KreinSpace
    pi_phi: np.ndarray  # (N, r, r)
    pi_X: np.ndarray    # (dim X, s, r)
    V: np.ndarray       # (r, d1)
    W: np.ndarray       # (s, d2)
    minimal: bool = True

    def pi_phi_of(self, a) -> np.ndarray:
        return einsum("k,kpq->pq", np.asarray(a, complex), self.pi_phi)

    def pi_X_of(self, x) -> np.ndarray:
        return einsum("k,kpq->pq", np.asarray(x, complex), self.pi_X)


def _orbit(ops: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Columns ``ops[k] @ v`` side by side."""
    if len(ops) == 0:
        return np.zeros((ops.shape[1] if ops.ndim == 3 else 0, 0), complex)
    return np.concatenate([o @ v for o in ops], axis=1)


def construct_ksgns(Phi: PhiMap, tol: TolerancePolicy = DEFAULT_TOL) -> KsgnsDilation:
    phi = Phi.phi
    alg, mod = phi.algebra, Phi.module
    d1 = phi.d
    j1 = phi.space.J
    g = alpha_gram(phi, tol)
    quot = gram_quotient(g, tol)
    eye_d = np.eye(d1)

    pi_phi = np.stack([pushforward(np.kron(lm, eye_d), quot, tol) for lm in alg.left_mult_table])
    j3 = pushforward(np.kron(phi.alpha.matrix, j1), quot, tol)
    j3 = 0.5 * (j3 + dagger(j3))
    K1 = verify_fundamental_symmetry(j3, tol)
    V = quot.q @ np.kron(alg.unit[:, None], j1)

    cols = _orbit(Phi.values, eye_d)
    basis = span_basis(cols, tol)
    W = dagger(basis)
    s = W.shape[0]
    K2 = KreinSpace.hilbert(s)
    # pi_X(b_m) sends the class of e_i (x) e_q to W Phi(b_m e_i) J1 e_q
    phi_prod = einsum("mil,lab->miab", mod.right_table, Phi.values)  # Phi(b_m e_i)
    t = einsum("sa,miab,bq->msiq", W, phi_prod, j1).reshape(mod.dim, s, alg.dim * d1)
    pi_X = np.empty((mod.dim, s, quot.rank), complex)
    for m in range(mod.dim):
        res = opnorm(t[m] @ quot.kernel_projector)
        if res > tol.threshold(opnorm(t[m])):
            raise NotQuotientCompatible(f"Phi does not vanish on the null space (basis {m})", residual=res)
        pi_X[m] = t[m] @ quot.q_plus

    minimal = (span_rank(_orbit(pi_phi, V), tol) == quot.rank
               and span_rank(_orbit(pi_X, V), tol) == s)
    return KsgnsDilation(quot, K1, K2, pi_phi, pi_X, V, W, minimal)


def verify_ksgns(dil: KsgnsDilation, Phi: PhiMap, tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    """Residual table for every identity a KSGNS dilation must satisfy (never raises)."""
    phi = Phi.phi
    alg, mod = phi.algebra, Phi.module
    j1, j3 = phi.space.J, dil.K1.J
    V, W = dil.V, dil.W
    r, s = dil.K1.dim, dil.K2.dim
    pi, pix = dil.pi_phi, dil.pi_X
    v_sharp = sharp_matrix(V, j1, j3)
    w_sharp = dagger(W)  # J2 and J4 are identities
    nv = max(1.0, opnorm(V))
    npi = max([1.0] + [opnorm(p) for p in pi])
    npx = max([1.0] + [opnorm(p) for p in pix])
    rep = Report()

    def add(name, anchor, res, scale, **kw):
        rep.add(Check(name, anchor, float(res), tol.threshold(scale), **kw))

    add("J3_selfadjoint", "J3 = J3*", opnorm(j3 - dagger(j3)), 1.0)
    add("J3_involution", "J3^2 = I", opnorm(j3 @ j3 - np.eye(r)), 1.0)
    add("V_sharp_is_adjoint", "V^# = V*  (J3 V J1 = V)", opnorm(j3 @ V @ j1 - V), nv)
    alpha_img = einsum("ki,kpq->ipq", phi.alpha.matrix, pi)
    add("alpha_twist", "pi(alpha(a)) V = J3 pi(a) V J1",
        max((opnorm(alpha_img[i] @ V - j3 @ pi[i] @ V @ j1) for i in range(alg.dim)), default=0.0),
        npi * nv)
    add("W_coisometry", "W W* = I", opnorm(W @ dagger(W) - np.eye(s)), max(1.0, opnorm(W)) ** 2)
    add("W_sharp_is_adjoint", "W^# = W*", opnorm(w_sharp - dagger(W)), 1.0)

    krep = verify_krein_representation(pi, alg, dil.K1, tol, raise_on_fail=False)
    rep.extend(krep, prefix="pi_phi_")

    res = max((opnorm(phi.values[i] - v_sharp @ pi[i] @ V) for i in range(alg.dim)), default=0.0)
    nphi = max([0.0] + [opnorm(v) for v in phi.values])
    add("reconstruct_phi", "phi(a) = V^# pi(a) V", res, max(npi * nv**2, nphi))
    res = max((opnorm(Phi.values[m] - w_sharp @ pix[m] @ V) for m in range(mod.dim)), default=0.0)
    nPhi = max([0.0] + [opnorm(v) for v in Phi.values])
    add("reconstruct_Phi", "Phi(x) = W^# pi_X(x) V", res, max(npx * nv, nPhi))

    lhs = einsum("ab,pcb,qcd->pqad", j3, np.conj(pix), pix)
    rhs = einsum("pqk,kad->pqad", mod.inner_table, pi)
    res = float(np.max(opnorms(lhs - rhs), initial=0.0))
    add("pi_X_inner", "pi_X(x)^# pi_X(y) = pi_phi(<x, y>)", res, npx**2 + npi)
    lhs = einsum("mil,lab->miab", mod.right_table, pix)
    rhs = einsum("mab,ibc->miac", pix, pi)
    res = float(np.max(opnorms(lhs - rhs), initial=0.0))
    add("pi_X_module_map", "pi_X(x a) = pi_X(x) pi_phi(a)", res, npx * npi)
    phi_prod = einsum("mil,lab->miab", mod.right_table, Phi.values)
    lhs = einsum("mab,ibc,cd->miad", pix, pi, V)
    rhs = einsum("sa,miab->misb", W, phi_prod)
    res = float(np.max(opnorms(lhs - rhs), initial=0.0))
    add("pi_X_on_orbit", "pi_X(x) pi_phi(a) V xi = Phi(x a) xi", res, npx * npi * nv)

    if dil.quotient is not None:
        q = dil.quotient.q
        lhs = dagger(V) @ q
        rhs = einsum("ab,ibq->aiq", j1, phi.values).reshape(phi.d, -1)
        add("V_adjoint_on_classes", "V*(a (x) xi) = J1 phi(a) xi", opnorm(lhs - rhs), nv * opnorm(q))
        add("pushforward_well_defined", "left multiplication preserves the null space",
            max((pushforward_residual(np.kron(lm, np.eye(phi.d)), dil.quotient)
                 for lm in alg.left_mult_table), default=0.0), opnorm(q))

    k1_span = span_rank(_orbit(pi, V), tol)
    k1_star = span_rank(_orbit(dagger(pi), V), tol)
    k2_span = span_rank(_orbit(pix, V), tol)
    rep.add(Check("minimal_K1", "K1 = [pi(A) V H1]", float(r - k1_span), 0.0))
    rep.add(Check("minimal_K1_adjoint", "K1 = [pi(A)* V H1]", float(r - k1_star), 0.0))
    rep.add(Check("minimal_K2", "K2 = [pi_X(X) V H1]", float(s - k2_span), 0.0))

    phi_one = einsum("k,kpq->pq", alg.unit, phi.values)
    if opnorm(phi_one - np.eye(phi.d)) <= tol.threshold(1.0):
        add("V_isometry", "phi(1) = I implies V* V = I", opnorm(dagger(V) @ V - np.eye(phi.d)), nv**2)
    rep.info["dim_K1"] = r
    rep.info["dim_K2"] = s
    return rep


# uniqueness -------------------------------------------------------------------

@dataclass(frozen=True)
class Equivalence:
    U1: np.ndarray
    U2: np.ndarray
    report: Report


def _solve_unitary(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Unitary U with ``U src ~ dst``: least squares, then polar polish."""
    if src.shape[0] == 0:
        return np.zeros((dst.shape[0], 0), complex)
    return polar_unitary(dst @ np.linalg.pinv(src))


def equivalence_report(d1: KsgnsDilation, d2: KsgnsDilation, U1: np.ndarray, U2: np.ndarray,
                       tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    u1_sharp = sharp_matrix(U1, d1.K1.J, d2.K1.J)
    rep = Report()
    scale = max([1.0, opnorm(d1.V), opnorm(d1.W)] + [opnorm(p) for p in d1.pi_phi]
                + [opnorm(p) for p in d1.pi_X])
    thr = tol.threshold(scale)
    rep.add(Check("U1_V", "U1 V = V'", opnorm(U1 @ d1.V - d2.V), thr, error=ResidualTooLarge))
    rep.add(Check("U1_pi", "U1 pi(a) U1^# = pi'(a)",
                  max((opnorm(U1 @ a @ u1_sharp - b) for a, b in zip(d1.pi_phi, d2.pi_phi)), default=0.0),
                  thr, error=ResidualTooLarge))
    rep.add(Check("U2_W", "U2 W = W'", opnorm(U2 @ d1.W - d2.W), thr, error=ResidualTooLarge))
    rep.add(Check("U2_pi_X", "U2 pi_X(x) U1^# = pi_X'(x)",
                  max((opnorm(U2 @ a @ u1_sharp - b) for a, b in zip(d1.pi_X, d2.pi_X)), default=0.0),
                  thr, error=ResidualTooLarge))
    uthr = tol.abs_tol + 10 * tol.rel_tol
    rep.add(Check("U1_unitary", "U1* U1 = I", opnorm(dagger(U1) @ U1 - np.eye(U1.shape[1])), uthr,
                  error=ResidualTooLarge))
    rep.add(Check("U2_unitary", "U2* U2 = I", opnorm(dagger(U2) @ U2 - np.eye(U2.shape[1])), uthr,
                  error=ResidualTooLarge))
    return rep


def unitary_equivalence(d1: KsgnsDilation, d2: KsgnsDilation, Phi: PhiMap | None = None,
                        tol: TolerancePolicy = DEFAULT_TOL) -> Equivalence:
    """Unitaries identifying two minimal dilations of the same phi-map."""
    if d1.K1.dim != d2.K1.dim:
        raise DimensionMismatch(f"dim K1 differs: {d1.K1.dim} vs {d2.K1.dim}")
    if d1.K2.dim != d2.K2.dim:
        raise DimensionMismatch(f"dim K2 differs: {d1.K2.dim} vs {d2.K2.dim}")
    U1 = _solve_unitary(_orbit(d1.pi_phi, d1.V), _orbit(d2.pi_phi, d2.V))
    U2 = _solve_unitary(_orbit(d1.pi_X, d1.V), _orbit(d2.pi_X, d2.V))
    rep = equivalence_report(d1, d2, U1, U2, tol)
    rep.require()
    return Equivalence(U1, U2, rep)


def conjugate_dilation(dil: KsgnsDilation, U1: np.ndarray, U2: np.ndarray) -> KsgnsDilation:
    """The dilation transported along unitaries ``U1`` on K1 and ``U2`` on K2."""
    u1s = dagger(U1)
    K1 = KreinSpace(dil.K1.dim, U1 @ dil.K1.J @ u1s)
    return KsgnsDilation(
        quotient=None,
        K1=K1,
        K2=dil.K2,
        pi_phi=einsum("ab,kbc,cd->kad", U1, dil.pi_phi, u1s),
        pi_X=einsum("ab,kbc,cd->kad", U2, dil.pi_X, u1s),
        V=U1 @ dil.V,
        W=U2 @ dil.W,
        minimal=dil.minimal,
    )


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r)
    return q * (ph / np.where(np.abs(ph) > 0, np.abs(ph), 1.0))

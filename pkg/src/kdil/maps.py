"""alpha-CP maps ``phi: A -> L(H1)`` and phi-maps ``Phi: X -> L(H1, H2)``.

Both maps are linear and stored as tables of their values on a basis
(algebra basis for phi, module basis for Phi).  Coordinates on ``A (x) H1``
are basis-major: index ``i*d + p`` is ``e_i (x) xi_p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import CoordinateAlgebra, StarInvolutiveAutomorphism
from .errors import (
    ConditionOneViolated,
    ConditionTwoViolated,
    HypothesisViolated,
    InternalInconsistency,
    MalformedMatrix,
    NoInstanceFound,
    NotPhiMap,
    Undominated,
)
from .hmodule import CoordinateModule
from .krein import KreinSpace, sharp_matrix, verify_krein_representation
from .numkit import (
    DEFAULT_TOL,
    TolerancePolicy,
    dagger,
    einsum,
    domination_bound,
    eigh_desc,
    gram_quotient,
    hermitian_residual,
    opnorm,
    opnorms,
    psd_check,
)
from .report import WARNING, Check, Report


@dataclass(frozen=True, eq=False)
class AlphaCPMap:
    algebra: CoordinateAlgebra
    alpha: StarInvolutiveAutomorphism
    space: KreinSpace
    values: np.ndarray  # (N, d, d)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n, d = self.algebra.dim, self.space.dim
        if self.values.shape != (n, d, d):
            raise MalformedMatrix(f"phi table has shape {self.values.shape}, expected {(n, d, d)}")

    @property
    def d(self) -> int:
        return self.space.dim

    def __call__(self, a) -> np.ndarray:
        return apply(self, a)


@dataclass(frozen=True, eq=False)
class PhiMap:
    module: CoordinateModule
    phi: AlphaCPMap
    h2: KreinSpace
    values: np.ndarray  # (dim X, d2, d1)

    def __post_init__(self):
        shape = (self.module.dim, self.h2.dim, self.phi.d)
        if self.values.shape != shape:
            raise MalformedMatrix(f"Phi table has shape {self.values.shape}, expected {shape}")

    def __call__(self, x) -> np.ndarray:
        c = getattr(x, "coords", x)
        return einsum("k,kpq->pq", np.asarray(c, complex), self.values)


def make_alpha_cp(algebra, alpha, space, values, **meta) -> AlphaCPMap:
    return AlphaCPMap(algebra, alpha, space, np.asarray(values, dtype=complex), dict(meta))


def make_phi_map(module, phi: AlphaCPMap, values, h2: KreinSpace | None = None) -> PhiMap:
    values = np.asarray(values, dtype=complex)
    if h2 is None:
        h2 = KreinSpace.hilbert(values.shape[1])
    return PhiMap(module, phi, h2, values)


def apply(phi: AlphaCPMap, a) -> np.ndarray:
    c = getattr(a, "coords", a)
    return einsum("k,kpq->pq", np.asarray(c, complex), phi.values)


# twisted Gram matrices --------------------------------------------------------

def gram_of_family(values: np.ndarray, algebra: CoordinateAlgebra, alpha: np.ndarray,
                   family: np.ndarray | None = None) -> np.ndarray:
    """Block matrix ``[phi(alpha(b_i)^* b_j)]`` for the columns b_i of ``family``."""
    if family is None:
        family = np.eye(algebra.dim)
    left = algebra.star_matrix @ np.conj(alpha @ family)  # coords of alpha(b_i)^*
    prod = einsum("li,mj,lmk->ijk", left, family, algebra.struct)
    blocks = einsum("ijk,kpq->ipjq", prod, values)
    m, d = family.shape[1], values.shape[1]
    return blocks.reshape(m * d, m * d)


def alpha_gram(phi: AlphaCPMap, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """``G[(i,p),(j,q)] = phi(alpha(e_i)^* e_j)[p, q]``."""
    g = gram_of_family(phi.values, phi.algebra, phi.alpha.matrix)
    res = hermitian_residual(g)
    if res > tol.threshold(opnorm(g)):
        raise ConditionOneViolated(f"alpha-Gram is not Hermitian (residual {res:.3e})", residual=res)
    return g


def shifted_gram(phi: AlphaCPMap, a, gram: np.ndarray | None = None) -> np.ndarray:
    """``L(a) = [phi(alpha(a e_i)^* a e_j)]``, i.e. ``(L_a (x) I)^* G (L_a (x) I)``."""
    if gram is None:
        gram = gram_of_family(phi.values, phi.algebra, phi.alpha.matrix)
    lk = np.kron(phi.algebra.left_mult(np.asarray(a, complex)), np.eye(phi.d))
    return dagger(lk) @ gram @ lk


def condition_one_residuals(values, algebra, alpha: np.ndarray, j: np.ndarray) -> dict[str, tuple]:
    """Worst residual and basis witness for each part of condition (i)."""
    star_img = einsum("ki,kpq->ipq", algebra.star_matrix, values)
    alpha_img = einsum("ki,kpq->ipq", alpha, values)
    out = {}
    defects = {
        "hermitian": star_img - dagger(values),
        "alpha_invariant": alpha_img - values,
        "J_invariant": j @ values @ j - values,
    }
    for name, dfc in defects.items():
        norms = [opnorm(x) for x in dfc]
        k = int(np.argmax(norms)) if norms else 0
        out[name] = (float(norms[k]) if norms else 0.0, k)
    return out


def _sample_elements(phi: AlphaCPMap, samples, n_random: int, seed: int) -> list[np.ndarray]:
    alg = phi.algebra
    pts = [alg.basis_vector(i) for i in range(alg.dim)]
    for s in samples or ():
        pts.append(np.asarray(getattr(s, "coords", s), dtype=complex))
    rng = np.random.default_rng(seed)
    pts.extend(alg.random_coords(rng) for _ in range(n_random))
    return pts


def verify_alpha_cp(phi: AlphaCPMap, samples=(), tol: TolerancePolicy = DEFAULT_TOL, *,
                    n_random: int = 4, seed: int = 0) -> Report:
    """Conditions (i) and (ii) as hard checks, the domination bounds (iii) as warnings.

    ``report.info`` carries the minimal Gram eigenvalue and, per sampled
    element, the smallest admissible M(a) with K(a) = M(a)/|a|.
    """
    alg = phi.algebra
    scale = max([1.0] + [opnorm(v) for v in phi.values])
    thr = tol.threshold(scale)
    rep = Report()
    c1 = condition_one_residuals(phi.values, alg, phi.alpha.matrix, phi.space.J)
    anchors = {
        "hermitian": "phi(a*) = phi(a)*",
        "alpha_invariant": "phi(alpha(a)) = phi(a)",
        "J_invariant": "J1 phi(a) J1 = phi(a)",
    }
    for name, (r, k) in c1.items():
        rep.add(Check(f"cond_i_{name}", anchors[name], r, thr, error=ConditionOneViolated, witness=k))

    g = gram_of_family(phi.values, alg, phi.alpha.matrix)
    gscale = max(1.0, opnorm(g))
    herm = hermitian_residual(g)
    rep.add(Check("cond_ii_gram_hermitian", "G = G*", herm, tol.threshold(gscale), error=ConditionOneViolated))
    if herm > tol.threshold(gscale):
        rep.info["cond_iii"] = "skipped"
        return rep
    psd = psd_check(g, tol)
    rep.info["min_gram_eigenvalue"] = psd.min_eigenvalue
    rep.add(Check("cond_ii_gram_psd", "[phi(alpha(a_i)* a_j)] >= 0", psd.min_eigenvalue,
                  -tol.abs_tol * gscale, lower_bound=True, error=ConditionTwoViolated))
    if not psd.is_psd:
        rep.info["cond_iii"] = "skipped"
        return rep

    quot = gram_quotient(g, tol)
    bounds, worst_leak, witness = [], 0.0, None
    for a in _sample_elements(phi, samples, n_random, seed):
        lmat = shifted_gram(phi, a, g)
        norm_a = alg.norm(a)
        try:
            m = domination_bound(lmat, g, tol, quotient=quot)
        except Undominated as exc:
            if exc.residual > worst_leak:
                worst_leak, witness = exc.residual, [[float(z.real), float(z.imag)] for z in a]
            continue
        bounds.append({"M": m, "K": m / norm_a if norm_a else 0.0,
                       "ratio": m / norm_a**2 if norm_a else 0.0})
    rep.info["domination"] = bounds
    rep.info["worst_ratio"] = max((b["ratio"] for b in bounds), default=0.0)
    rep.add(Check("cond_iii_domination", "L(a) <= M(a) G on sampled a", worst_leak, thr, tier=WARNING,
                  error=Undominated, witness=witness))
    return rep


def phi_map_residual(Phi: PhiMap) -> tuple[float, list, float]:
    """``max |Phi(b_p)^# Phi(b_q) - phi(<b_p, b_q>)|`` over module basis pairs."""
    mod, phi = Phi.module, Phi.phi
    j1 = phi.space.J
    vals = Phi.values
    lhs = einsum("ab,pcb,qcd->pqad", j1, np.conj(vals), vals)
    rhs = einsum("pqk,kad->pqad", mod.inner_table, phi.values)
    diff = opnorms(lhs - rhs) if lhs.size else np.zeros((0, 0))
    if diff.size == 0:
        return 0.0, [0, 0], 1.0
    p, q = np.unravel_index(int(np.argmax(diff)), diff.shape)
    scale = max(1.0, float(np.max(opnorms(rhs))),
                max(opnorm(v) for v in vals) ** 2)
    return float(diff[p, q]), [int(p), int(q)], scale


def verify_phi_map(Phi: PhiMap, tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    res, wit, scale = phi_map_residual(Phi)
    rep = Report()
    rep.add(Check("phi_map_identity", "Phi(x)^# Phi(y) = phi(<x, y>)", res, tol.threshold(scale),
                  error=NotPhiMap, witness=wit))
    return rep


def module_gram(phi: AlphaCPMap, module: CoordinateModule) -> np.ndarray:
    """``[J1 phi(<b_p, b_q>)]``: PSD exactly when some Phi with ``Phi(x)^#Phi(y) = phi(<x,y>)`` exists."""
    blocks = einsum("pqk,kad->paqd", module.inner_table, phi.values)
    blocks = einsum("ab,pbqd->paqd", phi.space.J, blocks)
    n, d = module.dim, phi.d
    return blocks.reshape(n * d, n * d)


def phi_map_from_factorization(phi: AlphaCPMap, module: CoordinateModule, h2_dim: int | None = None,
                               tol: TolerancePolicy = DEFAULT_TOL) -> PhiMap:
    """Build Phi by factoring the module Gram as ``C^* C``; ``H2`` gets ``rank C`` dims unless given."""
    h = module_gram(phi, module)
    h = 0.5 * (h + dagger(h))
    psd = psd_check(h, tol)
    if not psd.is_psd:
        raise NotPhiMap(f"module Gram has eigenvalue {psd.min_eigenvalue:.3e}; no phi-map exists",
                        residual=psd.min_eigenvalue)
    w, u = eigh_desc(h)
    keep = w > tol.rank_cutoff * max(float(w[0]) if w.size else 0.0, 1.0)
    c = np.sqrt(w[keep])[:, None] * dagger(u[:, keep])
    r = c.shape[0]
    if h2_dim is None:
        h2_dim = max(r, 1)
    if h2_dim < r:
        raise NotPhiMap(f"H2 of dim {h2_dim} is too small; need at least {r}")
    c = np.vstack([c, np.zeros((h2_dim - r, c.shape[1]))])
    d = phi.d
    vals = c.reshape(h2_dim, module.dim, d).transpose(1, 0, 2)
    return PhiMap(module, phi, KreinSpace.hilbert(h2_dim), np.ascontiguousarray(vals))


# the dilation-shaped example ------------------------------------------------------

def build_from_dilation(algebra, alpha: StarInvolutiveAutomorphism, module: CoordinateModule,
                        pi_a, pi_x, V, W, h1: KreinSpace, k1: KreinSpace,
                        tol: TolerancePolicy = DEFAULT_TOL) -> tuple[AlphaCPMap, PhiMap]:
    """``phi(a) = V^# pi_A(a) V`` and ``Phi(x) = W^# pi_X(x) V``.

    ``pi_a`` acts on ``k1``; ``pi_x`` maps ``k1`` into a Hilbert space K2,
    ``V: H1 -> K1`` and ``W: H2 -> K2``.  The premises are checked first and
    reported as HypothesisViolated; the outputs are then verified.
    """
    pi_a = np.asarray(pi_a, complex)
    pi_x = np.asarray(pi_x, complex)
    V = np.asarray(V, complex)
    W = np.asarray(W, complex)
    j1, j3 = h1.J, k1.J
    d1, r = h1.dim, k1.dim
    s = pi_x.shape[1]
    if V.shape != (r, d1) or W.shape[0] != s or pi_x.shape != (module.dim, s, r):
        raise HypothesisViolated("operator shapes are inconsistent")
    scale = max(1.0, opnorm(V), opnorm(W), max(opnorm(p) for p in pi_a)) ** 3
    thr = tol.threshold(scale)

    try:
        verify_krein_representation(pi_a, algebra, k1, tol)
    except Exception as exc:
        raise HypothesisViolated(f"pi_A is not a Krein representation: {exc}") from exc
    v_sharp = sharp_matrix(V, j1, j3)
    r1 = opnorm(v_sharp - dagger(V))
    if r1 > thr:
        raise HypothesisViolated("V^# != V*", residual=r1, witness="V_sharp")
    alpha_img = einsum("ki,kpq->ipq", alpha.matrix, pi_a)
    r2 = max(opnorm(alpha_img[i] @ V - j3 @ pi_a[i] @ V @ j1) for i in range(algebra.dim))
    if r2 > thr:
        raise HypothesisViolated("pi_A(alpha(a)) V != J pi_A(a) V J", residual=r2, witness="alpha_twist")
    r3 = opnorm(W @ dagger(W) - np.eye(s))
    if r3 > thr:
        raise HypothesisViolated("W is not a coisometry", residual=r3, witness="coisometry")
    lhs = einsum("ab,pcb,qcd->pqad", j3, np.conj(pi_x), pi_x)
    rhs = einsum("pqk,kad->pqad", module.inner_table, pi_a)
    r4 = float(np.max(opnorms(lhs - rhs), initial=0.0))
    if r4 > thr:
        raise HypothesisViolated("pi_X is not a pi_A-representation", residual=r4, witness="pi_X")
    phi_vals = einsum("ab,kbc,cd->kad", v_sharp, pi_a, V)
    if not k1.is_hilbert:
        # with an indefinite K1 the compression must itself commute with J1
        r5 = max(opnorm(j1 @ p @ j1 - p) for p in phi_vals)
        if r5 > thr:
            raise HypothesisViolated("V^# pi_A(a) V does not commute with J1", residual=r5,
                                     witness="compression")
    phi = AlphaCPMap(algebra, alpha, h1, phi_vals)
    Phi_vals = einsum("ab,kbc,cd->kad", dagger(W), pi_x, V)
    Phi = PhiMap(module, phi, KreinSpace.hilbert(W.shape[1]), Phi_vals)
    rep = verify_alpha_cp(phi, tol=tol)
    rep.extend(verify_phi_map(Phi, tol))
    if not rep.passed:
        bad = rep.failures[0]
        raise InternalInconsistency(f"constructed maps fail {bad.name} (residual {bad.residual:.3e})",
                                    residual=bad.residual)
    return phi, Phi


# instance generator ----------------------------------------------------------

def _real_basis(shape) -> np.ndarray:
    """Complex tables for the real coordinates (real parts first, then imaginary)."""
    n = int(np.prod(shape))
    eye = np.eye(n)
    return np.concatenate([eye, 1j * eye]).reshape((2 * n,) + tuple(shape))


def condition_one_subspace(algebra, alpha: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Real orthonormal basis (as an array of phi tables) of maps satisfying condition (i)."""
    d = j.shape[0]
    basis = _real_basis((algebra.dim, d, d))
    rows = []
    for t in basis:
        star_img = einsum("ki,kpq->ipq", algebra.star_matrix, t)
        alpha_img = einsum("ki,kpq->ipq", alpha, t)
        dfc = np.concatenate([(star_img - dagger(t)).ravel(), (alpha_img - t).ravel(),
                              (j @ t @ j - t).ravel()])
        rows.append(np.concatenate([dfc.real, dfc.imag]))
    cons = np.array(rows).T
    _, s, vh = np.linalg.svd(cons)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 0.0)))
    coeff = vh[rank:]
    return einsum("mb,bkpq->mkpq", coeff, basis)


class _ConeProblem:
    """Points of the subspace whose Gram matrices are all PSD.

    Each Gram map is linear in the subspace coordinates; alternating
    projections run in the product of the Gram spaces.
    """

    def __init__(self, tables: np.ndarray, gram_maps):
        self.tables = tables
        self.gram_maps = gram_maps
        cols = []
        for t in tables:
            cols.append(np.concatenate([gm(t).ravel() for gm in gram_maps]))
        self.lin = np.array(cols).T  # complex (sum of gram sizes) x m; real coefficients
        self.lin_real = np.concatenate([self.lin.real, self.lin.imag])
        self.pinv = np.linalg.pinv(self.lin_real)
        self.shapes = [gm(tables[0]).shape for gm in gram_maps] if len(tables) else []

    def grams(self, t: np.ndarray) -> list[np.ndarray]:
        flat = self.lin @ t
        out, k = [], 0
        for sh in self.shapes:
            n = sh[0] * sh[1]
            out.append(flat[k:k + n].reshape(sh))
            k += n
        return out

    def project(self, grams) -> np.ndarray:
        flat = np.concatenate([g.ravel() for g in grams])
        return self.pinv @ np.concatenate([flat.real, flat.imag])

    def table(self, t: np.ndarray) -> np.ndarray:
        return einsum("m,mkpq->kpq", t, self.tables)


def _psd_part(g: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(0.5 * (g + dagger(g)))
    w = np.clip(w, 0.0, None)
    return (u * w) @ dagger(u)


def _alternate(prob: _ConeProblem, t: np.ndarray, iters: int) -> np.ndarray:
    for _ in range(iters):
        gs = prob.grams(t)
        ps = [_psd_part(g) for g in gs]
        gap = max(opnorm(g - p) for g, p in zip(gs, ps))
        if gap <= 1e-14 * max(1.0, max(opnorm(p) for p in ps)):
            break
        t = prob.project(ps)
    return t


def _facial_polish(prob: _ConeProblem, t: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Snap to the face: force each Gram to vanish on its near-kernel, staying in the subspace."""
    m = len(prob.tables)
    unit_grams = [prob.grams(np.eye(m)[k]) for k in range(m)]
    blocks = []
    for gi, g in enumerate(prob.grams(t)):
        w, u = np.linalg.eigh(0.5 * (g + dagger(g)))
        kern = u[:, w < rel * max(float(w[-1]), 1e-300)]
        if kern.shape[1]:
            blocks.append(np.stack([(unit_grams[k][gi] @ kern).ravel() for k in range(m)], axis=1))
    if not blocks:
        return t
    cons = np.concatenate(blocks)
    cons = np.concatenate([cons.real, cons.imag])
    _, s, vh = np.linalg.svd(cons)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    ns = vh[rank:].T
    return ns @ (ns.T @ t)


def _random_start(prob: _ConeProblem, rng: np.random.Generator) -> np.ndarray:
    targets = []
    for sh in prob.shapes:
        n = sh[0]
        rank = int(rng.integers(1, n + 1))
        z = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
        targets.append(z @ dagger(z) / rank)
    t = prob.project(targets)
    if np.linalg.norm(t) < 1e-12:
        t = rng.standard_normal(len(prob.tables))
    return t


def generate_instances(algebra, alpha: StarInvolutiveAutomorphism, space: KreinSpace, seed: int = 0,
                       count: int = 1, *, module: CoordinateModule | None = None,
                       tol: TolerancePolicy = DEFAULT_TOL, max_tries: int | None = None,
                       iters: int = 3000) -> list[AlphaCPMap]:
    """Random maps satisfying (i) exactly and (ii) after alternating projections.

    With ``module`` given, the module Gram is also forced PSD so that a phi-map
    exists (see :func:`generate_phi_instances`).  When the feasible set is
    ``{0}`` the zero map is returned with ``meta["rigid"] = True``.
    """
    rng = np.random.default_rng(seed)
    tables = condition_one_subspace(algebra, alpha.matrix, space.J)
    zero = AlphaCPMap(algebra, alpha, space, np.zeros((algebra.dim, space.dim, space.dim), complex),
                      {"rigid": True})
    if len(tables) == 0:
        return [zero]
    maps = [lambda t: gram_of_family(t, algebra, alpha.matrix)]
    if module is not None:
        maps.append(lambda t: module_gram(AlphaCPMap(algebra, alpha, space, t), module))
    prob = _ConeProblem(tables, maps)
    out: list[AlphaCPMap] = []
    tries = max_tries if max_tries is not None else 10 * count + 10
    zero_hits = 0
    for _ in range(tries):
        if len(out) >= count:
            break
        t0 = _random_start(prob, rng)
        t0 /= np.linalg.norm(t0)
        t = _alternate(prob, t0, iters)
        if np.linalg.norm(t) < 1e-8:
            zero_hits += 1
            if zero_hits >= 3 and not out:
                return [zero]
            continue
        t = _facial_polish(prob, t)
        if np.linalg.norm(t) < 1e-8:
            zero_hits += 1
            if zero_hits >= 3 and not out:
                return [zero]
            continue
        t /= max(opnorm(g) for g in prob.grams(t))
        cand = AlphaCPMap(algebra, alpha, space, prob.table(t), {"rigid": False})
        if not verify_alpha_cp(cand, tol=tol, n_random=0).passed:
            continue
        if module is not None and not psd_check(0.5 * (module_gram(cand, module)
                                                       + dagger(module_gram(cand, module))), tol).is_psd:
            continue
        out.append(cand)
    if not out:
        raise NoInstanceFound(f"no instance found in {tries} attempts")
    return out


def generate_phi_instances(algebra, alpha, space: KreinSpace, module: CoordinateModule, seed: int = 0,
                           count: int = 1, *, h2_dim: int | None = None,
                           tol: TolerancePolicy = DEFAULT_TOL) -> list[PhiMap]:
    phis = generate_instances(algebra, alpha, space, seed, count, module=module, tol=tol)
    return [phi_map_from_factorization(p, module, h2_dim, tol) for p in phis]


def is_rigid(algebra, alpha, space: KreinSpace, seed: int = 0, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """True when the generator finds only the zero map."""
    try:
        out = generate_instances(algebra, alpha, space, seed, 1, tol=tol)
    except NoInstanceFound:
        return False
    return bool(out[0].meta.get("rigid"))

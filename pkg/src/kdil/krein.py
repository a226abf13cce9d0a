"""Krein spaces ``(H, J)``, the sharp adjoint, and pseudo-unitarity tests.

The indefinite form ``[x, y] = <J x, y>`` is always derived from J, never
stored separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MalformedMatrix, NotPseudoUnitary, NotRepresentation, NotSimultaneous, NotSymmetry
from .numkit import DEFAULT_TOL, TolerancePolicy, as_matrix, dagger, opnorm, einsum
from .report import Check, Report


@dataclass(frozen=True, eq=False)
class KreinSpace:
    dim: int
    J: np.ndarray

    @classmethod
    def hilbert(cls, dim: int) -> "KreinSpace":
        return cls(int(dim), np.eye(dim, dtype=complex))

    @property
    def is_hilbert(self) -> bool:
        return bool(np.array_equal(self.J, np.eye(self.dim)))

    @property
    def p_plus(self) -> np.ndarray:
        return 0.5 * (np.eye(self.dim) + self.J)

    @property
    def p_minus(self) -> np.ndarray:
        return 0.5 * (np.eye(self.dim) - self.J)

    @property
    def signature(self) -> tuple[int, int]:
        w = np.linalg.eigvalsh(0.5 * (self.J + dagger(self.J))) if self.dim else np.zeros(0)
        return int(np.sum(w > 0)), int(np.sum(w < 0))

    def form(self, x, y) -> complex:
        """Indefinite form ``[x, y] = <J x, y>`` (conjugate-linear in x)."""
        return complex(np.vdot(self.J @ np.asarray(x), np.asarray(y)))


def fundamental_symmetry_residuals(j: np.ndarray) -> dict[str, float]:
    n = j.shape[0]
    return {
        "selfadjoint": opnorm(j - dagger(j)),
        "involution": opnorm(j @ j - np.eye(n)),
    }


def verify_fundamental_symmetry(j, tol: TolerancePolicy = DEFAULT_TOL) -> KreinSpace:
    j = as_matrix(j, square=True, name="J")
    res = fundamental_symmetry_residuals(j)
    for name, r in res.items():
        if r > tol.threshold(max(1.0, opnorm(j)) ** 2):
            raise NotSymmetry(f"J fails {name} (residual {r:.3e})", residual=r, witness=name)
    return KreinSpace(j.shape[0], j)


@dataclass(frozen=True, eq=False)
class KreinOperator:
    source: KreinSpace
    target: KreinSpace
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (self.target.dim, self.source.dim):
            raise MalformedMatrix(
                f"operator of shape {self.matrix.shape} between spaces of dims "
                f"{self.source.dim} -> {self.target.dim}"
            )

    def __matmul__(self, other: "KreinOperator") -> "KreinOperator":
        return KreinOperator(other.source, self.target, self.matrix @ other.matrix)


def sharp_matrix(t: np.ndarray, j_source: np.ndarray, j_target: np.ndarray) -> np.ndarray:
    """``T^# = J_source T^* J_target`` for ``T: source -> target``."""
    return j_source @ dagger(t) @ j_target


def sharp(t: KreinOperator) -> KreinOperator:
    return KreinOperator(t.target, t.source, sharp_matrix(t.matrix, t.source.J, t.target.J))


def verify_krein_representation(pi, algebra, space: KreinSpace, tol: TolerancePolicy = DEFAULT_TOL,
                                *, raise_on_fail: bool = True) -> Report:
    """Multiplicativity, unitality and ``pi(a^*) = pi(a)^#`` on basis elements.

    ``pi`` is a sequence of d x d matrices indexed by the algebra basis.
    """
    pi = np.asarray(pi, dtype=complex)
    n, d = algebra.dim, space.dim
    if pi.shape != (n, d, d):
        raise MalformedMatrix(f"representation table has shape {pi.shape}, expected {(n, d, d)}")
    scale = max(1.0, max((opnorm(p) for p in pi), default=0.0))
    c = algebra.struct
    prods = einsum("ijk,kpq->ijpq", c, pi)
    mult = max(
        (opnorm(prods[i, j] - pi[i] @ pi[j]) for i in range(n) for j in range(n)),
        default=0.0,
    )
    unit = opnorm(einsum("k,kpq->pq", algebra.unit, pi) - np.eye(d))
    star_img = einsum("ki,kpq->ipq", algebra.star_matrix, pi)  # pi(e_i^*) ; star is real on the basis
    sharp_res = max((opnorm(star_img[i] - sharp_matrix(pi[i], space.J, space.J)) for i in range(n)), default=0.0)
    rep = Report()
    rep.add(Check("multiplicative", "pi(ab) = pi(a)pi(b)", mult, tol.threshold(scale**2),
                  error=NotRepresentation))
    rep.add(Check("unital", "pi(1) = I", unit, tol.threshold(scale), error=NotRepresentation))
    rep.add(Check("sharp", "pi(a*) = J pi(a)* J", sharp_res, tol.threshold(scale), error=NotRepresentation))
    if raise_on_fail:
        for chk in rep.failures:
            raise NotRepresentation(f"representation fails {chk.name} (residual {chk.residual:.3e})",
                                    residual=chk.residual, witness=chk.name)
    return rep


def pseudo_unitary_report(u: np.ndarray, j: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL,
                          require_simultaneous: bool = False) -> Report:
    n = u.shape[0]
    eye = np.eye(n)
    us = sharp_matrix(u, j, j)
    scale = max(1.0, opnorm(u)) ** 2
    rep = Report()
    rep.add(Check("pseudo_unitary", "u^# u = u u^# = I",
                  max(opnorm(us @ u - eye), opnorm(u @ us - eye)), tol.threshold(scale),
                  error=NotPseudoUnitary))
    if require_simultaneous:
        rep.add(Check("unitary", "u* u = I", max(opnorm(dagger(u) @ u - eye), opnorm(u @ dagger(u) - eye)),
                      tol.threshold(scale), error=NotSimultaneous))
        rep.add(Check("commutes_J", "u J = J u", opnorm(u @ j - j @ u), tol.threshold(scale),
                      error=NotSimultaneous))
    return rep


def verify_pseudo_unitary(u, space: KreinSpace | None = None, require_simultaneous: bool = False,
                          tol: TolerancePolicy = DEFAULT_TOL) -> Report:
    """Raise NotPseudoUnitary / NotSimultaneous on failure, else return the report."""
    if isinstance(u, KreinOperator):
        space = u.source
        u = u.matrix
    u = as_matrix(u, square=True, name="u")
    if space is None:
        space = KreinSpace.hilbert(u.shape[0])
    if space.dim != u.shape[0]:
        raise MalformedMatrix("operator and space differ in dimension")
    rep = pseudo_unitary_report(u, space.J, tol, require_simultaneous)
    return rep.require()

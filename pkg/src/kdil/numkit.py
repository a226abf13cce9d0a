"""Dense complex-matrix kernels.

Hermitian eigendecompositions, PSD tests, Gram-form quotients, pushforwards of
linear maps through a quotient, and generalized domination bounds.  Every
function is pure and returns fresh arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import MalformedMatrix, NotPositive, NotQuotientCompatible, Undominated


@dataclass(frozen=True)
class TolerancePolicy:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    rank_cutoff: float = 1e-10

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "rank_cutoff"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")

    @classmethod
    def from_env(cls, **overrides) -> "TolerancePolicy":
        """Defaults, with ``KDIL_TOL_REL`` applied before explicit overrides."""
        kw = {}
        env = os.environ.get("KDIL_TOL_REL")
        if env:
            kw["rel_tol"] = float(env)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def threshold(self, *scales: float) -> float:
        return self.abs_tol + self.rel_tol * max((float(s) for s in scales), default=0.0)


DEFAULT_TOL = TolerancePolicy()


def as_matrix(x, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise MalformedMatrix(f"{name}: expected a 2-D array, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise MalformedMatrix(f"{name}: expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise MalformedMatrix(f"{name}: non-finite entries")
    return a


def einsum(subscripts: str, *operands) -> np.ndarray:
    """``np.einsum`` with contraction-order optimization (large crossed-product tensors need it)."""
    return np.einsum(subscripts, *operands, optimize=True)


def opnorm(x) -> float:
    a = np.asarray(x)
    if a.size == 0:
        return 0.0
    if a.ndim == 1:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a, 2))


def opnorms(x) -> np.ndarray:
    """Operator norms over the last two axes; zero for empty matrices."""
    a = np.asarray(x)
    if a.shape[-1] == 0 or a.shape[-2] == 0:
        return np.zeros(a.shape[:-2])
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def close(x, y, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Operator-norm equality test with mixed absolute/relative tolerance."""
    return opnorm(np.asarray(x) - np.asarray(y)) <= tol.threshold(opnorm(x), opnorm(y))


def hermitian_residual(g: np.ndarray) -> float:
    return opnorm(g - dagger(g))


def normalize_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    out = np.array(vecs, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        big = mags.max(initial=0.0)
        if big == 0.0:
            continue
        i = int(np.argmax(mags > 1e-8 * big))
        out[:, j] = col * (np.conj(col[i]) / mags[i])
    return out


def eigh_desc(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending, phases fixed."""
    h = 0.5 * (g + dagger(g))
    w, u = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return w[order], normalize_phases(u[:, order])


def _check_hermitian(g: np.ndarray, tol: TolerancePolicy) -> None:
    res = hermitian_residual(g)
    if res > tol.threshold(opnorm(g)):
        raise MalformedMatrix(f"matrix is not Hermitian (residual {res:.3e})", residual=res)


@dataclass(frozen=True)
class PsdResult:
    is_psd: bool
    min_eigenvalue: float


def psd_check(g, tol: TolerancePolicy = DEFAULT_TOL) -> PsdResult:
    g = as_matrix(g, square=True, name="G")
    _check_hermitian(g, tol)
    if g.shape[0] == 0:
        return PsdResult(True, 0.0)
    lam_min = float(np.linalg.eigvalsh(0.5 * (g + dagger(g)))[0])
    return PsdResult(lam_min >= -tol.abs_tol * max(1.0, opnorm(g)), lam_min)


@dataclass(frozen=True)
class GramQuotient:
    """Coordinates of the quotient of ``C^n`` by the null space of a PSD Gram matrix.

    ``q`` (r x n) maps ambient coordinates to an orthonormal basis of the
    quotient, ``q_plus`` (n x r) is its right inverse supported on range(G),
    and ``q^* q`` reproduces the form.
    """

    gram: np.ndarray
    q: np.ndarray
    q_plus: np.ndarray
    eigenvalues: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.gram.shape[0]

    @property
    def rank(self) -> int:
        return self.q.shape[0]

    @property
    def range_projector(self) -> np.ndarray:
        return self.q_plus @ self.q

    @property
    def kernel_projector(self) -> np.ndarray:
        return np.eye(self.ambient_dim) - self.range_projector


def gram_quotient(g, tol: TolerancePolicy = DEFAULT_TOL) -> GramQuotient:
    g = as_matrix(g, square=True, name="G")
    _check_hermitian(g, tol)
    n = g.shape[0]
    w, u = eigh_desc(g) if n else (np.zeros(0), np.zeros((0, 0), complex))
    scale = max(1.0, opnorm(g))
    if n and w[-1] < -tol.abs_tol * scale:
        raise NotPositive(f"Gram matrix has eigenvalue {w[-1]:.3e}", residual=float(w[-1]))
    cutoff = tol.rank_cutoff * max(float(w[0]) if n else 0.0, 1.0)
    keep = w > cutoff
    lam = w[keep]
    ur = u[:, keep]
    q = np.sqrt(lam)[:, None] * dagger(ur)
    q_plus = ur / np.sqrt(lam)[None, :]
    return GramQuotient(gram=g, q=q, q_plus=q_plus, eigenvalues=w)


def pushforward_residual(lmat: np.ndarray, q: GramQuotient) -> float:
    """Size of ``Q L P_ker``: zero iff L maps the null space into itself."""
    return opnorm(q.q @ lmat @ q.kernel_projector)


def pushforward(lmat, q: GramQuotient, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Induced operator ``Q L Q^+`` on the quotient; L must preserve the null space."""
    lmat = as_matrix(lmat, name="L")
    n = q.ambient_dim
    if lmat.shape != (n, n):
        raise MalformedMatrix(f"L has shape {lmat.shape}, quotient ambient dim is {n}")
    res = pushforward_residual(lmat, q)
    thr = tol.threshold(opnorm(q.q) * opnorm(lmat))
    if res > thr:
        raise NotQuotientCompatible(
            f"map does not preserve the null space (residual {res:.3e} > {thr:.3e})", residual=res
        )
    return q.q @ lmat @ q.q_plus


def domination_bound(lmat, g, tol: TolerancePolicy = DEFAULT_TOL, quotient: GramQuotient | None = None) -> float:
    """Smallest M >= 0 with ``L <= M G``; requires ker G inside ker L.

    ``quotient`` may be passed to reuse the decomposition of G across many L.
    """
    lmat = as_matrix(lmat, square=True, name="L")
    quot = quotient if quotient is not None else gram_quotient(g, tol)
    if lmat.shape != quot.gram.shape:
        raise MalformedMatrix("L and G differ in shape")
    leak = opnorm(lmat @ quot.kernel_projector)
    if leak > tol.threshold(opnorm(lmat)):
        raise Undominated(f"ker G is not contained in ker L (residual {leak:.3e})", residual=leak)
    if quot.rank == 0:
        return 0.0
    comp = dagger(quot.q_plus) @ lmat @ quot.q_plus
    top = float(np.linalg.eigvalsh(0.5 * (comp + dagger(comp)))[-1])
    return max(top, 0.0)


def span_basis(cols: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span, cut like a Gram rank."""
    cols = np.asarray(cols, dtype=complex)
    if cols.size == 0:
        return np.zeros((cols.shape[0], 0), complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    cutoff = tol.rank_cutoff * max(float(s[0]) ** 2, 1.0)
    return normalize_phases(u[:, s**2 > cutoff])


def span_rank(cols: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> int:
    return span_basis(cols, tol).shape[1]


def null_space(m: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ker m (columns)."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    cutoff = max(tol.abs_tol, tol.rel_tol * (float(s[0]) if s.size else 0.0))
    rank = int(np.sum(s > cutoff))
    return normalize_phases(dagger(vh[rank:]))


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition."""
    if m.size == 0:
        return np.zeros(m.shape, complex)
    u, _, vh = np.linalg.svd(m)
    return u @ vh

"""Finite-dimensional C*-algebras and involutive *-automorphisms.

An algebra is handled through its coordinates in a fixed basis: a tensor of
structure constants (``e_i e_j = sum_k c[i, j, k] e_k``), a matrix for the
involution (``star(x) = S @ conj(x)``) and the coordinates of the unit.  The
block algebra ``M_{n_1} + ... + M_{n_m}`` uses matrix units ordered
block-by-block, row-major; the crossed product in :mod:`kdil.crossed` reuses
the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AlgebraMismatch, NotAutomorphism, NotExpectation
from .numkit import DEFAULT_TOL, TolerancePolicy, dagger, null_space, opnorm, einsum


class CoordinateAlgebra:
    """Unital *-algebra given by structure constants in a fixed basis."""

    dim: int

    @cached_property
    def struct(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def star_matrix(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def unit(self) -> np.ndarray:
        raise NotImplementedError

    def norm(self, x: np.ndarray) -> float:
        raise NotImplementedError

    # coordinate-level arithmetic
    def mul(self, x, y) -> np.ndarray:
        return einsum("i,j,ijk->k", x, y, self.struct)

    def star(self, x) -> np.ndarray:
        return self.star_matrix @ np.conj(x)

    def left_mult(self, x) -> np.ndarray:
        """Matrix of ``y -> x y`` on coordinates."""
        return einsum("i,ijk->kj", x, self.struct)

    def right_mult(self, x) -> np.ndarray:
        """Matrix of ``y -> y x`` on coordinates."""
        return einsum("j,ijk->ki", x, self.struct)

    @cached_property
    def left_mult_table(self) -> np.ndarray:
        """``table[i]`` is the left-multiplication matrix of basis element i."""
        return np.transpose(self.struct, (0, 2, 1))

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, complex)
        v[i] = 1.0
        return v

    def element(self, coords) -> "AlgebraElement":
        c = np.asarray(coords, dtype=complex).reshape(-1)
        if c.shape != (self.dim,):
            raise AlgebraMismatch(f"expected {self.dim} coordinates, got {c.shape[0]}")
        return AlgebraElement(self, c)

    def basis(self) -> list["AlgebraElement"]:
        return [self.element(self.basis_vector(i)) for i in range(self.dim)]

    def one(self) -> "AlgebraElement":
        return self.element(self.unit)

    def random_coords(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)


class FiniteCStarAlgebra(CoordinateAlgebra):
    """``M_{n_1}(C) + ... + M_{n_m}(C)`` with the matrix-unit basis."""

    def __init__(self, block_sizes):
        sizes = tuple(int(n) for n in block_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise ValueError(f"block sizes must be positive, got {block_sizes!r}")
        self.block_sizes = sizes
        self.dim = sum(n * n for n in sizes)
        self.matrix_size = sum(sizes)
        # (block, row, col) for each basis index
        labels = []
        for b, n in enumerate(sizes):
            labels.extend((b, i, j) for i in range(n) for j in range(n))
        self.labels = tuple(labels)
        self._index = {lab: k for k, lab in enumerate(labels)}
        offs = np.cumsum((0,) + sizes)
        self._offsets = tuple(int(o) for o in offs[:-1])

    def __repr__(self):
        return f"FiniteCStarAlgebra({list(self.block_sizes)})"

    def __eq__(self, other):
        return isinstance(other, FiniteCStarAlgebra) and other.block_sizes == self.block_sizes

    def __hash__(self):
        return hash(("FiniteCStarAlgebra", self.block_sizes))

    def index(self, block: int, row: int, col: int) -> int:
        return self._index[(block, row, col)]

    @cached_property
    def struct(self) -> np.ndarray:
        c = np.zeros((self.dim,) * 3, complex)
        for p, (b, i, j) in enumerate(self.labels):
            n = self.block_sizes[b]
            for l in range(n):
                c[p, self._index[(b, j, l)], self._index[(b, i, l)]] = 1.0
        return c

    @cached_property
    def star_matrix(self) -> np.ndarray:
        s = np.zeros((self.dim, self.dim), complex)
        for p, (b, i, j) in enumerate(self.labels):
            s[self._index[(b, j, i)], p] = 1.0
        return s

    @cached_property
    def unit(self) -> np.ndarray:
        u = np.zeros(self.dim, complex)
        for b, n in enumerate(self.block_sizes):
            for i in range(n):
                u[self._index[(b, i, i)]] = 1.0
        return u

    def blocks(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=complex)
        out, k = [], 0
        for n in self.block_sizes:
            out.append(x[k:k + n * n].reshape(n, n))
            k += n * n
        return out

    def from_blocks(self, blocks) -> np.ndarray:
        if len(blocks) != len(self.block_sizes):
            raise AlgebraMismatch("wrong number of blocks")
        parts = []
        for blk, n in zip(blocks, self.block_sizes):
            blk = np.asarray(blk, dtype=complex)
            if blk.shape != (n, n):
                raise AlgebraMismatch(f"block of shape {blk.shape}, expected {(n, n)}")
            parts.append(blk.reshape(-1))
        return np.concatenate(parts)

    def to_matrix(self, x) -> np.ndarray:
        """Block-diagonal matrix realization."""
        m = np.zeros((self.matrix_size,) * 2, complex)
        for blk, o in zip(self.blocks(x), self._offsets):
            n = blk.shape[0]
            m[o:o + n, o:o + n] = blk
        return m

    def from_matrix(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=complex)
        return self.from_blocks([m[o:o + n, o:o + n] for o, n in zip(self._offsets, self.block_sizes)])

    def norm(self, x) -> float:
        return max(opnorm(b) for b in self.blocks(x))

    def mul(self, x, y) -> np.ndarray:
        return self.from_blocks([a @ b for a, b in zip(self.blocks(x), self.blocks(y))])


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    parent: CoordinateAlgebra
    coords: np.ndarray

    def _same(self, other: "AlgebraElement") -> None:
        if other.parent is not self.parent and other.parent != self.parent:
            raise AlgebraMismatch("elements belong to different algebras")

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._same(other)
            return AlgebraElement(self.parent, self.parent.mul(self.coords, other.coords))
        return AlgebraElement(self.parent, self.coords * other)

    def __rmul__(self, scalar):
        return AlgebraElement(self.parent, scalar * self.coords)

    def __add__(self, other):
        self._same(other)
        return AlgebraElement(self.parent, self.coords + other.coords)

    def __sub__(self, other):
        self._same(other)
        return AlgebraElement(self.parent, self.coords - other.coords)

    def __neg__(self):
        return AlgebraElement(self.parent, -self.coords)

    def star(self) -> "AlgebraElement":
        return AlgebraElement(self.parent, self.parent.star(self.coords))

    def norm(self) -> float:
        return self.parent.norm(self.coords)

    @property
    def matrix(self) -> np.ndarray:
        return self.parent.to_matrix(self.coords)

    def allclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        self._same(other)
        return bool(np.linalg.norm(self.coords - other.coords) <= atol)


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return a * b


def star(a: AlgebraElement) -> AlgebraElement:
    return a.star()


@dataclass(frozen=True, eq=False)
class StarInvolutiveAutomorphism:
    """A verified *-automorphism acting on coordinates by ``matrix``.

    ``involutive`` is False only for the group actions of :mod:`kdil.hmodule`,
    which need not square to the identity.
    """

    algebra: CoordinateAlgebra
    matrix: np.ndarray
    residuals: dict = field(default_factory=dict)
    involutive: bool = True

    def __call__(self, a):
        if isinstance(a, AlgebraElement):
            return AlgebraElement(a.parent, self.matrix @ a.coords)
        return self.matrix @ np.asarray(a, dtype=complex)

    def sharp(self, a: AlgebraElement) -> AlgebraElement:
        """Indefinite involution ``a -> alpha(a*)``."""
        return self(a.star())

    def commutator_residual(self, other: "StarInvolutiveAutomorphism") -> float:
        return opnorm(self.matrix @ other.matrix - other.matrix @ self.matrix)


def automorphism_residuals(alpha: np.ndarray, algebra: CoordinateAlgebra) -> dict[str, float]:
    """Residual of every *-automorphism axiom (coordinate 2-norms, maxed over the basis)."""
    n = algebra.dim
    eye = np.eye(n)
    sv = np.linalg.svd(alpha, compute_uv=False)
    c = algebra.struct
    lhs = einsum("kl,ijl->ijk", alpha, c)
    rhs = einsum("pi,qj,pqk->ijk", alpha, alpha, c)
    mult = float(np.max(np.linalg.norm(lhs - rhs, axis=2))) if n else 0.0
    s = algebra.star_matrix
    # alpha(e_i^*) vs alpha(e_i)^*, column by column
    star_res = opnorm(alpha @ s - s @ np.conj(alpha))
    return {
        "bijective": float(sv[-1]),
        "unital": float(np.linalg.norm(alpha @ algebra.unit - algebra.unit)),
        "star": star_res,
        "multiplicative": mult,
        "involutive": opnorm(alpha @ alpha - eye),
    }


def verify_automorphism(
    alpha_matrix,
    algebra: CoordinateAlgebra,
    tol: TolerancePolicy = DEFAULT_TOL,
    *,
    involutive: bool = True,
) -> StarInvolutiveAutomorphism:
    alpha = np.asarray(alpha_matrix, dtype=complex)
    n = algebra.dim
    if alpha.shape != (n, n):
        raise NotAutomorphism(f"alpha has shape {alpha.shape}, expected {(n, n)}", axiom="shape")
    res = automorphism_residuals(alpha, algebra)
    scale = max(1.0, opnorm(alpha))
    if res["bijective"] <= tol.abs_tol:
        raise NotAutomorphism("alpha is singular", axiom="bijective", residual=res["bijective"])
    for axiom in ("unital", "star", "multiplicative", "involutive"):
        if axiom == "involutive" and not involutive:
            continue
        thr = tol.threshold(scale**2 if axiom in ("multiplicative", "involutive") else scale)
        if res[axiom] > thr:
            raise NotAutomorphism(
                f"alpha fails the {axiom} axiom (residual {res[axiom]:.3e})",
                axiom=axiom,
                residual=res[axiom],
            )
    return StarInvolutiveAutomorphism(algebra, alpha, res, involutive)


# builders ------------------------------------------------------------------

def identity_alpha(algebra: CoordinateAlgebra) -> StarInvolutiveAutomorphism:
    return verify_automorphism(np.eye(algebra.dim), algebra)


def permutation_matrix(perm) -> np.ndarray:
    perm = [int(p) for p in perm]
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {perm}")
    m = np.zeros((n, n), complex)
    for i, p in enumerate(perm):
        m[p, i] = 1.0
    return m


def permutation_alpha_matrix(algebra: CoordinateAlgebra, perm) -> np.ndarray:
    """``e_i -> e_perm[i]`` on basis coordinates."""
    if len(perm) != algebra.dim:
        raise AlgebraMismatch(f"permutation of length {len(perm)} on an algebra of dim {algebra.dim}")
    return permutation_matrix(perm)


def inner_alpha_matrix(algebra: FiniteCStarAlgebra, unitaries) -> np.ndarray:
    """Coordinate matrix of ``a -> u a u^*`` with one unitary per block."""
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    if len(us) != len(algebra.block_sizes):
        raise AlgebraMismatch("need one unitary per block")
    cols = []
    for i in range(algebra.dim):
        blocks = [u @ b @ dagger(u) for u, b in zip(us, algebra.blocks(algebra.basis_vector(i)))]
        cols.append(algebra.from_blocks(blocks))
    return np.stack(cols, axis=1)


def alpha_from_expectation(
    p_matrix, algebra: CoordinateAlgebra, tol: TolerancePolicy = DEFAULT_TOL
) -> StarInvolutiveAutomorphism:
    """``alpha = 2P - id`` for an idempotent, unital, Hermitian-preserving P.

    2P - id is always a linear involution; whether it is multiplicative is up
    to P, so the result still goes through :func:`verify_automorphism`.
    """
    p = np.asarray(p_matrix, dtype=complex)
    n = algebra.dim
    if p.shape != (n, n):
        raise NotExpectation(f"P has shape {p.shape}, expected {(n, n)}")
    scale = max(1.0, opnorm(p))
    idem = opnorm(p @ p - p)
    if idem > tol.threshold(scale**2):
        raise NotExpectation("P is not idempotent", residual=idem)
    unital = float(np.linalg.norm(p @ algebra.unit - algebra.unit))
    if unital > tol.threshold(scale):
        raise NotExpectation("P is not unital", residual=unital)
    s = algebra.star_matrix
    herm = opnorm(p @ s - s @ np.conj(p))
    if herm > tol.threshold(scale):
        raise NotExpectation("P does not preserve adjoints", residual=herm)
    return verify_automorphism(2 * p - np.eye(n), algebra, tol)


def alpha_fixed_split(alpha: StarInvolutiveAutomorphism, tol: TolerancePolicy = DEFAULT_TOL):
    """Orthonormal coordinate bases (columns) of the +1 and -1 eigenspaces."""
    eye = np.eye(alpha.algebra.dim)
    return null_space(alpha.matrix - eye, tol), null_space(alpha.matrix + eye, tol)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdil.algebra import FiniteCStarAlgebra, inner_alpha_matrix, verify_automorphism
from kdil.covariant import FiniteGroup
from kdil.errors import NotDynamicalSystem
from kdil.hmodule import FreeHilbertModule, inner_product, make_action, verify_action_compatibility
from oracles import block_coords, block_matrix, perm_alpha

C3 = FiniteCStarAlgebra([1, 1, 1])
FLIP = perm_alpha([2, 1, 0])


def test_inner_of_fixed_point():
    x = FreeHilbertModule(C3, 1)
    e2 = x.element(C3.basis_vector(1))
    assert inner_product(e2, e2).allclose(C3.basis()[1])


def test_inner_rank_two():
    x = FreeHilbertModule(C3, 2)
    e1, e2 = C3.basis()[0], C3.basis()[1]
    u = x.from_components([e1, e2])
    v = x.from_components([e1, 0 * e1])
    assert inner_product(u, v).allclose(e1)


def test_right_action_examples(rng):
    x = FreeHilbertModule(C3, 1)
    v = x.element(x.random_coords(rng))
    assert np.allclose((v * C3.one()).coords, v.coords)
    e1 = x.element(C3.basis_vector(0))
    assert np.allclose((e1 * C3.basis()[1]).coords, 0)


def test_inner_matches_matrix_oracle(rng):
    blocks = [1, 2]
    alg = FiniteCStarAlgebra(blocks)
    x = FreeHilbertModule(alg, 2)
    for _ in range(10):
        u, v = x.random_coords(rng), x.random_coords(rng)
        us, vs = np.reshape(u, (2, -1)), np.reshape(v, (2, -1))
        ref = sum(block_matrix(blocks, a).conj().T @ block_matrix(blocks, b) for a, b in zip(us, vs))
        assert np.allclose(x.inner(u, v), block_coords(blocks, ref))
        assert np.allclose(x.inner_table.shape, (10, 10, 5))
        assert np.allclose(np.einsum("p,q,pqk->k", u.conj(), v, x.inner_table), x.inner(u, v))


def test_trivial_group_action():
    x = FreeHilbertModule(C3, 2)
    act = make_action(FiniteGroup.trivial(), x, [np.eye(x.dim)])
    assert verify_action_compatibility(act).passed


def test_flip_action_passes():
    x = FreeHilbertModule(C3, 1)
    act = make_action(FiniteGroup.cyclic(2), x, [np.eye(3), FLIP])
    verify_action_compatibility(act)
    assert np.allclose(act.beta[1], FLIP)


def test_trivial_eta_with_flipping_beta():
    x = FreeHilbertModule(C3, 1)
    act = make_action(FiniteGroup.cyclic(2), x, [np.eye(3), np.eye(3)], beta=[np.eye(3), FLIP])
    with pytest.raises(NotDynamicalSystem) as exc:
        verify_action_compatibility(act)
    assert exc.value.witness == "inner_compatibility"


def test_cyclic_beta_need_not_be_involutive():
    m3 = FiniteCStarAlgebra([3])
    p = perm_alpha([1, 2, 0])
    x = FreeHilbertModule(m3, 1)
    beta = [inner_alpha_matrix(m3, [np.linalg.matrix_power(p, k)]) for k in range(3)]
    act = make_action(FiniteGroup.cyclic(3), x, beta)
    verify_action_compatibility(act)
    for b in act.beta:
        verify_automorphism(b, m3, involutive=False)


SHAPES = st.sampled_from([[1, 1, 1], [2], [1, 2]])


@given(SHAPES, st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_sesquilinear(blocks, rank, seed):
    rng = np.random.default_rng(seed)
    x = FreeHilbertModule(FiniteCStarAlgebra(blocks), rank)
    u, v, w = (x.random_coords(rng) for _ in range(3))
    g, m = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    assert np.allclose(x.inner(u, g * v + m * w), g * x.inner(u, v) + m * x.inner(u, w))
    assert np.allclose(x.algebra.star(x.inner(u, v)), x.inner(v, u))


@given(SHAPES, st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_module_identities(blocks, rank, seed):
    rng = np.random.default_rng(seed)
    alg = FiniteCStarAlgebra(blocks)
    x = FreeHilbertModule(alg, rank)
    u, v = x.random_coords(rng), x.random_coords(rng)
    a = alg.random_coords(rng)
    lhs = x.inner(u, x.right(v, a))
    assert np.allclose(lhs, alg.mul(x.inner(u, v), a), atol=1e-10)
    # <u, u> is positive in the algebra
    pos = block_matrix(blocks, x.inner(u, u))
    assert np.linalg.eigvalsh(0.5 * (pos + pos.conj().T))[0] >= -1e-10
    # Cauchy-Schwarz in the module norm
    assert alg.norm(x.inner(u, v)) <= x.norm(u) * x.norm(v) * (1 + 1e-10)

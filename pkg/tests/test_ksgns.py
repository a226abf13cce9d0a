import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdil.algebra import FiniteCStarAlgebra, identity_alpha
from kdil.errors import DimensionMismatch
from kdil.hmodule import FreeHilbertModule
from kdil.krein import KreinSpace, sharp_matrix
from kdil.ksgns import (
    conjugate_dilation,
    construct_ksgns,
    random_unitary,
    unitary_equivalence,
    verify_ksgns,
)
from kdil.maps import make_alpha_cp, make_phi_map, phi_map_from_factorization
from conftest import load
from oracles import choi_matrix, kraus_values, twisted_gram

FIXTURES = ["fix-a", "fix-b", "fix-c", "fix-e", "s3-flip", "m2-z2", "z3-m3", "s3-m3"]


def test_scalar_gns():
    inst = load("fix-a")
    dil = construct_ksgns(inst.Phi)
    assert dil.K1.dim == 1 and dil.K2.dim == 1
    assert np.allclose(np.abs(dil.V), [[1]])
    assert np.allclose(dil.pi_phi, [[[1]]])
    assert verify_ksgns(dil, inst.Phi).passed


def test_identity_channel_dims():
    inst = load("fix-b")
    dil = construct_ksgns(inst.Phi)
    g = twisted_gram([2], inst.alpha.matrix, inst.phi.values)
    assert g.shape == (8, 8)
    assert np.sum(np.linalg.eigvalsh(g) > 1e-10) == dil.K1.dim == 2
    assert dil.K2.dim == 2
    rep = verify_ksgns(dil, inst.Phi)
    assert rep.passed
    assert rep["reconstruct_phi"].residual <= 1e-9


def test_flip_dilation(flip):
    dil = construct_ksgns(flip.Phi)
    assert dil.K1.dim == 1 and dil.K2.dim == 1
    assert np.allclose(dil.K1.J, [[1]])
    assert np.allclose(dil.pi_phi_of([2.0, 3.0, 5.0]), [[3.0]])
    assert np.allclose(np.abs(dil.V), [[1]])
    rep = verify_ksgns(dil, flip.Phi)
    assert rep.passed and rep.info["dim_K1"] == 1
    assert max(rep.residuals().values()) <= 1e-9


def test_perturbed_v_is_reported(flip):
    dil = construct_ksgns(flip.Phi)
    bad = dataclasses.replace(dil, V=dil.V + 1e-3)
    rep = verify_ksgns(bad, flip.Phi)
    r = rep["reconstruct_phi"].residual
    assert not rep["reconstruct_phi"].passed
    assert 1.5e-3 < r < 2.5e-3


def test_zero_phi_map(flip):
    phi0 = dataclasses.replace(flip.phi, values=np.zeros((3, 1, 1), complex))
    zero = make_phi_map(flip.module, phi0, np.zeros((3, 2, 1)))
    dil = construct_ksgns(zero)
    assert dil.K1.dim == 0 and dil.K2.dim == 0
    assert verify_ksgns(dil, zero).passed


def test_phase_freedom(flip):
    d1 = construct_ksgns(flip.Phi)
    d2 = conjugate_dilation(d1, np.array([[1j]]), np.eye(1))
    eq = unitary_equivalence(d1, d2, flip.Phi)
    assert np.allclose(eq.U1, [[1j]])
    assert max(eq.report.residuals().values()) < 1e-14


def test_permuted_basis_identity_channel(rng):
    inst = load("fix-b")
    d1 = construct_ksgns(inst.Phi)
    R = random_unitary(2, rng)
    d2 = conjugate_dilation(d1, R, np.eye(2))
    eq = unitary_equivalence(d1, d2, inst.Phi)
    assert np.allclose(eq.U1, R)
    assert max(eq.report.residuals().values()) <= 1e-9


def test_dimension_mismatch(flip):
    d1 = construct_ksgns(flip.Phi)
    d2 = construct_ksgns(load("fix-b").Phi)
    with pytest.raises(DimensionMismatch):
        unitary_equivalence(d1, d2)


@pytest.mark.parametrize("name", FIXTURES)
def test_dilation_identities(name):
    inst = load(name)
    dil = construct_ksgns(inst.Phi)
    rep = verify_ksgns(dil, inst.Phi)
    assert rep.passed, [c.name for c in rep.failures]
    j1, j3, V = inst.h1.J, dil.K1.J, dil.V
    vs = sharp_matrix(V, j1, j3)
    for k in range(inst.algebra.dim):
        a = inst.phi.values[k]
        assert np.linalg.norm(a - vs @ dil.pi_phi[k] @ V, 2) <= 1e-10 + 1e-9 * np.linalg.norm(a, 2)
        alpha_a = np.einsum("k,kpq->pq", inst.alpha.matrix[:, k], dil.pi_phi)
        assert np.linalg.norm(alpha_a @ V - j3 @ dil.pi_phi[k] @ V @ j1, 2) <= 1e-9
    orbit = np.concatenate([p @ V for p in dil.pi_phi], axis=1)
    adj = np.concatenate([p.conj().T @ V for p in dil.pi_phi], axis=1)
    x_orbit = np.concatenate([p @ V for p in dil.pi_X], axis=1)
    assert np.linalg.matrix_rank(orbit, 1e-8) == dil.K1.dim == np.linalg.matrix_rank(adj, 1e-8)
    assert np.linalg.matrix_rank(x_orbit, 1e-8) == dil.K2.dim


@pytest.mark.parametrize("name", ["fix-b", "fix-c", "s3-flip", "z3-m3"])
def test_equivalence_is_symmetric(name):
    inst = load(name)
    d1 = construct_ksgns(inst.Phi)
    rng = np.random.default_rng(11)
    d2 = conjugate_dilation(d1, random_unitary(d1.K1.dim, rng), random_unitary(d1.K2.dim, rng))
    self_eq = unitary_equivalence(d1, d1, inst.Phi)
    assert max(self_eq.report.residuals().values()) <= 1e-9
    fwd = unitary_equivalence(d1, d2, inst.Phi)
    back = unitary_equivalence(d2, d1, inst.Phi)
    assert max(fwd.report.residuals().values()) <= 1e-9
    assert max(back.report.residuals().values()) <= 1e-9


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_classical_stinespring_dimension(n, d, nk, seed):
    rng = np.random.default_rng(seed)
    kraus = [rng.normal(size=(d, n)) + 1j * rng.normal(size=(d, n)) for _ in range(nk)]
    vals = kraus_values(n, kraus)
    alg = FiniteCStarAlgebra([n])
    phi = make_alpha_cp(alg, identity_alpha(alg), KreinSpace.hilbert(d), vals)
    Phi = phi_map_from_factorization(phi, FreeHilbertModule(alg, 1))
    dil = construct_ksgns(Phi)
    c = choi_matrix(n, vals)
    kraus_rank = int(np.sum(np.linalg.eigvalsh(c) > 1e-10 * max(1.0, np.abs(c).max())))
    assert dil.K1.dim == n * kraus_rank

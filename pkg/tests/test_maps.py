import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdil.algebra import (
    FiniteCStarAlgebra,
    alpha_fixed_split,
    identity_alpha,
    inner_alpha_matrix,
    verify_automorphism,
)
from kdil.errors import HypothesisViolated
from kdil.hmodule import FreeHilbertModule
from kdil.krein import KreinSpace
from kdil.ksgns import construct_ksgns
from kdil.maps import (
    alpha_gram,
    apply,
    build_from_dilation,
    generate_instances,
    make_alpha_cp,
    make_phi_map,
    verify_alpha_cp,
    verify_phi_map,
)
from conftest import load
from oracles import choi_matrix, kraus_values, perm_alpha, psd_by_minors, twisted_gram

C2 = FiniteCStarAlgebra([1, 1])
SWAP = verify_automorphism(perm_alpha([1, 0]), C2)


def m3_counterexample():
    m3 = FiniteCStarAlgebra([3])
    vals = []
    for k in range(9):
        x = m3.to_matrix(m3.basis_vector(k))
        vals.append(2 * np.trace(x) * np.eye(3) - x)
    return make_alpha_cp(m3, identity_alpha(m3), KreinSpace.hilbert(3), vals)


def test_apply_examples(flip):
    zero = make_alpha_cp(C2, SWAP, KreinSpace.hilbert(2), np.zeros((2, 2, 2)))
    assert np.allclose(apply(zero, [1.0, 2.0]), 0)
    assert np.allclose(apply(flip.phi, [2.0, 3.0, 5.0]), [[3.0]])
    b = load("fix-b")
    e12 = b.algebra.basis_vector(b.algebra.index(0, 0, 1))
    assert np.allclose(b.phi(e12), [[0, 1], [0, 0]])


def test_flip_gram(flip):
    g = alpha_gram(flip.phi)
    assert np.allclose(g, np.diag([0.0, 1.0, 0.0]))
    assert np.allclose(g, twisted_gram([1, 1, 1], flip.alpha.matrix, flip.phi.values))


def test_swap_mean_gram():
    d = load("fix-d")
    g = alpha_gram(d.phi)
    assert np.allclose(g, [[0, 0.5], [0.5, 0]])
    assert np.allclose(g, twisted_gram([1, 1], d.alpha.matrix, d.phi.values))


def test_scalar_gram():
    assert np.allclose(alpha_gram(load("fix-a").phi), [[1.0]])


def test_flip_domination(flip):
    rep = verify_alpha_cp(flip.phi, flip.samples)
    assert rep.passed
    sample = rep.info["domination"][flip.algebra.dim]
    assert abs(sample["M"] - 9) < 1e-12 and abs(sample["ratio"] - 9 / 25) < 1e-12


def test_m3_counterexample():
    rep = verify_alpha_cp(m3_counterexample())
    assert not rep["cond_ii_gram_psd"].passed
    assert abs(rep.info["min_gram_eigenvalue"] + 1) < 1e-8


def test_zero_map_passes():
    zero = make_alpha_cp(C2, SWAP, KreinSpace.hilbert(1), np.zeros((2, 1, 1)))
    rep = verify_alpha_cp(zero, [np.array([1.0, 2.0])])
    assert rep.passed
    assert all(b["M"] == 0 for b in rep.info["domination"])


def test_swap_mean_rejected():
    rep = verify_alpha_cp(load("fix-d").phi)
    assert rep.status == "fail"
    assert abs(rep.info["min_gram_eigenvalue"] + 0.5) < 1e-12


def test_phi_map_examples(flip):
    assert verify_phi_map(flip.Phi).passed
    x = flip.module
    zero_phi = make_alpha_cp(flip.algebra, flip.alpha, flip.h1, np.zeros((3, 1, 1)))
    assert verify_phi_map(make_phi_map(x, zero_phi, np.zeros((3, 2, 1)))).passed
    w = np.array([[0.6], [0.8]])
    bad = make_phi_map(x, flip.phi, [w, 0 * w, 0 * w])
    rep = verify_phi_map(bad)
    assert not rep.passed
    assert rep["phi_map_identity"].witness == [0, 0]
    assert abs(rep["phi_map_identity"].residual - 1) < 1e-12


def test_build_from_identity_dilation():
    m2 = FiniteCStarAlgebra([2])
    pi = [m2.to_matrix(e) for e in np.eye(4)]
    x = FreeHilbertModule(m2, 1)
    h = KreinSpace.hilbert(2)
    phi, Phi = build_from_dilation(m2, identity_alpha(m2), x, pi, pi, np.eye(2), np.eye(2), h, h)
    assert np.allclose(phi.values, pi) and np.allclose(Phi.values, pi)


def test_flip_dilation_round_trip(flip):
    dil = construct_ksgns(flip.Phi)
    phi, Phi = build_from_dilation(flip.algebra, flip.alpha, flip.module, dil.pi_phi, dil.pi_X,
                                   dil.V, dil.W, flip.h1, dil.K1)
    assert np.allclose(phi.values, flip.phi.values)
    assert np.allclose(Phi.values, flip.Phi.values)


def test_build_rejects_bad_twist():
    s = load("s3-flip")
    dil = construct_ksgns(s.Phi)
    with pytest.raises(HypothesisViolated):
        build_from_dilation(s.algebra, s.alpha, s.module, dil.pi_phi, dil.pi_X, dil.V + 1e-3, dil.W,
                            s.h1, dil.K1)


def test_generator_for_identity_alpha_gives_cp_maps():
    for n in (1, 2):
        alg = FiniteCStarAlgebra([n])
        for phi in generate_instances(alg, identity_alpha(alg), KreinSpace.hilbert(2), seed=n, count=5):
            c = choi_matrix(n, phi.values)
            assert np.linalg.eigvalsh(0.5 * (c + c.conj().T))[0] >= -1e-9


def test_generator_swap_is_rigid():
    out = generate_instances(C2, SWAP, KreinSpace.hilbert(1), seed=0, count=3)
    assert len(out) == 1 and out[0].meta["rigid"]
    assert np.all(out[0].values == 0)


def test_generator_flip_is_evaluation_at_fixed_point(flip):
    for phi in generate_instances(flip.algebra, flip.alpha, KreinSpace.hilbert(1), seed=5, count=10):
        assert abs(phi.values[0, 0, 0]) < 1e-9 and abs(phi.values[2, 0, 0]) < 1e-9
        assert phi.values[1, 0, 0].real > 0


def test_inner_twist_on_m2_is_rigid():
    m2 = FiniteCStarAlgebra([2])
    u = np.diag([1.0, -1.0])
    alpha = verify_automorphism(inner_alpha_matrix(m2, [u]), m2)
    # condition (i) leaves phi = x E11* + y E22*; the twisted Gram is never PSD off zero
    for th in np.linspace(0, 2 * np.pi, 73):
        vals = np.zeros((4, 1, 1), complex)
        vals[0], vals[3] = np.cos(th), np.sin(th)
        assert np.linalg.eigvalsh(twisted_gram([2], alpha.matrix, vals))[0] < -0.7
    for d in (1, 2):
        out = generate_instances(m2, alpha, KreinSpace.hilbert(d), seed=2, count=3)
        assert len(out) == 1 and out[0].meta["rigid"]


def test_generated_maps_vanish_on_odd_part():
    alg = FiniteCStarAlgebra([1, 2])
    alpha = verify_automorphism(inner_alpha_matrix(alg, [np.eye(1), np.diag([1.0, -1.0])]), alg)
    odd = [alg.index(1, 0, 1), alg.index(1, 1, 0)]
    out = generate_instances(alg, alpha, KreinSpace.hilbert(2), seed=2, count=5)
    assert len(out) == 5
    for phi in out:
        assert not phi.meta["rigid"] and verify_alpha_cp(phi).passed
        assert np.allclose(phi.values[odd], 0, atol=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_phi_map_residual_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    inst = load("fix-b")
    u, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    moved = make_phi_map(inst.module, inst.phi, np.einsum("ab,kbc->kac", u, inst.Phi.values))
    assert abs(verify_phi_map(moved)["phi_map_identity"].residual
               - verify_phi_map(inst.Phi)["phi_map_identity"].residual) < 1e-12


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.floats(0, 1.5), st.integers(0, 2**32 - 1))
def test_classical_choi_agreement(n, d, nk, s, seed):
    rng = np.random.default_rng(seed)
    kraus = [rng.normal(size=(d, n)) + 1j * rng.normal(size=(d, n)) for _ in range(nk)]
    vals = kraus_values(n, kraus)
    if d == n:
        # subtracting a multiple of the transpose map leaves the CP cone for large s
        vals = vals - s * np.array([e.T for e in kraus_values(n, [np.eye(n)])])
    alg = FiniteCStarAlgebra([n])
    phi = make_alpha_cp(alg, identity_alpha(alg), KreinSpace.hilbert(d), vals)
    c = choi_matrix(n, vals)
    w = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
    if abs(w[0]) < 1e-7:
        return  # too close to the boundary to call
    assert verify_alpha_cp(phi).passed == (w[0] > 0) == psd_by_minors(c, 1e-12)


def test_condition_one_implies_vanishing_on_odd_part():
    for name in ("fix-c", "fix-e", "s3-flip"):
        inst = load(name)
        _, minus = alpha_fixed_split(inst.alpha)
        for v in minus.T:
            assert np.allclose(inst.phi(v), 0)

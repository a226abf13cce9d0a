"""Named example instances, as JSON-ready dicts.

``fix-a`` .. ``fix-e`` are the shipped fixtures; the other presets are the
larger group examples used by the test-suite.  ``random`` draws a generated
instance from a seed.
"""

from __future__ import annotations

import numpy as np

from .algebra import FiniteCStarAlgebra, inner_alpha_matrix, permutation_alpha_matrix, verify_automorphism
from .covariant import FiniteGroup, permutation_sign
from .hmodule import FreeHilbertModule
from .krein import KreinSpace
from .maps import generate_phi_instances
from .serialize import encode_matrix, encode_table, encode_vector

W_VEC = np.array([0.6, 0.8])
R_MAT = 2 * np.outer(W_VEC, W_VEC) - np.eye(2)  # reflection fixing w


def _alg(blocks, alpha=None) -> dict:
    return {"blocks": list(blocks), "alpha": alpha or {"kind": "identity"}}


def _units(n: int) -> list[np.ndarray]:
    alg = FiniteCStarAlgebra([n])
    return [alg.to_matrix(alg.basis_vector(i)) for i in range(alg.dim)]


def _perm_mat(p) -> np.ndarray:
    return np.eye(len(p))[:, list(p)]


def fix_a() -> dict:
    """Scalars: phi = id on C, Phi = id on X = C."""
    one = encode_matrix([[1.0]])
    return {
        "algebra": _alg([1]),
        "h1": {"dim": 1},
        "h2": {"dim": 1},
        "module": {"rank": 1},
        "phi": {"values": [one]},
        "Phi": {"values": [one]},
        "samples": [encode_vector([2.0])],
    }


def fix_b() -> dict:
    """Identity channel on M2 with X = M2 and Phi(x) = x."""
    units = [encode_matrix(e) for e in _units(2)]
    return {
        "algebra": _alg([2]),
        "h1": {"dim": 2},
        "h2": {"dim": 2},
        "module": {"rank": 1},
        "phi": {"values": units},
        "Phi": {"values": units},
        "samples": [encode_vector([1.0, 2.0, 0.5, -1.0])],
    }


def fix_c() -> dict:
    """Three-point flip: alpha reverses C^3, phi(a) = a_2, Phi(x) = x_2 w."""
    phi = [[[0.0]], [[1.0]], [[0.0]]]
    Phi = [np.zeros((2, 1)), W_VEC.reshape(2, 1), np.zeros((2, 1))]
    return {
        "algebra": _alg([1, 1, 1], {"kind": "permutation", "perm": [2, 1, 0]}),
        "h1": {"dim": 1},
        "h2": {"dim": 2},
        "module": {"rank": 1},
        "phi": {"values": [encode_matrix(m) for m in phi]},
        "Phi": {"values": [encode_matrix(m) for m in Phi]},
        "samples": [encode_vector([2.0, 3.0, 5.0])],
    }


def fix_d() -> dict:
    """Swap on C^2 with phi = mean: a phi-map exists but phi is not alpha-CP."""
    s = 1 / np.sqrt(2)
    return {
        "algebra": _alg([1, 1], {"kind": "permutation", "perm": [1, 0]}),
        "h1": {"dim": 1},
        "h2": {"dim": 2},
        "module": {"rank": 1},
        "phi": {"values": [encode_matrix([[0.5]]), encode_matrix([[0.5]])]},
        "Phi": {"values": [encode_matrix([[s], [0.0]]), encode_matrix([[0.0], [s]])]},
        "samples": [encode_vector([1.0, -1.0])],
    }


def fix_e() -> dict:
    """fix-c with Z2 acting by the flip on X; u trivial, u' = (I, reflection)."""
    inst = fix_c()
    flip = {"kind": "permutation", "perm": [2, 1, 0]}
    inst.update({
        "group": {"table": [[0, 1], [1, 0]]},
        "beta": [{"kind": "identity"}, flip],
        "eta": [encode_matrix(np.eye(3)), encode_matrix(_perm_mat([2, 1, 0]))],
        "u": [encode_matrix([[1.0]])] * 2,
        "uprime": [encode_matrix(np.eye(2)), encode_matrix(R_MAT)],
    })
    return inst


def s3_flip() -> dict:
    """S3 on C^3 through the sign: odd permutations flip, J1 = diag(1, -1)."""
    g = FiniteGroup.symmetric(3)
    sg = [permutation_sign(p) for p in g.labels]
    flip = {"kind": "permutation", "perm": [2, 1, 0]}
    e11 = np.diag([1.0, 0.0])
    phi = [np.zeros((2, 2)), e11, np.zeros((2, 2))]
    col = np.zeros((2, 2))
    col[:, 0] = W_VEC
    Phi = [np.zeros((2, 2)), col, np.zeros((2, 2))]
    return {
        "algebra": _alg([1, 1, 1], flip),
        "h1": {"dim": 2, "J": encode_matrix(np.diag([1.0, -1.0]))},
        "h2": {"dim": 2},
        "module": {"rank": 1},
        "phi": {"values": [encode_matrix(m) for m in phi]},
        "Phi": {"values": [encode_matrix(m) for m in Phi]},
        "samples": [encode_vector([2.0, 3.0, 5.0])],
        "group": {"table": [list(r) for r in g.table]},
        "beta": [flip if s < 0 else {"kind": "identity"} for s in sg],
        "u": [encode_matrix(np.diag([1.0, float(s)])) for s in sg],
        "uprime": [encode_matrix(R_MAT if s < 0 else np.eye(2)) for s in sg],
    }


def _inner_example(n: int, group: FiniteGroup, unitaries) -> dict:
    units = [encode_matrix(e) for e in _units(n)]
    us = [encode_matrix(u) for u in unitaries]
    return {
        "algebra": _alg([n]),
        "h1": {"dim": n},
        "h2": {"dim": n},
        "module": {"rank": 1},
        "phi": {"values": units},
        "Phi": {"values": units},
        "group": {"table": [list(r) for r in group.table]},
        "beta": [{"kind": "inner", "unitaries": [u]} for u in us],
        "u": us,
        "uprime": us,
    }


def m2_z2() -> dict:
    """Z2 on M2 by conjugation with the swap."""
    swap = _perm_mat([1, 0])
    return _inner_example(2, FiniteGroup.cyclic(2), [np.eye(2), swap])


def z3_m3() -> dict:
    """Z3 on M3 by the cyclic shift."""
    p = _perm_mat([1, 2, 0])
    return _inner_example(3, FiniteGroup.cyclic(3), [np.linalg.matrix_power(p, k) for k in range(3)])


def s3_m3() -> dict:
    """S3 on M3 by permutation matrices."""
    g = FiniteGroup.symmetric(3)
    return _inner_example(3, g, [_perm_mat(p) for p in g.labels])


RANDOM_SHAPES = (
    ([1, 1, 1], {"kind": "permutation", "perm": [2, 1, 0]}, [1.0, -1.0]),
    ([2], {"kind": "identity"}, [1.0, -1.0]),
    ([1, 2], {"kind": "inner", "unitaries": [np.eye(1), np.diag([1.0, -1.0])]}, [1.0, -1.0]),
)


def random_instance(seed: int = 0) -> dict:
    """A generated alpha-CP map with a phi-map on X = A, chosen by ``seed``."""
    rng = np.random.default_rng(seed)
    blocks, alpha_spec, jdiag = RANDOM_SHAPES[int(rng.integers(len(RANDOM_SHAPES)))]
    alg = FiniteCStarAlgebra(blocks)
    if alpha_spec["kind"] == "identity":
        amat, spec = np.eye(alg.dim), dict(alpha_spec)
    elif alpha_spec["kind"] == "permutation":
        amat = permutation_alpha_matrix(alg, alpha_spec["perm"])
        spec = dict(alpha_spec)
    else:
        amat = inner_alpha_matrix(alg, alpha_spec["unitaries"])
        spec = {"kind": "inner", "unitaries": [encode_matrix(u) for u in alpha_spec["unitaries"]]}
    alpha = verify_automorphism(amat, alg)
    space = KreinSpace(len(jdiag), np.diag(np.array(jdiag, dtype=complex)))
    module = FreeHilbertModule(alg, 1)
    Phi = generate_phi_instances(alg, alpha, space, module, seed=seed)[0]
    sample = rng.normal(size=alg.dim) + 1j * rng.normal(size=alg.dim)
    h1 = {"dim": space.dim}
    if not space.is_hilbert:
        h1["J"] = encode_matrix(space.J)
    return {
        "algebra": _alg(blocks, spec),
        "h1": h1,
        "h2": {"dim": Phi.h2.dim},
        "module": {"rank": 1},
        "phi": {"values": encode_table(Phi.phi.values)},
        "Phi": {"values": encode_table(Phi.values)},
        "samples": [encode_vector(sample)],
        "seed": int(seed),
    }


PRESETS = {
    "fix-a": fix_a,
    "fix-b": fix_b,
    "fix-c": fix_c,
    "fix-d": fix_d,
    "fix-e": fix_e,
    "s3-flip": s3_flip,
    "m2-z2": m2_z2,
    "z3-m3": z3_m3,
    "s3-m3": s3_m3,
}


def preset(name: str, seed: int = 0) -> dict:
    if name == "random":
        return random_instance(seed)
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS) + ['random']}") from None

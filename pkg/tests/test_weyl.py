import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_local, random_su2
from spingates.errors import ContractError
from spingates.gates import named_gate
from spingates.weyl import (SWAP, WeylPoint, canonical_gate, canonicalize, closest_local_factorization, f_nl,
                            f_nl_chamber, local_invariants, rotation_vector, su2_from_vector,
                            swap_equivalence_check, weyl_coordinates)

HP = np.pi / 2
CNOT = named_gate("cnnote").matrix


def close(p, q, tol=1e-9):
    return np.allclose(np.asarray(tuple(p)), np.asarray(tuple(q)), atol=tol)


@pytest.mark.parametrize("name,point", [
    ("cenotn", (HP, 0, 0)), ("cnnote", (HP, 0, 0)), ("swap", (HP, HP, HP)),
    ("hadamard_e", (0, 0, 0)), ("hadamard_n", (0, 0, 0)),
])
def test_named_gate_points(name, point):
    assert close(weyl_coordinates(named_gate(name).matrix), point)


def test_known_classes():
    sqrt_swap = canonical_gate(np.pi / 4, np.pi / 4, np.pi / 4)
    assert close(weyl_coordinates(sqrt_swap), (np.pi / 4,) * 3)
    iswap = np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]])
    assert close(weyl_coordinates(iswap), (HP, HP, 0))
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    assert close(weyl_coordinates(cz), (HP, 0, 0))
    assert close(weyl_coordinates(np.eye(4)), (0, 0, 0))


def test_mirror_points_are_distinct():
    # (a, b, c) and (a, b, -c) are different classes inside the chamber
    a = weyl_coordinates(canonical_gate(1.0, 0.6, 0.3))
    b = weyl_coordinates(canonical_gate(1.0, 0.6, -0.3))
    assert close(a, (1.0, 0.6, 0.3)) and close(b, (1.0, 0.6, -0.3))
    assert not np.allclose(local_invariants(canonical_gate(1.0, 0.6, 0.3))[0],
                           local_invariants(canonical_gate(1.0, 0.6, -0.3))[0])


def test_canonicalize_face_identification():
    assert close(canonicalize([HP, 0.4, -0.2]), (HP, 0.4, 0.2))
    assert close(canonicalize([np.pi + 0.3, 0.2, 0.1]), (0.3, 0.2, 0.1))
    p = canonicalize([-0.9, 0.5, 0.2])  # one sign flip -> c3 takes the sign
    assert close(p, (0.9, 0.5, -0.2))


def test_random_dressings_keep_coordinates():
    rng = np.random.default_rng(5)
    for name in ("cenotn", "swap", "hadamard_e"):
        v = named_gate(name).matrix
        ref = weyl_coordinates(v)
        for _ in range(20):
            u = random_local(rng) @ v @ random_local(rng) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            assert close(weyl_coordinates(u), ref, 1e-8)


def test_nonlocal_fidelity_values():
    swap = WeylPoint(HP, HP, HP)
    assert f_nl(swap, np.eye(4)) == pytest.approx(2 ** -1.5, abs=1e-12)
    assert f_nl(swap, CNOT) == pytest.approx(0.5, abs=1e-12)
    assert f_nl(swap, SWAP) == pytest.approx(1.0, abs=1e-12)
    assert f_nl_chamber(swap, np.eye(4)) == pytest.approx(2 ** -1.5, abs=1e-12)


def test_nonlocal_fidelity_is_continuous_across_the_c3_face():
    target = WeylPoint(HP, HP, HP)
    a = f_nl(target, canonical_gate(HP - 1e-7, 0.5, 0.2))
    b = f_nl(target, canonical_gate(HP - 1e-7, 0.5, -0.2))
    assert a == pytest.approx(b, abs=1e-6)


def test_factorization_of_product():
    rng = np.random.default_rng(8)
    k1, k2 = random_su2(rng), random_su2(rng)
    fac = closest_local_factorization(np.kron(k1, k2))
    assert fac.cost < 1e-14
    assert np.allclose(np.kron(fac.k1, fac.k2), np.kron(k1, k2), atol=1e-10)


def test_factorization_of_cnot_reaches_optimum():
    # best product overlap with CNOT is |Tr|^2 / 16 = 1/2
    assert closest_local_factorization(CNOT).cost == pytest.approx(0.5, abs=1e-9)


def test_swap_equivalence_check():
    rng = np.random.default_rng(9)
    u = random_local(rng) @ SWAP @ random_local(rng)
    assert swap_equivalence_check(u).cost <= 1e-10
    assert swap_equivalence_check(CNOT).cost > 0.1


def test_rotation_vector_round_trip():
    rng = np.random.default_rng(10)
    for _ in range(20):
        n = rng.normal(size=3)
        n *= rng.uniform(0, np.pi - 1e-3) / np.linalg.norm(n)
        assert np.allclose(rotation_vector(su2_from_vector(n)), n, atol=1e-9)
    assert np.allclose(rotation_vector(np.eye(2)), 0)


def test_non_unitary_is_rejected():
    with pytest.raises(ContractError):
        weyl_coordinates(np.ones((4, 4)))
    with pytest.raises(ContractError):
        weyl_coordinates(np.eye(3))


@settings(max_examples=40, deadline=None)
@given(st.floats(0, HP), st.floats(0, HP), st.floats(0, HP), st.integers(0, 2 ** 32 - 1))
def test_chamber_points_round_trip(a, b, c, seed):
    c1, c2, c3 = sorted([a, b, c], reverse=True)
    rng = np.random.default_rng(seed)
    sign = 1 if c1 >= HP - 1e-9 else rng.choice([-1, 1])
    u = random_local(rng) @ canonical_gate(c1, c2, sign * c3) @ random_local(rng)
    got = weyl_coordinates(u)
    assert close(got, (c1, c2, sign * c3), 1e-6)
    assert f_nl(got, u) == pytest.approx(1.0, abs=1e-9)

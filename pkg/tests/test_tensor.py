import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoforge.errors import CapacityError, DimensionError, ValidationError
from isoforge.tensor import (
    PartySubset,
    PureState,
    Shape,
    Subspace,
    apply_isometry,
    basis_state,
    capacity,
    linear_index,
    multi_index,
    oracle_reduce,
    permute_parties,
    random_state,
    random_unitary,
    reduce,
    reduce_cross,
    tensor_product,
)

from conftest import small_dims


def ghz(n, d=2):
    amps = np.zeros(d**n, dtype=complex)
    for k in range(d):
        amps[linear_index((d,) * n, [k] * n)] = 1
    return PureState.normalized((d,) * n, amps)


def test_shape_rejects_trivial_parties():
    with pytest.raises(ValidationError):
        Shape((2, 1, 3))
    with pytest.raises(ValidationError):
        Shape(())


def test_shape_str():
    assert str(Shape((2, 3, 3, 3, 3, 3))) == "C^2⊗(C^3)^5"


def test_linear_index_examples():
    assert linear_index((2, 3), [1, 2]) == 5
    assert linear_index((3, 2, 2), [2, 0, 1]) == 9
    assert multi_index((3, 2, 2), 9) == (2, 0, 1)


def test_index_out_of_range():
    with pytest.raises(IndexError):
        linear_index((2, 3), [0, 3])
    with pytest.raises(IndexError):
        multi_index((2, 3), 6)


@given(small_dims(1, 5, 5, 2000), st.data())
def test_index_roundtrip_matches_numpy(dims, data):
    j = data.draw(st.integers(0, int(np.prod(dims)) - 1))
    m = multi_index(dims, j)
    assert m == tuple(int(v) for v in np.unravel_index(j, dims))
    assert linear_index(dims, m) == j


def test_party_subset_sorted_and_validated():
    assert PartySubset([3, 1]) == (1, 3)
    with pytest.raises(ValidationError):
        PartySubset([1, 1])
    with pytest.raises(ValidationError):
        PartySubset([0, 4]).check(3)
    assert PartySubset([0, 2]).complement(4) == (1, 3)


def test_state_norm_checked():
    with pytest.raises(ValidationError):
        PureState(Shape((2, 2)), np.array([1, 1, 0, 0], dtype=complex))
    s = PureState.normalized((2, 2), [1, 1, 0, 0])
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0  # read-only


def test_subspace_orthonormality_checked():
    with pytest.raises(ValidationError):
        Subspace(Shape((2,)), np.array([[1, 0], [1, 0]], dtype=complex))


def test_bell_reduction_maximally_mixed():
    bell = PureState.normalized((2, 2), [1, 0, 0, 1])
    assert np.allclose(reduce(bell, [0]).matrix, np.eye(2) / 2, atol=1e-15)


def test_ghz_reductions():
    s = ghz(3)
    assert np.max(np.abs(reduce(s, [0]).matrix - np.eye(2) / 2)) < 1e-15
    rho = reduce(s, [0, 1]).matrix
    # diag(1/2, 0, 0, 1/2) against I/4
    assert np.isclose(np.max(np.abs(rho - np.eye(4) / 4)), 0.25)


@given(small_dims(2, 4, 4, 300), st.integers(0, 2**32 - 1), st.data())
def test_reduce_matches_oracle(dims, seed, data):
    s = random_state(dims, np.random.default_rng(seed))
    S = data.draw(st.lists(st.integers(0, len(dims) - 1), min_size=1, max_size=len(dims) - 1, unique=True))
    assert np.max(np.abs(reduce(s, S).matrix - oracle_reduce(s, S).matrix)) < 1e-12


@given(small_dims(2, 4, 4, 300), st.integers(0, 2**32 - 1))
def test_reduction_is_density_matrix(dims, seed):
    s = random_state(dims, np.random.default_rng(seed))
    rho = reduce(s, [0]).matrix
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.allclose(rho, rho.conj().T, atol=1e-14)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12


@given(small_dims(2, 3, 3, 50), small_dims(1, 2, 3, 10), st.integers(0, 2**32 - 1))
def test_product_state_reduces_to_factor(da, db, seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(da, rng), random_state(db, rng)
    ab = tensor_product(a, b)
    left = list(range(len(da)))
    want = np.outer(a.amplitudes, a.amplitudes.conj())
    assert np.max(np.abs(reduce(ab, left).matrix - want)) < 1e-12


@given(small_dims(2, 4, 4, 300), st.integers(0, 2**32 - 1), st.data())
def test_permutation_equivariance(dims, seed, data):
    s = random_state(dims, np.random.default_rng(seed))
    perm = data.draw(st.permutations(range(len(dims))))
    t = permute_parties(s, perm)
    inv = [perm.index(k) for k in range(len(dims))]
    assert np.array_equal(permute_parties(t, inv).amplitudes, s.amplitudes)
    # reduction on new party k equals reduction on old party perm[k]
    for k in range(len(dims)):
        assert np.max(np.abs(reduce(t, [k]).matrix - reduce(s, [perm[k]]).matrix)) < 1e-12


def test_reduce_cross_basis_states():
    a, b = basis_state((2, 2), [0, 0]), basis_state((2, 2), [1, 0])
    assert np.allclose(reduce_cross(a, b, [0]).matrix, [[0, 1], [0, 0]])
    # orthogonal on the traced party: the cross term vanishes
    c = basis_state((2, 2), [1, 1])
    assert np.allclose(reduce_cross(a, c, [0]).matrix, 0)


def test_apply_isometry_norm_and_shape(rng):
    s = random_state((2, 3), rng)
    U = random_unitary(6, rng)[:3]  # 3 orthonormal rows in C^6
    V = Subspace(Shape((2, 3)), U)
    out = apply_isometry(V, s, [1])
    assert out.dims == (2, 2, 3)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_apply_isometry_too_small():
    V = Subspace(Shape((2, 2)), np.eye(4)[:2])
    with pytest.raises(DimensionError):
        apply_isometry(V, basis_state((3, 3), [0, 0]), [1])


def test_apply_isometry_is_embedding(rng):
    # acting with the identity-embedding of C^3 into C^4 keeps amplitudes
    V = Subspace(Shape((4,)), np.eye(4)[:3])
    s = random_state((2, 3), rng)
    out = apply_isometry(V, s, [1])
    T = out.tensor()
    assert np.allclose(T[:, :3], s.tensor()) and np.allclose(T[:, 3], 0)


def test_random_unitary_is_unitary(rng):
    U = random_unitary(5, rng)
    assert np.max(np.abs(U @ U.conj().T - np.eye(5))) < 1e-12


def test_capacity_env(monkeypatch):
    assert capacity() == 2**24
    monkeypatch.setenv("FORGE_CAPACITY", "100")
    assert capacity() == 100
    with pytest.raises(CapacityError):
        tensor_product(ghz(4), ghz(4))


def test_oracle_guard():
    s = ghz(14)
    with pytest.raises(CapacityError):
        oracle_reduce(s, [0])


def test_all_subsets_of_bell_pairs():
    # |Bell>_{02} |Bell>_{13} is 2-uniform on 4 qubits? No: {0,2} is pure.
    bell = PureState.normalized((2, 2), [1, 0, 0, 1])
    s = permute_parties(tensor_product(bell, bell), [0, 2, 1, 3])
    devs = {S: np.max(np.abs(reduce(s, S).matrix - np.eye(4) / 4)) for S in itertools.combinations(range(4), 2)}
    assert devs[(0, 1)] < 1e-15 and devs[(0, 2)] > 0.1

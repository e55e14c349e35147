import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoforge.codes import WeylOperator, weyl_matrix
from isoforge.constructors import me_state, me_subspace
from isoforge.errors import CapacityError, PreconditionError, ValidationError
from isoforge.registry import registry_materialize as code
from isoforge.tensor import PureState, Shape, Subspace, basis_state, random_state, reduce
from isoforge.verify import (
    is_prop_identity,
    max_uniformity,
    me_subspace_check,
    qmds_projector_check,
    state_uniformity,
    subspace_uniformity,
    verify_pure_code,
)

from conftest import small_dims


def brute_purity(W, d):
    """max |<psi_i|E|psi_j>| over every Weyl E of weight 1..d-1, using dense matrices."""
    worst = 0.0
    n = W.n
    for w in range(1, d):
        for sub in itertools.combinations(range(n), w):
            ranges = [range(W.dims[k]) for k in sub]
            for a in itertools.product(*ranges):
                for b in itertools.product(*ranges):
                    if any(x == 0 and z == 0 for x, z in zip(a, b)):
                        continue
                    x, z = [0] * n, [0] * n
                    for k, ak, bk in zip(sub, a, b):
                        x[k], z[k] = ak, bk
                    E = weyl_matrix(WeylOperator(W.shape, x, z)).toarray()
                    M = W.basis.conj() @ E @ W.basis.T
                    worst = max(worst, float(np.max(np.abs(M))))
    return worst


def random_subspace(dims, K, rng):
    N = int(np.prod(dims))
    A = rng.normal(size=(N, K)) + 1j * rng.normal(size=(N, K))
    Q, _ = np.linalg.qr(A)
    return Subspace(Shape(tuple(dims)), Q.T)


# -- purity: fast path against the dense oracle ---------------------------------------


@pytest.mark.parametrize("name,d", [("[[5,1,3]]_2", 3), ("((4,4,2))_2", 2), ("[[4,0,3]]_3", 3), ("((5,3,3))_3", 3)])
def test_purity_matches_dense_oracle_on_codes(name, d):
    W = code(name)
    rep = verify_pure_code(W, d)
    assert rep.passed
    assert abs(rep.max_deviation - brute_purity(W, d)) < 1e-12


@settings(max_examples=15)
@given(small_dims(2, 3, 3, 27), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_purity_matches_dense_oracle_random(dims, K, seed):
    rng = np.random.default_rng(seed)
    K = min(K, int(np.prod(dims)))
    W = random_subspace(dims, K, rng)
    d = len(dims)  # errors of weight up to n-1
    rep = verify_pure_code(W, d)
    assert abs(rep.max_deviation - brute_purity(W, d)) < 1e-10


def test_purity_worst_operator_is_attained():
    W = code("[[5,1,3]]_2")
    rep = verify_pure_code(W, 4)  # distance 4 is false: some weight-3 operator is a logical
    assert not rep.passed and rep.max_deviation > 0.5
    op = rep.worst
    E = weyl_matrix(WeylOperator(W.shape, op["x"], op["z"])).toarray()
    val = np.max(np.abs(W.basis.conj() @ E @ W.basis.T))
    assert abs(val - rep.max_deviation) < 1e-12
    assert sum(1 for x, z in zip(op["x"], op["z"]) if x or z) == 3


def test_purity_threads_same_result():
    W = code("((5,3,3))_3")
    a, b = verify_pure_code(W, 3), verify_pure_code(W, 3, threads=4)
    assert a.to_dict() == b.to_dict()


def test_purity_argument_checks():
    W = code("[[5,1,3]]_2")
    with pytest.raises(ValidationError):
        verify_pure_code(W, 1)
    with pytest.raises(ValidationError):
        verify_pure_code(W, 7)


# -- state uniformity ----------------------------------------------------------------------


def test_bell_ghz_product():
    assert state_uniformity(me_state(2), 1).passed
    ghz = PureState(Shape((2, 2, 2)), np.array([1, 0, 0, 0, 0, 0, 0, 1]) / np.sqrt(2))
    assert state_uniformity(ghz, 1).passed
    rep = state_uniformity(random_state((2,) * 4, np.random.default_rng(0)), 2)
    assert not rep.passed
    prod = basis_state((2, 2), (0, 0))
    rep = state_uniformity(prod, 1)
    assert not rep.passed and abs(rep.max_deviation - 0.5) < 1e-12


def test_ghz_four_qubits_not_two_uniform():
    ghz = np.zeros(16)
    ghz[0] = ghz[15] = 1 / np.sqrt(2)
    rep = state_uniformity(PureState(Shape((2,) * 4), ghz), 2)
    assert not rep.passed
    assert abs(rep.max_deviation - 0.25) < 1e-12  # |rho_00,00 - 1/4| = |1/2 - 1/4|


@given(small_dims(2, 5, 4, 400), st.integers(0, 2**32 - 1), st.data())
def test_state_uniformity_against_oracle(dims, seed, data):
    s = random_state(dims, np.random.default_rng(seed))
    r = data.draw(st.integers(1, len(dims) - 1))
    rep = state_uniformity(s, r)
    worst = 0.0
    for S in itertools.combinations(range(len(dims)), r):
        rho = reduce(s, S).matrix
        dS = rho.shape[0]
        worst = max(worst, float(np.max(np.abs(rho - np.eye(dS) / dS))))
    # for oversized subsets the verifier reports at least 1/dS, never less than the oracle
    assert rep.max_deviation >= worst - 1e-12
    assert rep.subset_count == len(list(itertools.combinations(range(len(dims)), r)))


def test_infeasible_note():
    rep = state_uniformity(me_state(2, 3), 1)
    assert not rep.passed and rep.note and rep.note.startswith("infeasible")


def test_max_uniformity():
    assert max_uniformity(me_state(3)) == 1
    assert max_uniformity(basis_state((2, 2, 2), (0, 0, 0))) == 0
    ame = code("[[6,0,4]]_3").state(0)
    assert max_uniformity(ame) == 3


def test_report_is_deterministic_json():
    W = code("((5,3,3))_3")
    a = json.dumps(subspace_uniformity(W, 2).to_dict(), sort_keys=True)
    b = json.dumps(subspace_uniformity(W, 2).to_dict(), sort_keys=True)
    assert a == b and "wall_time" not in a
    assert "wall_time" in subspace_uniformity(W, 2).to_dict(timing=True)


# -- subspace uniformity -------------------------------------------------------------------


def test_span_00_11_fails_cross_condition():
    W = Subspace(Shape((2, 2)), np.eye(4)[[0, 3]])
    rep = subspace_uniformity(W, 1)
    assert not rep.passed
    # each basis vector is a product state, so the diagonal condition also fails
    assert rep.records[0]["diag"] > 0.4


def test_bell_basis_subspace_cross_terms():
    # two orthogonal Bell states: each is 1-uniform, but the cross term is not zero
    phi_p = np.array([1, 0, 0, 1]) / np.sqrt(2)
    phi_m = np.array([1, 0, 0, -1]) / np.sqrt(2)
    W = Subspace(Shape((2, 2)), np.array([phi_p, phi_m]))
    rep = subspace_uniformity(W, 1)
    assert not rep.passed
    assert rep.records[0]["diag"] < 1e-12 and rep.records[0]["offdiag"] > 0.4


@pytest.mark.parametrize("name", ["[[5,1,3]]_2", "((4,4,2))_2", "((5,3,3))_3", "[[6,2,3]]_3"])
def test_pure_codes_are_uniform(name):
    W = code(name)
    assert subspace_uniformity(W, W.uniformity).passed


def test_qmds_projector():
    assert qmds_projector_check(code("((5,3,3))_3"), 3).passed
    with pytest.raises(PreconditionError):
        qmds_projector_check(code("((12,16,3))_2"), 3)


def test_me_subspace_check():
    assert me_subspace_check(me_subspace(9), trials=10).passed
    bad = Subspace(Shape((2, 3)), np.eye(6)[[0, 4]])
    assert not me_subspace_check(bad, trials=5).passed


def test_is_prop_identity():
    assert is_prop_identity(3 * np.eye(4))[0]
    ok, dev = is_prop_identity(np.diag([1.0, 0.0]))
    assert not ok and abs(dev - 0.5) < 1e-15
    with pytest.raises(ValidationError):
        is_prop_identity(np.ones((2, 3)))


def test_capacity_cap_applies(monkeypatch):
    monkeypatch.setenv("FORGE_CAPACITY", "100")
    with pytest.raises(CapacityError):
        subspace_uniformity(code("((5,3,3))_3"), 2)

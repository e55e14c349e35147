"""Compositional constructions of r-uniform states and subspaces.

Subspaces carry a ``uniformity`` claim which is always a lower bound
guaranteed by the construction; the verifier is what certifies it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError, ValidationError
from .tensor import (
    ORTHO_TOL,
    PartySubset,
    PureState,
    Shape,
    Subspace,
    apply_isometry_array,
    check_capacity,
    permute_tensor,
)

__all__ = [
    "CombinePrediction",
    "glue",
    "eliminate",
    "partial_contractions",
    "split",
    "merge",
    "permute",
    "apply",
    "me_state",
    "me_subspace",
    "combine",
    "combine_eliminate",
    "predict_combine",
    "predict_combine_eliminate",
    "predict_corollary1",
    "feasibility_check",
    "is_qmds",
]


def _as_subspace(obj) -> Subspace:
    if isinstance(obj, Subspace):
        return obj
    if isinstance(obj, PureState):
        return obj.as_subspace()
    if hasattr(obj, "materialize"):
        return obj.materialize()
    raise ValidationError(f"expected a state, subspace or code entry, got {type(obj).__name__}")


def _like(template, shape: Shape, basis: np.ndarray, uniformity=None, name=None):
    """Return a PureState if ``template`` was one, else a Subspace."""
    if isinstance(template, PureState):
        return PureState(shape, basis.reshape(-1))
    return Subspace(shape, basis, uniformity, name)


def feasibility_check(shape, r: int) -> bool:
    """Necessary condition for r-uniformity: every r-subset is no larger than its complement."""
    shape = Shape.of(shape)
    if not 1 <= r < shape.n:
        raise ValidationError(f"need 1 <= r < n, got r={r}, n={shape.n}")
    # the r largest local dimensions give the binding bipartition
    dims = sorted(shape.dims, reverse=True)
    return math.prod(dims[:r]) <= math.prod(dims[r:])


def is_qmds(W: Subspace, d: int) -> bool:
    """K == D^(n - 2(d-1)) on a homogeneous shape."""
    dims = set(W.dims)
    if len(dims) != 1:
        return False
    D = dims.pop()
    e = W.n - 2 * (d - 1)
    return e >= 0 and W.K == D**e


# -- gluing / party bookkeeping ------------------------------------------


def glue(W1, W2) -> Subspace:
    """Tensor product of two subspaces; basis index ``i * K2 + j``."""
    A, B = _as_subspace(W1), _as_subspace(W2)
    check_capacity(A.K * B.K * A.shape.total * B.shape.total, "glued subspace")
    basis = np.einsum("ia,jb->ijab", A.basis, B.basis).reshape(A.K * B.K, -1)
    r = None
    if A.uniformity is not None and B.uniformity is not None:
        r = min(A.uniformity, B.uniformity)
    return Subspace(Shape(A.dims + B.dims), basis, r)


def split(W, party: int, d1: int, d2: int):
    """Split one party of dimension d1*d2 lexicographically: |k*d2+m> -> |k>|m>."""
    dims = W.dims
    if not 0 <= party < len(dims):
        raise ValidationError(f"party {party} out of range")
    if d1 < 2 or d2 < 2 or d1 * d2 != dims[party]:
        raise ValidationError(f"cannot split d={dims[party]} into {d1} x {d2}")
    new = Shape(dims[:party] + (d1, d2) + dims[party + 1 :])
    if isinstance(W, PureState):
        return PureState(new, W.amplitudes)
    return Subspace(new, W.basis, W.uniformity, W.name)


def merge(W, groups):
    """Merge groups of parties (pairs usually) into single parties.

    The merged party sits where the group's first listed party was; its index
    is the big-endian combination in the listed order.
    """
    dims = W.dims
    n = len(dims)
    groups = [tuple(int(k) for k in g) for g in groups]
    flat = [k for g in groups for k in g]
    if len(set(flat)) != len(flat):
        raise ValidationError(f"overlapping merge groups {groups}")
    if any(not 0 <= k < n for k in flat):
        raise ValidationError(f"party out of range in {groups}")
    if any(len(g) < 2 for g in groups):
        raise ValidationError("each merge group needs at least two parties")
    lead = {g[0]: g for g in groups}
    absorbed = {k for g in groups for k in g[1:]}
    order, new_dims = [], []
    for k in range(n):
        if k in absorbed:
            continue
        g = lead.get(k, (k,))
        order.extend(g)
        new_dims.append(math.prod(dims[j] for j in g))
    amps = W.amplitudes if isinstance(W, PureState) else W.basis
    lead_axes = amps.shape[:-1]
    T = permute_tensor(amps.reshape(lead_axes + dims), order)
    basis = np.ascontiguousarray(T).reshape(lead_axes + (-1,))
    if isinstance(W, PureState):
        return PureState(Shape(new_dims), basis)
    return Subspace(Shape(new_dims), basis, W.uniformity, W.name)


def permute(W, perm):
    """Reorder parties: new party k is old party perm[k]."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(W.dims))):
        raise ValidationError(f"{perm} is not a permutation of range({len(W.dims)})")
    amps = W.amplitudes if isinstance(W, PureState) else W.basis
    lead_axes = amps.shape[:-1]
    T = permute_tensor(amps.reshape(lead_axes + W.dims), perm)
    basis = np.ascontiguousarray(T).reshape(lead_axes + (-1,))
    new = Shape(tuple(W.dims[p] for p in perm))
    if isinstance(W, PureState):
        return PureState(new, basis)
    return Subspace(new, basis, W.uniformity, W.name)


def apply(V, W, targets):
    """Apply isometry V to the merged target parties of a state or of every basis vector."""
    V = _as_subspace(V)
    targets = PartySubset(targets if not isinstance(targets, int) else (targets,)).check(len(W.dims))
    if not targets:
        raise ValidationError("apply needs at least one target party")
    amps = W.amplitudes if isinstance(W, PureState) else W.basis
    out, shape = apply_isometry_array(V, amps, Shape.of(W.dims), targets)
    if isinstance(W, PureState):
        return PureState.normalized(shape, out)
    return Subspace(shape, out)


# -- elimination -----------------------------------------------------------


def _check_local_basis(basis, d: int) -> np.ndarray:
    U = np.asarray(basis, dtype=np.complex128)
    if U.shape != (d, d):
        raise ValidationError(f"elimination basis must be {d} vectors of length {d}")
    if np.max(np.abs(U.conj() @ U.T - np.eye(d))) > ORTHO_TOL:
        raise ValidationError("elimination basis is not orthonormal")
    return U


def partial_contractions(W, party: int, elim_basis=None) -> np.ndarray:
    """Unscaled partial scalar products ``<v_j|psi_s>`` on ``party``.

    Returns shape ``(K, d_i, N / d_i)``; entry ``[s, j]`` is the vector mu_j^(s).
    """
    W = _as_subspace(W)
    if not 0 <= party < W.n:
        raise ValidationError(f"party {party} out of range")
    d = W.dims[party]
    U = np.eye(d) if elim_basis is None else _check_local_basis(elim_basis, d)
    T = W.basis.reshape((W.K,) + W.dims)
    T = np.moveaxis(T, 1 + party, 1).reshape(W.K, d, -1)
    return np.einsum("ja,sar->sjr", U.conj(), T)


def eliminate(W, party: int, elim_basis=None) -> Subspace:
    """Contract one party against a local orthonormal basis.

    From an r-uniform K-dim subspace (r >= 1) yields a (r-1)-uniform subspace
    of dimension d_i*K spanned by sqrt(d_i) <v_j|psi_s>, ordered s-major.
    """
    W = _as_subspace(W)
    if W.uniformity is not None and W.uniformity < 1:
        raise PreconditionError(f"elimination needs uniformity >= 1, subspace claims {W.uniformity}")
    if W.n < 2:
        raise ValidationError("cannot eliminate the only party")
    d = W.dims[party]
    mu = partial_contractions(W, party, elim_basis)
    basis = np.sqrt(d) * mu.reshape(W.K * d, -1)
    gram_dev = float(np.max(np.abs(basis.conj() @ basis.T - np.eye(basis.shape[0]))))
    if gram_dev > ORTHO_TOL:
        raise PreconditionError(
            f"eliminated vectors are not orthonormal (deviation {gram_dev:.2e}); "
            "the input is not 1-uniform"
        )
    new = Shape(W.dims[:party] + W.dims[party + 1 :])
    r = None if W.uniformity is None else W.uniformity - 1
    return Subspace(new, basis, r)


# -- maximally entangled resources ----------------------------------------


def me_state(k: int, dim_b: int | None = None) -> PureState:
    """sum_{j<k} |jj> / sqrt(k) on C^k ⊗ C^dim_b (dim_b defaults to k)."""
    if k < 2:
        raise ValidationError("maximally entangled state needs k >= 2")
    dim_b = k if dim_b is None else dim_b
    if dim_b < k:
        raise DimensionError(f"second party dimension {dim_b} < {k}")
    amps = np.zeros((k, dim_b), dtype=np.complex128)
    amps[np.arange(k), np.arange(k)] = 1 / np.sqrt(k)
    return PureState(Shape((k, dim_b)), amps.reshape(-1))


def me_subspace(p: int) -> Subspace:
    """floor(p/2)-dim subspace of C^2 ⊗ C^p maximally entangled on the qubit.

    Basis vectors (|0>|2k> + |1>|2k+1>)/sqrt(2).
    """
    if p < 2:
        raise ValidationError("me_subspace needs p >= 2")
    K = p // 2
    basis = np.zeros((K, 2, p), dtype=np.complex128)
    for k in range(K):
        basis[k, 0, 2 * k] = basis[k, 1, 2 * k + 1] = 1 / np.sqrt(2)
    return Subspace(Shape((2, p)), basis.reshape(K, -1), uniformity=None, name=f"me_subspace({p})")


# -- combining QMDS codes ------------------------------------------------------


@dataclass(frozen=True)
class CombinePrediction:
    l: int
    dim: int
    n1: int
    r1: int
    D1: int
    n2: int
    r2: int
    D2: int
    alpha: int = 0
    beta: int = 0


def predict_combine(n1: int, r1: int, n2: int, r2: int) -> int:
    if min(n1, n2) < 1 or min(r1, r2) < 0:
        raise ValidationError("parameters must be positive")
    return min(n1 - r1, n2 - r2, r1 + r2 + 1)


def predict_combine_eliminate(n1, r1, D1, n2, r2, D2, alpha=0, beta=0) -> CombinePrediction:
    if not (0 <= alpha <= r1 and 0 <= beta <= r2):
        raise PreconditionError(f"need 0 <= alpha <= {r1} and 0 <= beta <= {r2}")
    if min(n1, n2, D1, D2) < 1:
        raise ValidationError("parameters must be positive")
    l = min(n1 - r1 - alpha, n2 - r2 - beta, r1 + r2 + 1 - alpha - beta)
    return CombinePrediction(l, D1**alpha * D2**beta, n1, r1, D1, n2, r2, D2, alpha, beta)


def predict_corollary1(n: int, d: int) -> int:
    """Distance of the pure ((2n, 1, d'))_D code obtained from a QMDS code with itself."""
    if n < 1 or d < 1:
        raise ValidationError("parameters must be positive")
    return min(n - d + 2, 2 * d)


def _qmds_params(W: Subspace, label: str) -> tuple[int, int, int]:
    if W.uniformity is None:
        raise PreconditionError(f"{label}: uniformity (distance - 1) is unknown")
    d = W.uniformity + 1
    if not is_qmds(W, d):
        raise PreconditionError(f"{label}: ((n={W.n}, K={W.K}, d={d})) on {W.shape} is not QMDS")
    return W.n, W.uniformity, W.dims[0]


def _bell_coefficients(K: int, phi) -> np.ndarray:
    if phi is None:
        return np.eye(K) / np.sqrt(K)
    C = np.asarray(phi, dtype=np.complex128).reshape(K, K)
    # maximally entangled <=> sqrt(K) C is unitary
    if np.max(np.abs(K * C.conj().T @ C - np.eye(K))) > ORTHO_TOL:
        raise ValidationError("phi is not maximally entangled")
    return C


def combine(C1, C2, phi=None) -> PureState:
    """(V1 ⊗ V2)|phi> for two QMDS codes with equal K > 1."""
    A, B = _as_subspace(C1), _as_subspace(C2)
    _qmds_params(A, "first code")
    _qmds_params(B, "second code")
    if A.K != B.K:
        raise PreconditionError(f"code dimensions differ: {A.K} vs {B.K}")
    if A.K < 2:
        raise PreconditionError("combine needs K > 1")
    check_capacity(A.shape.total * B.shape.total, "combined state")
    C = _bell_coefficients(A.K, phi)
    amps = np.einsum("ij,ia,jb->ab", C, A.basis, B.basis).reshape(-1)
    return PureState.normalized(Shape(A.dims + B.dims), amps)


def combine_prediction(C1, C2, alpha: int = 0, beta: int = 0) -> CombinePrediction:
    A, B = _as_subspace(C1), _as_subspace(C2)
    n1, r1, D1 = _qmds_params(A, "first code")
    n2, r2, D2 = _qmds_params(B, "second code")
    return predict_combine_eliminate(n1, r1, D1, n2, r2, D2, alpha, beta)


def combine_eliminate(C1, C2, alpha: int, beta: int, bases=None, parties=None, phi=None) -> Subspace:
    """Combine two QMDS codes, then contract alpha outputs of V1 and beta of V2.

    ``parties`` = (parties of code 1, parties of code 2) to eliminate, local
    to each code; default is the last alpha / last beta.  ``bases`` is a list
    of alpha + beta local orthonormal bases (rows are vectors), default
    computational.  Basis vectors of the result are indexed by the tuples
    (i_1..i_alpha, j_1..j_beta) in lexicographic order.
    """
    A, B = _as_subspace(C1), _as_subspace(C2)
    pred = combine_prediction(A, B, alpha, beta)
    n1, n2 = A.n, B.n
    if parties is None:
        p1 = list(range(n1 - alpha, n1))
        p2 = list(range(n2 - beta, n2))
    else:
        p1, p2 = (list(p) for p in parties)
        if len(p1) != alpha or len(p2) != beta:
            raise ValidationError("parties must list alpha parties of code 1 and beta of code 2")
        if len(set(p1)) != alpha or len(set(p2)) != beta:
            raise ValidationError("repeated elimination party")
        if any(not 0 <= k < n1 for k in p1) or any(not 0 <= k < n2 for k in p2):
            raise ValidationError("elimination party out of range")
    slots = p1 + [n1 + k for k in p2]
    dims = A.dims + B.dims
    if bases is None:
        bases = [np.eye(dims[k]) for k in slots]
    elif len(bases) != len(slots):
        raise ValidationError(f"need {len(slots)} local bases, got {len(bases)}")
    bases = [_check_local_basis(U, dims[k]) for U, k in zip(bases, slots)]
    keep = [k for k in range(len(dims)) if k not in slots]
    out_dims = tuple(dims[k] for k in keep)
    check_capacity(pred.dim * math.prod(out_dims), "combine_eliminate output")

    psi = combine(A, B, phi)
    T = psi.tensor()
    T = np.transpose(T, slots + keep)
    for pos, U in enumerate(bases):
        # contract slot axis `pos` with conj(U); the new index lands at the same position
        T = np.moveaxis(np.tensordot(U.conj(), T, axes=([1], [pos])), 0, pos)
    basis = T.reshape(pred.dim, -1) * np.sqrt(pred.dim)
    return Subspace(Shape(out_dims), basis, uniformity=pred.l)

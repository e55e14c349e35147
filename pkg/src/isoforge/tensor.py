"""Dense heterogeneous multipartite vectors.

Index convention: big-endian mixed radix, party 0 is the most significant
digit, so the flat index of ``(i_0, ..., i_{n-1})`` is ``sum(i_k * stride_k)``
with ``stride_k = prod(dims[k+1:])``.  Under this convention splitting or
merging adjacent parties is a plain ``reshape``.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, ValidationError

__all__ = [
    "Shape",
    "PartySubset",
    "PureState",
    "Subspace",
    "DensityBlock",
    "capacity",
    "check_capacity",
    "linear_index",
    "multi_index",
    "tensor_product",
    "permute_parties",
    "reshape_bipartition",
    "reduce",
    "reduce_cross",
    "apply_isometry",
    "oracle_reduce",
    "basis_state",
    "random_state",
]

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
DEFAULT_CAPACITY = 2**24
ORACLE_LIMIT = 10**4


def capacity() -> int:
    """Maximum number of dense amplitudes; ``FORGE_CAPACITY`` overrides."""
    env = os.environ.get("FORGE_CAPACITY")
    if env:
        try:
            return int(float(env))
        except ValueError:
            raise ValidationError(f"FORGE_CAPACITY={env!r} is not a number") from None
    return DEFAULT_CAPACITY


def check_capacity(n_amplitudes: int, what: str = "object") -> None:
    cap = capacity()
    if n_amplitudes > cap:
        raise CapacityError(
            f"{what} needs {n_amplitudes} dense amplitudes, above the capacity cap {cap} "
            "(set FORGE_CAPACITY to raise it)"
        )


@dataclass(frozen=True)
class Shape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValidationError("a shape needs at least one party")
        if any(d < 2 for d in dims):
            raise ValidationError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, dims) -> Shape:
        return dims if isinstance(dims, Shape) else cls(tuple(dims))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    @property
    def strides(self) -> tuple[int, ...]:
        out = [1] * self.n
        for k in range(self.n - 2, -1, -1):
            out[k] = out[k + 1] * self.dims[k + 1]
        return tuple(out)

    def sub_dim(self, parties: Iterable[int]) -> int:
        return math.prod(self.dims[k] for k in parties)

    def __len__(self) -> int:
        return self.n

    def __str__(self) -> str:
        parts = []
        for d, grp in itertools.groupby(self.dims):
            k = len(list(grp))
            parts.append(f"C^{d}" if k == 1 else f"(C^{d})^{k}")
        return "⊗".join(parts)


class PartySubset(tuple):
    """Sorted tuple of distinct party indices."""

    def __new__(cls, parties: Iterable[int] = ()):
        items = sorted(int(p) for p in parties)
        if len(set(items)) != len(items):
            raise ValidationError(f"repeated party in subset {items}")
        if items and items[0] < 0:
            raise ValidationError(f"negative party index in {items}")
        return super().__new__(cls, items)

    def check(self, n: int, proper: bool = False) -> PartySubset:
        if self and self[-1] >= n:
            raise ValidationError(f"party {self[-1]} out of range for {n} parties")
        if proper and not 0 < len(self) < n:
            raise ValidationError(f"subset {tuple(self)} must be non-empty and proper")
        return self

    def complement(self, n: int) -> PartySubset:
        own = set(self)
        return PartySubset(k for k in range(n) if k not in own)


def _as_subset(S, n: int, proper: bool = True) -> PartySubset:
    if isinstance(S, (int, np.integer)):
        S = (int(S),)
    return PartySubset(S).check(n, proper=proper)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    shape: Shape
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = Shape.of(self.shape)
        object.__setattr__(self, "shape", shape)
        amps = np.asarray(self.amplitudes).reshape(-1)
        if amps.size != shape.total:
            raise DimensionError(f"{amps.size} amplitudes for shape {shape.dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, shape, amplitudes) -> PureState:
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(Shape.of(shape), amps / norm)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.shape.dims

    @property
    def n(self) -> int:
        return self.shape.n

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def inner(self, other: PureState) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def as_subspace(self) -> Subspace:
        return Subspace(self.shape, self.amplitudes[None, :])


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis of K vectors; row ``j`` is the image of ``|j>`` under the isometry."""

    shape: Shape
    basis: np.ndarray = field(repr=False)
    uniformity: int | None = None
    name: str | None = None

    def __post_init__(self):
        shape = Shape.of(self.shape)
        object.__setattr__(self, "shape", shape)
        B = np.asarray(self.basis)
        if B.ndim == 1:
            B = B[None, :]
        if B.ndim != 2 or B.shape[1] != shape.total:
            raise DimensionError(f"basis of shape {B.shape} does not match {shape.dims}")
        if B.shape[0] < 1:
            raise ValidationError("a subspace needs at least one basis vector")
        if B.shape[0] > shape.total:
            raise DimensionError("more basis vectors than the ambient dimension")
        gram = B.conj() @ B.T
        dev = float(np.max(np.abs(gram - np.eye(B.shape[0]))))
        if dev > ORTHO_TOL:
            raise ValidationError(f"basis is not orthonormal (Gram deviation {dev:.3g})")
        object.__setattr__(self, "basis", _frozen(B))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.shape.dims

    @property
    def n(self) -> int:
        return self.shape.n

    @property
    def K(self) -> int:
        return self.basis.shape[0]

    def __len__(self) -> int:
        return self.K

    @property
    def states(self) -> list[PureState]:
        return [PureState(self.shape, v) for v in self.basis]

    def state(self, j: int) -> PureState:
        return PureState(self.shape, self.basis[j])

    def projector(self) -> np.ndarray:
        check_capacity(self.shape.total**2, "dense projector")
        return self.basis.T @ self.basis.conj()

    def combination(self, coeffs) -> PureState:
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        return PureState.normalized(self.shape, coeffs @ self.basis)

    def with_meta(self, uniformity=None, name=None) -> Subspace:
        return Subspace(self.shape, self.basis, uniformity, name or self.name)


@dataclass(frozen=True, eq=False)
class DensityBlock:
    subset: PartySubset
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def linear_index(shape, multi: Sequence[int]) -> int:
    shape = Shape.of(shape)
    if len(multi) != shape.n:
        raise IndexError(f"expected {shape.n} indices, got {len(multi)}")
    idx = 0
    for m, d, s in zip(multi, shape.dims, shape.strides):
        if not 0 <= m < d:
            raise IndexError(f"index {m} out of range for local dimension {d}")
        idx += int(m) * s
    return idx


def multi_index(shape, index: int) -> tuple[int, ...]:
    shape = Shape.of(shape)
    if not 0 <= index < shape.total:
        raise IndexError(f"index {index} out of range [0, {shape.total})")
    out = []
    for d, s in zip(shape.dims, shape.strides):
        out.append((index // s) % d)
    return tuple(out)


def tensor_product(a: PureState, b: PureState) -> PureState:
    total = a.shape.total * b.shape.total
    check_capacity(total, "tensor product")
    return PureState(Shape(a.dims + b.dims), np.kron(a.amplitudes, b.amplitudes))


def _check_perm(perm, n: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"{perm} is not a permutation of range({n})")
    return perm


def permute_tensor(T: np.ndarray, perm) -> np.ndarray:
    """New party ``k`` is old party ``perm[k]``; leading batch axes are kept."""
    lead = T.ndim - len(perm)
    return np.transpose(T, tuple(range(lead)) + tuple(lead + p for p in perm))


def permute_parties(s: PureState, perm) -> PureState:
    """Reorder parties so that new party ``k`` is old party ``perm[k]``."""
    perm = _check_perm(perm, s.n)
    T = np.transpose(s.tensor(), perm)
    return PureState(Shape(tuple(s.dims[p] for p in perm)), T.reshape(-1))


def _bipartition(amps: np.ndarray, shape: Shape, S: PartySubset) -> np.ndarray:
    """Reshape (..., N) amplitudes to (..., d_S, d_Sc)."""
    Sc = S.complement(shape.n)
    lead = amps.shape[:-1]
    T = amps.reshape(lead + shape.dims)
    T = permute_tensor(T, tuple(S) + tuple(Sc))
    return T.reshape(lead + (shape.sub_dim(S), shape.sub_dim(Sc)))


def reshape_bipartition(s: PureState, S) -> np.ndarray:
    S = _as_subset(S, s.n)
    return _bipartition(s.amplitudes, s.shape, S)


def reduce(s: PureState, S) -> DensityBlock:
    """Reduced density matrix on ``S`` (trace over the complement)."""
    S = _as_subset(S, s.n)
    M = _bipartition(s.amplitudes, s.shape, S)
    return DensityBlock(S, M @ M.conj().T)


def reduce_cross(a: PureState, b: PureState, S) -> DensityBlock:
    """``Tr_{S^c} |a><b|``."""
    if a.dims != b.dims:
        raise ValidationError(f"shape mismatch {a.dims} vs {b.dims}")
    S = _as_subset(S, a.n)
    Ma = _bipartition(a.amplitudes, a.shape, S)
    Mb = _bipartition(b.amplitudes, b.shape, S)
    return DensityBlock(S, Ma @ Mb.conj().T)


def apply_isometry_array(V: Subspace, amps: np.ndarray, shape: Shape, targets: PartySubset):
    """Batched isometry application on (..., N) amplitude arrays.

    Returns the new amplitude array and the new shape.
    """
    dT = shape.sub_dim(targets)
    if dT > V.K:
        raise DimensionError(
            f"isometry input dimension {V.K} is smaller than the merged target dimension {dT}"
        )
    others = [k for k in range(shape.n) if k not in targets]
    first = targets[0]
    before = [k for k in others if k < first]
    after = [k for k in others if k > first]
    new_dims = tuple(shape.dims[k] for k in before) + V.dims + tuple(shape.dims[k] for k in after)
    lead = amps.shape[:-1]
    check_capacity(math.prod(new_dims) * max(1, math.prod(lead)), "isometry output")
    T = amps.reshape(lead + shape.dims)
    T = permute_tensor(T, tuple(before) + tuple(targets) + tuple(after))
    T = T.reshape(lead + (shape.sub_dim(before), dT, shape.sub_dim(after)))
    # canonical embedding: |j> -> V.basis[j] for j < dT
    out = np.einsum("...ajb,jm->...amb", T, V.basis[:dT])
    return out.reshape(lead + (math.prod(new_dims),)), Shape(new_dims)


def apply_isometry(V: Subspace, s: PureState, targets) -> PureState:
    """Replace the (merged) target parties of ``s`` by the output parties of ``V``."""
    targets = _as_subset(targets, s.n, proper=False)
    if not targets:
        raise ValidationError("apply_isometry needs at least one target party")
    amps, shape = apply_isometry_array(V, s.amplitudes, s.shape, targets)
    return PureState.normalized(shape, amps)


def oracle_reduce(s: PureState, S) -> DensityBlock:
    """Brute-force partial trace by explicit loops over multi-indices.

    Deliberately naive: no reshapes, no matrix products.  Test scale only.
    """
    S = _as_subset(S, s.n)
    if s.shape.total > ORACLE_LIMIT:
        raise CapacityError(f"oracle_reduce limited to total dimension {ORACLE_LIMIT}")
    dims = s.dims
    Sc = S.complement(s.n)
    dS = s.shape.sub_dim(S)
    rho = np.zeros((dS, dS), dtype=np.complex128)
    amps = s.amplitudes
    S_ranges = [range(dims[k]) for k in S]
    Sc_ranges = [range(dims[k]) for k in Sc]
    for row, ks in enumerate(itertools.product(*S_ranges)):
        for col, ls in enumerate(itertools.product(*S_ranges)):
            acc = 0j
            for env in itertools.product(*Sc_ranges):
                left = [0] * s.n
                right = [0] * s.n
                for pos, k in enumerate(S):
                    left[k] = ks[pos]
                    right[k] = ls[pos]
                for pos, k in enumerate(Sc):
                    left[k] = env[pos]
                    right[k] = env[pos]
                acc += amps[linear_index(s.shape, left)] * np.conj(amps[linear_index(s.shape, right)])
            rho[row, col] = acc
    return DensityBlock(S, rho)


def basis_state(dims, multi: Sequence[int]) -> PureState:
    shape = Shape.of(dims)
    amps = np.zeros(shape.total, dtype=np.complex128)
    amps[linear_index(shape, multi)] = 1.0
    return PureState(shape, amps)


def random_state(dims, rng: np.random.Generator) -> PureState:
    shape = Shape.of(dims)
    v = rng.normal(size=shape.total) + 1j * rng.normal(size=shape.total)
    return PureState.normalized(shape, v)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    Z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))

"""Qudit Weyl operators, stabilizer codespaces, CSS and prime-power expansion.

A Weyl operator on a shape with local dimensions ``d_k`` is

    zeta**c * (X^{a_0} Z^{b_0}) ⊗ ... ⊗ (X^{a_{n-1}} Z^{b_{n-1}})

with ``X|j> = |j+1 mod d>``, ``Z|j> = w^j |j>``, ``w = exp(2 pi i / d)`` and
``zeta = exp(2 pi i / (2 L))`` for ``L = lcm(d_k)``.  Operators are monomial,
so they are applied as an index map plus a phase vector and never stored
densely.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ConstructionError, ValidationError
from .gf import ClassicalCode, Field, field_make
from .tensor import Shape, Subspace, check_capacity

__all__ = [
    "WeylOperator",
    "StabilizerSpec",
    "weyl_matrix",
    "weyl_action",
    "apply_weyl",
    "iter_weyl",
    "count_weyl",
    "symplectic_product",
    "codespace_from_stabilizer",
    "stabilizer_projector",
    "css",
    "expand_prime_power",
]

WEYL_LIMIT = 10**6
GROUP_LIMIT = 10**5


@lru_cache(maxsize=64)
def _digits(dims: tuple[int, ...]) -> np.ndarray:
    """(n, N) array of per-party digits of every flat index."""
    shape = Shape(dims)
    idx = np.arange(shape.total)
    return np.stack([(idx // s) % d for d, s in zip(shape.dims, shape.strides)]).astype(np.int64)


@dataclass(frozen=True)
class WeylOperator:
    shape: Shape
    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self):
        shape = Shape.of(self.shape)
        object.__setattr__(self, "shape", shape)
        x = tuple(int(a) for a in self.x)
        z = tuple(int(b) for b in self.z)
        if len(x) != shape.n or len(z) != shape.n:
            raise ValidationError("exponent vectors must have one entry per party")
        for a, b, d in zip(x, z, shape.dims):
            if not (0 <= a < d and 0 <= b < d):
                raise ValidationError(f"exponents ({a},{b}) out of range for d={d}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % (2 * self.lcm))

    @property
    def lcm(self) -> int:
        return math.lcm(*self.shape.dims)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, (a, b) in enumerate(zip(self.x, self.z)) if a or b)

    @property
    def weight(self) -> int:
        return len(self.support)

    def __str__(self) -> str:
        if all(d == 2 for d in self.shape.dims):
            letters = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
            body = "".join(letters[(a, b)] for a, b in zip(self.x, self.z))
        else:
            body = " ".join(f"X{a}Z{b}" for a, b in zip(self.x, self.z))
        return body if not self.phase else f"ζ^{self.phase}·{body}"


def weyl_action(dims: tuple[int, ...], x, z, phase: int = 0, support=None):
    """Index map and phase vector of a Weyl operator.

    ``(E v)[dest[j]] = factor[j] * v[j]``.
    """
    dims = tuple(dims)
    digits = _digits(dims)
    shape = Shape(dims)
    N = shape.total
    if support is None:
        support = [k for k in range(len(dims)) if x[k] or z[k]]
    dest = np.arange(N)
    angle = np.zeros(N)
    for k in support:
        d, s = dims[k], shape.strides[k]
        j = digits[k]
        if x[k]:
            dest = dest + (((j + x[k]) % d) - j) * s
        if z[k]:
            angle = angle + (z[k] * j % d) / d
    factor = np.exp(2j * np.pi * angle)
    if phase:
        factor = factor * np.exp(2j * np.pi * phase / (2 * math.lcm(*dims)))
    return dest, factor


def apply_weyl(dims, x, z, vectors: np.ndarray, phase: int = 0) -> np.ndarray:
    """Apply a Weyl operator to the last axis of ``vectors``."""
    dest, factor = weyl_action(tuple(dims), x, z, phase)
    out = np.empty_like(vectors, dtype=np.complex128)
    out[..., dest] = vectors * factor
    return out


def weyl_matrix(w: WeylOperator) -> sp.csr_matrix:
    """Sparse monomial matrix of ``w`` on the full space."""
    N = w.shape.total
    if N > WEYL_LIMIT:
        raise CapacityError(f"total dimension {N} exceeds the Weyl matrix limit {WEYL_LIMIT}")
    dest, factor = weyl_action(w.shape.dims, w.x, w.z, w.phase)
    return sp.csr_matrix((factor, (dest, np.arange(N))), shape=(N, N))


def count_weyl(dims, max_weight: int) -> int:
    """Number of non-identity Weyl operators of weight 1..max_weight."""
    dims = tuple(dims)
    total = 0
    for w in range(1, max_weight + 1):
        for sub in itertools.combinations(range(len(dims)), w):
            total += math.prod(dims[k] ** 2 - 1 for k in sub)
    return total


def iter_weyl(dims, max_weight: int, min_weight: int = 1):
    """Yield ``(support, x, z)`` for every Weyl operator of weight in range.

    ``x``/``z`` are full-length tuples; each party in ``support`` has
    ``(x_k, z_k) != (0, 0)``.
    """
    dims = tuple(dims)
    n = len(dims)
    for w in range(min_weight, max_weight + 1):
        for sub in itertools.combinations(range(n), w):
            local = [[(a, b) for a in range(dims[k]) for b in range(dims[k]) if a or b] for k in sub]
            for choice in itertools.product(*local):
                x = [0] * n
                z = [0] * n
                for k, (a, b) in zip(sub, choice):
                    x[k] = a
                    z[k] = b
                yield sub, tuple(x), tuple(z)


def symplectic_product(u, v, n: int, p: int) -> int:
    """sum(x_u z_v - z_u x_v) mod p for rows laid out as [x | z]."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return int((u[:n] @ v[n:] - u[n:] @ v[:n]) % p)


def _hermitian_phase(x, z, p: int) -> int:
    # for qubits i^{x.z} X^x Z^z is Hermitian and squares to +I
    if p == 2:
        return int(np.dot(x, z)) % 4
    return 0


@dataclass(frozen=True, eq=False)
class StabilizerSpec:
    """Stabilizer group on ``n`` qudits of dimension ``q = p**m``.

    ``rows`` has shape ``(r, 2n)`` laid out as ``[x | z]``.  For ``m == 1``
    the rows are GF(p) symplectic vectors with one Weyl operator each and
    ``phases`` are in units of ``zeta``; for ``m > 1`` the rows are
    GF(q)-linear generators given as field-element integers and the spec can
    only be materialized through :func:`expand_prime_power`.
    """

    n: int
    p: int
    rows: np.ndarray = field(repr=False)
    k: int | None = None
    m: int = 1
    phases: tuple[int, ...] | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, 2 * self.n)
        object.__setattr__(self, "rows", rows)
        q = self.p**self.m
        if np.any((rows < 0) | (rows >= q)):
            raise ValidationError(f"stabilizer entries must lie in [0, {q})")
        if self.m == 1:
            if self.phases is None:
                phases = tuple(_hermitian_phase(r[: self.n], r[self.n :], self.p) for r in rows)
            else:
                phases = tuple(int(c) for c in self.phases)
                if len(phases) != len(rows):
                    raise ValidationError("one phase exponent per generator required")
            object.__setattr__(self, "phases", phases)
        if self.k is None:
            object.__setattr__(self, "k", self.n - len(rows))

    @property
    def q(self) -> int:
        return self.p**self.m

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.q,) * self.n

    @property
    def expected_K(self) -> int:
        return self.q**self.k

    @cached_property
    def field(self) -> Field:
        return field_make(self.p, self.m)

    def generators(self) -> list[WeylOperator]:
        if self.m != 1:
            raise ValidationError("prime-power specs must be expanded before use")
        shape = Shape(self.dims)
        return [
            WeylOperator(shape, r[: self.n], r[self.n :], c) for r, c in zip(self.rows, self.phases)
        ]

    def check_commuting(self) -> None:
        n = self.n
        if self.m == 1:
            for (i, u), (j, v) in itertools.combinations(enumerate(self.rows), 2):
                if symplectic_product(u, v, n, self.p):
                    raise ConstructionError(f"generators {i} and {j} do not commute")
            return
        f = self.field
        for (i, u), (j, v) in itertools.combinations(enumerate(self.rows), 2):
            s = f.sub(f.dot(u[:n], v[n:]), f.dot(u[n:], v[:n]))
            if s:
                raise ConstructionError(f"generators {i} and {j} are not symplectic-orthogonal")

    def check_independent(self) -> None:
        f = field_make(self.p, self.m)
        if len(self.rows) and f.rank(self.rows) != len(self.rows):
            raise ConstructionError("stabilizer generators are linearly dependent")

    def normalizer_has_weight_below(self, d: int) -> bool:
        """True if some non-identity Pauli of weight < d commutes with every generator.

        Combinatorial purity test used when searching for code data.
        """
        if self.m != 1:
            raise ValidationError("expand prime-power specs first")
        n, p = self.n, self.p
        R = self.rows
        for _, x, z in iter_weyl((p,) * n, d - 1):
            v = np.array(x + z)
            if not np.any((R[:, :n] @ v[n:] - R[:, n:] @ v[:n]) % p):
                return True
        return False


def _stabilizer_projection(spec: StabilizerSpec, vectors: np.ndarray) -> np.ndarray:
    """Apply P = prod_g (1/p) sum_e g^e, i.e. the group average, along the last axis."""
    out = vectors.astype(np.complex128)
    for g in spec.generators():
        dest, factor = weyl_action(spec.dims, g.x, g.z, g.phase, g.support)
        acc = out.copy()
        cur = out
        for _ in range(spec.p - 1):
            nxt = np.empty_like(cur)
            nxt[..., dest] = cur * factor
            acc += nxt
            cur = nxt
        out = acc / spec.p
    return out


def _validate(spec: StabilizerSpec) -> None:
    if spec.m != 1:
        raise ValidationError("prime-power specs must go through expand_prime_power")
    if spec.p ** (spec.n - spec.k) > GROUP_LIMIT:
        raise CapacityError("stabilizer group too large to average")
    check_capacity(spec.p**spec.n * max(1, spec.expected_K), "codespace")
    spec.check_commuting()
    spec.check_independent()


def stabilizer_projector(spec: StabilizerSpec) -> np.ndarray:
    """Dense projector onto the codespace (small codes only)."""
    _validate(spec)
    N = spec.p**spec.n
    check_capacity(N * N, "dense stabilizer projector")
    return _stabilizer_projection(spec, np.eye(N, dtype=np.complex128)).T


def codespace_from_stabilizer(spec: StabilizerSpec, name: str | None = None) -> Subspace:
    """Orthonormal basis of the joint +1 eigenspace of the stabilizer group.

    Columns ``P|j>`` are generated in index order and orthonormalized; the
    compressed projector must then have exactly ``K`` eigenvalues above 1/2.
    """
    _validate(spec)
    N = spec.p**spec.n
    K = spec.expected_K
    basis = np.zeros((0, N), dtype=np.complex128)
    batch = max(8, min(256, 4 * K))
    for start in range(0, N, batch):
        cols = np.zeros((min(batch, N - start), N), dtype=np.complex128)
        cols[np.arange(cols.shape[0]), start + np.arange(cols.shape[0])] = 1.0
        cand = _stabilizer_projection(spec, cols)
        for v in cand:
            nv = np.linalg.norm(v)
            if nv < 1e-9:
                continue
            v = v - basis.T @ (basis.conj() @ v)
            v = v - basis.T @ (basis.conj() @ v)
            r = np.linalg.norm(v)
            if r > 1e-6 * nv:
                basis = np.vstack([basis, v / r])
            if basis.shape[0] > K:
                raise ConstructionError(f"codespace dimension exceeds expected K={K}")
        if basis.shape[0] == K:
            break
    if basis.shape[0] != K:
        raise ConstructionError(f"codespace has dimension {basis.shape[0]}, expected {K}")
    # rank check: compressed projector eigenvalues must be 0 or 1, threshold 1/2
    PB = _stabilizer_projection(spec, basis)
    evals = np.linalg.eigvalsh(basis.conj() @ PB.T)
    if np.count_nonzero(evals > 0.5) != K:
        raise ConstructionError("codespace basis is not invariant under the stabilizer")
    return Subspace(Shape(spec.dims), basis, uniformity=None, name=name)


def _rows_of(H, p: int) -> np.ndarray:
    if isinstance(H, ClassicalCode):
        if H.field.m != 1 or H.field.p != p:
            raise ValidationError("CSS input code must be over the prime field GF(p)")
        return H.generator
    H = np.asarray(H, dtype=np.int64)
    if H.ndim == 2:
        return H
    return H.reshape(-1, H.shape[-1]) if H.size else H.reshape(0, 0)


def css(HX, HZ, p: int, n: int | None = None) -> StabilizerSpec:
    """CSS stabilizer: X-type generators from rows of HX, Z-type from HZ."""
    HX = _rows_of(HX, p)
    HZ = _rows_of(HZ, p)
    if n is None:
        widths = {M.shape[1] for M in (HX, HZ) if M.shape[1]}
        if len(widths) != 1:
            raise ValidationError("cannot infer code length; pass n explicitly")
        n = widths.pop()
    HX = HX.reshape(-1, n) if HX.size else np.zeros((0, n), dtype=np.int64)
    HZ = HZ.reshape(-1, n) if HZ.size else np.zeros((0, n), dtype=np.int64)
    if np.any((HX @ HZ.T) % p):
        raise ValidationError("HX HZ^T != 0 mod p; X and Z checks do not commute")
    rows = np.vstack(
        [np.hstack([HX % p, np.zeros_like(HX)]), np.hstack([np.zeros_like(HZ), HZ % p])]
    )
    return StabilizerSpec(n=n, p=p, rows=rows)


def expand_prime_power(spec: StabilizerSpec) -> StabilizerSpec:
    """Rewrite a GF(p^m)-linear stabilizer as a GF(p) stabilizer on m*n parties.

    Party ``i`` becomes parties ``m*i .. m*i+m-1``.  A symbol with polynomial
    coordinates ``(c_0..c_{m-1})`` sits at merged index ``sum c_t p^t``; in
    big-endian order subparty ``s`` holds ``c_{m-1-s}``.  X exponents are the
    coordinates of ``a``; Z exponents are ``tr(b * x^{m-1-s})`` so that the
    trace-symplectic form becomes the standard one.
    """
    if spec.m == 1:
        return spec
    f = spec.field
    n, m, p = spec.n, spec.m, spec.p
    spec.check_commuting()
    # polynomial basis elements x^t are encoded as p**t
    powers = [p**t for t in range(m)]
    out_rows = []
    for row in spec.rows:
        for beta in powers:
            scaled = f.mul(beta, row)
            xs, zs = [], []
            for i in range(n):
                a = int(scaled[i])
                b = int(scaled[n + i])
                coeff = f.coefficients(a)
                for s in range(m):
                    t = m - 1 - s
                    xs.append(coeff[t])
                    zs.append(int(f.trace(f.mul(b, powers[t]))))
            out_rows.append(xs + zs)
    out = StabilizerSpec(n=n * m, p=p, rows=np.array(out_rows, dtype=np.int64), k=spec.k * m)
    out.check_commuting()
    return out

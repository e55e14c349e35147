"""Small finite fields GF(p^m) and classical linear codes over them.

Elements are encoded as integers ``sum(c_t * p**t)`` where ``c_t`` is the
coefficient of ``x**t`` in the polynomial-basis representation.  All
arithmetic goes through precomputed ``q x q`` tables, which is the simplest
correct form for ``q <= 256``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .errors import CapacityError, ValidationError

__all__ = [
    "Field",
    "ClassicalCode",
    "field_make",
    "grs_generator",
    "min_distance_bruteforce",
    "self_orthogonality_check",
]

# low-to-high coefficients, leading coefficient included
DEFAULT_POLYS = {
    (2, 2): (1, 1, 1),  # x^2 + x + 1
    (2, 3): (1, 1, 0, 1),  # x^3 + x + 1
    (2, 4): (1, 1, 0, 0, 1),  # x^4 + x + 1
    (3, 2): (2, 2, 1),  # x^2 + 2x + 2
}

BRUTEFORCE_LIMIT = 10**6


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % k for k in range(2, int(p**0.5) + 1))


def _digits(x: int, p: int, m: int) -> list[int]:
    return [(x // p**t) % p for t in range(m)]


def _from_digits(cs, p: int) -> int:
    return sum(int(c) * p**t for t, c in enumerate(cs))


def _poly_mulmod(a: list[int], b: list[int], poly: tuple[int, ...], p: int) -> list[int]:
    m = len(poly) - 1
    prod = [0] * (2 * m - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # poly is monic; reduce from the top
    for k in range(len(prod) - 1, m - 1, -1):
        c = prod[k]
        if c:
            for t in range(m + 1):
                prod[k - m + t] = (prod[k - m + t] - c * poly[t]) % p
    return prod[:m]


def _generates_multiplicative_group(poly: tuple[int, ...], p: int) -> bool:
    m = len(poly) - 1
    q = p**m
    x = [0] * m
    if m == 1:
        # GF(p): look for nothing here, handled separately
        return True
    x[1] = 1
    cur = [1] + [0] * (m - 1)
    seen = set()
    for _ in range(q - 1):
        cur = _poly_mulmod(cur, x, poly, p)
        key = tuple(cur)
        if key in seen:
            return False
        seen.add(key)
    return len(seen) == q - 1


def _find_primitive_poly(p: int, m: int) -> tuple[int, ...]:
    for tail in itertools.product(range(p), repeat=m):
        if tail[0] == 0:
            continue
        poly = tuple(tail) + (1,)
        if _generates_multiplicative_group(poly, p):
            return poly
    raise ValidationError(f"no primitive polynomial found for GF({p}^{m})")


def _primitive_root(p: int) -> int:
    for g in range(1, p):
        if len({pow(g, k, p) for k in range(p - 1)}) == p - 1:
            return g
    raise ValidationError(f"no primitive root mod {p}")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class Field:
    """GF(p^m) with table arithmetic; elements are ints in ``range(order)``."""

    p: int
    m: int
    poly: tuple[int, ...]
    add_table: np.ndarray = dc_field(repr=False)
    mul_table: np.ndarray = dc_field(repr=False)
    exp_table: np.ndarray = dc_field(repr=False)
    log_table: np.ndarray = dc_field(repr=False)

    @property
    def order(self) -> int:
        return self.p**self.m

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and (self.p, self.m, self.poly) == (other.p, other.m, other.poly)

    def __hash__(self) -> int:
        return hash((self.p, self.m, self.poly))

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.m})" if self.m > 1 else f"GF({self.p})"

    @cached_property
    def neg_table(self) -> np.ndarray:
        return np.argmin(self.add_table, axis=1).astype(np.int64)

    @cached_property
    def inv_table(self) -> np.ndarray:
        inv = np.zeros(self.order, dtype=np.int64)
        for a in range(1, self.order):
            inv[a] = int(np.nonzero(self.mul_table[a] == 1)[0][0])
        return inv

    def add(self, a, b):
        return self.add_table[a, b]

    def sub(self, a, b):
        return self.add_table[a, self.neg_table[b]]

    def mul(self, a, b):
        return self.mul_table[a, b]

    def neg(self, a):
        return self.neg_table[a]

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("0 has no inverse")
        return self.inv_table[a]

    def power(self, a: int, k: int) -> int:
        if a == 0:
            return 1 if k == 0 else 0
        return int(self.exp_table[(int(self.log_table[a]) * k) % (self.order - 1)])

    def trace(self, a) -> np.ndarray:
        """Absolute trace GF(p^m) -> GF(p), i.e. a + a^p + ... + a^{p^(m-1)}."""
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros_like(a)
        cur = a
        for _ in range(self.m):
            out = self.add_table[out, cur]
            # Frobenius: cur -> cur^p
            nxt = np.ones_like(cur)
            for _ in range(self.p):
                nxt = self.mul_table[nxt, cur]
            cur = nxt
        # the trace lands in the prime subfield, encoded as 0..p-1
        return out

    def coefficients(self, a: int) -> list[int]:
        """Polynomial-basis coordinates (c_0, ..., c_{m-1}) of ``a``."""
        return _digits(int(a), self.p, self.m)

    # -- matrix helpers ---------------------------------------------------

    def dot(self, u, v) -> int:
        prods = self.mul_table[np.asarray(u), np.asarray(v)]
        acc = 0
        for x in np.ravel(prods):
            acc = self.add_table[acc, x]
        return int(acc)

    def matmul(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=np.int64))
        B = np.atleast_2d(np.asarray(B, dtype=np.int64))
        if A.shape[1] != B.shape[0]:
            raise ValidationError(f"shape mismatch {A.shape} @ {B.shape}")
        if self.m == 1:
            return (A @ B) % self.p
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        for k in range(A.shape[1]):
            out = self.add_table[out, self.mul_table[A[:, k][:, None], B[k, :][None, :]]]
        return out

    def rref(self, A) -> tuple[np.ndarray, list[int]]:
        """Reduced row echelon form and pivot columns."""
        M = np.array(A, dtype=np.int64, copy=True)
        if M.ndim != 2:
            M = M.reshape(-1, M.shape[-1] if M.size else 0)
        rows, cols = M.shape
        pivots = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(M[r:, c])[0]
            if nz.size == 0:
                continue
            k = r + int(nz[0])
            M[[r, k]] = M[[k, r]]
            M[r] = self.mul_table[self.inv_table[M[r, c]], M[r]]
            for i in range(rows):
                if i != r and M[i, c]:
                    M[i] = self.sub(M[i], self.mul_table[M[i, c], M[r]])
            pivots.append(c)
            r += 1
        return M[:r], pivots

    def rank(self, A) -> int:
        A = np.asarray(A)
        if A.size == 0:
            return 0
        return len(self.rref(A)[1])

    def nullspace(self, A, ncols: int | None = None) -> np.ndarray:
        """Basis (as rows) of {x : A x^T = 0}."""
        A = np.asarray(A, dtype=np.int64)
        if ncols is None:
            ncols = A.shape[1]
        if A.size == 0:
            return np.eye(ncols, dtype=np.int64)
        R, pivots = self.rref(A)
        free = [c for c in range(ncols) if c not in pivots]
        basis = np.zeros((len(free), ncols), dtype=np.int64)
        for i, f in enumerate(free):
            basis[i, f] = 1
            for row, pc in enumerate(pivots):
                basis[i, pc] = self.neg_table[R[row, f]]
        return basis


def field_make(p: int, m: int = 1, poly=None) -> Field:
    if not _is_prime(p):
        raise ValidationError(f"characteristic {p} is not prime")
    if not 1 <= m <= 4 or p**m > 256:
        raise ValidationError(f"unsupported field size {p}^{m}")
    q = p**m
    if m == 1:
        poly = (0, 1)
        add = (np.arange(p)[:, None] + np.arange(p)[None, :]) % p
        mul = (np.arange(p)[:, None] * np.arange(p)[None, :]) % p
        g = _primitive_root(p)
        exp = np.array([pow(g, k, p) for k in range(p - 1)], dtype=np.int64)
    else:
        if poly is None:
            poly = DEFAULT_POLYS.get((p, m)) or _find_primitive_poly(p, m)
        poly = tuple(int(c) % p for c in poly)
        if len(poly) != m + 1 or poly[-1] != 1:
            raise ValidationError("modulus must be monic of degree m")
        if not _generates_multiplicative_group(poly, p):
            raise ValidationError(f"polynomial {poly} is not primitive over GF({p})")
        digits = np.array([_digits(x, p, m) for x in range(q)], dtype=np.int64)
        pw = p ** np.arange(m)
        add = ((digits[:, None, :] + digits[None, :, :]) % p) @ pw
        x = [0] * m
        x[1] = 1
        exp_list = []
        cur = [1] + [0] * (m - 1)
        for _ in range(q - 1):
            exp_list.append(_from_digits(cur, p))
            cur = _poly_mulmod(cur, x, poly, p)
        exp = np.array(exp_list, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        log[exp] = np.arange(q - 1)
        mul = np.zeros((q, q), dtype=np.int64)
        nz = np.arange(1, q)
        mul[1:, 1:] = exp[(log[nz][:, None] + log[nz][None, :]) % (q - 1)]
    log = np.zeros(q, dtype=np.int64)
    log[exp] = np.arange(q - 1)
    return Field(p, m, tuple(poly), add.astype(np.int64), mul.astype(np.int64), exp, log)


@dataclass(frozen=True, eq=False)
class ClassicalCode:
    """Linear [n, k] code given by a full-rank generator matrix."""

    field: Field
    generator: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.generator, dtype=np.int64)
        if G.ndim != 2:
            G = G.reshape(0, G.shape[0]) if G.ndim == 1 and G.size == 0 else np.atleast_2d(G)
        object.__setattr__(self, "generator", G)
        if G.shape[0] and self.field.rank(G) != G.shape[0]:
            raise ValidationError("generator matrix is not full rank")

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @cached_property
    def parity_check(self) -> np.ndarray:
        if self.k == 0:
            return np.eye(self.n, dtype=np.int64)
        return self.field.nullspace(self.generator)

    def dual(self) -> ClassicalCode:
        return ClassicalCode(self.field, self.parity_check)

    def codewords(self) -> np.ndarray:
        q = self.field.order
        if q**self.k > BRUTEFORCE_LIMIT:
            raise CapacityError(f"{q}^{self.k} codewords exceed the enumeration limit")
        msgs = np.array(list(itertools.product(range(q), repeat=self.k)), dtype=np.int64)
        if self.k == 0:
            return np.zeros((1, self.n), dtype=np.int64)
        return self.field.matmul(msgs, self.generator)

    def same_space(self, other: ClassicalCode) -> bool:
        if self.k != other.k or self.n != other.n:
            return False
        if self.k == 0:
            return True
        return self.field.rank(np.vstack([self.generator, other.generator])) == self.k


def grs_generator(f: Field, n: int, k: int, points, multipliers=None) -> ClassicalCode:
    """Generalized Reed-Solomon code: row i is (v_j * a_j^i)_j."""
    points = [int(a) for a in points]
    multipliers = [1] * n if multipliers is None else [int(v) for v in multipliers]
    if len(points) != n or len(multipliers) != n:
        raise ValidationError("need exactly n evaluation points and n multipliers")
    if n > f.order:
        raise ValidationError(f"length {n} exceeds field size {f.order}")
    if len(set(points)) != n:
        raise ValidationError("evaluation points must be distinct")
    if any(v == 0 for v in multipliers) or any(not 0 <= a < f.order for a in points + multipliers):
        raise ValidationError("multipliers must be nonzero field elements")
    if not 0 <= k <= n:
        raise ValidationError("need 0 <= k <= n")
    G = np.array(
        [[f.mul(multipliers[j], f.power(points[j], i)) for j in range(n)] for i in range(k)],
        dtype=np.int64,
    ).reshape(k, n)
    return ClassicalCode(f, G)


def min_distance_bruteforce(c: ClassicalCode) -> int:
    """Minimum Hamming weight over all nonzero codewords (exhaustive)."""
    if c.k == 0:
        raise ValidationError("the zero code has no nonzero codewords")
    words = c.codewords()
    weights = np.count_nonzero(words, axis=1)
    return int(weights[weights > 0].min())


def self_orthogonality_check(c: ClassicalCode) -> bool:
    """True iff G G^T = 0 (Euclidean self-orthogonality)."""
    if c.k == 0:
        return True
    return not np.any(c.field.matmul(c.generator, c.generator.T))

"""Numerical certification of uniformity, purity and related properties.

Every check returns a :class:`VerificationReport`.  Deviations are absolute
and measured on normalized objects: a reduction with unit trace is compared
entrywise against ``I / d_S``; cross-reductions ``Tr_{S^c}|a><b|`` for
orthogonal basis vectors are compared against zero.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .codes import count_weyl
from .constructors import feasibility_check, is_qmds
from .errors import CapacityError, PreconditionError, ValidationError
from .tensor import PartySubset, PureState, Shape, Subspace, _bipartition, check_capacity, reduce_cross

__all__ = [
    "DEFAULT_TOL",
    "VerificationReport",
    "is_prop_identity",
    "feasibility_check",
    "state_uniformity",
    "max_uniformity",
    "subspace_uniformity",
    "verify_pure_code",
    "qmds_projector_check",
    "is_qmds",
    "me_subspace_check",
]

DEFAULT_TOL = 1e-9
WEYL_ENUM_LIMIT = 10**7


@dataclass
class VerificationReport:
    target: str
    kind: str
    param: int | None
    tol: float
    passed: bool
    max_deviation: float
    worst: list | str | None
    subset_count: int
    records: list[dict] = field(default_factory=list)
    wall_time: float | None = None
    note: str | None = None

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        p = "" if self.param is None else f" {self.param}"
        return (
            f"[{verdict}] {self.kind}{p} on {self.target}: max deviation {self.max_deviation:.3e} "
            f"over {self.subset_count} checks (tol {self.tol:g})"
        )

    def __bool__(self) -> bool:
        return self.passed


def _finish(target, kind, param, tol, records, worst_key, t0, note=None) -> VerificationReport:
    """Assemble a report from per-item records (already in deterministic order)."""
    devs = [max(rec.get("diag", 0.0), rec.get("offdiag", 0.0)) for rec in records]
    i_worst = int(np.argmax(devs)) if devs else None
    max_dev = devs[i_worst] if devs else 0.0
    worst = records[i_worst][worst_key] if devs else None
    passed = all(dev <= tol for dev in devs)
    if note and note.startswith("infeasible"):
        passed = False
    return VerificationReport(
        target=target,
        kind=kind,
        param=param,
        tol=tol,
        passed=passed,
        max_deviation=float(max_dev),
        worst=worst,
        subset_count=len(records),
        records=records,
        wall_time=time.perf_counter() - t0,
        note=note,
    )


def _map(fn, items, threads: int | None):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def is_prop_identity(M, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Compare ``M`` to ``(tr M / dim) I`` entrywise."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("is_prop_identity needs a square matrix")
    dim = M.shape[0]
    target = np.trace(M) / dim * np.eye(dim)
    dev = float(np.max(np.abs(M - target))) if dim else 0.0
    return dev <= tol, dev


def _name(obj, default: str) -> str:
    name = getattr(obj, "name", None)
    return name or f"{default} on {obj.shape}"


def state_uniformity(s: PureState, r: int, tol: float = DEFAULT_TOL, threads: int | None = None,
                     target: str | None = None) -> VerificationReport:
    """Check that every r-party reduction of ``s`` is maximally mixed."""
    t0 = time.perf_counter()
    if isinstance(s, Subspace):
        if s.K != 1:
            raise ValidationError(f"state_uniformity needs a state, got a {s.K}-dim subspace")
        s = s.state(0)
    n = s.n
    if not 1 <= r < n:
        raise ValidationError(f"need 1 <= r < n, got r={r}, n={n}")
    subsets = [PartySubset(c) for c in itertools.combinations(range(n), r)]
    worst_dS = max(s.shape.sub_dim(S) for S in subsets)
    check_capacity(worst_dS * s.shape.total, "uniformity check")

    def one(S):
        M = _bipartition(s.amplitudes, s.shape, S)
        dS, dSc = M.shape
        if dS <= dSc:
            rho = M @ M.conj().T
            dev = float(np.max(np.abs(rho - np.eye(dS) / dS)))
        else:
            # rank(rho_S) <= dSc < dS, so it cannot be maximally mixed;
            # the complement Gram has the same nonzero spectrum
            g = np.linalg.eigvalsh(M.conj().T @ M)
            dev = float(max(np.max(np.abs(g - 1.0 / dS)), 1.0 / dS))
        return {"subset": list(S), "diag": dev}

    records = _map(one, subsets, threads)
    note = None if feasibility_check(s.shape, r) else "infeasible: Schmidt condition violated"
    return _finish(target or _name(s, "state"), "state_uniformity", r, tol, records, "subset", t0, note)


def max_uniformity(s: PureState, tol: float = DEFAULT_TOL, threads: int | None = None) -> int:
    """Largest r for which ``s`` is r-uniform (0 if not even 1-uniform)."""
    best = 0
    for r in range(1, s.n):
        if not feasibility_check(s.shape, r):
            break
        if not state_uniformity(s, r, tol, threads).passed:
            break
        best = r
    return best


def _subset_cross_devs(B: np.ndarray, shape: Shape, S: PartySubset):
    K = B.shape[0]
    M = _bipartition(B, shape, S)  # (K, dS, dSc)
    _, dS, dSc = M.shape
    A = M.reshape(K * dS, dSc)
    G = (A @ A.conj().T).reshape(K, dS, K, dS).transpose(0, 2, 1, 3)  # G[i,j] = Tr_{S^c}|i><j|
    eye = np.eye(dS) / dS
    diag = 0.0
    off = 0.0
    for i in range(K):
        diag = max(diag, float(np.max(np.abs(G[i, i] - eye))))
    if K > 1:
        mask = ~np.eye(K, dtype=bool)
        off = float(np.max(np.abs(G[mask])))
    return diag, off


def subspace_uniformity(W: Subspace, r: int, tol: float = DEFAULT_TOL, threads: int | None = None,
                        target: str | None = None) -> VerificationReport:
    """Check ``Tr_{S^c}|psi_i><psi_j| = delta_ij I/d_S`` for all r-subsets and basis pairs."""
    t0 = time.perf_counter()
    n = W.n
    if not 1 <= r < n:
        raise ValidationError(f"need 1 <= r < n, got r={r}, n={n}")
    subsets = [PartySubset(c) for c in itertools.combinations(range(n), r)]
    worst_dS = max(W.shape.sub_dim(S) for S in subsets)
    check_capacity(W.K * worst_dS * W.shape.total, "subspace uniformity check")
    check_capacity((W.K * worst_dS) ** 2, "subspace uniformity Gram block")

    def one(S):
        diag, off = _subset_cross_devs(W.basis, W.shape, S)
        return {"subset": list(S), "diag": diag, "offdiag": off}

    records = _map(one, subsets, threads)
    note = None if feasibility_check(W.shape, r) else "infeasible: Schmidt condition violated"
    return _finish(target or _name(W, "subspace"), "subspace_uniformity", r, tol, records, "subset", t0, note)


def verify_pure_code(W: Subspace, d: int, tol: float = DEFAULT_TOL, threads: int | None = None,
                     target: str | None = None) -> VerificationReport:
    """Check ``<psi_i|E|psi_j> = 0`` for every Weyl error of weight 1..d-1 and all i, j."""
    t0 = time.perf_counter()
    if d < 2:
        raise ValidationError("distance must be >= 2")
    dims = W.dims
    if d - 1 > W.n:
        raise ValidationError(f"distance {d} impossible on {W.n} parties")
    total = count_weyl(dims, d - 1)
    if total > WEYL_ENUM_LIMIT:
        raise CapacityError(f"{total} Weyl operators exceed the enumeration limit {WEYL_ENUM_LIMIT}")
    K = W.K
    T = W.basis.reshape((K,) + dims)
    Tc = T.conj()

    # group operators by support so each group is one record
    supports = [c for w in range(1, d) for c in itertools.combinations(range(W.n), w)]

    def one(sub):
        # <psi_i| X^a Z^b |psi_j> for every (a, b) on `sub`: one pass per shift a,
        # then an n-dimensional DFT over the support axes yields every b at once
        w = len(sub)
        axes = tuple(range(1, w + 1))
        sd = tuple(dims[k] for k in sub)
        A = np.moveaxis(T, [1 + k for k in sub], axes).reshape((K,) + sd + (-1,))
        Ac = np.moveaxis(Tc, [1 + k for k in sub], axes).reshape((K,) + sd + (-1,))
        worst, worst_op = -1.0, None
        for a in itertools.product(*(range(m) for m in sd)):
            shifted = np.roll(A, a, axis=axes)  # (X^a psi)[c] = psi[c - a]
            F = np.einsum("i...r,j...r->ij...", Ac, shifted)
            vals = np.abs(np.fft.ifftn(F, axes=tuple(range(2, 2 + w))) * math.prod(sd))
            # keep operators whose support is exactly `sub`
            mask = np.ones(sd, dtype=bool)
            for pos, ak in enumerate(a):
                if ak == 0:
                    idx = [slice(None)] * w
                    idx[pos] = 0
                    mask[tuple(idx)] = False
            if not mask.any():
                continue
            cand = np.where(mask, vals.max(axis=(0, 1)), -1.0)
            b = np.unravel_index(int(np.argmax(cand)), sd)
            if cand[b] > worst:
                x = [0] * W.n
                z = [0] * W.n
                for k, ak, bk in zip(sub, a, b):
                    x[k], z[k] = int(ak), int(bk)
                worst, worst_op = float(cand[b]), {"x": x, "z": z}
        return {"support": list(sub), "offdiag": worst, "operator": worst_op}

    records = _map(one, supports, threads)
    rep = _finish(target or _name(W, "code"), "pure_distance", d, tol, records, "operator", t0)
    return rep


def qmds_projector_check(W: Subspace, d: int, tol: float = DEFAULT_TOL, threads: int | None = None,
                         target: str | None = None) -> VerificationReport:
    """Every reduction of P/K to n-(d-1) parties must be maximally mixed."""
    t0 = time.perf_counter()
    if not is_qmds(W, d):
        raise PreconditionError(f"K={W.K} on {W.shape} does not saturate the quantum Singleton bound for d={d}")
    m = W.n - (d - 1)
    subsets = [PartySubset(c) for c in itertools.combinations(range(W.n), m)]
    B = W.basis

    def one(S):
        M = _bipartition(B, W.shape, S)  # (K, dS, dSc)
        K, dS, dSc = M.shape
        A = M.transpose(1, 0, 2).reshape(dS, K * dSc)
        rho = (A @ A.conj().T) / K
        dev = float(np.max(np.abs(rho - np.eye(dS) / dS)))
        return {"subset": list(S), "diag": dev}

    records = _map(one, subsets, threads)
    return _finish(target or _name(W, "code"), "qmds_projector", d, tol, records, "subset", t0)


def me_subspace_check(W: Subspace, party: int = 0, trials: int = 20, tol: float = DEFAULT_TOL,
                      seed: int = 0, target: str | None = None) -> VerificationReport:
    """Every unit vector of W must have a maximally mixed reduction on ``party``.

    Exact part: cross-reductions of basis pairs on {party} against delta_ij I/d.
    Spot part: ``trials`` random unit combinations.
    """
    t0 = time.perf_counter()
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    S = PartySubset((party,)).check(W.n, proper=True)
    diag, off = _subset_cross_devs(W.basis, W.shape, S)
    records = [{"subset": list(S), "item": "basis pairs", "diag": diag, "offdiag": off}]
    rng = np.random.default_rng(seed)
    dS = W.shape.sub_dim(S)
    for t in range(trials):
        c = rng.normal(size=W.K) + 1j * rng.normal(size=W.K)
        v = W.combination(c)
        M = _bipartition(v.amplitudes, v.shape, S)
        dev = float(np.max(np.abs(M @ M.conj().T - np.eye(dS) / dS)))
        records.append({"subset": list(S), "item": f"trial {t}", "diag": dev})
    return _finish(target or _name(W, "subspace"), "me_subspace", party, tol, records, "item", t0)


def combinations_uniformity(W: Subspace, r: int, count: int = 100, seed: int = 0,
                            tol: float = DEFAULT_TOL) -> list[VerificationReport]:
    """state_uniformity on ``count`` random unit combinations of W's basis."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.normal(size=W.K) + 1j * rng.normal(size=W.K)
        out.append(state_uniformity(W.combination(c), r, tol))
    return out

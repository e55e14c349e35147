"""Topological execution of a RecipeGraph with content-addressed caching."""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import constructors as C
from ..errors import ForgeError
from ..registry import registry_materialize
from ..tensor import PureState, Subspace, random_unitary
from ..verify import (
    DEFAULT_TOL,
    VerificationReport,
    max_uniformity,
    me_subspace_check,
    qmds_projector_check,
    state_uniformity,
    subspace_uniformity,
    verify_pure_code,
)
from .io import dumps, read_any, write_any, write_report
from .recipe import RecipeGraph, resolve_path

__all__ = ["NodeError", "ExecutionResult", "execute", "node_keys", "clear_cache"]

REPORT_VERSION = 1
_MEMO: dict[str, object] = {}
_MEMO_LOCK = threading.Lock()


class NodeError(ForgeError):
    """A construction failure, attributed to the node that raised it."""

    def __init__(self, node: str, op: str, cause: Exception):
        self.node, self.op, self.cause = node, op, cause
        super().__init__(f"node {node!r} ({op}): {cause}")


def clear_cache() -> None:
    with _MEMO_LOCK:
        _MEMO.clear()


@dataclass
class ExecutionResult:
    graph: RecipeGraph
    artifacts: dict[str, object]
    reports: list[VerificationReport]
    predictions: dict[str, dict]
    keys: dict[str, str]
    files: dict[str, Path] = field(default_factory=dict)
    cache_hits: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def report_doc(self, timing: bool = False) -> dict:
        g = self.graph
        nodes = {}
        for nid in g.order:
            sig = g.signatures[nid]
            entry = {"op": g.nodes[nid].op, "key": self.keys[nid]}
            if sig.kind != "prediction":
                entry.update(kind=sig.kind, dims=list(sig.dims), K=sig.K, uniformity=sig.uniformity)
            nodes[nid] = entry
        outputs = {}
        for nid, path in self.files.items():
            outputs[nid] = {"file": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}
        return {
            "format_version": REPORT_VERSION,
            "kind": "report",
            "recipe": g.name,
            "seed": g.seed,
            "passed": self.passed,
            "nodes": nodes,
            "predictions": self.predictions,
            "checks": [r.to_dict(timing) for r in self.reports],
            "outputs": outputs,
        }


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _registry_digest() -> str:
    from importlib import resources

    return hashlib.sha256(resources.files("isoforge").joinpath("data/codes.json").read_bytes()).hexdigest()


def node_keys(g: RecipeGraph) -> dict[str, str]:
    """Content hash of each node: op, params, input keys, seed, plus file digests for imports."""
    keys: dict[str, str] = {}
    for nid in g.order:
        node = g.nodes[nid]
        payload = {"op": node.op, "params": node.params, "inputs": [keys[x] for x in node.inputs], "seed": g.seed}
        if node.op == "import":
            payload["file"] = _file_digest(resolve_path(node.params["path"], g.base_dir))
        elif node.op == "code":
            payload["registry"] = _registry_digest()
        keys[nid] = hashlib.sha256(_canon(payload).encode()).hexdigest()
    return keys


def _rng(key: str) -> np.random.Generator:
    return np.random.default_rng(int(key[:16], 16))


def _local_bases(spec, dims, rng):
    """'computational' (None), 'random', or explicit [[re, im] ...] rows per party."""
    if spec in (None, "computational"):
        return None
    if spec == "random":
        return [random_unitary(d, rng) for d in dims]
    return [np.asarray(U, dtype=float)[..., 0] + 1j * np.asarray(U, dtype=float)[..., 1] for U in spec]


def _run_op(g: RecipeGraph, nid: str, ins: list, key: str):
    node = g.nodes[nid]
    p, op = node.params, node.op
    if op == "code":
        return registry_materialize(p["name"])
    if op == "import":
        obj = read_any(resolve_path(p["path"], g.base_dir))
        if isinstance(obj, Subspace) and "uniformity" in p:
            obj = obj.with_meta(uniformity=p["uniformity"])
        return obj
    if op == "me_state":
        return C.me_state(p["k"], p.get("dim_b"))
    if op == "me_subspace":
        return C.me_subspace(p["p"])
    if op == "glue":
        return C.glue(*ins)
    if op == "eliminate":
        W = ins[0]
        bases = _local_bases(p.get("basis"), [W.dims[p["party"]]], _rng(key))
        return C.eliminate(W, p["party"], None if bases is None else bases[0])
    if op == "split":
        d1, d2 = p["factors"]
        W = ins[0]
        for k in sorted(p.get("parties", [p.get("party")]), reverse=True):
            W = C.split(W, k, d1, d2)
        return W
    if op == "merge":
        return C.merge(ins[0], p["groups"])
    if op == "permute":
        return C.permute(ins[0], p["perm"])
    if op == "apply":
        return C.apply(ins[0], ins[1], p["targets"])
    if op == "combine":
        return C.combine(ins[0], ins[1])
    if op == "combine_eliminate":
        A, B = ins
        a, b = p["alpha"], p["beta"]
        parties = p.get("parties")
        p1, p2 = parties if parties else (range(A.n - a, A.n), range(B.n - b, B.n))
        dims = [A.dims[k] for k in p1] + [B.dims[k] for k in p2]
        bases = _local_bases(p.get("basis"), dims, _rng(key))
        return C.combine_eliminate(A, B, a, b, bases=bases, parties=parties)
    raise ForgeError(f"op {op!r} has no executor")  # unreachable after parse


def _prediction_report(nid: str, got: dict, expect: dict) -> VerificationReport:
    records = []
    for k in sorted(expect):
        diff = abs(got.get(k, float("nan")) - expect[k]) if k in got else float("inf")
        records.append({"field": k, "expected": expect[k], "got": got.get(k), "diag": float(diff)})
    devs = [r["diag"] for r in records]
    i = int(np.argmax(devs)) if devs else None
    return VerificationReport(
        target=nid, kind="prediction", param=None, tol=0.0, passed=all(d == 0 for d in devs),
        max_deviation=float(max(devs, default=0.0)), worst=None if i is None else records[i]["field"],
        subset_count=len(records), records=records,
    )


def _check(g: RecipeGraph, v, obj, tol: float, threads, predictions) -> list[VerificationReport]:
    p = v.params
    tgt = v.node
    if v.kind == "prediction":
        return [_prediction_report(tgt, predictions[tgt], p["expect"])]
    W = obj.as_subspace() if isinstance(obj, PureState) else obj
    if v.kind == "uniformity":
        if isinstance(obj, PureState):
            return [state_uniformity(obj, p["r"], tol, threads, tgt)]
        return [subspace_uniformity(obj, p["r"], tol, threads, tgt)]
    if v.kind == "pure_distance":
        return [verify_pure_code(W, p["d"], tol, threads, tgt)]
    if v.kind == "qmds":
        return [qmds_projector_check(W, p["d"], tol, threads, tgt)]
    if v.kind == "me_subspace":
        return [me_subspace_check(W, p.get("party", 0), p.get("trials", 20), tol, seed=g.seed, target=tgt)]
    if v.kind == "combinations":
        rng = np.random.default_rng(g.seed)
        out = []
        for t in range(p.get("count", 20)):
            c = rng.normal(size=W.K) + 1j * rng.normal(size=W.K)
            out.append(state_uniformity(W.combination(c), p["r"], tol, threads, f"{tgt}[combination {t}]"))
        return out
    if v.kind == "max_uniformity":
        got = max_uniformity(obj, tol, threads)
        rec = {"field": "max_uniformity", "expected": p["expect"], "got": got, "diag": float(abs(got - p["expect"]))}
        return [VerificationReport(tgt, "max_uniformity", p["expect"], tol, got == p["expect"], rec["diag"],
                                   None if got == p["expect"] else "max_uniformity", 1, [rec])]
    if v.kind == "dimension":
        records = []
        if "K" in p:
            records.append({"field": "K", "expected": p["K"], "got": W.K, "diag": float(abs(W.K - p["K"]))})
        if "dims" in p:
            same = list(W.dims) == list(p["dims"])
            records.append({"field": "dims", "expected": p["dims"], "got": list(W.dims), "diag": 0.0 if same else 1.0})
        bad = [r["field"] for r in records if r["diag"]]
        return [VerificationReport(tgt, "dimension", None, 0.0, not bad, max(r["diag"] for r in records),
                                   bad[0] if bad else None, len(records), records)]
    raise ForgeError(f"unknown verification kind {v.kind!r}")


def _cache_load(cache_dir: Path | None, key: str):
    with _MEMO_LOCK:
        if key in _MEMO:
            return _MEMO[key]
    if cache_dir is not None:
        f = cache_dir / f"{key}.json"
        if f.exists():
            obj = read_any(f)
            with _MEMO_LOCK:
                _MEMO[key] = obj
            return obj
    return None


def _cache_store(cache_dir: Path | None, key: str, obj) -> None:
    with _MEMO_LOCK:
        _MEMO[key] = obj
    if cache_dir is not None:
        write_any(cache_dir / f"{key}.json", obj)


def execute(g: RecipeGraph, out_dir=None, report_path=None, tol: float | None = None,
            threads: int | None = None, cache_dir=None, use_cache: bool = True,
            timing: bool = False) -> ExecutionResult:
    """Run every needed node in topological order, then the requested checks.

    Capacity is checked statically for the whole graph before any node runs.
    Output nodes are written to ``out_dir`` as ``<id>.state.json`` or
    ``<id>.subspace.json``; the report goes to ``report_path`` (default
    ``out_dir/report.json``).
    """
    g.check_capacity()
    keys = node_keys(g)
    cache_dir = Path(cache_dir) if cache_dir is not None else None
    artifacts: dict[str, object] = {}
    predictions = {nid: dict(sig.prediction) for nid, sig in g.signatures.items() if sig.kind == "prediction"}
    hits = 0
    for nid in g.needed():
        node = g.nodes[nid]
        if node.op == "predict":
            continue
        obj = _cache_load(cache_dir, keys[nid]) if use_cache else None
        if obj is None:
            try:
                obj = _run_op(g, nid, [artifacts[x] for x in node.inputs], keys[nid])
            except ForgeError as exc:
                raise NodeError(nid, node.op, exc) from exc
            if use_cache:
                _cache_store(cache_dir, keys[nid], obj)
        else:
            hits += 1
        artifacts[nid] = obj

    reports: list[VerificationReport] = []
    for v in g.verify:
        t = v.tol if v.tol is not None else tol if tol is not None else g.tol if g.tol is not None else DEFAULT_TOL
        try:
            reports.extend(_check(g, v, artifacts.get(v.node), t, threads, predictions))
        except ForgeError as exc:
            raise NodeError(v.node, f"verify {v.kind}", exc) from exc

    res = ExecutionResult(g, artifacts, reports, predictions, keys, cache_hits=hits)
    if out_dir is not None:
        out = Path(out_dir)
        for nid in g.outputs:
            obj = artifacts.get(nid)
            if obj is None:
                path = out / f"{nid}.prediction.json"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(dumps(predictions[nid]))
            else:
                suffix = "state" if isinstance(obj, PureState) else "subspace"
                path = write_any(out / f"{nid}.{suffix}.json", obj)
            res.files[nid] = path
        if report_path is None:
            report_path = out / "report.json"
    if report_path is not None:
        write_report(report_path, res.report_doc(timing))
    return res

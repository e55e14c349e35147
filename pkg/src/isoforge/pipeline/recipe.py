"""Recipe documents: parsing, validation and static shape inference.

A recipe is a JSON object::

    {"format_version": 1, "name": "qubit_five_qutrits", "seed": 0, "tol": 1e-9,
     "nodes": [{"id": "V", "op": "code", "params": {"name": "((5,3,3))_3"}},
               {"id": "bell", "op": "me_state", "params": {"k": 2, "dim_b": 3}},
               {"id": "psi", "op": "apply", "inputs": ["V", "bell"],
                "params": {"targets": [1]}}],
     "outputs": ["psi"],
     "verify": [{"node": "psi", "kind": "uniformity", "r": 2}]}

``parse_recipe`` never executes anything.  It resolves registry parameters
and import headers to infer the dimensions of every node, so shape errors
and capacity overruns surface before any amplitude is computed.  All
problems are collected into one :class:`RecipeError`.
"""

from __future__ import annotations

import graphlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..constructors import predict_combine, predict_combine_eliminate, predict_corollary1
from ..errors import CapacityError, ForgeError, FormatError, ValidationError
from ..registry import registry_get
from ..tensor import capacity

__all__ = [
    "OPS",
    "VERIFY_KINDS",
    "Diagnostic",
    "RecipeError",
    "Node",
    "VerifyRequest",
    "Signature",
    "RecipeGraph",
    "parse_recipe",
    "load_recipe",
]

FORMAT_VERSION = 1

# op -> allowed input counts
OPS: dict[str, tuple[int, ...]] = {
    "code": (0,),
    "import": (0,),
    "me_state": (0,),
    "me_subspace": (0,),
    "glue": (2,),
    "eliminate": (1,),
    "split": (1,),
    "merge": (1,),
    "combine": (2,),
    "combine_eliminate": (2,),
    "apply": (2,),
    "permute": (1,),
    "predict": (0, 2),
}

VERIFY_KINDS = ("uniformity", "pure_distance", "qmds", "me_subspace", "max_uniformity", "dimension",
                "combinations", "prediction")


@dataclass(frozen=True)
class Diagnostic:
    node: str | None
    reason: str

    def __str__(self) -> str:
        return f"{self.node}: {self.reason}" if self.node else self.reason


class RecipeError(ValidationError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid recipe:\n  " + "\n  ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Node:
    id: str
    op: str
    params: dict = field(default_factory=dict, hash=False)
    inputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class VerifyRequest:
    node: str
    kind: str
    params: dict = field(default_factory=dict, hash=False)
    tol: float | None = None


@dataclass(frozen=True)
class Signature:
    """What static inference knows about a node's output."""

    kind: str  # "state" | "subspace" | "prediction"
    dims: tuple[int, ...] = ()
    K: int = 1
    uniformity: int | None = None
    peak: int = 0  # largest dense array the op needs, in amplitudes
    prediction: dict | None = None

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    @property
    def size(self) -> int:
        return self.K * self.total


@dataclass
class RecipeGraph:
    name: str
    nodes: dict[str, Node]
    order: list[str]
    outputs: list[str]
    verify: list[VerifyRequest]
    seed: int = 0
    tol: float | None = None
    base_dir: Path | None = None
    signatures: dict[str, Signature] = field(default_factory=dict)

    def needed(self) -> list[str]:
        """Nodes that must be materialized, in execution order.

        Prediction nodes only need their inputs' static signatures, so a
        code used solely for a prediction is never built.
        """
        roots = set(self.outputs) | {v.node for v in self.verify}
        need: set[str] = set()
        stack = list(roots)
        while stack:
            nid = stack.pop()
            if nid in need:
                continue
            need.add(nid)
            if self.nodes[nid].op != "predict":
                stack.extend(self.nodes[nid].inputs)
        return [nid for nid in self.order if nid in need]

    def check_capacity(self) -> None:
        cap = capacity()
        for nid in self.needed():
            sig = self.signatures[nid]
            if sig.kind == "prediction":
                continue
            size = max(sig.size, sig.peak)
            if size > cap:
                raise CapacityError(
                    f"node {nid!r} ({self.nodes[nid].op}) needs {size} dense amplitudes on "
                    f"{_shape_str(sig.dims)}, above the capacity cap {cap} "
                    "(raise FORGE_CAPACITY to attempt it)"
                )


def _shape_str(dims) -> str:
    from ..tensor import Shape

    try:
        return str(Shape(tuple(dims)))
    except ForgeError:
        return str(list(dims))


# -- static inference per op ----------------------------------------------------


class _Bad(Exception):
    pass


def _int(params: dict, key: str, default=None, lo: int | None = None) -> int:
    if key not in params:
        if default is None:
            raise _Bad(f"missing parameter {key!r}")
        return default
    v = params[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise _Bad(f"parameter {key!r} must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise _Bad(f"parameter {key!r} must be >= {lo}, got {v}")
    return v


def _party_list(params: dict, key: str, n: int) -> list[int]:
    v = params.get(key)
    if not isinstance(v, list) or not all(isinstance(k, int) for k in v):
        raise _Bad(f"parameter {key!r} must be a list of party indices")
    if any(not 0 <= k < n for k in v):
        raise _Bad(f"{key} {v} out of range for {n} parties")
    if len(set(v)) != len(v):
        raise _Bad(f"repeated party in {key} {v}")
    return v


def _qmds_sig(sig: Signature, which: str) -> tuple[int, int, int]:
    if sig.kind != "subspace":
        raise _Bad(f"{which} input must be a code subspace")
    if sig.uniformity is None:
        raise _Bad(f"{which} input has no known distance")
    n, r = len(sig.dims), sig.uniformity
    if len(set(sig.dims)) != 1 or n - 2 * r < 0 or sig.K != sig.dims[0] ** (n - 2 * r):
        raise _Bad(f"{which} input (({n},{sig.K},{r + 1}))_{sig.dims[0]} is not QMDS")
    return n, r, sig.dims[0]


def _infer_predict(node: Node, ins: list[Signature]) -> Signature:
    p = node.params
    what = p.get("kind")
    if what == "corollary1":
        if ins:
            raise _Bad("corollary1 prediction takes explicit n and d")
        val = predict_corollary1(_int(p, "n", lo=1), _int(p, "d", lo=1))
        return Signature("prediction", prediction={"kind": what, "d": val})
    if what not in ("combine", "combine_eliminate"):
        raise _Bad(f"unknown prediction kind {what!r}")
    if ins:
        n1, r1, D1 = _qmds_sig(ins[0], "first")
        n2, r2, D2 = _qmds_sig(ins[1], "second")
    else:
        dflt = 2 if what == "combine" else None  # local dimension is irrelevant to l
        n1, r1, D1 = _int(p, "n1", lo=1), _int(p, "r1", lo=0), _int(p, "D1", dflt, lo=2)
        n2, r2, D2 = _int(p, "n2", lo=1), _int(p, "r2", lo=0), _int(p, "D2", dflt, lo=2)
    if what == "combine":
        return Signature("prediction", prediction={"kind": what, "l": predict_combine(n1, r1, n2, r2)})
    pred = predict_combine_eliminate(n1, r1, D1, n2, r2, D2, _int(p, "alpha", 0), _int(p, "beta", 0))
    return Signature("prediction", prediction={"kind": what, "l": pred.l, "dim": pred.dim})


def _infer(node: Node, ins: list[Signature], base_dir: Path | None) -> Signature:
    p, op = node.params, node.op
    for k, s in enumerate(ins):
        if s.kind == "prediction" and op != "predict":
            raise _Bad(f"input {node.inputs[k]!r} is a prediction, not a state or subspace")

    if op == "code":
        if "name" not in p:
            raise _Bad("missing parameter 'name'")
        e = registry_get(p["name"])
        return Signature("subspace", e.dims, e.K, e.d - 1)
    if op == "import":
        from .io import read_header

        if "path" not in p:
            raise _Bad("missing parameter 'path'")
        path = resolve_path(p["path"], base_dir)
        if not path.exists():
            raise _Bad(f"import file {p['path']!r} not found")
        try:
            h = read_header(path)
        except FormatError as exc:
            raise _Bad(str(exc)) from None
        kind = "state" if h["kind"] == "state" else "subspace"
        return Signature(kind, tuple(h["dims"]), int(h["K"]), p.get("uniformity", h.get("uniformity")))
    if op == "me_state":
        k = _int(p, "k", lo=2)
        b = _int(p, "dim_b", k)
        if b < k:
            raise _Bad(f"dim_b={b} < k={k}")
        return Signature("state", (k, b))
    if op == "me_subspace":
        q = _int(p, "p", lo=2)
        return Signature("subspace", (2, q), q // 2)
    if op == "predict":
        return _infer_predict(node, ins)

    a = ins[0]
    n = len(a.dims)
    if op == "glue":
        b = ins[1]
        r = None if a.uniformity is None or b.uniformity is None else min(a.uniformity, b.uniformity)
        return Signature("subspace", a.dims + b.dims, a.K * b.K, r)
    if op == "eliminate":
        party = _int(p, "party", lo=0)
        if party >= n:
            raise _Bad(f"party {party} out of range for {n} parties")
        if n < 2:
            raise _Bad("cannot eliminate the only party")
        if a.uniformity is not None and a.uniformity < 1:
            raise _Bad(f"elimination needs uniformity >= 1, input claims {a.uniformity}")
        r = None if a.uniformity is None else a.uniformity - 1
        return Signature("subspace", a.dims[:party] + a.dims[party + 1 :], a.K * a.dims[party], r)
    if op == "split":
        f = p.get("factors")
        if not (isinstance(f, list) and len(f) == 2 and all(isinstance(x, int) and x >= 2 for x in f)):
            raise _Bad("parameter 'factors' must be two integers >= 2")
        parties = _party_list({"parties": p.get("parties", [p.get("party")])}, "parties", n)
        dims = list(a.dims)
        for k in sorted(parties, reverse=True):
            if dims[k] != f[0] * f[1]:
                raise _Bad(f"party {k} has dimension {dims[k]}, cannot split into {f[0]} x {f[1]}")
            dims[k : k + 1] = f
        return Signature(a.kind, tuple(dims), a.K, a.uniformity)
    if op == "merge":
        groups = p.get("groups")
        if not isinstance(groups, list) or not groups:
            raise _Bad("parameter 'groups' must be a non-empty list of party lists")
        flat = [k for g in groups for k in (g if isinstance(g, list) else [None])]
        _party_list({"g": flat}, "g", n)
        if any(len(g) < 2 for g in groups):
            raise _Bad("each merge group needs at least two parties")
        lead = {g[0]: g for g in groups}
        absorbed = {k for g in groups for k in g[1:]}
        dims = [math.prod(a.dims[j] for j in lead.get(k, [k])) for k in range(n) if k not in absorbed]
        return Signature(a.kind, tuple(dims), a.K, a.uniformity)
    if op == "permute":
        perm = p.get("perm")
        if not isinstance(perm, list) or sorted(perm) != list(range(n)):
            raise _Bad(f"parameter 'perm' must be a permutation of range({n})")
        return Signature(a.kind, tuple(a.dims[k] for k in perm), a.K, a.uniformity)
    if op == "apply":
        V, W = ins
        targets = p.get("targets")
        if isinstance(targets, int):
            targets = [targets]
        targets = sorted(_party_list({"targets": targets}, "targets", len(W.dims)))
        if not targets:
            raise _Bad("apply needs at least one target party")
        dT = math.prod(W.dims[k] for k in targets)
        if dT > V.K:
            raise _Bad(
                f"dimension mismatch: target parties {targets} have joint dimension {dT} "
                f"but the isometry input space has dimension {V.K}"
            )
        dims = []
        for k in range(len(W.dims)):
            if k == targets[0]:
                dims.extend(V.dims)
            elif k not in targets:
                dims.append(W.dims[k])
        return Signature(W.kind, tuple(dims), W.K, None, peak=W.K * math.prod(dims))
    if op == "combine":
        n1, r1, _ = _qmds_sig(a, "first")
        n2, r2, _ = _qmds_sig(ins[1], "second")
        if a.K != ins[1].K:
            raise _Bad(f"code dimensions differ: {a.K} vs {ins[1].K}")
        if a.K < 2:
            raise _Bad("combine needs K > 1")
        return Signature("state", a.dims + ins[1].dims, 1, predict_combine(n1, r1, n2, r2))
    if op == "combine_eliminate":
        b = ins[1]
        n1, r1, D1 = _qmds_sig(a, "first")
        n2, r2, D2 = _qmds_sig(b, "second")
        if a.K != b.K:
            raise _Bad(f"code dimensions differ: {a.K} vs {b.K}")
        alpha, beta = _int(p, "alpha", lo=0), _int(p, "beta", lo=0)
        pred = predict_combine_eliminate(n1, r1, D1, n2, r2, D2, alpha, beta)
        dims = a.dims[: n1 - alpha] + b.dims[: n2 - beta]
        return Signature("subspace", dims, pred.dim, pred.l, peak=a.total * b.total)
    raise _Bad(f"unknown op {op!r}")


def resolve_path(path: str, base_dir: Path | None) -> Path:
    """Relative import paths resolve against the recipe directory, then $FORGE_DATA_DIR."""
    import os

    p = Path(path)
    if p.is_absolute():
        return p
    candidates = []
    if base_dir is not None:
        candidates.append(base_dir / p)
    if os.environ.get("FORGE_DATA_DIR"):
        candidates.append(Path(os.environ["FORGE_DATA_DIR"]) / p)
    for c in candidates:
        if c.exists():
            return c
    return candidates[0] if candidates else p


# -- parsing ----------------------------------------------------------------------


def _check_verify(v: VerifyRequest, sig: Signature, node: Node) -> str | None:
    n = len(sig.dims)
    p = v.params
    if v.kind == "prediction":
        if sig.kind != "prediction":
            return "prediction check on a node that is not a predict op"
        return None if isinstance(p.get("expect"), dict) else "prediction check needs an 'expect' object"
    if sig.kind == "prediction":
        return f"{v.kind} check on a prediction node"
    if v.kind in ("uniformity", "combinations"):
        r = p.get("r")
        if not isinstance(r, int) or not 1 <= r < n:
            return f"uniformity r must satisfy 1 <= r < {n}, got {r!r}"
        if v.kind == "combinations" and sig.kind != "subspace":
            return "combinations check needs a subspace"
    if v.kind in ("pure_distance", "qmds"):
        d = p.get("d")
        if not isinstance(d, int) or not 2 <= d <= n + 1:
            return f"distance d must satisfy 2 <= d <= {n + 1}, got {d!r}"
    if v.kind == "me_subspace":
        party = p.get("party", 0)
        if not isinstance(party, int) or not 0 <= party < n:
            return f"party {party!r} out of range"
    if v.kind == "max_uniformity":
        if sig.kind != "state":
            return "max_uniformity needs a state"
        if not isinstance(p.get("expect"), int):
            return "max_uniformity needs an integer 'expect'"
    if v.kind == "dimension":
        if not isinstance(p.get("K"), int) and not isinstance(p.get("dims"), list):
            return "dimension check needs 'K' and/or 'dims'"
    return None


def parse_recipe(document, base_dir=None) -> RecipeGraph:
    """Validate a recipe document (dict or JSON text) into a RecipeGraph.

    Raises :class:`RecipeError` carrying every diagnostic found.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise FormatError(f"recipe is not valid JSON ({exc.msg})", exc.pos) from None
    if not isinstance(document, dict):
        raise RecipeError([Diagnostic(None, "recipe must be a JSON object")])
    diags: list[Diagnostic] = []
    if document.get("format_version") != FORMAT_VERSION:
        diags.append(Diagnostic(None, f"unsupported format_version {document.get('format_version')!r}"))
    raw_nodes = document.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise RecipeError(diags + [Diagnostic(None, "recipe needs a non-empty 'nodes' list")])

    nodes: dict[str, Node] = {}
    for k, rn in enumerate(raw_nodes):
        if not isinstance(rn, dict) or not isinstance(rn.get("id"), str):
            diags.append(Diagnostic(f"nodes[{k}]", "node needs a string 'id'"))
            continue
        nid = rn["id"]
        if nid in nodes:
            diags.append(Diagnostic(nid, "duplicate node id"))
            continue
        inputs = rn.get("inputs", [])
        params = rn.get("params", {})
        if not isinstance(inputs, list) or not all(isinstance(x, str) for x in inputs):
            diags.append(Diagnostic(nid, "'inputs' must be a list of node ids"))
            inputs = []
        if not isinstance(params, dict):
            diags.append(Diagnostic(nid, "'params' must be an object"))
            params = {}
        op = rn.get("op")
        if op not in OPS:
            diags.append(Diagnostic(nid, f"unknown op {op!r}"))
        elif len(inputs) not in OPS[op]:
            want = " or ".join(str(a) for a in OPS[op])
            diags.append(Diagnostic(nid, f"arity mismatch: {op} takes {want} inputs, got {len(inputs)}"))
        nodes[nid] = Node(nid, op, params, tuple(inputs))

    for node in nodes.values():
        for x in node.inputs:
            if x not in nodes:
                diags.append(Diagnostic(node.id, f"undefined input {x!r}"))

    ts = graphlib.TopologicalSorter({nid: [x for x in nd.inputs if x in nodes] for nid, nd in nodes.items()})
    try:
        order = list(ts.static_order())
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        diags.append(Diagnostic(cycle[0], "cycle: " + " -> ".join(cycle)))
        raise RecipeError(diags) from None

    outputs = document.get("outputs", [])
    if not isinstance(outputs, list):
        diags.append(Diagnostic(None, "'outputs' must be a list of node ids"))
        outputs = []
    for o in outputs:
        if o not in nodes:
            diags.append(Diagnostic(o, "declared output is not a node"))

    requests: list[VerifyRequest] = []
    for k, rv in enumerate(document.get("verify", [])):
        if not isinstance(rv, dict):
            diags.append(Diagnostic(f"verify[{k}]", "verification request must be an object"))
            continue
        target, kind = rv.get("node"), rv.get("kind")
        if target not in nodes:
            diags.append(Diagnostic(f"verify[{k}]", f"undefined node {target!r}"))
            continue
        if kind not in VERIFY_KINDS:
            diags.append(Diagnostic(target, f"unknown verification kind {kind!r}"))
            continue
        tol = rv.get("tol")
        params = {key: val for key, val in rv.items() if key not in ("node", "kind", "tol")}
        requests.append(VerifyRequest(target, kind, params, tol))

    if diags:
        raise RecipeError(diags)

    base = Path(base_dir) if base_dir is not None else None
    sigs: dict[str, Signature] = {}
    for nid in order:
        node = nodes[nid]
        ins = [sigs.get(x) for x in node.inputs]
        if any(s is None for s in ins):
            continue  # an input already failed
        try:
            sigs[nid] = _infer(node, ins, base)
        except _Bad as exc:
            diags.append(Diagnostic(nid, str(exc)))
        except ForgeError as exc:
            diags.append(Diagnostic(nid, str(exc)))
    for v in requests:
        if v.node in sigs:
            problem = _check_verify(v, sigs[v.node], nodes[v.node])
            if problem:
                diags.append(Diagnostic(v.node, problem))
    if diags:
        raise RecipeError(diags)

    seed = document.get("seed", 0)
    tol = document.get("tol")
    return RecipeGraph(
        name=document.get("name", "recipe"),
        nodes=nodes,
        order=order,
        outputs=list(outputs),
        verify=requests,
        seed=int(seed),
        tol=tol,
        base_dir=base,
        signatures=sigs,
    )


def load_recipe(path) -> RecipeGraph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read recipe {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})", len(text[: exc.pos].encode())) from None
    return parse_recipe(doc, base_dir=path.parent)

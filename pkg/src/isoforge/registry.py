"""Registry of the pure codes used as building blocks.

Records live in ``data/codes.json`` (``format_version`` 1).  Each record has
``name``, optional ``aliases``, the parameters ``n, K, d, D`` of
((n, K, d))_D and a ``realization``:

* ``{"kind": "stabilizer", "p", "m", "rows", ["phases"]}`` -- generator rows
  laid out ``[x | z]``; for ``m > 1`` entries are GF(p^m) elements and the
  code is expanded to GF(p) and merged back;
* ``{"kind": "css_grs", "p", "n", "k", "points", "multipliers"}`` -- CSS with
  HX = HZ = a GRS generator matrix over GF(p);
* ``{"kind": "derived", "op": "eliminate" | "expand" | "tensor_merge", ...}``;
* ``{"kind": "external", "file"}`` -- a state/subspace file looked up in
  ``$FORGE_DATA_DIR``; these entries are ``optional``.

Nothing here is trusted: materialization re-verifies purity at the declared
distance before returning.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .codes import StabilizerSpec, codespace_from_stabilizer, css, expand_prime_power
from .errors import ForgeError, RegistryError
from .tensor import Subspace

__all__ = [
    "CodeEntry",
    "normalize_name",
    "registry_entries",
    "registry_get",
    "registry_materialize",
    "stabilizer_spec",
    "selfcheck",
]

REGISTRY_VERSION = 1
_SUBSCRIPTS = str.maketrans("₀₁₂₃₄₅₆₇₈₉", "0123456789")


@dataclass(frozen=True)
class CodeEntry:
    name: str
    n: int
    K: int
    d: int
    D: int
    realization: dict = field(repr=False, hash=False, compare=False)
    aliases: tuple[str, ...] = ()
    optional: bool = False
    source: str | None = None

    @property
    def params(self) -> tuple[int, int, int, int]:
        return self.n, self.K, self.d, self.D

    @property
    def kind(self) -> str:
        return self.realization["kind"]

    @property
    def is_qmds(self) -> bool:
        e = self.n - 2 * (self.d - 1)
        return e >= 0 and self.K == self.D**e

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.D,) * self.n

    def label(self) -> str:
        return f"(({self.n},{self.K},{self.d}))_{self.D}"

    def materialize(self) -> Subspace:
        return registry_materialize(self)


def normalize_name(name: str) -> str:
    s = name.translate(_SUBSCRIPTS).replace(" ", "")
    # "[[5,1,3]]2" -> "[[5,1,3]]_2"
    s = re.sub(r"(\]\]|\)\))(\d+)$", r"\1_\2", s)
    return s


@lru_cache(maxsize=1)
def _load() -> dict[str, CodeEntry]:
    text = resources.files("isoforge").joinpath("data/codes.json").read_text()
    doc = json.loads(text)
    if doc.get("format_version") != REGISTRY_VERSION:
        raise RegistryError(f"unsupported registry format_version {doc.get('format_version')}")
    table: dict[str, CodeEntry] = {}
    for rec in doc["codes"]:
        entry = CodeEntry(
            name=rec["name"],
            n=rec["n"],
            K=rec["K"],
            d=rec["d"],
            D=rec["D"],
            realization=rec["realization"],
            aliases=tuple(rec.get("aliases", ())),
            optional=rec.get("optional", False),
            source=rec.get("source"),
        )
        for key in (entry.name,) + entry.aliases:
            table[normalize_name(key)] = entry
    return table


def registry_entries(include_optional: bool = True) -> list[CodeEntry]:
    seen, out = set(), []
    for entry in _load().values():
        if entry.name in seen or (entry.optional and not include_optional):
            continue
        seen.add(entry.name)
        out.append(entry)
    return out


def registry_get(name: str) -> CodeEntry:
    try:
        return _load()[normalize_name(name)]
    except KeyError:
        raise RegistryError(f"unknown code {name!r}") from None


def stabilizer_spec(entry: CodeEntry) -> StabilizerSpec:
    real = entry.realization
    if real["kind"] == "stabilizer":
        return StabilizerSpec(
            n=entry.n, p=real["p"], m=real.get("m", 1), rows=real["rows"], phases=real.get("phases"),
            k=None,
        )
    if real["kind"] == "css_grs":
        from .gf import field_make, grs_generator

        G = grs_generator(field_make(real["p"]), real["n"], real["k"], real["points"], real["multipliers"])
        return css(G, G, real["p"])
    if real["kind"] == "derived" and real["op"] == "expand":
        return expand_prime_power(stabilizer_spec(registry_get(real["input"])))
    raise RegistryError(f"{entry.name} has no stabilizer realization")


def _data_dir() -> Path | None:
    env = os.environ.get("FORGE_DATA_DIR")
    return Path(env) if env else None


def _build(entry: CodeEntry) -> Subspace:
    from . import constructors as C

    real = entry.realization
    kind = real["kind"]
    if kind in ("stabilizer", "css_grs"):
        spec = stabilizer_spec(entry)
        if spec.m == 1:
            return codespace_from_stabilizer(spec)
        W = codespace_from_stabilizer(expand_prime_power(spec))
        m = spec.m
        return C.merge(W, [tuple(range(m * i, m * i + m)) for i in range(entry.n)])
    if kind == "derived":
        op = real["op"]
        if op == "eliminate":
            return C.eliminate(registry_materialize(registry_get(real["input"])), real["party"])
        if op == "expand":
            return codespace_from_stabilizer(stabilizer_spec(entry))
        if op == "tensor_merge":
            a, b = (registry_materialize(registry_get(x)) for x in real["input"])
            glued = C.glue(a, b)
            return C.merge(glued, [(i, a.n + i) for i in range(a.n)])
        raise RegistryError(f"{entry.name}: unknown derivation {op!r}")
    if kind == "external":
        base = _data_dir()
        path = base / real["file"] if base else None
        if path is None or not path.exists():
            raise RegistryError(
                f"{entry.name} is feature-gated: data file {real['file']!r} not found "
                "(set FORGE_DATA_DIR to the directory holding it)"
            )
        from .pipeline.io import read_any

        obj = read_any(path)
        return obj if isinstance(obj, Subspace) else obj.as_subspace()
    raise RegistryError(f"{entry.name}: unknown realization kind {kind!r}")


_cache: dict[str, Subspace] = {}
_lock = threading.RLock()


def registry_materialize(entry: CodeEntry | str, verify: bool = True) -> Subspace:
    """Build the codespace of ``entry`` and check it is pure with distance d."""
    from .verify import verify_pure_code

    if isinstance(entry, str):
        entry = registry_get(entry)
    key = f"{entry.name}|{verify}"
    with _lock:
        if key in _cache:
            return _cache[key]
        try:
            W = _build(entry)
        except RegistryError:
            raise
        except ForgeError as exc:
            raise RegistryError(f"{entry.name}: construction failed: {exc}") from exc
        if W.dims != entry.dims or W.K != entry.K:
            raise RegistryError(
                f"{entry.name}: materialized {W.K}-dim subspace of {W.shape}, expected {entry.label()}"
            )
        if verify:
            rep = verify_pure_code(W, entry.d, target=entry.name)
            if not rep.passed:
                raise RegistryError(
                    f"{entry.name}: failed self-verification at distance {entry.d} "
                    f"(max deviation {rep.max_deviation:.3e})"
                )
        W = Subspace(W.shape, W.basis, uniformity=entry.d - 1, name=entry.name)
        _cache[key] = W
        return W


def selfcheck(names=None, include_optional: bool = False, threads: int | None = None):
    """Run purity and the (d-1)-uniformity cross-oracle on registry codes.

    Returns a list of ``(entry, pure_report, uniformity_report)``; optional
    entries without data are skipped.
    """
    from .verify import subspace_uniformity, verify_pure_code

    entries = [registry_get(n) for n in names] if names else registry_entries(include_optional)
    out = []
    for e in entries:
        try:
            W = registry_materialize(e, verify=False)
        except RegistryError:
            if e.optional:
                continue
            raise
        pure = verify_pure_code(W, e.d, threads=threads, target=e.name)
        unif = subspace_uniformity(W, e.d - 1, threads=threads, target=e.name)
        out.append((e, pure, unif))
    return out

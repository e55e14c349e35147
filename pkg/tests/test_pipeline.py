import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoforge.errors import CapacityError, FormatError
from isoforge.pipeline import (
    RecipeError,
    clear_cache,
    execute,
    load_recipe,
    parse_recipe,
    read_any,
    read_state,
    read_subspace,
    write_state,
    write_subspace,
)
from isoforge.registry import registry_materialize as code
from isoforge.tensor import Shape, basis_state, random_state

from conftest import small_dims

GALLERY = Path(__file__).resolve().parents[1] / "src" / "isoforge" / "recipes"


def doc(nodes, outputs=(), verify=(), **extra):
    return {"format_version": 1, "nodes": nodes, "outputs": list(outputs), "verify": list(verify), **extra}


def reasons(exc_info):
    return [(d.node, d.reason) for d in exc_info.value.diagnostics]


# -- file format ---------------------------------------------------------------------------


@settings(max_examples=20)
@given(small_dims(1, 4, 4, 200), st.integers(0, 2**32 - 1))
def test_state_round_trip_bit_exact(tmp_path_factory, dims, seed):
    s = random_state(dims, np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("io") / "s.json"
    write_state(path, s)
    t = read_state(path)
    assert t.dims == s.dims and np.array_equal(t.amplitudes, s.amplitudes)


def test_subspace_round_trip_with_sidecar(tmp_path):
    W = code("[[6,2,3]]_3")  # 9 * 729 * 16 bytes: above the embedding limit
    path = write_subspace(tmp_path / "w.json", W)
    header = json.loads(path.read_text())
    assert header["encoding"] == "sidecar" and (tmp_path / header["path"]).exists()
    V = read_subspace(path)
    assert np.array_equal(V.basis, W.basis) and V.uniformity == W.uniformity and V.name == W.name


def test_small_subspace_embeds(tmp_path):
    W = code("[[5,1,3]]_2")
    path = write_subspace(tmp_path / "w.json", W)
    assert json.loads(path.read_text())["encoding"] == "base64"
    assert np.array_equal(read_subspace(path).basis, W.basis)


def test_writes_are_byte_identical(tmp_path):
    s = random_state((2, 3), np.random.default_rng(1))
    a = write_state(tmp_path / "a.json", s).read_bytes()
    b = write_state(tmp_path / "b.json", s).read_bytes()
    assert a == b


def test_sidecar_hash_mismatch(tmp_path):
    path = write_subspace(tmp_path / "w.json", code("[[6,2,3]]_3"))
    side = tmp_path / json.loads(path.read_text())["path"]
    raw = bytearray(side.read_bytes())
    raw[0] ^= 1
    side.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="hash mismatch"):
        read_any(path)


@pytest.mark.parametrize(
    "mutate,match",
    [
        (lambda d: d.update(format_version=2), "format_version"),
        (lambda d: d.update(kind="matrix"), "unknown kind"),
        (lambda d: d.update(data="!!notbase64"), "base64"),
        (lambda d: d.update(dims=[2, 2, 2]), "expected"),
        (lambda d: d.pop("dims"), "missing field"),
        (lambda d: d.update(dtype="<f8"), "dtype"),
    ],
)
def test_malformed_files_report_offset(tmp_path, mutate, match):
    path = write_state(tmp_path / "s.json", random_state((2, 2), np.random.default_rng(0)))
    d = json.loads(path.read_text())
    mutate(d)
    path.write_text(json.dumps(d))
    with pytest.raises(FormatError, match=match) as exc:
        read_any(path)
    assert exc.value.offset is not None and "byte offset" in str(exc.value)


def test_truncated_json(tmp_path):
    path = write_state(tmp_path / "s.json", basis_state((2,), (0,)))
    text = path.read_text()
    path.write_text(text[:40])
    with pytest.raises(FormatError) as exc:
        read_any(path)
    assert exc.value.offset is not None and exc.value.offset <= 40


def test_unnormalized_payload_rejected(tmp_path):
    path = write_state(tmp_path / "s.json", basis_state((2, 2), (0, 1)))
    d = json.loads(path.read_text())
    import base64

    d["data"] = base64.b64encode(np.array([2, 0, 0, 0], dtype="<c16").tobytes()).decode()
    path.write_text(json.dumps(d))
    with pytest.raises(FormatError, match="invalid amplitudes"):
        read_any(path)


# -- recipe parsing --------------------------------------------------------------------------


def test_minimal_recipe():
    g = parse_recipe(doc([{"id": "a", "op": "me_state", "params": {"k": 2}}], outputs=["a"]))
    assert g.order == ["a"] and g.signatures["a"].dims == (2, 2)


def test_cycle_is_reported():
    with pytest.raises(RecipeError) as exc:
        parse_recipe(doc([
            {"id": "a", "op": "glue", "inputs": ["b", "c"]},
            {"id": "b", "op": "permute", "inputs": ["a"], "params": {"perm": [0]}},
            {"id": "c", "op": "me_state", "params": {"k": 2}},
        ]))
    assert any("cycle" in r for _, r in reasons(exc))


def test_every_structural_problem_is_reported():
    with pytest.raises(RecipeError) as exc:
        parse_recipe(doc([
            {"id": "a", "op": "teleport"},
            {"id": "b", "op": "glue", "inputs": ["c"]},
            {"id": "c", "op": "eliminate", "inputs": ["ghost"], "params": {"party": 0}},
            {"id": "c", "op": "me_state", "params": {"k": 2}},
        ], outputs=["nowhere"]))
    got = reasons(exc)
    assert ("a", "unknown op 'teleport'") in got
    assert any(n == "b" and "arity" in r for n, r in got)
    assert any(n == "c" and "undefined input 'ghost'" in r for n, r in got)
    assert any(n == "c" and "duplicate" in r for n, r in got)
    assert any(n == "nowhere" for n, _ in got)


def test_apply_dimension_mismatch_is_static():
    with pytest.raises(RecipeError) as exc:
        parse_recipe(doc([
            {"id": "V", "op": "code", "params": {"name": "[[5,1,3]]_2"}},
            {"id": "s", "op": "me_state", "params": {"k": 3}},
            {"id": "t", "op": "apply", "inputs": ["V", "s"], "params": {"targets": [1]}},
        ]))
    [(node, reason)] = reasons(exc)
    assert node == "t" and "dimension mismatch" in reason


def test_combine_precondition_is_static():
    with pytest.raises(RecipeError) as exc:
        parse_recipe(doc([
            {"id": "A", "op": "code", "params": {"name": "((12,16,3))_2"}},
            {"id": "B", "op": "combine", "inputs": ["A", "A"]},
        ]))
    assert reasons(exc)[0][0] == "B"


def test_gallery_recipes_parse():
    for path in sorted(GALLERY.glob("*.json")):
        g = load_recipe(path)
        assert g.verify, path.name


def test_qubit_five_qutrits_signatures():
    g = load_recipe(GALLERY / "qubit_five_qutrits.json")
    assert g.signatures["V"].dims == (3,) * 5 and g.signatures["V"].K == 3
    assert g.signatures["psi"].dims == (2,) + (3,) * 5


# -- execution --------------------------------------------------------------------------------


def test_qubit_five_qutrits_executes(tmp_path):
    res = execute(load_recipe(GALLERY / "qubit_five_qutrits.json"), out_dir=tmp_path)
    assert res.passed
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["outputs"]["psi"]["file"] == "psi.state.json"
    psi = read_state(tmp_path / "psi.state.json")
    assert psi.dims == (2,) + (3,) * 5


def test_cache_is_transparent(tmp_path):
    g = load_recipe(GALLERY / "me_subspace_chain.json")
    clear_cache()
    fresh = execute(g, out_dir=tmp_path / "a", use_cache=False)
    disk = tmp_path / "cache"
    first = execute(g, out_dir=tmp_path / "b", cache_dir=disk)
    clear_cache()
    second = execute(g, out_dir=tmp_path / "c", cache_dir=disk)
    assert second.cache_hits == len(g.needed()) - sum(g.nodes[n].op == "predict" for n in g.needed())
    for name in ("a", "b", "c"):
        assert (tmp_path / name / "report.json").read_bytes() == (tmp_path / "a" / "report.json").read_bytes()
    for nid in g.outputs:
        a, c = fresh.artifacts[nid], second.artifacts[nid]
        assert np.array_equal(getattr(a, "basis", None), getattr(c, "basis", None))


def test_seed_changes_cache_key():
    g = load_recipe(GALLERY / "qubit_five_qutrits.json")
    from isoforge.pipeline.execute import node_keys

    k0 = node_keys(g)
    g.seed = 5
    assert node_keys(g) != k0


def test_random_basis_elimination_is_seeded(tmp_path):
    recipe = doc(
        [
            {"id": "C", "op": "code", "params": {"name": "[[5,1,3]]_2"}},
            {"id": "E", "op": "eliminate", "inputs": ["C"], "params": {"party": 2, "basis": "random"}},
        ],
        outputs=["E"],
        verify=[{"node": "E", "kind": "uniformity", "r": 1}],
        seed=3,
    )
    a = execute(parse_recipe(recipe), use_cache=False)
    b = execute(parse_recipe(recipe), use_cache=False)
    assert a.passed and np.array_equal(a.artifacts["E"].basis, b.artifacts["E"].basis)


def test_import_and_failing_report(tmp_path):
    write_state(tmp_path / "prod.json", basis_state((2, 2, 2), (0, 1, 0)))
    recipe = doc(
        [{"id": "p", "op": "import", "params": {"path": "prod.json"}}],
        outputs=["p"],
        verify=[{"node": "p", "kind": "uniformity", "r": 1}],
    )
    res = execute(parse_recipe(recipe, base_dir=tmp_path), out_dir=tmp_path / "out")
    assert not res.passed
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["passed"] is False
    check = rep["checks"][0]
    assert check["worst"] == [0] and check["max_deviation"] == pytest.approx(0.5)


def test_import_from_data_dir(tmp_path, monkeypatch):
    data = tmp_path / "data"
    write_state(data / "bell.json", random_state((2, 2), np.random.default_rng(0)))
    monkeypatch.setenv("FORGE_DATA_DIR", str(data))
    g = parse_recipe(doc([{"id": "b", "op": "import", "params": {"path": "bell.json"}}], outputs=["b"]),
                     base_dir=tmp_path)
    assert g.signatures["b"].dims == (2, 2)


def test_tolerance_precedence():
    recipe = doc(
        [{"id": "s", "op": "me_state", "params": {"k": 2}}],
        verify=[{"node": "s", "kind": "uniformity", "r": 1},
                {"node": "s", "kind": "uniformity", "r": 1, "tol": 1e-3}],
        tol=1e-6,
    )
    res = execute(parse_recipe(recipe), tol=1e-7)
    assert [r.tol for r in res.reports] == [1e-7, 1e-3]
    res = execute(parse_recipe(recipe))
    assert [r.tol for r in res.reports] == [1e-6, 1e-3]


def test_capacity_error_names_the_node(monkeypatch):
    g = load_recipe(GALLERY / "out_of_scale" / "ce_10_4_4.json")
    with pytest.raises(CapacityError) as exc:
        execute(g)
    assert "'W'" in str(exc.value) and "combine_eliminate" in str(exc.value)

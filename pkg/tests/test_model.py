import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import modified_dense, random_graph
from topodetect.model import (
    InvalidGraphError,
    InvalidVariationError,
    NetworkModel,
    VariationKind,
    VariationSpec,
    applicable_variations,
    apply_variation,
    build_consensus,
    path_graph,
)


def test_consensus_triangle():
    m = build_consensus(3, [(1, 2), (2, 3), (1, 3)])
    phi = m.to_dense()
    assert m.diag == (-2.0, -2.0, -2.0)
    assert np.all(phi[~np.eye(3, dtype=bool)] == 1.0)
    assert np.allclose(phi.sum(axis=1), 0.0)


def test_consensus_path_and_pair():
    assert path_graph(3).diag == (-1.0, -2.0, -1.0)
    assert np.array_equal(path_graph(2).to_dense(), [[-1.0, 1.0], [1.0, -1.0]])


def test_weighted_edge_no_diag():
    m = NetworkModel.from_edges(2, [(1, 2, 0.5)])
    assert np.array_equal(m.to_dense(), [[0.0, 0.5], [0.5, 0.0]])


def test_edge_order_is_canonical():
    m = NetworkModel.from_edges(3, [(3, 1, 2.0), (2, 1)])
    assert m.edges == ((1, 2), (1, 3))
    assert m.weight(3, 1) == 2.0


@pytest.mark.parametrize("n, edges", [
    (3, [(1, 1)]),
    (3, [(1, 2), (2, 1)]),
    (3, [(1, 4)]),
    (1, []),
])
def test_consensus_rejects_bad_graphs(n, edges):
    with pytest.raises(InvalidGraphError):
        build_consensus(n, edges)


def test_zero_weight_rejected():
    with pytest.raises(InvalidGraphError):
        NetworkModel.from_edges(2, [(1, 2, 0.0)])


def test_components():
    m = build_consensus(5, [(1, 2), (4, 5)])
    assert m.components() == [[1, 2], [3], [4, 5]]
    assert not m.is_connected()


def test_link_no_reconfig_triangle():
    k3 = build_consensus(3, [(1, 2), (2, 3), (1, 3)])
    mod = apply_variation(k3, VariationSpec.link(1, 2))
    phi = mod.to_dense()
    assert phi[0, 1] == phi[1, 0] == 0.0
    assert mod.diag == (-2.0, -2.0, -2.0)


def test_link_reconfig_triangle_is_path():
    k3 = build_consensus(3, [(1, 2), (2, 3), (1, 3)])
    mod = apply_variation(k3, VariationSpec.link(2, 1, reconfig=True))
    assert mod.diag == (-1.0, -1.0, -2.0)
    assert np.array_equal(mod.to_dense(), build_consensus(3, [(1, 3), (3, 2)]).to_dense())


def test_node_reconfig_path3_is_zero():
    mod = apply_variation(path_graph(3), VariationSpec.node(2, reconfig=True))
    assert np.array_equal(mod.to_dense(), np.zeros((3, 3)))


def test_invalid_variations():
    p3 = path_graph(3)
    with pytest.raises(InvalidVariationError):
        apply_variation(p3, VariationSpec.link(1, 3))
    with pytest.raises(InvalidVariationError):
        apply_variation(build_consensus(3, [(1, 2)]), VariationSpec.node(3))
    with pytest.raises(InvalidVariationError):
        VariationSpec.parse("edge:1,2")
    with pytest.raises(InvalidVariationError):
        VariationSpec.link(2, 2)


@pytest.mark.parametrize("text, kind, target", [
    ("link:2,1", VariationKind.LINK_NO_RECONFIG, (1, 2)),
    ("link-reconfig:1,3", VariationKind.LINK_RECONFIG, (1, 3)),
    ("node:4", VariationKind.NODE_NO_RECONFIG, (4,)),
    ("node-reconfig:2", VariationKind.NODE_RECONFIG, (2,)),
])
def test_parse_roundtrip(text, kind, target):
    spec = VariationSpec.parse(text)
    assert spec.kind is kind and spec.target == target
    assert VariationSpec.parse(str(spec)) == spec


def test_applicable_variations_count():
    p4 = path_graph(4)
    specs = applicable_variations(p4)
    assert len(specs) == 2 * 3 + 2 * 4


@st.composite
def models(draw):
    seed = draw(st.integers(0, 2**31))
    n = draw(st.integers(2, 7))
    family = draw(st.sampled_from(["unit", "weighted", "general"]))
    return random_graph(np.random.default_rng(seed), n, family)


@given(models(), st.data())
def test_variation_symmetric_and_sparse(model, data):
    spec = data.draw(st.sampled_from(applicable_variations(model)))
    mod = apply_variation(model, spec)
    phi = mod.to_dense()
    assert np.array_equal(phi, phi.T)
    off = phi - np.diag(np.diag(phi))
    expected = np.zeros_like(off, dtype=bool)
    for i, j in mod.edges:
        expected[i - 1, j - 1] = expected[j - 1, i - 1] = True
    assert np.array_equal(off != 0, expected)
    assert np.allclose(phi, modified_dense(model.to_dense(), spec.kind.value, spec.target))


@given(models(), st.data())
def test_reconfig_keeps_laplacian(model, data):
    if not np.allclose(model.to_dense().sum(axis=1), 0.0):
        return
    kinds = [VariationKind.LINK_RECONFIG, VariationKind.NODE_RECONFIG]
    spec = data.draw(st.sampled_from(applicable_variations(model, kinds)))
    phi = apply_variation(model, spec).to_dense()
    assert np.allclose(phi.sum(axis=1), 0.0, atol=1e-12)


@given(models(), st.data())
def test_link_removal_then_readd(model, data):
    spec = data.draw(st.sampled_from(applicable_variations(model, [VariationKind.LINK_NO_RECONFIG])))
    w = model.weight(*spec.target)
    mod = apply_variation(model, spec)
    restored = NetworkModel.from_edges(
        model.n, [(i, j, x) for (i, j), x in zip(mod.edges, mod.weights)] + [(*spec.target, w)],
        mod.diag)
    assert np.array_equal(restored.to_dense(), model.to_dense())

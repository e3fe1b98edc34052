import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import expm_reference, max_angle, random_symmetric
from topodetect import _jacobi_py
from topodetect.model import build_consensus, path_graph
from topodetect.spectral import (
    ContractViolation,
    Subspace,
    expm,
    match_spectra,
    matrix_exponential_action,
    null_space,
    numerical_rank,
    principal_angles,
    spectral_decompose,
    subspace_intersection,
)

try:
    from topodetect import _jacobi as _jacobi_ext
except ImportError:
    _jacobi_ext = None

BACKENDS = [pytest.param(_jacobi_py.jacobi_eigh, id="python"),
            pytest.param(getattr(_jacobi_ext, "jacobi_eigh", None), id="cython",
                         marks=pytest.mark.skipif(_jacobi_ext is None, reason="extension not built"))]


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 5, 12, 20])
def test_backend_matches_reference(impl, n):
    rng = np.random.default_rng(n)
    a = random_symmetric(rng, n, "gauss")
    w, v, sweeps = impl(a.copy(), 1e-14, 100)
    assert sweeps < 100
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-12 * max(1, np.abs(a).max()))
    assert np.linalg.norm(v.T @ v - np.eye(n)) < 1e-12
    assert np.linalg.norm((v * w) @ v.T - a) < 1e-12 * (1 + np.linalg.norm(a))


@pytest.mark.skipif(_jacobi_ext is None, reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(7)
    for n in (3, 9, 17):
        a = random_symmetric(rng, n, "gauss")
        w1, v1, s1 = _jacobi_py.jacobi_eigh(a.copy(), 1e-14, 100)
        w2, v2, s2 = _jacobi_ext.jacobi_eigh(a.copy(), 1e-14, 100)
        assert s1 == s2
        assert np.allclose(w1, w2, atol=1e-13)
        assert np.allclose(np.abs(v1), np.abs(v2), atol=1e-10)


def test_pure_python_switch():
    env = dict(os.environ, TOPODETECT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "import topodetect.spectral as s; print(s.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_identity_single_group():
    e = spectral_decompose(np.eye(2))
    assert len(e.groups) == 1
    assert e.groups[0].value == pytest.approx(1.0)
    assert e.groups[0].multiplicity == 2


def test_path4_eigenvalues():
    e = spectral_decompose(path_graph(4).to_dense())
    expected = sorted(-(2 - 2 * math.cos(math.pi * k / 4)) for k in range(4))
    assert np.allclose(e.values, expected, atol=1e-12)
    assert e.values[1] == pytest.approx(-2.0)


def test_triangle_groups():
    e = spectral_decompose(build_consensus(3, [(1, 2), (2, 3), (1, 3)]).to_dense())
    assert [round(v, 12) for v in e.values] == [-3.0, 0.0]
    assert e.multiplicities == [2, 1]


def test_rejects_nonsymmetric():
    with pytest.raises(ContractViolation):
        spectral_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ContractViolation):
        spectral_decompose(np.zeros((2, 3)))


def test_exponential_action_basics():
    k3 = build_consensus(3, [(1, 2), (2, 3), (1, 3)])
    e = spectral_decompose(k3.to_dense())
    x = np.array([1.0, 0.0, 0.0])
    assert np.allclose(matrix_exponential_action(e, 0.0, x), x, atol=1e-15)
    assert np.allclose(matrix_exponential_action(e, 20.0, x), np.full(3, 1 / 3), atol=1e-6)
    v = np.array([1.0, 1.0, -2.0]) / math.sqrt(6)
    assert np.allclose(matrix_exponential_action(e, 0.7, v), math.exp(-3 * 0.7) * v, atol=1e-14)


def test_intersection_examples():
    u = Subspace.span(np.array([[1.0, 1, 1], [1, 1, -2]]).T)
    w = Subspace.span(np.array([[1.0, 1, 1], [1, 0, 0]]).T)
    i = subspace_intersection(u, w)
    assert i.dim == 1
    assert abs(abs(i.basis[:, 0] @ np.ones(3)) - math.sqrt(3)) < 1e-12
    assert subspace_intersection(u, u).dim == 2
    e1 = Subspace.span(np.array([[1.0, 0, 0]]).T)
    e2 = Subspace.span(np.array([[0.0, 1, 0]]).T)
    assert subspace_intersection(e1, e2).dim == 0


def test_rank_and_angles_examples():
    assert numerical_rank(np.zeros((3, 4))) == 0
    assert null_space(np.zeros((0, 3))).shape == (3, 3)
    u = Subspace.span(np.array([[1.0, 0.0]]).T)
    w = Subspace.span(np.array([[1.0, 1.0]]).T)
    assert np.allclose(principal_angles(u, u), 0.0)
    assert principal_angles(u, w) == pytest.approx([math.pi / 4])


def test_match_spectra_shared():
    a = spectral_decompose(np.diag([1.0, 2.0]))
    b = spectral_decompose(np.diag([3.0, 4.0]))
    m = match_spectra(a, b)
    assert m.shared == () and len(m.only_first) == 2 and len(m.only_second) == 2
    m = match_spectra(a, spectral_decompose(np.diag([2.0, 5.0])))
    assert m.shared == ((1, 0),)


@st.composite
def symmetric_matrices(draw, n_max=20):
    seed = draw(st.integers(0, 2**31))
    n = draw(st.integers(1, n_max))
    rng = np.random.default_rng(seed)
    return random_symmetric(rng, n)


@given(symmetric_matrices())
def test_decomposition_invariants(a):
    e = spectral_decompose(a)
    n = a.shape[0]
    assert sum(e.multiplicities) == n
    assert np.linalg.norm(e.reconstruct() - a) <= 1e-8 * (1 + np.linalg.norm(a))
    v = e.vectors()
    assert np.linalg.norm(v.T @ v - np.eye(n)) <= 1e-10
    norm2 = np.linalg.norm(a, 2)
    for g in e.groups:
        for c in range(g.multiplicity):
            s = g.basis[:, c]
            assert np.linalg.norm(a @ s - g.value * s) <= 1e-8 * max(norm2, 1e-300) + 1e-300


@given(symmetric_matrices(10), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_semigroup(a, t, s):
    a = a / max(1.0, np.linalg.norm(a, 2))
    e = spectral_decompose(a)
    x = np.arange(1.0, a.shape[0] + 1)
    lhs = matrix_exponential_action(e, t + s, x)
    rhs = matrix_exponential_action(e, t, matrix_exponential_action(e, s, x))
    assert np.linalg.norm(lhs - rhs) <= 1e-8 * max(1.0, np.linalg.norm(lhs))
    ref = expm_reference(a, t)
    assert np.allclose(expm(e, t), ref, atol=1e-10)


@given(st.integers(0, 2**31), st.integers(2, 9), st.integers(1, 5), st.integers(1, 5),
       st.integers(0, 3))
def test_intersection_dimension_formula(seed, n, du, dw, shared):
    rng = np.random.default_rng(seed)
    du, dw = min(du, n), min(dw, n)
    shared = min(shared, du, dw)
    common = rng.standard_normal((n, shared))
    u = np.hstack([common, rng.standard_normal((n, du - shared))])
    w = np.hstack([common, rng.standard_normal((n, dw - shared))])
    su, sw = Subspace.span(u), Subspace.span(w)
    inter = subspace_intersection(su, sw)
    assert inter.dim == su.dim + sw.dim - numerical_rank(np.hstack([su.basis, sw.basis]))
    for c in range(inter.dim):
        assert su.contains(inter.basis[:, c]) and sw.contains(inter.basis[:, c])


@pytest.mark.parametrize("n", range(2, 17))
def test_path_eigenvectors(n):
    from topodetect.pathgraph import path_eigpair

    e = spectral_decompose(path_graph(n).to_dense())
    for k in range(n):
        p = path_eigpair(n, k)
        g = e.group_of(p.dynamics_eigenvalue)
        assert g is not None and g.multiplicity == 1
        assert max_angle(g.basis, p.normalized()[:, None]) <= 1e-7

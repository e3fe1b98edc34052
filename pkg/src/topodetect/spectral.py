"""Symmetric eigenstructure, eigenvalue clustering and subspace algebra.

The eigensolver is a cyclic Jacobi iteration. A compiled kernel is used when
the ``_jacobi`` extension was built; otherwise the numpy fallback runs. Set
``TOPODETECT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
import numpy as np

from . import _jacobi_py

if os.environ.get("TOPODETECT_PURE_PYTHON"):
    _jacobi_impl = _jacobi_py.jacobi_eigh
    BACKEND = "python"
else:
    try:
        from ._jacobi import jacobi_eigh as _jacobi_impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _jacobi_impl = _jacobi_py.jacobi_eigh
        BACKEND = "python"


class ContractViolation(ValueError):
    """An operation was called with arguments outside its precondition."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs shared by the analysis pipeline.

    Attributes
    ----------
    cluster_rtol : float
        Eigenvalues closer than ``cluster_rtol * max(1, |lambda|_max)`` are
        treated as equal, both within one spectrum and across two spectra.
    rank_rtol : float
        Singular values at or below ``max(m, n) * sigma_max * rank_rtol`` are
        treated as zero.
    comp_rtol : float
        Component tolerance for the eigenvector tests, relative to ``||x||``.
    marginal_factor : float
        Decisions whose statistic lies within this factor of the threshold
        are flagged as marginal.
    jacobi_rtol : float
        Stop sweeping when the off-diagonal Frobenius norm drops below
        ``jacobi_rtol * ||A||_F``.
    """

    cluster_rtol: float = 1e-7
    rank_rtol: float = 1e-12
    comp_rtol: float = 1e-8
    marginal_factor: float = 10.0
    jacobi_rtol: float = 1e-14

    def is_marginal(self, value: float, threshold: float) -> bool:
        if threshold <= 0.0:
            return False
        return threshold / self.marginal_factor < value < threshold * self.marginal_factor

    def as_dict(self) -> dict:
        return {
            "cluster_rtol": self.cluster_rtol,
            "rank_rtol": self.rank_rtol,
            "comp_rtol": self.comp_rtol,
            "marginal_factor": self.marginal_factor,
            "jacobi_rtol": self.jacobi_rtol,
        }


DEFAULT_TOL = Tolerances()


# --- subspaces --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace carried by an orthonormal basis (possibly with 0 columns)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError(f"basis must be 2-D, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def empty(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def span(cls, vectors, rtol: float = DEFAULT_TOL.rank_rtol) -> "Subspace":
        """Orthonormal basis for the column span of ``vectors``."""
        a = np.asarray(vectors, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.shape[1] == 0:
            return cls.empty(a.shape[0])
        u, s, _ = np.linalg.svd(a, full_matrices=False)
        r = _rank_from_singular_values(s, a.shape, rtol)
        return cls(u[:, :r])

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.basis @ (self.basis.T @ x)

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, rtol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        return self.distance(x) <= rtol * max(float(np.linalg.norm(x)), 1e-300)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def _rank_from_singular_values(s, shape, rtol, ref=None):
    top = s[0] if s.size else 0.0
    if ref is not None:
        top = max(top, ref)
    if top == 0.0:
        return 0
    tau = max(shape) * top * rtol
    return int(np.sum(s > tau))


def numerical_rank(a, rtol: float = DEFAULT_TOL.rank_rtol, ref: float | None = None) -> int:
    """Count singular values above ``max(m, n) * sigma_max * rtol``.

    ``ref`` supplies a lower bound for ``sigma_max``. Pass it when ``a`` is a
    row selection of a matrix of known scale, so that a selection which is
    pure rounding noise gets rank 0 rather than rank 1.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return _rank_from_singular_values(s, a.shape, rtol, ref)


def null_space(a, rtol: float = DEFAULT_TOL.rank_rtol, ref: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``a``."""
    a = np.asarray(a, dtype=float)
    m, n = a.shape
    if n == 0:
        return np.zeros((0, 0))
    if m == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    r = _rank_from_singular_values(s, a.shape, rtol, ref)
    return vh[r:].T.copy()


def subspace_intersection(u: Subspace, w: Subspace,
                          rtol: float = DEFAULT_TOL.rank_rtol) -> Subspace:
    """Orthonormal basis of ``u`` intersected with ``w``.

    Null vectors ``(a, b)`` of ``[U, -W]`` give the common directions
    ``U a = W b``, so the dimension is ``dim u + dim w - rank [U W]``.
    """
    if u.ambient != w.ambient:
        raise ContractViolation(f"ambient dimensions differ: {u.ambient} vs {w.ambient}")
    if u.dim == 0 or w.dim == 0:
        return Subspace.empty(u.ambient)
    stacked = np.hstack([u.basis, -w.basis])
    ns = null_space(stacked, rtol)
    if ns.shape[1] == 0:
        return Subspace.empty(u.ambient)
    common = 0.5 * (u.basis @ ns[:u.dim] + w.basis @ ns[u.dim:])
    q, _ = np.linalg.qr(common)
    return Subspace(q)


def principal_angles(u: Subspace, w: Subspace) -> np.ndarray:
    """Principal angles in ``[0, pi/2]``, ascending (cosines nonincreasing)."""
    if u.ambient != w.ambient:
        raise ContractViolation(f"ambient dimensions differ: {u.ambient} vs {w.ambient}")
    if u.dim == 0 or w.dim == 0:
        return np.zeros(0)
    cos = np.linalg.svd(u.basis.T @ w.basis, compute_uv=False)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def subspace_gap(u: Subspace, w: Subspace) -> float:
    """Largest principal angle between equal-dimension subspaces (pi/2 otherwise)."""
    if u.dim != w.dim:
        return math.pi / 2
    if u.dim == 0:
        return 0.0
    # sine form is accurate for tiny angles
    p = u.basis - w.basis @ (w.basis.T @ u.basis)
    s = np.linalg.norm(p, 2)
    return float(np.arcsin(min(s, 1.0)))


# --- eigenstructure ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenGroup:
    """One distinct eigenvalue with its multiplicity and eigenvector block."""

    value: float
    basis: np.ndarray
    members: tuple[float, ...] = ()

    @property
    def multiplicity(self) -> int:
        return self.basis.shape[1]

    @property
    def subspace(self) -> Subspace:
        return Subspace(self.basis)


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Distinct eigenvalues in increasing order with orthonormal blocks."""

    groups: tuple[EigenGroup, ...]
    n: int
    matrix: np.ndarray = field(repr=False)
    tol: Tolerances = DEFAULT_TOL

    @property
    def values(self) -> np.ndarray:
        return np.array([g.value for g in self.groups])

    @property
    def multiplicities(self) -> list[int]:
        return [g.multiplicity for g in self.groups]

    @property
    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues with repetition, ascending."""
        return np.concatenate([np.asarray(g.members) for g in self.groups]) if self.groups \
            else np.zeros(0)

    @property
    def cluster_tol(self) -> float:
        return cluster_tolerance(self.eigenvalues, self.tol)

    def vectors(self) -> np.ndarray:
        """All eigenvectors as columns, grouped like ``groups``."""
        return np.hstack([g.basis for g in self.groups]) if self.groups else np.zeros((self.n, 0))

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for g in self.groups:
            out += g.value * (g.basis @ g.basis.T)
        return out

    def group_of(self, value: float, atol: float | None = None) -> EigenGroup | None:
        atol = self.cluster_tol if atol is None else atol
        best = None
        for g in self.groups:
            d = abs(g.value - value)
            if d <= atol and (best is None or d < abs(best.value - value)):
                best = g
        return best


def cluster_tolerance(eigenvalues, tol: Tolerances = DEFAULT_TOL) -> float:
    ev = np.asarray(eigenvalues, dtype=float)
    top = float(np.max(np.abs(ev))) if ev.size else 0.0
    return tol.cluster_rtol * max(1.0, top)


def jacobi_eigh(a, rtol: float = DEFAULT_TOL.jacobi_rtol):
    """Raw Jacobi solve: ``(w, V)`` sorted ascending."""
    w, v, _ = _jacobi_impl(np.ascontiguousarray(a, dtype=float), rtol)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def spectral_decompose(a, tol: Tolerances = DEFAULT_TOL) -> EigenStructure:
    """Eigendecomposition of a symmetric matrix, eigenvalues clustered.

    Raises
    ------
    ContractViolation
        If ``a`` is not square or its relative asymmetry exceeds 1e-12.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0, 1e-300)
    if a.size and float(np.max(np.abs(a - a.T))) > 1e-12 * scale:
        raise ContractViolation("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    w, v = jacobi_eigh(a, tol.jacobi_rtol)
    ctol = cluster_tolerance(w, tol)
    groups = []
    start = 0
    for k in range(1, n + 1):
        if k == n or w[k] - w[k - 1] > ctol:
            members = tuple(float(x) for x in w[start:k])
            groups.append(EigenGroup(float(np.mean(w[start:k])), v[:, start:k].copy(), members))
            start = k
    frozen = a.copy()
    frozen.setflags(write=False)
    return EigenStructure(tuple(groups), n, frozen, tol)


def matrix_exponential_action(e: EigenStructure, t: float, x) -> np.ndarray:
    """``exp(A t) x`` as a sum of exponentially weighted eigenprojections.

    ``x`` may be a vector or a matrix whose columns are acted on.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != e.n:
        raise ContractViolation(f"vector has leading dimension {x.shape[0]}, expected {e.n}")
    out = np.zeros_like(x)
    for g in e.groups:
        out += math.exp(g.value * t) * (g.basis @ (g.basis.T @ x))
    return out


def expm(e: EigenStructure, t: float) -> np.ndarray:
    return matrix_exponential_action(e, t, np.eye(e.n))


@dataclass(frozen=True)
class SpectrumMatch:
    """How the distinct eigenvalues of two structures line up.

    ``shared`` holds index pairs ``(g, gbar)``; ``only_first`` and
    ``only_second`` the unmatched group indices; ``marginal`` the
    eigenvalue gaps that were within ``marginal_factor`` of the tolerance.
    """

    shared: tuple[tuple[int, int], ...]
    only_first: tuple[int, ...]
    only_second: tuple[int, ...]
    tol: float
    marginal: tuple[float, ...] = ()


def match_spectra(e: EigenStructure, ebar: EigenStructure,
                  tol: Tolerances | None = None) -> SpectrumMatch:
    """Pair up eigenvalues common to both spectra (closest first)."""
    tol = e.tol if tol is None else tol
    ctol = cluster_tolerance(np.concatenate([e.eigenvalues, ebar.eigenvalues]), tol)
    cands = []
    marginal = []
    for a, g in enumerate(e.groups):
        for b, h in enumerate(ebar.groups):
            d = abs(g.value - h.value)
            if d <= ctol:
                cands.append((d, a, b))
            if tol.is_marginal(d, ctol):
                marginal.append(g.value)
    used_a, used_b, shared = set(), set(), []
    for d, a, b in sorted(cands):
        if a not in used_a and b not in used_b:
            shared.append((a, b))
            used_a.add(a)
            used_b.add(b)
    return SpectrumMatch(
        tuple(sorted(shared)),
        tuple(a for a in range(len(e.groups)) if a not in used_a),
        tuple(b for b in range(len(ebar.groups)) if b not in used_b),
        ctol,
        tuple(marginal),
    )


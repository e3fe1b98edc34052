"""Indiscernible states, eigenvector tests and output discernibility.

Two dynamics ``Phi`` and ``Phibar`` produce the same trajectory from ``x``
exactly when ``x`` lies in the span of the eigendirections they share. For a
single disconnection the shared directions can be read off the eigenvector
components (``theorem1_test`` .. ``theorem4_test``). With partial
measurements ``y = M x`` the relevant object is the set of state pairs that
give identical outputs, built here block by block from the two
eigenstructures.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import InvalidVariationError, NetworkModel, VariationKind, VariationSpec
from .spectral import (
    DEFAULT_TOL,
    ContractViolation,
    EigenStructure,
    Subspace,
    Tolerances,
    match_spectra,
    null_space,
    numerical_rank,
    subspace_intersection,
)


@dataclass(frozen=True)
class SensorSet:
    """Ordered set of measured nodes (1-based labels)."""

    measured: tuple[int, ...]

    def __post_init__(self):
        measured = tuple(int(i) for i in self.measured)
        if len(set(measured)) != len(measured):
            raise ValueError(f"duplicate sensor nodes in {measured}")
        if any(i < 1 for i in measured):
            raise ValueError(f"sensor labels must be >= 1, got {measured}")
        object.__setattr__(self, "measured", measured)

    @classmethod
    def all(cls, n: int) -> "SensorSet":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def parse(cls, text: str) -> "SensorSet":
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(int(tok) for tok in text.split(",")))

    def __len__(self):
        return len(self.measured)

    def __str__(self):
        return ",".join(str(i) for i in self.measured)

    def validate(self, n: int) -> None:
        bad = [i for i in self.measured if i > n]
        if bad:
            raise ValueError(f"sensor nodes {bad} are not in 1..{n}")

    def matrix(self, n: int) -> np.ndarray:
        """Row-selection matrix with one unit row per measured node."""
        self.validate(n)
        m = np.zeros((len(self.measured), n))
        for r, i in enumerate(self.measured):
            m[r, i - 1] = 1.0
        return m


# --- eigenvector tests --------------------------------------------------------

@dataclass(frozen=True)
class EigenvectorCheck:
    """Outcome of one eigenvector test.

    ``statistic`` is the largest normalised quantity that must vanish and
    ``threshold`` the tolerance it was compared with.
    """

    indiscernible: bool
    statistic: float
    threshold: float
    marginal: bool


def _eigen_precondition(model: NetworkModel, x, tol: Tolerances) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ContractViolation(f"state has shape {x.shape}, expected ({model.n},)")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ContractViolation("the zero vector is not an eigenvector")
    phi = model.to_dense()
    lam = float(x @ phi @ x) / norm ** 2
    resid = float(np.linalg.norm(phi @ x - lam * x))
    scale = max(1.0, float(np.linalg.norm(phi, 2)))
    if resid > 1e3 * tol.comp_rtol * scale * norm:
        raise ContractViolation(f"x is not an eigenvector (residual {resid:.3g})")
    return x


def _verdict(stat: float, x: np.ndarray, tol: Tolerances) -> EigenvectorCheck:
    threshold = tol.comp_rtol * float(np.linalg.norm(x))
    return EigenvectorCheck(stat <= threshold, stat, threshold, tol.is_marginal(stat, threshold))


def _link_target(model: NetworkModel, link) -> tuple[int, int]:
    i, j = link
    if not model.has_edge(i, j):
        raise InvalidVariationError(f"link ({i}, {j}) is not an edge of the model")
    return i, j


def _node_target(model: NetworkModel, node: int) -> list[int]:
    if not 1 <= node <= model.n:
        raise InvalidVariationError(f"node {node} is not in 1..{model.n}")
    nbrs = model.neighbors(node)
    if not nbrs:
        raise InvalidVariationError(f"node {node} is isolated")
    return nbrs


def check_link_no_reconfig(model, x, link, tol=DEFAULT_TOL) -> EigenvectorCheck:
    x = _eigen_precondition(model, x, tol)
    i, j = _link_target(model, link)
    return _verdict(max(abs(x[i - 1]), abs(x[j - 1])), x, tol)


def check_link_reconfig(model, x, link, tol=DEFAULT_TOL) -> EigenvectorCheck:
    x = _eigen_precondition(model, x, tol)
    i, j = _link_target(model, link)
    return _verdict(abs(x[i - 1] - x[j - 1]), x, tol)


def check_node_no_reconfig(model, x, node, tol=DEFAULT_TOL) -> EigenvectorCheck:
    """Node test without reconfiguration.

    The removed terms contribute ``-(sum_j phi_ij x_j) e_i - x_i sum_j phi_ij e_j``;
    the ``e_j`` are independent, so the second term vanishes only when
    ``x_i = 0`` even if the weights sum to zero.
    """
    x = _eigen_precondition(model, x, tol)
    nbrs = _node_target(model, node)
    w = np.array([model.weight(node, j) for j in nbrs])
    xn = x[np.array(nbrs) - 1]
    wscale = float(np.sum(np.abs(w)))
    coupling = abs(float(w @ xn)) / wscale
    stat = max(abs(x[node - 1]), coupling)
    return _verdict(stat, x, tol)


def check_node_reconfig(model, x, node, tol=DEFAULT_TOL) -> EigenvectorCheck:
    x = _eigen_precondition(model, x, tol)
    nbrs = _node_target(model, node)
    xn = x[np.array(nbrs) - 1]
    return _verdict(float(np.max(np.abs(xn - x[node - 1]))), x, tol)


def theorem1_test(model: NetworkModel, x, link, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Link removal without reconfiguration: indiscernible iff ``x_i = x_j = 0``."""
    return check_link_no_reconfig(model, x, link, tol).indiscernible


def theorem2_test(model: NetworkModel, x, link, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Link removal with reconfiguration: indiscernible iff ``x_i = x_j``."""
    return check_link_reconfig(model, x, link, tol).indiscernible


def theorem3_test(model: NetworkModel, x, node: int, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Node removal without reconfiguration.

    Indiscernible iff ``x_i = 0`` and ``sum_j phi_ij x_j = 0`` over the
    neighbours. Neighbour components need not vanish individually: on a
    star with centre 1, ``(0, 1, -1)`` passes.
    """
    return check_node_no_reconfig(model, x, node, tol).indiscernible


def theorem4_test(model: NetworkModel, x, node: int, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Node removal with reconfiguration: indiscernible iff ``x_j = x_i`` for all neighbours."""
    return check_node_reconfig(model, x, node, tol).indiscernible


_CHECKS = {
    VariationKind.LINK_NO_RECONFIG: check_link_no_reconfig,
    VariationKind.LINK_RECONFIG: check_link_reconfig,
    VariationKind.NODE_NO_RECONFIG: check_node_no_reconfig,
    VariationKind.NODE_RECONFIG: check_node_reconfig,
}


def eigenvector_check(model: NetworkModel, x, spec: VariationSpec,
                      tol: Tolerances = DEFAULT_TOL) -> EigenvectorCheck:
    """Run the eigenvector test matching the kind of ``spec``."""
    target = spec.target if spec.kind.is_link else spec.target[0]
    return _CHECKS[spec.kind](model, x, target, tol)


def eigenvector_test(model: NetworkModel, x, spec: VariationSpec,
                     tol: Tolerances = DEFAULT_TOL) -> bool:
    return eigenvector_check(model, x, spec, tol).indiscernible


# --- full-state discernibility ------------------------------------------------

@dataclass(frozen=True, eq=False)
class SharedEigenvalue:
    value: float
    value_bar: float
    psi: Subspace
    multiplicity: int
    multiplicity_bar: int


@dataclass(frozen=True, eq=False)
class DiscernibilityAnalysis:
    shared: tuple[SharedEigenvalue, ...]
    indiscernible_set: Subspace
    marginal_eigenvalues: tuple[float, ...] = ()

    @property
    def fully_discernible(self) -> bool:
        return self.indiscernible_set.dim == 0

    @property
    def dim(self) -> int:
        return self.indiscernible_set.dim


def indiscernible_set(e: EigenStructure, ebar: EigenStructure,
                      tol: Tolerances | None = None) -> DiscernibilityAnalysis:
    """States whose trajectories coincide under both dynamics.

    For each shared eigenvalue the common part of the two eigenspaces is
    collected; the indiscernible set is the span of all of them.
    """
    if e.n != ebar.n:
        raise ContractViolation(f"dimensions differ: {e.n} vs {ebar.n}")
    tol = e.tol if tol is None else tol
    match = match_spectra(e, ebar, tol)
    shared = []
    blocks = []
    for a, b in match.shared:
        g, h = e.groups[a], ebar.groups[b]
        psi = subspace_intersection(g.subspace, h.subspace, tol.rank_rtol)
        shared.append(SharedEigenvalue(g.value, h.value, psi, g.multiplicity, h.multiplicity))
        blocks.append(psi.basis)
    if blocks:
        basis = np.hstack(blocks)
        iset = Subspace(np.linalg.qr(basis)[0]) if basis.shape[1] else Subspace.empty(e.n)
    else:
        iset = Subspace.empty(e.n)
    return DiscernibilityAnalysis(tuple(shared), iset, match.marginal)


# --- output discernibility ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class Block:
    """Basis (columns in R^2n) of one piece of the M-indiscernible set.

    ``kind`` is ``"upsilon"`` for a shared eigenvalue, ``"K"`` for an
    eigenvalue of the nominal dynamics only and ``"Kbar"`` for one of the
    modified dynamics only.
    """

    kind: str
    value: float
    basis: np.ndarray


@dataclass(frozen=True)
class ConditionFailure:
    condition: str
    value: float
    rank: int
    required: int


@dataclass(frozen=True, eq=False)
class OutputDiscernibilityAnalysis:
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    failures: tuple[ConditionFailure, ...]
    blocks: tuple[Block, ...]
    i_of_m: Subspace
    i_p: Subspace
    sensor_lower_bound: int
    sensors: SensorSet
    restricted_to: tuple[int, ...] | None = None
    marginal_eigenvalues: tuple[float, ...] = field(default=())

    @property
    def output_discernible(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii


def _coordinate_subspace(n: int, nodes: Iterable[int]) -> Subspace:
    cols = sorted(set(nodes))
    basis = np.zeros((n, len(cols)))
    for c, i in enumerate(cols):
        basis[i - 1, c] = 1.0
    return Subspace(basis)


def output_discernibility(e: EigenStructure, ebar: EigenStructure, sensors: SensorSet,
                          restrict_components: Sequence[int] | None = None,
                          tol: Tolerances | None = None) -> OutputDiscernibilityAnalysis:
    """Rank conditions for measurements to lose nothing over full-state access.

    Conditions (i) and (ii) ask that every eigenvalue carried by only one of
    the dynamics be fully visible through ``M``; condition (iii) that ``M``
    separate the two eigenspaces of each shared eigenvalue. When
    ``restrict_components`` is given, the eigenvectors of the modified
    dynamics checked in condition (ii) are limited to those supported on
    that node set. ``i_of_m`` is always the unrestricted set.
    """
    if e.n != ebar.n:
        raise ContractViolation(f"dimensions differ: {e.n} vs {ebar.n}")
    tol = e.tol if tol is None else tol
    n = e.n
    m = sensors.matrix(n)
    rr = tol.rank_rtol
    match = match_spectra(e, ebar, tol)
    coord = _coordinate_subspace(n, restrict_components) if restrict_components is not None else None

    failures = []
    blocks = []
    ip_cols = []
    bound = 0

    for a in match.only_first:
        g = e.groups[a]
        r = numerical_rank(m @ g.basis, rr, ref=1.0)
        bound = max(bound, g.multiplicity)
        if r != g.multiplicity:
            failures.append(ConditionFailure("i", g.value, r, g.multiplicity))
        ns = null_space(m @ g.basis, rr, ref=1.0)
        if ns.shape[1]:
            blocks.append(Block("K", g.value, np.vstack([g.basis @ ns, np.zeros((n, ns.shape[1]))])))

    for b in match.only_second:
        h = ebar.groups[b]
        checked = h.basis
        if coord is not None:
            checked = subspace_intersection(h.subspace, coord, rr).basis
        r = numerical_rank(m @ checked, rr, ref=1.0)
        bound = max(bound, checked.shape[1])
        if r != checked.shape[1]:
            failures.append(ConditionFailure("ii", h.value, r, checked.shape[1]))
        ns = null_space(m @ h.basis, rr, ref=1.0)
        if ns.shape[1]:
            blocks.append(Block("Kbar", h.value, np.vstack([np.zeros((n, ns.shape[1])), h.basis @ ns])))

    for a, b in match.shared:
        g, h = e.groups[a], ebar.groups[b]
        joint = np.hstack([g.basis, h.basis])
        scale = float(np.linalg.norm(joint, 2))
        full = numerical_rank(joint, rr)
        r = numerical_rank(m @ joint, rr, ref=scale)
        bound = max(bound, full)
        if r != full:
            failures.append(ConditionFailure("iii", g.value, r, full))
        ns = null_space(np.hstack([m @ g.basis, -(m @ h.basis)]), rr, ref=scale)
        if ns.shape[1]:
            mu = g.multiplicity
            lifted = np.vstack([g.basis @ ns[:mu], h.basis @ ns[mu:]])
            blocks.append(Block("upsilon", g.value, lifted))
        psi = subspace_intersection(g.subspace, h.subspace, rr)
        if psi.dim:
            ip_cols.append(np.vstack([psi.basis, psi.basis]) / np.sqrt(2.0))

    blocks.sort(key=lambda blk: blk.value)
    i_of_m = Subspace.span(np.hstack([blk.basis for blk in blocks]), rr) if blocks \
        else Subspace.empty(2 * n)
    i_p = Subspace(np.hstack(ip_cols)) if ip_cols else Subspace.empty(2 * n)
    conds = {c: not any(f.condition == c for f in failures) for c in ("i", "ii", "iii")}
    return OutputDiscernibilityAnalysis(
        conds["i"], conds["ii"], conds["iii"], tuple(failures), tuple(blocks),
        i_of_m, i_p, bound, sensors,
        tuple(sorted(set(restrict_components))) if restrict_components is not None else None,
        match.marginal,
    )


def sensor_lower_bound(e: EigenStructure, ebar: EigenStructure,
                       restrict_components: Sequence[int] | None = None,
                       tol: Tolerances | None = None) -> int:
    """Fewest sensors any output-discernible placement can use."""
    return output_discernibility(e, ebar, SensorSet(()), restrict_components, tol).sensor_lower_bound


def projections_of_IM(analysis: OutputDiscernibilityAnalysis,
                      rtol: float = DEFAULT_TOL.rank_rtol) -> tuple[Subspace, Subspace]:
    """Projections of the M-indiscernible set onto its first and last ``n`` coordinates."""
    basis = analysis.i_of_m.basis
    n = basis.shape[0] // 2
    return Subspace.span(basis[:n], rtol), Subspace.span(basis[n:], rtol)


@dataclass(frozen=True)
class PlacementResult:
    sensors: SensorSet | None
    lower_bound: int
    budget: int
    evaluated: int
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.sensors is not None


def sensor_placement(e: EigenStructure, ebar: EigenStructure, budget: int,
                     restrict_components: Sequence[int] | None = None,
                     tol: Tolerances | None = None) -> PlacementResult:
    """Smallest output-discernible sensor set, by exhaustive search.

    Subsets are tried by increasing size and, within a size, in
    lexicographic order; the first success is returned. Sizes below the
    lower bound cannot succeed and are skipped.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    n = e.n
    bound = sensor_lower_bound(e, ebar, restrict_components, tol)
    if budget < bound:
        return PlacementResult(None, bound, budget, 0,
                               f"budget {budget} is below the lower bound of {bound} sensors")
    evaluated = 0
    for size in range(max(1, bound), min(budget, n) + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            evaluated += 1
            sensors = SensorSet(combo)
            if output_discernibility(e, ebar, sensors, restrict_components, tol).output_discernible:
                return PlacementResult(sensors, bound, budget, evaluated)
    return PlacementResult(None, bound, budget, evaluated,
                           f"no sensor set of size <= {min(budget, n)} is output discernible")

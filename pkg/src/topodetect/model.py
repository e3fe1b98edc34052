"""Network models and the four topology-variation scenarios.

Node labels are 1-based throughout the public API; positions inside numpy
arrays are the usual 0-based offsets (node ``i`` lives at ``x[i - 1]``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class InvalidGraphError(ValueError):
    """Raised for self-loops, duplicate edges, zero weights or bad node labels."""


class InvalidVariationError(ValueError):
    """Raised when a variation does not apply to the nominal model."""


@dataclass(frozen=True)
class NetworkModel:
    """Undirected weighted network with symmetric dynamics matrix.

    Attributes
    ----------
    n : int
        Number of nodes, labelled ``1..n``.
    edges : tuple of (int, int)
        Sorted unordered pairs ``(i, j)`` with ``i < j``.
    weights : tuple of float
        Off-diagonal weight for each edge, aligned with ``edges``.
    diag : tuple of float
        Diagonal entries of the dynamics matrix.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]
    diag: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidGraphError(f"node count must be positive, got {self.n}")
        if len(self.diag) != self.n:
            raise InvalidGraphError(f"diag has length {len(self.diag)}, expected {self.n}")
        if len(self.edges) != len(self.weights):
            raise InvalidGraphError("edges and weights differ in length")
        seen = set()
        for (i, j), w in zip(self.edges, self.weights):
            if not (1 <= i < j <= self.n):
                raise InvalidGraphError(f"edge ({i}, {j}) is not a canonical pair in 1..{self.n}")
            if (i, j) in seen:
                raise InvalidGraphError(f"duplicate edge ({i}, {j})")
            if w == 0.0:
                raise InvalidGraphError(f"edge ({i}, {j}) has zero weight")
            seen.add((i, j))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]],
                   diag: Sequence[float] | None = None) -> "NetworkModel":
        """Build a model from ``(i, j, weight)`` triples (weight defaults to 1)."""
        table = {}
        for edge in edges:
            if len(edge) not in (2, 3):
                raise InvalidGraphError(f"edge {edge!r} must be (i, j) or (i, j, weight)")
            i, j = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) == 3 else 1.0
            if i == j:
                raise InvalidGraphError(f"self-loop at node {i}")
            key = (min(i, j), max(i, j))
            if key in table:
                raise InvalidGraphError(f"duplicate edge {key}")
            table[key] = w
        keys = sorted(table)
        if diag is None:
            diag = [0.0] * n
        return cls(n, tuple(keys), tuple(table[k] for k in keys),
                   tuple(float(d) for d in diag))

    @property
    def edge_weights(self) -> dict[tuple[int, int], float]:
        return dict(zip(self.edges, self.weights))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_weights

    def weight(self, i: int, j: int) -> float:
        """Off-diagonal entry for nodes ``i`` and ``j`` (0 when not adjacent)."""
        if i == j:
            return self.diag[i - 1]
        return self.edge_weights.get((min(i, j), max(i, j)), 0.0)

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def components(self) -> list[list[int]]:
        """Connected components as sorted node lists, ordered by smallest label."""
        parent = list(range(self.n + 1))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict[int, list[int]] = {}
        for v in range(1, self.n + 1):
            groups.setdefault(find(v), []).append(v)
        return sorted(groups.values())

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def to_dense(self) -> np.ndarray:
        return to_dense(self)


def to_dense(model: NetworkModel) -> np.ndarray:
    """Dense symmetric dynamics matrix. Both triangles come from one stored weight."""
    phi = np.diag(np.asarray(model.diag, dtype=float))
    for (i, j), w in zip(model.edges, model.weights):
        phi[i - 1, j - 1] = w
        phi[j - 1, i - 1] = w
    return phi


def build_consensus(n: int, edges: Iterable[Sequence[int]]) -> NetworkModel:
    """Unit-weight consensus dynamics ``-L`` for a simple undirected graph.

    Examples
    --------
    >>> build_consensus(3, [(1, 2), (2, 3)]).diag
    (-1.0, -2.0, -1.0)
    """
    if n < 2:
        raise InvalidGraphError(f"consensus networks need n >= 2, got {n}")
    pairs = []
    for edge in edges:
        if len(edge) != 2:
            raise InvalidGraphError(f"consensus edge {edge!r} must be an (i, j) pair")
        pairs.append((int(edge[0]), int(edge[1]), 1.0))
    model = NetworkModel.from_edges(n, pairs)
    deg = [0.0] * n
    for i, j in model.edges:
        deg[i - 1] -= 1.0
        deg[j - 1] -= 1.0
    return NetworkModel(n, model.edges, model.weights, tuple(deg))


def path_graph(n: int) -> NetworkModel:
    """Consensus dynamics on the path ``1 - 2 - ... - n``."""
    return build_consensus(n, [(i, i + 1) for i in range(1, n)])


class VariationKind(enum.Enum):
    LINK_NO_RECONFIG = "link"
    LINK_RECONFIG = "link-reconfig"
    NODE_NO_RECONFIG = "node"
    NODE_RECONFIG = "node-reconfig"

    @property
    def is_link(self) -> bool:
        return self in (VariationKind.LINK_NO_RECONFIG, VariationKind.LINK_RECONFIG)

    @property
    def reconfigures(self) -> bool:
        return self in (VariationKind.LINK_RECONFIG, VariationKind.NODE_RECONFIG)


_KIND_ALIASES = {
    "link": VariationKind.LINK_NO_RECONFIG,
    "linknoreconfig": VariationKind.LINK_NO_RECONFIG,
    "link-noreconfig": VariationKind.LINK_NO_RECONFIG,
    "link-reconfig": VariationKind.LINK_RECONFIG,
    "linkreconfig": VariationKind.LINK_RECONFIG,
    "node": VariationKind.NODE_NO_RECONFIG,
    "nodenoreconfig": VariationKind.NODE_NO_RECONFIG,
    "node-noreconfig": VariationKind.NODE_NO_RECONFIG,
    "node-reconfig": VariationKind.NODE_RECONFIG,
    "nodereconfig": VariationKind.NODE_RECONFIG,
}


@dataclass(frozen=True)
class VariationSpec:
    """One disconnection event: a link ``(i, j)`` or a node ``(i,)``."""

    kind: VariationKind
    target: tuple[int, ...]

    def __post_init__(self):
        want = 2 if self.kind.is_link else 1
        if len(self.target) != want:
            raise InvalidVariationError(
                f"{self.kind.value} needs {want} node label(s), got {self.target!r}")
        if self.kind.is_link:
            i, j = self.target
            if i == j:
                raise InvalidVariationError(f"link target ({i}, {j}) is a self-loop")
            # canonical order; (j, i) is the same undirected link
            object.__setattr__(self, "target", (min(i, j), max(i, j)))

    @classmethod
    def link(cls, i: int, j: int, reconfig: bool = False) -> "VariationSpec":
        kind = VariationKind.LINK_RECONFIG if reconfig else VariationKind.LINK_NO_RECONFIG
        return cls(kind, (i, j))

    @classmethod
    def node(cls, i: int, reconfig: bool = False) -> "VariationSpec":
        kind = VariationKind.NODE_RECONFIG if reconfig else VariationKind.NODE_NO_RECONFIG
        return cls(kind, (i,))

    @classmethod
    def parse(cls, text: str) -> "VariationSpec":
        """Parse ``kind:i[,j]``, e.g. ``link-reconfig:1,2`` or ``node:3``."""
        try:
            name, nodes = text.split(":", 1)
            kind = _KIND_ALIASES[name.strip().lower().replace("_", "-")]
            target = tuple(int(tok) for tok in nodes.split(","))
        except (ValueError, KeyError):
            raise InvalidVariationError(
                f"cannot parse variation {text!r}; expected kind:i[,j] with kind in "
                f"{sorted({k.value for k in VariationKind})}") from None
        return cls(kind, target)

    def __str__(self):
        return f"{self.kind.value}:{','.join(str(t) for t in self.target)}"

    def validate(self, model: NetworkModel) -> None:
        for t in self.target:
            if not 1 <= t <= model.n:
                raise InvalidVariationError(f"node {t} is not in 1..{model.n}")
        if self.kind.is_link:
            if not model.has_edge(*self.target):
                raise InvalidVariationError(f"link {self.target} is not an edge of the model")
        elif not model.neighbors(self.target[0]):
            raise InvalidVariationError(f"node {self.target[0]} has no neighbors")


def apply_variation(model: NetworkModel, spec: VariationSpec) -> NetworkModel:
    """Return the modified model produced by ``spec``.

    Reconfiguring variations move each removed weight onto the diagonal of
    both endpoints, so a consensus model stays a (negated) Laplacian.
    """
    spec.validate(model)
    weights = model.edge_weights
    diag = list(model.diag)
    if spec.kind.is_link:
        removed = [spec.target]
    else:
        i = spec.target[0]
        removed = [(min(i, j), max(i, j)) for j in model.neighbors(i)]
    for a, b in removed:
        w = weights.pop((a, b))
        if spec.kind.reconfigures:
            diag[a - 1] += w
            diag[b - 1] += w
    keys = sorted(weights)
    return NetworkModel(model.n, tuple(keys), tuple(weights[k] for k in keys), tuple(diag))


def applicable_variations(model: NetworkModel,
                          kinds: Iterable[VariationKind] = tuple(VariationKind)) -> list[VariationSpec]:
    """Every single-link or single-node variation that applies to ``model``."""
    out = []
    for kind in kinds:
        if kind.is_link:
            out.extend(VariationSpec(kind, e) for e in model.edges)
        else:
            out.extend(VariationSpec(kind, (i,)) for i in range(1, model.n + 1)
                       if model.neighbors(i))
    return out

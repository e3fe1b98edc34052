"""Closed-form analysis of unit-weight consensus on the path graph ``P_n``.

The Laplacian of ``P_n`` has simple eigenvalues ``2 - 2 cos(pi k / n)`` with
eigenvectors ``x_i = cos(pi k i / n - pi k / 2n)``. A link ``(i, i+1)`` removed
with reconfiguration hides mode ``k`` exactly when ``k i`` is a multiple of
``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discern import theorem4_test
from .model import path_graph


@dataclass(frozen=True, eq=False)
class PathEigenPair:
    n: int
    k: int
    laplacian_eigenvalue: float
    components: np.ndarray

    @property
    def dynamics_eigenvalue(self) -> float:
        """Eigenvalue of the consensus dynamics ``-L``."""
        return -self.laplacian_eigenvalue

    def normalized(self) -> np.ndarray:
        return self.components / np.linalg.norm(self.components)


def path_eigpair(n: int, k: int) -> PathEigenPair:
    """Analytic ``k``-th Laplacian eigenpair of ``P_n`` (unnormalised)."""
    if n < 2:
        raise ValueError(f"path graphs need n >= 2, got {n}")
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must lie in 0..{n - 1}, got {k}")
    i = np.arange(1, n + 1)
    comps = np.cos(math.pi * k * i / n - math.pi * k / (2 * n))
    return PathEigenPair(n, k, 2.0 - 2.0 * math.cos(math.pi * k / n), comps)


def link_indiscernible_analytic(n: int, i: int) -> list[int]:
    """Modes ``k >= 1`` hidden by removing link ``(i, i+1)`` with reconfiguration."""
    if not 1 <= i <= n - 1:
        raise ValueError(f"link index i must lie in 1..{n - 1}, got {i}")
    return [k for k in range(1, n) if (k * i) % n == 0]


def solutions_table(n_max: int, n_min: int = 2) -> list[tuple[int, int, int, int]]:
    """All ``(k, i, n, m)`` with ``k i = n m``, ``1 <= k, i <= n-1``."""
    rows = []
    for n in range(n_min, n_max + 1):
        for i in range(1, n):
            for k in link_indiscernible_analytic(n, i):
                rows.append((k, i, n, k * i // n))
    return rows


def node_disconnection_detectable(n: int, i: int) -> bool:
    """True when no nonconstant mode survives removing node ``i`` with reconfiguration."""
    if not 1 <= i <= n:
        raise ValueError(f"node must lie in 1..{n}, got {i}")
    model = path_graph(n)
    hidden = [k for k in range(n) if theorem4_test(model, path_eigpair(n, k).normalized(), i)]
    return hidden == [0]


def path_mode_index(n: int, dynamics_eigenvalue: float) -> int:
    """Mode index ``k`` of an eigenvalue of ``-L(P_n)``."""
    c = min(1.0, max(-1.0, 1.0 + dynamics_eigenvalue / 2.0))
    return int(round(n * math.acos(c) / math.pi))

"""Least-squares detection of a topology variation from sampled outputs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .discern import SensorSet
from .spectral import (
    EigenStructure,
    Subspace,
    matrix_exponential_action,
    principal_angles,
)

# residuals below max(ZERO_COST_RTOL * ||Z||, ZERO_COST_ATOL) are rounding noise, reported as 0
ZERO_COST_RTOL = 1e-10
ZERO_COST_ATOL = 1e-12
MARGINAL_RTOL = 1e-6


@dataclass(frozen=True)
class SamplePlan:
    """Sampling instants ``t0 + k T`` for ``k = 0 .. N-1``."""

    t0: float
    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"sampling period must be positive, got {self.T}")
        if self.N < 1:
            raise ValueError(f"sample count must be >= 1, got {self.N}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.T * np.arange(self.N)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """``N`` output samples (one row per instant) with a noise energy bound."""

    Z: np.ndarray
    energy: float
    sensors: SensorSet
    plan: SamplePlan

    def __post_init__(self):
        z = np.asarray(self.Z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(self.plan.N, len(self.sensors))
        if z.shape != (self.plan.N, len(self.sensors)):
            raise ValueError(f"samples have shape {z.shape}, expected "
                             f"({self.plan.N}, {len(self.sensors)})")
        if self.energy < 0:
            raise ValueError(f"noise energy must be >= 0, got {self.energy}")
        z.setflags(write=False)
        object.__setattr__(self, "Z", z)

    @property
    def stacked(self) -> np.ndarray:
        """``col(z_0, ..., z_{N-1})``."""
        return self.Z.reshape(-1)


class Verdict(enum.Enum):
    VARIATION_DETECTED = "variation-detected"
    NOMINAL_ONLY = "nominal-only"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DetectionReport:
    pi: float
    pi_bar: float
    energy: float
    verdict: Verdict
    sampling_ok: bool = True
    marginal: bool = False
    rank_nominal: int | None = None
    rank_modified: int | None = None

    def as_dict(self) -> dict:
        return {
            "pi": self.pi,
            "pi_bar": self.pi_bar,
            "E_v": self.energy,
            "verdict": self.verdict.value,
            "sampling_ok": self.sampling_ok,
            "marginal": self.marginal,
            "rank_nominal": self.rank_nominal,
            "rank_modified": self.rank_modified,
        }


def observability_matrix(e: EigenStructure, sensors: SensorSet, plan: SamplePlan) -> np.ndarray:
    """Stack ``M exp(Phi k T)`` for ``k = 0 .. N-1``; shape ``(N |M|, n)``."""
    m = sensors.matrix(e.n)
    rows = [m @ matrix_exponential_action(e, k * plan.T, np.eye(e.n)) for k in range(plan.N)]
    return np.vstack(rows) if rows else np.zeros((0, e.n))


@dataclass(frozen=True)
class LSFit:
    cost: float
    rank: int
    raw_cost: float


def ls_fit(z, o: np.ndarray, zero_rtol: float = ZERO_COST_RTOL,
           zero_atol: float = ZERO_COST_ATOL) -> LSFit:
    """Distance from ``z`` to the column space of ``o``.

    Uses an SVD so rank-deficient matrices are handled by the minimum-norm
    solution. A residual below ``max(zero_rtol * ||z||, zero_atol)`` is
    reported as 0; ``raw_cost`` keeps the unrounded value.
    """
    z = z.stacked if isinstance(z, SampleBatch) else np.asarray(z, dtype=float).reshape(-1)
    o = np.asarray(o, dtype=float)
    if o.shape[0] != z.shape[0]:
        raise ValueError(f"row mismatch: samples {z.shape[0]}, matrix {o.shape[0]}")
    if o.size == 0:
        raw = float(np.linalg.norm(z))
        return LSFit(raw, 0, raw)
    u, s, _ = np.linalg.svd(o, full_matrices=False)
    tau = max(o.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > tau))
    ur = u[:, :r]
    resid = z - ur @ (ur.T @ z)
    raw = float(np.linalg.norm(resid))
    cost = 0.0 if raw <= max(zero_rtol * float(np.linalg.norm(z)), zero_atol) else raw
    return LSFit(cost, r, raw)


def ls_cost(z, o: np.ndarray, zero_rtol: float = ZERO_COST_RTOL,
            zero_atol: float = ZERO_COST_ATOL) -> float:
    """``min_x ||Z - O x||``."""
    return ls_fit(z, o, zero_rtol, zero_atol).cost


def detect(z, o_nominal: np.ndarray, o_modified: np.ndarray, energy: float,
           sampling_ok: bool = True) -> DetectionReport:
    """Classify a batch against the nominal and modified behaviours.

    A cost equal to ``energy`` counts as consistent with that behaviour.
    """
    if energy < 0:
        raise ValueError(f"noise energy must be >= 0, got {energy}")
    nom = ls_fit(z, o_nominal)
    mod = ls_fit(z, o_modified)
    pi, pi_bar = nom.cost, mod.cost
    if pi > energy:
        verdict = Verdict.VARIATION_DETECTED
    elif pi_bar > energy:
        verdict = Verdict.NOMINAL_ONLY
    else:
        verdict = Verdict.INCONCLUSIVE
    band = MARGINAL_RTOL * (1.0 + energy)
    # an exact zero cost is a clean fit, not a near miss
    marginal = any(c > 0.0 and abs(c - energy) < band for c in (pi, pi_bar))
    return DetectionReport(pi, pi_bar, energy, verdict, sampling_ok, marginal, nom.rank, mod.rank)


def kalman_bertram_check(eigenvalues, T: float, atol: float = 1e-9) -> bool:
    """Non-pathological sampling test on the union of two spectra.

    Fails when two distinct eigenvalues with equal real part have imaginary
    parts differing by a nonzero multiple of ``2 pi / T``. Real spectra, as
    produced by symmetric dynamics, always pass.
    """
    if not T > 0:
        raise ValueError(f"sampling period must be positive, got {T}")
    ev = np.asarray(eigenvalues, dtype=complex).ravel()
    scale = max(1.0, float(np.max(np.abs(ev)))) if ev.size else 1.0
    tol = atol * scale
    for a in range(len(ev)):
        for b in range(a + 1, len(ev)):
            d = ev[a] - ev[b]
            if abs(d) <= tol or abs(d.real) > tol:
                continue
            h = d.imag * T / (2 * math.pi)
            hr = round(h)
            if hr != 0 and abs(h - hr) * 2 * math.pi / T <= tol:
                return False
    return True


@dataclass(frozen=True)
class HiddenStateDiagnostic:
    """Distance of the initial state to the modified-side indiscernible set.

    ``smallest_nonzero_angle`` is the smallest principal angle between the
    column spaces of the two observability matrices that is not zero; its
    cosine governs how large the noise must be to hide a variation.
    """

    distance: float
    smallest_nonzero_angle: float | None
    cosine: float | None
    energy: float
    valid: bool

    def as_dict(self) -> dict:
        return {
            "distance": self.distance,
            "smallest_nonzero_angle": self.smallest_nonzero_angle,
            "cosine": self.cosine,
            "E_v": self.energy,
            "valid": self.valid,
        }


def lemma1_diagnostic(x0, i_bar_m: Subspace, energy: float, o_nominal: np.ndarray,
                      o_modified: np.ndarray, plan: SamplePlan | None = None,
                      sampling_ok: bool = True, angle_atol: float = 1e-8) -> HiddenStateDiagnostic:
    x0 = np.asarray(x0, dtype=float)
    dist = i_bar_m.distance(x0) if i_bar_m.dim else float(np.linalg.norm(x0))
    ra = Subspace.span(o_nominal)
    rb = Subspace.span(o_modified)
    angles = principal_angles(ra, rb)
    nz = angles[angles > angle_atol]
    smallest = float(nz.min()) if nz.size else None
    valid = sampling_ok and (plan is None or plan.N >= 2 * x0.shape[0])
    return HiddenStateDiagnostic(dist, smallest, math.cos(smallest) if smallest is not None else None,
                            energy, valid)


def simulate_samples(e: EigenStructure, x0, sensors: SensorSet, plan: SamplePlan,
                     noise_energy: float = 0.0, seed: int = 0) -> SampleBatch:
    """Sample ``z_k = M exp(Phi (t0 + k T)) x0 + v_k``.

    ``x0`` is the state at time 0. The noise is i.i.d. normal rescaled so that
    its total energy equals ``noise_energy`` exactly.
    """
    if noise_energy < 0:
        raise ValueError(f"noise energy must be >= 0, got {noise_energy}")
    x0 = np.asarray(x0, dtype=float)
    m = sensors.matrix(e.n)
    z = np.vstack([m @ matrix_exponential_action(e, t, x0) for t in plan.times])
    if noise_energy > 0:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(z.shape)
        norm = float(np.linalg.norm(v))
        if norm > 0:
            z = z + v * (noise_energy / norm)
    return SampleBatch(z, float(noise_energy), sensors, plan)


def state_at(e: EigenStructure, x0, t: float) -> np.ndarray:
    return matrix_exponential_action(e, t, np.asarray(x0, dtype=float))


def suggest_period(e: EigenStructure, ebar: EigenStructure, spread: float = 3.0) -> float:
    """Sampling period putting the fastest mode at ``exp(-spread)`` per step."""
    top = max(float(np.max(np.abs(e.eigenvalues))), float(np.max(np.abs(ebar.eigenvalues))), 1e-12)
    return spread / top


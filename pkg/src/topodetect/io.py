"""File formats: graph JSON, scenario JSON, sample batches (CSV / JSON), reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .detector import SampleBatch, SamplePlan
from .discern import SensorSet
from .model import InvalidGraphError, NetworkModel, VariationSpec, build_consensus

SCENARIO_FORMAT = 1


class FormatError(ValueError):
    """Malformed input file; the message names the file and location."""


def _load_json(source, what: str):
    if isinstance(source, dict):
        return source, what
    path = Path(source)
    text = path.read_text()
    try:
        return json.loads(text), str(path)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None


def graph_from_dict(data: dict, where: str = "graph") -> NetworkModel:
    """Build a model from ``{"n", "edges", "diag"?, "consensus"?}``."""
    try:
        n = int(data["n"])
        edges = data["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: graph needs integer 'n' and list 'edges' ({exc})") from None
    try:
        if data.get("consensus", False):
            return build_consensus(n, [(e[0], e[1]) for e in edges])
        return NetworkModel.from_edges(n, edges, data.get("diag"))
    except (InvalidGraphError, IndexError, TypeError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def load_graph(source) -> NetworkModel:
    data, where = _load_json(source, "graph")
    return graph_from_dict(data, where)


def graph_to_dict(model: NetworkModel) -> dict:
    return {
        "n": model.n,
        "edges": [[i, j, w] for (i, j), w in zip(model.edges, model.weights)],
        "diag": list(model.diag),
    }


@dataclass(frozen=True, eq=False)
class Scenario:
    network: NetworkModel
    variations: tuple[VariationSpec, ...]
    sensors: SensorSet
    plan: SamplePlan
    noise: float
    x0: np.ndarray | None = None


def load_scenario(source) -> Scenario:
    """Read a scenario file (``format: 1``) and validate cross references."""
    data, where = _load_json(source, "scenario")
    if data.get("format") != SCENARIO_FORMAT:
        raise FormatError(f"{where}: expected \"format\": {SCENARIO_FORMAT}, got {data.get('format')!r}")
    try:
        network = graph_from_dict(data["network"], where)
        variations = tuple(VariationSpec.parse(v) if isinstance(v, str)
                           else VariationSpec.parse(f"{v['kind']}:{','.join(map(str, v['target']))}")
                           for v in data.get("variations", []))
        sensors = SensorSet(tuple(data.get("sensors", range(1, network.n + 1))))
        p = data.get("plan", {})
        plan = SamplePlan(float(p.get("t0", 0.0)), float(p["T"]), int(p["N"]))
        noise = float(data.get("noise", 0.0))
        x0 = np.asarray(data["x0"], dtype=float) if "x0" in data else None
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from None
    for v in variations:
        try:
            v.validate(network)
        except ValueError as exc:
            raise FormatError(f"{where}: variation {v}: {exc}") from None
    try:
        sensors.validate(network.n)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None
    if noise < 0:
        raise FormatError(f"{where}: noise must be >= 0")
    if x0 is not None and x0.shape != (network.n,):
        raise FormatError(f"{where}: x0 has length {x0.size}, expected {network.n}")
    return Scenario(network, variations, sensors, plan, noise, x0)


def scenario_to_dict(sc: Scenario) -> dict:
    out = {
        "format": SCENARIO_FORMAT,
        "network": graph_to_dict(sc.network),
        "variations": [str(v) for v in sc.variations],
        "sensors": list(sc.sensors.measured),
        "plan": {"t0": sc.plan.t0, "T": sc.plan.T, "N": sc.plan.N},
        "noise": sc.noise,
    }
    if sc.x0 is not None:
        out["x0"] = [float(v) for v in sc.x0]
    return out


# --- sample batches -----------------------------------------------------------

def samples_to_csv(batch: SampleBatch) -> str:
    """CSV with header ``k,node,value``; values written with full precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "node", "value"])
    for k in range(batch.plan.N):
        for c, node in enumerate(batch.sensors.measured):
            writer.writerow([k, node, repr(float(batch.Z[k, c]))])
    return buf.getvalue()


def samples_from_csv(text: str, sensors: SensorSet, plan: SamplePlan, energy: float,
                     where: str = "samples") -> SampleBatch:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["k", "node", "value"]:
        raise FormatError(f"{where}:1: expected header 'k,node,value', got {header!r}")
    col = {node: c for c, node in enumerate(sensors.measured)}
    z = np.full((plan.N, len(sensors)), np.nan)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            k, node, value = int(row[0]), int(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise FormatError(f"{where}:{lineno}: cannot parse row {row!r}") from None
        if not 0 <= k < plan.N:
            raise FormatError(f"{where}:{lineno}: sample index {k} outside 0..{plan.N - 1}")
        if node not in col:
            raise FormatError(f"{where}:{lineno}: node {node} is not a sensor ({sensors})")
        z[k, col[node]] = value
    if np.isnan(z).any():
        k, c = map(int, np.argwhere(np.isnan(z))[0])
        raise FormatError(f"{where}: missing sample k={k}, node={sensors.measured[c]}")
    return SampleBatch(z, energy, sensors, plan)


def samples_to_json(batch: SampleBatch) -> str:
    return json.dumps({
        "format": SCENARIO_FORMAT,
        "sensors": list(batch.sensors.measured),
        "plan": {"t0": batch.plan.t0, "T": batch.plan.T, "N": batch.plan.N},
        "E_v": batch.energy,
        "samples": batch.Z.tolist(),
    }, indent=1)


def samples_from_json(text: str, where: str = "samples") -> SampleBatch:
    try:
        data = json.loads(text)
        p = data["plan"]
        plan = SamplePlan(float(p.get("t0", 0.0)), float(p["T"]), int(p["N"]))
        return SampleBatch(np.asarray(data["samples"], dtype=float), float(data.get("E_v", 0.0)),
                           SensorSet(tuple(data["sensors"])), plan)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def load_samples(path, scenario: Scenario) -> SampleBatch:
    """Read CSV or JSON samples; CSV takes sensors, plan and E_v from the scenario."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return samples_from_json(text, str(path))
    return samples_from_csv(text, scenario.sensors, scenario.plan, scenario.noise, str(path))


# --- reports --------------------------------------------------------------------

def _round(obj, digits: int = 15):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return str(obj)
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), digits)
    if isinstance(obj, np.generic):
        return _round(obj.item(), digits)
    return obj


def dump_report(report: dict, tolerances: dict | None = None) -> str:
    """JSON text with 15 significant digits and tool metadata."""
    body = {"tool": "topodetect", "version": __version__}
    if tolerances is not None:
        body["tolerances"] = tolerances
    body.update(report)
    return json.dumps(_round(body), indent=2)

"""Domain model for store-carry-forward contact scenarios.

Nodes (UAVs and ground towers) meet during bounded contact windows; a
scenario bundles the node roster, the window list, the per-hop transmission
time and the delay-attack configuration for one tracked message.  All times
are held internally as integer microseconds so that weight arithmetic and
equality tests stay exact; the JSON schema speaks decimal seconds.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

MICROS = 1_000_000

NodeId = int


class ScenarioError(ValueError):
    """Raised when a scenario file or value violates the schema or an invariant."""


def to_us(seconds: float) -> int:
    """Convert decimal seconds to integer microseconds."""
    return round(float(seconds) * MICROS)


def to_seconds(us: int) -> float:
    """Convert integer microseconds back to decimal seconds."""
    return us / MICROS


class NodeKind(str, Enum):
    UAV = "uav"
    TOWER = "tower"


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    z: float
    t: int  # microseconds


@dataclass(frozen=True)
class Node:
    id: NodeId
    kind: NodeKind = NodeKind.UAV
    name: str | None = None
    waypoints: tuple[Waypoint, ...] | None = None
    range_m: float | None = None
    speed: float | None = None

    def label(self) -> str:
        return self.name if self.name is not None else str(self.id)


@dataclass(frozen=True)
class TimeWindow:
    """A contact window: nodes a and b can exchange data during [start, end]."""

    wid: int
    a: NodeId
    b: NodeId
    start: int  # microseconds
    end: int    # microseconds

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ScenarioError(f"window {self.wid}: endpoints must differ")
        if self.start >= self.end:
            raise ScenarioError(f"window {self.wid}: start must precede end")

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def pair(self) -> tuple[NodeId, NodeId]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)

    def touches(self, node: NodeId) -> bool:
        return node == self.a or node == self.b

    def other(self, node: NodeId) -> NodeId:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise ValueError(f"node {node} not on window {self.wid}")

    def contains(self, t: int) -> bool:
        return self.start <= t <= self.end


@dataclass(frozen=True)
class AttackConfig:
    """Per-node transmission delays injected by compromised relays."""

    delays: Mapping[NodeId, int] = field(default_factory=dict)  # node -> microseconds

    def delay_us(self, node: NodeId) -> int:
        return self.delays.get(node, 0)

    def attackers(self) -> frozenset[NodeId]:
        return frozenset(n for n, d in self.delays.items() if d > 0)


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[Node, ...]
    windows: tuple[TimeWindow, ...]
    t_tr: int  # per-hop transmission time, microseconds
    source: NodeId
    destination: NodeId
    creation_time: int = 0
    attack: AttackConfig = field(default_factory=AttackConfig)

    def node_by_id(self, node: NodeId) -> Node:
        for n in self.nodes:
            if n.id == node:
                return n
        raise KeyError(node)

    def label(self, node: NodeId) -> str:
        try:
            return self.node_by_id(node).label()
        except KeyError:
            return str(node)

    def windows_of(self, node: NodeId) -> list[TimeWindow]:
        return [w for w in self.windows if w.touches(node)]

    def without_attack(self) -> "Scenario":
        return replace(self, attack=AttackConfig({}))


def validate_scenario(s: Scenario) -> None:
    """Check every scenario invariant; raise ScenarioError naming the first failure."""
    ids = [n.id for n in s.nodes]
    if len(ids) != len(set(ids)):
        raise ScenarioError("node ids must be unique")
    if any(i < 0 for i in ids):
        raise ScenarioError("node ids must be non-negative")
    known = set(ids)
    for n in s.nodes:
        if n.waypoints is not None:
            if len(n.waypoints) == 0:
                raise ScenarioError(f"node {n.id}: empty waypoint list")
            ts = [w.t for w in n.waypoints]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ScenarioError(f"node {n.id}: waypoint times must strictly increase")
            if n.kind is NodeKind.TOWER:
                if len(n.waypoints) != 1 or n.waypoints[0].z != 0.0:
                    raise ScenarioError(f"node {n.id}: a tower has one waypoint at altitude 0")
    if s.t_tr <= 0:
        raise ScenarioError("t_tr must be positive")
    wids = [w.wid for w in s.windows]
    if len(wids) != len(set(wids)):
        raise ScenarioError("window ids must be unique")
    for w in s.windows:
        if w.a not in known or w.b not in known:
            raise ScenarioError(f"window {w.wid}: endpoint references unknown node")
        if w.duration < s.t_tr:
            raise ScenarioError(f"window {w.wid}: shorter than one transmission time")
    if s.source not in known:
        raise ScenarioError("source references unknown node")
    if s.destination not in known:
        raise ScenarioError("destination references unknown node")
    if s.source == s.destination:
        raise ScenarioError("source and destination must differ")
    for node, eps in s.attack.delays.items():
        if node not in known:
            raise ScenarioError(f"attack entry references unknown node {node}")
        if node == s.destination:
            raise ScenarioError("destination cannot carry an attack delay")
        if eps < 0:
            raise ScenarioError(f"attack delay for node {node} must be non-negative")
    if earliest_arrival(s).get(s.destination) is None:
        raise ScenarioError("no contact window sequence connects source to destination")


def earliest_arrival(s: Scenario) -> dict[NodeId, int]:
    """Earliest possible message arrival per node under store-carry-forward relay."""
    best: dict[NodeId, int] = {s.source: s.creation_time}
    heap: list[tuple[int, NodeId]] = [(s.creation_time, s.source)]
    by_node: dict[NodeId, list[TimeWindow]] = {}
    for w in s.windows:
        by_node.setdefault(w.a, []).append(w)
        by_node.setdefault(w.b, []).append(w)
    while heap:
        t, u = heapq.heappop(heap)
        if t > best.get(u, math.inf):
            continue
        for w in by_node.get(u, ()):
            if u == s.source and w.start < s.creation_time:
                continue  # the source only transmits in windows opening at or after creation
            send = max(t, w.start)
            if send + s.t_tr > w.end:
                continue
            v = w.other(u)
            arrival = send + s.t_tr
            if arrival < best.get(v, math.inf):
                best[v] = arrival
                heapq.heappush(heap, (arrival, v))
    return best


# ---------------------------------------------------------------------------
# trajectory-derived windows

def derive_windows(
    nodes: Sequence[Node],
    range_rule: Callable[[Node, Node], float] | None = None,
    dt: float = 0.5,
) -> list[TimeWindow]:
    """Sample pairwise distances along waypoint trajectories and emit contact windows.

    Positions are linearly interpolated between waypoints at step ``dt`` seconds;
    a window covers each maximal run of samples whose distance stays within the
    pair's communication range (default rule: the smaller of the two ranges).
    Window endpoints are therefore accurate to within one ``dt``.
    """
    if dt <= 0:
        raise ScenarioError("dt must be positive")
    step = max(1, to_us(dt))
    windows: list[tuple[tuple[NodeId, NodeId], int, int]] = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            pair = (a.id, b.id) if a.id < b.id else (b.id, a.id)
            limit = _pair_range(a, b, range_rule)
            span = _span_overlap(a, b)
            if span is None:
                continue
            lo, hi = span
            run_start: int | None = None
            last_t = lo
            t = lo
            while True:
                t = min(t, hi)
                inside = _dist(a, b, t) <= limit
                if inside and run_start is None:
                    run_start = t
                elif not inside and run_start is not None:
                    if last_t > run_start:
                        windows.append((pair, run_start, last_t))
                    run_start = None
                last_t = t
                if t >= hi:
                    break
                t += step
            if run_start is not None and hi > run_start:
                windows.append((pair, run_start, hi))
    windows.sort(key=lambda item: (min(item[0]), max(item[0]), item[1]))
    return [
        TimeWindow(wid=i + 1, a=pair[0], b=pair[1], start=start, end=end)
        for i, (pair, start, end) in enumerate(windows)
    ]


def _pair_range(a: Node, b: Node, rule: Callable[[Node, Node], float] | None) -> float:
    if rule is not None:
        return rule(a, b)
    if a.range_m is None or b.range_m is None:
        raise ScenarioError(f"nodes {a.id},{b.id}: no range configured and no range rule given")
    return min(a.range_m, b.range_m)


def _span(node: Node) -> tuple[float, float]:
    if node.waypoints is None:
        raise ScenarioError(f"node {node.id}: waypoints required to derive windows")
    if len(node.waypoints) == 1:
        return (-math.inf, math.inf)  # static node, present for the whole horizon
    return (node.waypoints[0].t, node.waypoints[-1].t)


def _span_overlap(a: Node, b: Node) -> tuple[int, int] | None:
    lo = max(_span(a)[0], _span(b)[0])
    hi = min(_span(a)[1], _span(b)[1])
    if math.isinf(lo) or math.isinf(hi) or hi <= lo:
        return None  # two static nodes have no finite horizon to sample
    return (int(lo), int(hi))


def _distance_at(node: Node, t: int) -> tuple[float, float, float] | None:
    wps = node.waypoints
    assert wps is not None
    if len(wps) == 1:
        return (wps[0].x, wps[0].y, wps[0].z)
    if t <= wps[0].t:
        return (wps[0].x, wps[0].y, wps[0].z)
    if t >= wps[-1].t:
        return (wps[-1].x, wps[-1].y, wps[-1].z)
    for p, q in zip(wps, wps[1:]):
        if p.t <= t <= q.t:
            f = (t - p.t) / (q.t - p.t)
            return (p.x + f * (q.x - p.x), p.y + f * (q.y - p.y), p.z + f * (q.z - p.z))
    return None


def _dist(a: Node, b: Node, t: int) -> float:
    pa = _distance_at(a, t)
    pb = _distance_at(b, t)
    assert pa is not None and pb is not None
    return math.dist(pa, pb)


# ---------------------------------------------------------------------------
# JSON serialization (decimal seconds on the wire)

_NODE_KEYS = {"id", "kind", "name", "waypoints", "range", "speed"}
_WINDOW_KEYS = {"wid", "a", "b", "start", "end"}
_TOP_KEYS = {"nodes", "windows", "t_tr", "source", "destination", "creation_time", "attack"}


def scenario_to_dict(s: Scenario) -> dict:
    nodes = []
    for n in s.nodes:
        d: dict = {"id": n.id, "kind": n.kind.value}
        if n.name is not None:
            d["name"] = n.name
        if n.waypoints is not None:
            d["waypoints"] = [[w.x, w.y, w.z, to_seconds(w.t)] for w in n.waypoints]
        if n.range_m is not None:
            d["range"] = n.range_m
        if n.speed is not None:
            d["speed"] = n.speed
        nodes.append(d)
    return {
        "nodes": nodes,
        "windows": [
            {"wid": w.wid, "a": w.a, "b": w.b,
             "start": to_seconds(w.start), "end": to_seconds(w.end)}
            for w in s.windows
        ],
        "t_tr": to_seconds(s.t_tr),
        "source": s.source,
        "destination": s.destination,
        "creation_time": to_seconds(s.creation_time),
        "attack": {str(n): to_seconds(d) for n, d in sorted(s.attack.delays.items())},
    }


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("nodes", "windows", "t_tr", "source", "destination"):
        if key not in data:
            raise ScenarioError(f"missing required key: {key}")
    nodes = []
    for nd in data["nodes"]:
        bad = set(nd) - _NODE_KEYS
        if bad:
            raise ScenarioError(f"node entry has unknown keys: {sorted(bad)}")
        if "id" not in nd:
            raise ScenarioError("node entry missing id")
        try:
            kind = NodeKind(nd.get("kind", "uav"))
        except ValueError as exc:
            raise ScenarioError(f"node {nd['id']}: unknown kind {nd.get('kind')!r}") from exc
        wps = None
        if "waypoints" in nd:
            wps = tuple(
                Waypoint(float(x), float(y), float(z), to_us(t))
                for x, y, z, t in nd["waypoints"]
            )
        nodes.append(Node(
            id=int(nd["id"]), kind=kind, name=nd.get("name"),
            waypoints=wps,
            range_m=float(nd["range"]) if "range" in nd else None,
            speed=float(nd["speed"]) if "speed" in nd else None,
        ))
    windows = []
    for wd in data["windows"]:
        bad = set(wd) - _WINDOW_KEYS
        if bad:
            raise ScenarioError(f"window entry has unknown keys: {sorted(bad)}")
        try:
            windows.append(TimeWindow(
                wid=int(wd["wid"]), a=int(wd["a"]), b=int(wd["b"]),
                start=to_us(wd["start"]), end=to_us(wd["end"]),
            ))
        except KeyError as exc:
            raise ScenarioError(f"window entry missing key {exc}") from exc
    attack = AttackConfig({
        int(node): to_us(delay) for node, delay in data.get("attack", {}).items()
    })
    s = Scenario(
        nodes=tuple(nodes),
        windows=tuple(windows),
        t_tr=to_us(data["t_tr"]),
        source=int(data["source"]),
        destination=int(data["destination"]),
        creation_time=to_us(data.get("creation_time", 0)),
        attack=attack,
    )
    validate_scenario(s)
    return s


def save_scenario(s: Scenario, path: str | Path) -> None:
    validate_scenario(s)
    Path(path).write_text(dumps(scenario_to_dict(s)), encoding="utf-8")


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(data)


def dumps(obj: dict) -> str:
    """Serialize a report object deterministically (fixed field order, newline-terminated)."""
    return json.dumps(obj, indent=2) + "\n"


def generate(params) -> Scenario:
    """Produce a random but reproducible scenario; see the generate module."""
    from .generate import generate as _generate
    return _generate(params)

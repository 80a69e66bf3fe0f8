"""Deterministic store-carry-forward replay of one tracked message.

A benign holder forwards along the first physical hop of the minimum-weight
graph path to the destination, restricted to windows usable at the current
instant.  A holder with a configured delay adds it to the planned send time;
when that pushes the transmission past the end of the encounter, the holder
misses the window and falls back to the next window it encounters with any
neighbor, applying the same delay there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from .scenario import NodeId, Scenario, ScenarioError, to_seconds, to_us
from .twig import Twig, TwigVertex, build, shortest_path


@dataclass(frozen=True)
class HopRecord:
    """One reception event; the source entry has no inbound transmission."""

    node: NodeId
    reception_time: int  # microseconds
    window: int | None = None  # split wid the transmission used
    send_time_of_prev: int | None = None


@dataclass(frozen=True)
class PacketTrace:
    source: NodeId
    destination: NodeId
    hops: tuple[HopRecord, ...]
    delivered: bool
    physical_arrival: int | None = None

    def __post_init__(self) -> None:
        if not self.hops or self.hops[0].node != self.source:
            raise ValueError("trace must start at the source")
        times = [h.reception_time for h in self.hops]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("reception times must strictly increase")
        if self.delivered:
            if self.hops[-1].node != self.destination:
                raise ValueError("delivered trace must end at the destination")
            if self.physical_arrival != self.hops[-1].reception_time:
                raise ValueError("physical_arrival must equal the final reception time")

    @property
    def path(self) -> tuple[NodeId, ...]:
        return tuple(h.node for h in self.hops)

    @property
    def hop_count(self) -> int:
        return len(self.hops) - 1


def simulate(s: Scenario, g: Twig | None = None) -> PacketTrace:
    """Replay the tracked message; returns delivered=False when it is dropped."""
    if g is None:
        g = build(s.windows, s.t_tr)
    hops = [HopRecord(s.source, s.creation_time)]
    holder, now, recv_wid = s.source, s.creation_time, None
    while holder != s.destination:
        plan = _plan(s, g, holder, now, recv_wid)
        if plan is None:
            return PacketTrace(s.source, s.destination, tuple(hops), False)
        neighbor, wid, planned = plan
        eps = s.attack.delay_us(holder)
        if eps == 0:
            send, target = planned, neighbor
        elif planned + eps + s.t_tr <= g.original_of(wid).end:
            send, target = planned + eps, neighbor
        else:
            hit = _retarget(s, holder, planned, eps)
            if hit is None:
                return PacketTrace(s.source, s.destination, tuple(hops), False)
            send, target = hit
        piece = g.send_window(holder, target, send)
        assert piece is not None, "send instant escaped every window of the pair"
        rt = send + s.t_tr
        hops.append(HopRecord(target, rt, piece.wid, send))
        holder, now, recv_wid = target, rt, piece.wid
    return PacketTrace(s.source, s.destination, tuple(hops), True, now)


def _plan(
    s: Scenario, g: Twig, holder: NodeId, now: int, recv_wid: int | None,
) -> tuple[NodeId, int, int] | None:
    """Benign forwarding decision: (neighbor, crossing wid, planned send time)."""
    if recv_wid is None:
        nh = benign_next_hop(s, g, holder, now)
        if nh is None:
            return None
        neighbor, wid = nh
        return neighbor, wid, max(now, g.window(wid).start)
    path = shortest_path(g, TwigVertex(holder, recv_wid), s.destination, now=now)
    if path is None:
        return None
    for u, v in zip(path.vertices, path.vertices[1:]):
        if u.node != v.node:
            return v.node, u.wid, max(now, g.window(u.wid).start)
    return None


def _retarget(s: Scenario, holder: NodeId, planned: int, eps: int) -> tuple[int, NodeId] | None:
    """After a miss: next upcoming encounter of the holder that survives the delay."""
    cands = sorted(
        (w for w in s.windows if w.touches(holder) and w.start >= planned),
        key=lambda w: (w.start, w.wid),
    )
    for w in cands:
        if w.start + eps + s.t_tr <= w.end:
            return w.start + eps, w.other(holder)
    return None


def benign_next_hop(
    s: Scenario,
    g: Twig,
    holder: NodeId,
    now: int,
    receive_window: int | None = None,
) -> tuple[NodeId, int] | None:
    """First physical hop a benign holder would take at the given instant.

    With receive_window set, the decision anchors at that graph vertex exactly
    as the simulator does.  Without it, every usable window of the holder is
    scored by waiting time plus the restricted shortest-path weight from its
    vertex, tie-broken by hop count and then vertex sequence.
    """
    if receive_window is not None:
        plan = _plan(s, g, holder, now, receive_window)
        return None if plan is None else (plan[0], plan[1])
    best: tuple[tuple[int, int, tuple[tuple[int, int], ...]], int] | None = None
    for w in g.windows_of_node(holder):
        if not g.usable(w.wid, now):
            continue
        if holder == s.source and g.original_of(w.wid).start < s.creation_time:
            continue  # the source transmits only in windows opening after creation
        sp = shortest_path(g, TwigVertex(holder, w.wid), s.destination, now=now)
        if sp is None:
            continue
        wait = max(w.start, now) - now
        rank = (wait + sp.total_weight, sp.hops, tuple(v.key for v in sp.vertices))
        if best is None or rank < best[0]:
            best = (rank, w.wid)
    if best is None:
        return None
    wid = best[1]
    return g.window(wid).other(holder), wid


def window_misses(s: Scenario, g: Twig, trace: PacketTrace) -> dict[NodeId, bool]:
    """Per sending node: did its actual send fall outside its benign plan's window?"""
    out: dict[NodeId, bool] = {}
    for i in range(len(trace.hops) - 1):
        h = trace.hops[i]
        plan = _plan(s, g, h.node, h.reception_time, h.window)
        if plan is None:
            continue
        neighbor, wid, _ = plan
        actual_send = trace.hops[i + 1].reception_time - s.t_tr
        out[h.node] = (
            trace.hops[i + 1].node != neighbor
            or actual_send + s.t_tr > g.original_of(wid).end
        )
    return out


# ---------------------------------------------------------------------------
# JSON form

_HOP_KEYS = {"node", "t", "window", "sent_at"}
_TRACE_KEYS = {"source", "destination", "delivered", "physical_arrival", "hops"}


def trace_to_dict(t: PacketTrace) -> dict:
    return {
        "source": t.source,
        "destination": t.destination,
        "delivered": t.delivered,
        "physical_arrival": None if t.physical_arrival is None else to_seconds(t.physical_arrival),
        "hops": [
            {
                "node": h.node,
                "t": to_seconds(h.reception_time),
                "window": h.window,
                "sent_at": None if h.send_time_of_prev is None else to_seconds(h.send_time_of_prev),
            }
            for h in t.hops
        ],
    }


def trace_from_dict(data: dict) -> PacketTrace:
    unknown = set(data) - _TRACE_KEYS
    if unknown:
        raise ScenarioError(f"unknown trace keys: {sorted(unknown)}")
    try:
        hops = []
        for hd in data["hops"]:
            bad = set(hd) - _HOP_KEYS
            if bad:
                raise ScenarioError(f"unknown hop keys: {sorted(bad)}")
            hops.append(HopRecord(
                node=int(hd["node"]),
                reception_time=to_us(hd["t"]),
                window=None if hd.get("window") is None else int(hd["window"]),
                send_time_of_prev=None if hd.get("sent_at") is None else to_us(hd["sent_at"]),
            ))
        arrival = data.get("physical_arrival")
        return PacketTrace(
            source=int(data["source"]),
            destination=int(data["destination"]),
            hops=tuple(hops),
            delivered=bool(data["delivered"]),
            physical_arrival=None if arrival is None else to_us(arrival),
        )
    except KeyError as exc:
        raise ScenarioError(f"trace missing key {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"invalid trace: {exc}") from exc


def load_trace(path: str | Path) -> PacketTrace:
    return trace_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

"""Time-window graph: vertices are (node, window) pairs, edges carry travel cost.

Construction first splits partially overlapping windows until every pair of
windows is either disjoint, nested, or identical in span.  Each surviving
window contributes one vertex per endpoint node joined by an undirected
within-window edge of weight t_tr; windows sharing a node are joined by
directed succession edges or undirected containment edges whose weight is the
difference of their start times.  Shortest-path queries and the embedding of
physical packet traces both operate on this graph.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

from .scenario import NodeId, TimeWindow, to_seconds

if TYPE_CHECKING:
    from .simulator import PacketTrace


class EmbeddingError(ValueError):
    """A packet trace cannot be realized as a walk in the graph."""


class EdgeKind(str, Enum):
    UNDIRECTED = "undirected"
    DIRECTED = "directed"


class EdgeOrigin(str, Enum):
    WITHIN_WINDOW = "within_window"
    SUCCESSION = "succession"
    CONTAINMENT = "containment"


@dataclass(frozen=True, order=True)
class TwigVertex:
    node: NodeId
    wid: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.node, self.wid)


@dataclass(frozen=True)
class TwigEdge:
    u: TwigVertex
    v: TwigVertex
    kind: EdgeKind
    weight: int
    origin: EdgeOrigin


@dataclass(frozen=True)
class TwigPath:
    """A traversable vertex sequence; weights holds the per-arc costs."""

    vertices: tuple[TwigVertex, ...]
    total_weight: int
    weights: tuple[int, ...] = ()

    @property
    def hops(self) -> int:
        return len(self.vertices) - 1


@dataclass
class Twig:
    """Immutable after build(); all query methods are read-only."""

    split_windows: tuple[TimeWindow, ...]
    edges: tuple[TwigEdge, ...]
    provenance: Mapping[int, int]  # split wid -> original wid
    originals: tuple[TimeWindow, ...]
    t_tr: int
    vertices: tuple[TwigVertex, ...] = field(init=False)

    def __post_init__(self) -> None:
        self._piece = {w.wid: w for w in self.split_windows}
        self._orig = {w.wid: w for w in self.originals}
        self._labels = _window_labels(self.split_windows, self.provenance)
        by_node: dict[NodeId, list[TimeWindow]] = {}
        by_pair: dict[tuple[NodeId, NodeId], list[TimeWindow]] = {}
        for w in self.split_windows:
            by_node.setdefault(w.a, []).append(w)
            by_node.setdefault(w.b, []).append(w)
            by_pair.setdefault(w.pair, []).append(w)
        self._by_node = {n: tuple(sorted(ws, key=_wkey)) for n, ws in by_node.items()}
        self._by_pair = {p: tuple(sorted(ws, key=_wkey)) for p, ws in by_pair.items()}
        arcs: dict[TwigVertex, list[tuple[TwigVertex, int, EdgeOrigin]]] = {}
        arc_weight: dict[tuple[TwigVertex, TwigVertex], int] = {}
        for e in self.edges:
            pairs = [(e.u, e.v)]
            if e.kind is EdgeKind.UNDIRECTED:
                pairs.append((e.v, e.u))
            for u, v in pairs:
                arcs.setdefault(u, []).append((v, e.weight, e.origin))
                arc_weight[(u, v)] = e.weight
        for lst in arcs.values():
            lst.sort(key=lambda item: item[0].key)
        self._arcs = arcs
        self._arc_weight = arc_weight
        self.vertices = tuple(sorted(
            {TwigVertex(w.a, w.wid) for w in self.split_windows}
            | {TwigVertex(w.b, w.wid) for w in self.split_windows}
        ))

    def window(self, wid: int) -> TimeWindow:
        return self._piece[wid]

    def original_of(self, wid: int) -> TimeWindow:
        return self._orig[self.provenance[wid]]

    def window_label(self, wid: int) -> str:
        return self._labels[wid]

    def vertex_label(self, v: TwigVertex, node_label: Callable[[NodeId], str] = str) -> str:
        return f"{node_label(v.node)}^{self._labels[v.wid]}"

    def windows_of_node(self, node: NodeId) -> tuple[TimeWindow, ...]:
        return self._by_node.get(node, ())

    def windows_of_pair(self, a: NodeId, b: NodeId) -> tuple[TimeWindow, ...]:
        pair = (a, b) if a < b else (b, a)
        return self._by_pair.get(pair, ())

    def arcs_from(self, v: TwigVertex) -> Sequence[tuple[TwigVertex, int, EdgeOrigin]]:
        return self._arcs.get(v, ())

    def arc_weight(self, u: TwigVertex, v: TwigVertex) -> int | None:
        return self._arc_weight.get((u, v))

    def usable(self, wid: int, now: int) -> bool:
        """Could a transmission over this split window start no earlier than now?

        The send may run past the split boundary: the physical constraint is
        the end of the original encounter, not of the artificial piece.
        """
        w = self._piece[wid]
        if w.end < now:
            return False
        return max(w.start, now) + self.t_tr <= self.original_of(wid).end

    def send_window(self, a: NodeId, b: NodeId, send: int) -> TimeWindow | None:
        """Latest split window of the pair whose span contains the send instant."""
        found = None
        for w in self.windows_of_pair(a, b):
            if w.start <= send <= w.end:
                found = w  # ascending scan: the last hit is the latest piece
        return found


def _wkey(w: TimeWindow) -> tuple[int, int, int]:
    return (w.start, w.end, w.wid)


def _window_labels(pieces: Iterable[TimeWindow], provenance: Mapping[int, int]) -> dict[int, str]:
    children: dict[int, list[int]] = {}
    for w in pieces:
        children.setdefault(provenance[w.wid], []).append(w.wid)
    labels: dict[int, str] = {}
    for orig, wids in children.items():
        if len(wids) == 1 and wids[0] == orig:
            labels[orig] = str(orig)
        else:
            for i, wid in enumerate(sorted(wids), start=1):
                labels[wid] = f"{orig}.{i}"
    return labels


# ---------------------------------------------------------------------------
# construction

def build(windows: Sequence[TimeWindow], t_tr: int) -> Twig:
    """Split partially overlapping windows to a fixpoint, then wire up all edges."""
    if t_tr <= 0:
        raise ValueError("t_tr must be positive")
    wids = [w.wid for w in windows]
    if len(wids) != len(set(wids)):
        raise ValueError("window ids must be unique")
    pieces, provenance = _split(windows)
    edges: list[TwigEdge] = []
    for w in pieces:
        lo, hi = sorted((w.a, w.b))
        edges.append(TwigEdge(
            TwigVertex(lo, w.wid), TwigVertex(hi, w.wid),
            EdgeKind.UNDIRECTED, t_tr, EdgeOrigin.WITHIN_WINDOW,
        ))
    by_node: dict[NodeId, list[TimeWindow]] = {}
    for w in pieces:
        by_node.setdefault(w.a, []).append(w)
        by_node.setdefault(w.b, []).append(w)
    for node in sorted(by_node):
        ws = sorted(by_node[node], key=_wkey)
        for i, wi in enumerate(ws):
            for wj in ws[i + 1:]:
                if wi.end <= wj.start:
                    edges.append(TwigEdge(
                        TwigVertex(node, wi.wid), TwigVertex(node, wj.wid),
                        EdgeKind.DIRECTED, wj.start - wi.start, EdgeOrigin.SUCCESSION,
                    ))
                elif wj.end <= wi.end or wi.start == wj.start:
                    # one span nests inside the other (equal spans included)
                    container, inner = (wi, wj) if wj.end <= wi.end else (wj, wi)
                    edges.append(TwigEdge(
                        TwigVertex(node, container.wid), TwigVertex(node, inner.wid),
                        EdgeKind.UNDIRECTED, inner.start - container.start,
                        EdgeOrigin.CONTAINMENT,
                    ))
                else:
                    raise AssertionError(
                        f"windows {wi.wid} and {wj.wid} still partially overlap after splitting"
                    )
    return Twig(
        split_windows=tuple(pieces),
        edges=tuple(edges),
        provenance=provenance,
        originals=tuple(windows),
        t_tr=t_tr,
    )


def _split(windows: Sequence[TimeWindow]) -> tuple[list[TimeWindow], dict[int, int]]:
    # records: [start, end, orig wid, a, b, birth order]; birth order keeps
    # the rescans deterministic when spans coincide
    recs = [[w.start, w.end, w.wid, w.a, w.b, i] for i, w in enumerate(windows)]
    birth = len(recs)
    while True:
        recs.sort(key=lambda r: (r[0], r[1], r[2], r[5]))
        found = None
        for i, p in enumerate(recs):
            for q in recs[i + 1:]:
                if q[0] >= p[1]:
                    break  # sorted by start: no later window can overlap p
                if p[0] < q[0] < p[1] < q[1]:
                    found = (p, q)
                    break
            if found:
                break
        if not found:
            break
        p, q = found
        cut_lo, cut_hi = q[0], p[1]
        recs.remove(p)
        recs.remove(q)
        recs.append([p[0], cut_lo, p[2], p[3], p[4], birth]); birth += 1
        recs.append([cut_lo, cut_hi, p[2], p[3], p[4], birth]); birth += 1
        recs.append([cut_lo, cut_hi, q[2], q[3], q[4], birth]); birth += 1
        recs.append([cut_hi, q[1], q[2], q[3], q[4], birth]); birth += 1
    by_orig: dict[int, list[list[int]]] = {}
    for r in recs:
        by_orig.setdefault(r[2], []).append(r)
    next_wid = max((w.wid for w in windows), default=0) + 1
    pieces: list[TimeWindow] = []
    provenance: dict[int, int] = {}
    for w in windows:
        parts = sorted(by_orig[w.wid], key=lambda r: r[0])
        if len(parts) == 1:
            pieces.append(w)
            provenance[w.wid] = w.wid
            continue
        for r in parts:
            pieces.append(TimeWindow(wid=next_wid, a=w.a, b=w.b, start=r[0], end=r[1]))
            provenance[next_wid] = w.wid
            next_wid += 1
    return pieces, provenance


# ---------------------------------------------------------------------------
# shortest paths

def shortest_path(
    g: Twig,
    start: TwigVertex,
    to_node: NodeId,
    *,
    now: int | None = None,
) -> TwigPath | None:
    """Minimum-weight path from start to any vertex of to_node.

    Ties break on fewer hops, then the lexicographically smallest sequence of
    (node, wid) keys, so results are fully deterministic.  With now given,
    within-window edges are traversable only if the window is usable at that
    instant; same-node edges are never restricted.
    """
    if start not in g._arcs and start not in set(g.vertices):
        raise ValueError(f"vertex {start} is not in the graph")
    if start.node == to_node:
        return TwigPath((start,), 0, ())
    heap: list[tuple[int, int, tuple[tuple[int, int], ...], TwigVertex]] = [
        (0, 0, (start.key,), start)
    ]
    done: set[TwigVertex] = set()
    while heap:
        weight, hops, keys, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v.node == to_node:
            verts = tuple(TwigVertex(n, w) for n, w in keys)
            arc_weights = []
            for a, b in zip(verts, verts[1:]):
                aw = g.arc_weight(a, b)
                assert aw is not None
                arc_weights.append(aw)
            return TwigPath(verts, weight, tuple(arc_weights))
        for v2, w, origin in g.arcs_from(v):
            if v2 in done:
                continue
            if now is not None and origin is EdgeOrigin.WITHIN_WINDOW and not g.usable(v.wid, now):
                continue
            heapq.heappush(heap, (weight + w, hops + 1, keys + (v2.key,), v2))
    return None


# ---------------------------------------------------------------------------
# trace embedding

def embed_trace(g: Twig, trace: "PacketTrace", t_tr: int | None = None) -> TwigPath:
    """Map a physical hop sequence onto graph vertices.

    Each hop crosses the latest split window of its node pair that contains
    the send instant (reception time minus t_tr).  Between a relay's receive
    window and its send window, the relay's other windows that also contain
    the upcoming send instant are inserted in span order, which reproduces the
    same-node vertex runs of hand-worked followed paths.
    """
    t_tr = g.t_tr if t_tr is None else t_tr
    hops = trace.hops
    if len(hops) < 2:
        raise EmbeddingError("trace has no transmissions to embed")
    crossing: list[TimeWindow] = []
    for i in range(1, len(hops)):
        send = hops[i].reception_time - t_tr
        w = g.send_window(hops[i - 1].node, hops[i].node, send)
        if w is None:
            raise EmbeddingError(
                f"hop {i}: no window between nodes {hops[i - 1].node} and "
                f"{hops[i].node} contains send instant {to_seconds(send)}"
            )
        if hops[i].window is not None and hops[i].window != w.wid:
            raise EmbeddingError(
                f"hop {i}: recorded window {hops[i].window} does not contain "
                f"send instant {to_seconds(send)} (expected {w.wid})"
            )
        crossing.append(w)
    verts = [TwigVertex(hops[0].node, crossing[0].wid)]
    weights: list[int] = []
    for i in range(1, len(hops)):
        node = hops[i].node
        verts.append(TwigVertex(node, crossing[i - 1].wid))
        weights.append(t_tr)
        if i == len(hops) - 1:
            break
        for v2, w2 in _same_node_run(g, node, crossing[i - 1], crossing[i],
                                     hops[i + 1].reception_time - t_tr, hop=i):
            verts.append(v2)
            weights.append(w2)
    return TwigPath(tuple(verts), sum(weights), tuple(weights))


def _same_node_run(
    g: Twig, node: NodeId, recv: TimeWindow, send: TimeWindow, send_instant: int, hop: int,
) -> list[tuple[TwigVertex, int]]:
    if recv.wid == send.wid:
        return []
    cands = [w for w in g.windows_of_node(node) if w.start <= send_instant <= w.end]
    kr, ks = _wkey(recv), _wkey(send)
    if kr <= ks:
        mids = [w for w in cands if kr < _wkey(w) < ks]
    else:
        mids = [w for w in cands if ks < _wkey(w) < kr]
        mids.reverse()
    out: list[tuple[TwigVertex, int]] = []
    prev = recv
    for w in mids + [send]:
        aw = g.arc_weight(TwigVertex(node, prev.wid), TwigVertex(node, w.wid))
        if aw is None:
            out = []
            break
        out.append((TwigVertex(node, w.wid), aw))
        prev = w
    if out:
        return out
    direct = g.arc_weight(TwigVertex(node, recv.wid), TwigVertex(node, send.wid))
    if direct is None:
        raise EmbeddingError(
            f"hop {hop}: node {node} cannot move from window {recv.wid} to {send.wid}"
        )
    return [(TwigVertex(node, send.wid), direct)]


# ---------------------------------------------------------------------------
# dumps

def graph_to_dict(g: Twig) -> dict:
    verts = []
    for v in g.vertices:
        w = g.window(v.wid)
        verts.append({
            "node": v.node,
            "wid": v.wid,
            "label": g.window_label(v.wid),
            "start": to_seconds(w.start),
            "end": to_seconds(w.end),
        })
    edges = []
    for e in sorted(g.edges, key=lambda e: (e.u.key, e.v.key, e.origin.value)):
        edges.append({
            "u": list(e.u.key),
            "v": list(e.v.key),
            "kind": e.kind.value,
            "weight": to_seconds(e.weight),
            "origin": e.origin.value,
        })
    return {"t_tr": to_seconds(g.t_tr), "vertices": verts, "edges": edges}


def to_dot(g: Twig, node_label: Callable[[NodeId], str] = str) -> str:
    """Render the graph in DOT form; undirected edges are drawn without arrowheads."""
    lines = ["digraph twig {"]
    for v in g.vertices:
        lines.append(f'  "{g.vertex_label(v, node_label)}";')
    for e in sorted(g.edges, key=lambda e: (e.u.key, e.v.key, e.origin.value)):
        lu = g.vertex_label(e.u, node_label)
        lv = g.vertex_label(e.v, node_label)
        attrs = f'label="{to_seconds(e.weight):g}"'
        if e.kind is EdgeKind.UNDIRECTED:
            attrs += ", dir=none"
        if e.origin is EdgeOrigin.CONTAINMENT:
            attrs += ", style=dashed"
        lines.append(f'  "{lu}" -> "{lv}" [{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"

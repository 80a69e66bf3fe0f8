"""Shared builders and independent oracles for the test suite.

The oracle in here deliberately avoids the production Dijkstra: it enumerates
every simple path by depth-first search and ranks them with the documented
ordering, so the two implementations can be checked against each other.
"""

from __future__ import annotations

import random

from tdasim import (
    AttackConfig,
    EdgeOrigin,
    Node,
    NodeKind,
    Scenario,
    TimeWindow,
    Twig,
    TwigVertex,
    build,
    to_us,
)

NAMES = "SABCDEF"
S, A, B, C, D, E, F = range(7)


def demo_windows() -> tuple[TimeWindow, ...]:
    spans = [
        (1, S, A, 5, 8),
        (2, S, A, 12, 15),
        (3, A, B, 25, 40),
        (4, B, C, 25, 29),
        (5, B, D, 35, 50),
        (6, C, D, 60, 64),
        (7, C, F, 90, 95),
        (8, C, E, 110, 118),
        (9, E, F, 150, 165),
    ]
    return tuple(
        TimeWindow(wid, a, b, to_us(lo), to_us(hi)) for wid, a, b, lo, hi in spans
    )


def make_demo(delays: dict[int, float] | None = None) -> Scenario:
    """Seven-node walkthrough network: five drones, two ground relays."""
    nodes = tuple(
        Node(i, NodeKind.TOWER if i in (B, F) else NodeKind.UAV, name=NAMES[i])
        for i in range(7)
    )
    attack = AttackConfig({n: to_us(d) for n, d in (delays or {}).items()})
    return Scenario(
        nodes=nodes,
        windows=demo_windows(),
        t_tr=to_us(1),
        source=S,
        destination=F,
        attack=attack,
    )


def label_path(g: Twig, vertices, names: str = NAMES) -> list[str]:
    return [g.vertex_label(v, lambda n: names[n]) for v in vertices]


def wid_of_label(g: Twig, label: str) -> int:
    for w in g.split_windows:
        if g.window_label(w.wid) == label:
            return w.wid
    raise KeyError(label)


def vertex(g: Twig, node_name: str, window_label: str) -> TwigVertex:
    return TwigVertex(NAMES.index(node_name), wid_of_label(g, window_label))


def oracle_shortest(g: Twig, start: TwigVertex, to_node: int, now: int | None = None):
    """Best (total_weight, hops, key_sequence) over all simple paths, or None.

    Any vertex of the target node terminates a path; with ``now`` given,
    window-crossing arcs out of unusable windows are skipped, same-node arcs
    never are.  Exhaustive, so only safe on small graphs.
    """
    if start.node == to_node:
        return (0, 0, (start.key,))
    best = None

    def walk(v: TwigVertex, weight: int, keys, seen) -> None:
        nonlocal best
        if v.node == to_node:
            cand = (weight, len(keys) - 1, keys)
            if best is None or cand < best:
                best = cand
            return
        for v2, w, origin in g.arcs_from(v):
            if v2 in seen:
                continue
            if (
                now is not None
                and origin is EdgeOrigin.WITHIN_WINDOW
                and not g.usable(v.wid, now)
            ):
                continue
            walk(v2, weight + w, keys + (v2.key,), seen | {v2})

    walk(start, 0, (start.key,), {start})
    return best


def random_small_twig(rng: random.Random, max_vertices: int = 12) -> Twig:
    """A tiny graph for oracle comparisons (resamples until small enough)."""
    while True:
        n_nodes = rng.randint(2, 4)
        n_windows = rng.randint(2, 5)
        windows = []
        for wid in range(1, n_windows + 1):
            a, b = rng.sample(range(n_nodes), 2)
            start = rng.randint(0, 60)
            end = start + rng.randint(1, 25)
            windows.append(
                TimeWindow(wid, min(a, b), max(a, b), to_us(start), to_us(end))
            )
        g = build(tuple(windows), to_us(1))
        if len(g.vertices) <= max_vertices:
            return g

"""Overhead, detection quality, and runtime measurements.

The overhead model prices the metadata each detection mode attaches per hop
against the fixed message payload.  Global knowledge accumulates one record
per traversed hop, so a message that has travelled j hops carries j records;
the local mode keeps only the two most recent records, a constant 40 bits.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .detection import DetectionReport, detect_global, run_local_pipeline
from .scenario import AttackConfig, NodeId, Scenario, to_seconds
from .simulator import simulate
from .twig import build, embed_trace, shortest_path

MODES = ("global", "local", "hotd")


@dataclass(frozen=True)
class OverheadModel:
    message_bits: int = 1400
    node_id_bits: int = 7
    reception_time_bits: int = 13
    local_bits: int = 40   # two carried relay records, fixed
    hotd_bits: int = 105   # reference scheme's per-hop attachment

    @property
    def global_bits(self) -> int:
        return self.node_id_bits + self.reception_time_bits


def eor(model: OverheadModel, mode: str, hops: Union[int, Sequence[int]]) -> float:
    """Extra overhead ratio: attached metadata bits over payload bits.

    Cumulative modes (global, hotd) attach j records at hop j, so a message
    of H hops contributes H(H+1)/2 attachments; local attaches a constant.
    """
    counts = [hops] if isinstance(hops, int) else list(hops)
    if not counts:
        raise ValueError("at least one hop count is required")
    if any(h < 1 for h in counts):
        raise ValueError("hop counts must be at least 1")
    payload = sum(model.message_bits * h for h in counts)
    if mode == "global":
        attached = sum(model.global_bits * h * (h + 1) // 2 for h in counts)
    elif mode == "hotd":
        attached = sum(model.hotd_bits * h * (h + 1) // 2 for h in counts)
    elif mode == "local":
        attached = sum(model.local_bits * h for h in counts)
    else:
        raise ValueError(f"unknown mode: {mode!r}")
    return attached / payload


FlagSource = Union[DetectionReport, Iterable[DetectionReport], Iterable[NodeId]]


def _flag_set(source: FlagSource) -> frozenset[NodeId]:
    if isinstance(source, DetectionReport):
        return frozenset(source.flagged)
    items = list(source)
    if items and isinstance(items[0], DetectionReport):
        out: set[NodeId] = set()
        for r in items:
            out.update(r.flagged)
        return frozenset(out)
    return frozenset(items)  # already a collection of node ids


def score(source: FlagSource, truth: Union[AttackConfig, Iterable[NodeId]]) -> tuple[float, float]:
    """(precision, recall) of a flag set against the ground-truth attacker set."""
    flagged = _flag_set(source)
    truth_set = truth.attackers() if isinstance(truth, AttackConfig) else frozenset(truth)
    hits = len(flagged & truth_set)
    precision = 1.0 if not flagged else hits / len(flagged)
    recall = 1.0 if not truth_set else hits / len(truth_set)
    return precision, recall


def time_phases(s: Scenario, repeats: int = 10) -> dict[str, float]:
    """Median wall-clock seconds per pipeline phase over the given repeats."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    samples: dict[str, list[float]] = {}

    def measure(name: str, fn):
        t0 = time.perf_counter()
        result = fn()
        samples.setdefault(name, []).append(time.perf_counter() - t0)
        return result

    out: dict[str, float] = {}
    for _ in range(repeats):
        g = measure("build", lambda: build(s.windows, s.t_tr))
        trace = measure("simulate", lambda: simulate(s, g))
        if trace.delivered:
            measure("detect_global", lambda: detect_global(g, trace))
            measure("detect_local", lambda: run_local_pipeline(s, g, trace))
    return {name: statistics.median(vals) for name, vals in samples.items()}


@dataclass(frozen=True)
class MetricsReport:
    """One scenario's full evaluation; times in seconds, weights in seconds."""

    delivered: bool
    hop_count: int
    path: tuple[str, ...]
    fp_weight: float | None
    sp_weight: float | None
    physical_arrival: float | None
    eor: dict[str, float] = field(default_factory=dict)
    flagged: dict[str, list[str]] = field(default_factory=dict)
    precision: dict[str, float] = field(default_factory=dict)
    recall: dict[str, float] = field(default_factory=dict)
    runtime: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "delivered": self.delivered,
            "hop_count": self.hop_count,
            "path": list(self.path),
            "fp_weight": self.fp_weight,
            "sp_weight": self.sp_weight,
            "physical_arrival": self.physical_arrival,
            "eor": dict(self.eor),
            "flagged": {k: list(v) for k, v in self.flagged.items()},
            "precision": dict(self.precision),
            "recall": dict(self.recall),
            "runtime": dict(self.runtime),
        }


def evaluate_scenario(
    s: Scenario,
    model: OverheadModel = OverheadModel(),
    *,
    timing_repeats: int = 10,
) -> MetricsReport:
    """Run the whole pipeline once and fold the results into one report.

    Surfaces both the graph-weight view (fp/sp) and the physical arrival time,
    which can rank routes differently when hop counts differ.
    """
    g = build(s.windows, s.t_tr)
    trace = simulate(s, g)
    timings = time_phases(s, timing_repeats) if timing_repeats else {}
    if not trace.delivered:
        return MetricsReport(
            delivered=False,
            hop_count=trace.hop_count,
            path=tuple(s.label(n) for n in trace.path),
            fp_weight=None, sp_weight=None, physical_arrival=None,
            runtime=timings,
        )
    fp = embed_trace(g, trace)
    sp = shortest_path(g, fp.vertices[0], s.destination, now=trace.hops[0].reception_time)
    greport = detect_global(g, trace)
    lscan = run_local_pipeline(s, g, trace)
    gprec, grec = score(greport, s.attack)
    lprec, lrec = score(lscan.reports, s.attack)
    h = trace.hop_count
    return MetricsReport(
        delivered=True,
        hop_count=h,
        path=tuple(s.label(n) for n in trace.path),
        fp_weight=to_seconds(fp.total_weight),
        sp_weight=None if sp is None else to_seconds(sp.total_weight),
        physical_arrival=None if trace.physical_arrival is None
        else to_seconds(trace.physical_arrival),
        eor={mode: eor(model, mode, h) for mode in MODES},
        flagged={
            "global": [s.label(n) for n in greport.flagged],
            "local": [s.label(n) for n in lscan.merged_flagged()],
        },
        precision={"global": gprec, "local": lprec},
        recall={"global": grec, "local": lrec},
        runtime=timings,
    )

"""Command-line pipeline: generate, graph, simulate, detect, metrics, all.

Exit codes: 0 success, 1 usage error, 2 load/invariant/generation failure.
Every run is a pure function of its inputs and the seed; `all` writes the
same bytes the individual subcommands would produce with intermediate files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .detection import (
    InconsistentTrace,
    detect_global,
    local_scan_to_dict,
    report_to_dict,
    run_local_pipeline,
)
from .generate import GenerationError, GenerationParams, generate, preset_params
from .metrics import MODES, OverheadModel, eor, evaluate_scenario
from .scenario import Scenario, ScenarioError, dumps, load_scenario, scenario_to_dict
from .simulator import simulate, trace_to_dict
from .twig import EmbeddingError, build, graph_to_dict, to_dot


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario_path: str | None = None
    preset: str | None = None
    seed: int = 0
    mode: str = "both"
    out: str | None = None
    format: str = "json"
    hops: tuple[int, ...] | None = None
    runs: int = 1
    eor_table: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage problems, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="tdasim",
        description="Simulate store-carry-forward delay attacks and run the detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser, *, scenario: bool = False, preset: bool = False,
               mode: bool = False, fmt: Sequence[str] = ()) -> None:
        if scenario:
            p.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
        if preset:
            p.add_argument("--preset", metavar="NAME",
                           help="generation preset (table2-row1 .. table2-row5)")
            p.add_argument("--seed", type=int, default=0, help="generation seed")
        if mode:
            p.add_argument("--mode", choices=("global", "local", "both"), default="both")
        if fmt:
            p.add_argument("--format", choices=tuple(fmt), default="json")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")

    common(sub.add_parser("generate", help="produce a random scenario file"),
           preset=True)
    common(sub.add_parser("graph", help="build the time-window graph"),
           scenario=True, fmt=("json", "dot"))
    common(sub.add_parser("simulate", help="replay the tracked message"),
           scenario=True)
    common(sub.add_parser("detect", help="simulate, then run the detectors"),
           scenario=True, mode=True)
    p_metrics = sub.add_parser("metrics", help="evaluate a scenario or tabulate overhead")
    p_metrics.add_argument("--eor", action="store_true", dest="eor_table",
                           help="emit the overhead-ratio table for --hops")
    p_metrics.add_argument("--hops", metavar="LIST",
                           help="comma-separated hop counts, e.g. 4,5,7,10,15")
    p_metrics.add_argument("--runs", type=int, default=1, metavar="K",
                           help="evaluate K consecutive seeds of --preset")
    common(p_metrics, scenario=True, preset=True, fmt=("json", "csv"))
    common(sub.add_parser("all", help="run the whole pipeline into a directory"),
           scenario=True, preset=True, mode=True)
    return parser


def _config(args: argparse.Namespace, parser: _Parser) -> RunConfig:
    hops: tuple[int, ...] | None = None
    raw = getattr(args, "hops", None)
    if raw is not None:
        try:
            hops = tuple(int(part) for part in raw.split(","))
        except ValueError:
            parser.error(f"--hops must be comma-separated integers, got {raw!r}")
        if not hops or any(h < 1 for h in hops):
            parser.error("--hops entries must be positive")
    return RunConfig(
        command=args.command,
        scenario_path=getattr(args, "scenario", None),
        preset=getattr(args, "preset", None),
        seed=getattr(args, "seed", 0),
        mode=getattr(args, "mode", "both"),
        out=args.out,
        format=getattr(args, "format", "json"),
        hops=hops,
        runs=getattr(args, "runs", 1),
        eor_table=getattr(args, "eor_table", False),
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _obtain_scenario(cfg: RunConfig, parser: _Parser, stage: str) -> Scenario:
    if cfg.scenario_path and cfg.preset:
        parser.error(f"{stage}: give either --scenario or --preset, not both")
    if cfg.scenario_path:
        return load_scenario(cfg.scenario_path)
    if cfg.preset:
        return generate(preset_params(cfg.preset, cfg.seed))
    parser.error(f"{stage}: --scenario or --preset is required")
    raise AssertionError("unreachable")


def _require_scenario(cfg: RunConfig, parser: _Parser, stage: str) -> Scenario:
    if not cfg.scenario_path:
        parser.error(f"{stage}: --scenario is required")
    return load_scenario(cfg.scenario_path)


def _detect_payload(s: Scenario, mode: str) -> dict:
    g = build(s.windows, s.t_tr)
    trace = simulate(s, g)
    if not trace.delivered:
        raise InconsistentTrace(
            "detect: the message was dropped before the destination; nothing to judge"
        )
    payload: dict = {}
    if mode in ("global", "both"):
        payload["global"] = report_to_dict(detect_global(g, trace), s.label)
    if mode in ("local", "both"):
        payload["local"] = local_scan_to_dict(run_local_pipeline(s, g, trace), s.label)
    return payload[mode] if mode != "both" else payload


def _cmd_generate(cfg: RunConfig, parser: _Parser) -> None:
    if not cfg.preset:
        parser.error("generate: --preset is required")
    s = generate(preset_params(cfg.preset, cfg.seed))
    _emit(dumps(scenario_to_dict(s)), cfg.out)


def _cmd_graph(cfg: RunConfig, parser: _Parser) -> None:
    s = _require_scenario(cfg, parser, "graph")
    g = build(s.windows, s.t_tr)
    text = to_dot(g, s.label) if cfg.format == "dot" else dumps(graph_to_dict(g))
    _emit(text, cfg.out)


def _cmd_simulate(cfg: RunConfig, parser: _Parser) -> None:
    s = _require_scenario(cfg, parser, "simulate")
    trace = simulate(s, build(s.windows, s.t_tr))
    _emit(dumps(trace_to_dict(trace)), cfg.out)


def _cmd_detect(cfg: RunConfig, parser: _Parser) -> None:
    s = _require_scenario(cfg, parser, "detect")
    _emit(dumps(_detect_payload(s, cfg.mode)), cfg.out)


def _eor_text(hops: tuple[int, ...], fmt: str) -> str:
    model = OverheadModel()
    table = {mode: [eor(model, mode, h) for h in hops] for mode in MODES}
    if fmt == "csv":
        lines = ["hops,global,local,hotd"]
        for i, h in enumerate(hops):
            lines.append(f"{h},{table['global'][i]:.6f},{table['local'][i]:.6f},"
                         f"{table['hotd'][i]:.6f}")
        return "\n".join(lines) + "\n"
    return dumps({"hops": list(hops), "eor": table})


def _cmd_metrics(cfg: RunConfig, parser: _Parser) -> None:
    if cfg.eor_table:
        if not cfg.hops:
            parser.error("metrics: --eor requires --hops")
        _emit(_eor_text(cfg.hops, cfg.format), cfg.out)
        return
    if cfg.format == "csv":
        parser.error("metrics: --format csv is only available with --eor")
    if cfg.runs > 1:
        if not cfg.preset:
            parser.error("metrics: --runs needs --preset to generate scenarios")
        seeds = [cfg.seed + i for i in range(cfg.runs)]
        with ThreadPoolExecutor(max_workers=min(cfg.runs, 8)) as pool:
            reports = list(pool.map(
                lambda seed: evaluate_scenario(
                    generate(preset_params(cfg.preset, seed)), timing_repeats=0
                ).to_dict(),
                seeds,
            ))
        _emit(dumps({"runs": [
            {"seed": seed, **report} for seed, report in zip(seeds, reports)
        ]}), cfg.out)
        return
    s = _obtain_scenario(cfg, parser, "metrics")
    _emit(dumps(evaluate_scenario(s, timing_repeats=0).to_dict()), cfg.out)


def _cmd_all(cfg: RunConfig, parser: _Parser) -> None:
    if not cfg.out:
        parser.error("all: --out DIRECTORY is required")
    s = _obtain_scenario(cfg, parser, "all")
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "scenario.json").write_text(dumps(scenario_to_dict(s)), encoding="utf-8")
    g = build(s.windows, s.t_tr)
    (outdir / "graph.json").write_text(dumps(graph_to_dict(g)), encoding="utf-8")
    trace = simulate(s, g)
    (outdir / "trace.json").write_text(dumps(trace_to_dict(trace)), encoding="utf-8")
    (outdir / "detect.json").write_text(dumps(_detect_payload(s, cfg.mode)),
                                        encoding="utf-8")
    (outdir / "metrics.json").write_text(
        dumps(evaluate_scenario(s, timing_repeats=0).to_dict()), encoding="utf-8")


_COMMANDS = {
    "generate": _cmd_generate,
    "graph": _cmd_graph,
    "simulate": _cmd_simulate,
    "detect": _cmd_detect,
    "metrics": _cmd_metrics,
    "all": _cmd_all,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args, parser)
        _COMMANDS[cfg.command](cfg, parser)
        return 0
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    except (ScenarioError, GenerationError, InconsistentTrace, EmbeddingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

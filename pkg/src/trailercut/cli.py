"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 infeasible instance,
4 internal error.  Failures emit a single machine-parsable JSON line on
stderr.  Output is byte-identical across runs for fixed inputs, flags,
and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bundle import load_bundle, write_json
from .core import EngineParams, InfeasibleError
from .cutlist import emit_cutlist, read_cutlist
from .guard import GuardParams
from .metrics import ReportParams, TrailerPrediction, full_report
from .pipeline import run_alignment
from .synth import synth_instance
from .transport import sinkhorn_project

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _load_params(path: str | None, overrides: list[str] | None) -> EngineParams:
    data: dict = {}
    if path:
        p = Path(path)
        if not p.is_file():
            raise ValueError(f"params file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"params file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError("params file must hold a JSON object")
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            data[key.strip()] = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"--set value for {key!r} is not a JSON literal: {raw!r}") from exc
    return EngineParams.from_dict(data)


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        write_json(Path(out), payload)
    else:
        print(text)


def _print_notes(notes):
    for note in notes:
        print(f"note: {note}", file=sys.stderr)


def _cmd_align(args) -> int:
    params = _load_params(args.params, args.set)
    bundle = load_bundle(args.bundle)
    outcome = run_alignment(
        bundle, params,
        GuardParams(),
        guard=args.guard == "on",
        keyword_mode=args.keywords,
        top_m_mode=args.top_m_mode,
        selector="beam",
    )
    _print_notes(outcome.notes)
    cutlist = emit_cutlist(
        outcome.selection.alignment, bundle.bars, bundle.shots,
        path=args.out,
        params_echo={"engine": params.to_dict(), "guard": args.guard,
                     "keywords": args.keywords, "top_m_mode": args.top_m_mode,
                     "total_score": outcome.selection.total_score,
                     "scores_origin": outcome.scores_origin})
    if args.out:
        print(f"wrote cutlist: {args.out} segments={len(cutlist.segments)} "
              f"score={outcome.selection.total_score!r}")
    else:
        print(json.dumps(cutlist.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _prediction_from_path(path: str, gt_bundle) -> list[int]:
    p = Path(path)
    if p.is_dir():
        pred_bundle = load_bundle(p)
        if pred_bundle.ground_truth is None:
            raise ValueError(f"bundle {p} carries no alignment to evaluate")
        return pred_bundle.ground_truth.shot_sequence()
    if p.is_file():
        return read_cutlist(p).shot_sequence()
    raise ValueError(f"prediction path not found: {p}")


def _cmd_evaluate(args) -> int:
    gt_bundle = load_bundle(args.gt_bundle)
    if gt_bundle.ground_truth is None:
        raise ValueError("ground-truth bundle has no ground_truth alignment")
    pred_seq = _prediction_from_path(args.prediction, gt_bundle)
    gt_seq = gt_bundle.ground_truth.shot_sequence()
    feats = gt_bundle.shots.features
    I = gt_bundle.shots.count
    for s in pred_seq:
        if not 1 <= s <= I:
            raise ValueError(f"predicted shot index {s} outside [1, {I}]")
    pred = TrailerPrediction(shot_sequence=tuple(pred_seq),
                             features=feats[np.asarray(pred_seq) - 1])
    gt = TrailerPrediction(shot_sequence=tuple(gt_seq),
                           features=feats[np.asarray(gt_seq) - 1])
    report = full_report(pred, gt, ReportParams(top_k=args.top_k))
    _emit(report.to_dict(), args.report)
    if args.report:
        print(f"wrote report: {args.report}")
    return EXIT_OK


def _cmd_energy(args) -> int:
    bundle = load_bundle(args.bundle)
    _print_notes(bundle.notes)
    for j, value in enumerate(bundle.bars.energy, start=1):
        print(f"{j}\t{float(value)!r}")
    return EXIT_OK


def _cmd_sinkhorn(args) -> int:
    p = Path(args.matrix)
    if not p.is_file():
        raise ValueError(f"score-matrix file not found: {p}")
    try:
        rows = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"score-matrix file is not valid JSON: {exc}") from exc
    scores = np.asarray(rows, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("score-matrix file must hold a 2-D JSON array")
    target = sinkhorn_project(scores, args.tau, args.iters)
    payload = {
        "values": target.values.tolist(),
        "iterations_run": target.iterations_run,
        "row_residual": target.row_residual,
        "col_residual": target.col_residual,
    }
    _emit(payload, args.out)
    return EXIT_OK


def _cmd_synth(args) -> int:
    instance = synth_instance(seed=args.seed, bars=args.bars, shots=args.shots,
                              d_v=args.dv, d_a=args.da, planted=args.planted,
                              frames_per_shot=args.frames_per_shot)
    instance.save(args.out)
    print(f"wrote bundle: {args.out} bars={args.bars} shots={args.shots} "
          f"planted={str(args.planted).lower()}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    params = _load_params(args.params, args.set)
    bundle = load_bundle(args.bundle)
    outcome = run_alignment(bundle, params, GuardParams(),
                            guard=args.guard == "on", keyword_mode=args.keywords,
                            selector="exhaustive")
    _print_notes(outcome.notes)
    result = outcome.selection
    payload = {
        "segments": [list(s) for s in result.alignment.segments],
        "total_score": result.total_score,
        "per_segment": [list(t) for t in result.per_segment],
        "states_visited": result.beam_stats.get("states_expanded"),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trailercut",
        description="Elastic bar-to-shot alignment engine and trailer metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_param_flags(p):
        p.add_argument("--params", help="JSON file with engine parameter overrides")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a single engine parameter (JSON literal value)")

    p_align = sub.add_parser("align", help="run the full alignment pipeline on a bundle")
    p_align.add_argument("bundle")
    add_param_flags(p_align)
    p_align.add_argument("--out", help="write the cut list JSON here instead of stdout")
    p_align.add_argument("--guard", choices=("on", "off"), default="on")
    p_align.add_argument("--keywords", choices=("off", "require", "boost"), default="off")
    p_align.add_argument("--top-m-mode", choices=("rank_after_exclusion", "literal"),
                         default="rank_after_exclusion")
    p_align.set_defaults(func=_cmd_align)

    p_eval = sub.add_parser("evaluate", help="score a prediction against a ground-truth bundle")
    p_eval.add_argument("prediction", help="cut-list JSON file or bundle directory")
    p_eval.add_argument("gt_bundle", help="bundle directory with a ground_truth alignment")
    p_eval.add_argument("--report", help="write the metric report JSON here")
    p_eval.add_argument("--top-k", type=int, default=5)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_energy = sub.add_parser("energy", help="print per-bar energy")
    p_energy.add_argument("bundle")
    p_energy.set_defaults(func=_cmd_energy)

    p_sink = sub.add_parser("sinkhorn", help="project a score matrix toward balanced marginals")
    p_sink.add_argument("matrix", help="JSON file holding a 2-D array")
    p_sink.add_argument("--tau", type=float, required=True)
    p_sink.add_argument("--iters", type=int, required=True)
    p_sink.add_argument("--out", help="write the projection JSON here instead of stdout")
    p_sink.set_defaults(func=_cmd_sinkhorn)

    p_synth = sub.add_parser("synth", help="generate a synthetic bundle")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--bars", type=int, required=True)
    p_synth.add_argument("--shots", type=int, required=True)
    p_synth.add_argument("--dv", type=int, default=64)
    p_synth.add_argument("--da", type=int, default=None)
    p_synth.add_argument("--planted", action="store_true")
    p_synth.add_argument("--frames-per-shot", type=int, default=3)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_oracle = sub.add_parser("oracle", help="exhaustive selection on a size-capped bundle")
    p_oracle.add_argument("bundle")
    add_param_flags(p_oracle)
    p_oracle.add_argument("--guard", choices=("on", "off"), default="on")
    p_oracle.add_argument("--keywords", choices=("off", "require", "boost"), default="off")
    p_oracle.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        _report_error(EXIT_INFEASIBLE, exc)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        _report_error(EXIT_INVALID_INPUT, exc)
        return EXIT_INVALID_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        _report_error(EXIT_INTERNAL, exc)
        return EXIT_INTERNAL


def _report_error(code: int, exc: BaseException):
    line = json.dumps({"error": {"exit_code": code, "type": type(exc).__name__,
                                 "message": str(exc)}}, sort_keys=True)
    print(line, file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())

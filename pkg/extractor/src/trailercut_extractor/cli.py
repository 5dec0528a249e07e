"""Command-line interface for the extraction adapter."""

from __future__ import annotations

import argparse
import json
import sys

from .config import ExtractionConfig, ExtractionError
from .extract import extract
from .testmedia import make_test_clip


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trailercut-extract",
        description="Turn a movie/music pair into a trailercut feature bundle.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="run the extraction pipeline")
    p_extract.add_argument("--movie", required=True)
    p_extract.add_argument("--audio", required=True)
    p_extract.add_argument("--out", required=True)
    p_extract.add_argument("--keywords", default="",
                           help="comma-separated terms to embed into the bundle")
    p_extract.add_argument("--bar-mode", choices=("novelty", "uniform"), default="novelty")
    p_extract.add_argument("--bpm", type=float, default=120.0)
    p_extract.add_argument("--seed", type=int, default=7)
    p_extract.set_defaults(func=_cmd_extract)

    p_clip = sub.add_parser("make-test-clip", help="write a synthetic test movie and tone")
    p_clip.add_argument("--out", required=True)
    p_clip.add_argument("--seconds", type=float, default=12.0)
    p_clip.set_defaults(func=_cmd_make_clip)
    return parser


def _cmd_extract(args) -> int:
    keywords = tuple(k.strip() for k in args.keywords.split(",") if k.strip())
    config = ExtractionConfig(movie_path=args.movie, audio_path=args.audio,
                              output_path=args.out, keywords=keywords,
                              bar_mode=args.bar_mode, bpm=args.bpm,
                              projection_seed=args.seed)
    path = extract(config)
    manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    print(f"wrote bundle: {path} shots={manifest['movie']['shot_count']} "
          f"bars={manifest['music']['bar_count']}")
    return 0


def _cmd_make_clip(args) -> int:
    video, audio = make_test_clip(args.out, seconds=args.seconds)
    print(f"wrote test media: {video} {audio}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExtractionError as exc:
        print(json.dumps({"error": {"exit_code": 2, "message": str(exc)}}),
              file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": {"exit_code": 2, "message": str(exc)}}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

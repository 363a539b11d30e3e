"""Thin command: images plus a frame list in, one descriptor file out.

Exit codes match the engine's convention: 0 success, 1 data or job errors,
2 usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import AdapterError
from .extractors import available
from .jobs import ExtractionJob, extract, load_frames_file


def parse_augment(text: str) -> tuple[str, dict]:
    """"none", "poisson_noise", "downsample_upsample:4", "darken:1.8"."""
    kind, _, arg = text.partition(":")
    if kind == "none" or kind == "poisson_noise":
        if arg:
            raise argparse.ArgumentTypeError(f"{kind} takes no parameter")
        return kind, {}
    if kind == "downsample_upsample":
        try:
            return kind, {"factor": int(arg or "4")}
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bad factor {arg!r} for downsample_upsample"
            ) from None
    if kind == "darken":
        if not arg:
            raise argparse.ArgumentTypeError("darken needs a gamma, e.g. darken:1.8")
        try:
            return kind, {"gamma": float(arg)}
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad gamma {arg!r}") from None
    raise argparse.ArgumentTypeError(
        f"unknown augmentation {text!r} (none | poisson_noise | "
        "downsample_upsample[:factor] | darken:gamma)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hops-extract",
        description="Export image descriptors as a hops binary set",
    )
    parser.add_argument(
        "--model", required=True,
        help=f"extractor name (runnable here: {', '.join(available())})",
    )
    parser.add_argument("--images", required=True, help="image directory")
    parser.add_argument(
        "--frames", required=True,
        help="text file, one image filename per line (also the frame ids)",
    )
    parser.add_argument(
        "--augment", type=parse_augment, default=("none", {}),
        help="none | poisson_noise | downsample_upsample[:factor] | darken:gamma",
    )
    parser.add_argument("--out", required=True, help="output .hops path")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    kind, params = args.augment
    try:
        frames = load_frames_file(args.frames)
        job = ExtractionJob(
            model=args.model,
            image_dir=args.images,
            frames=frames,
            out_path=args.out,
            augmentation=kind,
            params=params,
            seed=args.seed,
        )
        written = extract(job)
    except (AdapterError, OSError) as exc:
        print(f"hops-extract: error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {written}: {len(frames)} rows ({args.model}, {kind})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

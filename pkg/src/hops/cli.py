"""Command-line interface.

Subcommands: eval, fuse, project, identify, synth, diff, info. Exit codes:
0 success, 1 runtime or data error, 2 usage error. Every run is deterministic
given identical inputs and --seed; report CSVs carry no timestamps. The
--threads flag (or the HOPS_THREADS environment variable) caps worker count
for distance computation; it never changes results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, HopsError, LeakageError, ValidationError
from .evaluation import (
    EvalConfig,
    EvalReport,
    dimensionality_sweep,
    error_histogram,
    fusion_progression,
    recall_at_n,
)
from .fusion import (
    DatasetSignature,
    bundle_aligned,
    bundle_dataset,
    bundle_groups,
    signature_to_descriptor_set,
    to_descriptor_set,
)
from .matching import (
    aggregate_distances,
    cosine_distance_matrix,
    identify_dataset,
    place_ranking,
    pooled_match,
    rank,
)
from .projection import ProjectionSpec, project
from .store import (
    INDEX_ALIGNED,
    PLACE_GROUPED,
    DatasetManifest,
    load_condition_sets,
    load_manifest,
    load_set,
    save_manifest,
    save_set,
)
from .synth import SynthSpec, generate
from .evaluation import _write_csv  # shared CSV writer, same byte discipline

THREADS_ENV = "HOPS_THREADS"

STRATEGY_HELP = "single:<condition> | hops | pool | dmat:<mean|min|max|median>"


def _parse_strategy(text: str) -> tuple[str, str, str | None]:
    """Returns (raw, kind, parameter); raises a usage error on junk."""
    if text == "hops" or text == "pool":
        return text, text, None
    if text.startswith("single:") and len(text) > len("single:"):
        return text, "single", text.split(":", 1)[1]
    if text.startswith("dmat:"):
        mode = text.split(":", 1)[1]
        if mode in ("mean", "min", "max", "median"):
            return text, "dmat", mode
    raise argparse.ArgumentTypeError(
        f"unknown strategy {text!r} (expected {STRATEGY_HELP})"
    )


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part != "")
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _parse_signature(text: str) -> tuple[str, str]:
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(
            f"expected NAME=PATH, got {text!r}"
        )
    return name, path


def _resolve_threads(flag_value: int | None) -> int:
    if flag_value is not None:
        threads = flag_value
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(
                f"{THREADS_ENV} must be an integer, got "
                f"{os.environ[THREADS_ENV]!r}"
            ) from None
    else:
        threads = 1
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    return threads


def _percent(value: float) -> str:
    return f"{100.0 * value:.1f}%"


# --- eval --------------------------------------------------------------------


def _grouped_truth(
    manifest: DatasetManifest, queries, place_ids: tuple[str, ...]
) -> dict[int, int]:
    place_index = {p: i for i, p in enumerate(place_ids)}
    frame_place: dict[str, str] = {}
    for place, frames in manifest.place_groups.items():
        for frame in frames:
            frame_place[frame] = place
    truth = {}
    for qi, frame in enumerate(queries.frame_ids):
        if frame not in frame_place:
            raise ConfigError(
                f"query frame {frame!r} is not in any place group"
            )
        truth[qi] = place_index[frame_place[frame]]
    return truth


def _cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    threads = _resolve_threads(args.threads)
    raw_strategy, kind, param = args.strategy
    sets = load_condition_sets(manifest)
    by_condition = {s.condition_id: s for s in sets}
    if args.query not in by_condition:
        raise ConfigError(f"query condition {args.query!r} not in manifest")
    queries = by_condition[args.query]
    ref_order = [c for c in manifest.condition_ids() if c != args.query]
    refs = [by_condition[c] for c in ref_order]
    if not refs:
        raise ConfigError("manifest holds no reference sets besides the query")

    tolerance = (
        manifest.tolerance_frames if args.tolerance is None else args.tolerance
    )
    config = EvalConfig(tolerance, args.recall_ns)
    project_seed = args.project_seed if args.project_seed is not None else args.seed
    spec = None
    if args.project_dim is not None:
        spec = ProjectionSpec(queries.dim, args.project_dim, project_seed)

    progression = None
    sweep = None
    if manifest.correspondence == PLACE_GROUPED:
        if kind != "hops":
            raise ConfigError(
                "place-grouped manifests support only the hops strategy"
            )
        if len(refs) != 1:
            raise ConfigError(
                "place-grouped manifests need exactly one reference set"
            )
        fused = bundle_groups(refs[0], manifest.place_groups)
        config = EvalConfig(
            tolerance,
            args.recall_ns,
            _grouped_truth(manifest, queries, fused.place_ids),
        )
        matched_queries, matched_refs = queries, fused
        if spec is not None:
            matched_queries = project(spec, queries)
            matched_refs = project(spec, fused)
        ranking = rank(
            cosine_distance_matrix(matched_queries, matched_refs, threads)
        )
        k_used = 1
    else:
        matched_queries = project(spec, queries) if spec is not None else queries
        if kind == "single":
            if param == args.query:
                raise LeakageError(
                    f"strategy {raw_strategy!r} matches the query against itself"
                )
            if param not in by_condition:
                raise ConfigError(f"condition {param!r} not in manifest")
            target = by_condition[param]
            if spec is not None:
                target = project(spec, target)
            ranking = rank(
                cosine_distance_matrix(matched_queries, target, threads)
            )
            k_used = 1
        elif kind == "hops":
            fused = bundle_aligned(refs)
            if spec is not None:
                fused = project(spec, fused)
            ranking = rank(
                cosine_distance_matrix(matched_queries, fused, threads)
            )
            k_used = fused.k
        elif kind == "pool":
            pool_refs = (
                [project(spec, s) for s in refs] if spec is not None else refs
            )
            distances, mapping = pooled_match(
                matched_queries, pool_refs, threads
            )
            ranking = place_ranking(distances, mapping)
            k_used = len(refs)
        else:  # dmat
            dmat_refs = (
                [project(spec, s) for s in refs] if spec is not None else refs
            )
            matrices = [
                cosine_distance_matrix(matched_queries, s, threads)
                for s in dmat_refs
            ]
            ranking = rank(aggregate_distances(matrices, param))
            k_used = len(refs)

        if args.progression:
            progression = fusion_progression(queries, refs, config, threads)
        if args.sweep_dims is not None:
            if kind == "single":
                sweep_refs = by_condition[param]
            elif kind == "hops":
                sweep_refs = bundle_aligned(refs)
            else:
                raise ConfigError(
                    "--sweep-dims supports the single and hops strategies"
                )
            sweep = dimensionality_sweep(
                queries, sweep_refs, args.sweep_dims, project_seed, config,
                threads=threads,
            )

    recall = recall_at_n(ranking, config)
    histogram = error_histogram(ranking, config)
    report = EvalReport(
        dataset_id=manifest.dataset_id,
        query_condition=args.query,
        strategy=raw_strategy,
        query_count=queries.count,
        recall=recall,
        errors=tuple(int(e) for e in histogram.errors),
        histogram=histogram,
        progression=progression,
        sweep=sweep,
        metadata={
            "strategies": [raw_strategy],
            "k": k_used,
            "projection": None
            if spec is None
            else {
                "input_dim": spec.input_dim,
                "output_dim": spec.output_dim,
                "seed": spec.seed,
            },
            "seed": args.seed,
            "threads": threads,
            "tolerance_frames": tolerance,
            "recall_ns": list(config.recall_ns),
            "created_at": datetime.now(timezone.utc).isoformat(),
            "version": __version__,
            "config": {
                "manifest": str(args.manifest),
                "query": args.query,
                "strategy": raw_strategy,
                "out": str(args.out),
                "tolerance": tolerance,
                "recall_ns": list(config.recall_ns),
                "project_dim": args.project_dim,
                "project_seed": project_seed,
                "seed": args.seed,
                "threads": threads,
                "progression": bool(args.progression),
                "sweep_dims": list(args.sweep_dims)
                if args.sweep_dims
                else None,
            },
        },
    )
    written = report.write_files(args.out)
    print(
        f"{raw_strategy} on {manifest.dataset_id}/{args.query} "
        f"(tolerance {tolerance}, K={k_used}):"
    )
    for n in sorted(recall):
        print(f"  recall@{n} = {_percent(recall[n])}")
    print(f"report: {written[0]}")
    return 0


# --- fuse / project / identify / synth ---------------------------------------


def _cmd_fuse(args) -> int:
    manifest = load_manifest(args.manifest)
    sets = load_condition_sets(manifest)
    by_condition = {s.condition_id: s for s in sets}
    chosen = list(args.conditions or manifest.condition_ids())
    for condition in args.exclude:
        if condition in chosen:
            chosen.remove(condition)
    missing = [c for c in chosen if c not in by_condition]
    if missing:
        raise ConfigError(f"condition {missing[0]!r} not in manifest")
    if not chosen:
        raise ConfigError("no conditions left to fuse")
    picked = [by_condition[c] for c in chosen]

    if args.signature:
        signature = bundle_dataset(picked)
        out_set = signature_to_descriptor_set(signature)
        label = f"signature over {signature.source_set_count} sets"
    elif args.groups:
        if manifest.correspondence != PLACE_GROUPED:
            raise ConfigError("--groups needs a place_grouped manifest")
        if len(picked) != 1:
            raise ConfigError("--groups fuses exactly one condition")
        fused = bundle_groups(picked[0], manifest.place_groups)
        out_set = to_descriptor_set(fused)
        label = fused.condition_id
    else:
        fused = bundle_aligned(picked)
        out_set = to_descriptor_set(fused)
        label = fused.condition_id
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_set(out_set, args.out)
    print(f"wrote {args.out}: {out_set.count}x{out_set.dim} ({label})")
    return 0


def _cmd_project(args) -> int:
    dset = load_set(args.input)
    seed = args.project_seed if args.project_seed is not None else args.seed
    spec = ProjectionSpec(
        dset.dim, args.project_dim, seed, allow_expand=args.allow_expand
    )
    projected = project(spec, dset)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_set(projected, args.out)
    print(
        f"wrote {args.out}: {projected.count}x{projected.dim} "
        f"(seed {seed}, from dim {dset.dim})"
    )
    return 0


def _cmd_identify(args) -> int:
    queries = load_set(args.query)
    signatures = []
    for name, path in args.signature:
        sig_set = load_set(path, dataset_id=name)
        if sig_set.count != 1:
            raise ValidationError(
                f"signature file {path} has {sig_set.count} rows, expected 1"
            )
        signatures.append(
            DatasetSignature(
                dataset_id=name,
                vector=sig_set.data[0].astype(np.float64),
                source_set_count=0,
                source_vector_count=0,
            )
        )
    labels = [identify_dataset(row, signatures) for row in queries.data]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    _write_csv(
        Path(args.out),
        ["query_index", "frame_id", "dataset_id"],
        [
            [i, frame, label]
            for i, (frame, label) in enumerate(zip(queries.frame_ids, labels))
        ],
    )
    tally: dict[str, int] = {}
    for label in labels:
        tally[label] = tally.get(label, 0) + 1
    for name in sorted(tally):
        print(f"{name}: {tally[name]} / {len(labels)}")
    print(f"labels: {args.out}")
    return 0


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        dim=args.dim,
        places=args.places,
        conditions=args.refs + 1,
        latent_noise_sigma=args.sigma,
        structured_bias=args.beta,
        seed=args.seed,
    )
    sets = generate(spec, dataset_id=args.dataset_id)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for dset in sets:
        filename = f"{dset.condition_id}.hops"
        save_set(dset, out_dir / filename)
        entries.append((dset.condition_id, filename))
        print(f"wrote {out_dir / filename}")
    manifest = DatasetManifest(
        dataset_id=args.dataset_id,
        sets=tuple(entries),
        tolerance_frames=args.tolerance,
        correspondence=INDEX_ALIGNED,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    print(f"wrote {out_dir / 'manifest.json'}")
    return 0


# --- diff / info --------------------------------------------------------------


def _cmd_diff(args) -> int:
    left = EvalReport.load_json(args.report_a)
    right = EvalReport.load_json(args.report_b)

    def _describe(doc, path):
        return (
            f"{doc.get('strategy', '?')} on {doc.get('dataset_id', '?')}/"
            f"{doc.get('query_condition', '?')} ({path})"
        )

    print(f"A: {_describe(left, args.report_a)}")
    print(f"B: {_describe(right, args.report_b)}")
    ns = sorted(
        set(left.get("recall", {})) & set(right.get("recall", {})), key=int
    )
    if not ns:
        raise ConfigError("reports share no recall@N entries")
    for n in ns:
        a, b = left["recall"][n], right["recall"][n]
        delta = 100.0 * (a - b)
        print(
            f"recall@{n}: {_percent(a)} vs {_percent(b)} (A-B {delta:+.1f})"
        )
    return 0


def _cmd_info(args) -> int:
    path = Path(args.path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        if "correspondence" in doc:
            print(f"manifest for dataset {doc['dataset_id']!r}")
            print(f"correspondence: {doc['correspondence']}")
            print(f"tolerance_frames: {doc['tolerance_frames']}")
            for entry in doc["sets"]:
                print(f"  {entry['condition_id']}: {entry['path']}")
        elif "recall" in doc:
            print(
                f"report: {doc.get('strategy', '?')} on "
                f"{doc.get('dataset_id', '?')}/{doc.get('query_condition', '?')}"
            )
            for n in sorted(doc["recall"], key=int):
                print(f"  recall@{n} = {_percent(doc['recall'][n])}")
        else:
            raise ValidationError(f"{path} is neither a manifest nor a report")
        return 0
    dset = load_set(path)
    print(f"{path}: {dset.count} rows x {dset.dim} dims")
    preview = ", ".join(dset.frame_ids[:5])
    suffix = ", ..." if dset.count > 5 else ""
    print(f"frame ids: {preview}{suffix}")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hops",
        description="Descriptor bundling and retrieval engine",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="run seed")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"worker cap (default ${THREADS_ENV} or 1)",
        )

    p = sub.add_parser("eval", help="evaluate a retrieval strategy")
    p.add_argument("--manifest", required=True)
    p.add_argument("--query", required=True, help="query condition_id")
    p.add_argument(
        "--strategy", required=True, type=_parse_strategy, help=STRATEGY_HELP
    )
    p.add_argument("--out", default="hops-report", help="output directory")
    p.add_argument(
        "--recall-ns", type=_parse_int_list, default=(1, 5, 10),
        help="comma-separated N values",
    )
    p.add_argument(
        "--tolerance", type=int, default=None,
        help="frame tolerance (default: manifest value)",
    )
    p.add_argument("--project-dim", type=int, default=None)
    p.add_argument("--project-seed", type=int, default=None)
    p.add_argument(
        "--progression", action="store_true",
        help="also emit recall@1 for K = 1..all fused sets",
    )
    p.add_argument(
        "--sweep-dims", type=_parse_int_list, default=None,
        help="also emit recall after projection to each listed dim",
    )
    common(p)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("fuse", help="bundle sets into one file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--conditions", type=lambda t: tuple(t.split(",")), default=None,
        help="comma-separated condition ids (default: all)",
    )
    p.add_argument(
        "--exclude", action="append", default=[], metavar="CONDITION",
        help="drop a condition (repeatable)",
    )
    p.add_argument(
        "--groups", action="store_true",
        help="fuse one set by the manifest's place groups",
    )
    p.add_argument(
        "--signature", action="store_true",
        help="bundle every row into a 1-row dataset signature",
    )
    common(p)
    p.set_defaults(handler=_cmd_fuse)

    p = sub.add_parser("project", help="random-project a descriptor file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--project-dim", required=True, type=int)
    p.add_argument("--project-seed", type=int, default=None)
    p.add_argument("--allow-expand", action="store_true")
    common(p)
    p.set_defaults(handler=_cmd_project)

    p = sub.add_parser("identify", help="label queries by dataset signature")
    p.add_argument("--query", required=True)
    p.add_argument(
        "--signature", required=True, action="append", type=_parse_signature,
        metavar="NAME=PATH",
    )
    p.add_argument("--out", required=True, help="labels CSV path")
    common(p)
    p.set_defaults(handler=_cmd_identify)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dim", type=int, default=SynthSpec().dim)
    p.add_argument("--places", type=int, default=SynthSpec().places)
    p.add_argument(
        "--refs", type=int, default=SynthSpec().conditions - 1,
        help="number of reference sets (a query set is always added)",
    )
    p.add_argument("--sigma", type=float, default=SynthSpec().latent_noise_sigma)
    p.add_argument("--beta", type=float, default=SynthSpec().structured_bias)
    p.add_argument("--tolerance", type=int, default=0)
    p.add_argument("--dataset-id", default="synth")
    common(p)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("diff", help="compare two eval reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.set_defaults(handler=_cmd_diff)

    p = sub.add_parser("info", help="describe a descriptor file or manifest")
    p.add_argument("path")
    p.set_defaults(handler=_cmd_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except HopsError as exc:
        print(f"hops: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hops: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: validate, score, heatmap, synth.

Exit codes are a stable contract: 0 on success, 1 for data-level failures
(invalid dataset, nothing scoreable, infeasible sample), 2 for usage and
configuration errors (including a missing or unreadable manifest).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import heatmap as heatmap_mod
from . import scoring, synthgen, tensorstore, wordmap
from .masalign import InfeasiblePathError, mas, path_distance
from .simkernel import layer_similarities
from .tensorstore import ManifestError
from .wordmap import PairingError, ReconstructionError

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _parse_layers(text: str) -> tuple[int, ...]:
    try:
        layers = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad layer list {text!r}")
    if not layers:
        raise argparse.ArgumentTypeError("layer list is empty")
    return layers


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alas",
        description="Layer-wise cross-modal alignment scores for speech-text LLM latents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset's structural invariants")
    p.add_argument("root", type=Path)
    p.add_argument("--json", action="store_true", help="machine-readable findings on stdout")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="score every sample and write a report")
    p.add_argument("root", type=Path)
    p.add_argument("--granularity", choices=("word", "token"), default="word")
    p.add_argument("--threshold", type=float, default=scoring.DEFAULT_THRESHOLD)
    p.add_argument("--zero-policy", choices=("error", "zero"), default="error")
    p.add_argument("--pooling", choices=("mean", "last"), default="mean")
    p.add_argument("--layers", type=_parse_layers, default=None,
                   help="comma-separated layer indices, e.g. 0,5,10,32")
    p.add_argument("--normalized", action="store_true",
                   help="divide scores by (rows - 1) for cross-dataset comparability")
    p.add_argument("--weighted", action="store_true",
                   help="weight the per-layer mean by audio length")
    p.add_argument("-o", "--output-dir", type=Path, required=True)
    p.add_argument("--json", action="store_true", help="print the report JSON on stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("heatmap", help="render similarity heatmaps for one sample")
    p.add_argument("root", type=Path)
    p.add_argument("--sample", required=True)
    p.add_argument("--layers", type=_parse_layers, default=None)
    p.add_argument("--granularity", choices=("word", "token"), default="word")
    p.add_argument("--zero-policy", choices=("error", "zero"), default="error")
    p.add_argument("--pooling", choices=("mean", "last"), default="mean")
    p.add_argument("-o", "--output-dir", type=Path, required=True)
    p.add_argument("--json", action="store_true", help="list written files on stdout")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("synth", help="generate a synthetic planted-alignment dataset")
    p.add_argument("--config", type=Path, default=None, help="JSON file of generator settings")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("-o", "--output-dir", type=Path, required=True)
    p.add_argument("--json", action="store_true", help="print dataset facts on stdout")
    p.set_defaults(func=cmd_synth)

    return parser


def cmd_validate(args) -> int:
    report = tensorstore.validate_dataset(args.root)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    for f in report.findings:
        where = f.sample_id or "<manifest>"
        print(f"{where}: {f.code}: {f.message}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_DATA


def _run_config(args) -> scoring.RunConfig:
    try:
        return scoring.RunConfig(
            dataset_root=str(args.root),
            granularity=args.granularity,
            threshold=getattr(args, "threshold", scoring.DEFAULT_THRESHOLD),
            zero_policy=args.zero_policy,
            pooling=args.pooling,
            normalize_alas=getattr(args, "normalized", False),
            length_weighted=getattr(args, "weighted", False),
            layer_selection=args.layers,
            output_dir=str(args.output_dir),
        )
    except ValueError as exc:
        raise UsageFailure(str(exc)) from exc


class UsageFailure(Exception):
    pass


class DataFailure(Exception):
    pass


def cmd_score(args) -> int:
    config = _run_config(args)
    report = tensorstore.validate_dataset(args.root)
    if not report.ok:
        for f in report.findings:
            where = f.sample_id or "<manifest>"
            print(f"{where}: {f.code}: {f.message}", file=sys.stderr)
        raise DataFailure("dataset does not validate; fix findings or rerun `alas validate`")

    manifest = tensorstore.load_manifest(args.root)
    try:
        scores = scoring.score_dataset(config, manifest)
    except ValueError as exc:
        raise UsageFailure(str(exc)) from exc
    try:
        layer_reports = scoring.aggregate(scores, length_weighted=config.length_weighted)
    except ValueError as exc:
        raise DataFailure(f"no scoreable samples: {exc}") from exc

    doc = scoring.build_report(config, scores, layer_reports)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(scoring.report_json(doc), encoding="utf-8")

    if args.json:
        sys.stdout.write(scoring.report_json(doc))
    else:
        print(f"{'layer':>5}  {'mean_alas':>10}  {'std_alas':>10}  {'n':>4}")
        for r in layer_reports:
            print(f"{r.layer:>5}  {r.mean_alas:>10.6f}  {r.std_alas:>10.6f}  {r.n_samples:>4}")
        print(f"report: {report_path}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    config = _run_config(args)
    manifest = tensorstore.load_manifest(args.root)
    by_id = {e.id: e for e in manifest.samples}
    if args.sample not in by_id:
        raise UsageFailure(f"unknown sample id {args.sample!r}")
    entry = by_id[args.sample]
    layers = list(args.layers) if args.layers else list(range(manifest.num_layers + 1))
    for layer in layers:
        if not 0 <= layer <= manifest.num_layers:
            raise UsageFailure(f"layer {layer} out of range 0..{manifest.num_layers}")

    root = Path(args.root)
    try:
        token_map = tensorstore.token_map_from_file(root / entry.tokens_path)
    except ReconstructionError as exc:
        raise DataFailure(f"token reconstruction failed: {exc}") from exc
    audio = tensorstore.read_tensor(root / entry.audio_tensor_path)
    text = tensorstore.read_tensor(root / entry.text_tensor_path)
    rows = token_map.num_words if config.granularity == "word" else token_map.num_tokens
    if audio.seq_len < rows:
        raise DataFailure(
            f"sample {entry.id!r} is infeasible: {rows} text rows over "
            f"{audio.seq_len} audio frames"
        )
    timestamps = tensorstore.load_word_timestamps(root / entry.words_path)
    try:
        reference = wordmap.timestamps_to_reference(
            timestamps, audio.seq_len, manifest.frame_duration_ms,
            token_map, config.granularity,
        )
    except PairingError as exc:
        raise DataFailure(f"word pairing failed: {exc}") from exc

    labels = list(token_map.words if config.granularity == "word" else token_map.tokens)
    matrices = layer_similarities(
        text, audio, token_map,
        granularity=config.granularity,
        zero_policy=config.zero_policy,
        pooling=config.pooling,
        layers=layers,
    )
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    paths_doc = {"sample_id": entry.id, "granularity": config.granularity, "layers": {}}
    for m in matrices:
        path = mas(m)
        csv_path = out_dir / f"{entry.id}_layer{m.layer}.csv"
        svg_path = out_dir / f"{entry.id}_layer{m.layer}.svg"
        csv_path.write_text(heatmap_mod.similarity_csv(m, labels), encoding="utf-8")
        svg_path.write_text(
            heatmap_mod.render_svg(
                m, labels, reference.indices, path.indices,
                title=f"{entry.id} layer {m.layer}",
            ),
            encoding="utf-8",
        )
        written.extend([str(csv_path), str(svg_path)])
        paths_doc["layers"][str(m.layer)] = {
            "mas": [int(v) for v in path.indices],
            "score": round(path.score, 6),
            "alas": round(path_distance(path, reference), 6),
            "reference": [int(v) for v in reference.indices],
        }
    paths_path = out_dir / f"{entry.id}_paths.json"
    paths_path.write_text(json.dumps(paths_doc, indent=2) + "\n", encoding="utf-8")
    written.append(str(paths_path))

    if args.json:
        print(json.dumps({"written": written}, indent=2))
    else:
        for w in written:
            print(w)
    return EXIT_OK


def cmd_synth(args) -> int:
    settings = {}
    if args.config is not None:
        try:
            settings = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageFailure(f"cannot read synth config: {exc}") from exc
    if args.seed is not None:
        settings["seed"] = args.seed
    try:
        config = synthgen.SynthConfig.from_dict(settings)
    except (TypeError, ValueError) as exc:
        raise UsageFailure(f"bad synth config: {exc}") from exc
    root = synthgen.generate(config, args.output_dir)
    if args.json:
        print(json.dumps({"root": str(root), "num_samples": config.num_samples,
                          "seed": config.seed}, indent=2))
    else:
        print(str(root))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageFailure as exc:
        print(f"alas: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ManifestError as exc:
        print(f"alas: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFailure as exc:
        print(f"alas: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InfeasiblePathError as exc:
        print(f"alas: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command line for export runs: ``alas-extract --config job.json``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .extract import ExtractionError, extract_dataset, load_adapter, load_job


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="alas-extract",
        description="Export layer-wise speech-LLM latents as a scoreable dataset.",
    )
    parser.add_argument("--config", required=True, help="job config JSON")
    parser.add_argument("--resume", action="store_true",
                        help="keep complete samples, extract only missing ones")
    parser.add_argument("--no-validate", action="store_true",
                        help="skip the final `alas validate` pass")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        job = load_job(args.config)
        if args.resume:
            job = dataclasses.replace(job, resume=True)
        if args.no_validate:
            job = dataclasses.replace(job, validate=False)
        adapter = load_adapter(job.model)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"alas-extract: config error: {exc}", file=sys.stderr)
        return 2

    try:
        stats = extract_dataset(adapter, job)
    except ExtractionError as exc:
        print(f"alas-extract: {exc}", file=sys.stderr)
        return 1
    print(job.output_root)
    print(f"extracted={len(stats['extracted'])} reused={len(stats['reused'])} "
          f"skipped={len(stats['skipped'])}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

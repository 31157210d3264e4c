"""Command-line entry point mirroring ExtractorConfig field for field."""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import POOLINGS, ExtractorConfig, ExtractorError, \
    extract_embeddings


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="covexplain-extract",
        description="Extract transformer features from a JSONL corpus "
                    "into a CVXE embedding file.")
    ap.add_argument("--checkpoint", required=True,
                    help="pretrained model name or local path")
    ap.add_argument("--corpus", required=True, help="JSONL corpus path")
    ap.add_argument("--field", choices=["text", "description"],
                    default="text")
    ap.add_argument("--pooling", choices=list(POOLINGS), default="mean")
    ap.add_argument("--layers", type=int, default=4,
                    help="how many of the last hidden layers to pool")
    ap.add_argument("--out", required=True, help="output CVXE path")
    ap.add_argument("--batch-size", type=int, default=16)
    ap.add_argument("--max-seq-len", type=int, default=128)
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0
    try:
        config = ExtractorConfig(
            checkpoint=args.checkpoint, corpus=args.corpus, field=args.field,
            pooling=args.pooling, layers=args.layers, out=args.out,
            batch_size=args.batch_size, max_seq_len=args.max_seq_len)
        path = extract_embeddings(config)
    except ExtractorError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

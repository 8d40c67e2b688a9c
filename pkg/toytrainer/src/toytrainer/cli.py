"""Command line for the trainer: ``train`` and ``predict`` subcommands.

JSON summary on stdout; exit 0 on success, 1 on usage errors, 2 on data
errors (missing or malformed files, incompatible artifacts).
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ToyError
from .predict import predict
from .train import train


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse contract
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="toytrainer", description=__doc__)
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser, metavar="COMMAND"
    )

    p = sub.add_parser("train", help="train on an encoded dataset prefix")
    p.add_argument("--data", required=True, help="encoded dataset prefix")
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--ff", type=int, default=256)
    p.set_defaults(run=_cmd_train)

    p = sub.add_parser("predict", help="greedy-decode one line per record")
    p.add_argument("--checkpoint", required=True, help="checkpoint.pt from train")
    p.add_argument("--data", required=True, help="encoded dataset prefix")
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument("--out", required=True, help="predictions file to write")
    p.add_argument("--batch", type=int, default=64)
    p.set_defaults(run=_cmd_predict)
    return parser


def _cmd_train(args) -> dict:
    return train(
        args.data,
        args.vocab,
        args.out,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        seed=args.seed,
        layers=args.layers,
        hidden=args.hidden,
        heads=args.heads,
        feed_forward=args.ff,
    )


def _cmd_predict(args) -> dict:
    return predict(
        args.checkpoint, args.data, args.vocab, args.out, batch_size=args.batch
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, int):
            return exc.code
        return 0 if exc.code is None else 1
    try:
        summary = args.run(args)
    except (ToyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line frontend: bevgan train | infer | gradcheck.

JSON results go to stdout, warnings to stderr. Exit codes: 0 success,
1 usage error, 2 data/config error or failed gradient check.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .augment import AugmentConfig
from .errors import BevGanError
from .gradcheck import gradcheck
from .infer import enhance_dir
from .train import TrainConfig, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="bevgan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a pair manifest's train split")
    p.add_argument("manifest", help="pair manifest (JSON Lines)")
    p.add_argument("out_dir", help="directory for checkpoint.pt and losses.json")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=2e-4)
    p.add_argument("--l1-weight", type=float, default=100.0)
    p.add_argument("--image-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ngf", type=int, default=64)
    p.add_argument("--ndf", type=int, default=64)
    p.add_argument("--freeze-discriminator", action="store_true")
    p.add_argument("--augment-prob", type=float, default=0.30,
                   help="per-op augmentation probability (0 disables)")

    p = sub.add_parser("infer", help="enhance every image in a directory")
    p.add_argument("checkpoint", help="checkpoint.pt from train")
    p.add_argument("input_dir", help="directory of .png/.pgm radar images")
    p.add_argument("out_dir", help="directory for enhanced .png images")
    p.add_argument("--seed", type=int, default=0, help="dropout noise seed")

    p = sub.add_parser("gradcheck", help="finite-difference check of the objective")
    p.add_argument("--image-size", type=int, default=16)
    p.add_argument("--n-params", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--target", choices=["generator", "discriminator"], default="generator")

    return parser


def cmd_train(args) -> int:
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        l1_weight=args.l1_weight,
        image_size=args.image_size,
        seed=args.seed,
        ngf=args.ngf,
        ndf=args.ndf,
        freeze_discriminator=args.freeze_discriminator,
        augment=AugmentConfig(probability=args.augment_prob, seed=args.seed),
    )
    checkpoint = train(args.manifest, cfg, args.out_dir)
    print(json.dumps({"checkpoint": str(checkpoint), "epochs": cfg.epochs}, sort_keys=True))
    return 0


def cmd_infer(args) -> int:
    written = enhance_dir(args.checkpoint, args.input_dir, args.out_dir, seed=args.seed)
    print(json.dumps({"images": len(written), "out_dir": str(args.out_dir)}, sort_keys=True))
    return 0


def cmd_gradcheck(args) -> int:
    report = gradcheck(
        image_size=args.image_size,
        n_params=args.n_params,
        seed=args.seed,
        tolerance=args.tolerance,
        target=args.target,
    )
    print(report.to_json())
    if not report.passed:
        print(
            f"error: gradient check failed on {len(report.failures)} of "
            f"{len(report.entries)} parameters",
            file=sys.stderr,
        )
        return 2
    return 0


_HANDLERS = {"train": cmd_train, "infer": cmd_infer, "gradcheck": cmd_gradcheck}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (BevGanError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()

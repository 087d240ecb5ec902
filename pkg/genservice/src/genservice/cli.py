"""Command line: make-toy-data, train, serve."""

from __future__ import annotations

import argparse
import sys

from .data import load_dataset, make_toy_dataset, save_dataset
from .training import TrainConfig, load_train_config, train_prf_cgan


def cmd_make_toy_data(args) -> int:
    samples = make_toy_dataset(args.n, args.seed)
    save_dataset(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    samples = load_dataset(args.data)
    config = load_train_config(args.config) if args.config else TrainConfig()
    if args.epochs is not None:
        config.epochs = args.epochs
    if args.gen_steps is not None:
        config.gen_steps = args.gen_steps
    log = train_prf_cgan(samples, config, args.out)
    last = log[-1] if log else {}
    summary = " ".join(f"{key}={value:.4f}" for key, value in last.items()
                       if isinstance(value, float))
    print(f"trained {len(log)} steps; final {summary}; checkpoint at {args.out}",
          file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    from .service import GenerationService  # defer the torch import cost

    service = GenerationService.from_checkpoint(
        args.checkpoint, max_new_tokens=args.max_new_tokens, num_beams=args.beams)
    if args.port is not None:
        server = service.serve_http(args.host, args.port)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    service.serve_stdio()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genservice",
                                     description="Expansion-term generation service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-toy-data", help="write a synthetic training set")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_toy_data)

    p = sub.add_parser("train", help="run the adversarial training loop")
    p.add_argument("--data", required=True, help="JSONL dataset from make-toy-data")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--config", help="key = value training config file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--gen-steps", type=int, default=None, dest="gen_steps")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="answer generate requests from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=None,
                   help="serve HTTP on this port instead of stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--max-new-tokens", type=int, default=12, dest="max_new_tokens")
    p.add_argument("--beams", type=int, default=1)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

    hsicwae [--config FILE] [--seed N] [--out-dir DIR] [--server URL] CMD ...

Commands mirror the HTTP routes: gen-data, train, eval, hsic, plus serve
to run the HTTP server itself. By default commands execute in-process;
with --server they are POSTed to a running service instead, and the
response is printed the same way.

Exit codes: 0 success, 1 configuration/usage error, 2 I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from pydantic import ValidationError

from . import fileio, pipeline
from .config import RunConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

_KIND_TO_EXIT = {"config": EXIT_CONFIG, "io": EXIT_IO, "numeric": EXIT_NUMERIC}


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config/usage code
    (argparse defaults to 2, which this tool reserves for I/O errors)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    # Global flags live on a parent parser attached to every subcommand,
    # so they are accepted both before and after the command word. The
    # SUPPRESS default keeps a subcommand's unset flag from overwriting a
    # value parsed at the top level; read them with getattr(..., None).
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS,
                        help="JSON run configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed for every stage")
    common.add_argument("--out-dir", metavar="DIR", default=argparse.SUPPRESS,
                        help="artifact directory")
    common.add_argument("--server", metavar="URL", default=argparse.SUPPRESS,
                        help="send the command to a running service instead of "
                             "executing in-process")

    parser = _Parser(
        prog="hsicwae",
        description="auto-encoder with latent dependence control: data "
                    "generation, training, evaluation, dependence tests",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", parents=[common],
                   help="generate the synthetic blob dataset")
    sub.add_parser("train", parents=[common],
                   help="train the auto-encoder on the train split")

    p_eval = sub.add_parser("eval", parents=[common],
                            help="evaluate a checkpoint on the test split")
    p_eval.add_argument("--checkpoint", metavar="FILE",
                        help="checkpoint path (default: <out-dir>/checkpoint.txt)")

    p_hsic = sub.add_parser("hsic", parents=[common],
                            help="dependence test between two CSV samples")
    p_hsic.add_argument("x", metavar="X_FILE", help="first sample CSV")
    p_hsic.add_argument("y", metavar="Y_FILE", help="second sample CSV")
    p_hsic.add_argument("--kernel", choices=("rbf", "imq"), default="rbf")
    p_hsic.add_argument("--mmd", action="store_true",
                        help="report the unbiased MMD^2 instead of HSIC")
    p_hsic.add_argument("--permutations", type=int, default=200)

    p_serve = sub.add_parser("serve", parents=[common],
                             help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    out_dir = getattr(args, "out_dir", None)
    seed = getattr(args, "seed", None)
    overrides: dict = {}
    if out_dir is not None:
        overrides["out_dir"] = out_dir
    if seed is not None:
        overrides["synthetic"] = {"seed": seed}
        overrides["training"] = {"seed": seed}
        overrides["eval"] = {"seed": seed}
    return load_config(getattr(args, "config", None), overrides)


def _dispatch_local(args: argparse.Namespace, cfg: RunConfig) -> dict:
    if args.command == "gen-data":
        return pipeline.cmd_gen_data(cfg)
    if args.command == "train":
        return pipeline.cmd_train(cfg)
    if args.command == "eval":
        return pipeline.cmd_eval(cfg, args.checkpoint)
    if args.command == "hsic":
        x = fileio.read_matrix_csv(args.x)
        y = fileio.read_matrix_csv(args.y)
        return pipeline.cmd_hsic(
            x, y,
            kernel=args.kernel,
            statistic="mmd" if args.mmd else "hsic",
            permutations=args.permutations,
            seed=getattr(args, "seed", None) or 0,
        )
    raise ValueError(f"unknown command {args.command!r}")


def _dispatch_server(args: argparse.Namespace, cfg: RunConfig) -> dict:
    import httpx

    base = getattr(args, "server", "").rstrip("/")
    if args.command == "hsic":
        x = fileio.read_matrix_csv(args.x)
        y = fileio.read_matrix_csv(args.y)
        body = {
            "x": x.tolist(),
            "y": y.tolist(),
            "kernel": args.kernel,
            "statistic": "mmd" if args.mmd else "hsic",
            "permutations": args.permutations,
            "seed": getattr(args, "seed", None) or 0,
        }
    else:
        body = {"config": cfg.model_dump(mode="json")}
        if args.command == "eval" and args.checkpoint:
            body["checkpoint"] = args.checkpoint
    try:
        response = httpx.post(f"{base}/{args.command}", json=body, timeout=None)
    except httpx.HTTPError as e:
        raise _ServerError(EXIT_IO, f"cannot reach {base}: {e}") from e
    payload = response.json()
    if response.status_code != 200:
        kind = payload.get("kind", "config") if isinstance(payload, dict) else "config"
        message = payload.get("message", str(payload)) if isinstance(payload, dict) \
            else str(payload)
        raise _ServerError(_KIND_TO_EXIT.get(kind, EXIT_CONFIG), message)
    return payload


class _ServerError(Exception):
    def __init__(self, exit_code: int, message: str):
        self.exit_code = exit_code
        super().__init__(message)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    try:
        cfg = _run_config(args)
        result = _dispatch_server(args, cfg) if getattr(args, "server", None) \
            else _dispatch_local(args, cfg)
    except _ServerError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (ValidationError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

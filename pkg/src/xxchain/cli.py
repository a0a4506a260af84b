"""Command-line client for the experiment service.

Every experiment subcommand builds a RunRequest and executes it either
in-process (default) or against a remote service (--server URL); the CLI
itself holds no simulation logic.  `xxchain serve` starts the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, experiments
from .config import ConfigError, load_config, parse_value
from .experiments import ResultTable, emit


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xxchain",
        description="Protected-qubit chain and adiabatic gate experiments",
    )
    parser.add_argument("--version", action="version", version=f"xxchain {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    for name in experiments.SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the file)")
        p.add_argument("--out", metavar="PATH", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=1, help="worker thread budget")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="single config override (repeatable)",
        )
        p.add_argument("--server", metavar="URL", help="execute on a remote service")
    return parser


def _collect_config(args) -> dict:
    config = {}
    if args.config:
        config.update(load_config(args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        config[key.strip()] = parse_value(value)
    if args.seed is not None:
        config["seed"] = args.seed
    return config


def _execute_local(subcommand: str, config: dict, threads: int) -> ResultTable:
    from .service.app import execute
    from .service.models import RunRequest

    response = execute(RunRequest(subcommand=subcommand, config=config, threads=threads))
    return ResultTable(response.subcommand, response.meta, response.columns, response.rows)


def _execute_remote(server: str, subcommand: str, config: dict, threads: int) -> ResultTable:
    import httpx

    payload = {"subcommand": subcommand, "config": config, "threads": threads}
    reply = httpx.post(f"{server.rstrip('/')}/run", json=payload, timeout=None)
    if reply.status_code != 200:
        raise RuntimeError(f"service returned {reply.status_code}: {reply.text}")
    data = reply.json()
    return ResultTable(data["subcommand"], data["meta"], data["columns"], data["rows"])


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.subcommand == "serve":
        import uvicorn

        uvicorn.run("xxchain.service.app:app", host=args.host, port=args.port)
        return 0
    try:
        config = _collect_config(args)
        if args.server:
            table = _execute_remote(args.server, args.subcommand, config, args.threads)
        else:
            table = _execute_local(args.subcommand, config, args.threads)
        if args.out:
            emit(table, args.out, args.format)
        else:
            emit(table, sys.stdout, args.format)
    except (ConfigError, ValueError, RuntimeError) as exc:
        json.dump({"error": type(exc).__name__, "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

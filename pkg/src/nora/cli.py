"""noractl: serve the gateway, run scripted simulations, score one text."""

from __future__ import annotations

import argparse
import json
import sys

from .config import PlatformConfig
from .errors import NoraError, ValidationError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noractl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP/WebSocket gateway")
    serve.add_argument("--config", help="platform config file (JSON)")
    serve.add_argument("--data", help="data directory (file-backed store)")
    serve.add_argument("--port", type=int, help="listen port")
    serve.add_argument("--host", default="127.0.0.1")

    simulate = sub.add_parser("simulate", help="drive scripted sessions and chat swarms")
    simulate.add_argument("--script", help="JSON script with overrides")
    simulate.add_argument("--days", type=int, default=14)
    simulate.add_argument("--users", type=int, default=3)
    simulate.add_argument("--seed", type=int, default=7)

    score = sub.add_parser("score", help="one-shot affect scoring")
    score.add_argument("--text", required=True)
    score.add_argument("--lang", choices=("en", "zh"), default="en")
    return parser


def _load_config(args) -> PlatformConfig:
    config = PlatformConfig.from_file(args.config) if args.config else PlatformConfig()
    if args.data:
        config.data_dir = args.data
    if args.port:
        config.port = args.port
    return config


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import create_app

    config = _load_config(args)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port)
    return 0


def cmd_simulate(args) -> int:
    from .simulate import run_full_simulation

    script = None
    if args.script:
        with open(args.script, encoding="utf-8") as fh:
            script = json.load(fh)
    if args.days < 1 or args.users < 1:
        raise ValidationError("--days and --users must be >= 1")
    report = run_full_simulation(days=args.days, users=args.users, seed=args.seed, script=script)
    print(json.dumps(report, indent=2, ensure_ascii=False))
    return 0 if report["violations"] == 0 else 2


def cmd_score(args) -> int:
    from .empathy import EmpathyService

    if not args.text.strip():
        raise ValidationError("--text must be non-empty")
    service = EmpathyService.from_config(PlatformConfig())
    scores = service.score_turn(args.text, args.lang)
    print(json.dumps(scores.to_dict(), indent=2, ensure_ascii=False))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"serve": cmd_serve, "simulate": cmd_simulate, "score": cmd_score}
    try:
        return handlers[args.command](args)
    except NoraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

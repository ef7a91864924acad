"""Run the adapter service: flags first, SAM2A_* environment defaults second."""

from __future__ import annotations

import argparse
import os
import sys

ENV_PREFIX = "SAM2A_"


def build_parser() -> argparse.ArgumentParser:
    env = os.environ
    parser = argparse.ArgumentParser(prog="sam2-adapter", description=__doc__)
    parser.add_argument("--checkpoint", default=env.get(ENV_PREFIX + "CHECKPOINT"))
    parser.add_argument(
        "--model-cfg",
        default=env.get(ENV_PREFIX + "MODEL_CFG", "configs/sam2.1/sam2.1_hiera_l.yaml"),
    )
    parser.add_argument("--device", default=env.get(ENV_PREFIX + "DEVICE", "cuda"))
    parser.add_argument("--host", default=env.get(ENV_PREFIX + "HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(env.get(ENV_PREFIX + "PORT", 8500)))
    parser.add_argument(
        "--max-frames", type=int, default=int(env.get(ENV_PREFIX + "MAX_FRAMES", 1024))
    )
    parser.add_argument(
        "--queue-depth", type=int, default=int(env.get(ENV_PREFIX + "QUEUE_DEPTH", 4))
    )
    return parser


def main(argv=None) -> int:
    import uvicorn

    from .server import AdapterConfig, create_app

    args = build_parser().parse_args(argv)
    config = AdapterConfig(
        checkpoint=args.checkpoint,
        model_cfg=args.model_cfg,
        device=args.device,
        host=args.host,
        port=args.port,
        max_frames=args.max_frames,
        queue_depth=args.queue_depth,
    )
    try:
        app = create_app(config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""`fieldledger-server`: run the ingestion service."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .http_server import create_server


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fieldledger-server", description="Batch ingestion and query API."
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("FL_DATA_DIR", "./data"),
        help="store root (env FL_DATA_DIR)",
    )
    parser.add_argument(
        "--host", default="127.0.0.1", help="bind address (default 127.0.0.1)"
    )
    parser.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("FL_PORT", "8080")),
        help="listen port, 0 picks a free one (env FL_PORT)",
    )
    parser.add_argument(
        "--batch-limit",
        type=int,
        default=int(os.environ.get("FL_BATCH_LIMIT", "100")),
        help="max events per batch (env FL_BATCH_LIMIT)",
    )
    parser.add_argument(
        "--console-dir",
        default=os.environ.get("FL_CONSOLE_DIR"),
        help="static directory served at /console/ (env FL_CONSOLE_DIR)",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    server = create_server(
        args.data_dir,
        host=args.host,
        port=args.port,
        batch_limit=args.batch_limit,
        console_dir=args.console_dir,
    )
    host, port = server.server_address[:2]
    # parseable startup line so orchestration can discover a port chosen by 0
    print(f"fieldledger-server listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())

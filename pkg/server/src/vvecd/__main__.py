"""Run the reference server with the bundled toy model: python -m vvecd"""

import argparse
import logging

from .adapter import ToyAdapter
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vvecd", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8091)
    parser.add_argument("--seed", type=int, default=0, help="toy model seed")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    server = serve(ToyAdapter(seed=args.seed), host=args.host, port=args.port)
    print(f"serving toy model on {server.endpoint}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

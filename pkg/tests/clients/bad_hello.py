"""Protocol test client that answers the handshake with an unsupported
protocol version."""

import json
import sys


def main() -> None:
    sys.stdin.readline()
    print(json.dumps({"type": "hello", "v": "v0"}), flush=True)
    for _ in sys.stdin:
        pass


if __name__ == "__main__":
    main()

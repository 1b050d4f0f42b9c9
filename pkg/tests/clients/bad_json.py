"""Protocol test client that handshakes correctly, then replies to the
first observation with a line that is not JSON."""

import json
import sys


def main() -> None:
    hello = json.loads(sys.stdin.readline())
    print(json.dumps({"type": "hello", "v": hello["v"]}), flush=True)
    sys.stdin.readline()
    print("this is not json", flush=True)
    for _ in sys.stdin:
        pass


if __name__ == "__main__":
    main()

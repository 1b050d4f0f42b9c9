"""Entry point the harness launches: python3 -m pyclient --policy random"""

import argparse
import shlex
import sys

from .client import serve
from .policies import DEFAULT_SOLVE_COMMAND, FixedDepth, RandomDepth
from .protocol import ProtocolError


def build_policy(text: str, solve_command):
    if text == "random":
        return RandomDepth(solve_command)
    if text.startswith("fixed:"):
        return FixedDepth(int(text.split(":", 1)[1]), solve_command)
    raise SystemExit(f"unknown policy {text!r} (use random or fixed:N)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pyclient")
    parser.add_argument("--policy", default="random",
                        help="random or fixed:N")
    parser.add_argument("--solve-cmd", default=None,
                        help="override the solver command line")
    args = parser.parse_args(argv)

    command = (tuple(shlex.split(args.solve_cmd)) if args.solve_cmd
               else DEFAULT_SOLVE_COMMAND)
    policy = build_policy(args.policy, command)
    try:
        serve(policy)
    except ProtocolError as exc:
        print(f"pyclient: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Drive the evaluation harness with a policy in another process.

The harness speaks line-delimited JSON over stdin/stdout: a hello
message opens the episode, then each turn sends an observation
({"type": "observe", "k": ..., "state": ...}) and expects a commitment
({"type": "commit", "h": 2, "actions": ["U", "L"]}) back. Any malformed
reply costs the decision and fails that episode; the batch keeps going.
"""

import sys
import tempfile
import textwrap
from pathlib import Path

from commitgym import harness, sliding

client = Path(tempfile.mkdtemp()) / "wanderer.py"
client.write_text(textwrap.dedent("""\
    import json, random, sys

    hello = json.loads(sys.stdin.readline())
    rng = random.Random(hello["episode_seed"])
    depths = hello["depths"]
    print(json.dumps({"type": "hello", "v": "v1"}), flush=True)

    for line in sys.stdin:
        msg = json.loads(line)
        if msg.get("type") != "observe":
            break
        h = depths[rng.randrange(len(depths))]
        actions = [rng.choice("UDLR") for _ in range(h)]
        print(json.dumps({"type": "commit", "h": h, "actions": actions}),
              flush=True)
    """))

pool = [sliding.generate(3, depth=d, seed=d) for d in (2, 3, 4, 5, 6)]
spec = harness.parse_policy_spec(f"external:{sys.executable} {client}")
summary = harness.evaluate(spec, pool, "loose")

print("external random-walk policy on 5 easy instances")
print("  solve_rate:", summary.solve_rate)
print("  mean_actions:", summary.mean_actions)
print("  protocol_errors:", summary.protocol_errors)

# The same protocol is what `commitgym eval --policy external:...` uses,
# so a policy written in any language plugs into the same pipeline.

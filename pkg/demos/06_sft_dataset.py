"""Build a supervised dataset of macro-actions from expert solutions.

One expert path of N moves yields many training samples: from every
timestep t along the path, and for every depth h in the menu that still
fits, the pair (state at t, next h expert actions) is a valid
commitment. Rewards for whole episodes combine a solve indicator with a
bounded shaping term, and groups of rewards are centered into
advantages.
"""

from pathlib import Path
import tempfile

from commitgym import Budget, datagen, oracle, run_episode, sliding
from commitgym.harness import FixedDepthPolicy

inst = sliding.generate(3, depth=10, seed=42)
expert = sliding.solve(inst.state)
print(f"expert path: {len(expert)} moves,",
      "".join(a.value for a in expert))

samples = datagen.expand_counterfactual(expert, inst.state,
                                        instance_id=inst.instance_id)
print(f"expanded into {len(samples)} (state, depth, actions) samples")
by_h = {}
for s in samples:
    by_h[s.h] = by_h.get(s.h, 0) + 1
print("per depth:", dict(sorted(by_h.items())))

out = Path(tempfile.mkdtemp()) / "sft.jsonl"
n = datagen.export_jsonl(samples, out)
print(f"wrote {n} lines to {out}")
print(out.read_text().splitlines()[0][:120], "...")

# Episode rewards: 1 for solving plus a tanh-squashed mean progress
# term, so the total always lands in (-0.2, 1.2]. With only 3 decisions
# allowed, short depths run out of budget and the group splits.
rewards = []
for h in (1, 2, 4, 8):
    transcript = run_episode(FixedDepthPolicy(h=h), inst.state,
                             Budget(K=3), distance_fn=oracle.distance)
    r = datagen.episode_reward(transcript)
    rewards.append(r.total)
    print(f"h={h}: solved={transcript.solved} reward={r.total:+.3f}")

print("group advantages:",
      [f"{a:+.3f}" for a in datagen.group_advantage(rewards)])

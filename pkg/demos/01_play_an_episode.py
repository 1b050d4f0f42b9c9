"""Generate a puzzle, run one budgeted episode, and inspect the transcript.

A policy is asked for a commitment (a depth h and exactly h actions) at
each decision point; the actions then execute open-loop with no feedback
until the next decision. Two clocks track the run: t counts primitive
moves, k counts decisions.
"""

from commitgym import Budget, oracle, run_episode, sliding
from commitgym.harness import FixedDepthPolicy

# An eight-puzzle instance whose optimal solution is exactly 14 moves.
inst = sliding.generate(3, depth=14, seed=7)
print("instance:", inst.instance_id)
for row in range(3):
    print(" ", inst.state.tiles[row * 3:row * 3 + 3])

# Re-plan from scratch every 4 primitive moves, up to 6 decisions.
policy = FixedDepthPolicy(h=4)
transcript = run_episode(policy, inst.state, Budget(K=6),
                         instance_id=inst.instance_id,
                         distance_fn=oracle.distance)

print("solved:", transcript.solved)
print("primitive moves t =", transcript.clocks.t,
      " decisions k =", transcript.clocks.k)
for i, dec in enumerate(transcript.decisions):
    acts = "".join(a.value for a in dec.commitment.actions)
    print(f"  decision {i}: h={dec.commitment.h} actions={acts} "
          f"d {dec.d_before:.0f} -> {dec.d_after:.0f}")

# The clocks interlock: each commitment advances t by its depth
# (the final one may stop early on the goal).
print("t at each decision boundary:", transcript.clocks.t_at_decision)

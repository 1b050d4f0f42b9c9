"""Sweep commitment depth against the decision budget.

Longer commitments spend the budget slower but cannot correct course
mid-flight. With a solver supplying the actions, a fixed depth h solves
an instance of optimal length d exactly when ceil(d / h) fits inside the
budget K, so the sweep traces that law directly.
"""

import math

from commitgym import harness, sliding

pool = [sliding.generate(3, depth=d, seed=100 + d) for d in range(4, 25, 2)]

print(f"pool: {len(pool)} instances, optimal lengths "
      f"{[inst.depth for inst in pool]}")
print()
print("          " + "".join(f"  d={inst.depth:<3d}" for inst in pool))
for preset in ("tight", "loose"):
    K = harness.BUDGET_PRESETS[preset]["sliding"]
    for h in (1, 2, 4, 8):
        spec = harness.PolicySpec(kind="fixed", h=h)
        transcripts = harness.run_batch(spec, pool, preset)
        marks = "".join(
            f"  {'ok' if t.solved else '--':<5s}" for t in transcripts)
        law = all(
            t.solved == (math.ceil(inst.depth / h) <= K)
            for inst, t in zip(pool, transcripts))
        print(f"{preset:>6s} h={h}{marks}  law={'yes' if law else 'NO'}")
    print()

# Summaries carry the aggregate view of the same runs.
summary = harness.evaluate(harness.PolicySpec(kind="fixed", h=4), pool,
                           "tight")
print("fixed h=4, tight budget:",
      f"solve_rate={summary.solve_rate:.2f}",
      f"mean_actions={summary.mean_actions:.1f}",
      f"mean_decisions={summary.mean_decisions:.1f}")

"""Minimal-decision schedules from the depth oracle.

Given the exact distance-to-goal d, the fewest decisions that reach the
goal through the depth menu {1, 2, 4, 8} is a change-making problem.
The oracle decomposes d greedily (largest depth that still fits), which
is provably minimal for this power-of-two menu, and a dynamic program
confirms the count.
"""

from commitgym import harness, oracle, sliding, sokoban

for d in (1, 5, 13, 20, 31, 100):
    seq = oracle.oracle_depth_sequence(d)
    print(f"d={d:<4d} schedule={list(seq)}  decisions={len(seq)}")

# d=20 splits as [8, 8, 4]: three decisions, not twenty.
assert list(oracle.oracle_depth_sequence(20)) == [8, 8, 4]

# Backed by the exact solver, the oracle policy replans at every
# decision boundary and solves everything a budget permits.
pool = [sliding.generate(3, depth=d, seed=d) for d in (6, 12, 18, 24)]
pool += [sokoban.generate(6, 6, n_boxes=2, seed=s, pulls=(4, 16))
         for s in (1, 2)]
summary = harness.evaluate(harness.PolicySpec(kind="oracle"), pool, "loose")
print()
print("oracle on mixed pool: solve_rate =", summary.solve_rate)
hist = summary.per_h_histogram
for h, freq in zip(hist["h"], hist["freq"]):
    print(f"  h={h}: share of decisions = {freq:.2f}")

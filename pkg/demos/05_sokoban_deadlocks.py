"""Static deadlock detection on Sokoban boards.

A box pushed onto a corner, or against a wall run with no goal, can
never reach a goal again. dead_cells precomputes every such square from
the walls and goals alone; is_deadlocked flags any state with a box on
one. The check is sound (never condemns a solvable state), which the
test suite verifies exhaustively over every small one-box board.
"""

from commitgym import Unsolvable, sokoban

solvable = sokoban.from_ascii("""\
#######
#     #
# $ . #
#  @  #
#######""")

doomed = sokoban.from_ascii("""\
#######
#$    #
#   . #
#  @  #
#######""")

for name, state in (("solvable", solvable), ("cornered box", doomed)):
    dead = sokoban.dead_cells(state.width, state.height, state.walls,
                              state.goals)
    print(f"{name}: dead squares = {len(dead)}, "
          f"deadlocked = {sokoban.is_deadlocked(state)}")
    try:
        plan = sokoban.solve(state)
        print("  solver:", "".join(a.value for a in plan),
              f"({len(plan)} moves)")
    except Unsolvable as exc:
        print("  solver: unsolvable,", exc)
    print(sokoban.to_ascii(state))
    print()

# Generated instances are never born dead: the reverse-pull constructor
# only places boxes on squares they can still leave.
inst = sokoban.generate(6, 6, n_boxes=2, seed=3, pulls=(4, 16))
print("generated 6x6, optimal length", inst.optimal_length)
print(sokoban.to_ascii(inst.state))

"""Where does an interior optimal commitment depth exist?

Model a depth-h commitment as failing with probability c * h**alpha.
When alpha >= 1 error compounds at least linearly and the best depth is
always h = 1. When alpha < 1 the trade between fewer decisions and
per-commitment risk has an interior optimum near (u*/c)**(1/alpha),
where u* balances the equation F(u) = alpha.
"""

from commitgym import theory

rows = theory.phase_scan((0.25, 0.5, 0.75, 1.0, 1.25, 1.5), c=0.01, T=100.0)
print(f"{'alpha':>6s} {'best h':>10s} {'interior':>9s} {'h* prediction':>14s}")
for row in rows:
    pred = f"{row.hstar:.0f}" if row.interior else "-"
    print(f"{row.alpha:>6.2f} {row.argmax_h:>10d} "
          f"{str(row.interior):>9s} {pred:>14s}")

# The balance root behind the alpha=0.5 prediction.
u = theory.solve_ustar(0.5)
print(f"\nu*(0.5) = {u:.4f}   residual F(u*) - 0.5 = {theory.F(u) - 0.5:.2e}")

# State-dependent failure: hard states punish long commitments, easy
# states reward them. A schedule that adapts h to the visited state
# strictly beats every fixed depth on this two-state alternation.
model = theory.StateModel(states=((0.001, 0.5), (0.34, 0.5)),
                          visit_sequence=(0, 1) * 4)
res = theory.dominance_check(model)
print(f"\nadaptive log-success  {res.adaptive_logp:.6f}")
print(f"best fixed (h={res.best_fixed_h}) {res.best_fixed_logp:.6f}")
print("strictly dominant:", res.strict)

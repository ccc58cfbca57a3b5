"""A walk on the subset cube of a 5-point line-fitting instance.

Five points, four of them on the x-axis and one lifted off it.  Each
subset of points is a vertex of {0,1}^5; the minmax fit says whether
that subset can be covered by one line within the tolerance.  The
infeasibility verdicts form a monotone Boolean function on the cube,
and the best consensus set is its maximum upper zero.
"""

import numpy as np

from maxcon import (
    Dataset,
    FeasibilityOracle,
    SubsetMask,
    Tolerance,
    is_upper_zero,
    max_upper_zero_exhaustive,
    minmax_solve,
    tabulate_mbf,
)

# y = 0 fits points 0..3 exactly; point 4 sits 0.5 above the axis
dataset = Dataset(
    features=np.array([[0.0, 1], [1.0, 1], [2.0, 1], [3.0, 1], [4.0, 1]]),
    targets=np.array([0.0, 0.0, 0.0, 0.0, 0.5]),
)
tol = Tolerance(0.1)

print(f"{dataset.n} points, model dimension p={dataset.p}, tolerance {tol.epsilon}")
print()

print("minmax fits of a few subsets (mask string: leftmost bit = point 0):")
for text in ("11110", "11111", "11001", "00011"):
    mask = SubsetMask.from_string(text)
    fit = minmax_solve(dataset, mask)
    verdict = "feasible" if fit.g <= tol.epsilon else "infeasible"
    theta = np.round(fit.theta, 3)
    print(f"  {text}  worst residual {fit.g:.3f}  theta {theta}  -> {verdict}")
print()

# the whole cube at once: one tabulation, 2^5 verdicts
oracle = FeasibilityOracle(dataset, tol)
table = tabulate_mbf(oracle)
feasible = sum(1 for bits in range(1 << dataset.n) if table(bits) == 0)
print(f"cube has {1 << dataset.n} vertices, {feasible} feasible")
print(f"tabulation needed {oracle.calls} minmax solves (monotonicity fills the rest)")
print()

best = max_upper_zero_exhaustive(table)
print(f"maximum upper zero: {best} (consensus {best.popcount} of {dataset.n})")
print(f"  is_upper_zero({best}) = {is_upper_zero(table, best)}")

# 11001 is also an upper zero: feasible, but adding any point breaks it.
# Greedy paths can land there; only 11110 has maximum weight.
other = SubsetMask.from_string("11001")
print(f"  is_upper_zero({other}) = {is_upper_zero(table, other)} "
      f"(a smaller local optimum, consensus {other.popcount})")

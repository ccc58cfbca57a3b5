"""Cross-validation of the Boolean-cube layer (dev only, not shipped).

Checks, against independent brute force:
  * closed-form single- and multi-structure influences vs full enumeration
  * the dominance ordering of membership classes
  * sampled influence vs the exact biased-measure value (computed by
    weighted enumeration, not by the estimator's own code path)
  * shortcut on/off equivalence and stream determinism
  * tabulation with and without monotone inheritance
  * upper-zero operations on a hand-built geometric instance
"""

import itertools
import sys
import time
from fractions import Fraction

import numpy as np

sys.path.insert(0, "src")

from maxcon import (
    Dataset,
    FeasibilityOracle,
    IdealSpec,
    Tolerance,
    ideal_mbf,
    influence_exact,
    influence_sampled,
    is_upper_zero,
    max_upper_zero_exhaustive,
    tabulate_mbf,
    theorem1_influence,
    theorem2_influence,
)
from maxcon.boolean import influence_flip_counts
from maxcon.masks import SubsetMask

bad = 0


def check(cond, msg):
    global bad
    if not cond:
        bad += 1
        print("FAIL:", msg)


# --- theorem1_influence sweep: enumeration vs closed form, zero tolerance --
t0 = time.time()
cases = 0
for n in range(3, 13):
    for p in range(1, min(4, n)):
        for k in range(p + 1, n + 1):
            spec = IdealSpec(n=n, p=p, structures=(tuple(range(k)),))
            counts = influence_flip_counts(ideal_mbf(spec))
            denom = 1 << n
            got_in = Fraction(int(counts[0]), denom)
            want_in = theorem1_influence(n, p, k, inlier=True)
            check(got_in == want_in, f"T1 inlier n={n} p={p} k={k}: {got_in} != {want_in}")
            # all members share one value
            check(
                all(counts[i] == counts[0] for i in range(k)),
                f"T1 member counts differ n={n} p={p} k={k}",
            )
            if k < n:
                got_out = Fraction(int(counts[k]), denom)
                want_out = theorem1_influence(n, p, k, inlier=False)
                check(
                    got_out == want_out,
                    f"T1 outlier n={n} p={p} k={k}: {got_out} != {want_out}",
                )
                check(
                    all(counts[i] == counts[k] for i in range(k, n)),
                    f"T1 outlier counts differ n={n} p={p} k={k}",
                )
                check(got_out > got_in, f"T1 ordering n={n} p={p} k={k}")
            cases += 1
print(f"theorem 1: {cases} cases checked ({time.time() - t0:.1f}s)")

# frozen reference values worked out by hand
check(theorem1_influence(5, 2, 4, inlier=True) == Fraction(3, 32), "frozen 3/32")
check(theorem1_influence(5, 2, 4, inlier=False) == Fraction(11, 32), "frozen 11/32")

# --- theorem2_influence: multi-structure, overlaps allowed up to p ---------
t0 = time.time()
rng = np.random.default_rng(7)
specs = [
    IdealSpec(9, 2, ((0, 1, 2, 3), (4, 5, 6, 7))),
    IdealSpec(10, 2, ((0, 1, 2, 3), (2, 3, 4, 5, 6))),          # overlap = p
    IdealSpec(11, 1, ((0, 1, 2), (2, 3, 4), (4, 5, 6, 7))),     # chains of overlap 1
    IdealSpec(12, 3, ((0, 1, 2, 3, 4), (2, 3, 4, 5, 6, 7))),    # overlap = p = 3
    IdealSpec(8, 1, ((0, 1), (0, 2), (1, 2, 3))),
]
cases = 0
for spec in specs:
    counts = influence_flip_counts(ideal_mbf(spec))
    denom = 1 << spec.n
    patterns = set(spec.membership(i) for i in range(spec.n))
    values = {}
    for pat in patterns:
        want = theorem2_influence(spec, pat)
        values[pat] = want
        for i in spec.class_indices(pat):
            got = Fraction(int(counts[i]), denom)
            check(
                got == want,
                f"T2 {spec.structures} point {i} pattern {pat}: {got} != {want}",
            )
            cases += 1
    # dominance: strictly more memberships => strictly smaller influence
    for a, b in itertools.permutations(patterns, 2):
        if all(x >= y for x, y in zip(a, b)) and a != b:
            check(values[a] < values[b], f"T2 dominance {a} vs {b} in {spec.structures}")
# empty class must raise
try:
    theorem2_influence(specs[0], (1, 1))
    check(False, "empty class did not raise")
except ValueError:
    pass
print(f"theorem 2: {cases} point checks ({time.time() - t0:.1f}s)")

# --- Sampled influence vs exact biased-measure value -----------------------
t0 = time.time()
spec = IdealSpec(10, 2, ((0, 1, 2, 3, 4, 5, 6),))
f = ideal_mbf(spec)
table = f.truth_table()
masks = np.arange(1 << spec.n, dtype=np.int64)
pc = np.bitwise_count(masks).astype(np.int64)


def biased_exact(i, q):
    """Half the mu_q flip probability, by weighted enumeration of pairs."""
    bit = np.int64(1) << i
    lower = masks[(masks & bit) == 0]
    flips = table[lower] != table[lower | bit]
    rest = pc[lower]
    w = q ** rest * (1.0 - q) ** (spec.n - 1 - rest)
    return 0.5 * float(np.sum(w[flips]))


for q in (0.2, 0.5, 0.8):
    est = influence_sampled(f, SubsetMask.all_ones(spec.n), m=400_000, q=q, seed=11)
    for i in (0, 7):
        want = biased_exact(i, q)
        got = est.values[i]
        sigma = max(np.sqrt(want * (1 - want) / 400_000), 1e-6)
        check(
            abs(got - want) < 5 * sigma,
            f"sampled q={q} i={i}: {got:.5f} vs exact {want:.5f} (5s={5*sigma:.5f})",
        )
# q=0.5 agrees with the uniform exact vector
exact = influence_exact(f)
est = influence_sampled(f, SubsetMask.all_ones(spec.n), m=400_000, q=0.5, seed=3)
err = np.max(np.abs(est.values - exact.values))
check(err < 5e-3, f"q=0.5 vs uniform exact, max err {err:.4f}")
print(f"sampling measure: checked at q in (0.2, 0.5, 0.8) ({time.time() - t0:.1f}s)")

# --- Shortcut equivalence and determinism ----------------------------------
a = influence_sampled(f, SubsetMask.all_ones(spec.n), m=5000, q=0.3, seed=(4, 2))
b = influence_sampled(f, SubsetMask.all_ones(spec.n), m=5000, q=0.3, seed=(4, 2), shortcut=False)
check(np.array_equal(a.values, b.values), "shortcut changed estimates")
c = influence_sampled(f, SubsetMask.all_ones(spec.n), m=5000, q=0.3, seed=(4, 2))
check(np.array_equal(a.values, c.values), "repeat call not deterministic")
# restricted scope: out-of-scope entries NaN, in-scope defined
scope = SubsetMask.from_indices(spec.n, [1, 3, 8])
d = influence_sampled(f, scope, m=200, q=0.4, seed=0)
check(
    sorted(d.defined_indices()) == [1, 3, 8] and np.isnan(d.values[0]),
    "scope handling broken",
)
print("shortcut/determinism/scope: ok")

# --- Tabulation: monotone inheritance vs plain enumeration -----------------
t0 = time.time()
pts_x = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [3.0, 1.0], [4.0, 1.0]])
pts_y = np.array([0.0, 0.0, 0.0, 0.0, 0.5])
geo = Dataset(pts_x, pts_y)
oracle1 = FeasibilityOracle(geo, Tolerance(0.1))
oracle2 = FeasibilityOracle(geo, Tolerance(0.1))
tab_m = tabulate_mbf(oracle1, monotone=True)
tab_p = tabulate_mbf(oracle2, monotone=False)
check(np.array_equal(tab_m.table, tab_p.table), "monotone tabulation differs from plain")
check(oracle1.calls < oracle2.calls, "inheritance saved no oracle calls")
print(
    f"tabulation: identical tables, {oracle1.calls} vs {oracle2.calls} oracle calls"
    f" ({time.time() - t0:.1f}s)"
)

# larger random instance: monotone vs plain again
from maxcon import generate_line2d

ds = generate_line2d(12, 0.25, seed=5)
o1 = FeasibilityOracle(ds, Tolerance(0.1))
o2 = FeasibilityOracle(ds, Tolerance(0.1))
t1 = tabulate_mbf(o1, monotone=True)
t2 = tabulate_mbf(o2, monotone=False)
check(np.array_equal(t1.table, t2.table), "n=12 tabulation mismatch")
print(f"n=12 line tabulation: identical ({o1.calls} vs {o2.calls} calls)")

# --- Upper zeros on the geometric instance ---------------------------------
mz = max_upper_zero_exhaustive(tab_m)
check(mz == SubsetMask.from_string("11110"), f"max upper zero got {mz.to_string()}")
check(is_upper_zero(tab_m, SubsetMask.from_string("11001")), "11001 should be upper zero")
check(not is_upper_zero(tab_m, SubsetMask.from_string("11000")), "11000 is not an upper zero")
check(tab_m(0b11111) == 1, "all five points should be infeasible")
check(tab_m(0b01111) == 0, "first four collinear points should be feasible")
# ideal counterpart distinguishes: under the ideal function any 3 points fit
ispec = IdealSpec(5, 2, ((0, 1, 2, 3),))
ideal = ideal_mbf(ispec)
check(ideal(SubsetMask.from_string("11001").bits) == 1, "ideal f(11001) should be 1")
check(tab_m(SubsetMask.from_string("11001").bits) == 0, "geometric f(11001) should be 0")
print("upper zeros: ok")

# max upper zero tie-break: two disjoint feasible sets of equal size
tie = IdealSpec(6, 1, ((0, 2), (1, 3)))
mz2 = max_upper_zero_exhaustive(ideal_mbf(tie))
check(mz2.bits == 0b0101, f"tie-break got {mz2.to_string()} bits={mz2.bits:06b}")
print("tie-break: ok")

print()
print(f"{'ALL OK' if bad == 0 else f'{bad} FAILURES'}")
sys.exit(1 if bad else 0)

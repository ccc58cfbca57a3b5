"""Cross-validation of the solver layer (dev only, not shipped).

Drives the greedy solver, variants, expansion and baselines against the
exhaustive optimum on small instances, and checks the determinism,
trace and certification contracts.
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from maxcon import (
    Dataset,
    FeasibilityOracle,
    MaxConConfig,
    MaxConResult,
    Tolerance,
    generate_line2d,
    generate_linear,
    ideal_mbf,
    IdealSpec,
    is_upper_zero,
    lo_ransac,
    local_expansion,
    max_upper_zero_exhaustive,
    mbf_maxcon,
    mbf_maxcon_variant,
    ransac,
    tabulate_mbf,
    timing_stripped,
)
from maxcon.masks import SubsetMask

bad = 0


def check(cond, msg):
    global bad
    if not cond:
        bad += 1
        print("FAIL:", msg)


# --- Geometric 5-point instance --------------------------------------------
pts_x = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [3.0, 1.0], [4.0, 1.0]])
pts_y = np.array([0.0, 0.0, 0.0, 0.0, 0.5])
geo = Dataset(pts_x, pts_y)

res = mbf_maxcon(geo, MaxConConfig(epsilon=0.1, m=2000, q=0.4, seed=1))
check(res.consensus_size == 4, f"geo consensus {res.consensus_size} != 4")
check(res.mask == SubsetMask.from_string("11110"), f"geo mask {res.mask.to_string()}")
check(res.certified_upper_zero, "geo result not certified")
check(res.g <= 0.1 + 1e-9, f"geo g {res.g}")
# matches the exhaustive optimum
tab = tabulate_mbf(FeasibilityOracle(geo, Tolerance(0.1)))
check(max_upper_zero_exhaustive(tab).popcount == 4, "exhaustive optimum not 4")
print(f"geometric instance: consensus 4, {len(res.trace)} removals, ok")

# --- Zero outliers: no removals --------------------------------------------
clean = generate_line2d(12, 0.0, seed=3)
for variant in ("full", "nR", "nB", "nL"):
    r = mbf_maxcon_variant(clean, MaxConConfig(epsilon=0.1, m=50, seed=0, variant=variant))
    check(r.consensus_size == 12 and len(r.trace) == 0, f"{variant} clean dataset removed points")
    check(r.certified_upper_zero, f"{variant} clean not certified")
print("zero-outlier datasets: ok")

# --- Determinism ------------------------------------------------------------
ds = generate_line2d(15, 0.25, seed=11)
cfg = MaxConConfig(epsilon=0.1, m=300, seed=42)
r1 = mbf_maxcon(ds, cfg)
r2 = mbf_maxcon(ds, cfg)
check(
    timing_stripped(r1.to_json_dict()) == timing_stripped(r2.to_json_dict()),
    "rerun differs beyond timing",
)
# JSON round trip
rt = MaxConResult.from_json_dict(r1.to_json_dict())
check(
    timing_stripped(rt.to_json_dict()) == timing_stripped(r1.to_json_dict()),
    "JSON round trip changed the result",
)
print("determinism and round trip: ok")

# --- Trace invariants --------------------------------------------------------
for rec in r1.trace:
    check(rec.removed in rec.basis, f"removed {rec.removed} not in basis {rec.basis}")
    check(rec.removed in rec.targets, "removed not in targets")
    ivals = dict(rec.influences)
    check(
        ivals[rec.removed] == max(ivals.values()),
        "removed point does not have max influence",
    )
check(len(r1.trace) == ds.n - (r1.consensus_size - len(r1.expanded)), "trace length mismatch")
print(f"trace invariants over {len(r1.trace)} removals: ok")

# --- Near-optimality over seeds ---------------------------------------------
t0 = time.time()
hits = 0
within1 = 0
runs = 30
for seed in range(runs):
    d = generate_line2d(15, 0.25, seed=seed)
    opt = max_upper_zero_exhaustive(
        tabulate_mbf(FeasibilityOracle(d, Tolerance(0.1)))
    ).popcount
    r = mbf_maxcon(d, MaxConConfig(epsilon=0.1, m=500, seed=seed))
    check(r.consensus_size <= opt, f"seed {seed}: consensus exceeds optimum")
    check(r.certified_upper_zero, f"seed {seed}: not certified")
    hits += r.consensus_size == opt
    within1 += r.consensus_size >= opt - 1
print(
    f"n=15 over {runs} seeds: exact {hits}, within-1 {within1}"
    f" ({time.time() - t0:.1f}s)"
)
check(within1 >= int(0.9 * runs), "within-1 rate below 90%")

# --- Local expansion: ideal instance 11000 -> 11110 -------------------------
ideal = ideal_mbf(IdealSpec(5, 2, ((0, 1, 2, 3),)))
# expansion against the geometric dataset
got = local_expansion(geo, Tolerance(0.1), SubsetMask.from_string("11000"))
check(got == SubsetMask.from_string("11110"), f"expansion gave {got.to_string()}")
check(is_upper_zero(tab, got), "expansion output not an upper zero")
try:
    local_expansion(geo, Tolerance(0.1), SubsetMask.from_string("11111"))
    check(False, "expansion accepted an infeasible mask")
except ValueError:
    pass
print("local expansion: ok")

# --- Variants on 8-D instances ----------------------------------------------
t0 = time.time()
sizes = {v: [] for v in ("full", "nR", "nB", "nL")}
for seed in range(12):
    d = generate_linear(40, 8, 8, seed=seed)
    for v in sizes:
        r = mbf_maxcon_variant(d, MaxConConfig(epsilon=0.1, m=150, seed=seed, variant=v))
        check(r.consensus_size >= d.p + 1 or r.consensus_size >= 0, "nonsense size")
        fo = FeasibilityOracle(d, Tolerance(0.1))
        check(fo(r.mask.bits) == 0, f"{v} seed {seed}: final mask infeasible")
        if v == "nL":
            check(len(r.expanded) == 0, "nL expanded")
        sizes[v].append(r.consensus_size)
means = {v: float(np.mean(s)) for v, s in sizes.items()}
print(f"variant means over 12 seeds: {means} ({time.time() - t0:.1f}s)")
check(means["full"] >= means["nL"], "full < nL on average")
check(means["full"] >= means["nR"], "full < nR on average")

# --- RANSAC baselines --------------------------------------------------------
r_plain = ransac(ds, Tolerance(0.1), iterations=500, seed=7)
r_lo = lo_ransac(ds, Tolerance(0.1), iterations=500, seed=7)
opt = max_upper_zero_exhaustive(tabulate_mbf(FeasibilityOracle(ds, Tolerance(0.1)))).popcount
check(r_lo.consensus_size >= r_plain.consensus_size, "lo < plain")
check(r_plain.consensus_size <= opt and r_lo.consensus_size <= opt, "baseline beats optimum")
fo = FeasibilityOracle(ds, Tolerance(0.1))
check(fo(r_plain.mask.bits) == 0 and fo(r_lo.mask.bits) == 0, "baseline mask infeasible")
# noise-free clean data: every hypothesis reproduces the generating model
exact_clean = generate_line2d(12, 0.0, inlier_noise=0.0, seed=3)
clean_r = ransac(exact_clean, Tolerance(0.1), iterations=1, seed=0)
check(clean_r.consensus_size == exact_clean.n, "ransac on noise-free data not full")
clean_lo = lo_ransac(exact_clean, Tolerance(0.1), iterations=1, seed=0)
check(clean_lo.consensus_size == exact_clean.n, "lo_ransac on noise-free data not full")
# determinism
r_plain2 = ransac(ds, Tolerance(0.1), iterations=500, seed=7)
check(
    timing_stripped(r_plain.to_json_dict()) == timing_stripped(r_plain2.to_json_dict()),
    "ransac rerun differs",
)
print(f"baselines: plain {r_plain.consensus_size}, lo {r_lo.consensus_size}, opt {opt}")

# --- Oracle-call affine trend on n=200 (quick look) --------------------------
t0 = time.time()
calls = []
n_out_grid = (5, 15, 25, 35)
for n_out in n_out_grid:
    d = generate_linear(200, 8, n_out, seed=n_out)
    r = mbf_maxcon(d, MaxConConfig(epsilon=0.1, m=300, seed=1))
    fo = FeasibilityOracle(d, Tolerance(0.1))
    check(fo(r.mask.bits) == 0, f"n_out={n_out}: infeasible result")
    calls.append(r.oracle_calls)
x = np.asarray(n_out_grid, float)
ycalls = np.asarray(calls, float)
coef = np.polyfit(x, ycalls, 1)
pred = np.polyval(coef, x)
ss_res = float(np.sum((ycalls - pred) ** 2))
ss_tot = float(np.sum((ycalls - ycalls.mean()) ** 2))
r2 = 1.0 - ss_res / ss_tot
print(f"oracle calls vs outliers {dict(zip(n_out_grid, calls))}, R2={r2:.4f} ({time.time() - t0:.1f}s)")
check(r2 >= 0.9, f"affine trend R2 {r2:.3f} < 0.9")

print()
print(f"{'ALL OK' if bad == 0 else f'{bad} FAILURES'}")
sys.exit(1 if bad else 0)

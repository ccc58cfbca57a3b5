"""Cross-validate the simplex kernel against scipy linprog (HiGHS)."""
import time
import numpy as np
from scipy.optimize import linprog

from maxcon.model import Dataset
from maxcon.feasibility import minmax_solve, FeasibilityOracle, feasibility_threshold
from maxcon.masks import SubsetMask


def cheb_ref(X, y):
    s, d = X.shape
    # min t  s.t.  X theta - t <= y ; -X theta - t <= -y
    A = np.block([[X, -np.ones((s, 1))], [-X, -np.ones((s, 1))]])
    b = np.concatenate([y, -y])
    c = np.zeros(d + 1); c[-1] = 1.0
    r = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * (d + 1), method="highs")
    assert r.status == 0, r.message
    return r.fun


rng = np.random.default_rng(7)
bad = 0
cases = 0
t_mine = 0.0
for trial in range(3000):
    d = rng.integers(1, 7)
    s = rng.integers(d + 1, 40)
    kind = rng.integers(0, 5)
    X = rng.normal(size=(s, d))
    if kind == 1:
        X[:, -1] = 1.0                       # intercept column
    elif kind == 2 and d >= 2:
        X[:, 1] = X[:, 0]                    # rank-deficient
    elif kind == 3:
        X = np.round(X)                      # ties / duplicate rows
    elif kind == 4:
        X *= 10.0 ** rng.integers(-3, 4)     # scale stress
    y = rng.normal(size=s) * 10.0 ** rng.integers(-3, 4)
    if rng.random() < 0.2:
        theta0 = rng.normal(size=d)
        y = X @ theta0 + rng.normal(size=s) * 1e-4   # near-consistent

    ds = Dataset(X, y)
    mask = SubsetMask.all_ones(s)
    t0 = time.perf_counter()
    out = minmax_solve(ds, mask)
    t_mine += time.perf_counter() - t0
    g_ref = cheb_ref(X, y)
    cases += 1
    tol = 1e-9 * max(1.0, abs(g_ref))
    if abs(out.g - g_ref) > tol:
        bad += 1
        if bad < 10:
            print(f"MISMATCH trial={trial} d={d} s={s} kind={kind} g={out.g!r} ref={g_ref!r} diff={out.g-g_ref:.3e}")
    # basis contract: minmax over the basis attains g
    if out.basis:
        gb = minmax_solve(ds, SubsetMask.from_indices(s, out.basis)).g
        if abs(gb - out.g) > 1e-9 * max(1.0, out.g):
            bad += 1
            if bad < 20:
                print(f"BASIS trial={trial} gb={gb!r} g={out.g!r} basis={out.basis} deg={out.degenerate}")
    if len(out.basis) > d + 1:
        bad += 1
        print(f"BASIS SIZE trial={trial} len={len(out.basis)}")
    # residual-at-theta sanity
    H = np.abs(X @ out.theta - y).max()
    if H > out.g + 1e-9 * max(1.0, out.g) + 1e-12:
        bad += 1
        if bad < 30:
            print(f"THETA trial={trial} H={H!r} g={out.g!r} deg={out.degenerate}")

print(f"full solves: {cases} cases, {bad} bad, mine total {t_mine:.2f}s")

# feasibility decisions vs reference, including boundary-ish eps
bad2 = 0
nfeas = 0
t_feas = 0.0
rng = np.random.default_rng(11)
for trial in range(1500):
    d = rng.integers(1, 5)
    s = rng.integers(d + 1, 30)
    X = rng.normal(size=(s, d))
    y = rng.normal(size=s)
    ds = Dataset(X, y)
    g_ref = cheb_ref(X, y)
    for eps in (0.5 * g_ref, g_ref * 0.999, g_ref * 1.001, 2 * g_ref + 0.01):
        if not np.isfinite(eps) or eps < 0:
            continue
        oracle = FeasibilityOracle(ds, eps)
        t0 = time.perf_counter()
        v = oracle.value(SubsetMask.all_ones(s))
        t_feas += time.perf_counter() - t0
        want = 1 if g_ref > feasibility_threshold(eps) else 0
        nfeas += 1
        if v != want and abs(g_ref - feasibility_threshold(eps)) > 1e-11 * max(1.0, g_ref):
            bad2 += 1
            if bad2 < 10:
                print(f"FEAS MISMATCH trial={trial} eps={eps} g_ref={g_ref!r} v={v} want={want}")
print(f"feasibility: {nfeas} cases, {bad2} bad, {t_feas/max(nfeas,1)*1e6:.0f} us/query")

import time
import numpy as np
from maxcon.model import generate_linear, generate_line2d
from maxcon.feasibility import FeasibilityOracle

for desc, ds, q in [
    ("n=20 p=8", generate_linear(20, 8, 5, seed=1), 0.45),
    ("n=200 p=8", generate_linear(200, 8, 40, seed=1), 0.1),
    ("n=15 p=2", generate_line2d(15, 0.25, seed=1), 0.2),
]:
    oracle = FeasibilityOracle(ds, 0.1)
    rng = np.random.default_rng(0)
    bits = rng.random((3000, ds.n)) < q
    oracle.evaluate_bits(bits[:10])  # warm the JIT
    t0 = time.perf_counter()
    out = oracle.evaluate_bits(bits)
    dt = time.perf_counter() - t0
    print(f"{desc}: {dt/len(bits)*1e6:.1f} us/eval, infeasible frac {out.mean():.3f}")

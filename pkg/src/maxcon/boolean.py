"""Monotone Boolean functions on the subset cube and their influences.

A subset of n points is a vertex x of {0,1}^n and the infeasibility
indicator f(x) is a monotone Boolean function: growing a subset never
turns an infeasible fit feasible.  The largest consensus set is then
the maximum upper zero of f, and the coordinate influences

    Inf_i[f] = Pr_x[ x_i = 0 and f(x) != f(x | e_i) ]

separate outliers from inliers: under the idealised single- and
multi-structure functions built here the influence of a point outside
every structure strictly exceeds the influence of any structure member,
with closed-form values given by binomial sums.  Each complementary
pair of vertices is counted once, so this is half the symmetric flip
probability; the closed forms are exact under this normalisation and
every estimator here shares it.  Influences are estimated by Monte
Carlo under a biased product measure (each bit set with probability q)
or computed exactly by full enumeration for small n.

Functions in this module accept any "MBF-like" object: an ``n``
attribute, a call on integer bitmasks returning 0/1, and optionally a
vectorised ``evaluate_bits`` over (B, n) boolean rows (FeasibilityOracle,
IdealMBF and TabulatedMBF all provide it).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .masks import SubsetMask, coerce_mask

__all__ = [
    "IdealSpec",
    "IdealMBF",
    "TabulatedMBF",
    "InfluenceVector",
    "as_mbf",
    "ideal_mbf",
    "tabulate_mbf",
    "influence_exact",
    "influence_flip_counts",
    "influence_sampled",
    "influence_mse",
    "separation",
    "theorem1_influence",
    "theorem2_influence",
    "is_upper_zero",
    "max_upper_zero_exhaustive",
]

EXACT_MAX_N = 24
EXHAUSTIVE_MAX_N = 20
_BATCH = 8192


# ---------------------------------------------------------------------------
# MBF wrappers


class _CallableMBF:
    """Adapter giving a plain mask->0/1 callable the batch interface."""

    def __init__(self, func, n: int):
        self._func = func
        self.n = int(n)

    def __call__(self, mask: int) -> int:
        return int(self._func(int(mask)))

    def evaluate_bits(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=bool)
        out = np.empty(bits.shape[0], dtype=np.uint8)
        weights = 2 ** np.arange(self.n, dtype=object)
        for t in range(bits.shape[0]):
            out[t] = self._func(int(bits[t] @ weights))
        return out


def as_mbf(func, n: int):
    """Wrap a callable on integer masks as an MBF-like object."""
    if hasattr(func, "n") and hasattr(func, "evaluate_bits"):
        return func
    return _CallableMBF(func, n)


class TabulatedMBF:
    """Boolean function backed by its full truth table (index = mask)."""

    def __init__(self, table: np.ndarray, n: int):
        table = np.ascontiguousarray(table, dtype=np.uint8)
        if table.shape != (1 << n,):
            raise ValueError(f"table must have 2^{n} entries, got {table.shape}")
        self.table = table
        self.n = int(n)

    def __call__(self, mask: int) -> int:
        return int(self.table[int(mask)])

    def evaluate_bits(self, bits: np.ndarray) -> np.ndarray:
        return self.table[_bits_to_ints(np.asarray(bits, dtype=bool))]

    def truth_table(self) -> np.ndarray:
        return self.table


def _bits_to_ints(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[1]
    if n > 63:
        raise ValueError("integer mask conversion supports n <= 63")
    weights = (np.int64(1) << np.arange(n, dtype=np.int64))
    return bits.astype(np.int64) @ weights


def _ints_to_bits(masks: np.ndarray, n: int) -> np.ndarray:
    return (masks[:, None] >> np.arange(n, dtype=masks.dtype)) & 1 != 0


def tabulate_mbf(f, n: int | None = None, monotone: bool = True) -> TabulatedMBF:
    """Materialise the full truth table of f over {0,1}^n (n <= 24).

    With monotone=True (the default, valid for infeasibility functions)
    levels are filled bottom-up and a mask inherits f = 1 from any
    infeasible child without consulting f, so f is only evaluated on
    the boundary between the feasible down-set and its complement.
    """
    f = as_mbf(f, n if n is not None else getattr(f, "n"))
    n = f.n if n is None else int(n)
    if n > EXACT_MAX_N:
        raise ValueError(f"tabulation supports n <= {EXACT_MAX_N}, got {n}")
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    if not monotone:
        table = np.empty(size, dtype=np.uint8)
        for lo in range(0, size, _BATCH):
            chunk = masks[lo : lo + _BATCH]
            table[lo : lo + _BATCH] = f.evaluate_bits(_ints_to_bits(chunk, n))
        return TabulatedMBF(table, n)

    pc = np.bitwise_count(masks).astype(np.uint8)
    table = np.zeros(size, dtype=np.uint8)
    table[0] = f(0)
    for level in range(1, n + 1):
        idx = masks[pc == level]
        inherited = np.zeros(idx.size, dtype=bool)
        for b in range(n):
            bit = np.int64(1) << b
            has = (idx & bit) != 0
            if not np.any(has):
                continue
            inherited[has] |= table[idx[has] ^ bit] == 1
        table[idx[inherited]] = 1
        fresh = idx[~inherited]
        for lo in range(0, fresh.size, _BATCH):
            chunk = fresh[lo : lo + _BATCH]
            table[chunk] = f.evaluate_bits(_ints_to_bits(chunk, n))
    return TabulatedMBF(table, n)


# ---------------------------------------------------------------------------
# Idealised structured functions


@dataclass(frozen=True)
class IdealSpec:
    """Idealised instance: n points, fits of <= p points always succeed,
    and each structure is a member set whose subsets all fit.

    Structure sizes must exceed p, be listed in nondecreasing order,
    and two structures may share at most p points (their sub-cubes are
    disjoint above the trivial levels).
    """

    n: int
    p: int
    structures: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ValueError(f"need n >= 1 and p >= 1, got n={self.n} p={self.p}")
        if self.p >= self.n:
            raise ValueError(f"need p < n, got n={self.n} p={self.p}")
        if not self.structures:
            raise ValueError("need at least one structure")
        norm = []
        for s in self.structures:
            idx = tuple(sorted(int(i) for i in s))
            if len(set(idx)) != len(idx):
                raise ValueError(f"structure has repeated points: {s}")
            if idx and (idx[0] < 0 or idx[-1] >= self.n):
                raise ValueError(f"structure indices out of range for n={self.n}: {s}")
            if len(idx) <= self.p:
                raise ValueError(
                    f"structure size {len(idx)} must exceed p={self.p}"
                )
            norm.append(idx)
        sizes = [len(s) for s in norm]
        if sizes != sorted(sizes):
            raise ValueError(f"structure sizes must be nondecreasing, got {sizes}")
        for a in range(len(norm)):
            for b in range(a + 1, len(norm)):
                shared = len(set(norm[a]) & set(norm[b]))
                if shared > self.p:
                    raise ValueError(
                        f"structures {a} and {b} share {shared} > p={self.p} points"
                    )
        object.__setattr__(self, "structures", tuple(norm))

    @property
    def k_sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.structures)

    def member_masks(self) -> tuple[int, ...]:
        out = []
        for s in self.structures:
            bits = 0
            for i in s:
                bits |= 1 << i
            out.append(bits)
        return tuple(out)

    def membership(self, point: int) -> tuple[int, ...]:
        """Structure-membership pattern of one point (one bit per structure)."""
        if not 0 <= point < self.n:
            raise ValueError(f"point {point} out of range for n={self.n}")
        return tuple(int(point in set(s)) for s in self.structures)

    def class_indices(self, pattern) -> tuple[int, ...]:
        pattern = _coerce_pattern(pattern, len(self.structures))
        return tuple(i for i in range(self.n) if self.membership(i) == pattern)


def _coerce_pattern(pattern, k: int) -> tuple[int, ...]:
    if isinstance(pattern, str):
        if len(pattern) != k or any(c not in "01" for c in pattern):
            raise ValueError(f"pattern {pattern!r} must be a 0/1 string of length {k}")
        return tuple(int(c) for c in pattern)
    out = tuple(int(v) for v in pattern)
    if len(out) != k or any(v not in (0, 1) for v in out):
        raise ValueError(f"pattern {pattern!r} must have one 0/1 entry per structure")
    return out


class IdealMBF:
    """Infeasibility function of an IdealSpec.

    f(x) = 0 iff popcount(x) <= p or x is a subset of some member set.
    Monotone by construction.
    """

    def __init__(self, spec: IdealSpec):
        self.spec = spec
        self.n = spec.n
        self._members = spec.member_masks()
        self._table: np.ndarray | None = None

    def __call__(self, mask: int) -> int:
        mask = int(mask)
        if mask.bit_count() <= self.spec.p:
            return 0
        for member in self._members:
            if mask & ~member == 0:
                return 0
        return 1

    def evaluate_bits(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=bool)
        feasible = bits.sum(axis=1) <= self.spec.p
        for s in self.spec.structures:
            outside = np.ones(self.n, dtype=bool)
            outside[list(s)] = False
            feasible |= ~bits[:, outside].any(axis=1)
        return (~feasible).astype(np.uint8)

    def truth_table(self) -> np.ndarray:
        if self._table is None:
            if self.n > EXACT_MAX_N:
                raise ValueError(f"truth table supports n <= {EXACT_MAX_N}")
            masks = np.arange(1 << self.n, dtype=np.int64)
            feasible = np.bitwise_count(masks) <= self.spec.p
            for member in self._members:
                feasible |= (masks & ~np.int64(member)) == 0
            self._table = (~feasible).astype(np.uint8)
        return self._table


def ideal_mbf(spec: IdealSpec) -> IdealMBF:
    """The idealised infeasibility function of a structured instance."""
    return IdealMBF(spec)


# ---------------------------------------------------------------------------
# Influence vectors


@dataclass(frozen=True)
class InfluenceVector:
    """Per-point influences, exact or estimated.

    values has one entry per point; entries outside the sampling scope
    are NaN.  m/q/seed echo the estimator configuration and are None
    for exact vectors; counts carries the integer flip counts (out of
    2^n) when the vector came from full enumeration.
    """

    values: np.ndarray
    scope: SubsetMask
    m: int | None = None
    q: float | None = None
    seed: tuple[int, ...] | None = None
    counts: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.scope.n,):
            raise ValueError(
                f"values shape {values.shape} does not match n={self.scope.n}"
            )
        inside = self.scope.to_bools()
        vin = values[inside]
        if vin.size and not (
            np.all(np.isfinite(vin)) and np.all(vin >= 0.0) and np.all(vin <= 1.0)
        ):
            raise ValueError("in-scope influences must lie in [0, 1]")
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.q is not None and not 0.0 < self.q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {self.q}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.seed is not None:
            object.__setattr__(self, "seed", tuple(int(v) for v in self.seed))

    @property
    def n(self) -> int:
        return self.scope.n

    def defined_indices(self) -> tuple[int, ...]:
        return tuple(i for i in self.scope.indices() if np.isfinite(self.values[i]))

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "scope": list(self.scope.indices()),
            "m": self.m,
            "q": self.q,
            "seed": list(self.seed) if self.seed is not None else None,
            "values": [[int(i), float(self.values[i])] for i in self.defined_indices()],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "InfluenceVector":
        n = int(data["n"])
        values = np.full(n, np.nan)
        for i, v in data["values"]:
            values[int(i)] = float(v)
        seed = data.get("seed")
        return cls(
            values,
            SubsetMask.from_indices(n, data["scope"]),
            m=data.get("m"),
            q=data.get("q"),
            seed=tuple(seed) if seed is not None else None,
        )

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "value"])
            for i in self.defined_indices():
                writer.writerow([i, repr(float(self.values[i]))])

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


# ---------------------------------------------------------------------------
# Exact influence by enumeration


def influence_flip_counts(f, n: int | None = None) -> np.ndarray:
    """Exact flip-pair counts: counts[i] = #{x : x_i = 0, f(x) != f(x | e_i)}.

    Each complementary pair (x, x | e_i) is counted once, on its lower
    side.  Enumeration guard n <= 24.
    """
    f = as_mbf(f, n if n is not None else getattr(f, "n"))
    n = f.n if n is None else int(n)
    if n > EXACT_MAX_N:
        raise ValueError(f"exact influence supports n <= {EXACT_MAX_N}, got {n}")
    table_fn = getattr(f, "truth_table", None)
    table = table_fn() if table_fn is not None else tabulate_mbf(f, n, monotone=False).table
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.empty(n, dtype=np.int64)
    for i in range(n):
        bit = np.int64(1) << i
        lower = masks[(masks & bit) == 0]
        counts[i] = int(np.count_nonzero(table[lower] != table[lower | bit]))
    return counts


def influence_exact(f, n: int | None = None) -> InfluenceVector:
    """Exact influences by full enumeration (n <= 24).

    The influence of coordinate i is the probability that a uniform
    random vertex leaves bit i unset and setting it flips f, that is
    flip-pair count over 2^n.  This counts each complementary pair
    once (half the symmetric flip probability) and is the normalisation
    under which the closed forms for ideal instances are exact.
    """
    f = as_mbf(f, n if n is not None else getattr(f, "n"))
    n = f.n if n is None else int(n)
    counts = influence_flip_counts(f, n)
    values = counts / float(1 << n)
    return InfluenceVector(values, SubsetMask.all_ones(n), counts=counts)


# ---------------------------------------------------------------------------
# Sampled influence


def _seed_key(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        key = (int(seed),)
    else:
        key = tuple(int(v) for v in seed)
    if not key or any(v < 0 for v in key):
        raise ValueError(f"seed must be a nonnegative int or tuple, got {seed!r}")
    return key


def influence_sampled(
    f,
    scope,
    targets=None,
    m: int = 1000,
    q: float = 0.5,
    seed=0,
    shortcut: bool = True,
) -> InfluenceVector:
    """Monte Carlo influence estimates under the biased product measure.

    Each target index gets its own stream of m masks, seeded by
    (seed..., target), with every in-scope bit independently 1 with
    probability q and out-of-scope bits pinned to 0.  The estimate is
    half the flip frequency of f when the target bit is toggled; the
    halving matches the pair-counting normalisation of influence_exact,
    so at q = 0.5 the estimator is unbiased for the exact influence.

    shortcut=True skips the second evaluation whenever monotonicity
    already fixes it (clearing a bit of a feasible mask stays feasible;
    setting a bit of an infeasible mask stays infeasible).  Estimates
    are identical with the shortcut off; only the work changes.  Leave
    it on only for monotone f.
    """
    n = int(getattr(f, "n"))
    f = as_mbf(f, n)
    scope = coerce_mask(scope, n)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must be in (0, 1), got {q}")
    key = _seed_key(seed)
    scope_idx = np.fromiter(scope.indices(), dtype=np.int64, count=scope.popcount)
    if scope_idx.size == 0:
        raise ValueError("scope must contain at least one point")
    if targets is None:
        target_list = [int(i) for i in scope_idx]
    else:
        target_list = sorted({int(i) for i in targets})
        for i in target_list:
            if i not in scope:
                raise ValueError(f"target {i} is not in scope")

    values = np.full(n, np.nan)
    for i in target_list:
        rng = np.random.default_rng([*key, i])
        draws = rng.random((m, scope_idx.size)) < q
        bits = np.zeros((m, n), dtype=bool)
        bits[:, scope_idx] = draws
        fx = f.evaluate_bits(bits)
        xi = bits[:, i]
        if shortcut:
            need = (fx != 0) == xi
        else:
            need = np.ones(m, dtype=bool)
        flips = np.zeros(m, dtype=bool)
        if np.any(need):
            toggled = bits[need]
            toggled[:, i] = ~toggled[:, i]
            f2 = f.evaluate_bits(toggled)
            flips[need] = f2 != fx[need]
        values[i] = flips.sum() / (2 * m)

    out_scope = scope if targets is None else SubsetMask.from_indices(n, target_list)
    return InfluenceVector(values, out_scope, m=m, q=q, seed=key)


# ---------------------------------------------------------------------------
# Summary statistics


def influence_mse(estimate: InfluenceVector, exact: InfluenceVector) -> float:
    """Mean squared error between two vectors over their common scope."""
    idx = estimate.defined_indices()
    if estimate.n != exact.n:
        raise ValueError(f"vectors over different n: {estimate.n} vs {exact.n}")
    if not idx or not set(idx) <= set(exact.defined_indices()):
        raise ValueError("estimate indices must be defined in the exact vector")
    ids = np.asarray(idx, dtype=np.int64)
    diff = estimate.values[ids] - exact.values[ids]
    return float(np.mean(diff * diff))


def separation(influences: InfluenceVector, labels) -> float:
    """Minimum outlier influence minus minimum inlier influence.

    labels follow the dataset convention: 0 marks an outlier, anything
    else an inlier.  Only points with a defined influence participate.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (influences.n,):
        raise ValueError(f"labels shape {labels.shape} does not match n={influences.n}")
    ids = np.asarray(influences.defined_indices(), dtype=np.int64)
    out_vals = influences.values[ids[labels[ids] == 0]]
    in_vals = influences.values[ids[labels[ids] != 0]]
    if out_vals.size == 0 or in_vals.size == 0:
        raise ValueError("separation needs at least one inlier and one outlier in scope")
    return float(out_vals.min() - in_vals.min())


# ---------------------------------------------------------------------------
# Closed-form influences for ideal instances


def theorem1_influence(n: int, p: int, k: int, inlier: bool) -> Fraction:
    """Exact influence in the single-structure ideal instance.

    The structure has k members; a member's influence is
    (C(n-1,p) - C(k-1,p)) / 2^n and a non-member's is
    (C(n-1,p) + sum_{l=p+1}^{k} C(k,l)) / 2^n.  With k = n there are no
    non-members and that branch is undefined.
    """
    if n < 1 or p < 1 or not p < k <= n:
        raise ValueError(f"need 1 <= p < k <= n, got n={n} p={p} k={k}")
    if inlier:
        num = math.comb(n - 1, p) - math.comb(k - 1, p)
    else:
        if k == n:
            raise ValueError("k = n leaves no point outside the structure")
        num = math.comb(n - 1, p) + sum(math.comb(k, l) for l in range(p + 1, k + 1))
    return Fraction(num, 1 << n)


def theorem2_influence(spec: IdealSpec, pattern) -> Fraction:
    """Exact influence of a membership class in a multi-structure instance.

    pattern has one 0/1 entry per structure; all points sharing it form
    one class with common influence

        ( C(n-1,p) + sum_{r: c_r=0} sum_{l=p+1}^{k_r} C(k_r,l)
                   - sum_{r: c_r=1} C(k_r-1,p) ) / 2^n.

    An empty class has no influence and raises.
    """
    pattern = _coerce_pattern(pattern, len(spec.structures))
    if not spec.class_indices(pattern):
        raise ValueError(f"membership class {pattern} is empty")
    num = math.comb(spec.n - 1, spec.p)
    for c, k in zip(pattern, spec.k_sizes):
        if c:
            num -= math.comb(k - 1, spec.p)
        else:
            num += sum(math.comb(k, l) for l in range(spec.p + 1, k + 1))
    return Fraction(num, 1 << spec.n)


# ---------------------------------------------------------------------------
# Upper zeros


def is_upper_zero(f, mask) -> bool:
    """True iff f(mask) = 0 and setting any single unset bit gives 1."""
    n = int(getattr(f, "n"))
    mask = coerce_mask(mask, n)
    if f(mask.bits) != 0:
        return False
    for i in range(n):
        if i not in mask and f(mask.bits | (1 << i)) == 0:
            return False
    return True


def max_upper_zero_exhaustive(f, n: int | None = None) -> SubsetMask:
    """A maximum-popcount zero of f by exhaustive scan (n <= 20).

    Levels are scanned from the top of the cube downward, so the first
    zero found maximises popcount; within the level masks are visited
    in ascending integer order, which fixes ties at the smallest
    encoding.  For monotone f the result is the maximum upper zero.
    """
    f = as_mbf(f, n if n is not None else getattr(f, "n"))
    n = f.n if n is None else int(n)
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive search supports n <= {EXHAUSTIVE_MAX_N}, got {n}")
    masks = np.arange(1 << n, dtype=np.int64)
    pc = np.bitwise_count(masks).astype(np.int64)
    for level in range(n, -1, -1):
        idx = masks[pc == level]
        for lo in range(0, idx.size, _BATCH):
            chunk = idx[lo : lo + _BATCH]
            vals = f.evaluate_bits(_ints_to_bits(chunk, n))
            zeros = np.flatnonzero(vals == 0)
            if zeros.size:
                return SubsetMask(n, int(chunk[zeros[0]]))
    raise ValueError("function has no zero anywhere on the cube")

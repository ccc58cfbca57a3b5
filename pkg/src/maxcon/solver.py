"""Greedy consensus maximisation guided by influence estimates.

The driver walks down the subset cube from the all-ones vertex: while
the current subset is infeasible it fits the minmax model, estimates
the influence of each basis point on the infeasibility function, and
removes the point with the largest estimate (the most outlier-like,
since removing it is most likely to flip infeasible subsets feasible).
Once feasible, a local expansion pass adds back any single point that
keeps the subset feasible, so the returned subset is a certified upper
zero of the infeasibility function.

Ablation variants isolate the design choices: nB re-estimates over all
remaining points instead of only the basis, nR estimates once up front
and removes in descending order, nL skips the expansion.  Plain and
locally-optimised RANSAC baselines share the result type so runs are
directly comparable.

Termination needs no special case: subsets of at most p points are
feasible by convention, so the removal loop ends at that level at the
latest, and expansion only grows a feasible subset.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .boolean import influence_sampled
from .feasibility import FeasibilityOracle, feasibility_threshold, minmax_solve
from .masks import SubsetMask, coerce_mask
from .model import Dataset, ModelParams, Tolerance

__all__ = [
    "VARIANTS",
    "MaxConConfig",
    "IterationRecord",
    "MaxConResult",
    "mbf_maxcon",
    "mbf_maxcon_variant",
    "local_expansion",
    "ransac",
    "lo_ransac",
    "timing_stripped",
]

VARIANTS = ("full", "nR", "nB", "nL")

DEFAULT_M = 1000
Q_FLOOR = 0.1
Q_CEIL_RECOMMENDED = 0.3


@dataclass(frozen=True)
class MaxConConfig:
    """Solver configuration.

    q = None resolves per dataset to max((p+1)/n, 0.1), the lower end
    of the recommended band [(p+1)/n, 0.3]; an explicit q outside that
    band warns but runs.  local_expansion applies to every variant
    except nL, which exists to measure running without it.
    """

    epsilon: Tolerance
    m: int = DEFAULT_M
    q: float | None = None
    seed: int = 0
    variant: str = "full"
    local_expansion: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", Tolerance.coerce(self.epsilon))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "seed", int(self.seed))
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.q is not None:
            q = float(self.q)
            if not 0.0 < q < 1.0:
                raise ValueError(f"q must be in (0, 1), got {self.q}")
            object.__setattr__(self, "q", q)
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    def resolved_q(self, dataset: Dataset) -> float:
        band_low = (dataset.p + 1) / dataset.n
        if self.q is None:
            q = max(band_low, Q_FLOOR)
            if q >= 1.0:
                # n = p+1 leaves no valid default; fall back to the centre
                q = 0.5
        else:
            q = self.q
        if band_low <= Q_CEIL_RECOMMENDED and not band_low <= q <= Q_CEIL_RECOMMENDED:
            warnings.warn(
                f"q={q:g} is outside the recommended band "
                f"[{band_low:g}, {Q_CEIL_RECOMMENDED}] for n={dataset.n}, p={dataset.p}",
                stacklevel=2,
            )
        return q

    def to_json_dict(self, resolved_q: float | None = None) -> dict:
        return {
            "epsilon": self.epsilon.epsilon,
            "m": self.m,
            "q": resolved_q if resolved_q is not None else self.q,
            "seed": self.seed,
            "variant": self.variant,
            "local_expansion": self.local_expansion,
        }


@dataclass(frozen=True)
class IterationRecord:
    """One removal step: who was removed and on what evidence.

    influences pairs (index, estimate) for the estimation targets of
    this step; nR estimates once, so only its first record carries
    them.  oracle_calls is the cumulative count when the step ended.
    """

    iteration: int
    removed: int
    basis: tuple[int, ...]
    targets: tuple[int, ...]
    influences: tuple[tuple[int, float], ...]
    oracle_calls: int
    wall_time_s: float

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "removed": self.removed,
            "basis": list(self.basis),
            "targets": list(self.targets),
            "influences": [[i, v] for i, v in self.influences],
            "oracle_calls": self.oracle_calls,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "IterationRecord":
        return cls(
            iteration=int(data["iteration"]),
            removed=int(data["removed"]),
            basis=tuple(int(i) for i in data["basis"]),
            targets=tuple(int(i) for i in data["targets"]),
            influences=tuple((int(i), float(v)) for i, v in data["influences"]),
            oracle_calls=int(data["oracle_calls"]),
            wall_time_s=float(data["wall_time_s"]),
        )


@dataclass(frozen=True)
class MaxConResult:
    """Final consensus with the evidence trail.

    mask is feasible; certified_upper_zero is True iff every single
    unset point was checked and none keeps the subset feasible.  theta
    and g come from a minmax refit on the final mask, so g is the
    exact maximum residual of theta over the consensus.
    """

    mask: SubsetMask
    theta: ModelParams
    g: float
    consensus_size: int
    certified_upper_zero: bool
    oracle_calls: int
    wall_time_s: float
    trace: tuple[IterationRecord, ...]
    expanded: tuple[int, ...]
    config: dict

    def to_json_dict(self) -> dict:
        return {
            "n": self.mask.n,
            "mask": list(self.mask.indices()),
            "theta": [float(v) for v in self.theta.theta],
            "g": self.g,
            "consensus_size": self.consensus_size,
            "certified_upper_zero": self.certified_upper_zero,
            "oracle_calls": self.oracle_calls,
            "wall_time_s": self.wall_time_s,
            "trace": [rec.to_json_dict() for rec in self.trace],
            "expanded": list(self.expanded),
            "config": dict(self.config),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MaxConResult":
        return cls(
            mask=SubsetMask.from_indices(int(data["n"]), data["mask"]),
            theta=ModelParams(np.asarray(data["theta"], dtype=np.float64)),
            g=float(data["g"]),
            consensus_size=int(data["consensus_size"]),
            certified_upper_zero=bool(data["certified_upper_zero"]),
            oracle_calls=int(data["oracle_calls"]),
            wall_time_s=float(data["wall_time_s"]),
            trace=tuple(IterationRecord.from_json_dict(r) for r in data["trace"]),
            expanded=tuple(int(i) for i in data["expanded"]),
            config=dict(data["config"]),
        )


def timing_stripped(value):
    """Deep copy of a JSON-like value with every wall_time_s key removed.

    Two runs from the same configuration agree on everything except
    timing; comparisons use this projection.
    """
    if isinstance(value, dict):
        return {k: timing_stripped(v) for k, v in value.items() if k != "wall_time_s"}
    if isinstance(value, list):
        return [timing_stripped(v) for v in value]
    return value


# ---------------------------------------------------------------------------
# Core passes


def _influence_pairs(values: np.ndarray, targets) -> tuple[tuple[int, float], ...]:
    return tuple((int(i), float(values[i])) for i in targets)


def _argmax_target(values: np.ndarray, targets) -> int:
    # targets ascending, np.argmax takes the first maximum: ties go to
    # the lowest index
    vals = values[np.asarray(targets, dtype=np.int64)]
    return int(targets[int(np.argmax(vals))])


def _greedy_pass(dataset, cfg, oracle, q):
    """Remove the argmax-influence point until feasible (full, nB, nL)."""
    mask = SubsetMask.all_ones(dataset.n)
    trace = []
    iteration = 0
    while oracle(mask.bits) == 1:
        t0 = time.perf_counter()
        if cfg.variant == "nB":
            basis: tuple[int, ...] = ()
            targets = mask.indices()
        else:
            basis = minmax_solve(dataset, mask).basis
            targets = basis
        est = influence_sampled(
            oracle, mask, targets=targets, m=cfg.m, q=q, seed=(cfg.seed, iteration)
        )
        removed = _argmax_target(est.values, targets)
        mask = mask.without_bit(removed)
        trace.append(
            IterationRecord(
                iteration=iteration,
                removed=removed,
                basis=basis,
                targets=tuple(targets),
                influences=_influence_pairs(est.values, targets),
                oracle_calls=oracle.calls,
                wall_time_s=time.perf_counter() - t0,
            )
        )
        iteration += 1
    return mask, trace


def _single_pass(dataset, cfg, oracle, q):
    """Estimate once on the full set, remove in descending order (nR)."""
    mask = SubsetMask.all_ones(dataset.n)
    trace = []
    if oracle(mask.bits) == 0:
        return mask, trace
    t0 = time.perf_counter()
    est = influence_sampled(oracle, mask, m=cfg.m, q=q, seed=(cfg.seed, 0))
    # stable sort on the negated values: ties removed lowest index first
    order = np.argsort(-est.values, kind="stable")
    all_pairs = _influence_pairs(est.values, range(dataset.n))
    for iteration, removed in enumerate(int(i) for i in order):
        mask = mask.without_bit(removed)
        feasible_now = oracle(mask.bits) == 0
        trace.append(
            IterationRecord(
                iteration=iteration,
                removed=removed,
                basis=(),
                targets=tuple(range(dataset.n)) if iteration == 0 else (),
                influences=all_pairs if iteration == 0 else (),
                oracle_calls=oracle.calls,
                wall_time_s=time.perf_counter() - t0,
            )
        )
        t0 = time.perf_counter()
        if feasible_now:
            break
    return mask, trace


def _expand(oracle: FeasibilityOracle, mask: SubsetMask):
    """Ascending scan; accept the first feasible addition and restart.

    The terminating scan visits every unset bit without acceptance, so
    the output is a certified upper zero.
    """
    n = oracle.n
    added = []
    i = 0
    while i < n:
        if i not in mask and oracle(mask.bits | (1 << i)) == 0:
            mask = mask.with_bit(i)
            added.append(i)
            i = 0
            continue
        i += 1
    return mask, added


def _certify(oracle: FeasibilityOracle, mask: SubsetMask) -> bool:
    """True iff no single-point addition keeps the mask feasible."""
    for i in range(oracle.n):
        if i not in mask and oracle(mask.bits | (1 << i)) == 0:
            return False
    return True


def local_expansion(dataset: Dataset, tol, mask) -> SubsetMask:
    """Grow a feasible subset into an upper zero by single-point additions.

    Scans unset bits in ascending order, accepts the first addition
    that stays feasible, restarts; stops when a full scan accepts
    nothing.  The input mask must be feasible.
    """
    mask = coerce_mask(mask, dataset.n)
    oracle = FeasibilityOracle(dataset, Tolerance.coerce(tol))
    if oracle(mask.bits) == 1:
        raise ValueError("local expansion requires a feasible input mask")
    return _expand(oracle, mask)[0]


# ---------------------------------------------------------------------------
# Drivers


def mbf_maxcon_variant(dataset: Dataset, config: MaxConConfig) -> MaxConResult:
    """Run the variant selected by config.variant (full, nR, nB, nL)."""
    t_start = time.perf_counter()
    q = config.resolved_q(dataset)
    oracle = FeasibilityOracle(dataset, config.epsilon)
    if config.variant == "nR":
        mask, trace = _single_pass(dataset, config, oracle, q)
    else:
        mask, trace = _greedy_pass(dataset, config, oracle, q)

    expand_on = config.local_expansion and config.variant != "nL"
    expanded: tuple[int, ...] = ()
    if expand_on:
        mask, added = _expand(oracle, mask)
        expanded = tuple(added)
        certified = True
    else:
        certified = _certify(oracle, mask)

    fit = minmax_solve(dataset, mask)
    echo = config.to_json_dict(resolved_q=q)
    echo["local_expansion"] = expand_on
    return MaxConResult(
        mask=mask,
        theta=ModelParams(fit.theta),
        g=fit.g,
        consensus_size=mask.popcount,
        certified_upper_zero=certified,
        oracle_calls=oracle.calls,
        wall_time_s=time.perf_counter() - t_start,
        trace=tuple(trace),
        expanded=expanded,
        config=echo,
    )


def mbf_maxcon(dataset: Dataset, config: MaxConConfig) -> MaxConResult:
    """Basis-targeted greedy removal plus local expansion.

    Equivalent to mbf_maxcon_variant with variant="full"; the variant
    field of config is ignored here.
    """
    if config.variant != "full":
        config = replace(config, variant="full")
    return mbf_maxcon_variant(dataset, config)


# ---------------------------------------------------------------------------
# RANSAC baselines


def _local_optimise(dataset, thr, sel, cnt, theta):
    """Iterated minmax refit on the current consensus until it stops growing."""
    while True:
        fit = minmax_solve(dataset, SubsetMask.from_bools(sel))
        r = np.abs(dataset.features @ fit.theta - dataset.targets)
        new_sel = r <= thr
        new_cnt = int(new_sel.sum())
        if new_cnt > cnt:
            sel, cnt, theta = new_sel, new_cnt, fit.theta
        else:
            return sel, cnt, theta


def _ransac_impl(dataset, tol, iterations, seed, refit):
    t_start = time.perf_counter()
    tolc = Tolerance.coerce(tol)
    iterations = int(iterations)
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    n, p = dataset.n, dataset.p
    if n < p:
        raise ValueError(f"need at least p={p} points to hypothesise, got n={n}")
    thr = feasibility_threshold(tolc)
    X, y = dataset.features, dataset.targets
    rng = np.random.default_rng(int(seed))
    best_cnt = 0
    best_sel = np.zeros(n, dtype=bool)
    for _ in range(iterations):
        pick = rng.choice(n, size=p, replace=False)
        try:
            theta = np.linalg.solve(X[pick], y[pick])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(theta)):
            continue
        r = np.abs(X @ theta - y)
        sel = r <= thr
        cnt = int(sel.sum())
        if cnt > best_cnt:
            if refit:
                sel, cnt, theta = _local_optimise(dataset, thr, sel, cnt, theta)
            best_cnt, best_sel = cnt, sel

    mask = SubsetMask.from_bools(best_sel)
    oracle = FeasibilityOracle(dataset, tolc)
    certified = _certify(oracle, mask)
    fit = minmax_solve(dataset, mask)
    return MaxConResult(
        mask=mask,
        theta=ModelParams(fit.theta),
        g=fit.g,
        consensus_size=mask.popcount,
        certified_upper_zero=certified,
        oracle_calls=oracle.calls,
        wall_time_s=time.perf_counter() - t_start,
        trace=(),
        expanded=(),
        config={
            "epsilon": tolc.epsilon,
            "iterations": iterations,
            "seed": int(seed),
            "variant": "lo_ransac" if refit else "ransac",
        },
    )


def ransac(dataset: Dataset, tol, iterations: int, seed: int = 0) -> MaxConResult:
    """Hypothesise-and-test baseline: p-point exact fits, best consensus wins.

    Singular samples are skipped; the draw stream is consumed either
    way, so runs are deterministic in seed.  Ties keep the earliest
    hypothesis.
    """
    return _ransac_impl(dataset, tol, iterations, seed, refit=False)


def lo_ransac(dataset: Dataset, tol, iterations: int, seed: int = 0) -> MaxConResult:
    """RANSAC with local optimisation on every new best.

    Each improvement triggers iterated minmax refits over the running
    consensus until it stops growing; the incumbent is never discarded,
    so for equal seeds the result is at least as large as ransac's.
    """
    return _ransac_impl(dataset, tol, iterations, seed, refit=True)

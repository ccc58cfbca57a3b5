"""Exact minmax fits and the subset infeasibility function.

For a subset S of the data, minmax_solve computes

    g(S) = min over theta of  max_{i in S} |x_i . theta - y_i|

together with an optimal theta and a basis: at most p+1 points of S
whose own minmax value already equals g(S).  The induced Boolean
function

    f(S) = 1  iff  g(S) > epsilon + 1e-9 * max(1, epsilon)

is monotone under set inclusion (adding points never shrinks the
restricted maximum), which is what the influence machinery exploits.
Subsets of at most p points are feasible by convention: they are
interpolation problems, mirroring the trivial bottom levels of the
cube.

FeasibilityOracle is the counting wrapper the solver and benchmarks
share: one LP decision per call, a thread-safe tally, and a vectorised
batch path for the samplers.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import _simplex
from .masks import SubsetMask, coerce_mask
from .model import Dataset, Tolerance

__all__ = [
    "FeasibilityOutcome",
    "minmax_solve",
    "infeasibility",
    "is_feasible",
    "FeasibilityOracle",
    "feasibility_threshold",
]

BASIS_TIE_RTOL = 1e-7
SOLVE_RTOL = 1e-9


def feasibility_threshold(tol) -> float:
    """The decision threshold: epsilon plus relative numerical slack."""
    eps = Tolerance.coerce(tol).epsilon
    return eps + 1e-9 * max(1.0, eps)


@dataclass(frozen=True)
class FeasibilityOutcome:
    """Result of one minmax fit.

    g is the minmax residual, theta a minimiser, basis a sorted tuple
    of at most p+1 point indices whose restricted fit already attains
    g.  degenerate marks numerically rank-deficient subsets (or an
    interpolation convention applied to an inconsistent system); it is
    informational and never raised.
    """

    g: float
    theta: np.ndarray
    basis: tuple[int, ...]
    degenerate: bool = False


def _scaled_arrays(dataset: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Column/target scaling shared by every query path on a dataset.

    All paths must use the same scaling so that scalar and batch
    queries reach bit-identical verdicts.
    """
    X = dataset.features
    col = np.maximum(1.0, np.abs(X).max(axis=0))
    ysc = max(1.0, float(np.abs(dataset.targets).max()))
    Xs = np.ascontiguousarray(X / col)
    ys = np.ascontiguousarray(dataset.targets / ysc)
    return Xs, ys, col, ysc


def _interpolation_outcome(dataset: Dataset, mask: SubsetMask) -> FeasibilityOutcome:
    idx = np.fromiter(mask.indices(), dtype=np.int64, count=mask.popcount)
    if idx.size == 0:
        return FeasibilityOutcome(0.0, np.zeros(dataset.p), (), False)
    Xs = dataset.features[idx]
    ys = dataset.targets[idx]
    theta, _, rank, _ = np.linalg.lstsq(Xs, ys, rcond=None)
    scale = max(1.0, float(np.abs(ys).max()))
    inconsistent = float(np.abs(Xs @ theta - ys).max()) > 1e-8 * scale
    degenerate = rank < idx.size or inconsistent
    return FeasibilityOutcome(0.0, theta, tuple(int(i) for i in idx), degenerate)


def _kernel_full_solve(Xs, ys, rows, ysc, col):
    """Run the kernel to optimality with a Bland retry; never raises."""
    status, g, theta_s, support, nsup, _ = _simplex.cheb_solve(
        Xs[rows], ys[rows], -1.0, False
    )
    if status != _simplex.OPTIMAL:
        status, g, theta_s, support, nsup, _ = _simplex.cheb_solve(
            Xs[rows], ys[rows], -1.0, True
        )
    theta = theta_s * ysc / col
    return status, float(g) * ysc, theta, [int(rows[support[t]]) for t in range(nsup)]


def minmax_solve(dataset: Dataset, mask) -> FeasibilityOutcome:
    """Exact minmax fit over the masked subset.

    Subsets with popcount <= p return g = 0 with an interpolating theta
    and the subset itself as basis.  Larger subsets are solved exactly;
    the basis is the LP support, widened/reduced when residual ties
    make the active set ambiguous.
    """
    mask = coerce_mask(mask, dataset.n)
    p = dataset.p
    if mask.popcount <= p:
        return _interpolation_outcome(dataset, mask)

    Xs, ys, col, ysc = _scaled_arrays(dataset)
    rows = np.fromiter(mask.indices(), dtype=np.int64, count=mask.popcount)
    status, g, theta, support = _kernel_full_solve(Xs, ys, rows, ysc, col)

    if status != _simplex.OPTIMAL:
        # Pathological stall: fall back to the least-squares fit and
        # report its worst residual so the caller still gets a usable,
        # flagged outcome.
        theta, _, _, _ = np.linalg.lstsq(dataset.features[rows], dataset.targets[rows], rcond=None)
        res = np.abs(dataset.features[rows] @ theta - dataset.targets[rows])
        return FeasibilityOutcome(float(res.max()), theta, tuple(int(i) for i in rows), True)

    res = np.abs(dataset.features[rows] @ theta - dataset.targets[rows])
    tie = BASIS_TIE_RTOL * max(1.0, g)
    active = rows[np.abs(res - g) <= tie]

    degenerate = bool(np.linalg.matrix_rank(dataset.features[rows]) < p)
    basis: list[int]
    if active.size <= p + 1:
        basis = [int(i) for i in active]
    elif g <= 1e-12 * ysc:
        # Everything interpolates; any p+1 active points attain g = 0.
        basis = [int(i) for i in active[: p + 1]]
    else:
        basis = _reduce_basis(dataset, Xs, ys, col, ysc, active, support, g)
    if g > 1e-12 * ysc and len(basis) < p + 1:
        # Degenerate optima can be supported by fewer than p+1 points.
        # Every masked point has residual <= g under theta, so padding
        # keeps the restricted minmax at exactly g while lifting the
        # basis above the popcount <= p interpolation convention.
        have = set(basis)
        for pool in (active, rows):
            for i in pool:
                if len(basis) >= p + 1:
                    break
                if int(i) not in have:
                    basis.append(int(i))
                    have.add(int(i))
    if len(basis) > p + 1:
        degenerate = True
    return FeasibilityOutcome(float(g), theta, tuple(sorted(basis)), degenerate)


def _reduce_basis(dataset, Xs, ys, col, ysc, active, support, g) -> list[int]:
    """Shrink a tied active set to <= p+1 points that still attain g."""
    p = dataset.p
    tol = SOLVE_RTOL * max(1.0, g)
    support = sorted(support)
    if 0 < len(support) <= p + 1:
        rows = np.asarray(support, dtype=np.int64)
        status, g_sup, _, _ = _kernel_full_solve(Xs, ys, rows, ysc, col)
        if status == _simplex.OPTIMAL and abs(g_sup - g) <= tol:
            return list(support)
    # Literal drop-and-resolve reduction over the tied active set.
    keep = [int(i) for i in active]
    progress = True
    while len(keep) > p + 1 and progress:
        progress = False
        for cand in list(keep):
            trial = [i for i in keep if i != cand]
            rows = np.asarray(trial, dtype=np.int64)
            if rows.size <= p:
                continue
            status, g_trial, _, _ = _kernel_full_solve(Xs, ys, rows, ysc, col)
            if status == _simplex.OPTIMAL and abs(g_trial - g) <= tol:
                keep = trial
                progress = True
                break
    return keep


def infeasibility(dataset: Dataset, mask, tol) -> int:
    """Boolean infeasibility value of a subset: 1 infeasible, 0 feasible."""
    return FeasibilityOracle(dataset, tol).value(mask)


def is_feasible(dataset: Dataset, mask, tol) -> bool:
    """True iff the masked subset admits a model within tolerance."""
    return infeasibility(dataset, mask, tol) == 0


class FeasibilityOracle:
    """Counting infeasibility oracle over one dataset and tolerance.

    Callable on integer masks (and SubsetMask) returning 0/1; also
    exposes a batch path over boolean row-masks.  Every verdict
    increments a thread-safe call counter, one per mask queried.
    """

    def __init__(self, dataset: Dataset, tol):
        self.dataset = dataset
        self.tol = Tolerance.coerce(tol)
        Xs, ys, col, ysc = _scaled_arrays(dataset)
        self._Xs = Xs
        self._ys = ys
        self._col = col
        self._ysc = ysc
        self._thr = feasibility_threshold(self.tol) / ysc
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def _count(self, k: int) -> None:
        with self._lock:
            self._calls += k

    def __call__(self, mask) -> int:
        return self.value(mask)

    def value(self, mask) -> int:
        mask = coerce_mask(mask, self.dataset.n)
        self._count(1)
        return self._decide_rows(np.fromiter(mask.indices(), dtype=np.int64, count=mask.popcount))

    def is_feasible(self, mask) -> bool:
        return self.value(mask) == 0

    def _decide_rows(self, rows: np.ndarray) -> int:
        if rows.size <= self.dataset.p:
            return 0
        status, g, _, _, _, _ = _simplex.cheb_solve(
            self._Xs[rows], self._ys[rows], self._thr, False
        )
        if status == _simplex.EARLY_FEASIBLE:
            return 0
        if status == _simplex.EARLY_INFEASIBLE:
            return 1
        if status == _simplex.OPTIMAL:
            return 1 if g > self._thr else 0
        status, g, _, _ = _kernel_full_solve(self._Xs, self._ys, rows, 1.0, np.ones(self.dataset.p))
        if status == _simplex.OPTIMAL:
            return 1 if g > self._thr else 0
        # Stalled both ways: decide by the flagged fallback solve.
        outcome = minmax_solve(self.dataset, SubsetMask.from_indices(self.dataset.n, rows))
        return 1 if outcome.g > feasibility_threshold(self.tol) else 0

    def evaluate_bits(self, bits: np.ndarray) -> np.ndarray:
        """Verdicts for a (B, n) boolean mask batch; counts B calls."""
        bits = np.ascontiguousarray(bits, dtype=np.bool_)
        if bits.ndim != 2 or bits.shape[1] != self.dataset.n:
            raise ValueError(f"bits must be (B, {self.dataset.n}) boolean")
        out = np.empty(bits.shape[0], dtype=np.uint8)
        _simplex.feas_batch(self._Xs, self._ys, bits, self._thr, out)
        undecided = np.flatnonzero(out == _simplex.UNDECIDED)
        for t in undecided:
            out[t] = self._decide_rows(np.flatnonzero(bits[t]).astype(np.int64))
        self._count(bits.shape[0])
        return out

"""Bit-vector subset masks over a fixed ground set of n points.

A mask is the vertex of the Boolean cube that a subset occupies: bit i
set means point i is in the subset.  Integers carry the bits (LSB is
point 0), which keeps xor/or tricks cheap and hashable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SubsetMask"]


@dataclass(frozen=True, slots=True)
class SubsetMask:
    """Immutable subset-of-n-points mask.

    Parameters
    ----------
    n : int
        Ground set size.
    bits : int
        Bitmask with bit i set iff point i is in the subset.
    """

    n: int
    bits: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"mask needs n >= 1, got n={self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"bits {self.bits:#x} out of range for n={self.n}")

    # -- constructors -------------------------------------------------

    @classmethod
    def all_ones(cls, n: int) -> "SubsetMask":
        return cls(n, (1 << n) - 1)

    @classmethod
    def empty(cls, n: int) -> "SubsetMask":
        return cls(n, 0)

    @classmethod
    def from_indices(cls, n: int, indices) -> "SubsetMask":
        bits = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range for n={n}")
            bits |= 1 << i
        return cls(n, bits)

    @classmethod
    def from_string(cls, text: str) -> "SubsetMask":
        """Parse ``"11010"`` style masks; leftmost character is point 0."""
        if not text or any(c not in "01" for c in text):
            raise ValueError(f"mask string must be nonempty 0/1, got {text!r}")
        bits = 0
        for pos, c in enumerate(text):
            if c == "1":
                bits |= 1 << pos
        return cls(len(text), bits)

    @classmethod
    def from_bools(cls, flags) -> "SubsetMask":
        arr = np.asarray(flags, dtype=bool)
        if arr.ndim != 1:
            raise ValueError("boolean mask must be 1-D")
        bits = 0
        for i in np.flatnonzero(arr):
            bits |= 1 << int(i)
        return cls(int(arr.size), bits)

    # -- views ---------------------------------------------------------

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.bits >> i & 1)

    def to_bools(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        for i in range(self.n):
            if self.bits >> i & 1:
                out[i] = True
        return out

    def to_string(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.n))

    def __str__(self) -> str:
        return self.to_string()

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.n and bool(self.bits >> index & 1)

    # -- algebra ---------------------------------------------------------

    def with_bit(self, index: int) -> "SubsetMask":
        self._check_index(index)
        return SubsetMask(self.n, self.bits | (1 << index))

    def without_bit(self, index: int) -> "SubsetMask":
        self._check_index(index)
        return SubsetMask(self.n, self.bits & ~(1 << index))

    def flipped(self, index: int) -> "SubsetMask":
        self._check_index(index)
        return SubsetMask(self.n, self.bits ^ (1 << index))

    def is_subset_of(self, other: "SubsetMask") -> bool:
        self._check_same_ground(other)
        return self.bits & ~other.bits == 0

    def union(self, other: "SubsetMask") -> "SubsetMask":
        self._check_same_ground(other)
        return SubsetMask(self.n, self.bits | other.bits)

    def intersection(self, other: "SubsetMask") -> "SubsetMask":
        self._check_same_ground(other)
        return SubsetMask(self.n, self.bits & other.bits)

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.n:
            raise ValueError(f"index {index} out of range for n={self.n}")

    def _check_same_ground(self, other: "SubsetMask") -> None:
        if self.n != other.n:
            raise ValueError(f"ground sets differ: {self.n} vs {other.n}")


def coerce_mask(mask, n: int) -> SubsetMask:
    """Accept SubsetMask, int bits, a 0/1 string, or an iterable of indices."""
    if isinstance(mask, SubsetMask):
        if mask.n != n:
            raise ValueError(f"mask is over {mask.n} points, expected {n}")
        return mask
    if isinstance(mask, (int, np.integer)):
        return SubsetMask(n, int(mask))
    if isinstance(mask, str):
        out = SubsetMask.from_string(mask)
        if out.n != n:
            raise ValueError(f"mask string has {out.n} positions, expected {n}")
        return out
    return SubsetMask.from_indices(n, mask)

"""Sign vectors, Hamming helpers, Gray-code indexing, and the partition tree
used by the cell-based sign search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGN_DTYPE = np.int8


def as_sign_array(values) -> np.ndarray:
    """Coerce to a 1-D int8 array of +1/-1 entries.

    Raises ValueError if any entry is not exactly +1 or -1.
    """
    if isinstance(values, SignVector):
        return values.bits
    arr = np.atleast_1d(np.asarray(values))
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sign vector, got shape {arr.shape}")
    out = arr.astype(SIGN_DTYPE)
    if not np.all((out == 1) | (out == -1)) or not np.all(arr == out):
        raise ValueError("sign vector entries must be exactly +1 or -1")
    return out


class SignVector:
    """Fixed-length vector with entries in {-1, +1}.

    Mutable: flip_range negates a contiguous slice in place, which is the
    only mutation the search algorithms need.
    """

    __slots__ = ("bits",)

    def __init__(self, values):
        self.bits = as_sign_array(values).copy()

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SignVector":
        if n < 1:
            raise ValueError("n must be >= 1")
        return cls(rng.choice(np.array([-1, 1], dtype=SIGN_DTYPE), size=n))

    @classmethod
    def all_minus(cls, n: int) -> "SignVector":
        return cls(np.full(n, -1, dtype=SIGN_DTYPE))

    @classmethod
    def all_plus(cls, n: int) -> "SignVector":
        return cls(np.full(n, 1, dtype=SIGN_DTYPE))

    @property
    def n(self) -> int:
        return self.bits.size

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        if isinstance(other, SignVector):
            other = other.bits
        other = np.asarray(other)
        return self.bits.shape == other.shape and bool(np.all(self.bits == other))

    def __repr__(self) -> str:
        return f"SignVector({self.bits.tolist()})"

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.bits if not copy else self.bits.copy()
        return self.bits.astype(dtype)

    def copy(self) -> "SignVector":
        return SignVector(self.bits)

    def flip_range(self, lo: int, hi: int) -> None:
        """Negate entries in [lo, hi). Out-of-range ends are clamped, so an
        empty or trailing window is a no-op."""
        self.bits[lo:hi] *= -1

    def tolist(self) -> list:
        return self.bits.tolist()


def hamming_distance(a, b) -> int:
    """Number of coordinates where two sign vectors differ."""
    av = as_sign_array(a)
    bv = as_sign_array(b)
    if av.size != bv.size:
        raise ValueError("length mismatch")
    return int(np.count_nonzero(av != bv))


def hamming_from_dot(a, b) -> int:
    """Hamming distance recovered from the inner product: (n - a.b) / 2."""
    av = as_sign_array(a)
    bv = as_sign_array(b)
    if av.size != bv.size:
        raise ValueError("length mismatch")
    dot = int(av.astype(np.int64) @ bv.astype(np.int64))
    return (av.size - dot) // 2


def gray_code_at(n: int, rank: int) -> SignVector:
    """rank-th vector of the reflected Gray sequence over {-1, +1}^n.

    -1 plays the role of binary 0 and the first vector entry is the most
    significant bit. Ranks are 0-based, so rank 0 is the all -1 vector.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= rank < (1 << n):
        raise ValueError(f"rank {rank} out of range for n={n}")
    g = rank ^ (rank >> 1)
    bits = np.empty(n, dtype=SIGN_DTYPE)
    for j in range(n):
        bits[j] = 1 if (g >> (n - 1 - j)) & 1 else -1
    return SignVector(bits)


def gray_rank(q) -> int:
    """Inverse of gray_code_at: position of q in the reflected Gray sequence."""
    bits = as_sign_array(q)
    n = bits.size
    g = 0
    for j in range(n):
        g = (g << 1) | (1 if bits[j] > 0 else 0)
    # binary value is the prefix-xor fold of the Gray value
    shift = 1
    while shift < n:
        g ^= g >> shift
        shift <<= 1
    return g


def gray_code_table(n: int) -> np.ndarray:
    """All 2^n sign vectors in Gray order as a (2^n, n) int8 matrix.

    Row r equals gray_code_at(n, r). Intended for the exhaustive searches,
    so n is capped at 20.
    """
    if not 1 <= n <= 20:
        raise ValueError("gray_code_table supports 1 <= n <= 20")
    ranks = np.arange(1 << n, dtype=np.int64)
    g = ranks ^ (ranks >> 1)
    cols = ((g[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(SIGN_DTYPE)
    return cols * 2 - 1


@dataclass(frozen=True)
class PartitionNode:
    """Cell of contiguous Gray ranks [lo, hi) in the search tree.

    The representative is the lower median rank of the cell, which the
    search evaluates as a stand-in for the whole cell.
    """

    n: int
    depth: int
    index: int
    lo: int
    hi: int

    @classmethod
    def root(cls, n: int) -> "PartitionNode":
        if n < 1:
            raise ValueError("n must be >= 1")
        return cls(n=n, depth=0, index=0, lo=0, hi=1 << n)

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def representative_rank(self) -> int:
        return self.lo + (self.size - 1) // 2

    def representative(self) -> SignVector:
        return gray_code_at(self.n, self.representative_rank)

    @property
    def expandable(self) -> bool:
        return self.size >= 2


def expand_node(node: PartitionNode) -> tuple[PartitionNode, PartitionNode]:
    """Split a cell into two halves; the left child takes the larger half
    when the size is odd. Singleton cells cannot be split."""
    if not node.expandable:
        raise ValueError("cannot expand a singleton cell")
    mid = node.lo + (node.size + 1) // 2
    left = PartitionNode(node.n, node.depth + 1, 2 * node.index, node.lo, mid)
    right = PartitionNode(node.n, node.depth + 1, 2 * node.index + 1, mid, node.hi)
    return left, right


def sign(values) -> np.ndarray:
    """Elementwise sign with the zero convention sign(0) = +1."""
    arr = np.asarray(values, dtype=np.float64)
    return np.where(arr >= 0, 1, -1).astype(SIGN_DTYPE)

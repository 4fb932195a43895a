"""Bit-packed linear algebra over GF(2).

Rows are stored as little-endian runs of 64-bit words: column ``c`` lives in
word ``c // 64`` at bit ``c % 64``. Padding bits past ``cols`` are always zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

WORD = 64


class InfeasibleError(ValueError):
    """Raised when ``M x = s`` has no solution."""


def _n_words(cols: int) -> int:
    return max(1, (cols + WORD - 1) // WORD)


def _pack(dense: np.ndarray) -> np.ndarray:
    rows, cols = dense.shape
    nw = _n_words(cols)
    padded = np.zeros((rows, nw * WORD), dtype=np.uint8)
    padded[:, :cols] = dense
    # packbits is big-endian within a byte; flip to get LSB-first words
    by = np.packbits(padded.reshape(rows, nw * 8, 8)[:, :, ::-1], axis=-1)
    return np.ascontiguousarray(by.reshape(rows, nw * 8)).view("<u8").astype(np.uint64)


def _unpack(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if rows == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    by = words.astype("<u8").view(np.uint8).reshape(rows, -1)
    bits = np.unpackbits(by, axis=-1, bitorder="little")
    return bits[:, :cols].copy()


@dataclass(frozen=True)
class GF2Matrix:
    rows: int
    cols: int
    data: np.ndarray  # (rows, words) uint64

    def __post_init__(self):
        if self.data.shape != (self.rows, _n_words(self.cols)):
            raise ValueError(f"packed shape {self.data.shape} does not fit {self.rows}x{self.cols}")
        self.data.setflags(write=False)

    @classmethod
    def from_dense(cls, a) -> "GF2Matrix":
        a = np.asarray(a, dtype=np.int64)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2:
            raise ValueError("expected a 2-d 0/1 array")
        a = (a & 1).astype(np.uint8)
        return cls(a.shape[0], a.shape[1], _pack(a))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "GF2Matrix":
        return cls(rows, cols, np.zeros((rows, _n_words(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "GF2Matrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_text(cls, text: str) -> "GF2Matrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        rows, cols = (int(v) for v in lines[0].split())
        body = lines[1:]
        if len(body) != rows or any(len(r) != cols or set(r) - {"0", "1"} for r in body):
            raise ValueError("malformed GF(2) matrix text")
        dense = np.array([[int(ch) for ch in r] for r in body], dtype=np.uint8).reshape(rows, cols)
        return cls.from_dense(dense)

    def to_text(self) -> str:
        d = self.to_dense()
        lines = [f"{self.rows} {self.cols}"] + ["".join(map(str, r)) for r in d]
        return "\n".join(lines) + "\n"

    def to_dense(self) -> np.ndarray:
        return _unpack(self.data, self.cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GF2Matrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"GF2Matrix({self.rows}x{self.cols}, rank={rank(self)})"

    def vstack(self, other: "GF2Matrix") -> "GF2Matrix":
        if other.cols != self.cols:
            raise ValueError("column counts differ")
        return GF2Matrix(self.rows + other.rows, self.cols, np.vstack([self.data, other.data]))


def _eliminate(work: np.ndarray, cols: int, full: bool, rhs: np.ndarray | None = None) -> list[int]:
    """Row-reduce ``work`` in place. Returns pivot columns (one per pivot row).

    With ``full`` the result is reduced row echelon form, otherwise only
    entries below each pivot are cleared. ``rhs`` (uint8 per row) follows the
    same row operations.
    """
    nrows = work.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == nrows:
            break
        w, b = divmod(c, WORD)
        bit = np.uint64(1) << np.uint64(b)
        col = (work[r:, w] & bit) != 0
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
            if rhs is not None:
                rhs[[r, p]] = rhs[[p, r]]
        mask = (work[:, w] & bit) != 0
        mask[r] = False
        if not full:
            mask[:r] = False
        if mask.any():
            work[mask] ^= work[r]
            if rhs is not None:
                rhs[mask] ^= rhs[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(m: GF2Matrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(_eliminate(m.data.copy(), m.cols, full=False))


def column_restrict(m: GF2Matrix, idx: Sequence[int]) -> GF2Matrix:
    idx = np.asarray(list(idx), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= m.cols):
        raise IndexError(f"column index out of range for {m.cols} columns")
    if np.unique(idx).size != idx.size:
        raise ValueError("column indices must be distinct")
    return GF2Matrix.from_dense(m.to_dense()[:, idx].reshape(m.rows, idx.size))


def row_basis(m: GF2Matrix) -> GF2Matrix:
    """Nonzero rows of the reduced row echelon form."""
    work = m.data.copy()
    piv = _eliminate(work, m.cols, full=True)
    return GF2Matrix(len(piv), m.cols, work[: len(piv)].copy())


@dataclass(frozen=True)
class Solution:
    particular: np.ndarray  # uint8, length cols
    kernel: GF2Matrix  # rows form a basis of ker(M)

    @property
    def dimension(self) -> int:
        return self.kernel.rows

    def count(self) -> int:
        return 2**self.dimension


def solve(m: GF2Matrix, s: Iterable[int]) -> Solution:
    s = np.asarray(list(s), dtype=np.uint8) & 1
    if s.size != m.rows:
        raise ValueError(f"syndrome length {s.size} != rows {m.rows}")
    work = m.data.copy()
    rhs = s.copy()
    piv = _eliminate(work, m.cols, full=True, rhs=rhs)
    if rhs[len(piv):].any():
        raise InfeasibleError("inconsistent syndrome: the affine support is empty")
    reduced = _unpack(work[: len(piv)], m.cols)
    x = np.zeros(m.cols, dtype=np.uint8)
    x[piv] = rhs[: len(piv)]
    free = np.setdiff1d(np.arange(m.cols), piv)
    basis = np.zeros((free.size, m.cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        basis[k, piv] = reduced[:, f]
    kern = GF2Matrix.from_dense(basis) if free.size else GF2Matrix.zeros(0, m.cols)
    return Solution(x, kern)


def matvec(m: GF2Matrix, x) -> np.ndarray:
    """``M x`` mod 2 for a single vector or a stack of row vectors (shape (k, cols))."""
    x = np.asarray(x, dtype=np.int64)
    d = m.to_dense().astype(np.int64)
    return ((x @ d.T) & 1).astype(np.uint8)


def matmul(a: GF2Matrix, b: GF2Matrix) -> GF2Matrix:
    if a.cols != b.rows:
        raise ValueError("inner dimensions differ")
    prod = a.to_dense().astype(np.int64) @ b.to_dense().astype(np.int64)
    return GF2Matrix.from_dense(prod & 1)


def transpose(m: GF2Matrix) -> GF2Matrix:
    return GF2Matrix.from_dense(m.to_dense().T)

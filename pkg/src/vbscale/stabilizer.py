"""Z-check systems of stabilizer states and their amplitude mutual information.

A stabilizer state measured in the computational basis is uniform on the
affine subspace ``{z : M z = s}`` where the rows of ``M`` span the Z-only part
of the stabilizer group. The mutual information across a cut is then a
difference of GF(2) ranks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import gf2
from .gf2 import GF2Matrix, InfeasibleError

MAX_ENUM_DIM = 24


class SupportTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class StabilizerTableau:
    n: int
    xpart: GF2Matrix
    zpart: GF2Matrix

    def __post_init__(self):
        if self.xpart.cols != self.n or self.zpart.cols != self.n or self.xpart.rows != self.zpart.rows:
            raise ValueError("tableau blocks must both be n_gen x n")

    @classmethod
    def from_paulis(cls, labels: Sequence[str]) -> "StabilizerTableau":
        """Build from Pauli strings such as ``"XXI"`` (signs are ignored)."""
        labels = [lab.lstrip("+-") for lab in labels]
        n = len(labels[0])
        x = np.zeros((len(labels), n), dtype=np.uint8)
        z = np.zeros_like(x)
        for r, lab in enumerate(labels):
            if len(lab) != n:
                raise ValueError("Pauli strings must share one length")
            for q, ch in enumerate(lab.upper()):
                x[r, q] = ch in "XY"
                z[r, q] = ch in "ZY"
        return cls(n, GF2Matrix.from_dense(x), GF2Matrix.from_dense(z))

    @property
    def n_gen(self) -> int:
        return self.xpart.rows

    def commutes(self) -> bool:
        x = self.xpart.to_dense().astype(np.int64)
        z = self.zpart.to_dense().astype(np.int64)
        sym = (x @ z.T + z @ x.T) & 1
        return not sym.any()


@dataclass(frozen=True)
class ZCheckSystem:
    m: GF2Matrix
    s: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        s = np.zeros(self.m.rows, dtype=np.uint8) if self.s is None else np.asarray(self.s, dtype=np.uint8) & 1
        if s.size != self.m.rows:
            raise ValueError("syndrome length must equal the number of checks")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.m.cols

    def solution(self) -> gf2.Solution:
        return gf2.solve(self.m, self.s)

    def feasible(self) -> bool:
        try:
            self.solution()
        except InfeasibleError:
            return False
        return True

    def log2_prob(self) -> float:
        """log2 of the uniform probability on the support."""
        return -float(self.n - gf2.rank(self.m))

    def satisfies(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.uint8))
        return np.all(gf2.matvec(self.m, z) == self.s[None, :], axis=1)

    # JSON: {"n": 3, "z_checks": ["110", "011"], "syndrome": "00"}
    @classmethod
    def from_json(cls, text: str) -> "ZCheckSystem":
        obj = json.loads(text)
        n = int(obj["n"])
        checks = obj.get("z_checks", [])
        if any(len(c) != n or set(c) - {"0", "1"} for c in checks):
            raise ValueError("each z_check must be a 0/1 string of length n")
        dense = np.array([[int(ch) for ch in c] for c in checks], dtype=np.uint8).reshape(len(checks), n)
        syn = obj.get("syndrome", "0" * len(checks))
        if len(syn) != len(checks) or set(syn) - {"0", "1"}:
            raise ValueError("syndrome must be a 0/1 string with one bit per check")
        return cls(GF2Matrix.from_dense(dense), np.array([int(ch) for ch in syn], dtype=np.uint8))

    def to_json(self) -> str:
        d = self.m.to_dense()
        return json.dumps({
            "n": self.n,
            "z_checks": ["".join(map(str, r)) for r in d],
            "syndrome": "".join(map(str, self.s)),
        })


@dataclass(frozen=True)
class Bipartition:
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        a, b = tuple(int(i) for i in self.a), tuple(int(i) for i in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if set(a) & set(b):
            raise ValueError("the two sides overlap")
        if sorted(a + b) != list(range(len(a) + len(b))):
            raise ValueError("the two sides must cover 0..n-1")

    @property
    def n(self) -> int:
        return len(self.a) + len(self.b)

    @classmethod
    def middle(cls, n: int) -> "Bipartition":
        m = n // 2
        return cls(tuple(range(m)), tuple(range(m, n)))

    @classmethod
    def from_side(cls, n: int, a: Sequence[int]) -> "Bipartition":
        a = tuple(sorted(int(i) for i in a))
        return cls(a, tuple(i for i in range(n) if i not in set(a)))


@dataclass(frozen=True)
class CmiResult:
    value_bits: float
    method: Literal["rank_formula", "brute_force", "sampled"]
    stderr_bits: float | None = None

    def __post_init__(self):
        if self.value_bits < -1e-9 and self.method != "sampled":
            raise ValueError(f"negative mutual information {self.value_bits}")


def z_subgroup(t: StabilizerTableau) -> GF2Matrix:
    """Row basis of the Z-only elements of the group generated by ``t``."""
    if not t.commutes():
        raise ValueError("tableau generators do not pairwise commute")
    # combinations lambda with lambda . xpart = 0 form ker(xpart^T)
    combos = gf2.solve(gf2.transpose(t.xpart), np.zeros(t.n, dtype=np.uint8)).kernel
    if combos.rows == 0:
        return GF2Matrix.zeros(0, t.n)
    zrows = gf2.matmul(combos, t.zpart)
    return gf2.row_basis(zrows)


def _check_cut(n: int, cut: Bipartition):
    if cut.n != n:
        raise ValueError(f"cut covers {cut.n} sites, system has {n}")


def cmi_rank_formula(m: GF2Matrix, cut: Bipartition) -> CmiResult:
    _check_cut(m.cols, cut)
    ra = gf2.rank(gf2.column_restrict(m, cut.a))
    rb = gf2.rank(gf2.column_restrict(m, cut.b))
    return CmiResult(float(ra + rb - gf2.rank(m)), "rank_formula")


def _coefficient_bits(dim: int, start: int, stop: int) -> np.ndarray:
    t = np.arange(start, stop, dtype=np.int64)
    return ((t[:, None] >> np.arange(dim, dtype=np.int64)) & 1).astype(np.uint8)


def enumerate_support(sys: ZCheckSystem) -> np.ndarray:
    """All strings of the support, shape ``(2**dim, n)``; row t uses kernel coefficients = bits of t."""
    sol = sys.solution()
    dim = sol.dimension
    if dim > MAX_ENUM_DIM:
        raise SupportTooLarge(f"support has 2^{dim} strings (limit 2^{MAX_ENUM_DIM})")
    if dim == 0:
        return sol.particular[None, :].copy()
    coeff = _coefficient_bits(dim, 0, 2**dim).astype(np.int64)
    kern = sol.kernel.to_dense().astype(np.int64)
    return (((coeff @ kern) & 1) ^ sol.particular[None, :]).astype(np.uint8)


def sample_support(sys: ZCheckSystem, rng: np.random.Generator, count: int,
                   sol: gf2.Solution | None = None) -> np.ndarray:
    """Uniform samples of the support; pass a cached ``sol`` to skip the elimination."""
    sol = sys.solution() if sol is None else sol
    kern = sol.kernel.to_dense().astype(np.int64)
    coeff = rng.integers(0, 2, size=(count, sol.dimension), dtype=np.int64)
    return (((coeff @ kern) & 1) ^ sol.particular[None, :]).astype(np.uint8)


def _pattern_entropy(rows: np.ndarray) -> float:
    """Plug-in entropy (bits) of equally weighted rows."""
    total = rows.shape[0]
    packed = np.packbits(rows, axis=1) if rows.shape[1] else np.zeros((total, 1), np.uint8)
    _, counts = np.unique(packed, axis=0, return_counts=True)
    c = counts.astype(np.float64)
    return float(np.log2(total) - np.sum(c * np.log2(c)) / total)


def cmi_brute_force(sys: ZCheckSystem, cut: Bipartition) -> CmiResult:
    _check_cut(sys.n, cut)
    strings = enumerate_support(sys)
    h_ab = _pattern_entropy(strings)
    h_a = _pattern_entropy(strings[:, list(cut.a)])
    h_b = _pattern_entropy(strings[:, list(cut.b)])
    return CmiResult(h_a + h_b - h_ab, "brute_force")

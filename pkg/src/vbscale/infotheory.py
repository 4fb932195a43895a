"""Entropies and mutual information in bits, exact and from samples with exact log-probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

LN2 = math.log(2.0)


@dataclass(frozen=True)
class JointTable:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("joint table must be 2-d")
        if (p < 0).any():
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"table mass {p.sum()!r} is not 1")
        object.__setattr__(self, "p", p)

    @property
    def a_size(self) -> int:
        return self.p.shape[0]

    @property
    def b_size(self) -> int:
        return self.p.shape[1]

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.p.sum(axis=1), self.p.sum(axis=0)

    @classmethod
    def from_joint_vector(cls, probs: np.ndarray, n_bits: int, a_bits: Sequence[int]) -> "JointTable":
        """Reshape a distribution over ``n_bits``-bit integers (bit 0 = most significant) into A x B."""
        a_bits = list(a_bits)
        b_bits = [k for k in range(n_bits) if k not in set(a_bits)]
        idx = np.arange(2**n_bits, dtype=np.int64)

        def gather(bits):
            out = np.zeros_like(idx)
            for k in bits:
                out = (out << 1) | ((idx >> (n_bits - 1 - k)) & 1)
            return out

        table = np.zeros((2 ** len(a_bits), 2 ** len(b_bits)))
        np.add.at(table, (gather(a_bits), gather(b_bits)), probs)
        return cls(table)


@dataclass(frozen=True)
class EntropyEstimate:
    bits: float
    stderr_bits: float
    n_samples: int


@dataclass(frozen=True)
class MIEstimate:
    h_ab: EntropyEstimate
    h_a: EntropyEstimate
    h_b: EntropyEstimate
    mi_bits: float
    stderr_bits: float


def entropy(p) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("entropy needs a normalized nonnegative vector")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def mutual_information(q: JointTable) -> float:
    pa, pb = q.marginals()
    return entropy(pa) + entropy(pb) - entropy(q.p)


def rank_bound_check(q: JointTable, rtol: float = 1e-10) -> dict:
    sv = np.linalg.svd(q.p, compute_uv=False)
    r = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    mi = mutual_information(q)
    log2_rank = math.log2(r) if r else 0.0
    return {"mi_bits": mi, "log2_rank": log2_rank, "rank": r, "holds": mi <= log2_rank + 1e-9}


def chi2_identity_check(q: JointTable) -> float:
    """Deviation between chi^2(P_AB || p_A p_B) and ||M||_F^2 - 1 with M = P / sqrt(p_A p_B)."""
    pa, pb = q.marginals()
    if (pa <= 0).any() or (pb <= 0).any():
        raise ValueError("chi^2 identity needs strictly positive marginals")
    prod = np.outer(pa, pb)
    chi2 = float(np.sum((q.p - prod) ** 2 / prod))
    m = q.p / np.sqrt(prod)
    frob = float(np.sum(m * m))
    mi = mutual_information(q)
    if mi > math.log2(1.0 + chi2) + 1e-9:
        raise AssertionError(f"I = {mi} exceeds log2(1 + chi^2) = {math.log2(1 + chi2)}")
    return abs(frob - 1.0 - chi2)


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def entropy_continuity_check(p, q) -> dict:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.size < 2:
        raise ValueError("need two distributions on the same support of size >= 2")
    eps = float(np.abs(p - q).sum())
    lhs = abs(entropy(p) - entropy(q))
    half = eps / 2
    rhs = half * math.log2(p.size - 1) + binary_entropy(half)
    return {"lhs": lhs, "rhs": rhs, "eps": eps, "holds": lhs <= rhs + 1e-9}


class ExactLogProbSampler(Protocol):
    """Anything that can sample along an ordering and evaluate exact prefix marginals."""

    def sample_along(self, order: Sequence[int], count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Return bits (count, N) in mode order and natural-log conditionals (count, len(order))."""
        ...

    def log_marginal(self, bits: np.ndarray, modes: Sequence[int]) -> np.ndarray:
        """Exact natural-log marginal probability of ``bits[:, modes]``."""
        ...


def _estimate(minus_log2: np.ndarray) -> EntropyEstimate:
    n = minus_log2.size
    sd = float(minus_log2.std(ddof=1)) if n > 1 else 0.0
    return EntropyEstimate(float(minus_log2.mean()), sd / math.sqrt(n), n)


def mi_from_exact_logprobs(sampler, a_modes: Sequence[int], b_modes: Sequence[int],
                           n_samples: int, rng: np.random.Generator) -> MIEstimate:
    """Unbiased MI estimate using exact joint and marginal log-probabilities of each sample."""
    if not (hasattr(sampler, "sample_along") and hasattr(sampler, "log_marginal")):
        raise TypeError("sampler lacks exact log-probabilities")
    a_modes, b_modes = list(a_modes), list(b_modes)
    bits, cond = sampler.sample_along(a_modes + b_modes, n_samples, rng)
    log_ab = cond.sum(axis=1)
    log_a = cond[:, : len(a_modes)].sum(axis=1)
    log_b = sampler.log_marginal(bits, b_modes)
    # per-sample pointwise MI keeps the correlated noise of the three terms together
    pointwise = (log_ab - log_a - log_b) / LN2
    n = pointwise.size
    stderr = float(pointwise.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MIEstimate(
        h_ab=_estimate(-log_ab / LN2),
        h_a=_estimate(-log_a / LN2),
        h_b=_estimate(-log_b / LN2),
        mi_bits=float(pointwise.mean()),
        stderr_bits=stderr,
    )

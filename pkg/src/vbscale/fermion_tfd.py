"""Thermofield double of the open p-wave chain as a pure Gaussian state on two copies.

Doubled modes are ``d = (c_1A .. c_nA, c_1B .. c_nB)``; a doubled occupation
string is ``x = (a, b)``. The Gaussian state is carried two ways:

* a pairing matrix ``F`` with ``|TFD> = N exp(1/2 d^+ F d^+)|0>``, which gives
  amplitudes as Pfaffians;
* a Majorana covariance ``M`` (``M_xy = i<g_x g_y>`` off the diagonal), which
  gives every sequential conditional in closed form.

Occupation probabilities agree with ``<a|exp(-beta H/2)|b>^2 / Z``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.special import expit

from .infotheory import JointTable, LN2, mi_from_exact_logprobs, mutual_information
from .skewlinalg import SignLog, pfaffian, principal_pfaffians
from .stabilizer import CmiResult

log = logging.getLogger(__name__)

EXACT_MAX_MODES = 20
DEGENERATE_PIVOT = 1e-12


class DegenerateUpdate(FloatingPointError):
    """Conditioning on an outcome whose probability is (numerically) zero."""


def chain_blocks(n: int, j_coupling: float, h_field: float, boundary: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Hopping block A (symmetric) and pairing block B (antisymmetric).

    The chain Hamiltonian is ``sum A_ij c_i^+ c_j + 1/2 sum B_ij (c_i^+ c_j^+ + h.c.) - tr(A)/2``,
    i.e. ``1/2 G^+ [[A, B], [-B, -A]] G`` with ``G = (c, c^+)``. ``boundary`` scales the
    bond from site n back to site 1 (0 = open chain).
    """
    s = np.eye(n, k=1)
    if n > 1:
        s[n - 1, 0] += boundary
    else:
        s[0, 0] += boundary
    a = 2.0 * h_field * np.eye(n) - j_coupling * (s + s.T)
    b = -j_coupling * s + j_coupling * s.T
    return a, b


def bdg_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.block([[a, b], [-b, -a]])


@dataclass(frozen=True)
class BcsChain:
    n: int
    j_coupling: float = 1.0
    h_field: float = 0.6

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chain needs at least one site")

    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        return chain_blocks(self.n, self.j_coupling, self.h_field)

    def bdg(self) -> np.ndarray:
        return bdg_matrix(*self.blocks())

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending, coming in +-eps pairs) and orthonormal eigenvectors of the BdG matrix."""
        return np.linalg.eigh(self.bdg())

    def quasiparticle_energies(self) -> np.ndarray:
        lam, _ = self.spectrum()
        return np.abs(lam[self.n:])

    def log_partition(self, beta: float) -> float:
        eps = self.quasiparticle_energies()
        x = beta * eps / 2
        # log(2 cosh x) without overflow
        return float(np.sum(x + np.log1p(np.exp(-2 * x))))

    def thermal_correlation(self, beta: float) -> np.ndarray:
        """<G G^+> in the thermal state, G = (c, c^+)."""
        lam, w = self.spectrum()
        return (w * expit(beta * lam)) @ w.T


def _majorana_rows(coef_d: np.ndarray, coef_ddag: np.ndarray) -> np.ndarray:
    """Rewrite operators ``X d + Y d^+`` in the Majorana basis g_2u = d_u + d_u^+, g_2u+1 = -i(d_u - d_u^+)."""
    k, n = coef_d.shape
    w = np.zeros((k, 2 * n), dtype=complex)
    w[:, 0::2] = (coef_d + coef_ddag) / 2
    w[:, 1::2] = 1j * (coef_d - coef_ddag) / 2
    return w


@dataclass(frozen=True)
class GaussianTFD:
    chain: BcsChain
    beta: float
    eps: np.ndarray
    occ: np.ndarray
    pairing: np.ndarray
    cov: np.ndarray
    log_norm: float
    regularized: bool = False

    @property
    def n_modes(self) -> int:
        return 2 * self.chain.n

    def correlation(self) -> np.ndarray:
        """<D D^+> for D = (d, d^+), a 4n x 4n matrix."""
        n = self.n_modes
        t = np.zeros((2 * n, 2 * n), dtype=complex)
        u = np.arange(n)
        t[u, 2 * u] = 0.5
        t[u, 2 * u + 1] = 0.5j
        t[n + u, 2 * u] = 0.5
        t[n + u, 2 * u + 1] = -0.5j
        gg = np.eye(2 * n) - 1j * self.cov
        return t @ gg @ t.conj().T

    def copy_a_correlation(self) -> np.ndarray:
        """<G G^+> of copy A alone, G = (c_A, c_A^+)."""
        n, m = self.chain.n, self.n_modes
        full = self.correlation()
        sel = np.r_[np.arange(n), m + np.arange(n)]
        return full[np.ix_(sel, sel)]

    def occupations(self) -> np.ndarray:
        return (1.0 + np.diag(self.cov, 1)[0::2]) / 2


def build_tfd(chain: BcsChain, beta: float) -> GaussianTFD:
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    n = chain.n
    lam, w = chain.spectrum()
    if not np.allclose(lam[:n], -lam[::-1][:n], atol=1e-9):
        raise np.linalg.LinAlgError("BdG spectrum is not particle-hole symmetric")
    eps = np.abs(lam[n:])
    occ = expit(-beta * eps)

    # Annihilators of the infinite-temperature pair state prod (1 + c_A^+ c_B^+)|0>,
    # evolved by exp(-beta H_A / 2): rows [E | J_B] over (G_A, G_B), E = exp(beta/2 * BdG).
    # In the BdG eigenbasis E = W diag(e^{tau lam}) W^T, so each row can be rescaled
    # by 1/sqrt(1 + e^{2 tau lam}) and no entry ever overflows.
    tau = beta / 2
    big = np.sqrt(expit(2 * tau * lam))  # e^{tau lam} / sqrt(1 + e^{2 tau lam})
    small = np.sqrt(expit(-2 * tau * lam))  # 1 / sqrt(1 + e^{2 tau lam})
    jb = np.block([[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    rows_a = big[:, None] * w.T
    rows_b = small[:, None] * (w.T @ jb)
    # coefficients on d = (c_A, c_B) and d^+ = (c_A^+, c_B^+)
    coef_d = np.hstack([rows_a[:, :n], rows_b[:, :n]])
    coef_ddag = np.hstack([rows_a[:, n:], rows_b[:, n:]])

    regularized = False
    solve_d = coef_d
    cond = np.linalg.cond(coef_d)
    if not np.isfinite(cond) or cond > 1e12:
        log.warning("pairing reconstruction is near-singular (cond %.2e); regularizing", cond)
        solve_d = coef_d + 1e-12 * np.eye(2 * n)
        regularized = True
    f = -np.linalg.solve(solve_d, coef_ddag)
    asym = np.abs(f + f.T).max()
    if asym > 1e-10 * max(1.0, np.abs(f).max()):
        raise np.linalg.LinAlgError(f"pairing matrix is not antisymmetric ({asym:.2e})")
    f = 0.5 * (f - f.T)
    _, logdet = np.linalg.slogdet(np.eye(2 * n) + f.T @ f)

    # the covariance only needs the span of the annihilators, not F
    mrows = _majorana_rows(coef_d, coef_ddag)
    q, _ = np.linalg.qr(mrows.T)
    cov = np.real(1j * (np.eye(4 * n) - 2 * q @ q.conj().T))
    cov = 0.5 * (cov - cov.T)
    return GaussianTFD(chain, float(beta), eps, occ, f, cov, -0.25 * float(logdet), regularized)


def occupied(x: Sequence[int]) -> list[int]:
    return [u for u, bit in enumerate(x) if bit]


def amplitude(t: GaussianTFD, x: Sequence[int]) -> float:
    x = np.asarray(x, dtype=np.int64)
    if x.size != t.n_modes:
        raise ValueError(f"expected {t.n_modes} bits")
    s = occupied(x)
    if len(s) % 2:
        return 0.0
    pf = pfaffian(t.pairing[np.ix_(s, s)])
    return pf.sign * math.exp(pf.log_abs + t.log_norm)


def all_amplitudes(t: GaussianTFD) -> np.ndarray:
    """Amplitudes of every doubled string; index x has mode u at bit 2n-1-u."""
    if t.n_modes > EXACT_MAX_MODES:
        raise ValueError("too many modes for dense enumeration")
    return math.exp(t.log_norm) * principal_pfaffians(t.pairing)


# ------------------------------------------------------------------ sampling


@dataclass(frozen=True)
class Ordering:
    perm: tuple[int, ...]
    name: Literal["separate", "alternate", "custom"] = "custom"

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError("ordering must be a permutation of the doubled modes")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def separate(cls, n: int) -> "Ordering":
        return cls(tuple(range(2 * n)), "separate")

    @classmethod
    def alternate(cls, n: int) -> "Ordering":
        return cls(tuple(k for j in range(n) for k in (j, n + j)), "alternate")

    @classmethod
    def named(cls, name: str, n: int) -> "Ordering":
        if name == "separate":
            return cls.separate(n)
        if name == "alternate":
            return cls.alternate(n)
        raise ValueError(f"unknown ordering {name!r}")


def _measure_front(cov: np.ndarray, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project the mode held by Majoranas 0 and 1 onto ``bits`` for a batch of covariances.

    ``cov`` has shape (batch, m, m). Returns the conditioned covariance of the
    remaining m - 2 Majoranas and the probability of each outcome.
    """
    mab = cov[:, 0, 1]
    s = np.where(bits == 1, 1.0, -1.0)
    prob = 0.5 * (1.0 + s * mab)
    if (prob < DEGENERATE_PIVOT).any():
        raise DegenerateUpdate(f"outcome probability {prob.min():.2e} below {DEGENERATE_PIVOT}")
    col_a = cov[:, 2:, 0]
    col_b = cov[:, 2:, 1]
    left = np.stack([col_b, -col_a], axis=2)
    right = np.stack([col_a, col_b], axis=1)
    upd = left @ right  # col_b col_a^T - col_a col_b^T
    upd *= (s / (1.0 + s * mab))[:, None, None]
    upd += cov[:, 2:, 2:]
    return upd, prob


def _majorana_order(modes: Sequence[int]) -> np.ndarray:
    return np.array([2 * u + k for u in modes for k in (0, 1)], dtype=np.int64)


@dataclass
class SamplerState:
    """A Gaussian state conditioned on some fixed occupations."""

    cov: np.ndarray
    modes: list[int]  # doubled modes still unmeasured, in covariance order
    fixed: dict[int, int] = field(default_factory=dict)
    log_prob: float = 0.0
    clamp: float = 0.0

    @classmethod
    def fresh(cls, t: GaussianTFD) -> "SamplerState":
        return cls(t.cov.copy(), list(range(t.n_modes)))

    def condition(self, mode: int, bit: int) -> "SamplerState":
        pos = self.modes.index(mode)
        rest = [k for k in range(len(self.modes)) if k != pos]
        modes = [self.modes[k] for k in rest]
        local = _majorana_order([pos] + rest)
        new, prob = _measure_front(self.cov[np.ix_(local, local)][None], np.array([bit]))
        fixed = dict(self.fixed)
        fixed[mode] = int(bit)
        return SamplerState(new[0], modes, fixed, self.log_prob + math.log(prob[0]), self.clamp)


def conditional_prob(st: SamplerState, mode: int) -> float:
    if mode in st.fixed:
        raise ValueError(f"mode {mode} is already fixed")
    pos = st.modes.index(mode)
    p1 = 0.5 * (1.0 + st.cov[2 * pos, 2 * pos + 1])
    clipped = min(1.0, max(0.0, p1))
    st.clamp = max(st.clamp, abs(clipped - p1))
    return clipped


class TfdSampler:
    """Batched exact sequential sampler; implements the exact-log-prob sampler protocol."""

    def __init__(self, t: GaussianTFD, chunk: int = 64):
        self.t = t
        self.chunk = chunk
        self.max_clamp = 0.0

    def _run(self, order: Sequence[int], count: int, rng: np.random.Generator | None,
             forced: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
        order = list(order)
        nm = self.t.n_modes
        bits = np.zeros((count, nm), dtype=np.uint8) if forced is None else forced.astype(np.uint8).copy()
        logc = np.zeros((count, len(order)))
        # marginals over a subset only need that subset's covariance block
        maj = _majorana_order(order)
        base = self.t.cov[np.ix_(maj, maj)]
        for lo in range(0, count, self.chunk):
            hi = min(count, lo + self.chunk)
            cov = np.broadcast_to(base, (hi - lo,) + base.shape)
            for step, u in enumerate(order):
                p1 = 0.5 * (1.0 + cov[:, 0, 1])
                clipped = np.clip(p1, 0.0, 1.0)
                self.max_clamp = max(self.max_clamp, float(np.abs(clipped - p1).max()))
                if forced is None:
                    bits[lo:hi, u] = rng.random(hi - lo) < clipped
                cov, prob = _measure_front(cov, bits[lo:hi, u])
                logc[lo:hi, step] = np.log(prob)
        return bits, logc

    def sample_along(self, order: Sequence[int], count: int, rng: np.random.Generator):
        return self._run(order, count, rng, None)

    def log_marginal(self, bits: np.ndarray, modes: Sequence[int]) -> np.ndarray:
        _, logc = self._run(modes, bits.shape[0], None, bits)
        return logc.sum(axis=1)


def sample(t: GaussianTFD, o: Ordering, rng: np.random.Generator, count: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Doubled strings (count, 2n) and their exact natural-log probabilities."""
    bits, logc = TfdSampler(t).sample_along(o.perm, count, rng)
    return bits, logc.sum(axis=1)


def exact_probabilities(t: GaussianTFD) -> np.ndarray:
    amp = all_amplitudes(t)
    p = amp * amp
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        log.warning("dense TFD probabilities sum to %.12f; renormalizing", total)
    return p / total


def tfd_cmi(t: GaussianTFD, o: Ordering, cut: int | None = None, n_samples: int | None = None,
            rng: np.random.Generator | None = None) -> CmiResult:
    """Mutual information between the first ``cut`` tokens of ``o`` and the rest.

    ``n_samples=None`` enumerates exactly (at most 20 doubled modes); otherwise
    the exact-log-prob sampling estimator is used with B-first evaluation of the
    B marginal.
    """
    nm = t.n_modes
    cut = nm // 2 if cut is None else int(cut)
    if not 1 <= cut <= nm - 1:
        raise ValueError("cut must lie in [1, 2n-1]")
    a_modes, b_modes = list(o.perm[:cut]), list(o.perm[cut:])
    if n_samples is None:
        if nm > EXACT_MAX_MODES:
            raise ValueError("exact enumeration limited to 20 doubled modes; pass n_samples")
        table = JointTable.from_joint_vector(exact_probabilities(t), nm, a_modes)
        return CmiResult(max(0.0, mutual_information(table)), "brute_force")
    rng = np.random.default_rng() if rng is None else rng
    est = mi_from_exact_logprobs(TfdSampler(t), a_modes, b_modes, n_samples, rng)
    return CmiResult(est.mi_bits, "sampled", est.stderr_bits)


def log2_prob_from_amplitude(t: GaussianTFD, x: Sequence[int]) -> float:
    amp = amplitude(t, x)
    return -math.inf if amp == 0 else 2 * math.log(abs(amp)) / LN2


__all__ = [
    "BcsChain", "GaussianTFD", "Ordering", "SamplerState", "TfdSampler", "DegenerateUpdate",
    "build_tfd", "amplitude", "all_amplitudes", "conditional_prob", "sample", "tfd_cmi",
    "exact_probabilities", "chain_blocks", "bdg_matrix", "SignLog",
]

"""Dephased thermofield double of the anti-periodic transverse-field Ising chain.

Spin chain: ``-J sum_{i<n} X_i X_{i+1} + J X_n X_1 - h sum Z_i``. After the
Jordan-Wigner map (occupied site = Z eigenvalue -1) each fermion-parity sector
is a quadratic Hamiltonian ``1/2 G^+ [[A, B], [-B, -A]] G``. Kernel elements
``<a|exp(-beta H/2)|b>`` are Pfaffians of one 2n x 2n matrix per sector.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fermion_tfd import bdg_matrix, chain_blocks
from .infotheory import JointTable, LN2, mutual_information
from .skewlinalg import SignLog, ZERO, expm, lu_det_inverse, pfaffian, principal_pfaffians
from .stabilizer import Bipartition, CmiResult

log = logging.getLogger(__name__)

EXACT_MAX_SITES = 10


@dataclass(frozen=True)
class TfimModel:
    n: int
    j_coupling: float = 1.0
    h_field: float = 0.6

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("TFIM chain needs at least two sites")

    def sector_blocks(self, parity: int) -> tuple[np.ndarray, np.ndarray]:
        """(A, B) for fermion parity +1 (even occupation) or -1 (odd)."""
        if parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        return chain_blocks(self.n, self.j_coupling, self.h_field, boundary=float(parity))

    def sector_bdg(self, parity: int) -> np.ndarray:
        return bdg_matrix(*self.sector_blocks(parity))

    def bipartition(self) -> Bipartition:
        """Copy A (indices 0..n-1) against copy B (n..2n-1)."""
        return Bipartition(tuple(range(self.n)), tuple(range(self.n, 2 * self.n)))


def _log_parity_parts(x: np.ndarray) -> tuple[float, float]:
    """Logs of (C + S) / 2 and (C - S) / 2 with C = prod(2 cosh x), S = prod(2 sinh x).

    With q = exp(-2x) the two products are exp(sum x) * prod(1 +- q); expanding
    gives sums over even and odd subsets of the q's, which are accumulated
    directly so nothing ever cancels.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("quasiparticle energies must be nonnegative")
    even, odd, scale = 1.0, 0.0, 0.0
    for q in np.exp(-2 * x):
        even, odd = even + odd * q, odd + even * q
        top = max(even, odd)
        even, odd, scale = even / top, odd / top, scale + math.log(top)
    base = float(np.sum(x)) + scale
    return base + (math.log(even) if even > 0 else -math.inf), base + (math.log(odd) if odd > 0 else -math.inf)


def dispersion(k: np.ndarray, j: float, h: float) -> np.ndarray:
    return 2.0 * np.sqrt((h - j * np.cos(k)) ** 2 + (j * np.sin(k)) ** 2)


def partition_function(m: TfimModel, beta: float) -> SignLog:
    """Free-fermion partition function summed over both parity sectors."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    n, j, h = m.n, m.j_coupling, m.h_field
    grid = np.arange(n)
    k_per = 2 * np.pi * grid / n
    k_anti = 2 * np.pi * (grid + 0.5) / n
    half = beta / 2
    x_per = half * dispersion(k_per, j, h)
    x_anti = half * dispersion(k_anti, j, h)
    vac = np.sign(h - j)
    if vac == 0:
        log.warning("h == J: critical point, taking sign(h - J) = +1")
        vac = 1.0
    even_per, odd_per = _log_parity_parts(x_per)
    _, odd_anti = _log_parity_parts(x_anti)
    terms = [even_per if vac > 0 else odd_per, odd_anti]
    top = max(terms)
    return SignLog(1, top + math.log(sum(math.exp(t - top) for t in terms)))


@dataclass(frozen=True)
class SectorKernel:
    """Pieces of exp(-tau * BdG) for one parity sector."""

    parity: int
    t: np.ndarray
    big: np.ndarray  # the antisymmetric 2n x 2n matrix whose minors give kernel elements
    det_t22: SignLog

    @property
    def n(self) -> int:
        return self.t.shape[0] // 2


def _sector_kernel(m: TfimModel, parity: int, tau: float) -> SectorKernel:
    n = m.n
    t = expm(-tau * m.sector_bdg(parity))
    t12, t21, t22 = t[:n, n:], t[n:, :n], t[n:, n:]
    lu = lu_det_inverse(t22)
    inv22 = lu.inv
    x = t12 @ inv22
    z = inv22 @ t21
    ey = np.linalg.inv(t22.T)  # e^{Y} with e^{-Y} = T22^T
    big = np.block([[x, ey], [-ey.T, z]])
    if lu.det.sign < 0:
        log.warning("det(T22) < 0 in parity sector %+d; using |det|", parity)
    return SectorKernel(parity, t, big, lu.det)


@dataclass(frozen=True)
class TfimKernel:
    """``K(a, b) = <a| exp(-beta H / 2) |b>`` for both parity sectors."""

    model: TfimModel
    beta: float
    sectors: dict = field(default_factory=dict)

    @classmethod
    def build(cls, m: TfimModel, beta: float) -> "TfimKernel":
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        return cls(m, float(beta), {p: _sector_kernel(m, p, beta / 2) for p in (1, -1)})

    def sector(self, a) -> SectorKernel:
        return self.sectors[1 if int(np.sum(a)) % 2 == 0 else -1]


def _index_set(a, b, n) -> list[int]:
    return [k for k in range(n) if a[k]] + [n + k for k in range(n) if b[k]]


def kernel_element(k: TfimKernel, a, b) -> SignLog:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = k.model.n
    if a.size != n or b.size != n:
        raise ValueError(f"bit strings must have length {n}")
    na, nb = int(a.sum()), int(b.sum())
    if (na - nb) % 2:
        return ZERO
    sec = k.sector(a)
    s = _index_set(a, b, n)
    sub = sec.big[np.ix_(s, s)]
    pf = pfaffian(sub, tol=1e-8)
    if pf.sign == 0:
        return ZERO
    # bra occupation count |J| = na, ket |I| = nb
    phase = -1 if (nb * (nb + 2 * na + 1) // 2) % 2 else 1
    return SignLog(phase * pf.sign, 0.5 * sec.det_t22.log_abs + pf.log_abs)


@dataclass
class TfimWeights:
    """Unnormalized log weights w(a,b), w_A(a), w_B(b) with caching."""

    model: TfimModel
    beta: float
    z_beta: SignLog = None  # type: ignore[assignment]

    def __post_init__(self):
        self.half = TfimKernel.build(self.model, self.beta)  # exp(-beta H / 2)
        self.full = TfimKernel.build(self.model, 2 * self.beta)  # exp(-beta H)
        if self.z_beta is None:
            self.z_beta = partition_function(self.model, self.beta)
        self._joint: dict = {}
        self._diag: dict = {}

    def log_w(self, a, b) -> float:
        key = (tuple(int(v) for v in a), tuple(int(v) for v in b))
        hit = self._joint.get(key)
        if hit is None:
            kv = kernel_element(self.half, key[0], key[1])
            hit = -math.inf if kv.sign == 0 else 2 * kv.log_abs
            self._joint[key] = hit
        return hit

    def log_w_marginal(self, a) -> float:
        """log of <a| exp(-beta H) |a>, which is both w_A(a) and w_B(a)."""
        key = tuple(int(v) for v in a)
        hit = self._diag.get(key)
        if hit is None:
            kv = kernel_element(self.full, key, key)
            if kv.sign <= 0:
                raise FloatingPointError(f"nonpositive diagonal weight for {key}")
            hit = kv.log_abs
            self._diag[key] = hit
        return hit


def joint_distribution(m: TfimModel, beta: float) -> np.ndarray:
    """P(a, b) for all 4^n doubled strings; index has a in the high n bits."""
    n = m.n
    if n > EXACT_MAX_SITES:
        raise ValueError(f"exact enumeration limited to n <= {EXACT_MAX_SITES}")
    kern = TfimKernel.build(m, beta)
    z = partition_function(m, beta)
    idx = np.arange(4**n, dtype=np.int64)
    parity_a = np.bitwise_count(idx >> n) & 1
    parity_b = np.bitwise_count(idx & ((1 << n) - 1)) & 1
    p = np.zeros(4**n)
    for parity, sec in kern.sectors.items():
        want = 0 if parity == 1 else 1
        minors = principal_pfaffians(sec.big)
        mask = (parity_a == want) & (parity_b == want)
        p[mask] = np.exp(sec.det_t22.log_abs - z.log_abs) * minors[mask] ** 2
    return p


def cmi_exact(m: TfimModel, beta: float, cut: Bipartition | None = None) -> CmiResult:
    cut = m.bipartition() if cut is None else cut
    if cut.n != 2 * m.n:
        raise ValueError("cut must cover the 2n doubled indices")
    p = joint_distribution(m, beta)
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise FloatingPointError(f"weights sum to {total!r} Z, not Z")
    table = JointTable.from_joint_vector(p / total, 2 * m.n, cut.a)
    return CmiResult(max(0.0, mutual_information(table)), "brute_force")


def small_beta_formula(n: int, beta: float, j: float, h: float) -> float:
    """Leading small-beta behaviour of the copy-copy mutual information, in bits."""
    val = n - beta**2 * h**2 * n / (2 * LN2)
    if j != 0.0:
        val -= (beta**2 / 4) * j**2 * n * (1 / LN2 - math.log2(beta**2 * j**2 / 4))
    return val


@dataclass(frozen=True)
class McmcTrace:
    estimate: CmiResult
    acceptance: float
    samples: np.ndarray  # per-step pointwise log2 ratio (without log2 Z)


def metropolis_walk(wts: TfimWeights, n_steps: int, rng: np.random.Generator):
    """Yield ``(a, b, log_w, accepted)`` after each Metropolis step over doubled strings.

    Proposals keep both copies in the same parity sector: half the time one bit
    flips in each copy, otherwise two bits flip in one copy.
    """
    n = wts.model.n
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)
    lw = wts.log_w(a, b)
    tries = 0
    while not np.isfinite(lw):
        a = rng.integers(0, 2, n)
        b = a.copy()
        lw = wts.log_w(a, b)
        tries += 1
        if tries > 1000:
            raise FloatingPointError("could not find a start state with nonzero weight")
    for _ in range(n_steps):
        na, nb = a.copy(), b.copy()
        if rng.random() < 0.5:
            na[rng.integers(n)] ^= 1
            nb[rng.integers(n)] ^= 1
        else:
            i, k = rng.choice(n, size=2, replace=False)
            target = na if rng.random() < 0.5 else nb
            target[i] ^= 1
            target[k] ^= 1
        lw_new = wts.log_w(na, nb)
        ok = bool(np.isfinite(lw_new) and math.log(rng.random() + 1e-300) < lw_new - lw)
        if ok:
            a, b, lw = na, nb, lw_new
        yield a, b, lw, ok


def cmi_mcmc(m: TfimModel, beta: float, cut: Bipartition | None = None, n_steps: int = 20000,
             rng: np.random.Generator | None = None, burn_in: int | None = None,
             n_batches: int = 50, weights: TfimWeights | None = None) -> McmcTrace:
    """Metropolis estimate of the copy-copy mutual information.

    Only the copy cut is supported: the marginal weights are diagonal kernel
    elements at twice the inverse temperature.
    """
    if cut is not None and cut != m.bipartition():
        raise ValueError("MCMC estimator supports the copy A | copy B cut only")
    rng = np.random.default_rng() if rng is None else rng
    burn_in = n_steps // 10 if burn_in is None else burn_in
    if n_steps <= burn_in:
        raise ValueError("n_steps must exceed the burn-in")
    wts = TfimWeights(m, beta) if weights is None else weights

    out = np.empty(n_steps - burn_in)
    accepted = 0
    cur = None
    for step, (a, b, lw, ok) in enumerate(metropolis_walk(wts, n_steps, rng)):
        if ok or cur is None:
            cur = (lw - wts.log_w_marginal(a) - wts.log_w_marginal(b)) / LN2
        accepted += ok
        if step >= burn_in:
            out[step - burn_in] = cur
    usable = (out.size // n_batches) * n_batches
    means = out[:usable].reshape(n_batches, -1).mean(axis=1)
    stderr = float(means.std(ddof=1) / math.sqrt(n_batches))
    value = wts.z_beta.log_abs / LN2 + float(out.mean())
    return McmcTrace(CmiResult(max(0.0, value), "sampled", stderr), accepted / n_steps, out)

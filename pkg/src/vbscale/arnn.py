"""Autoregressive GRU model over bit strings, supervised training, fidelity and width sweeps.

The hidden width ``width`` is the only state the model carries from a prefix to
the rest of the string, so the smallest width that fits a target measures how
much prefix information the target needs.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Literal, Protocol, Sequence

import numpy as np
import torch
from torch import nn

from .fermion_tfd import GaussianTFD, Ordering, TfdSampler, exact_probabilities
from .gf2 import GF2Matrix
from .stabilizer import ZCheckSystem, sample_support

log = logging.getLogger(__name__)

DTYPE = torch.float64
EXACT_MAX_SITES = 20
WIDTH_GRID = (1, 2, 4, 6, 8, 12, 16, 24, 32, 48, 64)
_MAGIC = b"VBARNN01"


# ---------------------------------------------------------------- model


class ArnnModel(nn.Module):
    """GRU over the previous bit (one-hot, zeros at the first site) with a 2-way softmax readout."""

    def __init__(self, n_sites: int, width: int, generator: torch.Generator | None = None,
                 init_scale: float = 1.0):
        super().__init__()
        if n_sites < 1 or width < 1:
            raise ValueError("n_sites and width must be positive")
        self.n_sites = n_sites
        self.width = width
        self.cell = nn.GRU(2, width, batch_first=True, dtype=DTYPE)
        self.readout = nn.Linear(width, 2, dtype=DTYPE)
        if generator is not None:
            # scales above 1 make the initial cell nonlinear enough to pick up high-order parities
            bound = init_scale / math.sqrt(width)
            with torch.no_grad():
                for p in self.parameters():
                    p.uniform_(-bound, bound, generator=generator)

    @classmethod
    def zeros(cls, n_sites: int, width: int) -> "ArnnModel":
        m = cls(n_sites, width)
        with torch.no_grad():
            for p in m.parameters():
                p.zero_()
        return m

    def n_params(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def _inputs(self, bits: torch.Tensor) -> torch.Tensor:
        onehot = torch.nn.functional.one_hot(bits.long(), 2).to(DTYPE)
        start = torch.zeros(bits.shape[0], 1, 2, dtype=DTYPE)
        return torch.cat([start, onehot[:, :-1]], dim=1)

    def conditionals(self, bits: torch.Tensor) -> torch.Tensor:
        """Log-conditionals, shape (batch, n_sites, 2); each row is log-softmax normalized."""
        h, _ = self.cell(self._inputs(bits))
        return torch.log_softmax(self.readout(h), dim=-1)

    def forward(self, bits: torch.Tensor) -> torch.Tensor:
        logc = self.conditionals(bits)
        return logc.gather(2, bits.long().unsqueeze(-1)).squeeze(-1).sum(dim=1)


def _as_tensor(bits) -> torch.Tensor:
    return torch.as_tensor(np.asarray(bits, dtype=np.int64))


def log_prob(m: ArnnModel, s) -> np.ndarray:
    """Natural-log probability of each row of ``s`` (shape (n_sites,) or (batch, n_sites))."""
    s = np.atleast_2d(np.asarray(s))
    if s.shape[1] != m.n_sites:
        raise ValueError(f"expected {m.n_sites} sites, got {s.shape[1]}")
    with torch.no_grad():
        return m(_as_tensor(s)).numpy()


def sample(m: ArnnModel, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Ancestral samples and their log-probabilities (identical to :func:`log_prob`)."""
    bits = np.zeros((count, m.n_sites), dtype=np.uint8)
    u = rng.random((count, m.n_sites))
    with torch.no_grad():
        x = torch.zeros(count, 1, 2, dtype=DTYPE)
        h = None
        for i in range(m.n_sites):
            out, h = m.cell(x, h)
            p1 = torch.softmax(m.readout(out[:, 0]), dim=-1)[:, 1].numpy()
            bits[:, i] = u[:, i] < p1
            x = torch.nn.functional.one_hot(torch.as_tensor(bits[:, i], dtype=torch.int64), 2).to(DTYPE)[:, None]
    # re-score in one pass so the returned values are exactly log_prob(bits)
    return bits, log_prob(m, bits)


def all_strings(n: int) -> np.ndarray:
    """Every n-bit string, site 0 as the most significant bit."""
    if n > EXACT_MAX_SITES:
        raise ValueError(f"{n} sites is too many to enumerate (limit {EXACT_MAX_SITES})")
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


# ---------------------------------------------------------------- checkpoints


def save_checkpoint(m: ArnnModel, path) -> None:
    """Flat little-endian float64 parameters behind a JSON header giving names and shapes."""
    entries, chunks, offset = [], [], 0
    for name, p in m.state_dict().items():
        arr = p.detach().numpy().astype("<f8").ravel()
        entries.append({"name": name, "shape": list(p.shape), "offset": offset})
        chunks.append(arr)
        offset += arr.size
    header = json.dumps({"n_sites": m.n_sites, "width": m.width, "dtype": "float64",
                         "params": entries}).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(np.concatenate(chunks).tobytes() if chunks else b"")


def load_checkpoint(path) -> ArnnModel:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a model checkpoint")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen))
        data = np.frombuffer(fh.read(), dtype="<f8")
    m = ArnnModel(header["n_sites"], header["width"])
    state = {}
    for e in header["params"]:
        size = int(np.prod(e["shape"]))
        state[e["name"]] = torch.from_numpy(data[e["offset"]: e["offset"] + size].reshape(e["shape"]).copy())
    m.load_state_dict(state)
    return m


# ---------------------------------------------------------------- targets


class Target(Protocol):
    n_sites: int

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray: ...

    def log_prob(self, bits: np.ndarray) -> np.ndarray: ...


@dataclass
class StabilizerTarget:
    """Uniform distribution on the solutions of a Z-check system."""

    system: ZCheckSystem
    name: str = "stabilizer"

    def __post_init__(self):
        if not self.system.feasible():
            raise ValueError("target system is infeasible")
        self._solution = self.system.solution()
        self._log_p = self.system.log2_prob() * math.log(2.0)

    @property
    def n_sites(self) -> int:
        return self.system.n

    def sample(self, rng, count):
        return sample_support(self.system, rng, count, self._solution)

    def log_prob(self, bits):
        ok = self.system.satisfies(bits)
        return np.where(ok, self._log_p, -np.inf)

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_prob(all_strings(self.n_sites)))


def _checks(n: int, rows: Sequence[Sequence[int]]) -> ZCheckSystem:
    dense = np.zeros((len(rows), n), dtype=np.uint8)
    for r, cols in enumerate(rows):
        dense[r, list(cols)] = 1
    return ZCheckSystem(GF2Matrix.from_dense(dense))


def bell_chain_target(n: int) -> StabilizerTarget:
    """Adjacent pairs (0,1), (2,3), ... each uniform on {00, 11}."""
    if n < 2 or n % 2:
        raise ValueError("Bell chain needs an even number of sites")
    return StabilizerTarget(_checks(n, [(k, k + 1) for k in range(0, n, 2)]), "bell")


def delta_target(n: int) -> StabilizerTarget:
    """All probability on the all-zeros string."""
    return StabilizerTarget(_checks(n, [(k,) for k in range(n)]), "delta")


@dataclass
class TfdTarget:
    """Doubled occupations of a Gaussian TFD, read in the order given by ``ordering``."""

    tfd: GaussianTFD
    ordering: Ordering
    name: str = "tfd"
    _sampler: TfdSampler = field(init=False, repr=False)

    def __post_init__(self):
        self._sampler = TfdSampler(self.tfd)

    @property
    def n_sites(self) -> int:
        return self.tfd.n_modes

    def sample(self, rng, count):
        bits, _ = self._sampler.sample_along(self.ordering.perm, count, rng)
        return bits[:, self.ordering.perm]

    def log_prob(self, bits):
        bits = np.atleast_2d(bits)
        modes = np.zeros_like(bits, dtype=np.uint8)
        modes[:, self.ordering.perm] = bits
        return self._sampler.log_marginal(modes, self.ordering.perm)

    def probabilities(self) -> np.ndarray:
        n = self.n_sites
        p = exact_probabilities(self.tfd)
        strings = all_strings(n)
        modes = np.zeros_like(strings)
        modes[:, self.ordering.perm] = strings
        idx = modes.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1))
        return p[idx]


# ---------------------------------------------------------------- fidelity


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    stderr: float
    method: str


def fidelity_exact(m: ArnnModel, target) -> FidelityEstimate:
    if m.n_sites != target.n_sites:
        raise ValueError("model and target sizes differ")
    strings = all_strings(m.n_sites)
    pm = np.exp(log_prob(m, strings))
    pt = target.probabilities() if hasattr(target, "probabilities") else np.exp(target.log_prob(strings))
    bc = float(np.sum(np.sqrt(pt * pm)))
    return FidelityEstimate(min(1.0, bc * bc), 0.0, "exact")


def fidelity_sampled(m: ArnnModel, target, rng: np.random.Generator, count: int = 4096) -> FidelityEstimate:
    """Square of the sample mean of sqrt(P_target / P_model) under model samples."""
    if m.n_sites != target.n_sites:
        raise ValueError("model and target sizes differ")
    bits, lm = sample(m, rng, count)
    lt = np.asarray(target.log_prob(bits), dtype=np.float64)
    w = np.exp(0.5 * (lt - lm))
    mean = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    # delta method for the square
    return FidelityEstimate(min(1.0, mean * mean), 2.0 * mean * se, "sampled")


def fidelity(m: ArnnModel, target, method: str = "exact", rng: np.random.Generator | None = None,
             count: int = 4096) -> FidelityEstimate:
    if method == "exact":
        return fidelity_exact(m, target)
    if method == "sampled":
        return fidelity_sampled(m, target, rng if rng is not None else np.random.default_rng(), count)
    raise ValueError(f"unknown fidelity method {method!r}")


# ---------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 5000  # one epoch = one Adam step on a fresh minibatch
    seeds: int = 3
    target_fidelity: float = 0.95
    eval_every: int = 100
    eval_method: Literal["exact", "sampled", "auto"] = "auto"
    eval_samples: int = 4096
    exact_max_sites: int = 16
    stop_on_success: bool = True
    init_scale: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.target_fidelity <= 1.0:
            raise ValueError("fidelity target must lie in (0, 1]")
        if self.lr <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.seeds < 1 or self.eval_every < 1:
            raise ValueError("lr, batch_size, max_epochs, seeds and eval_every must be positive")
        if self.eval_method not in ("exact", "sampled", "auto"):
            raise ValueError(f"unknown eval_method {self.eval_method!r}")

    def method_for(self, n_sites: int) -> str:
        if self.eval_method != "auto":
            return self.eval_method
        return "exact" if n_sites <= self.exact_max_sites else "sampled"


@dataclass(frozen=True)
class EvalPoint:
    epoch: int
    loss: float
    fidelity: float
    stderr: float


@dataclass
class TrainResult:
    model: ArnnModel
    history: list[EvalPoint]
    best_fidelity: float
    epochs: int
    success: bool
    diverged: bool = False

    @property
    def final_fidelity(self) -> float:
        return self.history[-1].fidelity if self.history else 0.0


def train(m: ArnnModel, target, cfg: TrainConfig = TrainConfig(), seed: int = 0) -> TrainResult:
    """Minimize the cross-entropy -E_target[log P_model] with Adam; deterministic given ``seed``."""
    if target.n_sites != m.n_sites:
        raise ValueError("target emits strings of a different length")
    data_rng = np.random.default_rng([seed, 1])
    eval_rng = np.random.default_rng([seed, 2])
    method = cfg.method_for(m.n_sites)
    opt = torch.optim.Adam(m.parameters(), lr=cfg.lr)
    history: list[EvalPoint] = []
    best, success, diverged = 0.0, False, False
    epoch = 0
    loss_val = float("nan")
    for epoch in range(1, cfg.max_epochs + 1):
        batch = _as_tensor(target.sample(data_rng, cfg.batch_size))
        opt.zero_grad()
        loss = -m(batch).mean()
        loss_val = float(loss.item())
        if not math.isfinite(loss_val):
            log.warning("training diverged at epoch %d (loss %s)", epoch, loss_val)
            diverged = True
            break
        loss.backward()
        opt.step()
        if epoch % cfg.eval_every == 0 or epoch == cfg.max_epochs:
            f = fidelity(m, target, method, eval_rng, cfg.eval_samples)
            history.append(EvalPoint(epoch, loss_val, f.value, f.stderr))
            best = max(best, f.value)
            if f.value >= cfg.target_fidelity:
                success = True
                if cfg.stop_on_success:
                    break
    return TrainResult(m, history, best, epoch, success, diverged)


def train_new(n_sites: int, width: int, target, cfg: TrainConfig = TrainConfig(), seed: int = 0) -> TrainResult:
    gen = torch.Generator().manual_seed(seed)
    return train(ArnnModel(n_sites, width, gen, cfg.init_scale), target, cfg, seed)


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class RunRecord:
    size: int
    width: int
    seed: int
    final_fidelity: float
    best_fidelity: float
    epochs: int
    success: bool


@dataclass
class SweepResult:
    size: int
    best_fidelity: dict[int, float]
    n_d_min: int | None
    runs: list[RunRecord] = field(default_factory=list)

    def __post_init__(self):
        if any(not 0.0 <= f <= 1.0 for f in self.best_fidelity.values()):
            raise ValueError("fidelities must lie in [0, 1]")

    @property
    def flagged(self) -> bool:
        """No tested width reached the target."""
        return self.n_d_min is None


def sweep_min_width(make_target: Callable[[int], object], sizes: Sequence[int],
                    widths: Sequence[int] = WIDTH_GRID, cfg: TrainConfig = TrainConfig(),
                    base_seed: int = 0) -> list[SweepResult]:
    """Ascending width scan per size; seeds run in order and a width succeeds on its first successful seed."""
    widths = list(widths)
    if widths != sorted(set(widths)) or not widths:
        raise ValueError("width grid must be strictly ascending")
    out = []
    for size in sizes:
        target = make_target(size)
        best: dict[int, float] = {}
        runs: list[RunRecord] = []
        n_d_min = None
        for w in widths:
            best[w] = 0.0
            for k in range(cfg.seeds):
                seed = base_seed + 1000 * k + w
                r = train_new(target.n_sites, w, target, cfg, seed)
                runs.append(RunRecord(size, w, seed, r.final_fidelity, r.best_fidelity, r.epochs, r.success))
                best[w] = max(best[w], r.best_fidelity)
                log.info("size %d width %d seed %d: best fidelity %.4f after %d epochs",
                         size, w, seed, r.best_fidelity, r.epochs)
                if r.success:
                    break
            if best[w] >= cfg.target_fidelity:
                n_d_min = w
                break
        if n_d_min is None:
            log.warning("size %d: no width in %s reached fidelity %.3f", size, widths, cfg.target_fidelity)
        out.append(SweepResult(size, best, n_d_min, runs))
    return out


def capacity_violations(r: SweepResult) -> int:
    """Number of grid steps where best-over-seeds fidelity drops as the width grows."""
    ws = sorted(r.best_fidelity)
    return sum(r.best_fidelity[b] < r.best_fidelity[a] for a, b in zip(ws, ws[1:]))

"""End-to-end acceptance checks, one per numbered criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers
(visible in the terminal even under output capture) and then asserts.
"""

import math
import time

import numpy as np
import pytest

import oracles
from vbscale import arnn as A
from vbscale import families as fam
from vbscale import fermion_tfd as F
from vbscale import tfim_tfd as T
from vbscale.gf2 import GF2Matrix
from vbscale.infotheory import JointTable, chi2_identity_check, rank_bound_check
from vbscale.stabilizer import Bipartition, ZCheckSystem, cmi_brute_force, cmi_rank_formula

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, started):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({time.time() - started:.1f} s)"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def test_criterion_01_stabilizer_oracle(report):
    t0 = time.time()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(2, 13))
        r = int(rng.integers(1, n // 2 + 1))
        d = rng.integers(0, 2, size=(r, n))
        s = (d @ rng.integers(0, 2, size=n)) % 2
        sys_ = ZCheckSystem(GF2Matrix.from_dense(d), s)
        cut = Bipartition.middle(n)
        exact = cmi_rank_formula(sys_.m, cut).value_bits
        brute = cmi_brute_force(sys_, cut).value_bits
        mismatches += exact != round(brute) or abs(exact - brute) > 1e-9
    elapsed = time.time() - t0
    report(1, mismatches == 0 and elapsed < 60, f"{mismatches} mismatches in 200 systems", t0)


def test_criterion_02_toric_closed_form(report):
    t0 = time.time()
    from vbscale import gf2
    bad = []
    for l in range(2, 13):
        lat = fam.build_toric(l)
        want = 2 * l - 1 if l % 2 == 0 else 2 * l
        if fam.toric_cmi(l).value_bits != want or gf2.rank(lat.plaquettes) != l * l - 1:
            bad.append(l)
    report(2, not bad and time.time() - t0 < 60, f"L=2..12, failing sizes {bad}", t0)


def test_criterion_03_checkerboard_scaling(report):
    t0 = time.time()
    sizes = [10, 15, 20, 25, 30]
    slopes = {}
    for g in (0.5, 0.7, 1.0):
        vals = [r.value_bits for _, r in fam.checkerboard_cmi_curve(g, sizes)]
        slopes[g] = fam.loglog_slope(sizes, vals)[0]
    ok = abs(slopes[1.0] - 1.0) <= 0.10 and 0.3 < slopes[0.5] < slopes[0.7] < slopes[1.0]
    detail = ", ".join(f"gamma={g}: slope {s:.3f}" for g, s in slopes.items())
    report(3, ok and time.time() - t0 < 60, detail, t0)


def test_criterion_04_rank_bound(report):
    t0 = time.time()
    rng = np.random.default_rng(7)
    violations, worst = 0, 0.0
    for _ in range(1000):
        q = JointTable(oracles.random_joint(rng))
        violations += not rank_bound_check(q)["holds"]
        worst = max(worst, chi2_identity_check(q))
    ok = violations == 0 and worst < 1e-10 and time.time() - t0 < 60
    report(4, ok, f"{violations} bound violations, max chi^2 identity deviation {worst:.1e}", t0)


def test_criterion_05_gaussian_tfd_oracle(report):
    t0 = time.time()
    amp_err = cond_err = 0.0
    for n in (2, 3):
        m = 2 * n
        for beta in (0.0, 0.4, 1.0):
            t = F.build_tfd(F.BcsChain(n, 1.0, 0.6), beta)
            dense = oracles.tfd_amplitudes_dense(n, 1.0, 0.6, beta)
            got = np.array([F.amplitude(t, oracles.bits_of(x, m)) for x in range(2**m)])
            amp_err = max(amp_err, float(np.abs(got - dense).max()))
            probs = dense * dense
            for name in ("separate", "alternate"):
                order = F.Ordering.named(name, n).perm
                for x in range(2**m):
                    bits = oracles.bits_of(x, m)
                    if probs[x] < 1e-14:
                        continue  # every prefix of a supported string has positive mass
                    s = F.SamplerState.fresh(t)
                    for k, u in enumerate(order):
                        ref = oracles.brute_conditional(probs, m, order[:k], [bits[v] for v in order[:k]], u)
                        cond_err = max(cond_err, abs(F.conditional_prob(s, u) - ref))
                        s = s.condition(u, bits[u])
    ok = amp_err < 1e-8 and cond_err < 1e-8 and time.time() - t0 < 120
    report(5, ok, f"max amplitude error {amp_err:.1e}, max conditional error {cond_err:.1e}", t0)


def test_criterion_06_tfd_cmi_slope(report):
    t0 = time.time()
    sizes = [4, 6, 8, 10, 12]
    sep, alt = [], []
    for n in sizes:
        t = F.build_tfd(F.BcsChain(n, 1.0, 0.6), 0.1)
        rng = np.random.default_rng(n)
        sep.append(F.tfd_cmi(t, F.Ordering.separate(n), n_samples=100_000, rng=rng).value_bits)
        alt.append(F.tfd_cmi(t, F.Ordering.alternate(n), n_samples=100_000, rng=rng).value_bits)
    slope, se = fam.loglog_slope(sizes, sep)
    ok = 0.9 <= slope <= 1.1 and max(alt) < 1.0 and time.time() - t0 < 600
    detail = (f"separate slope {slope:.4f} +- {se:.4f} over n={sizes}; "
              f"alternate max {max(alt):.3f} bits")
    report(6, ok, detail, t0)


def test_criterion_07_tfim_formulas(report):
    t0 = time.time()
    z_err = k_err = 0.0
    for n in range(2, 9):
        w = np.linalg.eigvalsh(oracles.tfim_spin_hamiltonian(n, 1.0, 0.6))
        for beta in (0.1, 1.0, 5.0):
            ref = math.log(np.exp(-beta * (w - w.min())).sum()) - beta * w.min()
            got = T.partition_function(T.TfimModel(n), beta).log_abs
            z_err = max(z_err, abs(math.expm1(got - ref)))
    for n in (2, 3, 4):
        for beta in (0.3, 0.8, 2.0):
            k = T.TfimKernel.build(T.TfimModel(n), beta)
            dense = oracles.propagator(oracles.tfim_spin_hamiltonian(n, 1.0, 0.6), beta / 2)
            for a in range(2**n):
                for b in range(2**n):
                    v = T.kernel_element(k, oracles.bits_of(a, n), oracles.bits_of(b, n))
                    got = v.sign * math.exp(v.log_abs) if v.sign else 0.0
                    k_err = max(k_err, abs(got - dense[a, b]) / max(abs(dense[a, b]), 1e-300)
                                if abs(dense[a, b]) > 1e-12 else abs(got))
    lim = max(abs(T.cmi_exact(T.TfimModel(n), 1e-6).value_bits - n) for n in (2, 4, 6))
    ok = z_err < 1e-8 and k_err < 1e-7 and lim < 1e-4 and time.time() - t0 < 300
    report(7, ok, f"Z rel error {z_err:.1e}, kernel rel error {k_err:.1e}, beta->0 deviation {lim:.1e}", t0)


def test_criterion_08_small_beta(report):
    t0 = time.time()
    worst = 0.0
    ok = True
    for beta in (0.01, 0.02, 0.05):
        gap = abs(T.cmi_exact(T.TfimModel(4), beta).value_bits - T.small_beta_formula(4, beta, 1.0, 0.6))
        bound = 5 * 4 * beta**3 * abs(math.log(beta))
        ok &= gap <= bound
        worst = max(worst, gap / bound)
    report(8, ok and time.time() - t0 < 60, f"worst gap / envelope {worst:.3f}", t0)


def test_criterion_09_mcmc(report):
    t0 = time.time()
    m6 = T.TfimModel(6)
    exact6 = T.cmi_exact(m6, 1.0).value_bits
    est6 = T.cmi_mcmc(m6, 1.0, n_steps=60_000, rng=np.random.default_rng(6)).estimate
    agree = abs(est6.value_bits - exact6) < 3 * est6.stderr_bits
    per_site = {}
    for n in (4, 6, 8, 10):
        est = T.cmi_mcmc(T.TfimModel(n), 1.0, n_steps=60_000, rng=np.random.default_rng(100 + n)).estimate
        per_site[n] = est.value_bits / n
    plateau = abs(per_site[8] - per_site[10]) / min(per_site[8], per_site[10])
    ok = agree and plateau < 0.15 and time.time() - t0 < 900
    detail = (f"n=6 MCMC {est6.value_bits:.4f} +- {est6.stderr_bits:.4f} vs exact {exact6:.4f}; "
              f"I/n {', '.join(f'{n}: {v:.3f}' for n, v in per_site.items())}; 8-vs-10 deviation {plateau:.1%}")
    report(9, ok, detail, t0)


def test_criterion_10_arnn_properties(report):
    import torch
    t0 = time.time()
    norm_err = 0.0
    for n in range(1, 11):
        m = A.ArnnModel(n, 4, torch.Generator().manual_seed(n), init_scale=2.0)
        norm_err = max(norm_err, abs(np.exp(A.log_prob(m, A.all_strings(n))).sum() - 1.0))

    m = A.ArnnModel(5, 3, torch.Generator().manual_seed(0), init_scale=2.0)
    bits = torch.as_tensor(np.random.default_rng(0).integers(0, 2, size=(9, 5)), dtype=A.DTYPE)
    m.zero_grad()
    (-m(bits).mean()).backward()
    grad_err, eps = 0.0, 1e-5
    with torch.no_grad():
        for p in m.parameters():
            flat = p.view(-1)
            for k in range(flat.numel()):
                old = flat[k].item()
                flat[k] = old + eps
                up = -m(bits).mean().item()
                flat[k] = old - eps
                down = -m(bits).mean().item()
                flat[k] = old
                num = (up - down) / (2 * eps)
                grad_err = max(grad_err, abs(p.grad.view(-1)[k].item() - num) / max(abs(num), 1e-6))

    cfg = A.TrainConfig(lr=1e-2, max_epochs=500, eval_every=50, target_fidelity=0.99)
    bell = A.train_new(2, 2, A.bell_chain_target(2), cfg, seed=0).best_fidelity
    ok = norm_err < 1e-12 and grad_err < 1e-4 and bell > 0.99 and time.time() - t0 < 300
    report(10, ok, f"normalization error {norm_err:.1e}, gradient rel error {grad_err:.1e}, "
                   f"Bell fidelity {bell:.4f}", t0)


# Shared by both halves of criterion 11; lr and init scale are the sweep defaults documented in the README.
SWEEP_CFG = A.TrainConfig(lr=1e-2, max_epochs=5000, eval_every=100, seeds=3)


def _curves(results):
    return "; ".join(f"size {r.size}: n_d_min={r.n_d_min}, best by width "
                     + ", ".join(f"{w}:{f:.3f}" for w, f in r.best_fidelity.items()) for r in results)


@pytest.mark.slow
def test_criterion_11a_bell_chain_width(report):
    t0 = time.time()
    res = A.sweep_min_width(A.bell_chain_target, [4, 8, 12], cfg=SWEEP_CFG)
    mins = [r.n_d_min for r in res]
    ok = None not in mins and len(set(mins)) == 1
    report("11a", ok, _curves(res), t0)


@pytest.mark.slow
def test_criterion_11b_checkerboard_width(report):
    t0 = time.time()

    def target(l):
        return A.StabilizerTarget(fam.checkerboard_zsystem(fam.build_checkerboard(l, 1.0)), "checkerboard")

    # the default grid stops at 16 here: wider cells cost 2-5x more per run and the
    # full grid would not fit the two-hour budget when no width succeeds
    res = A.sweep_min_width(target, [4, 5, 6], widths=A.WIDTH_GRID[:7], cfg=SWEEP_CFG)
    mins = [r.n_d_min for r in res]
    ok = None not in mins and all(a <= b for a, b in zip(mins, mins[1:]))
    report("11b", ok, _curves(res), t0)

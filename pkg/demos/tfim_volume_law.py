"""Copy-copy mutual information of the dephased Ising thermofield double: exact
enumeration against Metropolis sampling, and the per-site value as n grows.

Run: python3 demos/tfim_volume_law.py
"""

import numpy as np

from vbscale.tfim_tfd import TfimModel, cmi_exact, cmi_mcmc, small_beta_formula

beta = 1.0
print(f"beta={beta}, J=1, h=0.6")
print(" n   exact    mcmc              I/n")
for n in (4, 6, 8):
    m = TfimModel(n)
    ex = cmi_exact(m, beta).value_bits
    mc = cmi_mcmc(m, beta, n_steps=30_000, rng=np.random.default_rng(n)).estimate
    print(f"{n:2d}  {ex:6.3f}  {mc.value_bits:6.3f} +- {mc.stderr_bits:.3f}  {ex / n:.3f}")

print("\nhigh temperature: exact vs leading-order formula (n=4)")
for b in (0.01, 0.02, 0.05, 0.1):
    print(f"  beta={b}: {cmi_exact(TfimModel(4), b).value_bits:.6f}  vs  {small_beta_formula(4, b, 1.0, 0.6):.6f}")

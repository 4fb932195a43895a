"""How the middle-cut mutual information of stabilizer states grows with system size.

Run: python3 demos/stabilizer_scaling.py
"""

from vbscale import families as fam

sizes = [10, 15, 20, 25, 30]
print("checkerboard families (vertical middle cut)")
for gamma in (0.5, 0.7, 1.0):
    vals = [r.value_bits for _, r in fam.checkerboard_cmi_curve(gamma, sizes)]
    slope, se = fam.loglog_slope(sizes, vals)
    print(f"  gamma={gamma}: bits {vals}  log-log slope {slope:.3f} +- {se:.3f}")

print("\ntoric code plaquette checks")
for l in range(2, 9):
    print(f"  L={l}: {fam.toric_cmi(l).value_bits:.0f} bits")

from vbscale.stabilizer import cmi_rank_formula

flat = [cmi_rank_formula(s.m, cut).value_bits for s, cut in map(fam.single_check_system, (4, 8, 12))]
print("\none crossing check, L = 4, 8, 12:", flat)

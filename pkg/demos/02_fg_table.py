"""Tabulate the per-step admittance coefficients F and G.

A chain driven by a smooth port voltage draws I = F * dv/s + G * v.  For a
large time constant (C = 1 F) the chain behaves like a single resistor, so
F and G hardly move with n.  For a femtofarad chain F is simply the total
capacitance (n + 1) C and G is tiny.
"""

import numpy as np

from rcchain import SpectralParams, admittance, fn_gn

s = 1e-12
for C in (1.0, 1e-15):
    print(f"C = {C:g} F")
    print("   n           F              G          |err F|    |err G|")
    for n in range(1, 11):
        fg = fn_gn(SpectralParams.with_default_m(n, 1.0, C, s))
        print(f"  {n:2d}  {fg.F:14.6e} {fg.G:14.6e}   {fg.F_err_abs:.1e}    {fg.G_err_abs:.1e}")
    print()

# the port admittance itself, swept over frequency for a 16-node chain
p = SpectralParams.with_default_m(16, 1.0, 1e-15, s)
w = np.logspace(6, 16, 6)
for x, y in zip(w, admittance(p, w)):
    print(f"omega={x:8.1e}  |Y|={abs(y):.4e}  arg={np.angle(y, deg=True):7.2f} deg")

"""The damped oscillator has a Lagrangian, but its energy is not conserved.

    python demos/damped_oscillator.py
"""

import sympy as sp

from affinelag import multiplier, numverify, varconstruct
from affinelag.dynsys import MechanicalSystem, lift
from affinelag.symlang import render

x, v = sp.symbols("x v")
b, w = sp.symbols("b omega")
s = lift(MechanicalSystem(-(w**2) * x - 2 * b * v, x, v, (b, w)))
values = {"b": 0.1, "omega": 1}

mu = multiplier.find(s)
lf = varconstruct.solve_myH(s, mu)
hd = varconstruct.hamiltonianize(lf, s.parameters)
print("multiplier  ", render(mu.mu))
print("momentum    ", render(hd.p))
print("hamiltonian ", render(hd.hamiltonian))

tr = numverify.integrate(s, [1, 0], 0, 1e-3, 5000, values)
r = numverify.conservation_check(s, lf.energy(), tr, values)
print(f"E_L drift    {r.max_residual:.3e} over t in [0, 5]")

"""Predator-prey walkthrough: multiplier, Lagrangian, Hamiltonian, flow check.

    python demos/predator_prey.py
"""

import math

import sympy as sp

from affinelag import multiplier, numverify, varconstruct
from affinelag.dynsys import FirstOrderSystem
from affinelag.symlang import Domain, render

x, y = sp.symbols("x y")
A, C, K, M = sp.symbols("A C K M")
values = {"A": 1, "C": -1, "K": -1, "M": 1}

lv = FirstOrderSystem(
    (x, y), (x * (A + C * y), y * (K + M * x)), (A, C, K, M),
    domain=Domain({"x": (0, math.inf), "y": (0, math.inf)}),
)

mu = multiplier.find(lv)
print("multiplier      ", render(mu.mu), f"({mu.family}, {mu.verification})")

lf = varconstruct.solve_myH(lv, mu)
print("lagrangian      ", render(lf.lagrangian().expr))
print("euler-lagrange  ", varconstruct.euler_lagrange_check(lv, lf).mode)

hd = varconstruct.hamiltonianize(lf, lv.parameters)
print("q, p            ", render(hd.q), ",", render(hd.p))
print("hamiltonian     ", render(hd.hamiltonian))

r = numverify.hamilton_flow_compare(lv, hd, [2, 1], 0, 1e-3, 1000, values)
print(f"flow deviation   {r.max_residual:.2e}")

# the energy is -H evaluated on the parameter values
tr = numverify.integrate(lv, [2, 1], 0, 1e-3, 5000, values)
drift = numverify.conservation_check(lv, lf.energy(), tr, values)
print(f"energy drift     {drift.max_residual:.2e} over t in [0, 5]")

"""Two inequivalent Lagrangians for x'' = -y', y'' = -y written in R^4.

    python demos/birkhoff_four_dims.py
"""

import sympy as sp

from affinelag import birkhoff
from affinelag.dynsys import FirstOrderSystem
from affinelag.symlang import render

x1, x2, x3, x4 = X = sp.symbols("x1 x2 x3 x4")
s = FirstOrderSystem(X, (x3, x4, -x4, -x2))

found = birkhoff.solve_constant_A(s)
print(f"constant solutions span a {len(found.basis)}-dimensional space")

forms = []
for k, A in enumerate(found.solutions, 1):
    lf = birkhoff.integrate_alpha(birkhoff.verify_A(s, A))
    forms.append(lf)
    print(f"L{k} =", render(lf.lagrangian().expr))
    print("   birkhoff equations hold:", bool(birkhoff.birkhoff_el_check(s, lf)))

certified, (key, comp) = birkhoff.not_gauge_equivalent(forms[0], forms[1])
print("not gauge-equivalent:", certified, f"(d(l1 - l2) component {key} = {render(comp)})")

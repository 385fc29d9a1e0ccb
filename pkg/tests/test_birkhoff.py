import math

import pytest
import sympy as sp

from affinelag import birkhoff as bk
from affinelag.dynsys import FirstOrderSystem
from affinelag.errors import (
    NoNondegenerateSolution,
    PreconditionError,
    ResidualNonzero,
    SingularMatrixError,
)
from affinelag.multiplier import multiplier_residual
from affinelag.symlang import Domain, simplify
from affinelag.varconstruct import LambdaForm, gauge_equivalent

t = sp.Symbol("t")
x1, x2, x3, x4, a = sp.symbols("x1 x2 x3 x4 a")
X = (x1, x2, x3, x4)
VEL = tuple(sp.Symbol(f"{s.name}dot") for s in X)
POS4 = Domain({s.name: (0, math.inf) for s in X})

HU = FirstOrderSystem(X, (x3, x4, -x4, -x2))
CUBIC = FirstOrderSystem(X, (x3, x4, x2**2, x1**2))
LV4 = FirstOrderSystem(
    X,
    (x1 * (-1 + x2), x2 * (1 - x1 + a * x3), x3 * (-1 - a * x2 + x4), x4 * (1 - x3)),
    (a,),
    domain=POS4,
)
LV4_A = {(0, 1): 1 / (x1 * x2), (0, 3): a / (x1 * x4), (2, 3): 1 / (x3 * x4)}

L_HU = (x2 + x3) * VEL[0] - x3 * VEL[3] + (-(x3**2) + x4**2 - 2 * x2 * x3) / 2
L1_HU = (x2 + x3) * VEL[0] + (x2 - x3) * VEL[3] + (x2**2 - x3**2 + 2 * x4**2 - 2 * x2 * x3) / 2
L_CUBIC = x4 * VEL[0] + x3 * VEL[1] + (x1**3 + x2**3) / 3 - x3 * x4
LOGS = -(1 + a) * sp.log(x1) - sp.log(x2) - sp.log(x3) - (1 + a) * sp.log(x4)


def lv4_lagrangian(coeff):
    return (sp.log(x1) / x2 * VEL[1] - sp.log(x4) / x3 * VEL[2] + coeff * sp.log(x1) / x4 * VEL[3]
            + x1 + x2 + x3 + x4 + LOGS)


def form(s, L):
    return bk.lambda_from_lagrangian(L, s.states, VEL, s.time)


class TestVerifyA:
    def test_lv4(self):
        bd = bk.verify_A(LV4, LV4_A)
        assert all(c.mode == "symbolic" for c in bd.checks.values())
        assert bk.birkhoff_el_check(LV4, bd)

    def test_residual_nonzero(self):
        with pytest.raises(ResidualNonzero) as info:
            bk.verify_A(CUBIC, {(0, 1): 1, (2, 3): 1})
        assert info.value.residuals

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            bk.verify_A(HU, {(0, 1): 0})

    def test_not_skew(self):
        with pytest.raises(PreconditionError):
            bk.verify_A(HU, sp.eye(4))

    def test_odd_dimension(self):
        s = FirstOrderSystem((x1, x2, x3), (x1, x2, x3))
        with pytest.raises(PreconditionError):
            bk.verify_A(s, {})

    def test_two_dimensions_match_multiplier_equation(self):
        x, y = sp.symbols("x y")
        A, C, K, M = sp.symbols("A C K M")
        s = FirstOrderSystem((x, y), (x * (A + C * y), y * (K + M * x)), (A, C, K, M))
        for mu in (1 / (x * y), x * y, sp.exp(t) / x):
            R = bk.A_residuals(s, sp.Matrix([[0, mu], [-mu, 0]]))
            assert simplify(R[0, 1] - multiplier_residual(s, mu)) == 0


class TestConstant:
    def test_hojman_urrutia(self):
        bd = bk.solve_constant_A(HU)
        assert len(bd.basis) >= 2
        assert len(bd.solutions) >= 2
        forms = []
        for A in bd.solutions:
            d = bk.verify_A(HU, A)
            lf = bk.integrate_alpha(d)
            assert lf.checks["d_lambda"]
            assert bk.birkhoff_el_check(HU, lf)
            forms.append(lf)
        certified, (key, comp) = bk.not_gauge_equivalent(forms[0], forms[1])
        assert certified and comp != 0

    def test_reference_lagrangian_lies_in_solution_space(self):
        lf = form(HU, L_HU)
        d = bk.verify_A(HU, lf.mu_matrix())
        ours = bk.integrate_alpha(d)
        assert gauge_equivalent(ours, lf) is not None

    def test_nonlinear_rejected(self):
        with pytest.raises(PreconditionError):
            bk.solve_constant_A(CUBIC)

    def test_harmonic_pair(self):
        y1, y2 = sp.symbols("y1 y2")
        s = FirstOrderSystem((y1, y2), (y2, -y1))
        bd = bk.solve_constant_A(s)
        assert len(bd.basis) == 1 and bd.A[0, 1] != 0

    def test_no_nondegenerate(self):
        y1, y2 = sp.symbols("y1 y2")
        s = FirstOrderSystem((y1, y2), (y1, y2))  # divergence 2: no constant A
        with pytest.raises(NoNondegenerateSolution):
            bk.solve_constant_A(s)


class TestIntegrate:
    def test_constant_form(self):
        y1, y2 = sp.symbols("y1 y2")
        bd = bk.BirkhoffData((y1, y2), sp.Matrix([[0, 1], [-1, 0]]), (0, 0), t)
        lf = bk.integrate_alpha(bd)
        assert lf.m == (0, y1) and lf.H == 0

    def test_lv4_logs(self):
        lf = bk.integrate_alpha(bk.verify_A(LV4, LV4_A), POS4)
        assert lf.checks["d_lambda"].mode == "symbolic"
        assert bk.birkhoff_el_check(LV4, lf)
        assert gauge_equivalent(lf, form(LV4, lv4_lagrangian(a)), POS4) is not None

    def test_exterior_derivative(self):
        d = bk.exterior_derivative([0, x1, 0], (x1, x2, t))
        assert d[(0, 1)] == 1 and d[(0, 2)] == 0 and d[(1, 2)] == 0


class TestElCheck:
    def test_hu_lagrangians(self):
        assert bk.birkhoff_el_check(HU, form(HU, L_HU))
        assert bk.birkhoff_el_check(HU, form(HU, L1_HU))
        certified, _ = bk.not_gauge_equivalent(form(HU, L_HU), form(HU, L1_HU))
        assert certified

    def test_cubic(self):
        assert bk.birkhoff_el_check(CUBIC, form(CUBIC, L_CUBIC))

    def test_lv4_written_lagrangian(self):
        assert bk.birkhoff_el_check(LV4, form(LV4, lv4_lagrangian(a)))

    def test_lv4_without_factor_a_only_at_a_equal_1(self):
        s1 = FirstOrderSystem(X, tuple(e.subs(a, 1) for e in LV4.velocities), domain=POS4)
        s2 = FirstOrderSystem(X, tuple(e.subs(a, 2) for e in LV4.velocities), domain=POS4)
        L = lv4_lagrangian(1)
        assert bk.birkhoff_el_check(s1, form(s1, L.subs(a, 1)))
        assert not bk.birkhoff_el_check(s2, form(s2, L.subs(a, 2)))

    def test_perturbed(self):
        lf = form(CUBIC, L_CUBIC)
        bad = LambdaForm(lf.states, lf.m, lf.H + x1**2, lf.time)
        assert not bk.birkhoff_el_check(CUBIC, bad)

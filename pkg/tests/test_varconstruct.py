import math

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from affinelag import varconstruct as vc
from affinelag.dynsys import FirstOrderSystem, MechanicalSystem, lift
from affinelag.errors import ConsistencyFailure, PreconditionError
from affinelag.multiplier import find
from affinelag.symlang import Domain, equivalent, simplify

t, x, y, v, z, n = sp.symbols("t x y v z n")
A, B, C, D, K, M, N = sp.symbols("A B C D K M N")
b, w = sp.symbols("b omega")
POS = Domain({"x": (0, math.inf), "y": (0, math.inf)})
F = sp.Function("F")


def mech(force, params=(), domain=None, functions=None):
    return lift(MechanicalSystem(force, x, v, params, t, domain or Domain(), functions or {}))


VIF = mech(F(t, x), functions={"F": 2})
DAMPED = mech(-(w**2) * x - 2 * b * v, (b, w))
LANE_EMDEN = mech(-2 * v / t - x**n, (n,), Domain({"t": (0, math.inf), "x": (0, math.inf)}))
CLASSICAL_LV = FirstOrderSystem((x, y), (x * (A + C * y), y * (K + M * x)), (A, C, K, M), domain=POS)
HOST = FirstOrderSystem((x, y), (x * (A - B * y), y * (C - D * y / x)), (A, B, C, D), domain=POS)


def lagrangian_form(s, L):
    from affinelag.birkhoff import lambda_from_lagrangian

    vel = tuple(sp.Symbol(f"{q.name}dot") for q in s.states)
    return lambda_from_lagrangian(L, s.states, vel, s.time)


class TestSolveMyH:
    def test_velocity_independent_force(self):
        lf = vc.solve_myH(VIF, 1)
        assert lf.m == (-v, 0)
        assert simplify(sp.diff(lf.H, x) + F(t, x)) == 0
        assert simplify(sp.diff(lf.H, v) - v) == 0

    def test_classical_lv(self):
        lf = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
        assert simplify(lf.m_x + sp.log(y) / x) == 0
        assert simplify(lf.H - (-K * sp.log(x) - M * x + A * sp.log(y) + C * y)) == 0

    def test_host_parasite(self):
        lf = vc.solve_myH(HOST, sp.exp(C * t) / (x * y**2))
        assert simplify(lf.m_x - sp.exp(C * t) / (x * y)) == 0
        assert simplify(lf.H + sp.exp(C * t) * (D / x + A / y + B * sp.log(y))) == 0

    def test_generalized_lv(self):
        s = FirstOrderSystem((x, y), (x * (A + B * x + C * y), y * (K + M * x + N * y)),
                             (A, B, C, K, M, N), domain=POS)
        mu = find(s)
        lf = vc.solve_myH(s, mu)
        assert all(lf.checks.values())
        assert equivalent(lf.mu, mu.mu, POS)

    def test_wrong_multiplier(self):
        with pytest.raises(ConsistencyFailure):
            vc.solve_myH(DAMPED, sp.exp(b * t) * x)

    def test_needs_two_states(self):
        s = FirstOrderSystem((x,), (x,))
        with pytest.raises(PreconditionError):
            vc.solve_myH(s, 1)


class TestEulerLagrange:
    def test_mmH(self):
        assert vc.euler_lagrange_check(VIF, vc.solve_myH(VIF, 1))

    def test_damped_from_lho(self):
        L = sp.exp(2 * b * t) * (-v * sp.Symbol("xdot") + (v**2 + w**2 * x**2) / 2)
        assert vc.euler_lagrange_check(DAMPED, lagrangian_form(DAMPED, L))

    def test_perturbed_h(self):
        lf = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
        bad = vc.LambdaForm(lf.states, lf.m, lf.H + x**3, lf.time)
        assert not vc.euler_lagrange_check(CLASSICAL_LV, bad)

    def test_degenerate_form(self):
        lf = vc.LambdaForm((x, y), (0, 0), x, t)
        assert not vc.euler_lagrange_check(CLASSICAL_LV, lf)


class TestGauge:
    def test_zero(self):
        lf = vc.solve_myH(DAMPED, sp.exp(2 * b * t))
        g = vc.gauge_transform(lf, 0)
        assert (g.m, g.H) == (lf.m, lf.H)
        assert vc.gauge_equivalent(lf, lf) == 0

    def test_xy_keeps_mu(self):
        lf = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
        assert simplify(vc.gauge_transform(lf, x * y).mu - lf.mu) == 0

    def test_recovers_f(self):
        lf = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
        f0 = x**2 * sp.log(y) + t * x
        f = vc.gauge_equivalent(vc.gauge_transform(lf, f0), lf, POS)
        assert f is not None and simplify(f - f0) == 0

    def test_alternative_host_parasite_gauge(self):
        # an independently written lambda for the host-parasite model: gauge
        # -exp(C t) log(y)/x applied by hand
        ours = vc.solve_myH(HOST, sp.exp(C * t) / (x * y**2))
        m_x = sp.exp(C * t) * (1 / y + sp.log(y) / x) / x
        m_y = -sp.exp(C * t) / (x * y)
        H = -sp.exp(C * t) * (D / x + A / y + B * sp.log(y) + C * sp.log(y) / x)
        other = vc.LambdaForm((x, y), (m_x, m_y), H, t)
        assert vc.euler_lagrange_check(HOST, other)
        f = vc.gauge_equivalent(other, ours, POS)
        assert f is not None
        assert simplify(f + sp.exp(C * t) * sp.log(y) / x) == 0

    def test_first_integral_multiple_is_not_gauge(self):
        E = K * sp.log(x) + M * x - A * sp.log(y) - C * y
        a = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
        bform = vc.solve_myH(CLASSICAL_LV, E / (x * y))
        assert vc.euler_lagrange_check(CLASSICAL_LV, bform)
        assert vc.gauge_equivalent(a, bform, POS) is None


class TestHamiltonian:
    def test_velocity_independent_force(self):
        hd = vc.hamiltonianize(vc.solve_myH(VIF, 1))
        q, p = hd.q_symbol, hd.p_symbol
        assert hd.q == x and hd.p == v
        assert simplify(sp.diff(hd.hamiltonian, p) - p) == 0
        assert simplify(sp.diff(hd.hamiltonian, q) + F(t, q)) == 0

    def test_bateman_caldirola(self):
        hd = vc.hamiltonianize(vc.solve_myH(DAMPED, sp.exp(2 * b * t)), (b, w))
        q, p = hd.q_symbol, hd.p_symbol
        assert simplify(hd.p - v * sp.exp(2 * b * t)) == 0
        target = (p**2 * sp.exp(-2 * b * t) + w**2 * sp.exp(2 * b * t) * q**2) / 2
        assert simplify(hd.hamiltonian - target) == 0
        assert vc.hamilton_check(DAMPED, hd).mode == "symbolic"

    def test_lane_emden(self):
        hd = vc.hamiltonianize(vc.solve_myH(LANE_EMDEN, t**2), (n,))
        q, p = hd.q_symbol, hd.p_symbol
        target = p**2 / (2 * t**2) + t**2 * q ** (n + 1) / (n + 1)
        assert simplify(hd.hamiltonian - target) == 0
        assert vc.hamilton_check(LANE_EMDEN, hd)

    def test_classical_lv(self):
        hd = vc.hamiltonianize(vc.solve_myH(CLASSICAL_LV, 1 / (x * y)), (A, C, K, M))
        q, p = hd.q_symbol, hd.p_symbol
        assert simplify(hd.p - sp.log(y) / x) == 0
        target = -K * sp.log(q) - M * q + A * p * q + C * sp.exp(p * q)
        assert simplify(hd.hamiltonian - target) == 0
        assert vc.hamilton_check(CLASSICAL_LV, hd)

    def test_reduced_gauge_applied(self):
        lf = vc.gauge_transform(vc.solve_myH(CLASSICAL_LV, 1 / (x * y)), x * y**2)
        hd = vc.hamiltonianize(lf, (A, C, K, M))
        assert hd.form.m_y == 0
        assert vc.hamilton_check(CLASSICAL_LV, hd)

    def test_implicit_inverse(self):
        s = FirstOrderSystem((x, y), (y + sp.exp(y), -x))
        lf = vc.LambdaForm((x, y), (-(y**2 / 2 + sp.exp(y) + sp.sin(y)), 0), 0, t)
        hd = vc.hamiltonianize(lf)
        assert hd.implicit and hd.hamiltonian is None
        assert not vc.hamilton_check(s, hd)


def test_energy_is_minus_h():
    lf = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
    assert simplify(lf.lagrangian().energy() - lf.energy()) == 0


# --- properties -----------------------------------------------------------

small = st.integers(-3, 3)


@st.composite
def gauge_functions(draw):
    """Polynomial-log gauge functions in (t, x, y)."""
    terms = []
    for _ in range(draw(st.integers(1, 3))):
        c = draw(small.filter(lambda k: k != 0))
        mono = t ** draw(st.integers(0, 2)) * x ** draw(st.integers(0, 2)) * y ** draw(st.integers(0, 2))
        extra = draw(st.sampled_from([1, sp.log(x), sp.log(y), sp.exp(t)]))
        terms.append(c * mono * extra)
    return sp.Add(*terms)


LV_FORM = vc.solve_myH(CLASSICAL_LV, 1 / (x * y))
HOST_FORM = vc.solve_myH(HOST, sp.exp(C * t) / (x * y**2))


@settings(max_examples=200, deadline=None, derandomize=True)
@given(gauge_functions(), st.sampled_from(["lv", "host"]))
def test_gauge_invariance(f, which):
    s, lf = (CLASSICAL_LV, LV_FORM) if which == "lv" else (HOST, HOST_FORM)
    g = vc.gauge_transform(lf, f)
    assert simplify(g.mu - lf.mu) == 0
    for wa, wb in zip(g.w, lf.w):
        assert simplify(wa - wb) == 0
    assert vc.closure_residual(g) == 0
    assert bool(vc.euler_lagrange_check(s, g)) == bool(vc.euler_lagrange_check(s, lf))


@settings(max_examples=200, deadline=None, derandomize=True)
@given(gauge_functions(), gauge_functions(), gauge_functions())
def test_closure_identity(mx, my, H):
    lf = vc.LambdaForm((x, y), (mx, my), H, t)
    assert vc.closure_residual(lf) == 0

import io
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from affinelag import catalog, multiplier
from affinelag import numverify as nv
from affinelag import varconstruct as vc
from affinelag.dynsys import FirstOrderSystem
from affinelag.errors import DomainExit, NumericOverflow, PreconditionError, UnboundSymbolError
from affinelag.symlang import Domain

t, x, y, v, b = sp.symbols("t x y v b")
OSC = FirstOrderSystem((x, v), (v, -x))
POS = Domain({"x": (0, math.inf), "y": (0, math.inf)})
LV = FirstOrderSystem((x, y), (x * (1 - y), y * (-1 + x)), domain=POS)


def describe(name):
    sf = catalog.get(name)
    s = sf.system()
    hd = vc.hamiltonianize(vc.solve_myH(s, multiplier.find(s)), s.parameters)
    return sf, s, hd


class TestIntegrate:
    def test_harmonic_oscillator(self):
        tr = nv.integrate(OSC, [1, 0], 0, 1e-3, 1000)
        assert abs(tr.states[-1][0] - math.cos(1)) < 1e-9
        assert tr.count == 1000 and tr.times[-1] == pytest.approx(1.0)

    def test_equilibrium(self):
        # x = -K/M, y = -A/C for A=1, C=-1, K=-1, M=1
        tr = nv.integrate(LV, [1, 1], 0, 1e-2, 100)
        assert np.all(tr.states == 1.0)

    def test_zero_steps(self):
        tr = nv.integrate(OSC, [0.3, -0.2], 0, 0.1, 0)
        assert tr.states.shape == (1, 2) and list(tr.states[0]) == [0.3, -0.2]

    def test_domain_exit(self):
        s = FirstOrderSystem((x, y), (-1, 0), domain=POS)
        with pytest.raises(DomainExit) as info:
            nv.integrate(s, [0.55, 1], 0, 0.1, 20)
        assert info.value.last_valid_index == 5

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_overflow(self):
        s = FirstOrderSystem((x, y), (x**2, 0))
        with pytest.raises(NumericOverflow) as info:
            nv.integrate(s, [10, 0], 0, 0.5, 50)
        assert info.value.last_valid_index is not None

    def test_bad_arguments(self):
        with pytest.raises(PreconditionError):
            nv.integrate(OSC, [1, 0], 0, -1, 10)
        with pytest.raises(PreconditionError):
            nv.integrate(LV, [-1, 1], 0, 0.1, 10)
        with pytest.raises(UnboundSymbolError):
            nv.integrate(FirstOrderSystem((x, v), (v, -b * x), (b,)), [1, 0], 0, 0.1, 1)

    def test_csv(self):
        tr = nv.integrate(OSC, [1, 0], 0, 0.5, 2)
        buf = io.StringIO()
        tr.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,x1,x2"
        assert len(lines) == 4
        assert lines[1] == "0.0,1.0,0.0"


def test_rk4_order():
    errs = []
    for h in (0.1, 0.05, 0.025):
        N = int(round(2 / h))
        tr = nv.integrate(OSC, [1, 0], 0, h, N)
        errs.append(np.max(np.abs(tr.states[:, 0] - np.cos(tr.times))))
    assert errs[0] / errs[1] >= 14
    assert errs[1] / errs[2] >= 14


@settings(max_examples=200, deadline=None, derandomize=True)
@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([0.1, 0.05, 0.025]))
def test_rk4_order_from_random_starts(x0, v0, h):
    if math.hypot(x0, v0) < 1e-3:
        return
    exact = lambda tt: x0 * np.cos(tt) + v0 * np.sin(tt)  # noqa: E731
    errs = []
    for step in (h, h / 2):
        tr = nv.integrate(OSC, [x0, v0], 0, step, int(round(1 / step)))
        errs.append(np.max(np.abs(tr.states[:, 0] - exact(tr.times))))
    assert errs[0] / errs[1] >= 14


class TestHamiltonFlow:
    def test_damped_oscillator(self):
        sf, s, hd = describe("damped-oscillator")
        r = nv.hamilton_flow_compare(s, hd, [1, 0], 0, 1e-3, 1000, {"b": 0.1, "omega": 1})
        assert r.passed and r.max_residual < 1e-6

    def test_classical_lv(self):
        sf, s, hd = describe("classical-lv")
        r = nv.hamilton_flow_compare(s, hd, [2, 1], 0, 1e-3, 1000, sf.test_values)
        assert r.passed

    def test_starts_identical(self):
        sf, s, hd = describe("lane-emden")
        r = nv.hamilton_flow_compare(s, hd, [1, 0], 0.5, 1e-3, 0, sf.test_values)
        assert r.max_residual == 0.0

    @pytest.mark.parametrize("name", ["damped-oscillator", "lane-emden", "classical-lv", "host-parasite"])
    def test_fourth_order_refinement(self, name):
        sf, s, hd = describe(name)
        t0 = sf.numeric.get("t0", 0.0)
        devs = [nv.hamilton_flow_compare(s, hd, sf.numeric["initial"], t0, h, int(round(2 / h)),
                                         sf.test_values).max_residual for h in (0.2, 0.1)]
        assert devs[0] / devs[1] >= 12

    def test_implicit_inverse(self):
        # p = y + exp(y) has no closed-form inverse
        s = FirstOrderSystem((x, y), (y, -x / (1 + sp.exp(y))))
        hd = vc.hamiltonianize(vc.solve_myH(s, 1 + sp.exp(y)))
        assert hd.implicit
        r = nv.hamilton_flow_compare(s, hd, [0.5, 0.2], 0, 1e-3, 500)
        assert r.passed and r.details["implicit"]


class TestConservation:
    def test_lv_energy(self):
        tr = nv.integrate(LV, [2, 1], 0, 1e-3, 5000)
        E = -sp.log(x) + x - sp.log(y) + y
        r = nv.conservation_check(LV, E, tr)
        assert r.passed and r.max_residual < 1e-6

    def test_damped_energy_drifts(self):
        sf, s, _ = describe("damped-oscillator")
        vals = {"b": 0.1, "omega": 1}
        tr = nv.integrate(s, [1, 0], 0, 1e-3, 5000, vals)
        w = sp.Symbol("omega")
        EL = -sp.exp(2 * b * t) * (v**2 + w**2 * x**2) / 2
        assert nv.conservation_check(s, EL, tr, vals).max_residual > 1e-2

    def test_constant(self):
        tr = nv.integrate(OSC, [1, 0], 0, 0.1, 10)
        assert nv.conservation_check(OSC, sp.Integer(1), tr).max_residual == 0


class TestFiniteDifferences:
    def test_exp(self):
        assert nv.fd_crosscheck(sp.exp(2 * b * t), "t").passed

    def test_log_quotient(self):
        assert nv.fd_crosscheck(sp.log(y) / x, "y", POS).passed

    def test_corrupted_table(self):
        # d/dy log(y)/x with the wrong sign
        r = nv.fd_crosscheck(sp.log(y) / x, "y", POS, derivative=-1 / (x * y))
        assert not r.passed

    def test_report_dict(self):
        d = nv.fd_crosscheck(x**3, "x").to_dict()
        assert set(d) == {"name", "mode", "max_residual", "tolerance", "pass"}
        assert d["pass"] is True

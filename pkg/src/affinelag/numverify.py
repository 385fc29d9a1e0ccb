"""Numerical oracles: fixed-step RK4, flow comparison, conservation, finite differences."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy import optimize

from .errors import (
    DomainExit,
    DomainViolation,
    NumericOverflow,
    PreconditionError,
    UnboundSymbolError,
)
from .symlang import Domain, differentiate, evaluate

FLOW_TOLERANCE = 1e-6
FD_STEP = 1e-6
FD_RTOL = 1e-5


@dataclass(frozen=True)
class VerificationReport:
    """One check: passes iff ``max_residual <= tolerance``."""

    name: str
    mode: str
    max_residual: float
    tolerance: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self):
        return bool(self.max_residual <= self.tolerance)

    def to_dict(self):
        return {
            "name": self.name,
            "mode": self.mode,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
        }


@dataclass(frozen=True)
class Trajectory:
    t0: float
    h: float
    states: np.ndarray
    names: tuple
    system: str = ""
    integrator: str = "RK4"

    @property
    def count(self):
        """Number of steps taken (``len(states) - 1``)."""
        return len(self.states) - 1

    @property
    def times(self):
        return self.t0 + self.h * np.arange(len(self.states))

    def at(self, k):
        return dict(zip(self.names, self.states[k]))

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *(f"x{i + 1}" for i in range(len(self.names)))])
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def _bind(expr, params):
    return sp.sympify(expr).subs({sp.Symbol(str(k)): sp.nsimplify(v) if isinstance(v, str) else v
                                  for k, v in (params or {}).items()})


def _compile(exprs, args, params):
    """Scalar callable for ``exprs`` in ``args`` with parameters substituted."""
    bound = [_bind(e, params) for e in exprs]
    for e in bound:
        stray = e.free_symbols - set(args)
        if stray:
            raise UnboundSymbolError(f"no value for {', '.join(sorted(s.name for s in stray))}")
        if e.atoms(sp.core.function.AppliedUndef):
            raise UnboundSymbolError("placeholder functions cannot be integrated numerically")
    return sp.lambdify(args, bound, modules="math")


def _rk4(rhs, y0, t0, h, N, names, domain, name):
    out = np.empty((N + 1, len(y0)))
    out[0] = y0
    y = np.array(y0, dtype=float)
    t = t0
    for k in range(N):
        try:
            k1 = np.array(rhs(t, *y))
            k2 = np.array(rhs(t + h / 2, *(y + h / 2 * k1)))
            k3 = np.array(rhs(t + h / 2, *(y + h / 2 * k2)))
            k4 = np.array(rhs(t + h, *(y + h * k3)))
        except OverflowError:
            raise NumericOverflow(f"overflow at step {k + 1}", last_valid_index=k) from None
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainExit(f"left the function domain at step {k + 1}: {exc}",
                             last_valid_index=k) from None
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * h
        if not np.all(np.isfinite(y)):
            raise NumericOverflow(f"non-finite state at step {k + 1}", last_valid_index=k)
        if domain is not None and not domain.contains(dict(zip(names, y))):
            raise DomainExit(f"state left the domain at step {k + 1}", last_valid_index=k)
        out[k + 1] = y
    return Trajectory(t0, h, out, tuple(names), name)


def integrate(s, initial, t0, h, N, params=None):
    """Classical RK4 with ``N`` fixed steps of size ``h`` from ``(t0, initial)``.

    ``params`` maps parameter names to numbers.  Raises :class:`DomainExit`
    or :class:`NumericOverflow` with the last valid grid index.
    """
    if h <= 0:
        raise PreconditionError("step size must be positive")
    names = tuple(x.name for x in s.states)
    y0 = [float(v) for v in (initial.values() if isinstance(initial, dict) else initial)]
    if len(y0) != s.dim:
        raise PreconditionError(f"initial state needs {s.dim} values")
    if not s.domain.contains(dict(zip(names, y0))):
        raise PreconditionError("initial state is outside the domain")
    rhs = _compile(s.velocities, (s.time, *s.states), params)
    return _rk4(rhs, y0, float(t0), float(h), int(N), names, s.domain, s.name)


def _hamilton_rhs(hd, params):
    """Right-hand side of Hamilton's equations in ``(t, q, p)``."""
    t, q, p = hd.time, hd.q_symbol, hd.p_symbol
    if not hd.implicit:
        dq, dp = hd.equations()
        return _compile([dq, dp], (t, q, p), params), None
    # implicit inverse: differentiate H~(t,q,p) = H(t,x,y(t,q,p)) through
    # the implicit function theorem
    lf = hd.form
    x, y = lf.states
    P = _bind(hd.p, params)
    H = _bind(lf.H, params)
    parts = _compile([sp.diff(H, x), sp.diff(H, y), sp.diff(P, x), sp.diff(P, y)],
                     (t, x, y), params)
    p_of = _compile([P], (t, x, y), params)

    def solve_y(tt, qq, pp, guess):
        f = lambda yy: p_of(tt, qq, yy)[0] - pp  # noqa: E731
        return float(optimize.newton(f, guess, tol=1e-14, maxiter=100))

    state = {"y": None}

    def rhs(tt, qq, pp):
        yy = state["y"] = solve_y(tt, qq, pp, state["y"])
        Hx, Hy, Px, Py = parts(tt, qq, yy)
        return [Hy / Py, -(Hx - Hy * Px / Py)]

    return rhs, (solve_y, state)


def hamilton_flow_compare(s, hd, initial, t0, h, N, params=None, tolerance=FLOW_TOLERANCE):
    """Integrate Hamilton's equations, map back to ``(x, y)`` and compare.

    Reports the largest absolute deviation from :func:`integrate` on ``s``.
    """
    ref = integrate(s, initial, t0, h, N, params)
    x, y = s.states
    t = s.time
    x0, y0 = ref.states[0]
    to_qp = _compile([hd.q, hd.p], (t, x, y), params)
    q0, p0 = to_qp(t0, x0, y0)
    rhs, implicit = _hamilton_rhs(hd, params)
    if implicit is not None:
        implicit[1]["y"] = y0
    qp = _rk4(rhs, [q0, p0], float(t0), float(h), int(N),
              (hd.q_symbol.name, hd.p_symbol.name), None, s.name)
    back = np.empty_like(ref.states)
    if implicit is None:
        inv = _compile([hd.inverse[x], hd.inverse[y]], (t, hd.q_symbol, hd.p_symbol), params)
        for k, (tt, (qq, pp)) in enumerate(zip(qp.times, qp.states)):
            back[k] = inv(tt, qq, pp)
    else:
        solve_y, state = implicit
        guess = y0
        for k, (tt, (qq, pp)) in enumerate(zip(qp.times, qp.states)):
            guess = solve_y(tt, qq, pp, guess)
            back[k] = (qq, guess)
    dev = float(np.max(np.abs(back - ref.states)))
    return VerificationReport(
        "hamilton-flow", "numeric", dev, tolerance,
        {"h": h, "steps": N, "t0": t0, "implicit": implicit is not None},
    )


def conservation_check(s, f, trajectory, params=None, tolerance=FLOW_TOLERANCE):
    """Largest ``|f(t_k, x_k) - f(t_0, x_0)|`` along ``trajectory``."""
    fn = _compile([f], (s.time, *s.states), params)
    vals = np.array([fn(t, *row)[0] for t, row in zip(trajectory.times, trajectory.states)])
    drift = float(np.max(np.abs(vals - vals[0])))
    return VerificationReport("conservation", "numeric", drift, tolerance, {"f": str(f)})


def fd_crosscheck(e, v, domain=None, derivative=None, *, samples=64, seed=0,
                  step=FD_STEP, rtol=FD_RTOL, bindings=None):
    """Compare a symbolic derivative with a central difference at sample points.

    ``derivative`` defaults to ``differentiate(e, v)``; passing another
    expression lets callers test a derivative table.  The error measure is
    ``|a - b| / (1 + |a|)``.
    """
    domain = domain or Domain()
    e = sp.sympify(e)
    v = sp.Symbol(str(v))
    d = differentiate(e, v) if derivative is None else sp.sympify(derivative)
    names = sorted({s.name for s in e.free_symbols | d.free_symbols | {v}})
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    for _ in range(samples * 50):
        if done == samples:
            break
        point = {**domain.sample(names, rng), **(bindings or {})}
        try:
            a = evaluate(d, point)
            hi = evaluate(e, {**point, v.name: point[v.name] + step})
            lo = evaluate(e, {**point, v.name: point[v.name] - step})
        except DomainViolation:
            continue
        done += 1
        fd = (hi - lo) / (2 * step)
        worst = max(worst, abs(a - fd) / (1.0 + abs(a)))
    return VerificationReport(f"fd-d/d{v}", "numeric", worst if done else math.inf, rtol,
                              {"points": done})

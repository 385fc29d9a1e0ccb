"""Affine Lagrangians from a Jacobi multiplier and their Hamiltonian form.

The 1-form ``lambda = sum_i m_i dx_i + H dt`` defines the Lagrangian
``L = sum_i m_i v_i + H``.  In two dimensions ``d(lambda) = mu i(Gamma) Omega``
reduces to the linear system

    dm_y/dx - dm_x/dy = mu
    dm_x/dt - dH/dx   = mu * Y
    dm_y/dt - dH/dy   = -mu * X

which :func:`solve_myH` solves in the gauge ``m_y = 0``.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace

import sympy as sp

from .errors import ConsistencyFailure, PreconditionError, SamplingError, UnboundSymbolError
from .multiplier import Multiplier
from .symlang import Domain, Equivalence, antiderivative, equivalent, simplify

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LambdaForm:
    """Coefficients of ``lambda = sum_i m_i dx_i + H dt``."""

    states: tuple
    m: tuple
    H: object
    time: sp.Symbol = sp.Symbol("t")
    side_conditions: tuple = ()
    notes: tuple = ()
    checks: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(sp.sympify(c) for c in self.m))
        object.__setattr__(self, "H", sp.sympify(self.H))
        if len(self.m) != len(self.states):
            raise PreconditionError("one m-coefficient per state variable is required")

    @property
    def m_x(self):
        return self.m[0]

    @property
    def m_y(self):
        return self.m[1]

    @property
    def has_fallback(self):
        """True when some coefficient still contains an unevaluated integral."""
        return any(c.has(sp.Integral) for c in (*self.m, self.H))

    def coefficient(self, var):
        return self.m[self.states.index(var)]

    def mu_matrix(self):
        """``mu_ij = dm_j/dx_i - dm_i/dx_j``."""
        n = len(self.states)
        xs, m = self.states, self.m
        return sp.Matrix(n, n, lambda i, j: simplify(sp.diff(m[j], xs[i]) - sp.diff(m[i], xs[j])))

    @property
    def mu(self):
        """Two-dimensional ``mu = dm_y/dx - dm_x/dy``."""
        x, y = self.states
        return simplify(sp.diff(self.m_y, x) - sp.diff(self.m_x, y))

    @property
    def w(self):
        """``w_i = dm_i/dt - dH/dx_i``."""
        return tuple(
            simplify(sp.diff(mi, self.time) - sp.diff(self.H, xi))
            for xi, mi in zip(self.states, self.m)
        )

    def velocity_symbols(self):
        return tuple(sp.Symbol(f"{x.name}dot") for x in self.states)

    def lagrangian(self):
        """The affine Lagrangian ``L = i_T lambda``."""
        return AffineLagrangian(self)

    def energy(self):
        """Lagrangian energy ``sum_i v_i dL/dv_i - L``, which is ``-H``."""
        return -self.H


@dataclass(frozen=True)
class AffineLagrangian:
    form: LambdaForm

    @property
    def velocities(self):
        return self.form.velocity_symbols()

    @property
    def expr(self):
        return sp.Add(*(m * v for m, v in zip(self.form.m, self.velocities))) + self.form.H

    def energy(self):
        L = self.expr
        return simplify(sp.Add(*(v * sp.diff(L, v) for v in self.velocities)) - L)


def _closed(e, var, domain):
    """Whether ``e`` is independent of ``var`` (symbolically or numerically)."""
    d = simplify(sp.diff(e, var))
    if d == 0:
        return Equivalence(True, "symbolic")
    try:
        return equivalent(d, 0, domain)
    except (SamplingError, UnboundSymbolError):
        return Equivalence(False, "numeric")


def _base(domain, var):
    return sp.Integer(1) if domain.is_positive(var) else sp.Integer(0)


def _drop(e, var, domain):
    """Remove a dependence on ``var`` that is known to be spurious."""
    e = simplify(e)
    if e.has(var):
        e = simplify(e.subs(var, _base(domain, var)))
    return e


def myH_residuals(s, lf, mu):
    """The three residuals of the linear system for ``(m_x, m_y, H)``."""
    (x, y), (X, Y), t = s.states, s.velocities, s.time
    mx, my, H = lf.m_x, lf.m_y, lf.H
    mu = sp.sympify(mu)
    return (
        sp.diff(my, x) - sp.diff(mx, y) - mu,
        sp.diff(mx, t) - sp.diff(H, x) - mu * Y,
        sp.diff(my, t) - sp.diff(H, y) + mu * X,
    )


def _require_2d(s):
    if s.dim != 2:
        raise PreconditionError(f"two state variables required, got {s.dim}")


def solve_myH(s, mu):
    """Particular solution of the linear system in the gauge ``m_y = 0``.

    ``m_x = -int mu dy``; ``H = int mu X dy + g(t, x)`` where ``g`` integrates
    the ``y``-independent remainder of the second equation.  All three
    equations are re-verified on the result (see ``LambdaForm.checks``).
    """
    _require_2d(s)
    if isinstance(mu, Multiplier):
        conds = list(mu.side_conditions)
        mu = mu.mu
    else:
        conds = []
    mu = sp.sympify(mu)
    (x, y), (X, Y), t = s.states, s.velocities, s.time

    m_x = simplify(-antiderivative(mu, y, conds))
    I1 = antiderivative(mu * X, y, conds)
    rhs = sp.diff(m_x, t) - sp.diff(I1, x) - mu * Y
    indep = _closed(rhs, y, s.domain)
    if not indep:
        raise ConsistencyFailure(
            f"d/d{y} of the remainder is not zero; the multiplier does not satisfy "
            f"the multiplier equation for this system (remainder {simplify(rhs)})"
        )
    g = antiderivative(_drop(rhs, y, s.domain), x, conds)
    H = simplify(I1 + g)

    notes = []
    if indep.mode == "numeric":
        notes.append(f"{y}-independence of the remainder verified numerically")
    lf = LambdaForm((x, y), (m_x, sp.Integer(0)), H, t, tuple(dict.fromkeys(conds)), tuple(notes))
    if lf.has_fallback:
        lf = replace(lf, notes=lf.notes + ("antiderivative-fallback: unevaluated integrals remain",))
    residuals = myH_residuals(s, lf, mu)
    checks = {
        name: equivalent(r, 0, s.domain)
        for name, r in zip(("mu", "w_x", "w_y"), residuals)
    }
    if not all(checks.values()):
        failed = [k for k, v in checks.items() if not v]
        raise ConsistencyFailure(f"constructed coefficients violate equation(s) {failed}")
    return replace(lf, checks=checks)


def euler_lagrange_check(s, lf):
    """Check that the Euler-Lagrange equations of ``lf`` are ``s`` in normal form.

    Two dimensions: ``-w_y/mu == X`` and ``w_x/mu == Y``.  Returns an
    :class:`Equivalence`; falsy when either identity fails or ``mu == 0``.
    """
    _require_2d(s)
    mu = lf.mu
    if mu == 0:
        return Equivalence(False, "symbolic", residual=mu)
    w_x, w_y = lf.w
    X, Y = s.velocities
    try:
        return Equivalence.all(
            [equivalent(-w_y / mu, X, s.domain), equivalent(w_x / mu, Y, s.domain)]
        )
    except (SamplingError, UnboundSymbolError):
        return Equivalence(False, "numeric")


def closure_residual(lf):
    """``d mu/dt - d w_y/dx + d w_x/dy`` (two dimensions), simplified."""
    x, y = lf.states
    w_x, w_y = lf.w
    return simplify(sp.diff(lf.mu, lf.time) - sp.diff(w_y, x) + sp.diff(w_x, y))


def gauge_transform(lf, f):
    """``lambda -> lambda + df``."""
    f = sp.sympify(f)
    m = tuple(simplify(mi + sp.diff(f, xi)) for xi, mi in zip(lf.states, lf.m))
    return LambdaForm(
        lf.states, m, simplify(lf.H + sp.diff(f, lf.time)), lf.time,
        lf.side_conditions, lf.notes + (f"gauge-transformed by f = {f}",),
    )


def exact_potential(components, coords, domain=None):
    """Find ``f`` with ``df/dc = components[c]`` for every coordinate ``c``.

    Integrates coordinate by coordinate (a line integral along the axes with
    constants dropped).  Returns None when the 1-form is not closed.
    """
    domain = domain or Domain()
    comps = [simplify(c) for c in components]
    if all(c == 0 for c in comps):
        return sp.Integer(0)
    try:
        for (i, ci), (j, cj) in itertools.combinations(enumerate(coords), 2):
            if not equivalent(sp.diff(comps[j], ci) - sp.diff(comps[i], cj), 0, domain):
                return None
    except (SamplingError, UnboundSymbolError):
        return None
    f = sp.Integer(0)
    for k, (c, comp) in enumerate(zip(coords, comps)):
        rest = comp - sp.diff(f, c)
        for earlier in coords[:k]:
            rest = _drop(rest, earlier, domain)
        f = f + antiderivative(simplify(rest), c)
    f = simplify(f)
    check = Equivalence.all(
        equivalent(sp.diff(f, c), comp, domain) for c, comp in zip(coords, comps)
    )
    if not check:
        log.warning("potential construction failed verification")
        return None
    return f


def gauge_equivalent(a, b, domain=None):
    """Return ``f`` with ``lambda_a - lambda_b = df``, or None if there is none."""
    if tuple(a.states) != tuple(b.states):
        raise PreconditionError("forms live on different state spaces")
    comps = [ma - mb for ma, mb in zip(a.m, b.m)] + [a.H - b.H]
    return exact_potential(comps, (*a.states, a.time), domain)


# ----------------------------------------------------------------------
# Hamiltonian description


@dataclass(frozen=True)
class HamiltonianDescription:
    """Canonical coordinates ``q(t,x,y)``, ``p(t,x,y)`` and ``H~(t,q,p)``.

    ``inverse`` maps the state variables to expressions in ``(t, q, p)``;
    ``y`` is None there when ``p = -m_x`` could not be inverted in closed
    form (``implicit`` is then True and only numerical checks apply).
    """

    q: object
    p: object
    hamiltonian: object
    q_symbol: sp.Symbol
    p_symbol: sp.Symbol
    inverse: dict
    form: LambdaForm
    time: sp.Symbol = sp.Symbol("t")
    implicit: bool = False
    side_conditions: tuple = ()

    def equations(self):
        """Hamilton's equations ``(dH/dp, -dH/dq)``."""
        H, q, p = self.hamiltonian, self.q_symbol, self.p_symbol
        return simplify(sp.diff(H, p)), simplify(-sp.diff(H, q))


def _invert_in(m, y, p):
    """Solve ``p = m(y)`` for the patterns linear/power/log in ``y``."""
    b, dep = m.as_independent(y, as_Add=True)
    a, kernel = sp.factor_terms(dep).as_independent(y, as_Add=False)
    kernel = sp.powsimp(kernel, combine="exp")
    if kernel == y:
        return (p - b) / a
    if kernel.is_Pow and kernel.base == y and not kernel.exp.has(y):
        k = kernel.exp
        # positive factors (exponentials, powers of the other coordinate) can
        # be taken out of the root; the rest stays with p
        pos, rest = [], []
        for f in sp.Mul.make_args(a):
            (pos if isinstance(f, sp.exp) or (f.is_Pow and f.base.is_Symbol
                                              and not f.exp.is_Integer) else rest).append(f)
        root = ((p - b) / sp.Mul(*rest)) ** (1 / k)
        return root * sp.Mul(*(sp.powdenest(f ** (-1 / k), force=True) for f in pos))
    if isinstance(kernel, sp.log) and kernel.args[0] == y:
        return sp.exp((p - b) / a)
    return None


def _fresh(name, taken):
    while name in taken:
        name += "_"
    return sp.Symbol(name)


def reduced_gauge(lf):
    """Gauge-transform so that ``m_y = 0``."""
    x, y = lf.states
    if simplify(lf.m_y) == 0:
        return lf
    return gauge_transform(lf, -antiderivative(lf.m_y, y))


def hamiltonianize(lf, parameters=()):
    """Canonical variables ``q = x``, ``p = -m_x`` and ``H~ = H(t, q, y(t,q,p))``."""
    if len(lf.states) != 2:
        raise PreconditionError("hamiltonianize needs a two-dimensional form")
    lf = reduced_gauge(lf)
    x, y = lf.states
    t = lf.time
    taken = {s.name for s in (*lf.states, t, *map(sp.Symbol, map(str, parameters)))}
    taken |= {s.name for s in lf.H.free_symbols | lf.m_x.free_symbols}
    q, p = _fresh("q", taken), _fresh("p", taken)
    p_expr = simplify(-lf.m_x)
    y_of = _invert_in(p_expr.subs(x, q), y, p)
    if y_of is None:
        return HamiltonianDescription(
            x, p_expr, None, q, p, {x: q, y: None}, lf, t, True, lf.side_conditions
        )
    y_of = simplify(y_of)
    H = simplify(lf.H.subs(x, q).subs(y, y_of))
    return HamiltonianDescription(
        x, p_expr, H, q, p, {x: q, y: y_of}, lf, t, False, lf.side_conditions
    )


def hamilton_check(s, hd):
    """Symbolic/numeric check that Hamilton's equations reproduce ``s``.

    Pulls ``dH/dp`` and ``-dH/dq`` back to ``(t, x, y)`` and compares with
    ``Gamma(q)`` and ``Gamma(p)``.
    """
    from .dynsys import gamma_apply

    if hd.implicit:
        return Equivalence(False, "numeric")
    q_dot, p_dot = hd.equations()
    back = {hd.q_symbol: hd.q, hd.p_symbol: hd.p}
    try:
        return Equivalence.all(
            [
                equivalent(q_dot.subs(back), gamma_apply(s, hd.q), s.domain),
                equivalent(p_dot.subs(back), gamma_apply(s, hd.p), s.domain),
            ]
        )
    except (SamplingError, UnboundSymbolError):
        return Equivalence(False, "numeric")

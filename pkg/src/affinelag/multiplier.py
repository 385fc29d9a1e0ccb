"""Jacobi multipliers: verification, ansatz search and the reverse problem.

A nonvanishing ``mu`` is a Jacobi multiplier of ``Gamma = d/dt + X_i d/dx_i``
when ``d(mu)/dt + sum_i d(mu X_i)/dx_i = 0``, equivalently
``Gamma(log mu) + div Gamma = 0``.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import sympy as sp

from .dynsys import divergence, gamma_apply
from .errors import DomainViolation, NoMultiplierFound, NotAMultiplierError, SamplingError
from .errors import UnboundSymbolError, VanishingMultiplierError
from .symlang import Domain, antiderivative, equivalent, evaluate, simplify

log = logging.getLogger(__name__)

FAMILIES = (
    "constant",
    "time-only",
    "exp-phi-quadratic-force",
    "monomial-exponential",
    "state-only",
)

NONVANISHING_SAMPLES = 16
NONVANISHING_TOL = 1e-12


@dataclass(frozen=True)
class Multiplier:
    mu: object
    family: str = "user-supplied"
    side_conditions: tuple = ()
    verification: str = "symbolic"
    notes: tuple = ()

    def with_family(self, family, side_conditions=(), notes=()):
        return replace(
            self,
            family=family,
            side_conditions=tuple(self.side_conditions) + tuple(side_conditions),
            notes=tuple(self.notes) + tuple(notes),
        )


def multiplier_residual(s, mu):
    """``d(mu)/dt + sum_i d(mu X_i)/dx_i`` (not simplified)."""
    mu = sp.sympify(mu)
    return sp.diff(mu, s.time) + sp.Add(
        *(sp.diff(mu * X, x) for x, X in zip(s.states, s.velocities))
    )


def log_residual(s, mu):
    """``Gamma(log mu) + div Gamma`` built from logarithmic derivatives."""
    mu = sp.sympify(mu)
    terms = [sp.diff(mu, s.time) / mu]
    terms += [X * sp.diff(mu, x) / mu for x, X in zip(s.states, s.velocities)]
    terms += [sp.diff(X, x) for x, X in zip(s.states, s.velocities)]
    return sp.Add(*terms)


def _check_nonvanishing(s, mu, seed=0):
    names = {x.name for x in sp.sympify(mu).free_symbols}
    if sp.sympify(mu).has(sp.core.function.AppliedUndef):
        return "nonvanishing not sampled: multiplier contains placeholder functions"
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(NONVANISHING_SAMPLES):
        try:
            point = s.domain.sample(names, rng)
            value = evaluate(mu, point)
        except (DomainViolation, SamplingError):
            continue
        checked += 1
        if abs(value) < NONVANISHING_TOL:
            raise VanishingMultiplierError(
                f"multiplier vanishes at {point}", residual=sp.sympify(mu)
            )
    if checked == 0:
        return "nonvanishing not sampled: no evaluable domain point"
    return None


def verify(s, mu, *, seed=0):
    """Certify ``mu`` as a Jacobi multiplier of ``s``.

    Returns a :class:`Multiplier` whose ``verification`` is ``"symbolic"``
    when the residual simplifies to literal zero (directly or in its
    logarithmic form) and ``"numeric"`` when it only vanishes at sampled
    points.  Raises :class:`NotAMultiplierError` otherwise.
    """
    mu = sp.sympify(mu)
    if mu == 0:
        raise VanishingMultiplierError("multiplier is identically zero", residual=mu)
    notes = []
    note = _check_nonvanishing(s, mu, seed)
    if note:
        notes.append(note)
    residual = simplify(multiplier_residual(s, mu))
    if residual == 0 or simplify(log_residual(s, mu)) == 0:
        return Multiplier(mu, verification="symbolic", notes=tuple(notes))
    try:
        eq = equivalent(residual, 0, s.domain, seed=seed)
    except (SamplingError, UnboundSymbolError) as exc:
        raise NotAMultiplierError(f"residual not zero ({exc})", residual=residual) from None
    if eq:
        return Multiplier(mu, verification="numeric", notes=tuple(notes))
    raise NotAMultiplierError(f"not a Jacobi multiplier, residual {residual}", residual=residual)


# ----------------------------------------------------------------------
# ansatz families


class _FamilyFailed(Exception):
    pass


def _is_zero(e, domain):
    e = simplify(e)
    if e == 0:
        return True
    try:
        return bool(equivalent(e, 0, domain))
    except (SamplingError, UnboundSymbolError):
        return False


def _family_constant(s, div):
    if not _is_zero(div, s.domain):
        raise _FamilyFailed(f"divergence {div} is not identically zero")
    return sp.Integer(1), (), ()


def _family_time_only(s, div):
    if div.free_symbols & set(s.states):
        raise _FamilyFailed("divergence depends on the state variables")
    conds = []
    mu = simplify(sp.exp(-antiderivative(div, s.time, conds)))
    return mu, tuple(conds), ()


def _base_value(domain, var):
    return sp.Integer(1) if domain.is_positive(var) else sp.Integer(0)


def _shift_base(expr_at, var, base):
    for candidate in (base, base + 1, base + 2, sp.Rational(1, 2)):
        value = expr_at(candidate)
        if value.is_finite is not False and not value.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
            return candidate, value
    raise _FamilyFailed(f"no regular base point for {var}")


def quadratic_force_parts(s):
    """Split ``F`` as ``A + B v + C v**2``; None if not quadratic in ``v``."""
    if not s.is_mechanical:
        return None
    v = s.states[1]
    try:
        poly = sp.Poly(sp.expand(s.force), v)
    except sp.PolynomialError:
        return None
    if poly.degree() > 2 or any(c.has(v) for c in poly.all_coeffs()):
        return None
    return tuple(simplify(poly.coeff_monomial(v**k)) for k in range(3))


def _family_quadratic_force(s, div):
    parts = quadratic_force_parts(s)
    if parts is None:
        raise _FamilyFailed("not a lifted mechanical system with force quadratic in v")
    _, B, C = parts
    t, x = s.time, s.states[0]
    if not _is_zero(sp.diff(B, x) - 2 * sp.diff(C, t), s.domain):
        raise _FamilyFailed("B dt + 2C dx is not closed")
    conds = []
    x0 = _base_value(s.domain, x)
    t0 = _base_value(s.domain, t)
    Q = antiderivative(2 * C, x, conds)
    x0, Q0 = _shift_base(lambda c: Q.subs(x, c), x, x0)
    B0 = B.subs(x, x0)
    P = antiderivative(B0, t, conds)
    t0, P0 = _shift_base(lambda c: P.subs(t, c), t, t0)
    phi = simplify((P - P0) + (Q - Q0))
    # additive constants only rescale mu
    phi = simplify(phi - phi.as_independent(t, x, as_Add=True)[0])
    notes = (f"phi = {phi} from base point ({t}, {x}) = ({t0}, {x0})",)
    return simplify(sp.exp(-phi)), tuple(conds), notes


def _family_monomial_exponential(s, div):
    t = s.time
    r = sp.Dummy("r")
    ps = [sp.Dummy(f"p{i}") for i in range(s.dim)]
    expr = r + div + sp.Add(*(p * X / x for p, x, X in zip(ps, s.states, s.velocities)))
    num = sp.numer(sp.together(sp.expand(expr)))
    try:
        poly = sp.Poly(sp.expand(num), *s.states, t)
    except sp.PolynomialError:
        raise _FamilyFailed("ansatz residual is not polynomial in (t, states)") from None
    unknowns = [r, *ps]
    eqs = [c for c in poly.coeffs() if c != 0]
    if any(not sp.Poly(c, *unknowns).is_linear for c in eqs if c.has(*unknowns)):
        raise _FamilyFailed("exponent equations are not linear")
    sols = sp.linsolve(eqs, unknowns)
    if not sols:
        raise _FamilyFailed("exponent linear system is inconsistent")
    (sol,) = sols
    if any(v.has(*unknowns) for v in sol):
        raise _FamilyFailed("exponent linear system is degenerate (non-unique solution)")
    sol = [sp.factor(sp.cancel(v)) for v in sol]
    conds = []
    for v in sol:
        d = sp.denom(sp.together(v))
        if not d.is_number:
            for f in sp.Mul.make_args(sp.factor(d)):
                base = f.base if f.is_Pow else f
                if not base.is_number and base not in conds:
                    conds.append(base)
    r_val, p_vals = sol[0], sol[1:]
    mu = sp.exp(r_val * t) * sp.Mul(*(x**p for x, p in zip(s.states, p_vals)))
    note = "exponents: " + ", ".join(
        f"{name}={val}" for name, val in zip(["r", *(f"p_{x}" for x in s.states)], sol)
    )
    return mu, tuple(conds), (note,)


def _family_state_only(s, div):
    for x, X in zip(s.states, s.velocities):
        if X == 0:
            continue
        g = simplify(div / X)
        if g.free_symbols & ({s.time} | set(s.states)) <= {x}:
            conds = []
            mu = simplify(sp.exp(-antiderivative(g, x, conds)))
            return mu, tuple(conds), (f"single-variable multiplier in {x}",)
    raise _FamilyFailed("div(Gamma)/X_i depends on more than x_i for every i")


_FAMILY_FUNCS = {
    "constant": _family_constant,
    "time-only": _family_time_only,
    "exp-phi-quadratic-force": _family_quadratic_force,
    "monomial-exponential": _family_monomial_exponential,
    "state-only": _family_state_only,
}


def find(s, *, all_families=False, seed=0):
    """Search the ansatz families in their fixed order.

    Returns the first verified :class:`Multiplier`, or with
    ``all_families=True`` the list of every family that succeeds (still in
    family order).  Raises :class:`NoMultiplierFound` with per-family reasons
    when none applies.
    """
    div = divergence(s)
    reasons = {}
    found = []
    for family in FAMILIES:
        try:
            mu, conds, notes = _FAMILY_FUNCS[family](s, div)
            m = verify(s, mu, seed=seed)
        except _FamilyFailed as exc:
            reasons[family] = str(exc)
            log.debug("family %s failed: %s", family, exc)
            continue
        except NotAMultiplierError as exc:
            reasons[family] = f"candidate rejected: {exc}"
            continue
        m = m.with_family(family, conds, notes)
        if not all_families:
            return m
        found.append(m)
    if not found:
        raise NoMultiplierFound(reasons)
    return found


# ----------------------------------------------------------------------
# reverse problem: forces admitting a prescribed multiplier shape

FORCE_SHAPES = ("mu-constant", "mu-of-t", "mu-of-x", "mu-of-v", "mu-of-tx", "product-a(t)b(v)")

T, X, V = sp.symbols("t x v")
Z = sp.Symbol("z")

@dataclass(frozen=True)
class ForceFamily:
    """Force template ``F(t, x, v)`` together with its multiplier template."""

    family: str
    force: object
    multiplier: object
    placeholders: dict = field(default_factory=dict)  # name -> argument symbols

    @property
    def functions(self):
        return {name: len(args) for name, args in self.placeholders.items()}


def _f(name, *args):
    return sp.Function(name)(*args)


def _log_derivative(mu, var):
    return simplify(sp.diff(mu, var) / mu)


def classify_force(shape, mu=None):
    """Family of forces admitting a multiplier of the given shape.

    With ``mu=None`` the multiplier itself is a placeholder; otherwise the
    template is specialised to the given expression in ``t``, ``x``, ``v``.
    """
    if shape not in FORCE_SHAPES:
        raise ValueError(f"unsupported shape {shape!r}; choose from {', '.join(FORCE_SHAPES)}")
    phi = _f("phi", T, X)
    ph = {"phi": (T, X)}
    if shape == "mu-constant":
        return ForceFamily(shape, phi, sp.sympify(mu if mu is not None else 1), ph)
    if shape == "mu-of-t":
        if mu is None:
            k = _f("k", T)
            mu = sp.exp(-sp.Integral(_f("k", Z), (Z, T)))
            return ForceFamily(shape, k * V + phi, mu, {**ph, "k": (T,)})
        k = -_log_derivative(mu, T)
        return ForceFamily(shape, k * V + phi, sp.sympify(mu), ph)
    if shape == "mu-of-x":
        if mu is None:
            k = _f("k", X)
            mu = sp.exp(-2 * sp.Integral(_f("k", Z), (Z, X)))
            return ForceFamily(shape, k * V**2 + phi, mu, {**ph, "k": (X,)})
        k = simplify(-_log_derivative(mu, X) / 2)
        return ForceFamily(shape, k * V**2 + phi, sp.sympify(mu), ph)
    if shape == "mu-of-v":
        if mu is None:
            Phi = _f("Phi", V)
            return ForceFamily(shape, phi * Phi, 1 / Phi, {**ph, "Phi": (V,)})
        return ForceFamily(shape, simplify(phi / sp.sympify(mu)), sp.sympify(mu), ph)
    if shape == "mu-of-tx":
        A = _f("A", T, X)
        if mu is None:
            force = A + sp.diff(phi, T) * V + sp.diff(phi, X) * V**2 / 2
            return ForceFamily(shape, force, sp.exp(-phi), {"phi": (T, X), "A": (T, X)})
        B = -_log_derivative(mu, T)
        C = -_log_derivative(mu, X) / 2
        return ForceFamily(shape, A + B * V + simplify(C) * V**2, sp.sympify(mu), {"A": (T, X)})
    # product-a(t)b(v)
    if mu is None:
        a, b = _f("a", T), _f("b", V)
        A = -sp.diff(a, T) / a
        force = (phi + A * sp.Integral(_f("b", Z), (Z, V))) / b
        return ForceFamily(shape, force, a * b, {**ph, "a": (T,), "b": (V,)})
    mu = sp.sympify(mu)
    a, b = mu.as_independent(V, as_Add=False)
    if a.has(V) or b.has(T) or mu.has(X):
        raise ValueError(f"{mu} does not split as a(t)*b(v)")
    A = -_log_derivative(a, T)
    force = (phi + A * antiderivative(b, V)) / b
    return ForceFamily(shape, simplify(force), mu, ph)


def instantiate(expr, ff, bindings):
    """Replace placeholder functions by concrete expressions.

    ``bindings`` maps placeholder names to expressions written in the
    placeholder's own argument symbols (``k`` in ``t``, ``phi`` in ``t, x``,
    ...).
    """
    expr = sp.sympify(expr)
    for name, body in bindings.items():
        args = ff.placeholders[name]
        expr = expr.replace(sp.Function(name), sp.Lambda(args, sp.sympify(body)))
    return expr.doit() if expr.has(sp.Integral, sp.Derivative) else expr


def force_residual(force, mu):
    """``Gamma(log mu) + dF/dv`` for ``x' = v, v' = F``."""
    mu = sp.sympify(mu)
    gamma_log = (sp.diff(mu, T) + V * sp.diff(mu, X) + force * sp.diff(mu, V)) / mu
    return simplify(gamma_log + sp.diff(force, V))


def roundtrip_check(ff, bindings=None, domain=None):
    """Instantiate the family and test ``Gamma(log mu) + dF/dv == 0``."""
    bindings = bindings or {}
    force = instantiate(ff.force, ff, bindings)
    mu = instantiate(ff.multiplier, ff, bindings)
    residual = force_residual(force, mu)
    if residual == 0:
        return True
    if residual.has(sp.core.function.AppliedUndef):
        return False
    try:
        return bool(equivalent(residual, 0, domain or Domain()))
    except (SamplingError, UnboundSymbolError):
        return False


__all__ = [
    "FAMILIES",
    "FORCE_SHAPES",
    "ForceFamily",
    "Multiplier",
    "classify_force",
    "find",
    "force_residual",
    "gamma_apply",
    "instantiate",
    "log_residual",
    "multiplier_residual",
    "roundtrip_check",
    "verify",
]

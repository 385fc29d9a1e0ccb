"""Pointwise evaluation, sampling domains and the equivalence test."""

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy import integrate

from ..errors import DomainViolation, SamplingError, UnboundSymbolError
from .calculus import simplify

INF = math.inf

EXCLUSION_TOL = 1e-8
MAX_REJECTIONS = 1000


def _name(key):
    return key.name if isinstance(key, sp.Basic) else str(key)


@dataclass(frozen=True)
class Domain:
    """Open box (per-variable intervals) minus a list of hypersurfaces.

    Symbols without an interval are sampled from ``default``.
    """

    intervals: dict = field(default_factory=dict)
    exclusions: tuple = ()
    default: tuple = (-2.0, 2.0)

    def __post_init__(self):
        object.__setattr__(
            self, "intervals", {_name(k): tuple(map(float, v)) for k, v in self.intervals.items()}
        )
        object.__setattr__(self, "exclusions", tuple(sp.sympify(e) for e in self.exclusions))

    def interval(self, name):
        return self.intervals.get(_name(name), (-INF, INF))

    def is_positive(self, name):
        lo, _ = self.interval(name)
        return lo >= 0

    def updated(self, intervals=None, exclusions=()):
        merged = dict(self.intervals)
        merged.update({_name(k): v for k, v in (intervals or {}).items()})
        return Domain(merged, self.exclusions + tuple(exclusions), self.default)

    def _draw(self, name, rng):
        lo, hi = self.interval(name)
        if math.isinf(lo) and math.isinf(hi):
            return rng.uniform(*self.default)
        if math.isinf(hi):
            return lo + rng.uniform(0.1, 2.5)
        if math.isinf(lo):
            return hi - rng.uniform(0.1, 2.5)
        w = hi - lo
        return rng.uniform(lo + 0.05 * w, hi - 0.05 * w)

    def contains(self, point):
        for name, value in point.items():
            lo, hi = self.interval(name)
            if not lo < value < hi:
                return False
        for ex in self.exclusions:
            syms = {s.name for s in ex.free_symbols}
            if not syms <= set(point):
                continue
            try:
                if abs(evaluate(ex, point)) < EXCLUSION_TOL:
                    return False
            except DomainViolation:
                return False
        return True

    def sample(self, names, rng):
        """Draw one admissible point for ``names``; raises after too many rejections."""
        names = sorted({_name(n) for n in names})
        for _ in range(MAX_REJECTIONS):
            point = {n: float(self._draw(n, rng)) for n in names}
            if self.contains(point):
                return point
        raise SamplingError(f"{MAX_REJECTIONS} consecutive draws rejected by the domain")


# ----------------------------------------------------------------------
# evaluation

_UNARY = {
    sp.exp: math.exp,
    sp.sin: math.sin,
    sp.cos: math.cos,
}


def _log(x):
    if x <= 0:
        raise DomainViolation(f"log of non-positive value {x!r}")
    return math.log(x)


def _pow(b, e):
    if b == 0 and e < 0:
        raise DomainViolation("division by zero")
    if b < 0 and not float(e).is_integer():
        raise DomainViolation(f"non-integer power {e!r} of negative base {b!r}")
    try:
        return b**e
    except OverflowError as exc:
        raise DomainViolation(str(exc)) from None


def _quad(fn, lo, hi):
    val, _ = integrate.quad(fn, lo, hi, epsrel=1e-10, epsabs=0.0, limit=200)
    return val


class _Evaluator:
    def __init__(self, values, funcs):
        self.values = values
        self.funcs = funcs

    @classmethod
    def from_bindings(cls, bindings):
        values, funcs = {}, {}
        for k, v in bindings.items():
            if callable(v):
                funcs[_name(k)] = v
            else:
                values[_name(k)] = float(v)
        return cls(values, funcs)

    def __call__(self, e):
        if e.is_Number:
            return float(e)
        if e.is_Symbol:
            try:
                return self.values[e.name]
            except KeyError:
                raise UnboundSymbolError(f"unbound symbol {e.name!r}") from None
        if e is sp.E:
            return math.e
        if e is sp.pi:
            return math.pi
        if e.is_Add:
            return math.fsum(self(a) for a in e.args)
        if e.is_Mul:
            out = 1.0
            for a in e.args:
                out *= self(a)
            return out
        if e.is_Pow:
            b = self(e.base)
            ex = self(e.exp)
            if e.exp.is_Integer or float(ex).is_integer():
                if b == 0 and ex < 0:
                    raise DomainViolation("division by zero")
                try:
                    return b ** int(ex) if abs(ex) < 2**31 else _pow(b, ex)
                except OverflowError as exc:
                    raise DomainViolation(str(exc)) from None
            return _pow(b, ex)
        if isinstance(e, sp.log):
            return _log(self(e.args[0]))
        if e.func in _UNARY:
            try:
                return _UNARY[e.func](self(e.args[0]))
            except OverflowError as exc:
                raise DomainViolation(str(exc)) from None
        if isinstance(e, sp.Abs):
            return abs(self(e.args[0]))
        if isinstance(e, sp.Integral):
            return self._integral(e)
        if isinstance(e, sp.core.function.AppliedUndef):
            name = e.func.__name__
            if name not in self.funcs:
                raise UnboundSymbolError(f"unbound function {name!r}")
            return float(self.funcs[name](*[self(a) for a in e.args]))
        if isinstance(e, sp.Derivative):
            return self(e.doit()) if not e.doit().has(sp.Derivative) else self._fd(e)
        raise UnboundSymbolError(f"cannot evaluate node {e.func.__name__}")

    def _integral(self, e):
        (z, *bounds), = e.limits
        lo, hi = (0.0, self(bounds[0])) if len(bounds) == 1 else map(self, bounds)
        sub = _Evaluator(dict(self.values), self.funcs)

        def fn(s):
            sub.values[z.name] = s
            return sub(e.function)

        return _quad(fn, lo, hi)

    def _fd(self, e):
        # derivatives of placeholder functions bound to callables
        (v, k), = e.variable_count
        if k != 1:
            raise UnboundSymbolError("higher derivative of an unbound function")
        h = 1e-6
        base = self.values[v.name]
        out = []
        for s in (base + h, base - h):
            self.values[v.name] = s
            out.append(self(e.expr))
        self.values[v.name] = base
        return (out[0] - out[1]) / (2 * h)


def evaluate(e, bindings):
    """Evaluate ``e`` at the given symbol values (IEEE double).

    ``bindings`` maps symbols or names to numbers, and placeholder function
    names to Python callables.  Unevaluated integrals are computed by
    adaptive quadrature (relative tolerance 1e-10); an integral without a
    lower bound is taken from 0.
    """
    value = _Evaluator.from_bindings(bindings)(sp.sympify(e))
    if isinstance(value, complex) or not math.isfinite(value):
        raise DomainViolation(f"non-finite value {value!r}")
    return value


# ----------------------------------------------------------------------
# equivalence


@dataclass(frozen=True)
class Equivalence:
    """Outcome of :func:`equivalent`; truthy iff the expressions agree.

    ``mode`` is ``"symbolic"`` when the simplified difference is literally
    zero and ``"numeric"`` when agreement was only observed at sample points.
    """

    equal: bool
    mode: str
    max_residual: float = 0.0
    points: int = 0
    residual: object = None

    def __bool__(self):
        return self.equal

    @classmethod
    def all(cls, results):
        """Conjunction of several results; symbolic only if every part is."""
        results = list(results)
        if not results:
            return cls(True, "symbolic")
        ok = all(r.equal for r in results)
        mode = "symbolic" if all(r.mode == "symbolic" for r in results) else "numeric"
        worst = max(r.max_residual for r in results)
        return cls(ok, mode, worst, sum(r.points for r in results))


def free_names(*exprs):
    names = set()
    for e in exprs:
        e = sp.sympify(e)
        names |= {s.name for s in e.free_symbols}
    return names


def equivalent(a, b, domain=None, *, samples=64, seed=0, rtol=1e-9, functions=None):
    """Decide whether ``a`` and ``b`` agree on ``domain``.

    Symbolic first (simplified difference is literal zero), otherwise
    ``|a - b| <= rtol*(1 + |a| + |b|)`` at ``samples`` fixed-seed points.
    Points where either side is undefined are redrawn.
    """
    a, b = sp.sympify(a), sp.sympify(b)
    diff = simplify(a - b)
    if diff == 0:
        return Equivalence(True, "symbolic", 0.0, 0, diff)
    return numeric_equivalent(a, b, domain, samples=samples, seed=seed, rtol=rtol,
                              functions=functions, residual=diff)


def numeric_equivalent(a, b, domain=None, *, samples=64, seed=0, rtol=1e-9, functions=None,
                       residual=None):
    domain = domain or Domain()
    rng = np.random.default_rng(seed)
    names = free_names(a, b)
    worst = 0.0
    bindings_f = dict(functions or {})
    for _ in range(samples):
        for _attempt in range(MAX_REJECTIONS):
            point = domain.sample(names, rng)
            try:
                va = evaluate(a, {**point, **bindings_f})
                vb = evaluate(b, {**point, **bindings_f})
            except DomainViolation:
                continue
            except UnboundSymbolError:
                # placeholder functions without a binding: nothing to sample
                return Equivalence(False, "undecided", INF, 0, residual)
            break
        else:
            raise SamplingError(f"{MAX_REJECTIONS} consecutive points outside function domains")
        err = abs(va - vb) / (1.0 + abs(va) + abs(vb))
        worst = max(worst, err)
        if err > rtol:
            return Equivalence(False, "numeric", worst, samples, residual)
    return Equivalence(True, "numeric", worst, samples, residual)

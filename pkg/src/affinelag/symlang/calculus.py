"""Differentiation, the restricted antiderivative and the simplifier."""

import sympy as sp

MAX_PASSES = 8


def differentiate(e, v):
    """Derivative of ``e`` with respect to the symbol ``v``, simplified.

    Unevaluated integrals follow the fundamental theorem when ``v`` is the
    upper bound and the Leibniz rule otherwise.
    """
    return simplify(sp.diff(e, v))


def _cancel_exponents(e):
    def fix_pow(node):
        return sp.Pow(node.base, sp.cancel(node.exp))

    e = e.replace(lambda n: n.is_Pow and not n.exp.is_Number, fix_pow)
    return e


def _log_of_exp(e):
    # real setting: log(exp(u)) = u
    return e.replace(lambda n: isinstance(n, sp.log) and isinstance(n.args[0], sp.exp),
                     lambda n: n.args[0].args[0])


def _pass(e):
    e = _cancel_exponents(e)
    e = sp.powsimp(e, combine="exp")
    e = sp.expand(e)
    return sp.cancel(e)


def _is_symbolic_power(n):
    if n.is_Pow:
        return not n.exp.is_Number
    return isinstance(n, sp.exp) and not n.args[0].is_Number


def _split_log_part(arg):
    """Split ``arg`` into ``{base: coeff}`` for ``coeff*log(base)`` terms and a rest."""
    logs, rest = {}, []
    for term in sp.Add.make_args(sp.expand(arg)):
        found = [f for f in sp.Mul.make_args(term) if isinstance(f, sp.log)]
        if len(found) == 1 and not (term / found[0]).has(sp.log):
            b = found[0].args[0]
            logs[b] = logs.get(b, 0) + term / found[0]
        else:
            rest.append(term)
    return logs, sp.Add(*rest)


def _ratio(arg, ref):
    """``exp(arg)/exp(ref)`` as a rational-power monomial, or None."""
    logs, rest = _split_log_part(arg - ref)
    if rest != 0:
        return None
    out = sp.Integer(1)
    for b, c in logs.items():
        c = sp.cancel(c)
        if not c.is_Rational:
            return None
        out *= b**c
    return out


def _absorb(c, logs):
    """Move monomial content of ``c`` in the bases of ``logs`` into ``logs``."""
    gens = [b for b in logs if b.is_Symbol]
    if not gens:
        return c
    num, den = sp.fraction(c)
    for part, sign in ((num, 1), (den, -1)):
        try:
            poly = sp.Poly(part, *gens)
        except sp.PolynomialError:
            continue
        (content, _) = poly.terms_gcd()
        for b, k in zip(gens, content):
            if k:
                logs[b] = logs[b] + sign * k
                if sign > 0:
                    num = sp.cancel(num / b**k)
                else:
                    den = sp.cancel(den / b**k)
    return num / den


def _from_exp(arg, c=1):
    logs, rest = _split_log_part(arg)
    c = _absorb(c, logs)
    out = c * sp.exp(sp.cancel(rest))
    for b, c in logs.items():
        out *= sp.Pow(sp.factor(b), sp.cancel(c))
    return out


def _log_split(base):
    """``log(base)`` with exponential and real-power factors taken apart.

    Valid wherever the original power is real: ``exp`` factors are positive
    and ``x**alpha`` with non-integer ``alpha`` needs ``x > 0``.
    """
    out, rest = sp.Integer(0), []
    for f in sp.Mul.make_args(base):
        if isinstance(f, sp.exp):
            out += f.args[0]
        elif f.is_Pow and not f.exp.is_Integer and not f.base.is_number:
            out += f.exp * _log_split(f.base)
        else:
            rest.append(f)
    rest = sp.factor(sp.Mul(*rest))
    return out + (sp.log(rest) if rest != 1 else 0)


def _groups(e):
    """Terms of ``e`` as ``[exp_argument, [coefficients]]`` groups."""
    e = sp.expand(e, power_exp=False, log=False)
    groups = []
    for term in sp.Add.make_args(e):
        arg, coeff = sp.Integer(0), []
        for f in sp.Mul.make_args(term):
            if isinstance(f, sp.exp):
                arg += f.args[0]
                continue
            if f.is_Pow and f.exp.is_Integer and f.base.has(sp.exp):
                inner = _groups(f.base)
                if len(inner) == 1:
                    a, cs = inner[0]
                    arg += f.exp * a
                    coeff.append(sp.cancel(sp.Add(*cs)) ** f.exp)
                    continue
            coeff.append(f)
        arg = sp.expand(arg)
        coeff = sp.Mul(*coeff)
        for g in groups:
            r = _ratio(arg, g[0])
            if r is not None:
                g[1].append(coeff * r)
                break
        else:
            groups.append([arg, [coeff]])
    return groups


def _monomial_form(e):
    """Normal form for sums of (rational) x (monomials with symbolic exponents).

    Powers ``b**alpha`` with non-numeric exponent are rewritten as
    ``exp(alpha*log(b))``; terms whose exponentials differ by a rational
    monomial are grouped and their coefficients cancelled together.
    """
    e = e.replace(lambda n: n.is_Pow and not n.exp.is_Number,
                  lambda n: sp.exp(n.exp * _log_split(n.base)))
    out = []
    for arg, coeffs in _groups(e):
        num, den = sp.fraction(sp.together(sp.Add(*coeffs)))
        num = sp.expand(num)
        if num != 0:
            out.append(_from_exp(arg, sp.cancel(num / den)))
    return sp.Add(*out)


def simplify(e):
    """Fixed normalization pipeline, iterated to a structural fixpoint.

    Each pass folds constants, flattens and collects like terms (sympy does
    this on construction), combines powers of equal base, expands and
    cancels common rational factors.  At most ``MAX_PASSES`` passes.
    Expressions with symbolic exponents go through a grouping normal form
    instead, so that ``x**(p+1)`` and ``x*x**p`` meet.
    """
    e = _log_of_exp(sp.sympify(e))
    if e.has(sp.Integral, sp.Derivative) or not any(
            _is_symbolic_power(n) for n in sp.preorder_traversal(e)):
        for _ in range(MAX_PASSES):
            new = _pass(e)
            if new == e:
                break
            e = new
        return e
    for _ in range(MAX_PASSES):
        new = _monomial_form(e)
        if new == e:
            break
        e = new
    return e


def is_symbolic_zero(e):
    return simplify(e) == 0


# ----------------------------------------------------------------------
# antiderivative


def _dummy_for(e, v):
    taken = {s.name for s in e.free_symbols} | {v.name}
    for name in ("z", "zeta", "s", "u", "w"):
        if name not in taken:
            return sp.Symbol(name)
    k = 1
    while f"z{k}" in taken:
        k += 1
    return sp.Symbol(f"z{k}")


def _linear_coeff(arg, v):
    """Return ``a`` if ``arg == a*v + b`` with ``a`` free of ``v``, else None."""
    a = sp.diff(arg, v)
    if a == 0 or a.has(v):
        return None
    return a


def _nonzero_condition(c):
    c = sp.factor(c)
    return None if c.is_number else c


def _integrate_kernel(f, v, conditions):
    """Antiderivative of a single ``v``-dependent factor, or None."""
    if f == v:
        return v**2 / 2
    if f.is_Pow and f.base == v and not f.exp.has(v):
        alpha = f.exp
        if alpha == -1:
            return sp.log(v)
        if not alpha.is_number:
            cond = _nonzero_condition(alpha + 1)
            if cond is not None:
                conditions.append(cond)
        return v ** (alpha + 1) / (alpha + 1)
    if isinstance(f, sp.Derivative) and f.variable_count[-1] == (v, 1):
        # fundamental theorem for placeholder derivatives
        rest = f.variable_count[:-1]
        return sp.Derivative(f.expr, *rest) if rest else f.expr
    if f.func in (sp.exp, sp.sin, sp.cos):
        a = _linear_coeff(f.args[0], v)
        if a is None:
            return None
        if not a.is_number:
            cond = _nonzero_condition(a)
            if cond is not None:
                conditions.append(cond)
        if f.func is sp.exp:
            return f / a
        if f.func is sp.sin:
            return -sp.cos(f.args[0]) / a
        return sp.sin(f.args[0]) / a
    return None


def antiderivative(e, v, conditions=None):
    """Antiderivative of ``e`` in ``v`` with the additive constant dropped.

    Closed forms cover sums and constant multiples of polynomials in ``v``,
    ``v**alpha`` (``alpha != -1``, symbolic exponents allowed), ``1/v``, and
    ``exp``/``sin``/``cos`` of an affine function of ``v``.  Any other term is
    returned as an unevaluated ``Integral`` with upper bound ``v``.

    Side conditions (expressions that must not vanish, e.g. ``n + 1`` for
    ``x**n``) are appended to ``conditions`` when a list is supplied.
    """
    if conditions is None:
        conditions = []
    e = sp.expand(sp.sympify(e))
    terms = e.args if e.is_Add else (e,)
    closed = []
    for term in terms:
        coeff, dep = term.as_independent(v, as_Add=False)
        if dep == 1:
            closed.append(coeff * v)
            continue
        # a product of v-dependent factors is supported only when it is a
        # single kernel after the automatic power merge
        factors = sp.Mul.make_args(dep)
        result = _integrate_kernel(dep, v, conditions) if len(factors) == 1 else None
        if result is None and len(factors) > 1:
            # exp(a*v)*exp(b*v) and v**p*v**q are merged by powsimp
            merged = sp.powsimp(dep, combine="exp")
            if len(sp.Mul.make_args(merged)) == 1:
                result = _integrate_kernel(merged, v, conditions)
        if result is None:
            z = _dummy_for(e, v)
            closed.append(coeff * sp.Integral(dep.subs(v, z), (z, v)))
        else:
            closed.append(coeff * result)
    return sp.Add(*closed)


def has_unevaluated_integral(e):
    return sp.sympify(e).has(sp.Integral)

"""Render expressions back into the input grammar (``^`` for powers)."""

import sympy as sp
from sympy.printing.precedence import precedence
from sympy.printing.str import StrPrinter


def _is_bare(e):
    return e.is_Symbol or (e.is_Integer and e >= 0) or isinstance(e, sp.Function)


class GrammarPrinter(StrPrinter):
    def _print_Pow(self, expr, rational=False):
        prec = precedence(expr)
        if expr.exp is sp.S.Half:
            return "sqrt(%s)" % self._print(expr.base)
        if -expr.exp is sp.S.Half:
            return "1/sqrt(%s)" % self._print(expr.base)
        if expr.exp is sp.S.NegativeOne:
            return "1/%s" % self.parenthesize(expr.base, prec, strict=True)
        base = self.parenthesize(expr.base, prec, strict=True)
        exp = self._print(expr.exp)
        if not _is_bare(expr.exp):
            exp = "(%s)" % exp
        return "%s^%s" % (base, exp)

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Integral(self, expr):
        (z, *bounds), = expr.limits
        return "integral(%s)" % ", ".join(
            self._print(a) for a in (expr.function, z, *bounds)
        )

    def _print_Derivative(self, expr):
        vs = []
        for v, k in expr.variable_count:
            vs.extend([v] * int(k))
        return "diff(%s)" % ", ".join(self._print(a) for a in (expr.expr, *vs))

    def _print_Float(self, expr):
        return self._print(sp.Rational(str(expr)))


_printer = GrammarPrinter({"order": None})


def render(e):
    """Render ``e`` in the grammar accepted by :func:`parse`."""
    return _printer.doprint(sp.sympify(e))

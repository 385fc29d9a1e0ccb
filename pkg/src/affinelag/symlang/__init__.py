"""Expression language: sympy trees with a small grammar, a fixed
simplification pipeline, a restricted antiderivative and a probabilistic
zero test."""

from .calculus import (
    antiderivative,
    differentiate,
    has_unevaluated_integral,
    is_symbolic_zero,
    simplify,
)
from .numeric import Domain, Equivalence, equivalent, evaluate, free_names, numeric_equivalent
from .parser import ELEMENTARY, parse, tokenize
from .printer import render

__all__ = [
    "Domain",
    "ELEMENTARY",
    "Equivalence",
    "antiderivative",
    "differentiate",
    "equivalent",
    "evaluate",
    "free_names",
    "has_unevaluated_integral",
    "is_symbolic_zero",
    "numeric_equivalent",
    "parse",
    "render",
    "simplify",
    "tokenize",
]

"""Time-dependent first-order systems and their dynamical vector field.

A system ``dx_i/dt = X_i(t, x)`` is identified with the vector field
``Gamma = d/dt + sum_i X_i d/dx_i`` on ``R x R^n``; the time component is
identically 1.
"""

from dataclasses import dataclass, field

import sympy as sp

from .errors import PreconditionError
from .symlang import Domain, parse, simplify


def _sym(s):
    return s if isinstance(s, sp.Symbol) else sp.Symbol(str(s))


@dataclass(frozen=True)
class FirstOrderSystem:
    states: tuple
    velocities: tuple
    parameters: tuple = ()
    time: sp.Symbol = sp.Symbol("t")
    domain: Domain = field(default_factory=Domain)
    functions: dict = field(default_factory=dict)
    force: object = None
    name: str = ""

    def __post_init__(self):
        states = tuple(_sym(s) for s in self.states)
        vel = tuple(sp.sympify(v) for v in self.velocities)
        params = tuple(_sym(p) for p in self.parameters)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "time", _sym(self.time))
        if len(states) != len(vel):
            raise PreconditionError(
                f"{len(states)} state variables but {len(vel)} velocity components"
            )
        if len(set(states)) != len(states):
            raise PreconditionError("state variable names must be distinct")
        allowed = set(states) | set(params) | {self.time}
        for s, v in zip(states, vel):
            stray = v.free_symbols - allowed
            if stray:
                names = ", ".join(sorted(x.name for x in stray))
                raise PreconditionError(
                    f"velocity of {s} uses undeclared symbol(s) {names}; declare them as parameters"
                )

    @classmethod
    def from_strings(cls, states, equations, parameters=(), time="t", **kw):
        functions = kw.get("functions", {})
        vel = tuple(parse(eq, functions) for eq in equations)
        return cls(tuple(states), vel, tuple(parameters), sp.Symbol(time), **kw)

    @property
    def dim(self):
        return len(self.states)

    @property
    def symbols(self):
        return (self.time,) + self.states + self.parameters

    @property
    def is_mechanical(self):
        return self.force is not None

    def component(self, var):
        return self.velocities[self.states.index(_sym(var))]


@dataclass(frozen=True)
class MechanicalSystem:
    """Second-order equation ``x'' = F(t, x, v)`` with ``v = x'``."""

    force: object
    position: sp.Symbol = sp.Symbol("x")
    velocity: sp.Symbol = sp.Symbol("v")
    parameters: tuple = ()
    time: sp.Symbol = sp.Symbol("t")
    domain: Domain = field(default_factory=Domain)
    functions: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "force", sp.sympify(self.force))
        for attr in ("position", "velocity", "time"):
            object.__setattr__(self, attr, _sym(getattr(self, attr)))
        object.__setattr__(self, "parameters", tuple(_sym(p) for p in self.parameters))
        allowed = {self.time, self.position, self.velocity, *self.parameters}
        stray = self.force.free_symbols - allowed
        if stray:
            names = ", ".join(sorted(x.name for x in stray))
            raise PreconditionError(f"force uses undeclared symbol(s) {names}")


def lift(m):
    """First-order form ``x' = v, v' = F(t, x, v)`` of a mechanical system."""
    return FirstOrderSystem(
        states=(m.position, m.velocity),
        velocities=(m.velocity, m.force),
        parameters=m.parameters,
        time=m.time,
        domain=m.domain,
        functions=m.functions,
        force=m.force,
        name=m.name,
    )


def divergence(s):
    """Divergence of Gamma w.r.t. ``dt ^ dx_1 ^ ... ^ dx_n``."""
    return simplify(sp.Add(*(sp.diff(X, x) for x, X in zip(s.states, s.velocities))))


def gamma_apply(s, f):
    """Directional derivative ``Gamma(f) = df/dt + sum_i X_i df/dx_i``."""
    f = sp.sympify(f)
    out = sp.diff(f, s.time) + sp.Add(*(X * sp.diff(f, x) for x, X in zip(s.states, s.velocities)))
    return simplify(out)

"""System definition files (TOML).

A file looks like::

    name = "lane-emden"
    description = "Lane-Emden equation"
    states = ["x", "v"]
    parameters = ["n"]
    force = "-2*v/t - x^n"          # or: equations = ["v", "-2*v/t - x^n"]

    [test_values]
    n = 3

    [domain]
    t = [0, inf]
    x = [0, inf]
    exclusions = []

    [numeric]
    initial = [1, 0]
    t0 = 0.5

    [expected]
    multiplier = "t^2"
    lagrangian = "t^2*(-v*xdot + v^2/2 + x^(n+1)/(n+1))"

Velocity symbols in Lagrangians are the state names with ``dot`` appended.
"""

import math
from dataclasses import dataclass, field

import sympy as sp

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynsys import FirstOrderSystem, MechanicalSystem, lift
from .errors import ParseError, PreconditionError, SystemFileError
from .symlang import Domain, parse

TOP_KEYS = {
    "name", "description", "doc", "states", "time", "parameters", "equations", "force",
    "functions", "test_values", "domain", "numeric", "A", "expected",
}
EXPECTED_KEYS = {
    "multiplier", "multiplier_up_to_constant", "m", "H", "lagrangian", "hamiltonian",
    "conserved", "not_conserved", "lagrangians", "where", "unknowns", "relations",
    "non_gauge_equivalent", "notes",
}


@dataclass(frozen=True)
class SystemFile:
    name: str
    description: str = ""
    doc: str = ""
    states: tuple = ()
    time: str = "t"
    parameters: tuple = ()
    equations: tuple = ()
    force: str = ""
    functions: dict = field(default_factory=dict)
    test_values: dict = field(default_factory=dict)
    domain: Domain = field(default_factory=Domain)
    numeric: dict = field(default_factory=dict)
    A: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    source: str = ""

    @property
    def executable(self):
        return bool(self.equations or self.force)

    def system(self):
        """The :class:`FirstOrderSystem` described by the file."""
        try:
            if self.force:
                x, v = self.states
                F = parse(self.force, self.functions)
                return lift(MechanicalSystem(F, sp.Symbol(x), sp.Symbol(v), self.parameters,
                                             sp.Symbol(self.time), self.domain,
                                             self.functions, self.name))
            return FirstOrderSystem.from_strings(
                self.states, self.equations, self.parameters, self.time,
                domain=self.domain, functions=self.functions, name=self.name,
            )
        except (ParseError, PreconditionError) as exc:
            raise SystemFileError(f"{self.name}: {exc}") from None

    def expr(self, source):
        """Parse an expression in the file's context (placeholders allowed)."""
        return parse(source, self.functions)

    def velocity_symbols(self):
        return tuple(sp.Symbol(f"{s}dot") for s in self.states)

    def upper_A(self):
        """``{(i, j): Expr}`` (0-based) from ``A_i_j`` keys."""
        out = {}
        for key, src in self.A.items():
            try:
                _, i, j = key.split("_")
                i, j = int(i) - 1, int(j) - 1
            except ValueError:
                raise SystemFileError(f"bad A-matrix key {key!r}; use A_i_j") from None
            if not 0 <= i < j < len(self.states):
                raise SystemFileError(f"A-matrix key {key!r} must have 1 <= i < j <= {len(self.states)}")
            out[(i, j)] = self.expr(src)
        return out


def _interval(name, value):
    if not (isinstance(value, list) and len(value) == 2):
        raise SystemFileError(f"domain entry {name!r} must be [lower, upper]")
    try:
        lo, hi = (float(v) for v in value)
    except ValueError:
        raise SystemFileError(f"domain entry {name!r} must hold numbers or inf") from None
    if not lo < hi:
        raise SystemFileError(f"empty interval for {name!r}")
    return lo, hi


def _domain(table):
    table = dict(table or {})
    exclusions = tuple(parse(e) for e in table.pop("exclusions", []))
    intervals = {k: _interval(k, v) for k, v in table.items()}
    return Domain(intervals, exclusions)


def from_dict(data, source=""):
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise SystemFileError(f"unknown key(s): {', '.join(sorted(unknown))}")
    name = data.get("name") or "unnamed"
    params = data.get("parameters", [])
    test_values = dict(data.get("test_values", {}))
    if isinstance(params, dict):
        test_values.update({k: v for k, v in params.items() if v is not None})
        params = list(params)
    expected = dict(data.get("expected", {}))
    unknown = set(expected) - EXPECTED_KEYS
    if unknown:
        raise SystemFileError(f"unknown expected key(s): {', '.join(sorted(unknown))}")
    sf = SystemFile(
        name=name,
        description=data.get("description", ""),
        doc=data.get("doc", ""),
        states=tuple(data.get("states", ())),
        time=data.get("time", "t"),
        parameters=tuple(params),
        equations=tuple(data.get("equations", ())),
        force=data.get("force", ""),
        functions={k: int(v) for k, v in data.get("functions", {}).items()},
        test_values=test_values,
        domain=_domain(data.get("domain")),
        numeric=dict(data.get("numeric", {})),
        A=dict(data.get("A", {})),
        expected=expected,
        source=source,
    )
    _validate(sf)
    return sf


def _validate(sf):
    if not sf.executable:
        if not sf.doc:
            raise SystemFileError(f"{sf.name}: neither equations, force nor doc given")
        return
    if sf.equations and sf.force:
        raise SystemFileError(f"{sf.name}: give either equations or force, not both")
    if sf.force and len(sf.states) != 2:
        raise SystemFileError(f"{sf.name}: force shorthand needs exactly two states (position, velocity)")
    if sf.equations and len(sf.equations) != len(sf.states):
        raise SystemFileError(
            f"{sf.name}: {len(sf.states)} states but {len(sf.equations)} equations"
        )
    for k, v in sf.test_values.items():
        if k not in sf.parameters:
            raise SystemFileError(f"{sf.name}: test value for undeclared parameter {k!r}")
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SystemFileError(f"{sf.name}: test value for {k!r} must be a finite number")
    sf.system()


def loads(text, source="<string>"):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SystemFileError(f"{source}: {exc}") from None
    return from_dict(data, source)


def load(path):
    """Read a system file; I/O errors propagate as ``OSError``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return loads(raw.decode("utf-8"), str(path))

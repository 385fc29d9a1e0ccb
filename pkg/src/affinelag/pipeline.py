"""End-to-end runs: multiplier, 1-form, Hamiltonian, verifications, report.

A report is a plain dict (JSON schema 1).  Every check carries the figure
it was decided on: ``max_residual`` against ``tolerance``.  Symbolic checks
report residual 0.  Checks whose claim is that something does *not*
vanish carry ``"direction": "at-least"`` and pass when the residual exceeds
the tolerance.
"""

import itertools
import math
import time as _time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy as sp

from . import birkhoff, multiplier, numverify, varconstruct
from .dynsys import gamma_apply
from .errors import (
    AffineLagError,
    IntegrationError,
    PreconditionError,
    SamplingError,
    SystemFileError,
    UnboundSymbolError,
)
from .symlang import Equivalence, equivalent, evaluate, render, simplify

SCHEMA = 1
SAMPLED_RTOL = 1e-9
DRIFT_FLOOR = 1e-2


@dataclass(frozen=True)
class Options:
    all_families: bool = False
    h: float = 1e-3
    tspan: float = 1.0
    seed: int = 0
    tolerance: float = numverify.FLOW_TOLERANCE
    timing: bool = False


@dataclass
class Result:
    report: dict
    exit_code: int
    trajectory: object = None


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else "inf"


class _Checks:
    def __init__(self):
        self.items = []

    def equivalence(self, name, eq, **extra):
        if eq.mode == "symbolic":
            res = 0.0 if eq.equal else "inf"
        else:
            res = _num(eq.max_residual) if eq.equal or eq.points else "inf"
        self.items.append({
            "name": name, "mode": eq.mode, "max_residual": res,
            "tolerance": SAMPLED_RTOL, "pass": bool(eq.equal), **extra,
        })
        return bool(eq.equal)

    def report(self, vr, **extra):
        d = vr.to_dict()
        d["max_residual"] = _num(d["max_residual"])
        d.update(extra)
        self.items.append(d)
        return vr.passed

    def witness(self, name, value, tolerance, mode="numeric", **extra):
        """A nonvanishing claim: passes when ``value > tolerance``."""
        self.items.append({
            "name": name, "mode": mode, "max_residual": _num(value), "tolerance": tolerance,
            "direction": "at-least", "pass": bool(value > tolerance), **extra,
        })

    def failure(self, name, message, mode="numeric"):
        self.items.append({
            "name": name, "mode": mode, "max_residual": "inf", "tolerance": 0.0,
            "pass": False, "error": message,
        })

    @property
    def passed(self):
        return all(c["pass"] for c in self.items)


def _safe(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (SamplingError, UnboundSymbolError):
        return Equivalence(False, "undecided", math.inf)


def _conds(exprs):
    return sorted(dict.fromkeys(f"{render(c)} != 0" for c in exprs))


def _has_placeholders(*exprs):
    return any(sp.sympify(e).atoms(sp.core.function.AppliedUndef) for e in exprs)


# ----------------------------------------------------------------------
# parameter instances


def _violates(conditions, values):
    for c in conditions:
        try:
            if abs(evaluate(c, values)) < 1e-12:
                return True
        except (UnboundSymbolError, AffineLagError):
            continue
    return False


def bind_parameters(sf, conditions=(), seed=0):
    """Numeric parameter values: test values, else seeded rationals in (0, 2]."""
    values = {k: v for k, v in sf.test_values.items()}
    free = [p for p in sf.parameters if p not in values]
    if not free:
        return values, "test-values"
    rng = np.random.default_rng(seed)
    for _ in range(200):
        draw = {p: Fraction(int(rng.integers(1, 21)), 10) for p in free}
        trial = {**values, **{k: float(v) for k, v in draw.items()}}
        if not _violates(conditions, trial) and sf.domain.contains(
                {k: v for k, v in trial.items() if k in sf.domain.intervals}):
            return trial, "seeded-random"
    raise SamplingError("no admissible parameter values")


# ----------------------------------------------------------------------
# expected results


def _expected_subs(sf):
    """Substitutions for ``unknowns`` (solved from ``relations``) and ``where``."""
    exp = sf.expected
    subs = {sp.Symbol(k): sf.expr(v) for k, v in exp.get("where", {}).items()}
    solved = {}
    if exp.get("unknowns"):
        unknowns = [sp.Symbol(u) for u in exp["unknowns"]]
        rel = [sf.expr(r) for r in exp.get("relations", [])]
        sol = sp.solve(rel, unknowns, dict=True)
        if len(sol) != 1 or set(sol[0]) != set(unknowns):
            raise SystemFileError(f"{sf.name}: relations do not determine {exp['unknowns']}")
        solved = {k: sp.factor(v) for k, v in sol[0].items()}
        subs.update(solved)
    return subs, solved


def _expected_expr(sf, src, subs):
    return sf.expr(src).subs(subs)


def _expected_forms(sf, s, subs):
    """Expected 1-forms as ``(label, LambdaForm)`` pairs."""
    exp = sf.expected
    out = []
    vel = sf.velocity_symbols()
    if "m" in exp and "H" in exp:
        m = [_expected_expr(sf, c, subs) for c in exp["m"]]
        out.append(("m,H", varconstruct.LambdaForm(s.states, m, _expected_expr(sf, exp["H"], subs), s.time)))
    sources = ([exp["lagrangian"]] if "lagrangian" in exp else []) + list(exp.get("lagrangians", []))
    for k, src in enumerate(sources):
        L = _expected_expr(sf, src, subs)
        label = "lagrangian" if len(sources) == 1 else f"lagrangian[{k + 1}]"
        out.append((label, birkhoff.lambda_from_lagrangian(L, s.states, vel, s.time)))
    return out


def _constant_ratio(a, b, s):
    ratio = simplify(sp.sympify(a) / sp.sympify(b))
    variables = (s.time, *s.states)
    if not ratio.free_symbols & set(variables):
        return Equivalence(True, "symbolic"), ratio
    eq = Equivalence.all(_safe(equivalent, sp.diff(ratio, v), 0, s.domain) for v in variables)
    return eq, ratio


# ----------------------------------------------------------------------
# two-dimensional path


def _run_2d(sf, s, opts, checks, report, timing):
    t0 = _time.perf_counter()
    subs, solved = _expected_subs(sf)
    if solved:
        report["expected_solution"] = {str(k): render(v) for k, v in solved.items()}
    found = multiplier.find(s, all_families=opts.all_families, seed=opts.seed)
    mults = found if isinstance(found, list) else [found]
    mu = mults[0]
    report["multiplier"] = [_mult_dict(m) for m in mults] if opts.all_families else _mult_dict(mu)
    checks.equivalence("multiplier-equation", Equivalence(True, mu.verification))
    timing["multiplier"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    lf = varconstruct.solve_myH(s, mu)
    for name, eq in lf.checks.items():
        checks.equivalence(f"myH-{name}", eq)
    report["lambda_form"] = _form_dict(lf)
    report["lagrangian"] = render(lf.lagrangian().expr)
    report["energy"] = render(simplify(lf.energy()))
    checks.equivalence("euler-lagrange", varconstruct.euler_lagrange_check(s, lf))
    clo = varconstruct.closure_residual(lf)
    checks.equivalence("closure", Equivalence(True, "symbolic") if clo == 0
                       else _safe(equivalent, clo, 0, s.domain))
    timing["lambda"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    hd = varconstruct.hamiltonianize(lf, s.parameters)
    report["hamiltonian"] = _ham_dict(hd)
    # an implicit inverse is exercised by the numeric flow comparison only
    if not hd.implicit:
        checks.equivalence("hamilton-equations", varconstruct.hamilton_check(s, hd))
    timing["hamiltonian"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    _compare_expected_2d(sf, s, subs, mu, lf, hd, checks)
    timing["expected"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    side = list(mu.side_conditions) + list(lf.side_conditions) + list(hd.side_conditions)
    traj = _numerics_2d(sf, s, subs, lf, hd, opts, checks, report, side)
    timing["numeric"] = _time.perf_counter() - t0
    report["side_conditions"] = _conds(side)
    return traj


def _mult_dict(m):
    return {
        "mu": render(m.mu), "family": m.family, "verification": m.verification,
        "side_conditions": _conds(m.side_conditions), "notes": list(m.notes),
    }


def _form_dict(lf):
    return {
        "states": [x.name for x in lf.states],
        "m": [render(c) for c in lf.m],
        "H": render(lf.H),
        "notes": list(lf.notes),
    }


def _ham_dict(hd):
    return {
        "q": render(hd.q), "p": render(hd.p),
        "q_symbol": hd.q_symbol.name, "p_symbol": hd.p_symbol.name,
        "H": None if hd.hamiltonian is None else render(hd.hamiltonian),
        "inverse": {k.name: (None if v is None else render(v)) for k, v in hd.inverse.items()},
        "implicit": hd.implicit,
    }


def _compare_expected_2d(sf, s, subs, mu, lf, hd, checks):
    exp = sf.expected
    if "multiplier" in exp:
        eq, ratio = _constant_ratio(mu.mu, _expected_expr(sf, exp["multiplier"], subs), s)
        checks.equivalence("expected-multiplier", eq, factor=render(ratio) if eq else None)
    for label, ef in _expected_forms(sf, s, subs):
        f = varconstruct.gauge_equivalent(lf, ef, s.domain)
        if f is None:
            checks.failure(f"expected-{label}-gauge", "no gauge function found", mode="symbolic")
        else:
            checks.equivalence(f"expected-{label}-gauge", Equivalence(True, "symbolic"),
                               gauge=render(f))
        checks.equivalence(f"expected-{label}-euler-lagrange",
                           varconstruct.euler_lagrange_check(s, ef))
    if "hamiltonian" in exp and not hd.implicit:
        e = exp["hamiltonian"]
        Q, P = sp.Symbol("q"), sp.Symbol("p")
        q = _expected_expr(sf, e["q"], subs)
        p = _expected_expr(sf, e["p"], subs)
        H = _expected_expr(sf, e["H"], subs)
        checks.equivalence("expected-q", _safe(equivalent, hd.q, q, s.domain))
        checks.equivalence("expected-p", _safe(equivalent, hd.p, p, s.domain))
        # compare on the image of (t, x, y): pull both back through q, p
        back = {Q: q, P: p}
        ours = hd.hamiltonian.subs({hd.q_symbol: hd.q, hd.p_symbol: hd.p})
        checks.equivalence("expected-hamiltonian",
                           _safe(equivalent, ours, H.subs(back), s.domain))
    for key in ("conserved", "not_conserved"):
        if key in exp:
            f = _expected_expr(sf, exp[key], subs)
            g = simplify(gamma_apply(s, f))
            eq = Equivalence(True, "symbolic") if g == 0 else _safe(equivalent, g, 0, s.domain)
            if key == "conserved":
                checks.equivalence("first-integral", eq)
            else:
                checks.witness("not-a-first-integral", 0.0 if eq else 1.0, 0.0, mode=eq.mode)


def _initial(sf, s, values, seed):
    init = sf.numeric.get("initial")
    if init is not None:
        return [float(v) for v in init]
    rng = np.random.default_rng(seed)
    names = [x.name for x in s.states]
    point = s.domain.sample(names + [s.time.name], rng)
    return [point[n] for n in names]


def _numerics_2d(sf, s, subs, lf, hd, opts, checks, report, side):
    if _has_placeholders(*s.velocities, lf.H, *lf.m):
        report["numeric"] = {"skipped": "placeholder functions have no numeric values"}
        return None
    values, how = bind_parameters(sf, side, opts.seed)
    t0 = float(sf.numeric.get("t0", 0.0))
    N = int(round(opts.tspan / opts.h))
    y0 = _initial(sf, s, values, opts.seed)
    report["numeric"] = {
        "parameters": {k: _num(v) for k, v in sorted(values.items())}, "source": how,
        "initial": y0, "t0": t0, "h": opts.h, "steps": N, "integrator": "RK4",
    }
    traj = None
    try:
        traj = numverify.integrate(s, y0, t0, opts.h, N, values)
        checks.report(numverify.hamilton_flow_compare(s, hd, y0, t0, opts.h, N, values,
                                                      tolerance=opts.tolerance))
    except IntegrationError as exc:
        checks.failure("hamilton-flow", str(exc))
    for x in s.states:
        vr = numverify.fd_crosscheck(lf.H.subs(values), x, s.domain, seed=opts.seed)
        checks.report(vr, name=f"fd-dH/d{x.name}")
    exp = sf.expected
    span = float(sf.numeric.get("conservation_tspan", opts.tspan))
    if any(k in exp for k in ("conserved", "not_conserved")):
        M = int(round(span / opts.h))
        try:
            long = numverify.integrate(s, y0, t0, opts.h, M, values)
        except IntegrationError as exc:
            checks.failure("conservation", str(exc))
            return traj
        if "conserved" in exp:
            vr = numverify.conservation_check(s, _expected_expr(sf, exp["conserved"], subs), long,
                                              values, tolerance=opts.tolerance)
            checks.report(vr, name="conservation", tspan=span)
        if "not_conserved" in exp:
            vr = numverify.conservation_check(s, _expected_expr(sf, exp["not_conserved"], subs),
                                              long, values)
            checks.witness("non-conservation", vr.max_residual, DRIFT_FLOOR, tspan=span)
    return traj


# ----------------------------------------------------------------------
# even-dimensional path


def _bd_dict(bd):
    n = bd.dim
    return {
        "A": {f"A_{i + 1}_{j + 1}": render(bd.A[i, j])
              for i, j in itertools.combinations(range(n), 2) if bd.A[i, j] != 0},
        "B": [render(b) for b in bd.B],
        "notes": list(bd.notes),
    }


def _run_birkhoff(sf, s, opts, checks, report, timing):
    t0 = _time.perf_counter()
    if sf.A:
        bd = birkhoff.verify_A(s, sf.upper_A())
        datas = [bd]
        report["birkhoff"] = {"source": "given", **_bd_dict(bd)}
    else:
        bd = birkhoff.solve_constant_A(s, seed=opts.seed)
        datas = [birkhoff.verify_A(s, A) for A in bd.solutions]
        report["birkhoff"] = {
            "source": "constant-coefficients", "dimension": len(bd.basis),
            "solutions": [_bd_dict(d) for d in datas], "notes": list(bd.notes),
        }
    for k, d in enumerate(datas):
        tag = "" if len(datas) == 1 else f"[{k + 1}]"
        checks.equivalence(f"A-pde{tag}", Equivalence.all(d.checks.values()))
    timing["A"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    forms = []
    for k, d in enumerate(datas):
        tag = "" if len(datas) == 1 else f"[{k + 1}]"
        lf = birkhoff.integrate_alpha(d, s.domain)
        forms.append(lf)
        checks.equivalence(f"d-lambda{tag}", lf.checks["d_lambda"])
        checks.equivalence(f"birkhoff-equations{tag}", birkhoff.birkhoff_el_check(s, lf))
    report["lambda_forms"] = [_form_dict(lf) for lf in forms]
    report["lagrangians"] = [render(lf.lagrangian().expr) for lf in forms]
    for (i, a), (j, b) in itertools.combinations(enumerate(forms), 2):
        _certificate(checks, f"non-gauge[{i + 1},{j + 1}]", a, b, s)
    timing["lambda"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    subs, _ = _expected_subs(sf)
    expected = _expected_forms(sf, s, subs)
    for label, ef in expected:
        checks.equivalence(f"expected-{label}-birkhoff", birkhoff.birkhoff_el_check(s, ef))
        # integrate the expected form's own coefficient matrix and compare up to gauge
        try:
            own = birkhoff.integrate_alpha(birkhoff.verify_A(s, ef.mu_matrix()), s.domain)
        except AffineLagError as exc:
            checks.failure(f"expected-{label}-gauge", str(exc), mode="symbolic")
            continue
        f = varconstruct.gauge_equivalent(own, ef, s.domain)
        if f is None:
            checks.failure(f"expected-{label}-gauge", "no gauge function found", mode="symbolic")
        else:
            checks.equivalence(f"expected-{label}-gauge", Equivalence(True, "symbolic"),
                               gauge=render(f))
    if sf.expected.get("non_gauge_equivalent"):
        for (i, (la, a)), (j, (lb, b)) in itertools.combinations(enumerate(expected), 2):
            _certificate(checks, f"expected-non-gauge[{la},{lb}]", a, b, s)
    timing["expected"] = _time.perf_counter() - t0

    t0 = _time.perf_counter()
    side = []
    if not _has_placeholders(*s.velocities):
        values, how = bind_parameters(sf, side, opts.seed)
        report["numeric"] = {"parameters": {k: _num(v) for k, v in sorted(values.items())},
                             "source": how}
        for k, lf in enumerate(forms):
            tag = "" if len(forms) == 1 else f"[{k + 1}]"
            for x in s.states:
                vr = numverify.fd_crosscheck(lf.H.subs(values), x, s.domain, seed=opts.seed)
                checks.report(vr, name=f"fd-dH/d{x.name}{tag}")
    timing["numeric"] = _time.perf_counter() - t0
    report["side_conditions"] = _conds(side)
    return None


def _certificate(checks, name, a, b, s):
    ok, cert = birkhoff.not_gauge_equivalent(a, b, s.domain)
    if not ok:
        checks.witness(name, 0.0, SAMPLED_RTOL)
        return
    (i, j), comp = cert
    coords = [*(x.name for x in s.states), s.time.name]
    eq = _safe(equivalent, comp, 0, s.domain)
    checks.witness(name, eq.max_residual if eq.mode != "symbolic" else 0.0, SAMPLED_RTOL,
                   component=f"d{coords[i]}^d{coords[j]}", coefficient=render(comp))


# ----------------------------------------------------------------------


def _input_dict(sf, s):
    return {
        "name": sf.name,
        "description": sf.description,
        "states": list(sf.states),
        "time": sf.time,
        "parameters": list(sf.parameters),
        "equations": [f"{x.name}' = {render(X)}" for x, X in zip(s.states, s.velocities)],
        "source": sf.source.rsplit("/", 1)[-1],
    }


def run(sf, opts=None):
    """Run the whole pipeline on a :class:`SystemFile`; never raises library errors."""
    opts = opts or Options()
    report = {"schema": SCHEMA}
    checks = _Checks()
    timing = {}
    traj = None
    try:
        if not sf.executable:
            raise PreconditionError(f"{sf.name} is a documentation entry")
        s = sf.system()
        report["input"] = _input_dict(sf, s)
        if s.dim == 2:
            report["path"] = "two-dimensional"
            traj = _run_2d(sf, s, opts, checks, report, timing)
        elif s.dim % 2 == 0:
            report["path"] = "birkhoff"
            traj = _run_birkhoff(sf, s, opts, checks, report, timing)
        else:
            raise PreconditionError(f"odd state dimension {s.dim} is not supported")
    except AffineLagError as exc:
        report.setdefault("input", {"name": sf.name})
        report["verifications"] = checks.items
        report["error"] = exc.to_dict()
        report["pass"] = False
        return Result(report, exc.exit_code, traj)
    report["verifications"] = checks.items
    report["pass"] = checks.passed
    if sf.expected.get("notes"):
        report["notes"] = sf.expected["notes"]
    if opts.timing:
        report["timing"] = {k: round(v, 4) for k, v in timing.items()}
    return Result(report, 0 if checks.passed else 4, traj)


def render_text(report):
    """Human-readable summary of a report."""
    lines = [f"system: {report['input'].get('name')}"]
    for eq in report["input"].get("equations", []):
        lines.append(f"  {eq}")
    if "error" in report:
        lines.append(f"error ({report['error']['kind']}): {report['error']['message']}")
    mu = report.get("multiplier")
    if isinstance(mu, dict):
        lines.append(f"multiplier: {mu['mu']}  [{mu['family']}, {mu['verification']}]")
    elif isinstance(mu, list):
        for m in mu:
            lines.append(f"multiplier: {m['mu']}  [{m['family']}, {m['verification']}]")
    if "lagrangian" in report:
        lines.append(f"lagrangian: {report['lagrangian']}")
    for k, L in enumerate(report.get("lagrangians", [])):
        lines.append(f"lagrangian[{k + 1}]: {L}")
    ham = report.get("hamiltonian")
    if ham:
        lines.append(f"q = {ham['q']}, p = {ham['p']}")
        lines.append(f"hamiltonian: {ham['H'] if ham['H'] is not None else '(implicit)'}")
    if report.get("side_conditions"):
        lines.append("side conditions: " + ", ".join(report["side_conditions"]))
    for c in report.get("verifications", []):
        flag = "PASS" if c["pass"] else "FAIL"
        rel = ">" if c.get("direction") == "at-least" else "<="
        lines.append(f"  {flag} {c['name']:<36} {c['mode']:<9} {c['max_residual']} {rel} {c['tolerance']}")
    if "timing" in report:
        lines.append("timing: " + ", ".join(f"{k} {v}s" for k, v in report["timing"].items()))
    lines.append("PASS" if report.get("pass") else "FAIL")
    return "\n".join(lines) + "\n"

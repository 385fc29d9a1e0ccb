"""Affine Lagrangians in even dimension via Birkhoff's equations.

The invariant 2-form is

    alpha = 1/2 sum_ij A_ij dx_i ^ dx_j + sum_i B_i dt ^ dx_i

with ``A`` skew, ``det A != 0`` and ``B_i = sum_j A_ij X_j``.  ``d alpha = 0``
together with ``i(Gamma) alpha = 0`` is the linear PDE system

    dA_ij/dt + sum_k (X_k dA_ij/dx_k + A_kj dX_k/dx_i + A_ik dX_k/dx_j) = 0.

All indices run over the full state dimension.  A 1-form ``lambda`` with
``d lambda = alpha`` has ``mu_ij = A_ij`` and ``w_i = B_i``.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import (
    ConstructionError,
    DomainViolation,
    NoNondegenerateSolution,
    PreconditionError,
    ResidualNonzero,
    SamplingError,
    SingularMatrixError,
    UnboundSymbolError,
)
from .symlang import Domain, Equivalence, antiderivative, equivalent, evaluate, simplify
from .varconstruct import LambdaForm, _drop

REGULARITY_SAMPLES = 16
NONDEGENERACY_TRIALS = 64


class OutsideIntegrableClass(ConstructionError):
    """alpha is verified but a potential 1-form has no closed form here."""

    kind = "outside-integrable-class"

    def __init__(self, message, alpha=None):
        super().__init__(message)
        self.alpha = alpha


@dataclass(frozen=True)
class BirkhoffData:
    """Coefficients ``A`` (skew matrix) and ``B`` of the 2-form ``alpha``.

    ``basis`` holds the full solution basis when ``A`` came from
    :func:`solve_constant_A`; ``solutions`` lists linearly independent
    nondegenerate members of its span.
    """

    states: tuple
    A: sp.Matrix
    B: tuple
    time: sp.Symbol = sp.Symbol("t")
    residuals: object = None
    basis: tuple = ()
    solutions: tuple = ()
    notes: tuple = ()
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self):
        return len(self.states)

    def alpha(self):
        """Components of ``alpha`` on ``(x_1, ..., x_n, t)`` as ``{(a, b): c}``, ``a < b``."""
        n = self.dim
        out = {}
        for i, j in itertools.combinations(range(n), 2):
            out[(i, j)] = self.A[i, j]
        for i in range(n):
            # B_i dt ^ dx_i = -B_i dx_i ^ dt
            out[(i, n)] = -self.B[i]
        return out


def _as_matrix(s, A):
    n = s.dim
    if isinstance(A, dict):
        M = sp.zeros(n, n)
        for (i, j), v in A.items():
            M[i, j] = sp.sympify(v)
            M[j, i] = -sp.sympify(v)
        return M
    M = sp.Matrix(A)
    if M.shape != (n, n):
        raise PreconditionError(f"A must be {n}x{n}, got {M.shape[0]}x{M.shape[1]}")
    for i in range(n):
        for j in range(i, n):
            if simplify(M[i, j] + M[j, i]) != 0:
                raise PreconditionError(f"A is not skew-symmetric at ({i + 1},{j + 1})")
    return M


def _require_even(s):
    if s.dim % 2:
        raise PreconditionError(f"even state dimension required, got {s.dim}")


def A_residuals(s, A):
    """Matrix of left-hand sides of the A-coefficient PDE (upper triangle)."""
    xs, X, t = s.states, s.velocities, s.time
    n = s.dim
    J = [[sp.diff(X[k], xs[i]) for i in range(n)] for k in range(n)]  # J[k][i] = dX_k/dx_i
    R = sp.zeros(n, n)
    for i, j in itertools.combinations(range(n), 2):
        a = A[i, j]
        expr = sp.diff(a, t) + sp.Add(*(X[k] * sp.diff(a, xs[k]) for k in range(n)))
        expr += sp.Add(*(A[k, j] * J[k][i] + A[i, k] * J[k][j] for k in range(n)))
        R[i, j] = simplify(expr)
        R[j, i] = -R[i, j]
    return R


def _sample_det(M, domain, seed=0, samples=REGULARITY_SAMPLES):
    """Smallest ``|det M|`` seen at sample points (numpy on evaluated entries)."""
    rng = np.random.default_rng(seed)
    names = sorted({sym.name for sym in M.free_symbols})
    smallest = np.inf
    n = M.shape[0]
    taken = 0
    for _ in range(samples * 50):
        if taken == samples:
            break
        point = domain.sample(names, rng)
        try:
            vals = np.array([[evaluate(M[i, j], point) for j in range(n)] for i in range(n)])
        except DomainViolation:
            continue
        taken += 1
        smallest = min(smallest, abs(np.linalg.det(vals)))
    if taken == 0:
        raise SamplingError("no admissible point to test regularity")
    return smallest


def verify_A(s, A):
    """Certify ``A`` against the A-coefficient PDE and compute ``B``.

    ``A`` is a full skew matrix or a dict ``{(i, j): expr}`` of the upper
    triangle (0-based).  Raises :class:`ResidualNonzero` with the residual
    matrix attached, or :class:`SingularMatrixError`.
    """
    _require_even(s)
    A = _as_matrix(s, A)
    R = A_residuals(s, A)
    checks = {}
    bad = {}
    for i, j in itertools.combinations(range(s.dim), 2):
        if R[i, j] == 0:
            checks[f"A_{i + 1}_{j + 1}"] = Equivalence(True, "symbolic")
            continue
        try:
            eq = equivalent(R[i, j], 0, s.domain)
        except (SamplingError, UnboundSymbolError):
            eq = Equivalence(False, "numeric", residual=R[i, j])
        checks[f"A_{i + 1}_{j + 1}"] = eq
        if not eq:
            bad[f"A_{i + 1}_{j + 1}"] = R[i, j]
    if bad:
        raise ResidualNonzero("A-coefficient PDE not satisfied", residuals=bad)
    if _sample_det(A, s.domain) < 1e-12:
        raise SingularMatrixError("A is singular at a sampled domain point")
    B = tuple(simplify(sp.Add(*(A[i, j] * s.velocities[j] for j in range(s.dim))))
              for i in range(s.dim))
    return BirkhoffData(s.states, A, B, s.time, R, checks=checks)


# ----------------------------------------------------------------------
# constant coefficients


def _constant_jacobian(s):
    xs, X = s.states, s.velocities
    n = s.dim
    J = sp.zeros(n, n)
    for k in range(n):
        for i in range(n):
            d = sp.diff(X[k], xs[i])
            if d.free_symbols & ({s.time} | set(xs)):
                raise PreconditionError(
                    f"velocity of {xs[k]} is not affine in the states; constant A needs a constant Jacobian"
                )
            J[k, i] = d
    return J


def _independent(mats):
    if not mats:
        return True
    rows = sp.Matrix([list(m) for m in mats])
    return rows.rank(simplify=True) == len(mats)


def solve_constant_A(s, seed=0):
    """Constant skew ``A`` solving the PDE for an affine system.

    With constant ``A`` the PDE reads ``J^T A + A J = 0`` for the Jacobian
    ``J``.  The full solution basis is stored; nondegenerate members are
    collected from the basis itself and then from random small-integer
    combinations (``NONDEGENERACY_TRIALS`` draws, fixed seed).
    """
    _require_even(s)
    J = _constant_jacobian(s)
    n = s.dim
    pairs = list(itertools.combinations(range(n), 2))
    unknowns = sp.symbols(f"a0:{len(pairs)}", cls=sp.Dummy)
    A = sp.zeros(n, n)
    for u, (i, j) in zip(unknowns, pairs):
        A[i, j], A[j, i] = u, -u
    eqs = J.T * A + A * J
    system = sp.Matrix([[sp.expand(eqs[i, j]).coeff(u) for u in unknowns] for i, j in pairs])
    null = system.nullspace(simplify=True)
    basis = []
    for vec in null:
        M = sp.zeros(n, n)
        for c, (i, j) in zip(vec, pairs):
            M[i, j], M[j, i] = simplify(c), -simplify(c)
        basis.append(M)
    if not basis:
        raise NoNondegenerateSolution("only the zero matrix has constant coefficients")

    def nondegenerate(M):
        return simplify(M.det()) != 0

    found = [M for M in basis if nondegenerate(M)]
    chosen = []
    for M in found:
        if _independent(chosen + [M]):
            chosen.append(M)
    rng = np.random.default_rng(seed)
    for _ in range(NONDEGENERACY_TRIALS):
        if len(chosen) == len(basis):
            break
        coeffs = [sp.Integer(int(c)) for c in rng.integers(-2, 3, size=len(basis))]
        M = sp.zeros(n, n)
        for c, B in zip(coeffs, basis):
            M += c * B
        if nondegenerate(M) and _independent(chosen + [M]):
            chosen.append(M)
    if not chosen:
        raise NoNondegenerateSolution(
            f"solution space has dimension {len(basis)} but every tested member is singular"
        )
    bd = verify_A(s, chosen[0])
    return BirkhoffData(
        bd.states, bd.A, bd.B, bd.time, bd.residuals, tuple(basis), tuple(chosen),
        (f"solution space dimension {len(basis)}",), bd.checks,
    )


# ----------------------------------------------------------------------
# potentials


def _potential(alpha, coords, domain):
    """1-form ``lambda`` with ``d lambda = alpha`` by successive integration.

    The first coordinate's component is gauged to zero; the components
    along it are integrated in the first coordinate and the remaining
    closed form (independent of it) is handled recursively.
    """
    N = len(coords)
    lam = [sp.Integer(0)] * N
    if N == 1:
        return lam
    c0 = coords[0]
    for b in range(1, N):
        lam[b] = antiderivative(alpha.get((0, b), 0), c0)
    rest = {}
    for a, b in itertools.combinations(range(1, N), 2):
        r = alpha.get((a, b), 0) - (sp.diff(lam[b], coords[a]) - sp.diff(lam[a], coords[b]))
        rest[(a - 1, b - 1)] = _drop(r, c0, domain)
    sub = _potential(rest, coords[1:], domain)
    for b in range(1, N):
        lam[b] = simplify(lam[b] + sub[b - 1])
    return lam


def exterior_derivative(components, coords):
    """``{(a, b): d_a l_b - d_b l_a}`` for a 1-form with the given components."""
    return {
        (a, b): simplify(sp.diff(components[b], coords[a]) - sp.diff(components[a], coords[b]))
        for a, b in itertools.combinations(range(len(coords)), 2)
    }


def integrate_alpha(bd, domain=None):
    """Integrate ``alpha`` to ``lambda``; returns a :class:`LambdaForm`.

    Integration constants are dropped, which puts the base point at 1 for
    logarithmic terms and 0 otherwise.  ``d lambda == alpha`` is re-verified.
    """
    domain = domain or Domain()
    coords = (*bd.states, bd.time)
    alpha = bd.alpha()
    lam = _potential(alpha, coords, domain)
    if any(c.has(sp.Integral) for c in lam):
        raise OutsideIntegrableClass("no closed-form potential for alpha", alpha=alpha)
    d = exterior_derivative(lam, coords)
    checks = {}
    for key, comp in alpha.items():
        try:
            checks[key] = equivalent(d[key], comp, domain)
        except (SamplingError, UnboundSymbolError):
            checks[key] = Equivalence(False, "numeric")
    if not all(checks.values()):
        raise ConstructionError("integrated 1-form does not reproduce alpha")
    mode = "symbolic" if all(c.mode == "symbolic" for c in checks.values()) else "numeric"
    return LambdaForm(bd.states, tuple(lam[:-1]), lam[-1], bd.time,
                      notes=(f"d(lambda) = alpha verified ({mode})",),
                      checks={"d_lambda": Equivalence.all(checks.values())})


def lambda_from_lagrangian(L, states, velocities, time=sp.Symbol("t")):
    """Read ``(m_i, H)`` off an affine Lagrangian ``L = sum m_i v_i + H``."""
    L = sp.expand(sp.sympify(L))
    m = tuple(simplify(sp.diff(L, v)) for v in velocities)
    for mi in m:
        if mi.free_symbols & set(velocities):
            raise PreconditionError("Lagrangian is not affine in the velocities")
    H = simplify(L.subs({v: 0 for v in velocities}))
    return LambdaForm(tuple(states), m, H, time)


def birkhoff_el_check(s, lf):
    """Check Birkhoff's equations ``sum_j mu_ij X_j == w_i`` for every ``i``.

    ``lf`` is a :class:`LambdaForm` or :class:`BirkhoffData` (then ``mu = A``
    and ``w = B``).  Returns an :class:`Equivalence`; falsy if ``mu`` is
    singular at the sampled points.
    """
    if isinstance(lf, BirkhoffData):
        mu, w = lf.A, lf.B
    else:
        mu, w = lf.mu_matrix(), lf.w
    n = s.dim
    try:
        if _sample_det(mu, s.domain) < 1e-12:
            return Equivalence(False, "numeric", residual=sp.Integer(0))
        return Equivalence.all(
            equivalent(sp.Add(*(mu[i, j] * s.velocities[j] for j in range(n))), w[i], s.domain)
            for i in range(n)
        )
    except (SamplingError, UnboundSymbolError):
        return Equivalence(False, "numeric")


def not_gauge_equivalent(a, b, domain=None):
    """Certificate that ``lambda_a - lambda_b`` is not closed.

    Returns ``(True, component)`` with the first nonvanishing component of
    ``d(lambda_a - lambda_b)``, or ``(False, None)`` when the difference is
    closed (the forms are then gauge-equivalent on a star-shaped domain).
    """
    domain = domain or Domain()
    coords = (*a.states, a.time)
    diff = [ma - mb for ma, mb in zip(a.m, b.m)] + [a.H - b.H]
    for key, comp in exterior_derivative(diff, coords).items():
        try:
            if not equivalent(comp, 0, domain):
                return True, (key, comp)
        except (SamplingError, UnboundSymbolError):
            continue
    return False, None

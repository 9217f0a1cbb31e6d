"""Equilibrium solvers with residual certificates.

Four equilibrium kinds exist:

    E0  disease free, closed form
    E1  strain 1 only, root of a scalar balance G on (0, Lambda/alpha1]
    E2  strain 2 only, root(s) of a scalar balance H on (0, Lambda/alpha2]
    E3  coexistence, root of a reduced 2-D system in (I1, I2)

Every returned equilibrium is certified: the max-norm of the vector field at
the returned point must be below RESIDUAL_TOL or the solver raises instead of
returning a bad point. Scalar roots are bracketed and bisected to a width of
1e-12 times the bracket scale, then polished with at most three Newton steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import SolverError
from .incidence import IncidenceSpec
from .model import (
    RESIDUAL_TOL,
    ModelParams,
    State,
    residual as field_residual,
)

_FD_EPS = math.sqrt(np.finfo(float).eps)

#: relative lower end of scalar root brackets; the balance functions vanish at 0
BRACKET_EPSILON = 1e-9

#: relative bisection width before Newton polishing
BISECT_WIDTH = 1e-12

#: default sign-change scan resolution for the strain-2 balance
DEFAULT_SCAN = 4096


@dataclass(frozen=True)
class ExistenceCondition:
    """One threshold condition backing an equilibrium's existence."""

    name: str
    value: float
    satisfied: bool


@dataclass(frozen=True)
class Equilibrium:
    kind: str  # one of E0, E1, E2, E3
    point: State
    residual: float
    existence: tuple = ()
    multiplicity_note: str = ""


def disease_free(
    p: ModelParams,
    inc1: Optional[IncidenceSpec] = None,
    inc2: Optional[IncidenceSpec] = None,
) -> Equilibrium:
    """Closed-form disease-free equilibrium (Lambda/lam, r*Lambda/(mu*lam), 0, 0).

    When the incidence specs are supplied the residual is the full vector
    field norm; otherwise it uses the closed form, which is exact because
    F(S, 0) = 0.
    """
    point = State(p.susceptible_cap, p.vaccinated_cap, 0.0, 0.0)
    if inc1 is not None and inc2 is not None:
        res = field_residual(p, inc1, inc2, point)
    else:
        res = max(
            abs(p.Lambda - p.lam * point.S),
            abs(p.r * point.S - p.mu * point.V1),
        )
    return _certified(Equilibrium("E0", point, float(res)))


# -- strain 1 ----------------------------------------------------------------


def strain1_balance(p: ModelParams, inc1: IncidenceSpec, I1):
    """G(I1) = F1(S(I1), I1) - alpha1*I1 with S(I1) = (Lambda - alpha1*I1)/lam.

    Positive roots of G are the strain-1-only equilibria. G(0) = 0 exactly
    and G(Lambda/alpha1) = -Lambda.
    """
    S = (p.Lambda - p.alpha1 * I1) / p.lam
    return inc1.rate(S, I1) - p.alpha1 * I1


def solve_strain1(p: ModelParams, inc1: IncidenceSpec) -> Optional[Equilibrium]:
    """Unique strain-1-only equilibrium, present if and only if R1 > 1."""
    S0 = p.susceptible_cap
    R1 = float(inc1.d_rate_dI(S0, 0.0)) / p.alpha1
    condition = ExistenceCondition("R1 > 1", R1, R1 > 1.0)
    if R1 <= 1.0:
        return None

    hi = p.Lambda / p.alpha1
    lo = BRACKET_EPSILON * hi
    g = lambda x: float(strain1_balance(p, inc1, x))
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0.0 > g_hi):
        raise SolverError(
            "strain-1 balance not bracketed on (%.3e, %.3e) although R1 = %.6g > 1"
            % (lo, hi, R1)
        )

    def g_prime(x):
        S = (p.Lambda - p.alpha1 * x) / p.lam
        return float(
            -(p.alpha1 / p.lam) * inc1.d_rate_dS(S, x)
            + inc1.d_rate_dI(S, x)
            - p.alpha1
        )

    I1 = _bisect_then_polish(g, lo, hi, g_lo, BISECT_WIDTH * hi, g_prime)
    S = (p.Lambda - p.alpha1 * I1) / p.lam
    V1 = p.r * S / p.mu
    point = State(S, V1, I1, 0.0)
    F1 = float(inc1.rate(S, I1))
    res = max(
        abs(p.Lambda - F1 - p.lam * S),  # F2(S, 0) = 0
        abs(p.r * S - p.mu * V1),
        abs(F1 - p.alpha1 * I1),
    )
    return _certified(Equilibrium("E1", point, res, (condition,)))


# -- strain 2 ----------------------------------------------------------------


def strain2_coordinates(p: ModelParams, I2):
    """(S, V1) consistent with a strain-2-only equilibrium at infection level I2."""
    S = (p.Lambda - p.alpha2 * I2) * (p.mu + p.k * I2) / (p.lam * p.mu + p.mu * p.k * I2)
    V1 = p.r * S / (p.mu + p.k * I2)
    return S, V1


def strain2_balance(p: ModelParams, inc2: IncidenceSpec, I2):
    """H(I2) = F2(S(I2), I2) + k*I2*V1(I2) - alpha2*I2, vanishing at equilibria."""
    S, V1 = strain2_coordinates(p, I2)
    return inc2.rate(S, I2) + p.k * I2 * V1 - p.alpha2 * I2


def strain2_discriminant(p: ModelParams) -> float:
    """Sign classifier for the root structure of the strain-2 balance.

    Negative values mean a unique positive root is expected when R2 > 1;
    positive values confine multiple roots to an explicit interval.
    """
    return -p.alpha2 * p.r * p.mu - p.alpha2 * p.mu * p.mu + p.k * p.Lambda * p.r


def solve_strain2(
    p: ModelParams, inc2: IncidenceSpec, n_scan: int = DEFAULT_SCAN
) -> List[Equilibrium]:
    """All strain-2-only equilibria found by sign-change scan plus bisection.

    Returns an empty list when R2 <= 1. Raises SolverError when R2 > 1 but
    the scan resolution shows no sign change, since a root must exist.
    """
    S0 = p.susceptible_cap
    sigma2 = float(inc2.d_rate_dI(S0, 0.0))
    R2 = sigma2 / p.alpha2 + p.k * p.r * p.Lambda / (p.alpha2 * p.mu * p.lam)
    condition = ExistenceCondition("R2 > 1", R2, R2 > 1.0)
    if R2 <= 1.0:
        return []

    hi = p.Lambda / p.alpha2
    xs = np.linspace(0.0, hi, n_scan + 1)
    hs = np.asarray(strain2_balance(p, inc2, xs), float)

    h = lambda x: float(strain2_balance(p, inc2, x))

    def h_prime(x):
        step = _FD_EPS * max(1.0, abs(x))
        return (h(x + step) - h(x - step)) / (2.0 * step)

    brackets = []
    # H(0) = 0 exactly and H'(0) = alpha2*(R2 - 1) > 0; if the first scan node
    # is already negative the root sits inside the first cell
    if hs[1] < 0.0:
        lo = BRACKET_EPSILON * hi
        if h(lo) > 0.0:
            brackets.append((lo, xs[1]))
    for i in range(1, n_scan):
        a, b = hs[i], hs[i + 1]
        if a == 0.0:
            continue  # handled as the right end of the previous cell
        if b == 0.0 or (a > 0.0) != (b > 0.0):
            brackets.append((xs[i], xs[i + 1]))
    if not brackets:
        raise SolverError(
            "strain-2 balance shows no sign change at scan resolution %d "
            "although R2 = %.6g > 1" % (n_scan, R2)
        )

    d = strain2_discriminant(p)
    if d < 0.0:
        structure = "discriminant %.6g < 0: unique positive root expected" % d
    elif d > 0.0:
        L = (
            -p.r * p.alpha2
            - p.alpha2 * p.mu
            + math.sqrt(p.r * p.alpha2 * (p.r * p.alpha2 + p.alpha2 * p.mu + p.k * p.Lambda))
        ) / (p.alpha2 * p.k)
        structure = (
            "discriminant %.6g > 0: at most one root expected in [%.6g, %.6g]"
            % (d, L, hi)
        )
    else:
        structure = "discriminant is exactly 0"

    roots: List[float] = []
    for lo, up in brackets:
        root = _bisect_then_polish(h, lo, up, h(lo), BISECT_WIDTH * hi, h_prime)
        if not roots or abs(root - roots[-1]) > 10.0 * BISECT_WIDTH * hi:
            roots.append(root)

    out = []
    for I2 in roots:
        S, V1 = strain2_coordinates(p, I2)
        point = State(S, V1, 0.0, I2)
        F2 = float(inc2.rate(S, I2))
        res = max(
            abs(p.Lambda - F2 - p.lam * S),  # F1(S, 0) = 0
            abs(p.r * S - (p.mu + p.k * I2) * V1),
            abs(F2 + p.k * I2 * V1 - p.alpha2 * I2),
        )
        dF2_dS = float(inc2.d_rate_dS(S, I2))
        note = "%s; found %d root(s) at scan resolution %d; " % (
            structure,
            len(roots),
            n_scan,
        )
        note += "auxiliary uniqueness flag dF2/dS <= I2 %s (dF2/dS = %.6g, I2 = %.6g)" % (
            "holds" if dF2_dS <= I2 else "fails",
            dF2_dS,
            I2,
        )
        out.append(_certified(Equilibrium("E2", point, res, (condition,), note)))
    return out


# -- coexistence -------------------------------------------------------------


def coexistence_coordinates(p: ModelParams, I1, I2):
    """(S, V1) consistent with simultaneous balance of both strains."""
    S = (
        (p.Lambda - p.alpha1 * I1 - p.alpha2 * I2)
        * (p.mu + p.k * I2)
        / (p.lam * p.mu + p.mu * p.k * I2)
    )
    V1 = p.r * S / (p.mu + p.k * I2)
    return S, V1


def solve_coexistence(
    p: ModelParams,
    inc1: IncidenceSpec,
    inc2: IncidenceSpec,
    hint: Optional[Tuple[float, float]] = None,
    use_simulation_start: bool = True,
) -> Optional[Equilibrium]:
    """Interior equilibrium with both strains present, or None.

    Solves the reduced system in (I1, I2)

        f1(S(I1, I2), I1) - alpha1 = 0
        f2(S(I1, I2), I2) + k*V1(I1, I2) - alpha2 = 0

    by damped Newton iteration from a ladder of starting points: the caller's
    (I1, I2) hint, the single-strain infection levels, the tail of a short
    coarse simulation, and a coarse grid search. When both invasion numbers exceed 1
    a root must exist, so exhausting every start then raises SolverError;
    otherwise the solver returns None.
    """

    def system(vec):
        I1, I2 = vec
        S, V1 = coexistence_coordinates(p, I1, I2)
        return np.array(
            [
                inc1.force(S, I1) - p.alpha1,
                inc2.force(S, I2) + p.k * V1 - p.alpha2,
            ],
            float,
        )

    e1 = solve_strain1(p, inc1)
    e2_roots = solve_strain2(p, inc2)
    e2 = e2_roots[0] if e2_roots else None

    R2_invasion = None
    R1_invasion = None
    if e1 is not None:
        R2_invasion = float(inc2.d_rate_dI(e1.point.S, 0.0) + p.k * e1.point.V1) / p.alpha2
    if e2 is not None:
        R1_invasion = float(inc1.d_rate_dI(e2.point.S, 0.0)) / p.alpha1

    starts = []
    if hint is not None:
        hint_I1, hint_I2 = float(hint[0]), float(hint[1])
        if hint_I1 > 0.0 and hint_I2 > 0.0:
            starts.append((hint_I1, hint_I2))
    if e1 is not None and e2 is not None:
        starts.append((e1.point.I1, e2.point.I2))
    if use_simulation_start:
        starts.append(_simulation_start(p, inc1, inc2))
    starts.append(_grid_start(p, system))

    solution = None
    for start in starts:
        if start is None:
            continue
        solution = _damped_newton(system, np.asarray(start, float))
        if solution is not None:
            I1, I2 = solution
            S, V1 = coexistence_coordinates(p, I1, I2)
            if I1 > 0.0 and I2 > 0.0 and S > 0.0 and V1 > 0.0:
                break
            solution = None

    conditions = []
    if R2_invasion is not None:
        conditions.append(
            ExistenceCondition("R2_invasion > 1", R2_invasion, R2_invasion > 1.0)
        )
    if R1_invasion is not None:
        conditions.append(
            ExistenceCondition("R1_invasion > 1", R1_invasion, R1_invasion > 1.0)
        )

    if solution is None:
        guaranteed = (
            R2_invasion is not None
            and R1_invasion is not None
            and R2_invasion > 1.0
            and R1_invasion > 1.0
        )
        if guaranteed:
            raise SolverError(
                "coexistence Newton solve failed from all starts although "
                "R2_invasion = %.6g > 1 and R1_invasion = %.6g > 1"
                % (R2_invasion, R1_invasion)
            )
        return None

    I1, I2 = solution
    S, V1 = coexistence_coordinates(p, I1, I2)
    point = State(S, V1, I1, I2)
    res = field_residual(p, inc1, inc2, point)
    return _certified(Equilibrium("E3", point, res, tuple(conditions)))


def _simulation_start(p: ModelParams, inc1: IncidenceSpec, inc2: IncidenceSpec):
    """Tail of a short, coarse run from an interior point."""
    from .simulate import IntegratorOptions, integrate  # deferred: fallback path only

    x0 = State(
        0.5 * p.susceptible_cap,
        0.5 * p.vaccinated_cap,
        0.01 * p.population_cap,
        0.01 * p.population_cap,
    )
    opts = IntegratorOptions(rtol=1e-6, atol=1e-9, t_end=400.0)
    try:
        traj = integrate(p, inc1, inc2, x0, opts)
    except Exception:
        return None
    tail = traj.states[-1]
    if tail[2] > 0.0 and tail[3] > 0.0:
        return (float(tail[2]), float(tail[3]))
    return None


def _grid_start(p: ModelParams, system):
    """Coarse feasible-region scan minimizing the reduced-system norm."""
    n = 24
    i1 = np.geomspace(1e-6 * p.Lambda / p.alpha1, 0.98 * p.Lambda / p.alpha1, n)
    i2 = np.geomspace(1e-6 * p.Lambda / p.alpha2, 0.98 * p.Lambda / p.alpha2, n)
    best = None
    best_norm = np.inf
    for a in i1:
        for b in i2:
            if p.Lambda - p.alpha1 * a - p.alpha2 * b <= 0.0:
                continue
            try:
                g = system((a, b))
            except Exception:
                continue
            norm = float(np.max(np.abs(g)))
            if np.isfinite(norm) and norm < best_norm:
                best_norm = norm
                best = (float(a), float(b))
    return best


def _damped_newton(system, x0, max_iter=60, tol=1e-12):
    x = np.array(x0, float)
    fx = _safe_eval(system, x)
    if fx is None:
        return None
    for _ in range(max_iter):
        if np.max(np.abs(fx)) < tol:
            return x
        J = _fd_jacobian2(system, x)
        if J is None:
            return None
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            return None
        scale = 1.0
        improved = False
        base = np.max(np.abs(fx))
        for _ in range(30):
            trial = x + scale * step
            f_trial = _safe_eval(system, trial)
            if f_trial is not None and np.max(np.abs(f_trial)) < base:
                x, fx = trial, f_trial
                improved = True
                break
            scale *= 0.5
        if not improved:
            return None
    return x if np.max(np.abs(fx)) < tol else None


def _safe_eval(system, x):
    try:
        fx = system(x)
    except Exception:
        return None
    return fx if np.all(np.isfinite(fx)) else None


def _fd_jacobian2(system, x):
    J = np.empty((2, 2))
    for j in range(2):
        h = _FD_EPS * max(1.0, abs(x[j]))
        bump = np.zeros(2)
        bump[j] = h
        f_plus = _safe_eval(system, x + bump)
        f_minus = _safe_eval(system, x - bump)
        if f_plus is None or f_minus is None:
            return None
        J[:, j] = (f_plus - f_minus) / (2.0 * h)
    return J


# -- shared helpers ----------------------------------------------------------


def _bisect_then_polish(fn, lo, hi, f_lo, width, dfn):
    """Bisect a sign-change bracket to the given width, then Newton-polish.

    The polish takes at most three steps and never leaves the bracket; the
    bisection answer is kept whenever Newton fails to improve |fn|.
    """
    a, b = lo, hi
    lo_positive = f_lo > 0.0
    while b - a > width:
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0:
            a = b = mid
            break
        if (fm > 0.0) == lo_positive:
            a = mid
        else:
            b = mid
    x = 0.5 * (a + b)
    fx = fn(x)
    for _ in range(3):
        d = dfn(x)
        if not np.isfinite(d) or d == 0.0:
            break
        candidate = x - fx / d
        if not (lo < candidate <= hi) or not np.isfinite(candidate):
            break
        f_candidate = fn(candidate)
        if abs(f_candidate) <= abs(fx):
            x, fx = candidate, f_candidate
        else:
            break
    return x


def _certified(eq: Equilibrium) -> Equilibrium:
    if not (eq.residual < RESIDUAL_TOL):
        raise SolverError(
            "%s solve produced residual %.3e, above the %.0e certificate"
            % (eq.kind, eq.residual, RESIDUAL_TOL)
        )
    return eq

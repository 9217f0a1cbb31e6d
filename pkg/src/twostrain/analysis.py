"""Whole-scenario analysis: thresholds, equilibria, stability, global checks.

This is the engine behind the CLI's analyze, sweep and check-global verbs.
Every verdict line names the condition it rests on together with the
numeric value that produced it, so reports are auditable without rerunning.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .equilibria import (
    Equilibrium,
    disease_free,
    solve_coexistence,
    solve_strain1,
    solve_strain2,
)
from .errors import ConfigError, SolverError
from .incidence import IncidenceSpec
from .model import Thresholds, invasion_numbers, thresholds
from .scenario import Scenario
from .simulate import integrate
from .stability import (
    GridScanSummary,
    StabilityReport,
    Verdict,
    classify_coexistence,
    classify_disease_free,
    classify_strain1,
    classify_strain2,
    coexistence_lyapunov_scan,
    strain2_lyapunov_scan,
)


@dataclass
class AnalysisReport:
    scenario: Scenario
    thresholds: Thresholds
    equilibria: Tuple[Equilibrium, ...]
    stability: Tuple[StabilityReport, ...]
    global_checks: Tuple[Tuple[str, GridScanSummary], ...]
    verdict_lines: Tuple[str, ...]
    notes: Tuple[str, ...] = ()


def analyze(sc: Scenario, grid: int = 200, include_global: bool = True) -> AnalysisReport:
    """Run the full workup for one scenario.

    Global-condition scans are run only where the corresponding stability
    statement needs them: the vaccinated-strain surface scan when the
    strain-2-only equilibrium exists with R1 <= 1, and the trajectory-tail
    derivative check when the coexistence equilibrium exists.
    """
    p, inc1, inc2 = sc.params, sc.incidence1, sc.incidence2
    th = thresholds(p, inc1, inc2)
    notes: List[str] = []

    e0 = disease_free(p, inc1, inc2)
    e1 = solve_strain1(p, inc1)
    e2_roots = solve_strain2(p, inc2)
    e2 = e2_roots[0] if e2_roots else None
    if len(e2_roots) > 1:
        notes.append(
            "strain-2 balance has %d roots; invasion threshold reported at the smallest"
            % len(e2_roots)
        )
    r2_inv, r1_inv = invasion_numbers(p, inc1, inc2, e1, e2)
    th = dataclasses.replace(th, R2_invasion=r2_inv, R1_invasion=r1_inv)

    e3 = None
    if e1 is not None and e2 is not None:
        try:
            e3 = solve_coexistence(p, inc1, inc2)
        except SolverError as exc:
            notes.append("coexistence solve failed: %s" % exc)

    equilibria: List[Equilibrium] = [e0]
    stability: List[StabilityReport] = [classify_disease_free(p, inc1, inc2)]
    if e1 is not None:
        equilibria.append(e1)
        stability.append(classify_strain1(p, inc1, inc2, e1))
    for root in e2_roots:
        equilibria.append(root)
        stability.append(classify_strain2(p, inc1, inc2, root))
    if e3 is not None:
        equilibria.append(e3)
        stability.append(classify_coexistence(p, inc1, inc2, e3))

    global_checks: List[Tuple[str, GridScanSummary]] = []
    if include_global:
        if e2 is not None and th.R1 <= 1.0:
            summary = strain2_lyapunov_scan(p, inc2, e2, n_grid=grid)
            global_checks.append(("strain2_lyapunov_scan", summary))
        if e3 is not None:
            traj = integrate(p, inc1, inc2, sc.initial, sc.integrator)
            tail = traj.times >= traj.times[-1] - sc.integrator.tail_window
            summary = coexistence_lyapunov_scan(p, inc1, inc2, e3, traj.states[tail][:, :4])
            global_checks.append(("coexistence_tail_derivative", summary))

    lines = _verdict_lines(th, e1, e2_roots, e3, stability, dict(global_checks))
    return AnalysisReport(
        scenario=sc,
        thresholds=th,
        equilibria=tuple(equilibria),
        stability=tuple(stability),
        global_checks=tuple(global_checks),
        verdict_lines=tuple(lines),
        notes=tuple(notes),
    )


def _fmt(x: Optional[float]) -> str:
    return "n/a" if x is None else "%.6g" % x


def _verdict_lines(
    th: Thresholds,
    e1: Optional[Equilibrium],
    e2_roots,
    e3: Optional[Equilibrium],
    stability: List[StabilityReport],
    checks: Dict[str, GridScanSummary],
) -> List[str]:
    by_kind: Dict[str, StabilityReport] = {rep.kind: rep for rep in stability}
    lines: List[str] = []

    if th.R0 < 1.0:
        lines.append(
            "E0 globally asymptotically stable: R0 = max(R1, R2) = %s < 1" % _fmt(th.R0)
        )
    else:
        which = "R1" if th.R1 > 1.0 else "R2"
        lines.append(
            "E0 unstable: %s = %s > 1 gives a positive growth rate" % (which, _fmt(getattr(th, which)))
        )

    if e1 is None:
        lines.append("E1 absent: R1 = %s <= 1" % _fmt(th.R1))
    else:
        rep = by_kind["E1"]
        if rep.verdict is Verdict.LOCALLY_STABLE:
            lines.append(
                "E1 locally asymptotically stable: R1 = %s > 1, coefficient conditions positive, "
                "R2_invasion = %s < 1" % (_fmt(th.R1), _fmt(th.R2_invasion))
            )
        elif rep.verdict is Verdict.UNSTABLE:
            failed = [name for name, ok in rep.conditions.items() if not ok]
            lines.append(
                "E1 unstable: violated condition(s) %s (R2_invasion = %s)"
                % (", ".join(failed) or "none flagged", _fmt(th.R2_invasion))
            )
        else:
            lines.append("E1 classification inconclusive: a tested quantity sits on the margin")

    if not e2_roots:
        lines.append("E2 absent: R2 = %s <= 1" % _fmt(th.R2))
    else:
        rep = by_kind["E2"]
        if rep.verdict is Verdict.LOCALLY_STABLE:
            lines.append(
                "E2 locally asymptotically stable: R2 = %s > 1, coefficient conditions positive, "
                "R1_invasion = %s < 1" % (_fmt(th.R2), _fmt(th.R1_invasion))
            )
        elif rep.verdict is Verdict.UNSTABLE:
            failed = [name for name, ok in rep.conditions.items() if not ok]
            lines.append(
                "E2 unstable: violated condition(s) %s (R1_invasion = %s)"
                % (", ".join(failed) or "none flagged", _fmt(th.R1_invasion))
            )
        else:
            lines.append("E2 classification inconclusive: a tested quantity sits on the margin")
        scan = checks.get("strain2_lyapunov_scan")
        if scan is not None:
            if scan.nonpositive_everywhere:
                lines.append(
                    "E2 globally asymptotically stable: R2 = %s > 1, R1 = %s <= 1, and the "
                    "lyapunov surface is nonpositive on a %d-point grid (max %.3e at S = %s, V1 = %s)"
                    % (
                        _fmt(th.R2),
                        _fmt(th.R1),
                        scan.n_points,
                        scan.max_value,
                        _fmt(scan.argmax[0]),
                        _fmt(scan.argmax[1]),
                    )
                )
            else:
                lines.append(
                    "E2 global condition fails: lyapunov surface reaches %.3e > 0 at S = %s, V1 = %s"
                    % (scan.max_value, _fmt(scan.argmax[0]), _fmt(scan.argmax[1]))
                )

    if e3 is None:
        lines.append(
            "E3 absent or not found: requires R2_invasion = %s > 1 and R1_invasion = %s > 1"
            % (_fmt(th.R2_invasion), _fmt(th.R1_invasion))
        )
    else:
        rep = by_kind["E3"]
        if rep.verdict is Verdict.LOCALLY_STABLE:
            lines.append(
                "E3 locally asymptotically stable: all quartic coefficient conditions positive "
                "(c1 = %s, c1*c2 - c3 = %s, c1*c2*c3 - c3^2 - c1^2*c4 = %s)"
                % (
                    _fmt(rep.coefficients.get("c1")),
                    _fmt(rep.coefficients.get("c1*c2 - c3")),
                    _fmt(rep.coefficients.get("c1*c2*c3 - c3^2 - c1^2*c4")),
                )
            )
        elif rep.verdict is Verdict.UNSTABLE:
            failed = [name for name, ok in rep.conditions.items() if not ok]
            lines.append("E3 unstable: violated condition(s) %s" % (", ".join(failed) or "none flagged"))
        else:
            lines.append("E3 classification inconclusive: a tested quantity sits on the margin")
        scan = checks.get("coexistence_tail_derivative")
        if scan is not None:
            if scan.nonpositive_everywhere:
                lines.append(
                    "E3 consistent with global stability: time derivative of the lyapunov "
                    "expression stays <= 0 along the trajectory tail (max %.3e over %d states)"
                    % (scan.max_value, scan.n_points)
                )
            else:
                lines.append(
                    "E3 global condition fails: lyapunov time derivative reaches %.3e > 0"
                    % scan.max_value
                )
    return lines


def render_report(report: AnalysisReport) -> str:
    """Render an analysis report as structured plain text."""
    sc = report.scenario
    out: List[str] = []
    out.append("== scenario ==")
    p = sc.params
    out.append(
        "params: Lambda=%r mu=%r r=%r k=%r gamma1=%r gamma2=%r v1=%r v2=%r"
        % (p.Lambda, p.mu, p.r, p.k, p.gamma1, p.gamma2, p.v1, p.v2)
    )
    for name, inc in (("incidence1", sc.incidence1), ("incidence2", sc.incidence2)):
        if inc.family in ("saturated_s", "saturated_i2"):
            out.append("%s: %s(beta=%r, zeta=%r)" % (name, inc.family, inc.beta, inc.zeta))
        elif inc.family == "bilinear":
            out.append("%s: bilinear(beta=%r)" % (name, inc.beta))
        else:
            out.append("%s: %s" % (name, inc.label or inc.family))
    out.append("derived: alpha1=%.6g alpha2=%.6g S0=%.10g V10=%.10g" % (
        p.alpha1, p.alpha2, p.susceptible_cap, p.vaccinated_cap))
    out.append("")
    th = report.thresholds
    out.append("== thresholds ==")
    out.append("R1 = %.10g" % th.R1)
    out.append("R2 = %.10g" % th.R2)
    out.append("R0 = %.10g" % th.R0)
    out.append("R2_invasion = %s" % _fmt(th.R2_invasion))
    out.append("R1_invasion = %s" % _fmt(th.R1_invasion))
    out.append("")
    out.append("== equilibria ==")
    by_kind = {rep.kind: rep for rep in report.stability}
    for eq in report.equilibria:
        pt = eq.point
        out.append(
            "%s: S=%.10g V1=%.10g I1=%.10g I2=%.10g  (residual %.3e)"
            % (eq.kind, pt.S, pt.V1, pt.I1, pt.I2, eq.residual)
        )
        for cond in eq.existence:
            out.append(
                "    existence %s: value %.6g -> %s"
                % (cond.name, cond.value, "satisfied" if cond.satisfied else "not satisfied")
            )
        if eq.multiplicity_note:
            out.append("    note: %s" % eq.multiplicity_note)
        rep = by_kind.get(eq.kind)
        if rep is not None:
            out.append(
                "    local verdict: %s (eigensolver cross-check: %s)"
                % (rep.verdict.value, rep.eigen_verdict.value)
            )
            eigs = ", ".join("%.6g%+.6gj" % (z.real, z.imag) for z in rep.eigenvalues)
            out.append("    eigenvalues: %s" % eigs)
            for name, ok in rep.conditions.items():
                out.append("    condition %s: %s" % (name, "yes" if ok else "NO"))
            for note in rep.notes:
                out.append("    note: %s" % note)
    out.append("")
    if report.global_checks:
        out.append("== global checks ==")
        for name, scan in report.global_checks:
            out.append(
                "%s: max %.6e at (%.6g, %.6g) over %d points -> %s"
                % (
                    name,
                    scan.max_value,
                    scan.argmax[0],
                    scan.argmax[1],
                    scan.n_points,
                    "nonpositive everywhere" if scan.nonpositive_everywhere else "POSITIVE VALUES FOUND",
                )
            )
        out.append("")
    out.append("== verdicts ==")
    out.extend(report.verdict_lines)
    for note in report.notes:
        out.append("note: %s" % note)
    out.append("")
    return "\n".join(out)


# -- parameter sweeps ----------------------------------------------------------

_PARAM_FIELDS = ("Lambda", "mu", "r", "k", "gamma1", "gamma2", "v1", "v2")


def _resolve_key(key: str) -> Tuple[str, str]:
    if "." in key:
        section, field = key.split(".", 1)
    elif key in _PARAM_FIELDS:
        section, field = "params", key
    else:
        raise ConfigError("sweep key %r is not a numeric scenario field" % key)
    if section == "params" and field in _PARAM_FIELDS:
        return section, field
    if section in ("incidence1", "incidence2") and field in ("beta", "zeta"):
        return section, field
    raise ConfigError("sweep key %r is not a numeric scenario field" % key)


def apply_sweep_value(sc: Scenario, key: str, value: float) -> Scenario:
    """Return a copy of the scenario with one numeric field replaced."""
    section, field = _resolve_key(key)
    if section == "params":
        params = dataclasses.replace(sc.params, **{field: value})
        return dataclasses.replace(sc, params=params)
    inc = getattr(sc, section)
    if inc.family == "bilinear" and field == "zeta":
        raise ConfigError("sweep key %s.zeta: bilinear incidence has no zeta" % section)
    beta = value if field == "beta" else inc.beta
    zeta = value if field == "zeta" else inc.zeta
    if inc.family == "bilinear":
        new_inc = IncidenceSpec.bilinear(beta)
    elif inc.family == "saturated_s":
        new_inc = IncidenceSpec.saturated_s(beta, zeta)
    elif inc.family == "saturated_i2":
        new_inc = IncidenceSpec.saturated_i2(beta, zeta)
    else:
        raise ConfigError("cannot sweep custom incidence coefficients")
    return dataclasses.replace(sc, **{section: new_inc})


@dataclass(frozen=True)
class SweepRow:
    value: float
    R1: float
    R2: float
    R0: float
    R2_invasion: Optional[float]
    R1_invasion: Optional[float]
    exists: Dict[str, bool]
    verdicts: Dict[str, str]


def sweep(
    sc: Scenario,
    key: str,
    start: float,
    stop: float,
    n: int,
    classify: bool = True,
) -> List[SweepRow]:
    """Evaluate thresholds (and optionally equilibria with verdicts) on a grid.

    The coexistence solve is warm-started from the previous grid point, so
    branches are followed continuously instead of re-searched each time.
    """
    if n < 2:
        raise ConfigError("sweep needs n >= 2 grid points")
    _resolve_key(key)  # validate before running
    values = np.linspace(start, stop, n)
    rows: List[SweepRow] = []
    hint = None
    for value in values:
        sci = apply_sweep_value(sc, key, float(value))
        p, inc1, inc2 = sci.params, sci.incidence1, sci.incidence2
        th = thresholds(p, inc1, inc2)
        exists = {"E0": True, "E1": False, "E2": False, "E3": False}
        verdicts = {"E0": "", "E1": "absent", "E2": "absent", "E3": "absent"}
        r2_inv = r1_inv = None
        if not classify:
            rows.append(SweepRow(float(value), th.R1, th.R2, th.R0, None, None, exists, verdicts))
            continue
        verdicts["E0"] = classify_disease_free(p, inc1, inc2).verdict.value
        e1 = solve_strain1(p, inc1)
        e2_roots = solve_strain2(p, inc2)
        e2 = e2_roots[0] if e2_roots else None
        r2_inv, r1_inv = invasion_numbers(p, inc1, inc2, e1, e2)
        if e1 is not None:
            exists["E1"] = True
            verdicts["E1"] = classify_strain1(p, inc1, inc2, e1).verdict.value
        if e2 is not None:
            exists["E2"] = True
            verdicts["E2"] = classify_strain2(p, inc1, inc2, e2).verdict.value
        e3 = None
        if e1 is not None and e2 is not None:
            try:
                e3 = solve_coexistence(p, inc1, inc2, hint=hint, use_simulation_start=False)
            except SolverError:
                verdicts["E3"] = "solve failed"
        if e3 is not None:
            exists["E3"] = True
            verdicts["E3"] = classify_coexistence(p, inc1, inc2, e3).verdict.value
            hint = (e3.point.I1, e3.point.I2)
        rows.append(
            SweepRow(float(value), th.R1, th.R2, th.R0, r2_inv, r1_inv, exists, verdicts)
        )
    return rows


def turning_point(xs, ys) -> Optional[Tuple[int, float]]:
    """Locate an interior maximum of a sampled curve.

    Returns (index, xs[index]) of the largest sample when it is interior,
    None when the maximum sits on either end (no turning point resolved).
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 3:
        raise ValueError("need matching 1-D arrays with at least 3 samples")
    i = int(np.argmax(ys))
    if i == 0 or i == xs.size - 1:
        return None
    return i, float(xs[i])

"""Step-bound coefficients, theorem validators, and Cauchy certificates.

The one-step recursion bound

    delta(x_{n+1}, x_n) <= c_n * delta(x_n, x_{n-1}) + zeta_n

is evaluated in three modes:

* ``paper_literal`` takes the printed coefficient
  ``c_n = kappa*b*((1-lam)*alpha + (lam/2)*beta + (lam/2)*gamma)`` and the
  printed error aggregate at face value,
* ``p_corrected`` raises each convex weight to the power ``p`` and uses
  the nested two-level triangle constant ``kappa*b**2`` for the four-term
  split, which is what the homogeneity axiom actually supports for
  ``p < 1``,
* ``residual_corrected`` keeps the literal coefficient but augments
  ``zeta_n`` by ``kappa*b*(lam/2)*delta(T(u_n), u_n)``, the term the
  literal expansion drops when it substitutes ``u_n`` for ``T(u_n)``.

Checks are report data, never exceptions; the point of running them is
to see where each bound holds and where it does not.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cone_space import ConeBpSpace
from .errors import MissingAuxError
from .iterate import IterationConfig, Schedule, Trace
from .operators import CompatiblePairSpec, WeakContractionConsts

__all__ = [
    "StepBound",
    "ConvergenceCertificate",
    "CheckItem",
    "ValidationReport",
    "BoundEval",
    "CheckResult",
    "step_coefficients",
    "check_step_bound",
    "theorem1_preconditions",
    "weak_q",
    "validate_weak_q",
    "coincidence_factor",
    "validate_coincidence",
    "cauchy_certificate",
    "averaging_check",
]

BOUND_TOL = 1e-9
MODES = ("paper_literal", "p_corrected", "residual_corrected")


@dataclass(frozen=True)
class StepBound:
    """One evaluated step bound; ``gap = lhs - rhs``, so positive means violated."""

    n: int
    c_n: float
    zeta_n: float
    mode: str
    satisfied: bool
    gap: float

    def to_dict(self) -> dict:
        return {"n": self.n, "c_n": self.c_n, "zeta_n": self.zeta_n,
                "mode": self.mode, "satisfied": self.satisfied, "gap": self.gap}


@dataclass
class CheckItem:
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "value": self.value, "detail": self.detail}


@dataclass
class ValidationReport:
    """A named list of pass/fail checks with the computed quantities."""

    subject: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_json(self, indent=None) -> str:
        return json.dumps({"schema_version": "1", "subject": self.subject,
                           "passed": self.passed,
                           "checks": [c.to_dict() for c in self.checks]},
                          indent=indent)


def _error_norms(space: ConeBpSpace, cfg: IterationConfig, n: int) -> dict:
    out = {}
    for name in ("eps", "rho", "omega", "theta"):
        e = cfg.errors.value(name, n, space.dim)
        out[name] = float(np.linalg.norm(space.cone_norm(e))) if np.any(e) else 0.0
    return out


def step_coefficients(space: ConeBpSpace, cfg: IterationConfig, n: int,
                      mode: str = "paper_literal",
                      trace: Trace | None = None) -> tuple[float, float]:
    """Contraction coefficient ``c_n`` and error aggregate ``zeta_n`` at step ``n``.

    ``residual_corrected`` needs the recorded aux values of ``trace`` at
    step ``n`` and raises :class:`MissingAuxError` on a lean trace.
    """
    if mode not in MODES:
        raise ValueError(f"unknown bound mode {mode!r}; pick one of {MODES}")
    kb = space.kappa * space.b
    a_n, b_n, g_n = cfg.alpha.at(n), cfg.beta.at(n), cfg.gamma.at(n)
    lam = cfg.lam.at(n)
    w1, w2, w3 = 1.0 - lam, lam / 2.0, lam / 2.0
    e = _error_norms(space, cfg, n)

    if mode == "p_corrected":
        p = space.p
        kb2 = space.kappa * space.b ** 2
        c_n = kb2 * (w1 ** p * a_n ** p + w2 ** p * b_n ** p + w3 ** p * g_n ** p)
        zeta = kb2 * (w1 ** p * e["eps"] + w2 ** p * e["rho"]
                      + w3 ** p * e["omega"] + e["theta"])
        return c_n, zeta

    c_n = kb * (w1 * a_n + w2 * b_n + w3 * g_n)
    zeta = kb * (w1 * e["eps"] + w2 * e["rho"] + w3 * e["omega"]) + e["theta"]
    if mode == "residual_corrected":
        if trace is None:
            raise MissingAuxError("residual_corrected mode needs the recorded trace")
        rec = next((r for r in trace.records if r.n == n), None)
        if rec is None:
            raise MissingAuxError(f"trace has no record for n={n}")
        if rec.aux is None or "u" not in rec.aux or "Tu" not in rec.aux:
            raise MissingAuxError(
                "residual_corrected mode needs aux values; trace was recorded lean")
        zeta += kb * w3 * space.delta(rec.aux["Tu"], rec.aux["u"])
    return c_n, zeta


def check_step_bound(trace: Trace, mode: str = "paper_literal") -> list[StepBound]:
    """Evaluate the one-step bound along a multi-inertial trace.

    Compares ``delta(x_{n+1}, x_n)`` against
    ``c_n * delta(x_n, x_{n-1}) + zeta_n`` with tolerance 1e-9 for every
    recorded step. Dissatisfaction is data, not an error.
    """
    if trace.config is None or trace.space is None:
        raise ValueError("step bounds need a multi-inertial trace with its config")
    if len(trace.iterates()) < 3:
        raise ValueError("need at least two steps to compare against a predecessor")
    space, cfg = trace.space, trace.config
    prev = space.delta(trace.initial[1], trace.initial[0])
    out = []
    for rec in trace.records:
        c_n, zeta = step_coefficients(space, cfg, rec.n, mode, trace)
        lhs = rec.step_delta
        rhs = c_n * prev + zeta
        gap = lhs - rhs
        out.append(StepBound(n=rec.n, c_n=c_n, zeta_n=zeta, mode=mode,
                             satisfied=gap <= BOUND_TOL, gap=gap))
        prev = rec.step_delta
    return out


def theorem1_preconditions(space: ConeBpSpace, cfg: IterationConfig) -> ValidationReport:
    """Check the convergence-theorem hypotheses for a configuration.

    Verifies ``kappa * b * alpha < 1`` with ``alpha`` the largest inertia
    cap, that each inertia cap sits in ``[0, 1)``, that the relaxation
    schedule stays inside its declared band ``[delta, 1 - delta]`` with
    ``delta`` in ``(0, 1/2)``, and that nonzero error sequences carry a
    finite budget.
    """
    report = ValidationReport(subject="theorem1_preconditions")
    alpha_bound = max(cfg.alpha.cap, cfg.beta.cap, cfg.gamma.cap)
    kba = space.kappa * space.b * alpha_bound
    report.checks.append(CheckItem(
        "kappa_b_alpha", kba < 1.0, kba,
        f"kappa*b*alpha = {space.kappa:g}*{space.b:g}*{alpha_bound:g}"))

    caps_ok = all(0.0 <= s.cap < 1.0 for s in (cfg.alpha, cfg.beta, cfg.gamma))
    report.checks.append(CheckItem("inertia_caps", caps_ok, alpha_bound,
                                   "each inertia cap must lie in [0, 1)"))

    delta = cfg.lam.lo
    band_ok = 0.0 < delta < 0.5 and cfg.lam.cap <= 1.0 - delta + 1e-12
    values_ok = True
    worst = None
    for n in range(1, cfg.max_iter + 1):
        v = cfg.lam.at(n)
        if not delta - 1e-12 <= v <= 1.0 - delta + 1e-12:
            values_ok = False
            worst = (n, v)
            break
    detail = f"delta = {delta:g}, band [{delta:g}, {1 - delta:g}]"
    if worst:
        detail += f"; value {worst[1]} escapes at n={worst[0]}"
    report.checks.append(CheckItem("relaxation_band", band_ok and values_ok,
                                   delta, detail))

    budget_ok = cfg.errors.all_zero or math.isfinite(cfg.errors.budget)
    report.checks.append(CheckItem(
        "error_budget", budget_ok,
        None if math.isinf(cfg.errors.budget) else cfg.errors.budget,
        "zero errors, or a finite partial-sum budget"))
    return report


def weak_q(consts: WeakContractionConsts, lambda_n: float) -> float:
    """Per-step contraction factor induced by the weak-contraction constants.

    ``q_n = (s*lam - lam**2 * b_w + c_w*(lam - 1)) / (lam**2 * (a + b_w))``.
    """
    denom = lambda_n ** 2 * (consts.a + consts.b_w)
    if denom == 0.0:
        raise ValueError("a + b_w must be positive (and lambda nonzero)")
    return (consts.s * lambda_n - lambda_n ** 2 * consts.b_w
            + consts.c_w * (lambda_n - 1.0)) / denom


def validate_weak_q(consts: WeakContractionConsts, lam, max_n: int = 100) -> ValidationReport:
    """Assert ``0 <= q_n < 1`` for every scheduled step.

    ``q_max`` is the supremum over the steps actually scheduled, not an
    a-priori bound.
    """
    sched = lam if isinstance(lam, Schedule) else Schedule.relaxation(lam)
    qs = [weak_q(consts, sched.at(n)) for n in range(1, max_n + 1)]
    q_max, q_min = max(qs), min(qs)
    report = ValidationReport(subject="weak_q")
    report.checks.append(CheckItem("q_nonnegative", q_min >= 0.0, q_min,
                                   f"min q_n over n<={max_n}"))
    report.checks.append(CheckItem("q_below_one", q_max < 1.0, q_max,
                                   f"max q_n over n<={max_n}"))
    return report


def coincidence_factor(pair: CompatiblePairSpec) -> float:
    """The geometric factor ``r / (a + b_w)`` of the coincidence iteration."""
    denom = pair.a + pair.b_w
    if denom == 0.0:
        raise ValueError("a + b_w must be positive")
    return pair.r / denom


def validate_coincidence(pair: CompatiblePairSpec) -> ValidationReport:
    """Assert the coincidence factor is strictly below one."""
    q = coincidence_factor(pair)
    report = ValidationReport(subject="coincidence_factor")
    report.checks.append(CheckItem("factor_below_one", q < 1.0, q,
                                   "requires r < a + b_w"))
    return report


@dataclass
class ConvergenceCertificate:
    """Geometric tail bound for the remaining displacement of a trace.

    ``verdict`` is ``"certified"`` when
    ``kappa*b * (last step) * c_star / (1 - c_star)`` falls below the
    tolerance; anything else (no usable contraction factor, measured
    ratios at or above one, bound too large) is ``"inconclusive"``.
    """

    partial_sum: float
    geometric_tail_bound: float
    c_star: float
    verdict: str
    tol: float
    kappa_b: float
    deltas: list = field(default_factory=list)

    def cauchy_radius(self, n: int, m: int) -> float:
        """Bound on ``delta(x_m, x_n)`` from the recorded step distances."""
        if not 0 <= n < m <= len(self.deltas):
            raise ValueError(f"need 0 <= n < m <= {len(self.deltas)}")
        return self.kappa_b * float(sum(self.deltas[n:m]))

    def remaining_bound(self, n: int) -> float:
        """Bound on the displacement from iterate ``n`` to anything beyond."""
        return self.cauchy_radius(n, len(self.deltas)) + self.geometric_tail_bound

    def to_dict(self) -> dict:
        return {"partial_sum": self.partial_sum,
                "geometric_tail_bound": self.geometric_tail_bound,
                "c_star": self.c_star, "verdict": self.verdict, "tol": self.tol}


def cauchy_certificate(trace: Trace, c_star: float | None = None,
                       tol: float | None = None,
                       burn_in: int = 10) -> ConvergenceCertificate:
    """Certify Cauchy behavior of a trace from a per-step contraction factor.

    When ``c_star`` is not supplied it is measured as the worst observed
    step ratio after ``burn_in`` steps. An explicit ``c_star >= 1`` is a
    parameter error; a measured one merely yields an inconclusive
    verdict. The certification tolerance defaults to the trace's step
    tolerance, falling back to 1e-8 when the trace ran without one.
    """
    if c_star is not None and not 0.0 <= c_star < 1.0:
        raise ValueError(f"c_star must lie in [0, 1), got {c_star}")
    if trace.space is None:
        raise ValueError("certificate needs a trace with its space attached")

    deltas = trace.deltas()
    partial_sum = float(sum(deltas))
    kb = trace.space.kappa * trace.space.b

    stop = trace.config_snapshot.get("stop", {})
    if tol is None:
        step_tol = float(stop.get("step_tol", 0.0) or 0.0)
        tol = step_tol if step_tol > 0.0 else 1e-8

    measured = c_star
    if measured is None:
        ratios = [deltas[i + 1] / deltas[i]
                  for i in range(burn_in, len(deltas) - 1) if deltas[i] > 0.0]
        if ratios:
            measured = max(ratios)
        elif deltas and deltas[-1] == 0.0:
            measured = 0.0  # stationary trace: nothing left to move
        else:
            measured = math.inf

    last = deltas[-1] if deltas else 0.0
    if measured < 1.0:
        tail = kb * last * measured / (1.0 - measured)
    else:
        tail = math.inf
    verdict = "certified" if tail < tol else "inconclusive"
    return ConvergenceCertificate(partial_sum=partial_sum,
                                  geometric_tail_bound=tail,
                                  c_star=float(measured), verdict=verdict,
                                  tol=tol, kappa_b=kb, deltas=deltas)


@dataclass
class BoundEval:
    lhs: float
    rhs: float
    satisfied: bool
    gap: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs,
                "satisfied": self.satisfied, "gap": self.gap}


@dataclass
class CheckResult:
    """Averaging-bound evaluation; ``perturbed`` is set when a shift was given."""

    mode: str
    averaging: BoundEval
    perturbed: Optional[BoundEval] = None


def averaging_check(space: ConeBpSpace, weights: Sequence[float], points,
                    p_ref, mode: str = "paper_literal",
                    perturbation=None) -> CheckResult:
    """Evaluate the convex-averaging bound, optionally with a shift term.

    Checks ``delta(sum_j w_j u_j, p) <= kappa*b * sum_j w'_j delta(u_j, p)``
    where ``w'`` is ``w`` in ``paper_literal`` mode and ``w**p`` in
    ``p_corrected`` mode (the combination itself always uses ``w``).
    With a perturbation ``e`` it also checks
    ``delta(sum_j w_j u_j + e, p) <= (kappa*b)**2 * sum_j w'_j delta(u_j, p)
    + kappa*b * delta(e, 0)``.
    """
    if mode not in ("paper_literal", "p_corrected"):
        raise ValueError(f"unknown averaging mode {mode!r}")
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError("weights must be a nonempty 1-d sequence")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    if abs(float(w.sum()) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    pts = [space.vector(u) for u in points]
    if len(pts) != len(w):
        raise ValueError("one weight per point required")
    ref = space.vector(p_ref)

    kb = space.kappa * space.b
    eff = w ** space.p if mode == "p_corrected" else w
    combo = sum(wi * u for wi, u in zip(w, pts))
    per_point = [space.delta(u, ref) for u in pts]
    weighted = float(sum(wi * d for wi, d in zip(eff, per_point)))

    lhs = space.delta(combo, ref)
    rhs = kb * weighted
    plain = BoundEval(lhs=lhs, rhs=rhs, satisfied=lhs - rhs <= BOUND_TOL,
                      gap=lhs - rhs)

    shifted = None
    if perturbation is not None:
        e = space.vector(perturbation)
        lhs2 = space.delta(combo + e, ref)
        rhs2 = kb ** 2 * weighted + kb * space.delta(e, space.zero())
        shifted = BoundEval(lhs=lhs2, rhs=rhs2, satisfied=lhs2 - rhs2 <= BOUND_TOL,
                            gap=lhs2 - rhs2)
    return CheckResult(mode=mode, averaging=plain, perturbed=shifted)

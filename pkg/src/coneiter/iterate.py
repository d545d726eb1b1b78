"""Iteration schemes, parameter schedules, and trace recording.

The central scheme drives three inertial extrapolations of the current
point and relaxes them against one operator evaluation:

    y_n = x_n + alpha_n (x_n - x_{n-1}) + eps_n
    z_n = x_n + beta_n  (x_n - x_{n-1}) + rho_n
    u_n = x_n + gamma_n (x_n - x_{n-1}) + omega_n
    x_{n+1} = (1 - lam_n) y_n + (lam_n/2) z_n + (lam_n/2) T(u_n) + theta_n

Comparison runners for the plain relaxation scheme, its one-inertia
variant, and the coincidence iteration of an operator pair live here as
well. Every runner is strictly sequential and deterministic: identical
configuration yields a bit-identical trace. Distinct runs are
independent and may execute in parallel.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .cone_space import ConeBpSpace, builtin_r2_matrix, builtin_scalar_p
from .errors import ConfigurationError, DivergenceError, InversionError
from .operators import CompatiblePairSpec, OperatorSpec

log = logging.getLogger(__name__)

__all__ = [
    "Schedule",
    "ErrorSequences",
    "StopRule",
    "IterationConfig",
    "StepRecord",
    "Trace",
    "run_multi_inertial",
    "run_km",
    "run_inertial_km",
    "run_coincidence",
    "trace_to_json",
    "trace_from_json",
    "trace_to_csv",
]

STEP_BLOWUP = 1e12  # any larger step distance aborts the run


@dataclass(frozen=True)
class Schedule:
    """Per-iteration parameter values with a declared band [lo, cap].

    ``source`` is a constant, a 1-indexed table, or a pure rule
    ``n -> value``. Runners validate ``lo <= value(n) <= cap`` at every
    step they take; querying a table beyond its last entry is a
    configuration error.
    """

    source: object
    cap: float
    lo: float = 0.0

    @classmethod
    def constant(cls, value: float, cap: float | None = None, lo: float = 0.0):
        value = float(value)
        return cls(source=value, cap=value if cap is None else float(cap), lo=lo)

    @classmethod
    def table(cls, values: Sequence[float], cap: float | None = None, lo: float = 0.0):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ConfigurationError("schedule table must be nonempty")
        return cls(source=vals, cap=max(vals) if cap is None else float(cap), lo=lo)

    @classmethod
    def rule(cls, fn: Callable[[int], float], cap: float, lo: float = 0.0):
        return cls(source=fn, cap=float(cap), lo=lo)

    @classmethod
    def relaxation(cls, value, delta: float = 0.1):
        """Relaxation schedule confined to the band [delta, 1 - delta]."""
        if not 0.0 < delta < 0.5:
            raise ConfigurationError(f"delta must lie in (0, 1/2), got {delta}")
        if callable(value):
            return cls(source=value, cap=1.0 - delta, lo=delta)
        if isinstance(value, (list, tuple)):
            return cls(source=tuple(float(v) for v in value), cap=1.0 - delta, lo=delta)
        return cls(source=float(value), cap=1.0 - delta, lo=delta)

    @classmethod
    def coerce(cls, value, cap: float | None = None, lo: float = 0.0) -> "Schedule":
        if isinstance(value, Schedule):
            return value
        if callable(value):
            raise ConfigurationError("wrap rule schedules via Schedule.rule(fn, cap)")
        if isinstance(value, (list, tuple)):
            return cls.table(value, cap=cap, lo=lo)
        return cls.constant(value, cap=cap, lo=lo)

    @property
    def kind(self) -> str:
        if callable(self.source):
            return "rule"
        if isinstance(self.source, tuple):
            return "table"
        return "constant"

    def at(self, n: int) -> float:
        """Value for step ``n >= 1``."""
        if n < 1:
            raise ConfigurationError(f"schedules are 1-indexed, got n={n}")
        if self.kind == "constant":
            return self.source
        if self.kind == "table":
            if n > len(self.source):
                raise ConfigurationError(
                    f"schedule table of length {len(self.source)} queried at n={n}")
            return self.source[n - 1]
        return float(self.source(n))

    def snapshot(self, max_n: int) -> dict:
        """JSON form; rules are materialized as tables up to ``max_n``."""
        if self.kind == "rule":
            values = [self.at(n) for n in range(1, max_n + 1)]
            return {"kind": "table", "values": values, "cap": self.cap, "lo": self.lo}
        if self.kind == "table":
            return {"kind": "table", "values": list(self.source),
                    "cap": self.cap, "lo": self.lo}
        return {"kind": "constant", "value": self.source, "cap": self.cap, "lo": self.lo}

    @classmethod
    def from_snapshot(cls, data: dict) -> "Schedule":
        if data["kind"] == "constant":
            return cls(source=float(data["value"]), cap=float(data["cap"]),
                       lo=float(data.get("lo", 0.0)))
        return cls(source=tuple(float(v) for v in data["values"]),
                   cap=float(data["cap"]), lo=float(data.get("lo", 0.0)))


def _coerce_error_seq(seq):
    if seq is None or callable(seq):
        return seq
    return tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in seq)


@dataclass(frozen=True)
class ErrorSequences:
    """The four perturbation sequences and their shared partial-sum budget.

    Each entry is ``None`` (identically zero), a 1-indexed table of
    vectors, or a pure rule ``n -> vector``. Runners accumulate the
    partial sums of ``||D(.)||`` per sequence and flag the trace when a
    sum exceeds ``budget``; exceeding the budget is a warning, never an
    error, since only finite prefixes are observable.
    """

    eps: object = None
    rho: object = None
    omega: object = None
    theta: object = None
    budget: float = math.inf

    def __post_init__(self):
        for name in ("eps", "rho", "omega", "theta"):
            object.__setattr__(self, name, _coerce_error_seq(getattr(self, name)))

    def value(self, name: str, n: int, dim: int) -> np.ndarray:
        seq = getattr(self, name)
        if seq is None:
            return np.zeros(dim)
        if callable(seq):
            return np.atleast_1d(np.asarray(seq(n), dtype=float))
        if n <= len(seq):
            return seq[n - 1]
        return np.zeros(dim)

    @property
    def all_zero(self) -> bool:
        return all(getattr(self, k) is None for k in ("eps", "rho", "omega", "theta"))

    def snapshot(self, max_n: int) -> dict:
        out = {"budget": None if math.isinf(self.budget) else self.budget}
        for name in ("eps", "rho", "omega", "theta"):
            seq = getattr(self, name)
            if seq is None:
                out[name] = None
            elif callable(seq):
                out[name] = [np.atleast_1d(np.asarray(seq(n), float)).tolist()
                             for n in range(1, max_n + 1)]
            else:
                out[name] = [v.tolist() for v in seq]
        return out

    @classmethod
    def from_snapshot(cls, data: dict) -> "ErrorSequences":
        budget = data.get("budget")
        return cls(eps=data.get("eps"), rho=data.get("rho"),
                   omega=data.get("omega"), theta=data.get("theta"),
                   budget=math.inf if budget is None else float(budget))


@dataclass(frozen=True)
class StopRule:
    """Stop when the residual or the step distance drops below a bound.

    Bounds are strict (``< tol``), so the defaults of zero never fire and
    the run continues to ``max_iter``.
    """

    residual_tol: float = 0.0
    step_tol: float = 0.0

    def __post_init__(self):
        if self.residual_tol < 0 or self.step_tol < 0:
            raise ConfigurationError("stopping tolerances must be nonnegative")


@dataclass(frozen=True)
class IterationConfig:
    """Full parameterization of one multi-inertial run."""

    alpha: Schedule
    beta: Schedule
    gamma: Schedule
    lam: Schedule
    x0: object
    x1: object
    max_iter: int = 100
    stop: StopRule = StopRule()
    errors: ErrorSequences = ErrorSequences()
    lean: bool = False  # drop per-step aux values (y, z, u, Tu)

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, Schedule.coerce(getattr(self, name)))
        if not isinstance(self.lam, Schedule):
            object.__setattr__(self, "lam", Schedule.relaxation(self.lam))

    def snapshot(self, space: ConeBpSpace) -> dict:
        return {
            "alpha": self.alpha.snapshot(self.max_iter),
            "beta": self.beta.snapshot(self.max_iter),
            "gamma": self.gamma.snapshot(self.max_iter),
            "lam": self.lam.snapshot(self.max_iter),
            "x0": space.vector(self.x0).tolist(),
            "x1": space.vector(self.x1).tolist(),
            "max_iter": self.max_iter,
            "stop": {"residual_tol": self.stop.residual_tol,
                     "step_tol": self.stop.step_tol},
            "errors": self.errors.snapshot(self.max_iter),
            "lean": self.lean,
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "IterationConfig":
        return cls(
            alpha=Schedule.from_snapshot(data["alpha"]),
            beta=Schedule.from_snapshot(data["beta"]),
            gamma=Schedule.from_snapshot(data["gamma"]),
            lam=Schedule.from_snapshot(data["lam"]),
            x0=data["x0"], x1=data["x1"],
            max_iter=int(data["max_iter"]),
            stop=StopRule(**data["stop"]),
            errors=ErrorSequences.from_snapshot(data["errors"]),
            lean=bool(data.get("lean", False)),
        )


@dataclass
class StepRecord:
    """One update: the produced iterate and its step diagnostics.

    ``zeta`` is filled in post hoc when step bounds are attached to the
    trace; ``aux`` holds the intermediate points of the scheme unless the
    run was recorded lean.
    """

    n: int
    x: np.ndarray
    step_delta: float
    residual: float
    aux: dict | None = None
    zeta: float | None = None


@dataclass
class Trace:
    """Immutable record of one run (aside from post-hoc bound columns)."""

    scheme: str
    space_spec: dict
    initial: list
    records: list
    termination: str  # "residual" | "step" | "max_iter"
    config_snapshot: dict
    space: ConeBpSpace | None = None        # runtime only
    config: IterationConfig | None = None   # runtime only, multi-inertial runs
    start_index: int = 0
    warnings: list = field(default_factory=list)

    def iterates(self) -> list:
        """All iterates, starting points included."""
        return list(self.initial) + [r.x for r in self.records]

    def deltas(self) -> list[float]:
        """Step distances between consecutive iterates, in order."""
        out = []
        if len(self.initial) == 2 and self.space is not None:
            out.append(self.space.delta(self.initial[1], self.initial[0]))
        out.extend(r.step_delta for r in self.records)
        return out

    def final(self) -> np.ndarray:
        return self.iterates()[-1]

    def attach_bounds(self, bounds) -> None:
        """Fill the per-record ``zeta`` column from a step-bound list."""
        by_n = {b.n: b for b in bounds}
        for rec in self.records:
            if rec.n in by_n:
                rec.zeta = by_n[rec.n].zeta_n


def _operator_name(T) -> str:
    return getattr(T, "name", getattr(T, "__name__", "custom"))


def _require_finite(space, x_next, step_delta, trace, n):
    if not np.all(np.isfinite(x_next)) or step_delta > STEP_BLOWUP:
        raise DivergenceError(
            f"iteration diverged at n={n}: step distance {step_delta:.3e}",
            trace=trace)


def _check_band(sched: Schedule, name: str, n: int) -> float:
    v = sched.at(n)
    if not sched.lo <= v <= sched.cap:
        raise ConfigurationError(
            f"{name} schedule value {v} outside [{sched.lo}, {sched.cap}] at n={n}")
    return v


def run_multi_inertial(space: ConeBpSpace, T, cfg: IterationConfig) -> Trace:
    """Run the three-extrapolation relaxation scheme and record its trace.

    Raises :class:`ConfigurationError` if a schedule leaves its declared
    band at some step (the message names the step), and
    :class:`DivergenceError`, with the partial trace attached, on a
    non-finite iterate or a step distance beyond ``1e12``.
    """
    x_prev = space.vector(cfg.x0)
    x_cur = space.vector(cfg.x1)
    trace = Trace(scheme="multi_inertial", space_spec=space.spec(),
                  initial=[x_prev, x_cur], records=[], termination="max_iter",
                  config_snapshot=cfg.snapshot(space), space=space, config=cfg)

    sums = {k: 0.0 for k in ("eps", "rho", "omega", "theta")}
    flagged = set()

    for n in range(1, cfg.max_iter + 1):
        a = _check_band(cfg.alpha, "alpha", n)
        b_ = _check_band(cfg.beta, "beta", n)
        g = _check_band(cfg.gamma, "gamma", n)
        lam = _check_band(cfg.lam, "lam", n)

        errs = {k: cfg.errors.value(k, n, space.dim)
                for k in ("eps", "rho", "omega", "theta")}
        for k, e in errs.items():
            if np.any(e):
                sums[k] += float(np.linalg.norm(space.cone_norm(e)))
                if sums[k] > cfg.errors.budget and k not in flagged:
                    flagged.add(k)
                    msg = (f"error sequence '{k}' exceeded its budget "
                           f"{cfg.errors.budget:g} at n={n}")
                    trace.warnings.append(msg)
                    log.warning(msg)

        d = x_cur - x_prev
        y = x_cur + a * d + errs["eps"]
        z = x_cur + b_ * d + errs["rho"]
        u = x_cur + g * d + errs["omega"]
        tu = np.asarray(T(u), dtype=float)
        x_next = (1.0 - lam) * y + (lam / 2.0) * z + (lam / 2.0) * tu + errs["theta"]

        step_delta = space.delta(x_next, x_cur)
        _require_finite(space, x_next, step_delta, trace, n)
        residual = space.delta(x_next, T(x_next))
        aux = None if cfg.lean else {"y": y, "z": z, "u": u, "Tu": tu}
        trace.records.append(StepRecord(n=n, x=x_next, step_delta=step_delta,
                                        residual=residual, aux=aux))

        x_prev, x_cur = x_cur, x_next
        if residual < cfg.stop.residual_tol:
            trace.termination = "residual"
            break
        if step_delta < cfg.stop.step_tol:
            trace.termination = "step"
            break
    return trace


def _plain_relaxation(sched: Schedule, n: int) -> float:
    v = sched.at(n)
    if not 0.0 < v <= 1.0:
        raise ConfigurationError(
            f"relaxation value {v} outside (0, 1] at n={n}")
    return v


def run_km(space: ConeBpSpace, T, lam, x0, max_iter: int = 100,
           stop: StopRule = StopRule()) -> Trace:
    """Plain relaxation scheme ``x_{n+1} = (1 - lam) x_n + lam T(x_n)``.

    ``lam = 1`` is allowed (pure Picard iteration); ``lam = 0`` is a
    degenerate no-op and rejected.
    """
    lam = Schedule.coerce(lam) if not isinstance(lam, Schedule) else lam
    x_cur = space.vector(x0)
    snapshot = {"lam": lam.snapshot(max_iter), "x0": x_cur.tolist(),
                "max_iter": max_iter,
                "stop": {"residual_tol": stop.residual_tol, "step_tol": stop.step_tol}}
    trace = Trace(scheme="km", space_spec=space.spec(), initial=[x_cur],
                  records=[], termination="max_iter", config_snapshot=snapshot,
                  space=space)

    for n in range(1, max_iter + 1):
        l = _plain_relaxation(lam, n)
        x_next = (1.0 - l) * x_cur + l * np.asarray(T(x_cur), dtype=float)
        step_delta = space.delta(x_next, x_cur)
        _require_finite(space, x_next, step_delta, trace, n)
        residual = space.delta(x_next, T(x_next))
        trace.records.append(StepRecord(n=n, x=x_next, step_delta=step_delta,
                                        residual=residual))
        x_cur = x_next
        if residual < stop.residual_tol:
            trace.termination = "residual"
            break
        if step_delta < stop.step_tol:
            trace.termination = "step"
            break
    return trace


def run_inertial_km(space: ConeBpSpace, T, lam, alpha, x0, x1,
                    max_iter: int = 100, stop: StopRule = StopRule()) -> Trace:
    """One-extrapolation inertial variant of the plain relaxation scheme.

    Extrapolates ``w_n = x_n + alpha_n (x_n - x_{n-1})`` and relaxes
    ``x_{n+1} = (1 - lam_n) w_n + lam_n T(w_n)``.
    """
    lam = Schedule.coerce(lam) if not isinstance(lam, Schedule) else lam
    alpha = Schedule.coerce(alpha)
    x_prev, x_cur = space.vector(x0), space.vector(x1)
    snapshot = {"lam": lam.snapshot(max_iter), "alpha": alpha.snapshot(max_iter),
                "x0": x_prev.tolist(), "x1": x_cur.tolist(), "max_iter": max_iter,
                "stop": {"residual_tol": stop.residual_tol, "step_tol": stop.step_tol}}
    trace = Trace(scheme="inertial_km", space_spec=space.spec(),
                  initial=[x_prev, x_cur], records=[], termination="max_iter",
                  config_snapshot=snapshot, space=space)

    for n in range(1, max_iter + 1):
        l = _plain_relaxation(lam, n)
        a = _check_band(alpha, "alpha", n)
        w = x_cur + a * (x_cur - x_prev)
        tw = np.asarray(T(w), dtype=float)
        x_next = (1.0 - l) * w + l * tw
        step_delta = space.delta(x_next, x_cur)
        _require_finite(space, x_next, step_delta, trace, n)
        residual = space.delta(x_next, T(x_next))
        trace.records.append(StepRecord(n=n, x=x_next, step_delta=step_delta,
                                        residual=residual, aux={"w": w, "Tw": tw}))
        x_prev, x_cur = x_cur, x_next
        if residual < stop.residual_tol:
            trace.termination = "residual"
            break
        if step_delta < stop.step_tol:
            trace.termination = "step"
            break
    return trace


def run_coincidence(pair: CompatiblePairSpec, x0, max_iter: int = 100,
                    stop: StopRule = StopRule()) -> Trace:
    """Iterate ``x_{n+1} = solve_S(T(x_n))`` toward a coincidence point.

    Records the image sequence ``y_n = T(x_n)`` and its successive
    distances; stops when that distance drops below ``stop.step_tol``.
    The run aborts with :class:`InversionError` when the right inverse
    drifts beyond 1e-6 on the round trip. If the pair asserts weak
    compatibility and the run converges, commutation is spot-checked at
    the limit and any failure is recorded as a trace warning.
    """
    space = pair.space
    T, S = pair.T, pair.S
    x_cur = space.vector(x0)
    snapshot = {"pair": pair.name,
                "consts": {"a": pair.a, "b_w": pair.b_w, "r": pair.r},
                "x0": x_cur.tolist(), "max_iter": max_iter,
                "stop": {"residual_tol": stop.residual_tol, "step_tol": stop.step_tol}}
    trace = Trace(scheme="coincidence", space_spec=space.spec(), initial=[x_cur],
                  records=[], termination="max_iter", config_snapshot=snapshot,
                  space=space)

    y_prev = None
    for n in range(1, max_iter + 1):
        y = T(x_cur)
        x_next = np.asarray(pair.solve_S(y), dtype=float)
        round_trip = space.delta(np.asarray(S(x_next), dtype=float), y)
        if round_trip > 1e-6:
            raise InversionError(
                f"solve_S round-trip error {round_trip:.3e} at n={n}")
        step_delta = space.delta(x_next, x_cur)
        _require_finite(space, x_next, step_delta, trace, n)
        residual = space.delta(np.asarray(S(x_next), dtype=float), T(x_next))
        y_delta = None if y_prev is None else space.delta(y, y_prev)
        aux = {"y": y}
        if y_delta is not None:
            aux["y_delta"] = np.atleast_1d(y_delta)
        trace.records.append(StepRecord(n=n, x=x_next, step_delta=step_delta,
                                        residual=residual, aux=aux))
        y_prev = y
        x_cur = x_next
        if residual < stop.residual_tol:
            trace.termination = "residual"
            break
        if y_delta is not None and y_delta < stop.step_tol:
            trace.termination = "step"
            break

    if pair.weakly_compatible and trace.records:
        z = trace.records[-1].x
        if trace.records[-1].residual < 1e-9:
            comm = space.delta(np.asarray(S(T(z)), dtype=float),
                               np.asarray(T(np.asarray(S(z), dtype=float)), dtype=float))
            if comm > 1e-6:
                trace.warnings.append(
                    f"weak compatibility spot-check failed at the limit: {comm:.3e}")
    return trace


# ---------------------------------------------------------------------------
# serialization

def _aux_to_json(aux):
    if aux is None:
        return None
    return {k: np.asarray(v).tolist() for k, v in aux.items()}


def trace_to_json(trace: Trace, indent=None) -> str:
    """Full JSON form of a trace, aux values and config snapshot included."""
    return json.dumps({
        "schema_version": "1",
        "scheme": trace.scheme,
        "space": trace.space_spec,
        "start_index": trace.start_index,
        "termination": trace.termination,
        "warnings": trace.warnings,
        "initial": [np.asarray(v).tolist() for v in trace.initial],
        "config": trace.config_snapshot,
        "records": [{
            "n": r.n,
            "x": np.asarray(r.x).tolist(),
            "step_delta": r.step_delta,
            "residual": r.residual,
            "zeta": r.zeta,
            "aux": _aux_to_json(r.aux),
        } for r in trace.records],
    }, indent=indent)


def space_from_spec(spec: dict) -> ConeBpSpace | None:
    if spec.get("kind") == "scalar_p":
        return builtin_scalar_p(spec["p"])
    if spec.get("kind") == "r2_matrix" and spec.get("A") is not None:
        return builtin_r2_matrix(spec["A"])
    return None


def trace_from_json(data, space: ConeBpSpace | None = None) -> Trace:
    """Rebuild a trace from its JSON form.

    Builtin spaces are reconstructed from the stored spec; custom spaces
    must be passed in. Multi-inertial configs are rebuilt from the
    snapshot so that step-bound checks work on reloaded traces.
    """
    if isinstance(data, str):
        data = json.loads(data)
    if space is None:
        space = space_from_spec(data["space"])
    records = []
    for r in data["records"]:
        aux = None
        if r.get("aux") is not None:
            aux = {k: np.asarray(v, dtype=float) for k, v in r["aux"].items()}
        records.append(StepRecord(n=int(r["n"]), x=np.asarray(r["x"], dtype=float),
                                  step_delta=float(r["step_delta"]),
                                  residual=float(r["residual"]),
                                  aux=aux, zeta=r.get("zeta")))
    config = None
    if data["scheme"] == "multi_inertial":
        config = IterationConfig.from_snapshot(data["config"])
    return Trace(scheme=data["scheme"], space_spec=data["space"],
                 initial=[np.asarray(v, dtype=float) for v in data["initial"]],
                 records=records, termination=data["termination"],
                 config_snapshot=data["config"], space=space, config=config,
                 start_index=int(data.get("start_index", 0)),
                 warnings=list(data.get("warnings", [])))


def _fmt(value, decimals) -> str:
    if value is None:
        return ""
    if decimals is None:
        return repr(float(value))
    return f"{float(value):.{decimals}f}"  # round-half-even per IEEE 754


def trace_to_csv(trace: Trace, decimals: int | None = 4, bounds=None) -> str:
    """CSV rendering: one row per step, LF line endings.

    Header is ``n,x_1..x_d,step_delta,residual,c_n,zeta_n,bound_ok,gap``;
    the bound columns stay empty unless a step-bound list is supplied.
    """
    dim = len(np.atleast_1d(trace.initial[0]))
    header = (["n"] + [f"x_{i + 1}" for i in range(dim)]
              + ["step_delta", "residual", "c_n", "zeta_n", "bound_ok", "gap"])
    by_n = {b.n: b for b in bounds} if bounds else {}
    lines = [",".join(header)]
    for r in trace.records:
        row = [str(r.n)]
        row += [_fmt(c, decimals) for c in np.atleast_1d(r.x)]
        row += [_fmt(r.step_delta, decimals), _fmt(r.residual, decimals)]
        b = by_n.get(r.n)
        if b is not None:
            row += [_fmt(b.c_n, decimals), _fmt(b.zeta_n, decimals),
                    "1" if b.satisfied else "0", _fmt(b.gap, decimals)]
        else:
            row += ["", _fmt(r.zeta, decimals) if r.zeta is not None else "", "", ""]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"

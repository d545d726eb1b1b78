"""Experiment configuration, execution, and report generation.

An experiment is one space, one operator (or operator pair), and one or
more scheme blocks to run and compare. The result bundles the traces, a
comparison table of scalarized distances to a reference point, step-bound
checks, certificates, validator reports, and free-text notes, and knows
how to write itself out as CSV, JSON, and SVG.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as _analysis
from .cone_space import ConeBpSpace, builtin_r2_matrix, builtin_scalar_p
from .errors import ConfigurationError, PreconditionError
from .iterate import (ErrorSequences, IterationConfig, Schedule, StopRule,
                      Trace, run_coincidence, run_inertial_km, run_km,
                      run_multi_inertial, trace_to_csv, trace_to_json)
from .operators import (CompatiblePairSpec, OperatorSpec, builtin_linear,
                        builtin_saturating, compat_pair_identity,
                        compat_pair_shared_linear, probe_compat)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ComparisonTable",
    "build_space",
    "build_operator",
    "build_pair",
    "run_experiment",
    "load_config",
]

REFERENCE_TOL = 5e-5  # four printed decimals, half a unit in the last place
SCHEMES = ("multi_inertial", "km", "inertial_km", "coincidence")


def build_space(spec: dict) -> ConeBpSpace:
    kind = spec.get("kind")
    if kind == "scalar_p":
        return builtin_scalar_p(float(spec.get("p", 1.0)))
    if kind == "r2_matrix":
        if "A" not in spec:
            raise ConfigurationError("r2_matrix space needs a 2x2 matrix under 'A'")
        return builtin_r2_matrix(spec["A"])
    raise ConfigurationError(f"unknown space kind {kind!r}")


def build_operator(spec: dict, space: ConeBpSpace) -> OperatorSpec:
    kind = spec.get("kind")
    if kind == "saturating":
        return builtin_saturating(space)
    if kind == "linear":
        if "q" not in spec:
            raise ConfigurationError("linear operator needs a factor under 'q'")
        return builtin_linear(float(spec["q"]), space)
    raise ConfigurationError(f"unknown operator kind {kind!r}")


def build_pair(spec: dict, space: ConeBpSpace) -> CompatiblePairSpec:
    kind = spec.get("kind")
    if kind == "identity_linear":
        T = builtin_linear(float(spec.get("q", 0.8)), space)
        return compat_pair_identity(T, a=float(spec.get("a", 1.0)),
                                    b_w=float(spec.get("b_w", 0.0)),
                                    r=spec.get("r"))
    if kind == "shared_linear":
        pair = compat_pair_shared_linear(float(spec.get("q", 0.8)), space)
        return pair
    raise ConfigurationError(f"unknown pair kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Parsed experiment description; see README for the JSON schema."""

    name: str
    space: dict
    schemes: list
    operator: dict | None = None
    pair: dict | None = None
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    reference: list | None = None
    reference_tables: dict = field(default_factory=dict)
    probes: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("experiment config must be a JSON object")
        version = data.get("schema_version", "1")
        if str(version) != "1":
            raise ConfigurationError(f"unsupported schema_version {version!r}")
        if "space" not in data:
            raise ConfigurationError("config needs a 'space' entry")
        schemes = data.get("schemes") or []
        if not schemes:
            raise ConfigurationError("config needs at least one scheme block")
        labels = []
        for block in schemes:
            kind = block.get("scheme")
            if kind not in SCHEMES:
                raise ConfigurationError(
                    f"unknown scheme {kind!r}; pick one of {SCHEMES}")
            label = block.get("label", kind)
            if label in labels:
                raise ConfigurationError(f"duplicate scheme label {label!r}")
            labels.append(label)
            needs_pair = kind == "coincidence"
            if needs_pair and "pair" not in data:
                raise ConfigurationError("coincidence blocks need a 'pair' entry")
            if not needs_pair and "operator" not in data:
                raise ConfigurationError(f"{kind} blocks need an 'operator' entry")
        cfg = cls(
            name=str(data.get("name", "experiment")),
            space=data["space"],
            schemes=schemes,
            operator=data.get("operator"),
            pair=data.get("pair"),
            analysis=data.get("analysis", {}),
            output=data.get("output", {}),
            reference=data.get("reference"),
            reference_tables=data.get("reference_tables", {}),
            probes=data.get("probes", []),
            notes=list(data.get("notes", [])),
            raw=data,
        )
        # fail early on unknown builtins
        space = build_space(cfg.space)
        if cfg.operator is not None:
            build_operator(cfg.operator, space)
        if cfg.pair is not None:
            build_pair(cfg.pair, space)
        return cfg

    @property
    def decimals(self) -> int:
        return int(self.output.get("decimals", 4))


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    cfg = ExperimentConfig.from_dict(data)
    if cfg.name == "experiment":
        cfg.name = Path(path).stem
    return cfg


@dataclass
class ComparisonTable:
    """Scalarized distance to a reference point, per scheme and iterate."""

    n_values: list
    columns: dict
    reference: list

    @classmethod
    def from_traces(cls, traces: dict, space: ConeBpSpace,
                    reference=None) -> "ComparisonTable":
        ref = space.zero() if reference is None else space.vector(reference)
        top = 0
        series = {}
        for label, trace in traces.items():
            values = [space.delta(x, ref) for x in trace.iterates()]
            series[label] = (trace.start_index, values)
            top = max(top, trace.start_index + len(values) - 1)
        ns = list(range(top + 1))
        columns = {}
        for label, (start, values) in series.items():
            col = [None] * len(ns)
            for i, v in enumerate(values):
                col[start + i] = v
            columns[label] = col
        return cls(n_values=ns, columns=columns, reference=ref.tolist())

    def column(self, label: str) -> list:
        return self.columns[label]

    def to_csv(self, decimals: int = 4) -> str:
        header = ["n"] + list(self.columns)
        lines = [",".join(header)]
        for i, n in enumerate(self.n_values):
            row = [str(n)]
            for label in self.columns:
                v = self.columns[label][i]
                row.append("" if v is None else f"{v:.{decimals}f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def format(self, decimals: int = 4, max_rows: int = 12) -> str:
        labels = list(self.columns)
        width = max(12, max(len(s) for s in labels) + 2)
        head = "  n " + "".join(f"{s:>{width}}" for s in labels)
        lines = [head]
        shown = self.n_values if len(self.n_values) <= max_rows else self.n_values[:max_rows]
        for i in shown:
            cells = []
            for label in labels:
                v = self.columns[label][i]
                cells.append("" if v is None else f"{v:.{decimals}f}")
            lines.append(f"{i:>3} " + "".join(f"{c:>{width}}" for c in cells))
        if len(self.n_values) > max_rows:
            lines.append(f"  ... ({len(self.n_values) - max_rows} more rows)")
        return "\n".join(lines)


def _run_block(block: dict, space: ConeBpSpace, operator, pair,
               force: bool):
    kind = block["scheme"]
    stop = StopRule(residual_tol=float(block.get("residual_tol", 0.0)),
                    step_tol=float(block.get("step_tol", 0.0)))
    max_iter = int(block.get("max_iter", 100))
    precondition = None
    if kind == "multi_inertial":
        errors = block.get("errors", {})
        cfg = IterationConfig(
            alpha=Schedule.coerce(block.get("alpha", 0.0)),
            beta=Schedule.coerce(block.get("beta", 0.0)),
            gamma=Schedule.coerce(block.get("gamma", 0.0)),
            lam=Schedule.relaxation(block.get("lambda", 0.5),
                                    delta=float(block.get("delta", 0.1))),
            x0=block["x0"], x1=block["x1"], max_iter=max_iter, stop=stop,
            errors=ErrorSequences(eps=errors.get("eps"), rho=errors.get("rho"),
                                  omega=errors.get("omega"),
                                  theta=errors.get("theta"),
                                  budget=float(errors.get("budget", math.inf))),
            lean=bool(block.get("lean", False)),
        )
        precondition = _analysis.theorem1_preconditions(space, cfg)
        if not precondition.passed and not force:
            names = ", ".join(f"{c.name} (value {c.value})"
                              for c in precondition.failing())
            raise PreconditionError(
                f"theorem preconditions failed for scheme "
                f"'{block.get('label', kind)}': {names}", report=precondition)
        trace = run_multi_inertial(space, operator, cfg)
    elif kind == "km":
        trace = run_km(space, operator, block["lambda"], block["x0"],
                       max_iter=max_iter, stop=stop)
    elif kind == "inertial_km":
        trace = run_inertial_km(space, operator, block["lambda"],
                                block.get("alpha", 0.0), block["x0"],
                                block["x1"], max_iter=max_iter, stop=stop)
    elif kind == "coincidence":
        trace = run_coincidence(pair, block["x0"], max_iter=max_iter, stop=stop)
    else:  # unreachable after config validation
        raise ConfigurationError(f"unknown scheme {kind!r}")
    if "start_index" in block:
        trace.start_index = int(block["start_index"])
    return trace, precondition


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    space: ConeBpSpace
    traces: dict
    comparison: ComparisonTable
    preconditions: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    validations: dict = field(default_factory=dict)
    probe_reports: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def summary(self) -> str:
        cfg = self.config
        lines = [f"experiment: {cfg.name}",
                 f"space: {self.space.name} (b={self.space.b:g}, "
                 f"p={self.space.p:g}, kappa={self.space.kappa:g})"]
        for label, trace in self.traces.items():
            lines.append(f"scheme {label}: {trace.scheme}, "
                         f"{len(trace.records)} steps, "
                         f"termination={trace.termination}")
            for w in trace.warnings:
                lines.append(f"  warning: {w}")
        lines.append("")
        lines.append(self.comparison.format(cfg.decimals))
        for label, report in self.preconditions.items():
            status = "pass" if report.passed else "FAIL"
            lines.append(f"preconditions [{label}]: {status}")
        for label, cert in self.certificates.items():
            lines.append(f"certificate [{label}]: {cert.verdict} "
                         f"(c*={cert.c_star:.4g}, "
                         f"tail={cert.geometric_tail_bound:.3e})")
        for rep in self.probe_reports:
            lines.append(f"probe {rep.condition}: "
                         f"{rep.violation_count} violations "
                         f"in {rep.samples} samples")
        if self.notes:
            lines.append("notes:")
            lines.extend(f"  - {n}" for n in self.notes)
        return "\n".join(lines) + "\n"

    def to_json(self, indent=2) -> str:
        payload = {
            "schema_version": "1",
            "name": self.config.name,
            "config": self.config.raw,
            "traces": {label: json.loads(trace_to_json(t))
                       for label, t in self.traces.items()},
            "comparison": {"n": self.comparison.n_values,
                           "reference": self.comparison.reference,
                           "columns": self.comparison.columns},
            "preconditions": {k: json.loads(v.to_json())
                              for k, v in self.preconditions.items()},
            "bounds": {label: {mode: [b.to_dict() for b in bs]
                               for mode, bs in modes.items()}
                       for label, modes in self.bounds.items()},
            "certificates": {k: c.to_dict() for k, c in self.certificates.items()},
            "validations": {k: json.loads(v.to_json())
                            for k, v in self.validations.items()},
            "probes": [json.loads(r.to_json()) for r in self.probe_reports],
            "notes": self.notes,
        }
        return json.dumps(payload, indent=indent)

    def write(self, out_dir, svg: bool | None = None) -> list:
        """Write CSV, JSON, and figure outputs; returns the paths written."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cfg = self.config
        decimals = cfg.decimals
        written = []
        modes = cfg.analysis.get("bound_modes", [])
        for label, trace in self.traces.items():
            bounds = self.bounds.get(label, {}).get(modes[0]) if modes else None
            path = out / f"{cfg.name}.{label}.csv"
            path.write_text(trace_to_csv(trace, decimals=decimals, bounds=bounds),
                            encoding="utf-8", newline="")
            written.append(path)
        path = out / f"{cfg.name}.comparison.csv"
        path.write_text(self.comparison.to_csv(decimals), encoding="utf-8",
                        newline="")
        written.append(path)
        if cfg.output.get("json", True):
            path = out / f"{cfg.name}.json"
            path.write_text(self.to_json(), encoding="utf-8", newline="")
            written.append(path)
        want_svg = cfg.output.get("svg", False) if svg is None else svg
        if want_svg:
            from .figures import render_comparison_svg
            path = out / f"{cfg.name}.svg"
            render_comparison_svg(self.comparison, path, title=cfg.name)
            written.append(path)
        return written


def _reference_notes(config: ExperimentConfig, table: ComparisonTable) -> list:
    notes = []
    for label, ref in config.reference_tables.items():
        if label not in table.columns:
            continue
        start = int(ref.get("start", 0))
        values = ref["values"]
        col = table.columns[label]
        diffs = []
        for i, expected in enumerate(values):
            n = start + i
            got = col[n] if n < len(col) else None
            if got is None:
                diffs.append((n, math.inf))
            else:
                diffs.append((n, abs(got - expected)))
        worst_n, worst = max(diffs, key=lambda t: t[1])
        bad = [n for n, d in diffs if d > REFERENCE_TOL]
        if bad:
            notes.append(
                f"scheme '{label}' deviates from its reference sequence at "
                f"n={bad} (max |diff| = {worst:.2e} at n={worst_n})")
        else:
            notes.append(
                f"scheme '{label}' matches its reference sequence to 4 d.p. "
                f"(max |diff| = {worst:.2e})")
    return notes


def run_experiment(config: ExperimentConfig, force: bool = False) -> ExperimentResult:
    """Execute every scheme block of ``config`` and assemble the result.

    Theorem preconditions gate multi-inertial blocks: a failing check
    raises :class:`PreconditionError` naming it unless ``force`` is set.
    Scheme blocks are independent; they are run in declaration order.
    """
    space = build_space(config.space)
    operator = build_operator(config.operator, space) if config.operator else None
    pair = build_pair(config.pair, space) if config.pair else None

    traces = {}
    preconditions = {}
    for block in config.schemes:
        label = block.get("label", block["scheme"])
        trace, precondition = _run_block(block, space, operator, pair, force)
        traces[label] = trace
        if precondition is not None:
            preconditions[label] = precondition

    table = ComparisonTable.from_traces(traces, space, config.reference)

    bounds = {}
    for mode in config.analysis.get("bound_modes", []):
        for label, trace in traces.items():
            if trace.scheme != "multi_inertial":
                continue
            bounds.setdefault(label, {})[mode] = _analysis.check_step_bound(trace, mode)
    for label, modes in bounds.items():
        first = next(iter(modes.values()))
        traces[label].attach_bounds(first)

    certificates = {}
    if config.analysis.get("certify", False):
        for label, trace in traces.items():
            if len(trace.deltas()) >= 2:
                certificates[label] = _analysis.cauchy_certificate(trace)

    validations = {}
    if operator is not None and operator.weak_consts is not None:
        for block in config.schemes:
            if block["scheme"] == "multi_inertial":
                label = block.get("label", "multi_inertial")
                sched = Schedule.relaxation(block.get("lambda", 0.5),
                                            delta=float(block.get("delta", 0.1)))
                validations[f"weak_q:{label}"] = _analysis.validate_weak_q(
                    operator.weak_consts, sched,
                    max_n=int(block.get("max_iter", 100)))

    probe_reports = []
    for spec in config.probes:
        probe_pair = build_pair(spec["pair"], space)
        probe_reports.append(probe_compat(probe_pair,
                                          samples=int(spec.get("samples", 1000)),
                                          seed=int(spec.get("seed", 0))))

    notes = list(config.notes)
    notes.extend(_reference_notes(config, table))
    for rep in probe_reports:
        if rep.violation_count:
            notes.append(f"probe '{rep.condition}' found {rep.violation_count} "
                         f"violations in {rep.samples} samples")

    return ExperimentResult(config=config, space=space, traces=traces,
                            comparison=table, preconditions=preconditions,
                            bounds=bounds, certificates=certificates,
                            validations=validations,
                            probe_reports=probe_reports, notes=notes)

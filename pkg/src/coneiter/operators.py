"""Self-maps, their contraction-class constants, and randomized probes.

A probe draws seeded samples and evaluates both sides of a class
inequality; anything exceeding the tolerance lands in the report as a
violation. Probes never raise on a failed inequality: surfacing
violations is their purpose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cone_space import ConeBpSpace, builtin_scalar_p

__all__ = [
    "OperatorSpec",
    "QuasiNonexpansiveWitness",
    "WeakContractionConsts",
    "CompatiblePairSpec",
    "builtin_saturating",
    "builtin_linear",
    "identity_map",
    "compat_pair_identity",
    "compat_pair_shared_linear",
    "probe_quasi_nonexpansive",
    "probe_weak_contraction",
    "probe_compat",
    "Violation",
    "ProbeReport",
]

PROBE_TOL = 1e-9
DEFAULT_RADIUS = 10.0  # sampling box half-width; covers the curvature of t**p


@dataclass(frozen=True)
class QuasiNonexpansiveWitness:
    """Known fixed points certifying the quasi-nonexpansive class."""

    fixed_points: tuple

    def __post_init__(self):
        if len(self.fixed_points) == 0:
            raise ValueError("witness needs at least one fixed point")


@dataclass(frozen=True)
class WeakContractionConsts:
    """Constants (a, b_w, c_w, s) of the four-term contraction inequality.

    The inequality reads, in scalarized form,
    ``a d(Tx,Ty) + b_w (d(x,Tx) + d(y,Ty)) + c_w d(y,Tx) <= s d(x,y)``.
    """

    a: float
    b_w: float
    c_w: float
    s: float

    def __post_init__(self):
        if min(self.a, self.b_w, self.c_w, self.s) < 0:
            raise ValueError("contraction constants must be nonnegative")
        if self.a + self.b_w <= 0:
            raise ValueError("need a + b_w > 0")
        if self.a + self.b_w + self.c_w <= 0:
            raise ValueError("need a + b_w + c_w > 0")


@dataclass(frozen=True)
class OperatorSpec:
    """A self-map together with its declared class data."""

    name: str
    map: Callable[[np.ndarray], np.ndarray]
    space: ConeBpSpace
    declared_class: str | None = None  # "quasi_nonexpansive" | "weak_contraction"
    witness: Optional[QuasiNonexpansiveWitness] = None
    weak_consts: Optional[WeakContractionConsts] = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.map(self.space.vector(x)), dtype=float)


@dataclass(frozen=True)
class CompatiblePairSpec:
    """A pair (T, S) with ``T`` ranging inside ``S``'s image.

    ``solve_S`` must be a right inverse of ``S`` on the range of ``T``:
    ``S(solve_S(y)) = y`` there. The constants (a, b_w, r) belong to the
    inequality ``a d(Tx,Ty) + b_w (d(Sx,Tx) + d(Sy,Ty)) <= r d(Sx,Sy)``.
    ``r < a + b_w`` is a theorem-level requirement checked by the
    validators, not here, so degenerate pairs can still be probed.
    ``weakly_compatible`` is a user assertion (S and T commute at
    coincidence points); the coincidence runner spot-checks it at any
    limit it finds.
    """

    T: OperatorSpec
    S: Callable[[np.ndarray], np.ndarray]
    solve_S: Callable[[np.ndarray], np.ndarray]
    a: float
    b_w: float
    r: float
    weakly_compatible: bool = False
    name: str = "pair"

    def __post_init__(self):
        if self.a < 0 or self.b_w < 0 or self.r < 0:
            raise ValueError("pair constants must be nonnegative")
        if self.a + self.b_w <= 0:
            raise ValueError("need a + b_w > 0")

    @property
    def space(self) -> ConeBpSpace:
        return self.T.space


def identity_map(x):
    return np.asarray(x, dtype=float)


def builtin_saturating(space: ConeBpSpace | None = None) -> OperatorSpec:
    """The scalar map ``T(x) = x / (1 + |x|)`` with fixed point 0.

    ``|T(x)| <= |x|`` everywhere, so the map is quasi-nonexpansive with
    witness {0}.
    """
    space = space if space is not None else builtin_scalar_p(1.0)
    if space.dim != 1:
        raise ValueError("the saturating map lives on scalar spaces")

    def T(x):
        return x / (1.0 + np.abs(x))

    return OperatorSpec(
        name="saturating", map=T, space=space,
        declared_class="quasi_nonexpansive",
        witness=QuasiNonexpansiveWitness((space.zero(),)),
    )


def builtin_linear(q: float, space: ConeBpSpace | None = None) -> OperatorSpec:
    """The scaling map ``T(x) = q x`` on any builtin space.

    For ``0 < q < 1`` it satisfies the weak contraction inequality with
    constants (a, b_w, c_w, s) = (1, 0, 0, q) and is quasi-nonexpansive
    with witness {0}; outside that range no class data is attached.
    """
    space = space if space is not None else builtin_scalar_p(1.0)
    q = float(q)

    def T(x):
        return q * x

    contractive = 0.0 < q < 1.0
    return OperatorSpec(
        name=f"linear:{q:g}", map=T, space=space,
        declared_class="weak_contraction" if contractive else None,
        witness=QuasiNonexpansiveWitness((space.zero(),)) if 0.0 < q <= 1.0 else None,
        weak_consts=WeakContractionConsts(1.0, 0.0, 0.0, q) if contractive else None,
    )


def compat_pair_identity(T: OperatorSpec, a: float = 1.0, b_w: float = 0.0,
                         r: float | None = None) -> CompatiblePairSpec:
    """Pair ``T`` with ``S = identity`` (its own right inverse).

    For ``T(x) = q x`` this satisfies the compatibility inequality with
    ``r = q``, which is the default when ``T`` carries weak-contraction
    constants.
    """
    if r is None:
        if T.weak_consts is None:
            raise ValueError("no default r available; pass one explicitly")
        r = T.weak_consts.s
    return CompatiblePairSpec(T=T, S=identity_map, solve_S=identity_map,
                              a=a, b_w=b_w, r=r, weakly_compatible=True,
                              name=f"identity+{T.name}")


def compat_pair_shared_linear(q: float, space: ConeBpSpace | None = None) -> CompatiblePairSpec:
    """The pair ``S = T = q x`` with constants (1, 0, q).

    ``solve_S`` divides by ``q``. With these constants the compatibility
    inequality fails for ``0 < q < 1`` whenever ``x != y`` (the right side
    picks up an extra factor ``q`` through ``S``); the probe reports
    this. Kept as a builtin because it is a useful negative example.
    """
    T = builtin_linear(q, space)
    if q == 0:
        raise ValueError("q must be nonzero for an invertible S")

    def solve(y):
        return np.asarray(y, dtype=float) / q

    return CompatiblePairSpec(T=T, S=T.map, solve_S=solve, a=1.0, b_w=0.0,
                              r=q, weakly_compatible=True, name=f"shared_{T.name}")


@dataclass
class Violation:
    """One sampled inequality failure: ``gap = lhs - rhs > tol``."""

    x: list | None
    y: list | None
    lhs: float
    rhs: float
    gap: float

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "lhs": self.lhs,
                "rhs": self.rhs, "gap": self.gap}


@dataclass
class ProbeReport:
    """Outcome of a randomized condition probe.

    Only the worst ten violations (largest gap) are retained; the full
    count is in ``violation_count``. Deterministic for fixed
    ``(seed, samples)``.
    """

    condition: str
    samples: int
    violation_count: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def add(self, v: Violation):
        self.violation_count += 1
        self.violations.append(v)
        self.violations.sort(key=lambda e: e.gap, reverse=True)
        del self.violations[10:]

    def to_json(self, indent=None) -> str:
        return json.dumps({
            "schema_version": "1",
            "condition": self.condition,
            "samples": self.samples,
            "violation_count": self.violation_count,
            "violations": [v.to_dict() for v in self.violations],
        }, indent=indent)


def _samples(rng, n, dim, radius):
    return rng.uniform(-radius, radius, size=(n, dim))


def _check_domain(report, space, points):
    if space.domain_predicate is None:
        return
    for pt in points:
        if not space.domain_predicate(pt):
            report.add(Violation(x=pt.tolist(), y=None, lhs=1.0, rhs=0.0, gap=1.0))


def probe_quasi_nonexpansive(T: OperatorSpec,
                             witness: QuasiNonexpansiveWitness | None = None,
                             samples: int = 10_000, seed: int = 0,
                             radius: float = DEFAULT_RADIUS) -> ProbeReport:
    """Check ``d(Tx, p) <= d(x, p)`` for every witnessed fixed point ``p``.

    Witness points that fail ``d(Tp, p) <= tol`` are themselves reported
    as violations (with ``y`` set to the offending point).
    """
    witness = witness if witness is not None else T.witness
    if witness is None:
        raise ValueError("no witness supplied and none attached to the operator")
    space = T.space
    report = ProbeReport(condition="quasi_nonexpansive", samples=samples)

    for p in witness.fixed_points:
        p = space.vector(p)
        fp_res = space.delta(T(p), p)
        if fp_res > PROBE_TOL:
            report.add(Violation(x=p.tolist(), y=p.tolist(),
                                 lhs=fp_res, rhs=0.0, gap=fp_res))

    rng = np.random.default_rng(seed)
    xs = _samples(rng, samples, space.dim, radius)
    for x in xs:
        tx = T(x)
        _check_domain(report, space, [tx])
        for p in witness.fixed_points:
            lhs = space.delta(tx, p)
            rhs = space.delta(x, p)
            if lhs > rhs + PROBE_TOL:
                report.add(Violation(x=x.tolist(), y=space.vector(p).tolist(),
                                     lhs=lhs, rhs=rhs, gap=lhs - rhs))
    return report


def probe_weak_contraction(T: OperatorSpec,
                           consts: WeakContractionConsts | None = None,
                           samples: int = 10_000, seed: int = 0,
                           radius: float = DEFAULT_RADIUS) -> ProbeReport:
    """Check the scalarized weak-contraction inequality on sampled pairs."""
    k = consts if consts is not None else T.weak_consts
    if k is None:
        raise ValueError("no constants supplied and none attached to the operator")
    space = T.space
    report = ProbeReport(condition="weak_contraction", samples=samples)

    rng = np.random.default_rng(seed)
    xs = _samples(rng, samples, space.dim, radius)
    ys = _samples(rng, samples, space.dim, radius)
    for x, y in zip(xs, ys):
        tx, ty = T(x), T(y)
        _check_domain(report, space, [tx, ty])
        lhs = (k.a * space.delta(tx, ty)
               + k.b_w * (space.delta(x, tx) + space.delta(y, ty))
               + k.c_w * space.delta(y, tx))
        rhs = k.s * space.delta(x, y)
        if lhs > rhs + PROBE_TOL:
            report.add(Violation(x=x.tolist(), y=y.tolist(),
                                 lhs=lhs, rhs=rhs, gap=lhs - rhs))
    return report


def probe_compat(pair: CompatiblePairSpec, samples: int = 10_000, seed: int = 0,
                 radius: float = DEFAULT_RADIUS) -> ProbeReport:
    """Check the compatibility inequality and the supplied right inverse.

    Right-inverse failures ``S(solve_S(Tx)) != Tx`` are reported with
    ``lhs`` equal to the round-trip error.
    """
    space = pair.space
    T, S = pair.T, pair.S
    report = ProbeReport(condition="compatibility", samples=samples)

    rng = np.random.default_rng(seed)
    xs = _samples(rng, samples, space.dim, radius)
    ys = _samples(rng, samples, space.dim, radius)
    for x, y in zip(xs, ys):
        tx, ty = T(x), T(y)
        sx = np.asarray(S(x), dtype=float)
        sy = np.asarray(S(y), dtype=float)
        lhs = (pair.a * space.delta(tx, ty)
               + pair.b_w * (space.delta(sx, tx) + space.delta(sy, ty)))
        rhs = pair.r * space.delta(sx, sy)
        if lhs > rhs + PROBE_TOL:
            report.add(Violation(x=x.tolist(), y=y.tolist(),
                                 lhs=lhs, rhs=rhs, gap=lhs - rhs))
        # right-inverse round trip on a point of T's range
        back = np.asarray(S(pair.solve_S(tx)), dtype=float)
        err = space.delta(back, tx)
        if err > PROBE_TOL:
            report.add(Violation(x=x.tolist(), y=tx.tolist(),
                                 lhs=err, rhs=PROBE_TOL, gap=err - PROBE_TOL))
    return report

"""Cone-normed vector spaces.

A space carries a cone norm ``D`` mapping vectors into the nonnegative
orthant R_+^k, together with the relaxed triangle constant ``b``, the
homogeneity exponent ``p`` (``D(t*x) = t**p * D(x)`` for ``t >= 0``), and
the normality constant ``kappa`` of the cone. All convergence
measurements go through the scalarized distance
``delta(x, y) = ||D(x - y)||_2``.

Cones here are always finite-dimensional orthants with the Euclidean
ambient norm, which is monotone on the orthant, so ``kappa = 1`` for the
builtin spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ConeValue",
    "ConeBpSpace",
    "scalarize",
    "builtin_scalar_p",
    "builtin_r2_matrix",
    "check_axioms",
    "AxiomCheck",
    "AxiomReport",
]


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 1-d float array, optionally checking its length."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class ConeValue:
    """Element of the cone R_+^k with the Euclidean ambient norm."""

    components: tuple[float, ...]

    def __post_init__(self):
        if any(c < 0.0 for c in self.components):
            raise ValueError(f"cone value has negative components: {self.components}")

    @property
    def norm(self) -> float:
        """Ambient (Euclidean) norm, used for scalarization."""
        return float(np.linalg.norm(self.components))

    def leq(self, other: "ConeValue") -> bool:
        """Componentwise partial order induced by the cone."""
        if len(self.components) != len(other.components):
            raise ValueError("cone values of different dimension are not comparable")
        return all(a <= b for a, b in zip(self.components, other.components))


@dataclass(frozen=True)
class ConeBpSpace:
    """A vector space with a cone norm and its structural constants.

    ``cone_norm`` must be vectorized over the leading axes: it maps arrays
    of shape ``(..., dim)`` to nonnegative arrays of shape
    ``(..., cone_dim)``. ``domain_predicate``, when present, is a
    membership test for the closed convex subset the iterations live in;
    ``None`` means the whole space.

    Instances are immutable; every operation on them is a pure function,
    so spaces can be shared freely across threads or processes.
    """

    name: str
    dim: int
    cone_dim: int
    cone_norm: Callable[[np.ndarray], np.ndarray]
    b: float = 1.0
    p: float = 1.0
    kappa: float = 1.0
    domain_predicate: Optional[Callable[[np.ndarray], bool]] = None

    def vector(self, x) -> np.ndarray:
        return as_vector(x, self.dim)

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim)

    def D(self, x) -> ConeValue:
        """Cone norm of ``x`` as a validated :class:`ConeValue`."""
        raw = np.asarray(self.cone_norm(self.vector(x)), dtype=float)
        return ConeValue(tuple(float(c) for c in raw))

    def delta(self, x, y) -> float:
        """Scalarized distance ``||D(x - y)||``."""
        diff = self.vector(x) - self.vector(y)
        return float(np.linalg.norm(self.cone_norm(diff)))

    def spec(self) -> dict:
        """Serializable description; builtins round-trip through JSON."""
        if self.name.startswith("scalar_p"):
            return {"kind": "scalar_p", "p": self.p}
        if self.name.startswith("r2_matrix"):
            return {"kind": "r2_matrix", "A": getattr(self, "_matrix", None)}
        return {"kind": "custom", "name": self.name, "b": self.b, "p": self.p,
                "kappa": self.kappa, "dim": self.dim}


def scalarize(space: ConeBpSpace, x, y) -> float:
    """Distance ``||D(x - y)||`` between two elements of ``space``.

    Symmetric, translation invariant, and zero exactly at ``x == y``.
    Raises ``ValueError`` if the arguments do not match the space
    dimension.
    """
    return space.delta(x, y)


def builtin_scalar_p(p: float) -> ConeBpSpace:
    """The real line with cone norm ``|x|**p`` for ``p`` in (0, 1].

    Subadditivity of ``t -> t**p`` on ``t >= 0`` gives ``b = 1``; the
    one-dimensional orthant with the absolute value is monotone, so
    ``kappa = 1``.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"homogeneity exponent must lie in (0, 1], got {p}")

    def norm(x: np.ndarray) -> np.ndarray:
        return np.abs(x) ** p

    return ConeBpSpace(name=f"scalar_p:{p:g}", dim=1, cone_dim=1,
                       cone_norm=norm, b=1.0, p=p, kappa=1.0)


def builtin_r2_matrix(A) -> ConeBpSpace:
    """R^2 with the two-component cone norm ``(||x||_2, ||A x||_2)``.

    Both components are genuine seminorms, so ``b = 1`` and ``p = 1``;
    the Euclidean norm on R_+^2 is monotone, giving ``kappa = 1``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")

    def norm(x: np.ndarray) -> np.ndarray:
        lead = np.linalg.norm(x, axis=-1)
        image = np.linalg.norm(x @ A.T, axis=-1)
        return np.stack([lead, image], axis=-1)

    space = ConeBpSpace(name="r2_matrix", dim=2, cone_dim=2,
                        cone_norm=norm, b=1.0, p=1.0, kappa=1.0)
    object.__setattr__(space, "_matrix", A.tolist())
    return space


@dataclass
class AxiomCheck:
    """Result of sampling one cone-norm axiom."""

    axiom: str                 # "i" | "ii" | "iii" | "iv"
    samples: int
    failures: int
    worst: dict | None = None  # {"inputs": ..., "violation": float}

    def to_dict(self) -> dict:
        return {"axiom": self.axiom, "samples": self.samples,
                "failures": self.failures, "worst": self.worst}


@dataclass
class AxiomReport:
    """Per-axiom sampling results for one space."""

    space: str
    sample_count: int
    seed: int
    checks: list[AxiomCheck]

    @property
    def passed(self) -> bool:
        return all(c.failures == 0 for c in self.checks)

    def to_json(self, indent=None) -> str:
        return json.dumps({
            "schema_version": "1",
            "space": self.space,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "axioms": [c.to_dict() for c in self.checks],
        }, indent=indent)


def _worst_entry(mask: np.ndarray, violation: np.ndarray, inputs: dict) -> dict | None:
    if not mask.any():
        return None
    idx = int(np.argmax(np.where(mask, violation, -np.inf)))
    picked = {k: (np.asarray(v)[idx].tolist()) for k, v in inputs.items()}
    return {"inputs": picked, "violation": float(violation[idx])}


def check_axioms(space: ConeBpSpace, sample_count: int, seed: int,
                 radius: float = 10.0) -> AxiomReport:
    """Sample-test the four cone-norm axioms on ``space``.

    Draws ``sample_count`` vector pairs and nonnegative scalars from a
    seeded generator (componentwise uniform on ``[-radius, radius]``) and
    checks, with absolute tolerance 1e-9 scaled by magnitude:

    * (i)   ``D(x) = 0`` iff ``x = 0`` (the zero vector is always included;
            a cone norm straying outside the cone is also reported here),
    * (ii)  ``D(x) = D(-x)``,
    * (iii) ``D(x + y) <= b (D(x) + D(y))`` componentwise,
    * (iv)  ``D(t x) = t**p D(x)`` for ``t >= 0``.

    Violations are report content, never exceptions. The sample streams
    are drawn from independently spawned child generators, one per axiom,
    so the check can be sharded deterministically.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    n = int(sample_count)
    tol = 1e-9
    children = np.random.SeedSequence(seed).spawn(4)
    rngs = [np.random.default_rng(s) for s in children]
    checks = []

    # axiom (i): definiteness, plus cone membership of the norm values
    x = rngs[0].uniform(-radius, radius, size=(n, space.dim))
    x = np.vstack([np.zeros((1, space.dim)), x])
    dx = np.asarray(space.cone_norm(x), dtype=float)
    ndx = np.linalg.norm(dx, axis=-1)
    nx = np.linalg.norm(x, axis=-1)
    is_zero = nx <= 1e-12
    neg = np.min(dx, axis=-1) < -tol
    bad_zero = is_zero & (ndx > tol)
    bad_nonzero = ~is_zero & (ndx <= tol)
    mask = bad_zero | bad_nonzero | neg
    violation = np.where(bad_zero, ndx, 0.0)
    violation = np.maximum(violation, np.where(neg, -np.min(dx, axis=-1), 0.0))
    violation = np.maximum(violation, np.where(bad_nonzero, tol - ndx, 0.0))
    checks.append(AxiomCheck("i", x.shape[0], int(mask.sum()),
                             _worst_entry(mask, violation, {"x": x})))

    # axiom (ii): symmetry
    x = rngs[1].uniform(-radius, radius, size=(n, space.dim))
    dx = np.asarray(space.cone_norm(x), dtype=float)
    dmx = np.asarray(space.cone_norm(-x), dtype=float)
    scale = 1.0 + np.linalg.norm(dx, axis=-1)
    err = np.linalg.norm(dx - dmx, axis=-1)
    mask = err > tol * scale
    checks.append(AxiomCheck("ii", n, int(mask.sum()),
                             _worst_entry(mask, err, {"x": x})))

    # axiom (iii): relaxed triangle inequality, componentwise in the cone
    x = rngs[2].uniform(-radius, radius, size=(n, space.dim))
    y = rngs[2].uniform(-radius, radius, size=(n, space.dim))
    dx = np.asarray(space.cone_norm(x), dtype=float)
    dy = np.asarray(space.cone_norm(y), dtype=float)
    dxy = np.asarray(space.cone_norm(x + y), dtype=float)
    excess = np.max(dxy - space.b * (dx + dy), axis=-1)
    scale = 1.0 + np.linalg.norm(dx, axis=-1) + np.linalg.norm(dy, axis=-1)
    mask = excess > tol * scale
    checks.append(AxiomCheck("iii", n, int(mask.sum()),
                             _worst_entry(mask, excess, {"x": x, "y": y})))

    # axiom (iv): p-homogeneity under nonnegative scaling
    x = rngs[3].uniform(-radius, radius, size=(n, space.dim))
    tau = rngs[3].uniform(0.0, radius, size=(n, 1))
    dx = np.asarray(space.cone_norm(x), dtype=float)
    dtx = np.asarray(space.cone_norm(tau * x), dtype=float)
    err = np.linalg.norm(dtx - (tau ** space.p) * dx, axis=-1)
    scale = 1.0 + np.linalg.norm(dx, axis=-1)
    mask = err > tol * scale
    checks.append(AxiomCheck("iv", n, int(mask.sum()),
                             _worst_entry(mask, err, {"x": x, "tau": tau[:, 0]})))

    return AxiomReport(space=space.name, sample_count=n, seed=seed, checks=checks)

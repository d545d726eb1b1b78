"""Built-in experiments regenerating the reference tables and figures.

Each entry reproduces one published worked example of the scheme family.
The reference sequences are stored verbatim so every run can report,
value by value, where the regenerated trace agrees with the source and
where it does not; see the notes emitted with each result. Known
quirks handled here:

* ``ex1``: the reference head (n <= 6) is regenerated exactly; the
  reference tail (n = 7..10) is not reproducible by the stated recursion
  from the stated parameters (it deviates by about 2e-4, far above
  double-precision effects), so the run reports the deviation instead of
  hiding it.
* ``ex2``: the reference sequence equals the pure map
  ``x_{n+1} = 0.8 x_n`` applied from ``x_1``, not the full scheme; both
  runs are produced and the report says which one matches.
* ``ex3``: the shared-map pairing ``S = T`` fails its own compatibility
  constants, so the working identity pairing is run and the shared-map
  variant is probed, with violations in the report.
* ``ex4``: the stated relaxation for the plain scheme is 0.6 but the
  reference row matches 0.5; both runs are included.
"""

from __future__ import annotations

from .harness import ExperimentConfig

__all__ = ["EXPERIMENTS", "REFERENCE_TABLES", "experiment"]

# Reference sequences as printed in the source tables/figures (4 d.p.).
REFERENCE_TABLES = {
    "ex1": [1.0000, 0.5000, 0.3657, 0.3131, 0.2815, 0.2574, 0.2373,
            0.2202, 0.2053, 0.1920, 0.1800],
    "ex2": [1.0000, 0.5000, 0.4000, 0.3200, 0.2560, 0.2048, 0.1638,
            0.1311, 0.1049, 0.0839, 0.0671],
    "ex4_km": [1.0000, 0.7500, 0.5893, 0.4800, 0.4022, 0.3445, 0.3004],
    "ex4_two_step": [1.0000, 0.5000, 0.3314, 0.2567, 0.2135, 0.1840, 0.1619],
    "ex4_multi": [1.0000, 0.5000, 0.3657, 0.3131, 0.2815, 0.2574, 0.2373],
}


def _ex1() -> dict:
    return {
        "schema_version": "1",
        "name": "ex1",
        "space": {"kind": "scalar_p", "p": 1.0},
        "operator": {"kind": "saturating"},
        "schemes": [{
            "scheme": "multi_inertial", "label": "multi_inertial",
            "alpha": 0.2, "beta": 0.2, "gamma": 0.2,
            "lambda": 0.6, "delta": 0.1,
            "x0": 1.0, "x1": 0.5, "max_iter": 9,
        }],
        "analysis": {"bound_modes": ["paper_literal", "residual_corrected"],
                     "certify": False},
        "output": {"csv": True, "json": True, "svg": True, "decimals": 4},
        "reference_tables": {
            "multi_inertial": {"start": 0, "values": REFERENCE_TABLES["ex1"]},
        },
    }


def _ex2() -> dict:
    return {
        "schema_version": "1",
        "name": "ex2",
        "space": {"kind": "scalar_p", "p": 1.0},
        "operator": {"kind": "linear", "q": 0.8},
        "schemes": [
            {"scheme": "multi_inertial", "label": "multi_inertial",
             "alpha": 0.2, "beta": 0.2, "gamma": 0.2,
             "lambda": 0.9, "delta": 0.1,
             "x0": 1.0, "x1": 0.5, "max_iter": 200},
            {"scheme": "km", "label": "pure_map",
             "lambda": 1.0, "x0": 0.5, "max_iter": 9, "start_index": 1},
        ],
        "analysis": {"bound_modes": ["paper_literal", "residual_corrected"],
                     "certify": True},
        "output": {"csv": True, "json": True, "svg": True, "decimals": 4},
        "reference_tables": {
            "pure_map": {"start": 1, "values": REFERENCE_TABLES["ex2"][1:]},
            "multi_inertial": {"start": 0, "values": REFERENCE_TABLES["ex2"]},
        },
        "notes": [
            "the reference sequence equals the pure map x_{n+1} = 0.8 x_n "
            "applied from x_1 = 0.5; the full scheme yields x_2 = 0.3640",
        ],
    }


def _ex3() -> dict:
    return {
        "schema_version": "1",
        "name": "ex3",
        "space": {"kind": "r2_matrix", "A": [[1.0, 0.0], [0.0, 1.0]]},
        "pair": {"kind": "identity_linear", "q": 0.8},
        "schemes": [{
            "scheme": "coincidence", "label": "coincidence",
            "x0": [1.0, 1.0], "max_iter": 200,
        }],
        "analysis": {"certify": True},
        "output": {"csv": True, "json": True, "svg": False, "decimals": 4},
        "probes": [{"pair": {"kind": "shared_linear", "q": 0.8},
                    "samples": 1000, "seed": 7}],
        "notes": [
            "the constants (a, b_w, r) = (1, 0, 0.8) hold for the identity "
            "pairing S = id, T = 0.8x; the shared pairing S = T = 0.8x "
            "violates them (the right side gains an extra factor 0.8 "
            "through S), as the probe report shows",
        ],
    }


def _ex4() -> dict:
    return {
        "schema_version": "1",
        "name": "ex4",
        "space": {"kind": "scalar_p", "p": 1.0},
        "operator": {"kind": "saturating"},
        "schemes": [
            {"scheme": "km", "label": "km_lam05",
             "lambda": 0.5, "x0": 1.0, "max_iter": 6},
            {"scheme": "km", "label": "km_lam06",
             "lambda": 0.6, "x0": 1.0, "max_iter": 6},
            {"scheme": "inertial_km", "label": "inertial_km",
             "lambda": 0.6, "alpha": 0.2, "x0": 1.0, "x1": 0.5, "max_iter": 5},
            {"scheme": "multi_inertial", "label": "multi_inertial",
             "alpha": 0.2, "beta": 0.2, "gamma": 0.2,
             "lambda": 0.6, "delta": 0.1,
             "x0": 1.0, "x1": 0.5, "max_iter": 5},
        ],
        "analysis": {"bound_modes": ["paper_literal", "residual_corrected"],
                     "certify": False},
        "output": {"csv": True, "json": True, "svg": True, "decimals": 4},
        "reference_tables": {
            "km_lam05": {"start": 0, "values": REFERENCE_TABLES["ex4_km"]},
            "inertial_km": {"start": 0, "values": REFERENCE_TABLES["ex4_two_step"]},
            "multi_inertial": {"start": 0, "values": REFERENCE_TABLES["ex4_multi"]},
        },
        "notes": [
            "relaxation discrepancy: the comparison text states lambda = 0.6 "
            "for the plain scheme, but the reference row matches lambda = 0.5; "
            "km_lam05 reproduces the reference row and km_lam06 the stated text",
        ],
    }


EXPERIMENTS = {"ex1": _ex1, "ex2": _ex2, "ex3": _ex3, "ex4": _ex4}


def experiment(exp_id: str) -> ExperimentConfig:
    """Config for one of the built-in experiments (ex1..ex4)."""
    if exp_id not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {exp_id!r}; "
                       f"known: {sorted(EXPERIMENTS)}")
    return ExperimentConfig.from_dict(EXPERIMENTS[exp_id]())

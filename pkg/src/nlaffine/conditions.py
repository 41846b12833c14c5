"""Hypothesis checkers gating the solver modes: coefficient growth bounds,
the comparison-principle clauses (boundedness, tightness, continuity), and
the uniqueness gate for hat-mode solves."""

from __future__ import annotations

import datetime
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .generator import sqrt_diffusion_lipschitz
from .params import (
    ParameterSet,
    check_coefficient_bounds,
    check_linear_bound,
    hat_triplet_at,
    linear_part_norm,
    min_eigenvalue,
    spectral_norm,
)

SLOPE_CAP = 1e6  # sampled sqrt-Lipschitz slopes above this count as blow-up


@dataclass
class ConditionReport:
    name: str
    status: str  # pass | fail | indeterminate
    clauses: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    timestamp: str = ""
    config_hash: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()

    def to_json(self) -> str:
        def clean(obj):
            if isinstance(obj, dict):
                return {str(k): clean(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
            if isinstance(obj, (list, tuple)):
                return [clean(v) for v in obj]
            if isinstance(obj, np.ndarray):
                return [clean(v) for v in obj.tolist()]
            if isinstance(obj, (np.floating, np.integer)):
                return obj.item()
            return obj

        return json.dumps(clean(asdict(self)), indent=2, sort_keys=True)


def _dyadic_down(start: float, levels: int) -> list[float]:
    return [start * 2.0**-k for k in range(levels)]


def check_comparison_conditions(theta_set: ParameterSet, sample_box,
                                n_samples: int = 200,
                                seed: int = 0) -> ConditionReport:
    """Boundedness, tightness and continuity of the hat-mode coefficient
    family, which together back the comparison/uniqueness argument.

    (i) records sup over samples and vertices of |b| + |sqrt a|, plus the
    jump-measure integrability value; (ii) checks the small-size and
    large-size jump tails vanish exactly beyond the extreme atoms; (iii)
    bounds the drift Lipschitz constant exactly (operator norm of the linear
    part) and samples the sqrt-diffusion slope, flagging blow-up above the
    cap.  A sampled continuity pass is labelled indeterminate-pass: samples
    cannot certify Lipschitzness, only refute it.
    """
    lo = np.atleast_1d(np.asarray(sample_box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(sample_box[1], dtype=float))
    d = theta_set.dim
    rng = np.random.default_rng(seed)
    xs = lo + rng.uniform(size=(n_samples, d)) * (hi - lo)
    vertices = theta_set.vertices()

    clauses: dict = {}
    witnesses: list = []

    # (i) boundedness
    local_sup = 0.0
    for theta in vertices:
        for x in xs:
            t = hat_triplet_at(theta, x)
            if min_eigenvalue(t.a) < -1e-10:
                raise ValueError(f"diffusion not PSD at sampled state {x}")
            ev = np.clip(np.linalg.eigvalsh(np.atleast_2d(t.a)), 0.0, None)
            local_sup = max(
                local_sup, float(np.linalg.norm(t.b)) + float(np.sqrt(ev[-1]))
            )
    jump_sup = 0.0
    for theta in vertices:
        k = theta.nu[0]
        if k.n_atoms:
            n = np.linalg.norm(k.atoms, axis=1)
            jump_sup = max(
                jump_sup,
                float(np.sum(k.weights * np.where(n <= 1.0, n * n, 1.0))),
            )
    clauses["boundedness"] = {
        "status": "pass" if np.isfinite(local_sup) and np.isfinite(jump_sup) else "fail",
        "local_sup": local_sup,
        "jump_integral_sup": jump_sup,
    }

    # (ii) tightness: exact tails for atomic measures
    norms = [
        float(np.linalg.norm(z))
        for theta in vertices
        for z in theta.nu[0].atoms
    ]
    if norms:
        small_grid = _dyadic_down(min(norms), 6)
        large_grid = [max(norms) * 2.0**k for k in range(6)]
    else:
        small_grid = _dyadic_down(1.0, 6)
        large_grid = [2.0**k for k in range(6)]
    small_tail = {}
    for delta in small_grid:
        val = 0.0
        for theta in vertices:
            k = theta.nu[0]
            if k.n_atoms:
                n = np.linalg.norm(k.atoms, axis=1)
                val = max(val, float(np.sum(k.weights * n * n * (n <= delta))))
        small_tail[delta] = val
    large_tail = {}
    for R in large_grid:
        val = 0.0
        for theta in vertices:
            k = theta.nu[0]
            if k.n_atoms:
                n = np.linalg.norm(k.atoms, axis=1)
                val = max(val, float(np.sum(k.weights * (n > R))))
        large_tail[R] = val
    tight_ok = (
        small_tail[min(small_tail)] == 0.0 and large_tail[max(large_tail)] == 0.0
    )
    clauses["tightness"] = {
        "status": "pass" if tight_ok else "fail",
        "small_jump_tail": small_tail,
        "large_jump_tail": large_tail,
    }
    if not tight_ok:
        witnesses.append({"clause": "tightness", "tables": [small_tail, large_tail]})

    # (iii) continuity: exact drift constant, sampled sqrt-diffusion constant
    drift_lip = max(linear_part_norm(t, "beta") for t in vertices)
    est = sqrt_diffusion_lipschitz(theta_set, (lo, hi), n_samples=n_samples,
                                   seed=seed, slope_cap=SLOPE_CAP)
    cont_status = "fail" if est.blown_up else "indeterminate-pass"
    clauses["continuity"] = {
        "status": cont_status,
        "drift_lipschitz": drift_lip,
        "sqrt_diffusion_lipschitz": est.constant,
        "slope_cap": SLOPE_CAP,
    }
    if est.blown_up:
        witnesses.append(
            {
                "clause": "continuity",
                "pair": [est.pair[0].tolist(), est.pair[1].tolist()],
                "vertex": est.vertex,
                "slope": est.constant,
            }
        )

    statuses = [c["status"] for c in clauses.values()]
    if "fail" in statuses:
        status = "fail"
    elif "indeterminate-pass" in statuses:
        status = "indeterminate"
    else:
        status = "pass"
    return ConditionReport("comparison_conditions", status, clauses, witnesses)


def uniqueness_gate(theta_set: ParameterSet, sample_box,
                    n_samples: int = 200, seed: int = 0) -> ConditionReport:
    """Run every hat-mode prerequisite: coefficient bounds, the comparison
    clauses, and the sqrt-diffusion Lipschitz probe.  A hat-mode solve may
    only be labelled as the certified-unique solution when this gate does not
    fail; solves still run (with a warning) otherwise."""
    bounds = check_coefficient_bounds(theta_set)
    linear = check_linear_bound(theta_set)
    comparison = check_comparison_conditions(theta_set, sample_box, n_samples, seed)
    failed = (not bounds.passed) or (not linear.passed) or comparison.status == "fail"
    status = "fail" if failed else comparison.status
    clauses = {
        "coefficient_bounds": {
            "status": "pass" if bounds.passed else "fail",
            "growth": bounds.growth,
            "min_atom_norm": bounds.min_atom_norm,
        },
        "linear_part_bound": {
            "status": "pass" if linear.passed else "fail",
            "bound": linear.bound,
        },
        "comparison": comparison.clauses,
    }
    witnesses = list(comparison.witnesses)
    return ConditionReport("uniqueness_gate", status, clauses, witnesses)

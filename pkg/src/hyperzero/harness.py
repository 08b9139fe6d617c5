"""Experiment orchestration: config validation, runs, records, comparisons.

A run is a pure function of its ExperimentConfig (master seed included):
per-trial streams are keyed by (experiment name, cell index, trial
index), so estimates never depend on thread count or scheduling. Each
run produces one ResultRecord, serialized as a single JSON document
with the shape {experiment, config, cells, summary, meta} plus an
optional flat CSV of cells.

The verify-identities experiment carries its own brute-force series
summation so the closed forms in hypgeom/series are checked against an
independent route rather than against themselves.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import __version__
from .coeffs import CoefficientLaw, SeededStream, derive_stream_index
from .errors import ConfigInvalid, GeometryMismatch, InvalidBallFamily, TrialFailure
from .hypgeom import (
    cross_covariance,
    delta,
    kernel_determinant,
    mobius,
    q_covariance,
)
from .pointproc import (
    BallFamily,
    clt_statistic_sample,
    correlation_limit,
    independence_experiment,
    intensity_profile,
)
from .roots import RootConfig, count_zeros_in_disk, find_roots
from .series import TruncatedSeries, alpha_power_sum, tail_rms_bound

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ResultRecord",
    "ComparisonReport",
    "run",
    "compare",
]

EXPERIMENTS = (
    "verify-identities",
    "clt",
    "intensity",
    "correlations",
    "independence",
    "roots-bench",
)

_SIGMA_POLICY = 4.0


def _parse_complex(value) -> complex:
    """Accept 1.5, "1.5", "re,im", [re, im], or a complex literal."""
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)):
        if len(value) == 1:
            return complex(float(value[0]), 0.0)
        if len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        raise ValueError(f"expected [re] or [re, im], got {value!r}")
    if isinstance(value, str):
        text = value.strip()
        if "," in text:
            re_s, im_s = text.split(",", 1)
            return complex(float(re_s), float(im_s))
        return complex(text.replace(" ", ""))
    raise ValueError(f"cannot interpret {value!r} as a point")


def _encode_complex(z: complex) -> list:
    return [z.real, z.imag]


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run.

    All knobs have overridable defaults; validate() reports every
    problem at once so a config file can be fixed in one pass.
    """

    experiment: str
    law: str = "gaussian"
    law_params: dict = field(default_factory=dict)
    u_values: tuple = ()
    centers: tuple = ()
    epsilons: tuple = ()
    weights: tuple = ()
    radius: float = 0.5
    bins: int = 8
    trials: int = 0
    master_seed: int = 0
    degree_min: int = 20
    degree_max: int = 200
    tail_tolerance: float = 1e-10
    safety_factor: float = 10.0
    residual_tolerance: float = 1e-8
    quadrature_nodes: int = 256
    threads: int = 1
    out: Optional[str] = None
    csv_out: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "u_values", tuple(_parse_complex(u) for u in self.u_values))
        object.__setattr__(self, "centers", tuple(_parse_complex(c) for c in self.centers))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "weights", tuple(_parse_complex(w) for w in self.weights))
        object.__setattr__(self, "law_params", dict(self.law_params))

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {
            "experiment", "law", "law_params", "u_values", "centers", "epsilons",
            "weights", "radius", "bins", "trials", "master_seed", "degree_min",
            "degree_max", "tail_tolerance", "safety_factor", "residual_tolerance",
            "quadrature_nodes", "threads", "out", "csv_out",
        }
        aliases = {"u": "u_values", "seed": "master_seed", "epsilon": "epsilons",
                   "lambdas": "weights", "csv": "csv_out"}
        fields = {}
        problems = []
        for key, value in data.items():
            name = aliases.get(key, key)
            if name not in known:
                problems.append(f"unknown config key {key!r}")
                continue
            fields[name] = value
        if "experiment" not in fields:
            problems.append("missing required key 'experiment'")
        if problems:
            raise ConfigInvalid(problems)
        for key in ("u_values", "centers", "epsilons", "weights"):
            if key in fields and not isinstance(fields[key], (list, tuple)):
                fields[key] = [fields[key]]
        try:
            return cls(**fields)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid([str(exc)]) from exc

    def to_mapping(self) -> dict:
        return {
            "experiment": self.experiment,
            "law": self.law,
            "law_params": dict(self.law_params),
            "u_values": [_encode_complex(u) for u in self.u_values],
            "centers": [_encode_complex(c) for c in self.centers],
            "epsilons": list(self.epsilons),
            "weights": [_encode_complex(w) for w in self.weights],
            "radius": self.radius,
            "bins": self.bins,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "degree_min": self.degree_min,
            "degree_max": self.degree_max,
            "tail_tolerance": self.tail_tolerance,
            "safety_factor": self.safety_factor,
            "residual_tolerance": self.residual_tolerance,
            "quadrature_nodes": self.quadrature_nodes,
            "threads": self.threads,
            "out": self.out,
            "csv_out": self.csv_out,
        }

    def resolved_law(self) -> CoefficientLaw:
        return CoefficientLaw.from_name(self.law, **self.law_params)

    def root_config(self) -> RootConfig:
        return RootConfig(
            residual_tolerance=self.residual_tolerance,
            quadrature_nodes=self.quadrature_nodes,
        )

    def validate(self) -> None:
        """Raise ConfigInvalid listing every violated precondition."""
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(
                f"experiment must be one of {', '.join(EXPERIMENTS)}; got {self.experiment!r}"
            )
            raise ConfigInvalid(problems)
        try:
            self.resolved_law()
        except (ValueError, TypeError) as exc:
            problems.append(f"law: {exc}")
        for name, u in zip(("u_values",) * len(self.u_values), self.u_values):
            if abs(u) >= 1.0:
                problems.append(f"{name}: |u| must be < 1, got {u}")
        for c in self.centers:
            if abs(c) >= 1.0:
                problems.append(f"centers: |z| must be < 1, got {c}")
        if not 0.0 < self.tail_tolerance < 1.0:
            problems.append(f"tail_tolerance must be in (0, 1), got {self.tail_tolerance}")
        if self.safety_factor < 1.0:
            problems.append(f"safety_factor must be >= 1, got {self.safety_factor}")
        if self.residual_tolerance <= 0.0:
            problems.append("residual_tolerance must be positive")
        if self.quadrature_nodes < 16:
            problems.append(f"quadrature_nodes must be >= 16, got {self.quadrature_nodes}")
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")

        needs_trials = self.experiment in ("clt", "intensity", "correlations",
                                           "independence", "roots-bench")
        if needs_trials and self.trials < 1:
            problems.append(f"{self.experiment}: trials must be >= 1, got {self.trials}")
        if self.experiment == "clt":
            if self.trials and self.trials < 1000:
                problems.append("clt: needs at least 1000 samples (trials)")
            if not self.centers:
                problems.append("clt: centers (statistic points) must be nonempty")
            if len(self.u_values) != 1:
                problems.append("clt: exactly one u value required")
            if self.weights and len(self.weights) != len(self.centers):
                problems.append("clt: weights must match centers in length")
        elif self.experiment == "intensity":
            if not 0.0 < self.radius < 1.0:
                problems.append(f"intensity: radius must be in (0, 1), got {self.radius}")
            if self.bins < 1:
                problems.append("intensity: bins must be >= 1")
            if len(self.u_values) > 1:
                problems.append("intensity: at most one u value")
        elif self.experiment == "correlations":
            if not self.centers:
                problems.append("correlations: centers must be nonempty")
            eps = self.epsilons
            if not eps:
                problems.append("correlations: epsilons must be nonempty")
            elif any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
                problems.append("correlations: epsilons must be strictly decreasing")
            if not self.u_values:
                problems.append("correlations: u_values must be nonempty")
            else:
                mods = [abs(u) for u in self.u_values]
                if any(m2 < m1 for m1, m2 in zip(mods, mods[1:])):
                    problems.append("correlations: |u| must be nondecreasing")
            for e in eps:
                if e <= 0:
                    problems.append(f"correlations: epsilon must be positive, got {e}")
                    continue
                try:
                    BallFamily(self.centers or (0.0,), e)
                except InvalidBallFamily as exc:
                    problems.append(f"correlations: {exc}")
        elif self.experiment == "independence":
            if len(self.u_values) != 2:
                problems.append("independence: exactly two u values required")
            if len(self.centers) != 1:
                problems.append("independence: exactly one ball center required")
            if len(self.epsilons) != 1:
                problems.append("independence: exactly one epsilon required")
            elif self.centers:
                try:
                    BallFamily(self.centers, self.epsilons[0])
                except InvalidBallFamily as exc:
                    problems.append(f"independence: {exc}")
        elif self.experiment == "roots-bench":
            if not 0.0 < self.radius <= 1.0:
                problems.append(f"roots-bench: radius must be in (0, 1], got {self.radius}")
            if not 1 <= self.degree_min <= self.degree_max:
                problems.append("roots-bench: need 1 <= degree_min <= degree_max")
        if problems:
            raise ConfigInvalid(problems)


@dataclass(frozen=True)
class ResultRecord:
    """One run's cells, summary, and provenance."""

    experiment: str
    config: dict
    cells: tuple
    summary: dict
    meta: dict

    def to_document(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "cells": list(self.cells),
            "summary": self.summary,
            "meta": self.meta,
        }

    def write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path: str) -> None:
        columns = []
        for cell in self.cells:
            for key in cell:
                if key not in columns:
                    columns.append(key)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, restval="")
            writer.writeheader()
            for cell in self.cells:
                writer.writerow(cell)

    @classmethod
    def from_document(cls, doc: dict) -> "ResultRecord":
        return cls(
            experiment=doc["experiment"],
            config=doc["config"],
            cells=tuple(doc["cells"]),
            summary=doc["summary"],
            meta=doc["meta"],
        )

    @classmethod
    def read_json(cls, path: str) -> "ResultRecord":
        with open(path, encoding="utf-8") as fh:
            return cls.from_document(json.load(fh))


def _geometric_tail_terms(ratio: float, scale: float, tol: float) -> int:
    """Terms needed so that scale * ratio^K / (1 - ratio) < tol."""
    if ratio <= 0.0:
        return 8
    target = tol * (1.0 - ratio) / scale
    return max(8, int(math.ceil(math.log(target) / math.log(ratio))) + 2)


def _direct_q_covariance(u: complex, z1: complex, z2: complex, tol: float = 1e-13) -> complex:
    """Brute-force sum of E[g(z1) conj(g(z2))] for the normalized pushforward."""
    f1 = complex(mobius(u, z1))
    f2 = complex(mobius(u, z2))
    d = delta(u, z1) * delta(u, z2).conjugate()
    q = f1 * f2.conjugate()
    terms = _geometric_tail_terms(abs(q), 1.0 / abs(d), tol)
    powers = q ** np.arange(terms)
    return complex(powers.sum()) / d


def _direct_cross_covariance(u1, z1, u2, z2, tol: float = 1e-13) -> complex:
    f1 = complex(mobius(u1, z1))
    f2 = complex(mobius(u2, z2))
    d = delta(u1, z1) * delta(u2, z2).conjugate()
    q = f1 * f2.conjugate()
    terms = _geometric_tail_terms(abs(q), 1.0 / abs(d), tol)
    powers = q ** np.arange(terms)
    return complex(powers.sum()) / d


def _direct_alpha_power_sum(u: complex, z: complex, exponent: int, tol: float = 1e-13) -> float:
    mod = abs(complex(mobius(u, z))) ** exponent
    scale = 1.0 / abs(delta(u, z)) ** exponent
    terms = _geometric_tail_terms(mod, scale, tol)
    powers = mod ** np.arange(terms)
    return float(powers.sum()) * scale


def _run_verify_identities(config: ExperimentConfig):
    """Closed forms vs direct summation on a fixed grid; lists max deviations."""
    us = config.u_values or (0.0, 0.5, 0.9j, 0.99, 0.999)
    z1, z2 = (config.centers + (0.3, -0.2 + 0.4j))[:2]
    cells = []
    max_q = 0.0
    for u in us:
        direct = _direct_q_covariance(u, z1, z2)
        closed = q_covariance(z1, z2)
        dev = abs(direct - closed)
        max_q = max(max_q, dev)
        cells.append({
            "check": "q-invariance",
            "u": _encode_complex(u),
            "value": dev,
            "tolerance": 1e-9,
            "pass": dev <= 1e-9,
        })
    max_alpha = 0.0
    zgrid = (0.0, 0.2, -0.4j, 0.3 + 0.3j, -0.5 - 0.2j)
    ugrid = (0.0, 0.3j, 0.5, -0.7, 0.9)
    for exponent in (2, 4):
        worst = 0.0
        for u in ugrid:
            for z in zgrid:
                direct = _direct_alpha_power_sum(u, z, exponent)
                closed = alpha_power_sum(u, z, exponent)
                worst = max(worst, abs(direct - closed))
        max_alpha = max(max_alpha, worst)
        cells.append({
            "check": f"alpha-power-sum-p{exponent}",
            "value": worst,
            "tolerance": 1e-10,
            "pass": worst <= 1e-10,
        })
    max_cross = 0.0
    for (u1, u2) in ((0.0, 0.5), (0.9, -0.9), (0.6j, 0.99), (0.5, 0.5)):
        direct = _direct_cross_covariance(u1, z1, u2, z2)
        closed = cross_covariance(u1, z1, u2, z2)
        dev = abs(direct - closed)
        max_cross = max(max_cross, dev)
        cells.append({
            "check": "cross-covariance",
            "u1": _encode_complex(complex(u1)),
            "u2": _encode_complex(complex(u2)),
            "value": dev,
            "tolerance": 1e-9,
            "pass": dev <= 1e-9,
        })
    summary = {
        "max_q_deviation": max_q,
        "max_alpha_deviation": max_alpha,
        "max_cross_deviation": max_cross,
        "all_pass": all(c["pass"] for c in cells),
    }
    return cells, summary


def _run_clt(config: ExperimentConfig):
    weights = config.weights or tuple(1.0 + 0.0j for _ in config.centers)
    result = clt_statistic_sample(
        config.resolved_law(),
        config.u_values[0],
        config.centers,
        weights,
        config.trials,
        config.master_seed,
        tail_tolerance=config.tail_tolerance,
        safety_factor=config.safety_factor,
        threads=config.threads,
    )
    cell = {
        "kind": "clt",
        "value": result.ks_distance,
        "std_error": None,
        "trials": result.samples,
        "hits": None,
        "sigma_sq": result.sigma_sq,
        "empirical_variance": result.empirical_variance,
        "degenerate": result.degenerate,
        "degree": result.degree,
    }
    summary = {
        "ks_distance": result.ks_distance,
        "sigma_sq": result.sigma_sq,
        "empirical_variance": result.empirical_variance,
        "degenerate": result.degenerate,
        "degree": result.degree,
    }
    return [cell], summary


def _run_intensity(config: ExperimentConfig):
    u = config.u_values[0] if config.u_values else None
    profile = intensity_profile(
        config.resolved_law(),
        u,
        config.radius,
        config.bins,
        config.trials,
        config.master_seed,
        tail_tolerance=config.tail_tolerance,
        safety_factor=config.safety_factor,
        config=config.root_config(),
        threads=config.threads,
    )
    cells = []
    for a in profile.annuli:
        cells.append({
            "kind": "annulus",
            "r_lo": a.r_inner,
            "r_hi": a.r_outer,
            "area": a.area,
            "value": a.intensity,
            "std_error": a.intensity_se,
            "mean_count": a.mean_count,
            "count_se": a.count_se,
            "trials": profile.trials,
            "hits": int(round(a.mean_count * profile.trials)),
        })
    summary = {
        "total_mean": profile.total_mean,
        "total_se": profile.total_se,
        "search_radius": profile.search_radius,
        "degree": profile.degree,
    }
    return cells, summary


def _run_correlations(config: ExperimentConfig):
    report = correlation_limit(
        config.resolved_law(),
        config.u_values,
        config.epsilons,
        config.centers,
        config.trials,
        config.master_seed,
        tail_tolerance=config.tail_tolerance,
        safety_factor=config.safety_factor,
        config=config.root_config(),
        threads=config.threads,
    )
    cells = []
    for est in report.cells:
        scaled, scaled_se = est.scaled()
        cells.append({
            "kind": "joint-hit",
            "u": None if est.u is None else _encode_complex(est.u),
            "epsilon": est.epsilon,
            "centers": [_encode_complex(c) for c in est.centers],
            "value": scaled,
            "std_error": scaled_se,
            "probability": est.probability,
            "probability_se": est.std_error,
            "trials": est.trials,
            "hits": est.hits,
            "degree": est.degree,
        })
    summary = {
        "extrapolated": report.extrapolated,
        "stat_error": report.stat_error,
        "fit_error": report.fit_error,
        "combined_error": report.combined_error,
        "n_balls": len(report.centers),
    }
    return cells, summary


def _run_independence(config: ExperimentConfig):
    report = independence_experiment(
        config.resolved_law(),
        config.u_values[0],
        config.u_values[1],
        config.centers[0],
        config.epsilons[0],
        config.trials,
        config.master_seed,
        tail_tolerance=config.tail_tolerance,
        safety_factor=config.safety_factor,
        config=config.root_config(),
        threads=config.threads,
    )
    cells = [
        {
            "kind": "indicator",
            "value": report.indicator_correlation,
            "std_error": report.indicator_correlation_se,
            "covariance": report.indicator_covariance,
            "covariance_se": report.indicator_covariance_se,
            "p1": report.p1,
            "p2": report.p2,
            "identical": report.identical,
            "trials": report.trials,
            "hits": int(round((report.p1 + report.p2) * report.trials)),
        },
        {
            "kind": "field",
            "value": abs(report.field_covariance),
            "std_error": report.field_covariance_se,
            "covariance_re": report.field_covariance.real,
            "covariance_im": report.field_covariance.imag,
            "prediction_re": report.field_prediction.real,
            "prediction_im": report.field_prediction.imag,
            "deviation_sigmas": report.field_deviation_sigmas,
            "trials": report.trials,
            "hits": None,
        },
    ]
    summary = {
        "indicator_correlation": report.indicator_correlation,
        "indicator_correlation_se": report.indicator_correlation_se,
        "identical": report.identical,
        "field_deviation_sigmas": report.field_deviation_sigmas,
        "degree": report.degree,
    }
    return cells, summary


def _run_roots_bench(config: ExperimentConfig):
    """Residual certificates and count cross-checks on random truncations."""
    law = config.resolved_law()
    root_cfg = config.root_config()
    rng_span = config.degree_max - config.degree_min
    cells = []
    worst = 0.0
    mismatches = 0
    for i in range(config.trials):
        stream = SeededStream(config.master_seed, derive_stream_index("roots-bench", 0, i))
        rng = stream.generator()
        degree = config.degree_min + int(rng.integers(rng_span + 1)) if rng_span else config.degree_min
        coeffs = law.sample(degree + 1, rng)
        tail_radius = min(0.99, config.radius + 0.2)
        series = TruncatedSeries(
            coefficients=coeffs,
            law_tag=law.tag,
            stream=stream,
            tail_radius=tail_radius,
            tail_bound=tail_rms_bound(tail_radius, degree),
        )
        zeros = find_roots(series, config.radius, root_cfg)
        scale = max(abs(coeffs).max(), 1e-300)
        ratio = max((z.residual for z in zeros.zeros), default=0.0) / (
            config.residual_tolerance * scale
        )
        worst = max(worst, ratio)
        probe_r = config.radius * 0.8
        direct = count_zeros_in_disk(series, 0.0, probe_r, None, root_cfg)
        match = direct == zeros.count_in(0.0, probe_r)
        if not match:
            mismatches += 1
        cells.append({
            "kind": "instance",
            "index": i,
            "degree": degree,
            "value": ratio,
            "std_error": None,
            "zeros": zeros.count,
            "count_match": match,
            "trials": 1,
            "hits": zeros.count,
        })
    summary = {
        "instances": config.trials,
        "worst_residual_ratio": worst,
        "count_mismatches": mismatches,
        "all_certified": worst <= 1.0 and mismatches == 0,
    }
    return cells, summary


_RUNNERS = {
    "verify-identities": _run_verify_identities,
    "clt": _run_clt,
    "intensity": _run_intensity,
    "correlations": _run_correlations,
    "independence": _run_independence,
    "roots-bench": _run_roots_bench,
}


def run(config: ExperimentConfig) -> ResultRecord:
    """Validate, execute, and persist one experiment.

    Trial failures still produce a record (flagged incomplete, with the
    failing trial's provenance in meta) before the error propagates, so
    a crashed run never looks like a finished one.
    """
    config.validate()
    started = time.perf_counter()
    meta = {
        "version": __version__,
        "master_seed": config.master_seed,
        "complete": False,
        "failure": None,
    }
    try:
        cells, summary = _RUNNERS[config.experiment](config)
    except TrialFailure as exc:
        meta["failure"] = {
            "message": str(exc),
            "trial": exc.trial,
            "stream_index": exc.stream_index,
        }
        meta["wall_clock_s"] = time.perf_counter() - started
        record = ResultRecord(
            experiment=config.experiment,
            config=config.to_mapping(),
            cells=(),
            summary={},
            meta=meta,
        )
        if config.out:
            record.write_json(config.out)
        raise
    meta["complete"] = True
    meta["wall_clock_s"] = time.perf_counter() - started
    record = ResultRecord(
        experiment=config.experiment,
        config=config.to_mapping(),
        cells=tuple(cells),
        summary=summary,
        meta=meta,
    )
    if config.out:
        record.write_json(config.out)
    if config.csv_out:
        record.write_csv(config.csv_out)
    return record


@dataclass(frozen=True)
class ComparisonReport:
    """Per-cell deviations in combined standard errors, 4 sigma policy."""

    kind: str
    cells: tuple
    max_deviation: float
    passed: bool
    policy_sigmas: float = _SIGMA_POLICY

    def to_document(self) -> dict:
        return {
            "kind": self.kind,
            "cells": list(self.cells),
            "max_deviation": self.max_deviation,
            "passed": self.passed,
            "policy_sigmas": self.policy_sigmas,
        }


def _deviation(v1, se1, v2, se2) -> float:
    combined = math.hypot(se1 or 0.0, se2 or 0.0)
    if combined == 0.0:
        return 0.0 if v1 == v2 else math.inf
    return abs(v1 - v2) / combined


def _compare_to_baseline(record: ResultRecord, baseline: ResultRecord) -> ComparisonReport:
    if record.experiment != baseline.experiment:
        raise GeometryMismatch(
            f"cannot compare {record.experiment} against {baseline.experiment}"
        )
    if record.config.get("centers") != baseline.config.get("centers"):
        raise GeometryMismatch("records use different centers")
    if record.config.get("epsilons") != baseline.config.get("epsilons"):
        raise GeometryMismatch("records use different epsilons")
    if len(record.cells) != len(baseline.cells):
        raise GeometryMismatch(
            f"cell count mismatch: {len(record.cells)} vs {len(baseline.cells)}"
        )
    rows = []
    worst = 0.0
    for i, (a, b) in enumerate(zip(record.cells, baseline.cells)):
        if a.get("value") is None or b.get("value") is None:
            continue
        for key in ("epsilon", "r_lo", "r_hi"):
            if a.get(key) != b.get(key):
                raise GeometryMismatch(f"cell {i}: {key} differs ({a.get(key)} vs {b.get(key)})")
        dev = _deviation(a["value"], a.get("std_error"), b["value"], b.get("std_error"))
        worst = max(worst, dev)
        rows.append({
            "cell": i,
            "kind": a.get("kind"),
            "value": a["value"],
            "baseline": b["value"],
            "combined_se": math.hypot(a.get("std_error") or 0.0, b.get("std_error") or 0.0),
            "deviation_sigmas": dev,
        })
    return ComparisonReport(
        kind="gaussian-baseline",
        cells=tuple(rows),
        max_deviation=worst,
        passed=worst <= _SIGMA_POLICY,
    )


def _compare_to_kernel(record: ResultRecord, kernel_c: float) -> ComparisonReport:
    if record.experiment != "correlations":
        raise GeometryMismatch("kernel-determinant comparison needs a correlations record")
    rows = []
    worst = 0.0
    for i, cell in enumerate(record.cells):
        centers = [complex(c[0], c[1]) for c in cell["centers"]]
        prediction = kernel_determinant(centers, c=kernel_c)
        dev = _deviation(cell["value"], cell.get("std_error"), prediction, 0.0)
        worst = max(worst, dev)
        rows.append({
            "cell": i,
            "epsilon": cell["epsilon"],
            "value": cell["value"],
            "prediction": prediction,
            "combined_se": cell.get("std_error") or 0.0,
            "deviation_sigmas": dev,
        })
    summary = record.summary or {}
    if "extrapolated" in summary and summary.get("combined_error"):
        centers = [complex(c[0], c[1]) for c in record.cells[0]["centers"]]
        prediction = kernel_determinant(centers, c=kernel_c)
        dev = _deviation(summary["extrapolated"], summary["combined_error"], prediction, 0.0)
        worst = max(worst, dev)
        rows.append({
            "cell": "extrapolated",
            "value": summary["extrapolated"],
            "prediction": prediction,
            "combined_se": summary["combined_error"],
            "deviation_sigmas": dev,
        })
    return ComparisonReport(
        kind="kernel-determinant",
        cells=tuple(rows),
        max_deviation=worst,
        passed=worst <= _SIGMA_POLICY,
    )


def compare(record: ResultRecord, prediction: Union[str, ResultRecord], *,
            kernel_c: float = 1.0) -> ComparisonReport:
    """Check a record against a prediction at the 4 sigma policy.

    prediction is either the string "kernel-determinant" (correlations
    records only; cell values are compared to kernel_determinant of the
    cell's centers with constant kernel_c) or a baseline ResultRecord
    with the same geometry (universality comparisons).
    """
    if isinstance(prediction, ResultRecord):
        return _compare_to_baseline(record, prediction)
    if prediction == "kernel-determinant":
        return _compare_to_kernel(record, kernel_c)
    raise ValueError(
        "prediction must be a ResultRecord or the string 'kernel-determinant'"
    )

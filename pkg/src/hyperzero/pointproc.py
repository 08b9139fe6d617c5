"""Seeded Monte Carlo experiments on the zero point process.

Every experiment here follows the same recipe: draw a certified
truncation per trial from a per-trial stream, decide ball-hit events by
argument-principle counts of the pushforward f(phi(u, .)), and reduce
indicator statistics with binomial error bars. Trials are independent
by stream construction, so results do not depend on chunking, thread
count, or aggregation order; a failed trial aborts the experiment and
reports its stream, it is never silently skipped.

The double limit behind the joint-intensity experiments is taken as:
push the basepoint u toward the boundary as far as truncation degrees
allow (|u| = 0.99 by default), then extrapolate the ball-size scaling
epsilon -> 0 linearly in epsilon^2 from a small ladder of epsilons.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .coeffs import SeededStream, derive_stream_index
from .errors import (
    HyperzeroError,
    InsufficientHits,
    InvalidBallFamily,
    PolicyInfeasible,
    TrialFailure,
)
from .hypgeom import as_complex, cross_covariance, mobius, mobius_image_circle, delta, q_covariance
from .roots import RootConfig, count_zeros_robust, _CONTOUR_FLOOR
from .series import TruncatedSeries, TruncationPolicy, required_degree, tail_rms_bound

__all__ = [
    "BallFamily",
    "CorrelationEstimate",
    "ExtrapolationReport",
    "IntensityProfile",
    "AnnulusStat",
    "CltSummary",
    "IndependenceReport",
    "joint_hit_probability",
    "correlation_limit",
    "intensity_profile",
    "clt_statistic_sample",
    "independence_experiment",
]

_CHUNK = 256


@dataclass(frozen=True)
class BallFamily:
    """Pairwise-disjoint closed balls strictly inside the unit disk."""

    centers: tuple
    epsilon: float

    def __post_init__(self):
        centers = tuple(as_complex(c) for c in self.centers)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not centers:
            raise InvalidBallFamily("need at least one ball")
        if self.epsilon <= 0.0:
            raise InvalidBallFamily(f"epsilon must be positive, got {self.epsilon}")
        for c in centers:
            if abs(c) + self.epsilon >= 1.0:
                raise InvalidBallFamily(
                    f"ball at {c} with radius {self.epsilon} leaves the unit disk"
                )
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                if abs(centers[i] - centers[j]) <= 2.0 * self.epsilon:
                    raise InvalidBallFamily(
                        f"balls {i} and {j} are not disjoint at epsilon {self.epsilon}"
                    )

    @property
    def n(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class _Contour:
    """Fixed integration circle with everything precomputed per cell."""

    u: Optional[complex]
    center: complex
    radius: float
    jacobian: np.ndarray
    vandermonde: np.ndarray  # (degree + 1, nodes), rows are powers of the image nodes


def _contour_reach(u, center, radius) -> float:
    if u is None:
        return abs(center) + radius
    ic, ir = mobius_image_circle(u, center, radius)
    return abs(ic) + ir


def _build_contour(u, center, radius, nodes: int, degree: int) -> _Contour:
    ring = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    z = center + ring
    if u is None:
        w = z
        jac = ring
    else:
        denom = 1.0 - np.conj(u) * z
        w = (z - u) / denom
        jac = ring * (1.0 - abs(u) ** 2) / (denom * denom)
    v = np.empty((degree + 1, nodes), dtype=complex)
    v[0] = 1.0
    for k in range(1, degree + 1):
        np.multiply(v[k - 1], w, out=v[k])
    return _Contour(u=u, center=center, radius=radius, jacobian=jac, vandermonde=v)


@dataclass(frozen=True)
class _TrialBatch:
    counts: Optional[np.ndarray]   # (trials, probes) int64
    fields: Optional[np.ndarray]   # (trials, field points) complex
    degree: int
    tail_bound: float


def _law_tag(law) -> str:
    return getattr(law, "tag", repr(law))


def _run_trials(
    law,
    probes: Sequence[tuple],
    field_points: Sequence[tuple],
    trials: int,
    master_seed: int,
    experiment: str,
    cell: int,
    tail_tolerance: float = 1e-10,
    safety_factor: float = 10.0,
    config: RootConfig = RootConfig(),
    threads: int = 1,
) -> _TrialBatch:
    """Shared trial engine.

    probes are (u, center, radius) counting contours, field_points are
    (u, z) evaluation points of the normalized pushforward; all share
    one coefficient draw per trial. The certified radius covers every
    contour image with a 1% radius-jitter margin, so the per-trial
    fallback path (node doubling, jittered radius) stays certified.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    reach = 0.0
    for (u, center, radius) in probes:
        reach = max(reach, _contour_reach(u, center, radius * 1.01))
    for (u, z) in field_points:
        reach = max(reach, abs(z) if u is None else abs(complex(mobius(u, z))))
    if reach >= 1.0:
        raise PolicyInfeasible(f"required certified radius {reach:.6f} is not below 1")
    policy = TruncationPolicy(reach, tail_tolerance, safety_factor)
    degree = required_degree(policy)
    ncoef = degree + 1

    contours = [
        _build_contour(u, center, radius, config.quadrature_nodes, degree)
        for (u, center, radius) in probes
    ]
    vectors = []
    for (u, z) in field_points:
        w = complex(z) if u is None else complex(mobius(u, z))
        powers = np.empty(ncoef, dtype=complex)
        powers[0] = 1.0
        for k in range(1, ncoef):
            powers[k] = powers[k - 1] * w
        scale = 1.0 if u is None else delta(u, z)
        vectors.append(powers / scale)

    kweights = np.arange(1, ncoef)
    tag = _law_tag(law)
    tail_bound = tail_rms_bound(policy.target_radius, degree)

    def scalar_count(row, stream_index, probe_index):
        u, center, radius = probes[probe_index]
        series = TruncatedSeries(
            coefficients=row,
            law_tag=tag,
            stream=SeededStream(master_seed, stream_index),
            tail_radius=policy.target_radius,
            tail_bound=tail_bound,
        )
        # key the fallback jitter by the contour geometry, not the probe
        # slot: duplicated probes must stay bitwise-coupled per trial
        key = derive_stream_index(stream_index, "jitter", f"{u!r}:{center!r}:{radius!r}")
        return count_zeros_robust(series, center, radius, u, config, jitter_key=key)

    def process(span):
        t0, t1 = span
        block = t1 - t0
        coeff = np.empty((block, ncoef), dtype=complex)
        sidx = np.empty(block, dtype=np.uint64)
        for i in range(block):
            si = derive_stream_index(experiment, cell, t0 + i)
            sidx[i] = si
            coeff[i] = law.sample(ncoef, SeededStream(master_seed, si).generator())
        counts = np.zeros((block, len(contours)), dtype=np.int64) if contours else None
        for pi, ct in enumerate(contours):
            values = coeff @ ct.vandermonde
            derivs = (coeff[:, 1:] * kweights) @ ct.vandermonde[:-1]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                winding = (ct.jacobian * (derivs / values)).mean(axis=1)
            nearest = np.rint(winding.real)
            magnitude = np.abs(values)
            top = magnitude.max(axis=1)
            bottom = magnitude.min(axis=1)
            with np.errstate(invalid="ignore"):
                settled = (
                    np.isfinite(winding)
                    & (np.abs(winding - nearest) <= 0.1)
                    & (nearest >= 0)
                    & (nearest <= degree)
                    & (top > 0.0)
                    & (bottom >= _CONTOUR_FLOOR * top)
                )
            counts[settled, pi] = nearest[settled].astype(np.int64)
            for i in np.nonzero(~settled)[0]:
                trial = t0 + int(i)
                try:
                    counts[i, pi] = scalar_count(coeff[i], int(sidx[i]), pi)
                except HyperzeroError as exc:
                    raise TrialFailure(
                        f"trial {trial} (stream {int(sidx[i])}) failed on ball "
                        f"{pi}: {exc}",
                        trial=trial,
                        stream_index=int(sidx[i]),
                    ) from exc
        fields = None
        if vectors:
            fields = np.empty((block, len(vectors)), dtype=complex)
            for li, vec in enumerate(vectors):
                fields[:, li] = coeff @ vec
        return counts, fields

    spans = [(t0, min(t0 + _CHUNK, trials)) for t0 in range(0, trials, _CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(process, spans))
    else:
        results = [process(span) for span in spans]

    counts = np.concatenate([r[0] for r in results]) if contours else None
    fields = np.concatenate([r[1] for r in results]) if vectors else None
    return _TrialBatch(counts=counts, fields=fields, degree=degree, tail_bound=tail_bound)


@dataclass(frozen=True)
class CorrelationEstimate:
    """Joint ball-hit probability with binomial error and provenance."""

    probability: float
    std_error: float
    trials: int
    hits: int
    epsilon: float
    centers: tuple
    u: Optional[complex]
    law_tag: str
    master_seed: int
    degree: int
    experiment: str = "joint-hit"
    cell: int = 0

    @property
    def n(self) -> int:
        return len(self.centers)

    def scaled(self) -> tuple[float, float]:
        """epsilon^(-2n) scaling of the estimate and its error."""
        factor = self.epsilon ** (-2 * self.n)
        return self.probability * factor, self.std_error * factor


def joint_hit_probability(
    law,
    u,
    balls: BallFamily,
    trials: int,
    master_seed: int,
    *,
    experiment: str = "joint-hit",
    cell: int = 0,
    tail_tolerance: float = 1e-10,
    safety_factor: float = 10.0,
    config: RootConfig = RootConfig(),
    threads: int = 1,
) -> CorrelationEstimate:
    """Estimate P(every ball contains a zero of the pushforward).

    The hit event per trial is count >= 1 in every ball of the family,
    with counts taken by the argument principle. The estimator is the
    plain hit frequency; its standard error is sqrt(p(1-p)/trials).
    """
    if not isinstance(balls, BallFamily):
        raise TypeError("balls must be a BallFamily")
    uu = None if u is None else as_complex(u)
    probes = [(uu, c, balls.epsilon) for c in balls.centers]
    batch = _run_trials(
        law,
        probes,
        (),
        trials,
        master_seed,
        experiment,
        cell,
        tail_tolerance,
        safety_factor,
        config,
        threads,
    )
    hit = (batch.counts >= 1).all(axis=1)
    hits = int(hit.sum())
    p = hits / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    return CorrelationEstimate(
        probability=p,
        std_error=se,
        trials=trials,
        hits=hits,
        epsilon=balls.epsilon,
        centers=balls.centers,
        u=uu,
        law_tag=_law_tag(law),
        master_seed=master_seed,
        degree=batch.degree,
        experiment=experiment,
        cell=cell,
    )


@dataclass(frozen=True)
class ExtrapolationReport:
    """Grid of scaled joint-hit estimates plus the epsilon -> 0 limit.

    extrapolated is the intercept of a weighted linear fit of
    epsilon^(-2n) p-hat against epsilon^2 at the largest |u| in the
    grid; fit_error records the worst fit residual as a systematic
    error alongside the statistical intercept error.
    """

    law_tag: str
    centers: tuple
    epsilons: tuple
    u_values: tuple
    trials: int
    master_seed: int
    cells: tuple
    extrapolated: float
    stat_error: float
    fit_error: float

    @property
    def combined_error(self) -> float:
        return math.hypot(self.stat_error, self.fit_error)


def correlation_limit(
    law,
    u_values: Sequence,
    epsilons: Sequence[float],
    centers: Sequence,
    trials: int,
    master_seed: int,
    *,
    experiment: str = "correlations",
    tail_tolerance: float = 1e-10,
    safety_factor: float = 10.0,
    config: RootConfig = RootConfig(),
    threads: int = 1,
    min_hits: int = 25,
) -> ExtrapolationReport:
    """Scaled joint-hit grid over (u, epsilon) with small-ball extrapolation.

    epsilons must be strictly decreasing and |u| nondecreasing; every
    grid cell must collect at least min_hits hits, otherwise the run
    stops with InsufficientHits. A single-epsilon grid degenerates to
    echoing that cell's scaled estimate.
    """
    us = [None if u is None else as_complex(u) for u in u_values]
    eps = [float(e) for e in epsilons]
    ctrs = tuple(as_complex(c) for c in centers)
    if not us:
        raise ValueError("need at least one u value")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    mods = [0.0 if u is None else abs(u) for u in us]
    if any(m2 < m1 for m1, m2 in zip(mods, mods[1:])):
        raise ValueError("|u| must be nondecreasing")

    cells = []
    for ui, uu in enumerate(us):
        for ej, e in enumerate(eps):
            balls = BallFamily(ctrs, e)
            est = joint_hit_probability(
                law,
                uu,
                balls,
                trials,
                master_seed,
                experiment=experiment,
                cell=ui * len(eps) + ej,
                tail_tolerance=tail_tolerance,
                safety_factor=safety_factor,
                config=config,
                threads=threads,
            )
            if est.hits < min_hits:
                raise InsufficientHits(
                    f"cell (u={uu}, epsilon={e}) collected {est.hits} hits "
                    f"(< {min_hits}); increase trials or epsilon"
                )
            cells.append(est)

    # extrapolate at the largest |u| over the epsilon ladder
    last = cells[-len(eps):]
    x = np.array([c.epsilon ** 2 for c in last])
    scaled = np.array([c.scaled()[0] for c in last])
    errs = np.array([c.scaled()[1] for c in last])
    if len(eps) == 1:
        intercept, stat, fit_err = float(scaled[0]), float(errs[0]), 0.0
    else:
        w = 1.0 / errs**2
        a11 = w.sum()
        a12 = (w * x).sum()
        a22 = (w * x * x).sum()
        b1 = (w * scaled).sum()
        b2 = (w * x * scaled).sum()
        det = a11 * a22 - a12 * a12
        intercept = float((a22 * b1 - a12 * b2) / det)
        slope = float((a11 * b2 - a12 * b1) / det)
        stat = float(math.sqrt(a22 / det))
        fit_err = float(np.max(np.abs(intercept + slope * x - scaled)))
    return ExtrapolationReport(
        law_tag=_law_tag(law),
        centers=ctrs,
        epsilons=tuple(eps),
        u_values=tuple(us),
        trials=trials,
        master_seed=master_seed,
        cells=tuple(cells),
        extrapolated=intercept,
        stat_error=stat,
        fit_error=fit_err,
    )


@dataclass(frozen=True)
class AnnulusStat:
    r_inner: float
    r_outer: float
    area: float
    mean_count: float
    count_se: float
    intensity: float
    intensity_se: float


@dataclass(frozen=True)
class IntensityProfile:
    """Radial zero-count profile of the pushforward around the origin."""

    annuli: tuple
    trials: int
    total_mean: float
    total_se: float
    search_radius: float
    u: Optional[complex]
    law_tag: str
    master_seed: int
    degree: int


def intensity_profile(
    law,
    u,
    search_radius: float,
    bins: int,
    trials: int,
    master_seed: int,
    *,
    experiment: str = "intensity",
    cell: int = 0,
    tail_tolerance: float = 1e-10,
    safety_factor: float = 10.0,
    config: RootConfig = RootConfig(),
    threads: int = 1,
) -> IntensityProfile:
    """Per-annulus zero counts normalized by area and trials.

    Counts at the bin-edge circles are taken per trial; annulus counts
    are their differences, so the whole profile costs bins contour
    evaluations per trial and needs no root locations.
    """
    if not 0.0 < search_radius < 1.0:
        raise ValueError("search radius must be in (0, 1)")
    if bins < 1:
        raise ValueError("need at least one bin")
    uu = None if u is None else as_complex(u)
    edges = [search_radius * (k + 1) / bins for k in range(bins)]
    probes = [(uu, 0.0 + 0.0j, r) for r in edges]
    batch = _run_trials(
        law,
        probes,
        (),
        trials,
        master_seed,
        experiment,
        cell,
        tail_tolerance,
        safety_factor,
        config,
        threads,
    )
    cumulative = batch.counts
    annular = np.diff(cumulative, axis=1, prepend=0)
    annuli = []
    inner = 0.0
    for k, outer in enumerate(edges):
        area = math.pi * (outer * outer - inner * inner)
        mean = float(annular[:, k].mean())
        se = float(annular[:, k].std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        annuli.append(
            AnnulusStat(
                r_inner=inner,
                r_outer=outer,
                area=area,
                mean_count=mean,
                count_se=se,
                intensity=mean / area,
                intensity_se=se / area,
            )
        )
        inner = outer
    total = cumulative[:, -1]
    return IntensityProfile(
        annuli=tuple(annuli),
        trials=trials,
        total_mean=float(total.mean()),
        total_se=float(total.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        search_radius=search_radius,
        u=uu,
        law_tag=_law_tag(law),
        master_seed=master_seed,
        degree=batch.degree,
    )


@dataclass(frozen=True)
class CltSummary:
    """Normal-limit check of a weighted pushforward statistic."""

    ks_distance: Optional[float]
    sigma_sq: float
    empirical_variance: float
    samples: int
    degenerate: bool
    law_tag: str
    u: complex
    points: tuple
    weights: tuple
    master_seed: int
    degree: int


def clt_statistic_sample(
    law,
    u,
    points: Sequence,
    weights: Sequence,
    samples: int,
    master_seed: int,
    *,
    experiment: str = "clt",
    cell: int = 0,
    tail_tolerance: float = 1e-10,
    safety_factor: float = 10.0,
    threads: int = 1,
) -> CltSummary:
    """Sample Re sum_i w_i f(phi(u, z_i)) / delta(u, z_i) and test normality.

    The limiting variance is sigma^2 = (1/2) sum_ij w_i conj(w_j)
    q_covariance(z_i, z_j), which the Kolmogorov-Smirnov distance is
    taken against. All-zero weights give a degenerate statistic and the
    KS step is skipped.
    """
    uu = as_complex(u)
    pts = [as_complex(p) for p in points]
    lams = [complex(w) for w in weights]
    if len(pts) != len(lams) or not pts:
        raise ValueError("points and weights must be nonempty and match")
    if samples < 1000:
        raise ValueError("need at least 1000 samples for a usable empirical law")
    sigma_sq = 0.5 * sum(
        (l1 * l2.conjugate() * q_covariance(z1, z2)).real
        for l1, z1 in zip(lams, pts)
        for l2, z2 in zip(lams, pts)
    )
    field_points = [(uu, z) for z in pts]
    batch = _run_trials(
        law,
        (),
        field_points,
        samples,
        master_seed,
        experiment,
        cell,
        tail_tolerance,
        safety_factor,
        RootConfig(),
        threads,
    )
    statistic = (batch.fields @ np.array(lams)).real
    emp_var = float(statistic.var(ddof=1))
    if sigma_sq <= 0.0:
        return CltSummary(
            ks_distance=None,
            sigma_sq=sigma_sq,
            empirical_variance=emp_var,
            samples=samples,
            degenerate=True,
            law_tag=_law_tag(law),
            u=uu,
            points=tuple(pts),
            weights=tuple(lams),
            master_seed=master_seed,
            degree=batch.degree,
        )
    ordered = np.sort(statistic)
    cdf = ndtr(ordered / math.sqrt(sigma_sq))
    grid = np.arange(1, samples + 1) / samples
    ks = float(max(np.max(grid - cdf), np.max(cdf - (grid - 1.0 / samples))))
    return CltSummary(
        ks_distance=ks,
        sigma_sq=sigma_sq,
        empirical_variance=emp_var,
        samples=samples,
        degenerate=False,
        law_tag=_law_tag(law),
        u=uu,
        points=tuple(pts),
        weights=tuple(lams),
        master_seed=master_seed,
        degree=batch.degree,
    )


@dataclass(frozen=True)
class IndependenceReport:
    """Hit-indicator and field-level coupling across two basepoints."""

    law_tag: str
    u1: complex
    u2: complex
    center: complex
    epsilon: float
    trials: int
    master_seed: int
    degree: int
    p1: float
    p2: float
    indicator_covariance: float
    indicator_covariance_se: float
    indicator_correlation: float
    indicator_correlation_se: float
    identical: bool
    field_covariance: complex
    field_covariance_se: float
    field_prediction: complex

    @property
    def field_deviation_sigmas(self) -> float:
        if self.field_covariance_se == 0.0:
            return 0.0 if self.field_covariance == self.field_prediction else math.inf
        return abs(self.field_covariance - self.field_prediction) / self.field_covariance_se


def independence_experiment(
    law,
    u1,
    u2,
    center,
    epsilon: float,
    trials: int,
    master_seed: int,
    *,
    experiment: str = "independence",
    cell: int = 0,
    tail_tolerance: float = 1e-10,
    safety_factor: float = 10.0,
    config: RootConfig = RootConfig(),
    threads: int = 1,
) -> IndependenceReport:
    """Couple the same coefficient draws through two basepoints.

    Per trial one series is sampled and the same ball is examined under
    phi(u1, .) and phi(u2, .); the report carries the covariance and
    correlation of the two hit indicators, and the empirical covariance
    of the two normalized field values at the ball center against the
    closed-form cross_covariance. With u1 == u2 the indicators are
    identical by construction and the correlation is exactly 1.
    """
    uu1 = as_complex(u1)
    uu2 = as_complex(u2)
    c = as_complex(center)
    BallFamily((c,), epsilon)  # validates the ball geometry
    probes = [(uu1, c, float(epsilon)), (uu2, c, float(epsilon))]
    field_points = [(uu1, c), (uu2, c)]
    batch = _run_trials(
        law,
        probes,
        field_points,
        trials,
        master_seed,
        experiment,
        cell,
        tail_tolerance,
        safety_factor,
        config,
        threads,
    )
    ind = (batch.counts >= 1).astype(float)
    i1, i2 = ind[:, 0], ind[:, 1]
    p1, p2 = float(i1.mean()), float(i2.mean())
    centered = (i1 - p1) * (i2 - p2)
    cov = float(centered.mean())
    cov_se = float(centered.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    identical = bool(np.array_equal(batch.counts[:, 0], batch.counts[:, 1]))
    v1 = p1 * (1.0 - p1)
    v2 = p2 * (1.0 - p2)
    if np.array_equal(ind[:, 0], ind[:, 1]):
        corr = 1.0
    elif v1 == 0.0 or v2 == 0.0:
        corr = math.nan
    else:
        corr = cov / math.sqrt(v1 * v2)
    corr_se = 1.0 / math.sqrt(trials)

    y1, y2 = batch.fields[:, 0], batch.fields[:, 1]
    prods = y1 * np.conj(y2)
    emp_cov = complex(prods.mean() - y1.mean() * np.conj(y2.mean()))
    spread = math.sqrt(
        float(prods.real.var(ddof=1)) + float(prods.imag.var(ddof=1))
    ) if trials > 1 else 0.0
    field_se = spread / math.sqrt(trials)
    prediction = cross_covariance(uu1, c, uu2, c)
    return IndependenceReport(
        law_tag=_law_tag(law),
        u1=uu1,
        u2=uu2,
        center=c,
        epsilon=float(epsilon),
        trials=trials,
        master_seed=master_seed,
        degree=batch.degree,
        p1=p1,
        p2=p2,
        indicator_covariance=cov,
        indicator_covariance_se=cov_se,
        indicator_correlation=corr,
        indicator_correlation_se=corr_se,
        identical=identical,
        field_covariance=emp_cov,
        field_covariance_se=field_se,
        field_prediction=prediction,
    )

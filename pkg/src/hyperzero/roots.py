"""Zero location and zero counting for certified truncations.

Two routes with one contract:

* ``find_roots`` locates every zero inside a search disk by Ehrlich-
  Aberth simultaneous iteration plus Newton polishing, and certifies
  each zero by its residual |f(zero)| relative to the coefficient scale
  max_k |c_k| r^k.
* ``count_zeros_in_disk`` only counts zeros, via the argument principle
  on a circle: (1/2 pi i) contour integral of g'/g, evaluated with the
  equal-weight trapezoid rule (spectrally accurate on circles). It
  optionally counts zeros of the pushforward g(z) = f(phi(u, z)), whose
  derivative is f'(phi(u, z)) phi'(u, z) by the chain rule.

The counting route is the one that scales to the high truncation
degrees needed near the boundary; the global solver is intended for
degrees up to a few hundred.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .coeffs import derive_stream_index
from .errors import (
    ContourTooClose,
    DegenerateInput,
    NonConvergence,
    OutOfCertifiedDisk,
    QuadratureUnresolved,
)
from .hypgeom import DiskPoint, as_complex, mobius_image_circle
from .series import TruncatedSeries, _horner

logger = logging.getLogger(__name__)

__all__ = [
    "RootConfig",
    "Zero",
    "ZeroSet",
    "coefficient_scale",
    "find_roots",
    "count_zeros_in_disk",
    "count_zeros_robust",
]

_TRIM_FACTOR = 1e-14
_CLUSTER_TOL = 1e-9
_CONTOUR_FLOOR = 1e3 * np.finfo(float).eps
_MAX_DOUBLINGS = 3


@dataclass(frozen=True)
class RootConfig:
    """Knobs shared by both routes."""

    residual_tolerance: float = 1e-8
    max_iterations: int = 200
    quadrature_nodes: int = 256

    def __post_init__(self):
        if self.residual_tolerance <= 0:
            raise ValueError("residual tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if self.quadrature_nodes < 4:
            raise ValueError("need at least 4 quadrature nodes")


@dataclass(frozen=True)
class Zero:
    location: DiskPoint
    residual: float
    multiplicity: int = 1


@dataclass(frozen=True)
class ZeroSet:
    """Certified zeros of one truncation inside |z| <= search_radius."""

    zeros: tuple[Zero, ...]
    search_radius: float
    method: str

    @property
    def count(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    def count_in(self, center, radius: float) -> int:
        c = as_complex(center)
        return sum(z.multiplicity for z in self.zeros if abs(z.location.z - c) <= radius)


def coefficient_scale(coefficients: np.ndarray, radius: float) -> float:
    """max_k |c_k| radius^k, the natural size of f on |z| <= radius."""
    mags = np.abs(np.asarray(coefficients, dtype=complex))
    return float(np.max(mags * radius ** np.arange(mags.size)))


def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    """Starting points on circles following the coefficient magnitudes.

    Radii come from the upper convex hull of (k, log |c_k|): each hull
    edge from k0 to k1 contributes k1 - k0 points on the circle of
    radius (|c_{k0}| / |c_{k1}|)^(1 / (k1 - k0)), the classical
    Newton-polygon estimate for the moduli of that batch of roots.
    """
    mags = np.abs(coeffs)
    finite = np.nonzero(mags > 0.0)[0]
    logm = np.full(mags.size, -np.inf)
    logm[finite] = np.log(mags[finite])

    hull = []  # indices of upper-hull vertices, left to right
    for k in finite:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it sits below segment a-k
            if (logm[b] - logm[a]) * (k - a) <= (logm[k] - logm[a]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(int(k))

    degree = coeffs.size - 1
    guesses = np.empty(degree, dtype=complex)
    pos = 0
    for a, b in zip(hull[:-1], hull[1:]):
        m = b - a
        radius = (mags[a] / mags[b]) ** (1.0 / m)
        angles = 2.0 * np.pi * (np.arange(m) + 0.5) / m + 0.26 + pos
        guesses[pos : pos + m] = radius * np.exp(1j * angles)
        pos += m
    # exact leading zeros removed upstream, so pos == degree here
    return guesses


def _newton_ratio(coeffs: np.ndarray, dcoeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """p(z)/p'(z), evaluated without overflow for |z| > 1.

    Outside the unit circle the ratio is computed through the reversed
    polynomial q(w) = w^d p(1/w), giving
    p/p' = z / (d - w q'(w)/q(w)) with w = 1/z and |w| < 1.
    """
    d = coeffs.size - 1
    out = np.empty_like(z)
    inside = np.abs(z) <= 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zi = z[inside]
        out[inside] = _horner(coeffs, zi) / _horner(dcoeffs, zi)
        zo = z[~inside]
        if zo.size:
            w = 1.0 / zo
            rcoeffs = coeffs[::-1].copy()
            drcoeffs = rcoeffs[1:] * np.arange(1, coeffs.size)
            out[~inside] = zo / (d - w * _horner(drcoeffs, w) / _horner(rcoeffs, w))
    return out


def _aberth(coeffs: np.ndarray, config: RootConfig) -> np.ndarray:
    """Run Ehrlich-Aberth to simultaneous convergence of all roots."""
    dcoeffs = coeffs[1:] * np.arange(1, coeffs.size)
    z = _initial_guesses(coeffs)
    n = z.size
    for _ in range(config.max_iterations):
        newton = _newton_ratio(coeffs, dcoeffs, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            # the self-term must not enter the repulsion sum; a constant
            # bias there sends far iterates marching outward forever
            np.fill_diagonal(inv, 0.0)
            repulse = inv.sum(axis=1)
            step = newton / (1.0 - newton * repulse)
        bad = ~np.isfinite(step)
        if bad.any():
            # coincident iterates or a stationary point: nudge instead
            step = np.where(bad, 1e-8 * (1.0 + np.abs(z)) * np.exp(1j * np.arange(n)), step)
        z = z - step
        if np.max(np.abs(step) / (1.0 + np.abs(z))) < 5e-15:
            break
    return z


def _newton_polish(coeffs: np.ndarray, z: np.ndarray, target: float) -> np.ndarray:
    dcoeffs = coeffs[1:] * np.arange(1, coeffs.size)
    best = z.copy()
    best_res = np.abs(_horner(coeffs, best))
    for _ in range(40):
        if np.all(best_res <= 0.25 * target):
            break
        step = _newton_ratio(coeffs, dcoeffs, z)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        res = np.abs(_horner(coeffs, z))
        improved = res < best_res
        best[improved] = z[improved]
        best_res[improved] = res[improved]
    return best


def find_roots(series: TruncatedSeries, search_radius: float, config: RootConfig = RootConfig()) -> ZeroSet:
    """Locate all zeros of the truncation inside |z| <= search_radius.

    Parameters
    ----------
    series : TruncatedSeries
        The truncation to solve. search_radius must not exceed its
        certified radius.
    search_radius : float
        Radius of the closed disk whose zeros are reported.
    config : RootConfig
        Residual tolerance and iteration budget.

    Returns
    -------
    ZeroSet
        Zeros with residual certificates; residuals satisfy
        |f(zero)| <= residual_tolerance * coefficient_scale.

    Raises
    ------
    DegenerateInput
        If all coefficients vanish to working precision.
    NonConvergence
        If some in-disk zero cannot be certified within the budget.
    """
    if search_radius <= 0.0:
        raise ValueError("search radius must be positive")
    if search_radius > series.tail_radius * (1.0 + 1e-12):
        raise OutOfCertifiedDisk(
            f"search radius {search_radius} exceeds certified radius {series.tail_radius}"
        )
    coeffs = np.asarray(series.coefficients, dtype=complex)
    top = float(np.max(np.abs(coeffs)))
    if top == 0.0:
        raise DegenerateInput("all coefficients are zero")

    # trailing coefficients below the noise floor only produce spurious
    # far-field roots; drop them before solving
    keep = coeffs.size
    while keep > 1 and abs(coeffs[keep - 1]) < _TRIM_FACTOR * top:
        keep -= 1
    coeffs = coeffs[:keep]

    # exact zeros at the origin are split off so the solver sees c_0 != 0
    origin_mult = 0
    while origin_mult < coeffs.size - 1 and coeffs[origin_mult] == 0.0:
        origin_mult += 1
    solver_coeffs = coeffs[origin_mult:]
    if solver_coeffs.size == 1 and solver_coeffs[0] == 0.0:
        raise DegenerateInput("all coefficients are zero after trimming")

    scale = coefficient_scale(series.coefficients, search_radius)
    target = config.residual_tolerance * scale

    locations: list[complex] = []
    if solver_coeffs.size > 1:
        raw = _aberth(solver_coeffs, config)
        # polish only near-disk candidates; far roots are discarded anyway
        near = raw[np.abs(raw) <= min(1.0, search_radius * 1.05)]
        near = _newton_polish(solver_coeffs, near, target) if near.size else near
        locations = [complex(z) for z in near if abs(z) <= search_radius]

    # Newton inclusion radii decide what "coincident" means: a zero of
    # order m pulls p' down to ~|z - root|^(m-1) at its iterates, so the
    # radii grow to the cluster diameter there while staying at machine
    # scale for well-separated simple zeros.  No fixed length works for
    # both: doubles smear over ~1e-8, triples over ~1e-6.
    inclusion = np.zeros(len(locations))
    if locations:
        loc = np.asarray(locations, dtype=complex)
        sdc = solver_coeffs[1:] * np.arange(1, solver_coeffs.size)
        pv = np.abs(_horner(solver_coeffs, loc))
        # computed |p| is meaningless below the Horner rounding floor,
        # which is what bounds the radius at a multiple zero
        noise = np.finfo(float).eps * np.abs(_horner(np.abs(solver_coeffs).astype(complex), np.abs(loc).astype(complex)))
        dv = np.abs(_horner(sdc, loc)) if sdc.size else np.zeros(loc.size)
        deg = solver_coeffs.size - 1
        inclusion = np.minimum(deg * (pv + noise) / np.maximum(dv, 1e-300), 1e-3)

    order = sorted(range(len(locations)), key=lambda i: (locations[i].real, locations[i].imag))
    clusters: list[list[int]] = []
    for i in order:
        for group in clusters:
            j = group[0]
            if abs(locations[j] - locations[i]) <= _CLUSTER_TOL + 4.0 * (inclusion[i] + inclusion[j]):
                group.append(i)
                break
        else:
            clusters.append([i])

    zeros = []
    if origin_mult > 0:
        zeros.append(
            Zero(
                location=DiskPoint(0.0, 0.0),
                residual=float(abs(series.coefficients[0])),
                multiplicity=origin_mult,
            )
        )
    for group in clusters:
        rep = complex(np.mean([locations[i] for i in group]))
        residual = float(abs(_horner(coeffs, rep)))
        if len(group) > 1:
            logger.warning(
                "multiple zero of order %d at %s (cluster tolerance %g)",
                len(group),
                rep,
                _CLUSTER_TOL,
            )
        zeros.append(Zero(location=DiskPoint(rep.real, rep.imag), residual=residual, multiplicity=len(group)))

    failed = [z for z in zeros if z.residual > target]
    if failed:
        raise NonConvergence(
            f"{len(failed)} zero(s) above residual target {target:.3g} "
            f"after {config.max_iterations} iterations"
        )
    zeros.sort(key=lambda z: (abs(z.location.z), z.location.z.real, z.location.z.imag))
    return ZeroSet(zeros=tuple(zeros), search_radius=float(search_radius), method="GlobalRoots")


def _certify_contour(series, center, radius, u) -> None:
    if u is None:
        reach = abs(center) + radius
    else:
        ic, ir = mobius_image_circle(u, center, radius)
        reach = abs(ic) + ir
    if reach > series.tail_radius * (1.0 + 1e-12):
        raise OutOfCertifiedDisk(
            f"contour image reaches {reach:.17g}, beyond certified radius "
            f"{series.tail_radius:.17g}"
        )


def count_zeros_in_disk(series: TruncatedSeries, center, radius: float, u=None, config: RootConfig = RootConfig()) -> int:
    """Count zeros (with multiplicity) in |z - center| <= radius.

    With u supplied, counts zeros of the pushforward f(phi(u, .))
    instead of f itself. The winding number is computed by the
    equal-weight trapezoid rule on config.quadrature_nodes points; if it
    misses every integer by more than 0.1 the node count is doubled, up
    to three times, before giving up.

    Raises
    ------
    OutOfCertifiedDisk
        If the contour (or its phi-image) leaves the certified disk.
    ContourTooClose
        If |g| on the contour drops below 1e3 * machine epsilon times
        its maximum there; callers should jitter the radius.
    QuadratureUnresolved
        If the winding number never settles near an integer.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    cc = as_complex(center)
    uu = None if u is None else as_complex(u)
    if uu is not None and abs(cc) + radius >= 1.0:
        raise OutOfCertifiedDisk("contour must stay inside the unit disk to push forward")
    _certify_contour(series, cc, radius, uu)

    coeffs = np.asarray(series.coefficients, dtype=complex)
    dcoeffs = coeffs[1:] * np.arange(1, coeffs.size) if coeffs.size > 1 else np.zeros(1, dtype=complex)

    nodes = config.quadrature_nodes
    deviation = None
    for _ in range(_MAX_DOUBLINGS + 1):
        ring = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        z = cc + ring
        if uu is None:
            w = z
            jac = ring
        else:
            w = (z - uu) / (1.0 - uu.conjugate() * z)
            jac = ring * (1.0 - abs(uu) ** 2) / (1.0 - uu.conjugate() * z) ** 2
        g = _horner(coeffs, w)
        scale = float(np.max(np.abs(g)))
        if scale == 0.0:
            raise DegenerateInput("function vanishes identically on the contour")
        if float(np.min(np.abs(g))) < _CONTOUR_FLOOR * scale:
            raise ContourTooClose(
                f"min |g| on contour below {_CONTOUR_FLOOR:.1e} of its max"
            )
        gp = _horner(dcoeffs, w)
        winding = complex(np.mean(jac * gp / g))
        nearest = int(round(winding.real))
        deviation = abs(winding - nearest)
        # a count outside [0, degree] means the quadrature has not converged
        if deviation <= 0.1 and 0 <= nearest <= coeffs.size - 1:
            return nearest
        nodes *= 2
    raise QuadratureUnresolved(
        f"winding number off the integers by {deviation:.3g} at {nodes // 2} nodes"
    )


def count_zeros_robust(series: TruncatedSeries, center, radius: float, u=None, config: RootConfig = RootConfig(), jitter_key: int = 0) -> int:
    """count_zeros_in_disk with deterministic radius jitter on failure.

    Zeros sitting (numerically) on the contour make the plain count
    raise; this retries with the radius perturbed by up to +-1%, the
    perturbation being a pure function of jitter_key and the attempt
    number. The O(1%) change of the counting disk is part of the Monte
    Carlo error budget of callers.
    """
    last: Exception | None = None
    for attempt in range(4):
        if attempt == 0:
            r = radius
        else:
            v = derive_stream_index(jitter_key, attempt)
            r = radius * (1.0 + 0.01 * (2.0 * (v / 2.0**64) - 1.0))
        try:
            return count_zeros_in_disk(series, center, r, u, config)
        except (ContourTooClose, QuadratureUnresolved) as exc:
            last = exc
    raise last

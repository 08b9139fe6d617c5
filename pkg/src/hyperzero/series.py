"""Certified truncations of random power series on the disk.

A random analytic function f(z) = sum_k X_k z^k with E|X_k|^2 = 1 has
mean-square tail sum_{k>N} r^{2k} = r^{2(N+1)} / (1 - r^2) on |z| = r.
Truncation policies pick the degree N so the root of that quantity,
inflated by a safety factor, drops below a tolerance; evaluation is then
only permitted inside the certified radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coeffs import SeededStream, sample_coefficients
from .errors import (
    LengthMismatch,
    OutOfCertifiedDisk,
    PolicyInfeasible,
    UnsupportedExponent,
)
from .hypgeom import as_complex, delta, mobius

__all__ = [
    "TruncationPolicy",
    "TruncatedSeries",
    "required_degree",
    "tail_rms_bound",
    "evaluate",
    "evaluate_derivative",
    "pushforward_evaluate",
    "alpha_coefficients",
    "alpha_power_sum",
]

_MAX_DEGREE = 200_000


@dataclass(frozen=True)
class TruncationPolicy:
    """Requested certification: tail below tail_tolerance on target_radius.

    safety_factor inflates the tail bound before comparing, so the
    certified error sits well under the tolerance actually quoted.
    """

    target_radius: float
    tail_tolerance: float = 1e-10
    safety_factor: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.target_radius < 1.0:
            raise PolicyInfeasible(f"target radius {self.target_radius} not in (0, 1)")
        if self.tail_tolerance <= 0.0:
            raise PolicyInfeasible("tail tolerance must be positive")
        if self.safety_factor < 1.0:
            raise PolicyInfeasible("safety factor must be at least 1")


def tail_rms_bound(radius: float, degree: int) -> float:
    """Root-mean-square tail of a unit-variance series beyond degree."""
    return radius ** (degree + 1) / math.sqrt(1.0 - radius * radius)


def required_degree(policy: TruncationPolicy) -> int:
    """Smallest degree N whose safety-inflated tail bound meets the policy."""
    r = policy.target_radius
    budget = policy.tail_tolerance / policy.safety_factor
    # closed-form starting point, then settle the off-by-one cases exactly
    target = budget * math.sqrt(1.0 - r * r)
    if target >= r:
        n = 0
    else:
        n = max(0, math.ceil(math.log(target) / math.log(r)) - 1)
    if n > _MAX_DEGREE:
        raise PolicyInfeasible(
            f"degree {n} exceeds the practical cap {_MAX_DEGREE} "
            f"(radius {r}, tolerance {policy.tail_tolerance})"
        )
    while policy.safety_factor * tail_rms_bound(r, n) > policy.tail_tolerance:
        n += 1
        if n > _MAX_DEGREE:
            raise PolicyInfeasible(
                f"degree {n} exceeds the practical cap {_MAX_DEGREE} "
                f"(radius {r}, tolerance {policy.tail_tolerance})"
            )
    while n > 0 and policy.safety_factor * tail_rms_bound(r, n - 1) <= policy.tail_tolerance:
        n -= 1
    return n


@dataclass(frozen=True)
class TruncatedSeries:
    """Degree-N truncation of a coefficient stream, with tail certificate.

    coefficients[k] multiplies z^k. tail_bound is the RMS size of the
    dropped tail on |z| = tail_radius; evaluation outside that radius is
    refused. stream is None for synthetic series built directly from
    explicit coefficients.
    """

    coefficients: np.ndarray
    law_tag: str
    stream: Optional[SeededStream]
    tail_radius: float
    tail_bound: float

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d array")
        object.__setattr__(self, "coefficients", coeffs)
        if not 0.0 < self.tail_radius < 1.0:
            raise ValueError(f"tail radius {self.tail_radius} not in (0, 1)")
        if self.tail_bound < tail_rms_bound(self.tail_radius, self.degree) * (1.0 - 1e-12):
            raise ValueError("tail bound understates the mean-square tail")

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    @classmethod
    def sample(cls, law, stream: SeededStream, policy: TruncationPolicy) -> "TruncatedSeries":
        """Draw a truncation whose degree satisfies the policy."""
        n = required_degree(policy)
        coeffs = sample_coefficients(law, n + 1, stream)
        return cls(
            coefficients=coeffs,
            law_tag=law.tag,
            stream=stream,
            tail_radius=policy.target_radius,
            tail_bound=tail_rms_bound(policy.target_radius, n),
        )

    @classmethod
    def from_coefficients(cls, coefficients, tail_radius: float, law_tag: str = "explicit") -> "TruncatedSeries":
        """Wrap explicit coefficients; the tail bound is the generic one."""
        coeffs = np.asarray(coefficients, dtype=complex)
        return cls(
            coefficients=coeffs,
            law_tag=law_tag,
            stream=None,
            tail_radius=tail_radius,
            tail_bound=tail_rms_bound(tail_radius, coeffs.size - 1),
        )


def _check_inside(series: TruncatedSeries, w) -> None:
    limit = series.tail_radius * (1.0 + 1e-12)
    worst = np.max(np.abs(w))
    if worst > limit:
        raise OutOfCertifiedDisk(
            f"|z| = {worst:.17g} exceeds certified radius {series.tail_radius:.17g}"
        )


def _horner(coeffs: np.ndarray, w):
    acc = np.zeros_like(w, dtype=complex) if isinstance(w, np.ndarray) else 0.0 + 0.0j
    for c in coeffs[::-1]:
        acc = acc * w + c
    return acc


def evaluate(series: TruncatedSeries, z):
    """Evaluate the truncation at z (scalar or array) by Horner's rule."""
    w = np.asarray(z, dtype=complex) if isinstance(z, np.ndarray) else complex(z)
    _check_inside(series, w)
    return _horner(series.coefficients, w)


def evaluate_derivative(series: TruncatedSeries, z):
    """Evaluate the derivative of the truncation at z."""
    w = np.asarray(z, dtype=complex) if isinstance(z, np.ndarray) else complex(z)
    _check_inside(series, w)
    c = series.coefficients
    if c.size == 1:
        return np.zeros_like(w) if isinstance(w, np.ndarray) else 0.0 + 0.0j
    dc = c[1:] * np.arange(1, c.size)
    return _horner(dc, w)


def pushforward_evaluate(series: TruncatedSeries, u, z):
    """Normalized pushforward f(phi(u, z)) / delta(u, z).

    For the built-in laws this has unit-variance increments in the sense
    that E |pushforward|^2 = 1 / (1 - |z|^2) independently of u.
    """
    w = complex(mobius(u, z))
    value = evaluate(series, w)
    return value / delta(u, z)


def alpha_coefficients(u, points, weights, degree: int) -> np.ndarray:
    """Coefficient functionals of a weighted pushforward combination.

    Entry k is sum_i weights[i] * phi(u, z_i)^k / delta(u, z_i): the
    linear statistic sum_i weights[i] f(phi(u, z_i)) / delta(u, z_i)
    equals sum_k alpha_k X_k for a series with coefficients X_k.
    """
    pts = [as_complex(p) for p in points]
    lams = [complex(w) for w in weights]
    if len(pts) != len(lams):
        raise LengthMismatch(f"{len(pts)} points vs {len(lams)} weights")
    if not pts:
        raise ValueError("need at least one point")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    phi = np.array([complex(mobius(u, p)) for p in pts])
    scale = np.array([lam / delta(u, p) for lam, p in zip(lams, pts)])
    powers = phi[:, None] ** np.arange(degree + 1)[None, :]
    return (scale[:, None] * powers).sum(axis=0)


def alpha_power_sum(u, z, exponent) -> float:
    """Closed form of sum_k |phi(u,z)^k / delta(u,z)|^p for p in {2, 4}.

    p = 2: collapses to 1 / (1 - |z|^2), independent of u.
    p = 4: (1 - |u|^2) / ((1 - |z|^2) (|1 - conj(u) z|^2 + |z - u|^2)),
           which decreases to 0 as |u| -> 1 for fixed z.
    """
    p = float(exponent)
    uu = as_complex(u)
    zz = as_complex(z)
    if p == 2.0:
        return 1.0 / (1.0 - abs(zz) ** 2)
    if p == 4.0:
        num = 1.0 - abs(uu) ** 2
        den = (1.0 - abs(zz) ** 2) * (
            abs(1.0 - uu.conjugate() * zz) ** 2 + abs(zz - uu) ** 2
        )
        return num / den
    raise UnsupportedExponent(f"no closed form for exponent {exponent}")

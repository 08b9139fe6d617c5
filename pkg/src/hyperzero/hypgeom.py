"""Hyperbolic disk geometry and the covariance kernels built on it.

All maps live on the open unit disk. The disk automorphism used
throughout is phi(u, z) = (z - u) / (1 - conj(u) z), which swaps u and 0
and is its own inverse up to negating u. The normalizer
delta(u, z) = (1 - conj(u) z) / sqrt(1 - |u|^2) turns pushforwards along
phi into unit-variance objects; see q_covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DuplicatePoints, InvalidDiskPoint

__all__ = [
    "DiskPoint",
    "KernelMatrix",
    "as_complex",
    "as_disk_point",
    "mobius",
    "mobius_inverse",
    "mobius_derivative",
    "mobius_image_circle",
    "delta",
    "q_covariance",
    "cross_covariance",
    "bergman_kernel",
    "kernel_determinant",
    "pseudo_hyperbolic_distance",
]

_DUPLICATE_TOL = 1e-12
_MAX_DETERMINANT_SIZE = 12


@dataclass(frozen=True)
class DiskPoint:
    """A point strictly inside the unit disk."""

    re: float
    im: float = 0.0

    def __post_init__(self):
        re = float(self.re)
        im = float(self.im)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if not re * re + im * im < 1.0:
            raise InvalidDiskPoint(f"({re}, {im}) is not inside the unit disk")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return abs(complex(self.re, self.im))


def as_complex(point) -> complex:
    """Coerce a DiskPoint, complex, or real to a complex number."""
    if isinstance(point, DiskPoint):
        return point.z
    return complex(point)


def as_disk_point(point) -> DiskPoint:
    """Coerce to DiskPoint, validating strict disk membership."""
    if isinstance(point, DiskPoint):
        return point
    w = complex(point)
    return DiskPoint(w.real, w.imag)


def mobius(u, z) -> DiskPoint:
    """phi(u, z) = (z - u) / (1 - conj(u) z); maps u to 0."""
    uu = as_complex(u)
    zz = as_complex(z)
    w = (zz - uu) / (1.0 - uu.conjugate() * zz)
    return DiskPoint(w.real, w.imag)


def mobius_inverse(u, w) -> DiskPoint:
    """Inverse of phi(u, .), which is phi(-u, .)."""
    return mobius(-as_complex(u), w)


def mobius_derivative(u, z) -> complex:
    """d/dz of phi(u, z): (1 - |u|^2) / (1 - conj(u) z)^2."""
    uu = as_complex(u)
    zz = as_complex(z)
    d = 1.0 - uu.conjugate() * zz
    return (1.0 - abs(uu) ** 2) / (d * d)

def mobius_image_circle(u, center, radius) -> tuple[complex, float]:
    """Image of the circle |z - center| = radius under phi(u, .).

    Mobius maps send circles to circles; returns (center, radius) of the
    image. The image center is phi(u, .) applied to the reflection of the
    pole 1/conj(u) across the source circle. Used to certify that a
    contour's image stays inside a series' certified disk, via
    max |phi| = |image center| + image radius.
    """
    uu = as_complex(u)
    c = as_complex(center)
    r = float(radius)
    if uu == 0:
        return c, r
    pole = 1.0 / uu.conjugate()
    # reflection of the pole in the source circle; lands strictly inside it
    mirror = c + r * r / (pole - c).conjugate()
    ic = (mirror - uu) / (1.0 - uu.conjugate() * mirror)
    edge = (c + r - uu) / (1.0 - uu.conjugate() * (c + r))
    return ic, abs(edge - ic)


def delta(u, z) -> complex:
    """Normalizer (1 - conj(u) z) / sqrt(1 - |u|^2)."""
    uu = as_complex(u)
    zz = as_complex(z)
    return (1.0 - uu.conjugate() * zz) / np.sqrt(1.0 - abs(uu) ** 2)


def q_covariance(z1, z2) -> complex:
    """Covariance of normalized pushforwards: 1 / (1 - z1 conj(z2)).

    Independent of the basepoint u; the direct geometric sum
    sum_k phi(u,z1)^k conj(phi(u,z2))^k / (delta(u,z1) conj(delta(u,z2)))
    collapses to this closed form for every u.
    """
    a = as_complex(z1)
    b = as_complex(z2)
    return 1.0 / (1.0 - a * b.conjugate())


def cross_covariance(u1, z1, u2, z2) -> complex:
    """Covariance across two basepoints u1, u2.

    Equals 1 / (delta(u1,z1) conj(delta(u2,z2)) (1 - phi(u1,z1) conj(phi(u2,z2)))).
    Its modulus tends to 0 exactly when the pseudo-hyperbolic distance
    between u1 and u2 tends to 1, which is the quantitative form of
    asymptotic independence of the two pushforwards.
    """
    p1 = complex(mobius(u1, z1))
    p2 = complex(mobius(u2, z2))
    d1 = delta(u1, z1)
    d2 = delta(u2, z2)
    return 1.0 / (d1 * d2.conjugate() * (1.0 - p1 * p2.conjugate()))


def bergman_kernel(z, w, c: float = 1.0) -> complex:
    """Two-point kernel c / (1 - z conj(w))^2.

    The normalization c is a free parameter here; the package calibrates
    it empirically (see pointproc.correlation_limit) rather than fixing a
    convention a priori. Default c = 1.
    """
    a = as_complex(z)
    b = as_complex(w)
    d = 1.0 - a * b.conjugate()
    return c / (d * d)


def pseudo_hyperbolic_distance(u1, u2) -> float:
    """|phi(u1, u2)|, symmetric in its arguments."""
    return abs(complex(mobius(u1, u2)))


@dataclass(frozen=True)
class KernelMatrix:
    """Hermitian kernel matrix K[i, j] = bergman_kernel(z_i, z_j, c)."""

    points: tuple[DiskPoint, ...]
    normalization: float
    entries: np.ndarray

    @classmethod
    def build(cls, points, c: float = 1.0) -> "KernelMatrix":
        pts = tuple(as_disk_point(p) for p in points)
        z = np.array([p.z for p in pts], dtype=complex)
        d = 1.0 - z[:, None] * z[None, :].conjugate()
        entries = c / (d * d)
        # enforce exact Hermitian symmetry against rounding asymmetry
        entries = 0.5 * (entries + entries.conjugate().T)
        return cls(points=pts, normalization=float(c), entries=entries)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def is_psd(self, tol_factor: float = 1e-10) -> bool:
        tol = tol_factor * float(np.trace(self.entries).real)
        return self.min_eigenvalue() >= -tol


def kernel_determinant(points, c: float = 1.0) -> float:
    """det of the kernel matrix over the given points.

    Pivoted Hermitian elimination (LDL* with diagonal pivoting); the
    determinant is the product of the real pivots. Restricted to at most
    12 points, which covers every joint-intensity experiment shipped
    here. Result is clamped to be meaningful as a real number only; a
    slightly negative value within rounding of zero is possible for
    nearly coincident points.
    """
    pts = [as_disk_point(p) for p in points]
    n = len(pts)
    if n < 1:
        raise ValueError("need at least one point")
    if n > _MAX_DETERMINANT_SIZE:
        raise ValueError(f"kernel determinant limited to {_MAX_DETERMINANT_SIZE} points, got {n}")
    z = [p.z for p in pts]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < _DUPLICATE_TOL:
                raise DuplicatePoints(f"points {i} and {j} coincide within {_DUPLICATE_TOL}")

    a = KernelMatrix.build(pts, c).entries.astype(complex)
    det = 1.0
    for k in range(n):
        # symmetric pivot: move the largest remaining diagonal entry to (k, k)
        p = k + int(np.argmax(a.diagonal().real[k:]))
        if p != k:
            a[[k, p], :] = a[[p, k], :]
            a[:, [k, p]] = a[:, [p, k]]
        pivot = a[k, k].real
        det *= pivot
        if pivot == 0.0:
            break
        col = a[k + 1 :, k] / pivot
        a[k + 1 :, k + 1 :] -= np.outer(col, a[k, k + 1 :])
    return float(det)

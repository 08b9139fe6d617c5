"""Disk geometry and kernel algebra against independent oracles."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperzero.errors import DegenerateInput, DuplicatePoints, InvalidDiskPoint
from hyperzero.hypgeom import (
    DiskPoint,
    KernelMatrix,
    bergman_kernel,
    cross_covariance,
    delta,
    kernel_determinant,
    mobius,
    mobius_derivative,
    mobius_image_circle,
    mobius_inverse,
    pseudo_hyperbolic_distance,
    q_covariance,
)


def disk_points(max_modulus=0.95):
    """Complex numbers strictly inside the disk, bounded away from 1."""
    return st.complex_numbers(max_magnitude=max_modulus, allow_nan=False, allow_infinity=False)


class TestDiskPoint:
    def test_accepts_interior_point(self):
        p = DiskPoint(0.3, -0.4)
        assert complex(p) == 0.3 - 0.4j
        assert abs(p) == pytest.approx(0.5)

    @pytest.mark.parametrize("re,im", [(1.0, 0.0), (0.8, 0.6), (0.0, -1.0), (2.0, 0.0)])
    def test_rejects_boundary_and_exterior(self, re, im):
        with pytest.raises(InvalidDiskPoint):
            DiskPoint(re, im)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidDiskPoint):
            DiskPoint(math.nan, 0.0)


class TestMobius:
    def test_frozen_value(self):
        # (z - u)/(1 - conj(u) z) at u=0.5, z=0.2i, computed separately
        # with 30-digit arithmetic
        got = complex(mobius(0.5, 0.2j))
        assert got == pytest.approx(-0.51485148514851485 + 0.14851485148514851j, abs=1e-15)

    def test_u_maps_to_origin(self):
        assert complex(mobius(0.3 + 0.1j, 0.3 + 0.1j)) == 0.0

    def test_origin_maps_to_minus_u(self):
        u = 0.3 - 0.2j
        assert complex(mobius(u, 0.0)) == pytest.approx(-u)

    @given(u=disk_points(), z=disk_points())
    def test_inverse_roundtrip(self, u, z):
        w = complex(mobius(u, z))
        assert abs(w) < 1.0
        back = complex(mobius_inverse(u, w))
        assert back == pytest.approx(z, abs=1e-12)

    @given(u=disk_points(), z=disk_points())
    def test_modulus_identity(self, u, z):
        # 1 - |phi|^2 == (1-|u|^2)(1-|z|^2)/|1-conj(u) z|^2
        w = complex(mobius(u, z))
        lhs = 1.0 - abs(w) ** 2
        rhs = (1 - abs(u) ** 2) * (1 - abs(z) ** 2) / abs(1 - u.conjugate() * z) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_derivative_frozen_value(self):
        got = mobius_derivative(0.5, 0.2j)
        assert got == pytest.approx(0.72786981668463876 + 0.14704440741103813j, abs=1e-15)

    @given(u=disk_points(0.9), z=disk_points(0.9))
    @settings(max_examples=50)
    def test_derivative_matches_finite_difference(self, u, z):
        h = 1e-7
        fd = (complex(mobius(u, z + h)) - complex(mobius(u, z - h))) / (2 * h)
        assert mobius_derivative(u, z) == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestImageCircle:
    @given(u=disk_points(0.9), c=disk_points(0.6), r=st.floats(0.01, 0.3))
    @settings(max_examples=60)
    def test_image_circle_contains_mapped_contour(self, u, c, r):
        if abs(c) + r >= 0.99:
            return
        center, radius = mobius_image_circle(u, c, r)
        theta = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        ring = c + r * np.exp(1j * theta)
        images = (ring - u) / (1 - np.conj(u) * ring)
        dev = np.abs(np.abs(images - center) - radius)
        assert dev.max() < 1e-10

    def test_identity_for_u_zero(self):
        center, radius = mobius_image_circle(0.0, 0.2 + 0.1j, 0.15)
        assert center == pytest.approx(0.2 + 0.1j)
        assert radius == pytest.approx(0.15)


class TestCovariances:
    def test_q_frozen_value(self):
        got = q_covariance(0.3, -0.2 + 0.4j)
        assert got == pytest.approx(0.93145869947275923 - 0.10544815465729350j, abs=1e-15)

    @pytest.mark.parametrize("u", [0.0, 0.5, 0.9j, -0.7 + 0.2j, 0.99])
    def test_q_is_u_invariant_by_direct_sum(self, u):
        # normalized covariance summed term by term; Q must not see u
        z1, z2 = 0.3, -0.2 + 0.4j
        f1 = complex(mobius(u, z1))
        f2 = complex(mobius(u, z2))
        d = delta(u, z1) * delta(u, z2).conjugate()
        ratio = f1 * f2.conjugate()
        total = 0.0 + 0.0j
        power = 1.0 + 0.0j
        for _ in range(4000):
            total += power
            power *= ratio
        assert total / d == pytest.approx(q_covariance(z1, z2), abs=1e-11)

    def test_cross_covariance_frozen_value(self):
        got = cross_covariance(0.9, 0.0, -0.9, 0.0)
        assert got == pytest.approx(0.10497237569060773, abs=1e-15)

    def test_cross_covariance_direct_sum(self):
        u1, z1 = 0.5, 0.2 + 0.1j
        u2, z2 = -0.3j, -0.4
        f1 = complex(mobius(u1, z1))
        f2 = complex(mobius(u2, z2))
        d = delta(u1, z1) * delta(u2, z2).conjugate()
        ratio = f1 * f2.conjugate()
        total = sum(ratio**k for k in range(2000))
        assert total / d == pytest.approx(cross_covariance(u1, z1, u2, z2), abs=1e-12)

    def test_cross_reduces_to_q_at_equal_u(self):
        got = cross_covariance(0.6j, 0.3, 0.6j, -0.2 + 0.4j)
        assert got == pytest.approx(q_covariance(0.3, -0.2 + 0.4j), abs=1e-13)

    @given(z=disk_points())
    def test_q_diagonal_is_real_and_at_least_one(self, z):
        q = q_covariance(z, z)
        assert q.imag == pytest.approx(0.0, abs=1e-14)
        assert q.real >= 1.0 - 1e-12

    def test_delta_frozen_value(self):
        assert delta(0.5, 0.2j) == pytest.approx(
            1.1547005383792515 - 0.11547005383792515j, abs=1e-15
        )


class TestPseudoHyperbolic:
    def test_frozen_value(self):
        assert pseudo_hyperbolic_distance(0.9, -0.9) == pytest.approx(
            0.99447513812154696, abs=1e-15
        )

    @given(a=disk_points(), b=disk_points())
    def test_symmetry(self, a, b):
        assert pseudo_hyperbolic_distance(a, b) == pytest.approx(
            pseudo_hyperbolic_distance(b, a), abs=1e-12
        )

    @given(a=disk_points())
    def test_identity_is_zero(self, a):
        assert pseudo_hyperbolic_distance(a, a) == 0.0

    @given(u=disk_points(0.9), a=disk_points(0.9), b=disk_points(0.9))
    @settings(max_examples=50)
    def test_mobius_invariance(self, u, a, b):
        d0 = pseudo_hyperbolic_distance(a, b)
        d1 = pseudo_hyperbolic_distance(complex(mobius(u, a)), complex(mobius(u, b)))
        assert d1 == pytest.approx(d0, abs=1e-10)


def _det_by_cofactors(matrix):
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    total = 0.0 + 0.0j
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        total += (-1) ** j * matrix[0][j] * _det_by_cofactors(minor)
    return total


class TestKernel:
    def test_bergman_frozen_values(self):
        assert bergman_kernel(0.0, 0.0) == pytest.approx(1.0)
        assert bergman_kernel(0.5, 0.5) == pytest.approx(16.0 / 9.0)
        assert bergman_kernel(0.5, 0.5, c=2.5) == pytest.approx(2.5 * 16.0 / 9.0)

    def test_two_point_determinant_frozen(self):
        # det [[c, c], [c, 16c/9]] = 7 c^2 / 9
        assert kernel_determinant([0.0, 0.5]) == pytest.approx(7.0 / 9.0, rel=1e-14)
        assert kernel_determinant([0.0, 0.5], c=3.0) == pytest.approx(7.0, rel=1e-14)

    def test_three_point_determinant_vs_cofactor_expansion(self):
        pts = [0.1 + 0.2j, -0.3, 0.4 - 0.1j]
        matrix = [[bergman_kernel(a, b) for b in pts] for a in pts]
        oracle = _det_by_cofactors(matrix)
        assert oracle.imag == pytest.approx(0.0, abs=1e-12)
        assert kernel_determinant(pts) == pytest.approx(oracle.real, rel=1e-10)

    @given(
        pts=st.lists(disk_points(0.8), min_size=1, max_size=5),
    )
    @settings(max_examples=60)
    def test_determinant_nonnegative_and_permutation_invariant(self, pts):
        # PSD kernel: det >= 0 and symmetric under relabeling
        for i, a in enumerate(pts):
            for b in pts[i + 1:]:
                if abs(a - b) < 1e-6:
                    return
        d1 = kernel_determinant(pts)
        d2 = kernel_determinant(list(reversed(pts)))
        assert d1 >= -1e-10 * max(1.0, abs(d1))
        assert d2 == pytest.approx(d1, rel=1e-9, abs=1e-12)

    def test_determinant_strictly_below_product_of_diagonals(self):
        # repulsion: det2 < K11 K22 for distinct points
        pts = [0.0, 0.15]
        det2 = kernel_determinant(pts)
        prod = (bergman_kernel(0.0, 0.0) * bergman_kernel(0.15, 0.15)).real
        assert det2 < prod
        assert det2 / prod == pytest.approx(0.04449375, rel=1e-12)

    def test_duplicate_points_rejected(self):
        with pytest.raises(DuplicatePoints):
            kernel_determinant([0.2, 0.2])

    def test_too_many_points_rejected(self):
        pts = [0.05 * k * cmath.exp(0.7j * k) for k in range(1, 14)]
        with pytest.raises(ValueError):
            kernel_determinant(pts)

    def test_kernel_matrix_psd_check(self):
        km = KernelMatrix.build([0.1, -0.2 + 0.3j, 0.5], c=1.0)
        assert km.is_psd()
        assert km.min_eigenvalue() > 0.0

    def test_boundary_approach_blows_up_diagonal(self):
        # K(z, z) grows like (1-|z|^2)^-2 toward the boundary
        values = [bergman_kernel(r, r) * (1 - r * r) ** 2 for r in (0.5, 0.9, 0.99)]
        assert values == pytest.approx([1.0, 1.0, 1.0], rel=1e-12)

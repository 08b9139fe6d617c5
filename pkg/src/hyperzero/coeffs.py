"""Coefficient laws and reproducible random streams.

Every built-in law is normalized so that, writing X = A + iB,

    E[X] = 0,   E[A^2] = E[B^2] = 1/2,   E[AB] = 0,   E[|X|^2] = 1.

Streams are counter-based (Philox) and keyed by (master_seed,
stream_index), so any trial of any experiment can be regenerated in
isolation and aggregation order never matters.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CoefficientLaw",
    "SeededStream",
    "MomentReport",
    "derive_stream_index",
    "sample_coefficients",
    "verify_moments",
]

_MASK64 = (1 << 64) - 1

_KINDS = ("ComplexGaussian", "ComplexRademacher", "UniformSquare", "SparseThreePoint")

_NAMES = {
    "gaussian": "ComplexGaussian",
    "rademacher": "ComplexRademacher",
    "uniform": "UniformSquare",
    "sparse": "SparseThreePoint",
}

# the four unit-modulus diagonal atoms (+-1 +- i)/sqrt(2)
_DIAGONAL_ATOMS = np.array(
    [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=complex
) / math.sqrt(2.0)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_stream_index(*parts) -> int:
    """Fold identifiers (ints or strings) into a 64-bit stream index.

    Strings are hashed with blake2b so the result is stable across
    interpreter runs; integers are used as-is. Successive parts are
    absorbed through a splitmix64 chain.
    """
    acc = 0
    for part in parts:
        if isinstance(part, str):
            v = int.from_bytes(
                hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest(), "little"
            )
        elif isinstance(part, (int, np.integer)):
            v = int(part) & _MASK64
        else:
            raise TypeError(f"stream index parts must be int or str, got {type(part)!r}")
        acc = _splitmix64(acc ^ v)
    return acc


@dataclass(frozen=True)
class SeededStream:
    """Handle to one reproducible random stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & _MASK64)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=(self.master_seed, self.stream_index))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, *parts) -> "SeededStream":
        return SeededStream(self.master_seed, derive_stream_index(self.stream_index, *parts))


@dataclass(frozen=True)
class CoefficientLaw:
    """One of the built-in coefficient distributions.

    kind is one of ComplexGaussian, ComplexRademacher, UniformSquare,
    SparseThreePoint. parameters currently holds only the atom
    probability p of the sparse law.
    """

    kind: str
    parameters: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "SparseThreePoint":
            p = self.parameters[0] if self.parameters else 0.1
            if not 0.0 < p <= 1.0:
                raise ValueError(f"sparse atom probability must be in (0, 1], got {p}")
            object.__setattr__(self, "parameters", (float(p),))
        elif self.parameters:
            raise ValueError(f"{self.kind} takes no parameters")

    @classmethod
    def gaussian(cls) -> "CoefficientLaw":
        return cls("ComplexGaussian")

    @classmethod
    def rademacher(cls) -> "CoefficientLaw":
        return cls("ComplexRademacher")

    @classmethod
    def uniform_square(cls) -> "CoefficientLaw":
        return cls("UniformSquare")

    @classmethod
    def sparse_three_point(cls, p: float = 0.1) -> "CoefficientLaw":
        return cls("SparseThreePoint", (p,))

    @classmethod
    def from_name(cls, name: str, **params) -> "CoefficientLaw":
        """Resolve a CLI-style name: gaussian, rademacher, uniform, sparse."""
        key = name.strip().lower()
        if key not in _NAMES:
            raise ValueError(f"unknown law name {name!r}; expected one of {sorted(_NAMES)}")
        if key == "sparse":
            return cls.sparse_three_point(float(params.pop("p", 0.1)))
        if params:
            raise ValueError(f"law {name!r} takes no parameters, got {params}")
        return cls(_NAMES[key])

    @property
    def tag(self) -> str:
        if self.kind == "SparseThreePoint":
            return f"SparseThreePoint(p={self.parameters[0]})"
        return self.kind

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw count i.i.d. coefficients as a complex array."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        if self.kind == "ComplexGaussian":
            flat = rng.standard_normal(2 * count) * math.sqrt(0.5)
            return flat[0::2] + 1j * flat[1::2]
        if self.kind == "ComplexRademacher":
            return _DIAGONAL_ATOMS[rng.integers(0, 4, size=count)]
        if self.kind == "UniformSquare":
            half = math.sqrt(1.5)
            flat = rng.uniform(-half, half, 2 * count)
            return flat[0::2] + 1j * flat[1::2]
        # SparseThreePoint: 0 with prob 1-p, else a diagonal atom scaled
        # by 1/sqrt(p); both draws happen unconditionally so the stream
        # position does not depend on the values drawn.
        p = self.parameters[0]
        keep = rng.random(count) < p
        atoms = _DIAGONAL_ATOMS[rng.integers(0, 4, size=count)]
        return np.where(keep, atoms / math.sqrt(p), 0.0 + 0.0j)


def sample_coefficients(law, count: int, stream: SeededStream) -> np.ndarray:
    """Sample count coefficients from law on the given stream."""
    return law.sample(count, stream.generator())


@dataclass(frozen=True)
class MomentReport:
    """Empirical moments of a coefficient sample with standard errors.

    Each (value, std_error) pair is compared against the normalization
    targets; deviations beyond 4 standard errors are listed in flags.
    """

    samples: int
    mean: complex
    mean_se: float
    re_variance: float
    re_variance_se: float
    im_variance: float
    im_variance_se: float
    cross_covariance: float
    cross_covariance_se: float
    abs_sq_mean: float
    abs_sq_mean_se: float
    flags: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.flags


def verify_moments(law, samples: int, stream: SeededStream) -> MomentReport:
    """Estimate the defining moments of law and flag 4-sigma deviations."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    x = law.sample(samples, stream.generator())
    a = x.real
    b = x.imag
    n = samples

    def se(values) -> float:
        return float(np.std(values, ddof=1) / math.sqrt(n))

    mean = complex(np.mean(x))
    mean_se = math.hypot(se(a), se(b))
    re_var = float(np.mean(a * a))
    im_var = float(np.mean(b * b))
    cross = float(np.mean(a * b))
    abs_sq = float(np.mean(a * a + b * b))

    checks = [
        ("mean.re", np.mean(a), 0.0, se(a)),
        ("mean.im", np.mean(b), 0.0, se(b)),
        ("re_variance", re_var, 0.5, se(a * a)),
        ("im_variance", im_var, 0.5, se(b * b)),
        ("cross_covariance", cross, 0.0, se(a * b)),
        ("abs_sq_mean", abs_sq, 1.0, se(a * a + b * b)),
    ]
    flags = []
    for name, value, target, sigma in checks:
        gap = abs(value - target)
        # deviations at accumulation-rounding scale are never meaningful,
        # whatever the (possibly artificial) spread says
        if gap <= 1e-12 * max(1.0, abs(target)):
            continue
        if sigma == 0.0:
            flags.append(f"{name}: {value} != {target} with zero spread")
        elif gap > 4.0 * sigma:
            flags.append(f"{name}: {value:.6g} vs {target} ({gap/sigma:.1f} se)")

    return MomentReport(
        samples=n,
        mean=mean,
        mean_se=mean_se,
        re_variance=re_var,
        re_variance_se=se(a * a),
        im_variance=im_var,
        im_variance_se=se(b * b),
        cross_covariance=cross,
        cross_covariance_se=se(a * b),
        abs_sq_mean=abs_sq,
        abs_sq_mean_se=se(a * a + b * b),
        flags=tuple(flags),
    )

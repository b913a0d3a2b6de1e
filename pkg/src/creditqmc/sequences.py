"""Point sources on the unit cube: pseudo-random, base-2 Niederreiter, hybrid.

Every source is index-addressable: ``points(start, count)`` returns the rows
``start .. start+count-1`` of the stream regardless of how the source has
been used before, and ``next_point`` walks the same stream one row at a time.
The simulation engine relies on this to evaluate index ranges independently.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

__all__ = [
    "CapacityError",
    "DigitalSequenceGenerator",
    "HybridScheme",
    "PseudoRandomStream",
    "build_generator_matrices",
    "load_irreducible_polynomials",
    "next_digital",
    "next_hybrid",
    "next_pseudo",
]

DEFAULT_BIT_PRECISION = 52


class CapacityError(ValueError):
    """Requested more digital-sequence dimensions than the polynomial table holds."""


# --------------------------------------------------------------------------- #
# Pseudo-random                                                               #
# --------------------------------------------------------------------------- #


class PseudoRandomStream:
    """Seeded uniform stream backed by numpy's PCG64.

    Point ``n`` consumes raw 64-bit outputs ``n*dimension .. (n+1)*dimension-1``
    of the generator; each output becomes one double ``(x >> 11) * 2**-53``.
    Different ``stream`` ids start from ``PCG64(seed).jumped(stream)``, which
    places them ``stream * 2**127``-ish steps apart in the same period.
    """

    def __init__(self, seed: int, dimension: int, stream: int = 0):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if dimension < 0:
            raise ValueError(f"dimension must be >= 0, got {dimension}")
        if stream < 0:
            raise ValueError(f"stream must be >= 0, got {stream}")
        self.seed = int(seed)
        self.dimension = int(dimension)
        self.stream = int(stream)
        bg = np.random.PCG64(self.seed)
        if self.stream:
            bg = bg.jumped(self.stream)
        self._origin = bg.state
        self.index = 0

    def _generator_at(self, draw: int) -> np.random.Generator:
        bg = np.random.PCG64()
        bg.state = self._origin
        if draw:
            bg.advance(draw)
        return np.random.Generator(bg)

    def points(self, start: int, count: int) -> np.ndarray:
        if start < 0 or count < 0:
            raise ValueError("start and count must be non-negative")
        if self.dimension == 0:
            return np.empty((count, 0))
        return self._generator_at(start * self.dimension).random((count, self.dimension))

    def next_point(self) -> np.ndarray:
        row = self.points(self.index, 1)[0]
        self.index += 1
        return row

    def seek(self, index: int) -> None:
        self.index = int(index)


def next_pseudo(stream: PseudoRandomStream) -> np.ndarray:
    return stream.next_point()


# --------------------------------------------------------------------------- #
# Niederreiter (base 2)                                                       #
# --------------------------------------------------------------------------- #


@lru_cache(maxsize=1)
def load_irreducible_polynomials() -> tuple[int, ...]:
    """Bundled irreducible polynomials over GF(2) as integer bit masks.

    The file lists one polynomial per line as ``<degree> <bits>``, bits
    written highest power first; ``#`` lines are comments. Order is by degree
    and then by integer value, so ``x`` and ``x + 1`` come first.
    """
    text = resources.files("creditqmc").joinpath("data/irreducible_gf2.txt").read_text()
    polys = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        degree, bits = line.split()
        p = int(bits, 2)
        if p.bit_length() - 1 != int(degree):
            raise ValueError(f"corrupt polynomial table line: {line!r}")
        polys.append(p)
    return tuple(polys)


def _gf2_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _laurent_digits(numerator: int, denominator: int, count: int) -> list[int]:
    """Coefficients of x^-1, x^-2, ... in numerator/denominator over GF(2).

    Requires deg(numerator) < deg(denominator).
    """
    deg = denominator.bit_length() - 1
    top = 1 << deg
    rem = numerator
    digits = []
    for _ in range(count):
        rem <<= 1
        if rem & top:
            digits.append(1)
            rem ^= denominator
        else:
            digits.append(0)
    return digits


def _generator_columns(poly: int, bit_precision: int) -> list[int]:
    """Columns of one Niederreiter generator matrix, packed as integers.

    Row ``j = q*e + k`` (output digit ``j+1``; ``e = deg p``, ``0 <= k < e``)
    holds the Laurent coefficients of ``x**(e-k-1) / p(x)**(q+1)`` at
    ``x**-1, x**-2, ...``, one per input digit. That expansion starts at
    ``x**-(j+1)``, so the matrix is upper triangular with a unit diagonal.
    Column ``r`` packs output digit ``j+1`` at bit ``bit_precision-1-j``.
    """
    e = poly.bit_length() - 1
    rows = []
    power = 1
    digits: list[int] = []
    for j in range(bit_precision):
        k = j % e
        if k == 0:
            power = _gf2_mul(power, poly)
            digits = _laurent_digits(1 << (e - 1), power, bit_precision)
        # x^(e-k-1)/p^(q+1) = x^-k * x^(e-1)/p^(q+1): shift the k=0 digits right by k
        rows.append([0] * k + digits[: bit_precision - k])
    columns = []
    for r in range(bit_precision):
        col = 0
        for j in range(bit_precision):
            col = (col << 1) | rows[j][r]
        columns.append(col)
    return columns


@lru_cache(maxsize=16)
def _packed_columns(dimension: int, bit_precision: int) -> np.ndarray:
    polys = load_irreducible_polynomials()
    if dimension > len(polys):
        raise CapacityError(
            f"dimension {dimension} exceeds the polynomial table capacity {len(polys)}"
        )
    cols = np.array(
        [_generator_columns(p, bit_precision) for p in polys[:dimension]], dtype=np.uint64
    ).reshape(dimension, bit_precision)
    cols.setflags(write=False)
    return cols


def build_generator_matrices(dimension: int, bit_precision: int = DEFAULT_BIT_PRECISION) -> np.ndarray:
    """Binary generator matrices, shape ``(dimension, bit_precision, bit_precision)``.

    Entry ``[i, r, j]`` is the contribution of input digit ``j`` of the index
    (weight ``2**j``) to output digit ``r+1`` (weight ``2**-(r+1)``) of
    coordinate ``i``.
    """
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    if not 16 <= bit_precision <= 64:
        raise ValueError(f"bit_precision must lie in [16, 64], got {bit_precision}")
    cols = _packed_columns(dimension, bit_precision)
    shifts = np.arange(bit_precision - 1, -1, -1, dtype=np.uint64)
    # bits[i, j, r]: row r of column j
    bits = (cols[:, :, None] >> shifts[None, None, :]) & np.uint64(1)
    return bits.transpose(0, 2, 1).astype(np.uint8)


class DigitalSequenceGenerator:
    """Base-2 Niederreiter sequence in natural (non-Gray-code) order.

    Coordinate ``i`` of point ``n`` is ``C_i @ digits(n)`` over GF(2), read as
    a binary fraction with ``bit_precision`` digits. Index 0 is the origin.
    With ``skip > 0`` stream position ``n`` yields sequence element ``n + skip``.
    """

    def __init__(self, dimension: int, bit_precision: int = DEFAULT_BIT_PRECISION, skip: int = 0):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        if not 16 <= bit_precision <= 64:
            raise ValueError(f"bit_precision must lie in [16, 64], got {bit_precision}")
        self.dimension = int(dimension)
        self.bit_precision = int(bit_precision)
        if skip < 0:
            raise ValueError(f"skip must be >= 0, got {skip}")
        self.skip = int(skip)
        self._cols = _packed_columns(self.dimension, self.bit_precision)
        self.index = 0

    @property
    def generator_matrices(self) -> np.ndarray:
        return build_generator_matrices(self.dimension, self.bit_precision)

    @property
    def capacity(self) -> int:
        return 1 << self.bit_precision

    def integer_points(self, start: int, count: int) -> np.ndarray:
        """Raw digit vectors as unsigned integers, shape ``(count, dimension)``."""
        if start < 0 or count < 0:
            raise ValueError("start and count must be non-negative")
        start += self.skip
        stop = start + count
        if stop > self.capacity:
            raise OverflowError(
                f"index {stop - 1} out of range for {self.bit_precision}-bit digital sequence"
            )
        out = np.zeros((count, self.dimension), dtype=np.uint64)
        if count == 0:
            return out
        idx = np.arange(start, stop, dtype=np.uint64)
        for j in range(max(stop - 1, 1).bit_length()):
            hit = ((idx >> np.uint64(j)) & np.uint64(1)).astype(bool)
            if hit.any():
                out[hit] ^= self._cols[:, j]
        return out

    def points(self, start: int, count: int) -> np.ndarray:
        ints = self.integer_points(start, count)
        bp = self.bit_precision
        if bp > 53:
            # truncate so the double never rounds up to 1.0
            ints = ints >> np.uint64(bp - 53)
            bp = 53
        return ints.astype(np.float64) * 2.0**-bp

    def next_point(self) -> np.ndarray:
        row = self.points(self.index, 1)[0]
        self.index += 1
        return row

    def seek(self, index: int) -> None:
        self.index = int(index)


def next_digital(gen: DigitalSequenceGenerator) -> np.ndarray:
    return gen.next_point()


# --------------------------------------------------------------------------- #
# Hybrid                                                                      #
# --------------------------------------------------------------------------- #


class HybridScheme:
    """Concatenation of a QMC stream and a pseudo-random stream.

    ``qmc_credits`` are the credit indices (0-based) driven by the digital
    sequence. QMC coordinate ``k`` goes to the ``k``-th designated credit in
    ascending index order and MC coordinate ``k`` to the ``k``-th remaining
    credit, so ``s' = s`` reproduces the pure QMC stream and ``s' = 0`` the
    pure MC stream.
    """

    def __init__(
        self,
        total_dimension: int,
        qmc_credits,
        seed: int,
        bit_precision: int = DEFAULT_BIT_PRECISION,
        stream: int = 0,
        qmc_skip: int = 0,
    ):
        s = int(total_dimension)
        requested = [int(c) for c in qmc_credits]
        chosen = sorted(set(requested))
        if len(chosen) != len(requested):
            raise ValueError("qmc_credits contains duplicates")
        if any(c < 0 or c >= s for c in chosen):
            raise ValueError(f"qmc_credits must lie in [0, {s})")
        self.total_dimension = s
        self.qmc_dimension = len(chosen)
        self.qmc_credits = np.array(chosen, dtype=np.intp)
        taken = set(chosen)
        self.mc_credits = np.array([j for j in range(s) if j not in taken], dtype=np.intp)
        self.qmc_source = (
            DigitalSequenceGenerator(self.qmc_dimension, bit_precision, qmc_skip) if chosen else None
        )
        self.mc_source = PseudoRandomStream(seed, s - self.qmc_dimension, stream)
        self.index = 0

    @property
    def assignment(self) -> np.ndarray:
        """Credit index for each coordinate slot: QMC slots first, then MC slots."""
        return np.concatenate([self.qmc_credits, self.mc_credits])

    def points(self, start: int, count: int) -> np.ndarray:
        out = np.empty((count, self.total_dimension))
        if self.qmc_source is not None:
            out[:, self.qmc_credits] = self.qmc_source.points(start, count)
        if len(self.mc_credits):
            out[:, self.mc_credits] = self.mc_source.points(start, count)
        return out

    def next_point(self) -> np.ndarray:
        row = self.points(self.index, 1)[0]
        self.index += 1
        return row

    def seek(self, index: int) -> None:
        self.index = int(index)


def next_hybrid(scheme: HybridScheme) -> np.ndarray:
    return scheme.next_point()

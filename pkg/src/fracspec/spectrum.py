"""Dirac eigenvalue magnitudes for circle, interval, edge, graph, tree and gasket modules.

Every spectrum here is a union of *arithmetic families*: magnitudes
``scale * (2j + 1)`` (odd families) or ``scale * (j + 1)`` for ``j >= 0``,
each with a fixed multiplicity, plus possibly a zero mode. A multiplicity
counts the eigenvalues ``+lambda`` and ``-lambda`` together.

Infinite constructions (trees, the gasket) are countable sequences of
families whose minima grow geometrically, so only finitely many of them
meet any bounded window. :class:`SpectrumStream` merges them lazily.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

REL_TOL = 1e-12
MAX_FAMILIES_BELOW = 10**6


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class ArithmeticFamily:
    scale: float
    multiplicity: int
    odd: bool = True

    def magnitude(self, j: int) -> float:
        return self.scale * (2 * j + 1) if self.odd else self.scale * (j + 1)

    @property
    def minimum(self) -> float:
        return self.scale

    def index_count(self, lam: float) -> int:
        """Number of indices ``j`` with magnitude <= lam (tolerant at the boundary)."""
        x = lam / self.scale * (1 + REL_TOL)
        if self.odd:
            return max(0, int(math.floor((x - 1) / 2)) + 1) if x >= 1 else 0
        return max(0, int(math.floor(x)))

    def count(self, lam: float) -> int:
        return self.multiplicity * self.index_count(lam)


@dataclass(frozen=True)
class GeometricLevels:
    """Level ``n`` (from 0) is the odd family with scale ``scale0 * q**n`` and
    multiplicity ``mult0 * m**n``; optionally truncated after ``max_level``."""

    scale0: float
    scale_ratio: float
    mult0: int
    mult_ratio: int
    max_level: int | None = None

    def __post_init__(self):
        if not self.scale_ratio > 1:
            raise SpectrumError("level scales must grow (scale ratio > 1)")

    def family(self, n: int) -> ArithmeticFamily:
        return ArithmeticFamily(self.scale0 * self.scale_ratio**n, self.mult0 * self.mult_ratio**n)

    def families(self) -> Iterator[ArithmeticFamily]:
        levels = itertools.count() if self.max_level is None else range(self.max_level + 1)
        for n in levels:
            yield self.family(n)


FamilySource = Callable[[], Iterable[ArithmeticFamily]]


class SpectrumStream:
    """Nondecreasing ``(magnitude, multiplicity)`` pairs, aggregated per magnitude.

    Iteration is single-consumer. :meth:`counting` and :meth:`families` do
    not consume the stream.
    """

    def __init__(self, source: FamilySource, zero_multiplicity: int = 0,
                 levels: Sequence[GeometricLevels] = ()):
        self._source = source
        self.zero_multiplicity = zero_multiplicity
        # geometric level structure, when known, lets callers bound tails analytically
        self.levels = tuple(levels)
        self._it: Iterator[tuple[float, int]] | None = None

    def families(self) -> Iterator[ArithmeticFamily]:
        return iter(self._source())

    def __iter__(self):
        return self

    def __next__(self) -> tuple[float, int]:
        if self._it is None:
            self._it = self._generate()
        return next(self._it)

    def _generate(self) -> Iterator[tuple[float, int]]:
        if self.zero_multiplicity:
            yield 0.0, self.zero_multiplicity
        pending = iter(self.families())
        nxt = next(pending, None)
        heap: list = []
        tie = itertools.count()
        while True:
            # activate every family whose minimum is at or below the current frontier
            while nxt is not None and (not heap or nxt.minimum <= heap[0][0] * (1 + REL_TOL)):
                heapq.heappush(heap, (nxt.minimum, next(tie), nxt, 0))
                nxt = next(pending, None)
            if not heap:
                return
            mag, _, fam, j = heapq.heappop(heap)
            mult = fam.multiplicity
            heapq.heappush(heap, (fam.magnitude(j + 1), next(tie), fam, j + 1))
            while True:
                while nxt is not None and nxt.minimum <= mag * (1 + REL_TOL):
                    heapq.heappush(heap, (nxt.minimum, next(tie), nxt, 0))
                    nxt = next(pending, None)
                if heap[0][0] > mag * (1 + REL_TOL):
                    break
                _, _, fam2, j2 = heapq.heappop(heap)
                mult += fam2.multiplicity
                heapq.heappush(heap, (fam2.magnitude(j2 + 1), next(tie), fam2, j2 + 1))
            yield mag, mult

    def counting(self, lam: float) -> int:
        return counting_function(self, lam)

    def signed(self) -> Iterator[tuple[float, int]]:
        """Signed eigenvalues: each nonzero magnitude splits evenly into +/-."""
        for mag, mult in SpectrumStream(self._source, self.zero_multiplicity, self.levels):
            if mag == 0.0:
                yield 0.0, mult
            else:
                yield -mag, mult // 2
                yield mag, mult // 2


def _check_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise SpectrumError(f"{name} must be positive and finite, got {value}")


def circle_spectrum(r: float, translated: bool = True) -> SpectrumStream:
    """Circle of radius ``r``: ``k/r`` untranslated, ``(2k+1)/(2r)`` translated."""
    _check_positive("r", r)
    if translated:
        fam = ArithmeticFamily(1.0 / (2.0 * r), 2, odd=True)
        return SpectrumStream(lambda: [fam])
    fam = ArithmeticFamily(1.0 / r, 2, odd=False)
    return SpectrumStream(lambda: [fam], zero_multiplicity=1)


def interval_spectrum(alpha: float, translated: bool = False) -> SpectrumStream:
    """Interval ``[0, alpha]``: ``pi k / alpha``; translated by ``pi/(2 alpha)`` it avoids 0."""
    _check_positive("alpha", alpha)
    if translated:
        return edge_spectrum(alpha)
    fam = ArithmeticFamily(math.pi / alpha, 2, odd=False)
    return SpectrumStream(lambda: [fam], zero_multiplicity=1)


def edge_spectrum(length: float) -> SpectrumStream:
    """Translated edge module: magnitudes ``(2j+1) pi / (2 length)``, each twice."""
    _check_positive("edge length", length)
    fam = ArithmeticFamily(math.pi / (2.0 * length), 2, odd=True)
    return SpectrumStream(lambda: [fam])


def graph_spectrum(lengths: Sequence[float], translated: bool = True) -> SpectrumStream:
    for length in lengths:
        _check_positive("edge length", length)
    if translated:
        fams = sorted((ArithmeticFamily(math.pi / (2.0 * ell), 2) for ell in lengths),
                      key=lambda f: f.minimum)
        return SpectrumStream(lambda: fams)
    fams = sorted((ArithmeticFamily(math.pi / ell, 2, odd=False) for ell in lengths),
                  key=lambda f: f.minimum)
    return SpectrumStream(lambda: fams, zero_multiplicity=len(lengths))


# level 0: (2j+1)/2 twice; level n >= 1: 2^(n-1)(2j+1) with multiplicity 2*3^n
GASKET_LEVELS = GeometricLevels(scale0=0.5, scale_ratio=2.0, mult0=2, mult_ratio=3)


def gasket_spectrum(max_level: int | None = None) -> SpectrumStream:
    levels = GeometricLevels(0.5, 2.0, 2, 3, max_level)
    return SpectrumStream(levels.families, levels=[levels])


def levels_spectrum(levels: GeometricLevels) -> SpectrumStream:
    return SpectrumStream(levels.families, levels=[levels])


def merge_spectra(streams: Sequence[SpectrumStream]) -> SpectrumStream:
    """Multiset union of spectra, merged lazily by family minimum."""
    streams = list(streams)

    def source():
        return heapq.merge(*(s.families() for s in streams), key=lambda f: f.minimum)

    levels = [lv for s in streams for lv in s.levels]
    return SpectrumStream(source, sum(s.zero_multiplicity for s in streams), levels)


def counting_function(s: SpectrumStream, lam: float) -> int:
    """Total multiplicity of magnitudes ``<= lam``."""
    _check_positive("Lambda", lam)
    total = s.zero_multiplicity
    for i, fam in enumerate(s.families()):
        if fam.minimum > lam * (1 + REL_TOL):
            return total
        if i >= MAX_FAMILIES_BELOW:
            raise SpectrumError(
                f"more than {MAX_FAMILIES_BELOW} families below {lam}; minima do not diverge")
        total += fam.count(lam)
    return total


@dataclass(frozen=True)
class GeometricLengthFamily:
    """Level ``n >= 1`` has ``c0 * m**(n-1)`` edges of length ``l0 * rho**(n-1)``."""

    initial_count: int
    count_ratio: float
    initial_length: float
    length_ratio: float

    def __post_init__(self):
        if not (isinstance(self.initial_count, int) and self.initial_count > 0):
            raise SpectrumError("initial_count must be a positive integer")
        _check_positive("count_ratio", self.count_ratio)
        _check_positive("initial_length", self.initial_length)
        if not 0 < self.length_ratio < 1:
            raise SpectrumError("length_ratio must lie in (0, 1)")

    def count(self, n: int) -> float:
        return self.initial_count * self.count_ratio ** (n - 1)

    def length(self, n: int) -> float:
        return self.initial_length * self.length_ratio ** (n - 1)

    def levels(self, max_depth: int | None = None) -> GeometricLevels:
        """Edge-module spectrum as levels; level index ``n - 1`` holds tree level ``n``."""
        m = self.count_ratio
        if float(m) != int(m):
            raise SpectrumError("spectral multiplicities need an integral count_ratio")
        return GeometricLevels(math.pi / (2.0 * self.initial_length), 1.0 / self.length_ratio,
                               2 * self.initial_count, int(m),
                               None if max_depth is None else max_depth - 1)


def tree_spectrum(fam: GeometricLengthFamily, max_depth: int | None = None) -> SpectrumStream:
    """Direct sum of translated edge modules over a tree with the given length family."""
    return levels_spectrum(fam.levels(max_depth))


# --- dispatch over constructions ---------------------------------------------

@dataclass(frozen=True)
class Circle:
    r: float
    translated: bool = True

    def stream(self) -> SpectrumStream:
        return circle_spectrum(self.r, self.translated)


@dataclass(frozen=True)
class Interval:
    alpha: float

    def stream(self) -> SpectrumStream:
        return interval_spectrum(self.alpha)


@dataclass(frozen=True)
class Edge:
    length: float

    def stream(self) -> SpectrumStream:
        return edge_spectrum(self.length)


@dataclass(frozen=True)
class GraphEdges:
    lengths: tuple[float, ...]

    def stream(self) -> SpectrumStream:
        return graph_spectrum(self.lengths)


@dataclass(frozen=True)
class Gasket:
    max_level: int | None = None

    def stream(self) -> SpectrumStream:
        return gasket_spectrum(self.max_level)


@dataclass(frozen=True)
class TreeFamily:
    family: GeometricLengthFamily
    max_depth: int | None = None

    def stream(self) -> SpectrumStream:
        return tree_spectrum(self.family, self.max_depth)


SpectrumSpec = Circle | Interval | Edge | GraphEdges | Gasket | TreeFamily


def as_stream(spec) -> SpectrumStream:
    if isinstance(spec, SpectrumStream):
        return spec
    if isinstance(spec, (Circle, Interval, Edge, GraphEdges, Gasket, TreeFamily)):
        return spec.stream()
    raise TypeError(f"not a recognized spectrum description: {spec!r}")


def take(stream: Iterable[tuple[float, int]], n: int) -> list[tuple[float, int]]:
    return list(itertools.islice(stream, n))

"""Finite dyadic model of [0,1): cubes, step functions, cell sets, averages,
weighted measures, weak norms, and the dyadic Hardy-Littlewood maximal function.

Everything lives on a grid of depth N: the finest cells are the 2^N dyadic
intervals of length 2^-N, and a "cube" is any dyadic interval
[i 2^-j, (i+1) 2^-j) with 0 <= j <= N. Functions are step functions constant
on finest cells, so all integrals are exact sums.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

__all__ = [
    "DyadicGrid",
    "Cube",
    "StepFunction",
    "CellSet",
    "average",
    "integrate",
    "weighted_measure",
    "super_level_set",
    "weak_norm",
    "lp_norm",
    "dyadic_maximal",
    "level_averages",
]

# Above this cell count plain float accumulation is replaced by fsum.
_FSUM_THRESHOLD = 1 << 20


class Cube(NamedTuple):
    """Dyadic interval [index * 2^-level, (index+1) * 2^-level)."""

    level: int
    index: int

    @property
    def measure(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def left(self) -> float:
        return self.index * 2.0 ** (-self.level)

    def parent(self) -> "Cube":
        if self.level == 0:
            raise ValueError("root cube has no parent")
        return Cube(self.level - 1, self.index // 2)

    def children(self) -> tuple["Cube", "Cube"]:
        return (Cube(self.level + 1, 2 * self.index),
                Cube(self.level + 1, 2 * self.index + 1))

    def contains(self, other: "Cube") -> bool:
        """True iff other is a (non-strict) dyadic sub-interval of self."""
        if other.level < self.level:
            return False
        return other.index >> (other.level - self.level) == self.index


@dataclass(frozen=True)
class DyadicGrid:
    """Dyadic grid on [0,1) with 2^depth finest cells."""

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("grid depth must be >= 1")

    @property
    def n_cells(self) -> int:
        return 1 << self.depth

    @property
    def cell_measure(self) -> float:
        return 2.0 ** (-self.depth)

    @property
    def n_cubes(self) -> int:
        # levels 0..depth: 2^{depth+1} - 1 cubes in total
        return (1 << (self.depth + 1)) - 1

    def root(self) -> Cube:
        return Cube(0, 0)

    def cubes(self) -> Iterator[Cube]:
        for level in range(self.depth + 1):
            for index in range(1 << level):
                yield Cube(level, index)

    def validate_cube(self, q: Cube) -> None:
        if not (0 <= q.level <= self.depth):
            raise ValueError(f"cube level {q.level} outside grid depth {self.depth}")
        if not (0 <= q.index < (1 << q.level)):
            raise ValueError(f"cube index {q.index} invalid at level {q.level}")

    def cell_span(self, q: Cube) -> tuple[int, int]:
        """Half-open finest-cell index range covered by cube q."""
        self.validate_cube(q)
        width = 1 << (self.depth - q.level)
        return q.index * width, (q.index + 1) * width

    def cell_centers(self) -> np.ndarray:
        n = self.n_cells
        return (np.arange(n) + 0.5) / n


class StepFunction:
    """Nonnegative step function, constant on the finest cells of its grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: DyadicGrid, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (grid.n_cells,):
            raise ValueError(f"expected {grid.n_cells} values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("step function values must be finite")
        if np.any(arr < 0):
            raise ValueError("step function values must be nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    @property
    def depth(self) -> int:
        return self.grid.depth

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    def scaled(self, c: float) -> "StepFunction":
        return StepFunction(self.grid, self.values * c)

    def power(self, p: float) -> "StepFunction":
        return StepFunction(self.grid, self.values ** p)

    def __eq__(self, other) -> bool:
        return (isinstance(other, StepFunction)
                and self.grid == other.grid
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.grid, self.values.tobytes()))

    def to_json(self) -> str:
        return json.dumps({"depth": self.depth, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "StepFunction":
        obj = json.loads(text)
        return cls(DyadicGrid(int(obj["depth"])), obj["values"])


class CellSet:
    """Measurable union of finest cells, stored as a boolean mask."""

    __slots__ = ("grid", "mask")

    def __init__(self, grid: DyadicGrid, mask):
        arr = np.asarray(mask, dtype=bool)
        if arr.shape != (grid.n_cells,):
            raise ValueError(f"expected {grid.n_cells} mask entries, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        self.grid = grid
        self.mask = arr

    @classmethod
    def empty(cls, grid: DyadicGrid) -> "CellSet":
        return cls(grid, np.zeros(grid.n_cells, dtype=bool))

    @classmethod
    def full(cls, grid: DyadicGrid) -> "CellSet":
        return cls(grid, np.ones(grid.n_cells, dtype=bool))

    @classmethod
    def from_cube(cls, grid: DyadicGrid, q: Cube) -> "CellSet":
        mask = np.zeros(grid.n_cells, dtype=bool)
        a, b = grid.cell_span(q)
        mask[a:b] = True
        return cls(grid, mask)

    @property
    def measure(self) -> float:
        return int(self.mask.sum()) * self.grid.cell_measure

    def is_empty(self) -> bool:
        return not bool(self.mask.any())

    def __and__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.grid, self.mask & other.mask)

    def __or__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.grid, self.mask | other.mask)

    def __sub__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.grid, self.mask & ~other.mask)

    def __invert__(self) -> "CellSet":
        return CellSet(self.grid, ~self.mask)

    def __eq__(self, other) -> bool:
        return (isinstance(other, CellSet)
                and self.grid == other.grid
                and np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.grid, self.mask.tobytes()))

    def issubset(self, other: "CellSet") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def to_hex(self) -> str:
        """Bitmask as hex; cell i is bit i of the little-endian byte string."""
        packed = np.packbits(self.mask, bitorder="little")
        return packed.tobytes().hex()

    @classmethod
    def from_hex(cls, grid: DyadicGrid, text: str) -> "CellSet":
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[: grid.n_cells]
        return cls(grid, bits.astype(bool))


def _sum(values: np.ndarray) -> float:
    if values.size > _FSUM_THRESHOLD:
        return math.fsum(values)
    return float(values.sum())


def integrate(f: StepFunction) -> float:
    """Integral of f over [0,1)."""
    return _sum(f.values) * f.grid.cell_measure


def average(f: StepFunction, q: Cube) -> float:
    """Average (1/|Q|) \\int_Q f."""
    a, b = f.grid.cell_span(q)
    seg = f.values[a:b]
    return _sum(seg) / seg.size


def weighted_measure(w: StepFunction, e: CellSet) -> float:
    """w(E) = \\int_E w dx."""
    if w.grid != e.grid:
        raise ValueError("weight and cell set live on different grids")
    return _sum(w.values[e.mask]) * w.grid.cell_measure


def super_level_set(g: StepFunction, lam: float) -> CellSet:
    """Cells where g > lam (strict)."""
    if lam < 0:
        raise ValueError("level must be nonnegative")
    return CellSet(g.grid, g.values > lam)


def lp_norm(g: StepFunction, w: StepFunction, p: float) -> float:
    """||g||_{L^p(w)} on the grid."""
    vals = g.values ** p * w.values
    return (_sum(vals) * g.grid.cell_measure) ** (1.0 / p)


def weak_norm(g: StepFunction, w: StepFunction, p: float) -> float:
    """Weak L^{p,inf}(w) norm: sup_lam lam * w({g > lam})^{1/p}.

    For a step function the sup is attained as a left limit at a jump, so it
    equals the max of v * w({g >= v})^{1/p} over the distinct values v of g.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if g.grid != w.grid:
        raise ValueError("function and weight live on different grids")
    order = np.argsort(g.values)[::-1]
    gv = g.values[order]
    wv = w.values[order] * g.grid.cell_measure
    cum = np.cumsum(wv)
    # last position of each distinct value in the descending order
    last = np.nonzero(np.append(gv[1:] != gv[:-1], True))[0]
    vals = gv[last]
    keep = vals > 0
    if not keep.any():
        return 0.0
    return float(np.max(vals[keep] * cum[last][keep] ** (1.0 / p)))


def level_averages(f: StepFunction) -> list[np.ndarray]:
    """Averages of f over all cubes, indexed [level][cube index].

    Built bottom-up by pairwise means; level N equals the cell values.
    """
    out = [None] * (f.depth + 1)
    cur = f.values
    out[f.depth] = cur
    for level in range(f.depth - 1, -1, -1):
        cur = 0.5 * (cur[0::2] + cur[1::2])
        out[level] = cur
    return out


def dyadic_maximal(f: StepFunction) -> StepFunction:
    """Mf(x) = max over dyadic cubes Q containing x of the average of f on Q.

    Top-down propagation of the running ancestor max, O(N 2^N).
    """
    avgs = level_averages(f)
    best = avgs[0]
    for level in range(1, f.depth + 1):
        best = np.maximum(np.repeat(best, 2), avgs[level])
    return StepFunction(f.grid, best)

"""Sparse cube families, the operators they generate, and the decompositions
used by the weak-type arguments: average bands, layer peeling with
exceptional sets, deep-descendant sets, and the dyadic-power splitting with
its counting function.

A family is eta-sparse (default eta = 1/8) when for every member cube the
union of its strict descendants inside the family covers at most eta of it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import CellSet, Cube, DyadicGrid, StepFunction, average

__all__ = [
    "SPARSITY",
    "SparseFamily",
    "SparsityReport",
    "validate_sparsity",
    "generate_sparse",
    "stopping_cubes",
    "random_pruned",
    "anchored_chain",
    "apply_sparse",
    "apply_sparse_square",
    "BandSplit",
    "band_index",
    "split_by_average",
    "LayeredBand",
    "layer_decompose",
    "deep_descendant_set",
    "PowerBand",
    "PowerDecomposition",
    "power_decompose",
]

SPARSITY = 0.125


def _is_strict_descendant(child: Cube, parent: Cube) -> bool:
    return child.level > parent.level and parent.contains(child)


@dataclass(frozen=True)
class SparseFamily:
    """Finite set of dyadic cubes with a sparsity certificate.

    The certificate (worst covered fraction over member cubes) is computed at
    construction and can be re-checked with validate_sparsity.
    """

    grid: DyadicGrid
    cubes: tuple
    eta: float = SPARSITY
    worst_fraction: float = field(init=False, default=0.0, compare=False)

    def __post_init__(self):
        cubes = tuple(sorted(set(self.cubes)))
        object.__setattr__(self, "cubes", cubes)
        for q in cubes:
            self.grid.validate_cube(q)
        report = validate_sparsity(self, check_eta=None)
        object.__setattr__(self, "worst_fraction", report.worst_fraction)
        if report.worst_fraction > self.eta + 1e-15:
            raise ValueError(
                f"family is not {self.eta}-sparse: worst covered fraction "
                f"{report.worst_fraction:.6f}")

    def __len__(self) -> int:
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __contains__(self, q: Cube) -> bool:
        return q in set(self.cubes)

    def support(self) -> CellSet:
        mask = np.zeros(self.grid.n_cells, dtype=bool)
        for q in self.cubes:
            a, b = self.grid.cell_span(q)
            mask[a:b] = True
        return CellSet(self.grid, mask)

    def to_json(self) -> str:
        return json.dumps({
            "depth": self.grid.depth,
            "eta": self.eta,
            "cubes": [{"level": q.level, "index": q.index} for q in self.cubes],
        })

    @classmethod
    def from_json(cls, text: str) -> "SparseFamily":
        obj = json.loads(text)
        grid = DyadicGrid(int(obj["depth"]))
        cubes = tuple(Cube(int(c["level"]), int(c["index"])) for c in obj["cubes"])
        return cls(grid, cubes, float(obj.get("eta", SPARSITY)))


@dataclass(frozen=True)
class SparsityReport:
    passed: bool
    eta: float
    worst_fraction: float
    worst_cube: Cube | None


def _descendant_fraction(grid: DyadicGrid, cubes: tuple, q: Cube) -> float:
    """Covered fraction of q by strict descendants within the family, exactly."""
    a, b = grid.cell_span(q)
    covered = np.zeros(b - a, dtype=bool)
    for other in cubes:
        if _is_strict_descendant(other, q):
            oa, ob = grid.cell_span(other)
            covered[oa - a:ob - a] = True
    return float(covered.sum()) / (b - a)


def validate_sparsity(family: SparseFamily, check_eta: float | None = SPARSITY
                      ) -> SparsityReport:
    """Exact per-cube set-arithmetic check of the sparsity condition."""
    eta = family.eta if check_eta is None else check_eta
    worst = 0.0
    worst_cube = None
    for q in family.cubes:
        frac = _descendant_fraction(family.grid, family.cubes, q)
        if frac > worst:
            worst, worst_cube = frac, q
    return SparsityReport(passed=worst <= eta + 1e-15, eta=eta,
                          worst_fraction=worst, worst_cube=worst_cube)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _prune_to_sparsity(grid: DyadicGrid, cubes: set, eta: float) -> tuple:
    """Greedy deepest-first insertion, rejecting violators.

    Candidates are taken from the deepest level up; every cube already
    accepted is at a deeper (or equal) level, hence inside the candidate or
    disjoint from it, so only the candidate's own covered fraction needs
    checking. The accepted set is eta-sparse by induction.
    """
    accepted = []
    covered = np.zeros(grid.n_cells, dtype=bool)
    for q in sorted(cubes, key=lambda c: (-c.level, c.index)):
        a, b = grid.cell_span(q)
        if float(covered[a:b].sum()) / (b - a) <= eta + 1e-15:
            accepted.append(q)
            covered[a:b] = True
    return tuple(sorted(accepted))


def stopping_cubes(f: StepFunction, ratio: float = 8.0) -> SparseFamily:
    """Calderon-Zygmund stopping-time family: children of a selected cube are
    the maximal dyadic subcubes whose average exceeds ratio times the cube's.

    For ratio >= 8 the construction is 1/8-sparse by itself; smaller ratios
    are repaired by the greedy pruner so the output always certifies 1/8.
    """
    if ratio <= 1:
        raise ValueError("stopping ratio must exceed 1")
    grid = f.grid
    if float(f.values.max()) == 0.0:
        return SparseFamily(grid, ())
    selected = []
    stack = [grid.root()]
    while stack:
        q = stack.pop()
        selected.append(q)
        base = average(f, q)
        if base == 0.0:
            continue
        # maximal subcubes with average > ratio * base, found by DFS
        inner = list(q.children()) if q.level < grid.depth else []
        while inner:
            c = inner.pop()
            if average(f, c) > ratio * base:
                stack.append(c)
            elif c.level < grid.depth:
                inner.extend(c.children())
    return SparseFamily(grid, _prune_to_sparsity(grid, set(selected), SPARSITY))


def random_pruned(grid: DyadicGrid, density: float = 0.3, seed: int = 0,
                  max_level: int | None = None) -> SparseFamily:
    """Include each cube independently with the given probability, then repair
    violations greedily (deepest first). The root is always included.
    """
    if not (0.0 <= density <= 1.0):
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    top = grid.depth if max_level is None else min(max_level, grid.depth)
    chosen = {grid.root()}
    for level in range(1, top + 1):
        draws = rng.random(1 << level)
        for index in np.nonzero(draws < density)[0]:
            chosen.add(Cube(level, int(index)))
    return SparseFamily(grid, _prune_to_sparsity(grid, chosen, SPARSITY))


def anchored_chain(grid: DyadicGrid, seed: int = 0, step: int = 3,
                   phase: int = 0) -> SparseFamily:
    """Nested chain of cubes every `step` levels along a seeded random cell.

    Steps >= 3 keep the chain 1/8-sparse (each strict descendant covers
    2^{-step} of its predecessor). Deep in-band nesting is how the layer and
    counting machinery gets exercised at desk scale.
    """
    if step < 3:
        raise ValueError("chain step < 3 breaks 1/8-sparsity")
    rng = np.random.default_rng(seed)
    cell = int(rng.integers(0, grid.n_cells))
    cubes = [Cube(level, cell >> (grid.depth - level))
             for level in range(phase, grid.depth + 1, step)]
    return SparseFamily(grid, tuple(cubes))


def generate_sparse(grid: DyadicGrid, strategy: str, f: StepFunction | None = None,
                    seed: int = 0) -> SparseFamily:
    """Spec-string front end: "stopping:ratio=8" (needs f),
    "random:density=0.3", or "chain:step=3,phase=0"."""
    name, _, rest = strategy.partition(":")
    params = {}
    for item in rest.split(","):
        if item:
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
    if name == "stopping":
        if f is None:
            raise ValueError("stopping strategy needs the function f")
        return stopping_cubes(f, params.get("ratio", 8.0))
    if name == "random":
        return random_pruned(grid, params.get("density", 0.3), seed,
                             int(params["max_level"]) if "max_level" in params else None)
    if name == "chain":
        return anchored_chain(grid, seed, int(params.get("step", 3)),
                              int(params.get("phase", 0)))
    raise ValueError(f"unknown sparse strategy {name!r}")


# ---------------------------------------------------------------------------
# Sparse operators
# ---------------------------------------------------------------------------

def apply_sparse(family: SparseFamily, f: StepFunction) -> StepFunction:
    """T f = sum over family cubes of <f>_Q 1_Q."""
    out = np.zeros(f.grid.n_cells)
    for q in family.cubes:
        a, b = f.grid.cell_span(q)
        out[a:b] += average(f, q)
    return StepFunction(f.grid, out)


def apply_sparse_square(family: SparseFamily, f: StepFunction) -> StepFunction:
    """S f with (S f)^2 = sum over family cubes of <f>_Q^2 1_Q."""
    out = np.zeros(f.grid.n_cells)
    for q in family.cubes:
        a, b = f.grid.cell_span(q)
        out[a:b] += average(f, q) ** 2
    return StepFunction(f.grid, np.sqrt(out))


# ---------------------------------------------------------------------------
# Average bands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandSplit:
    """Cubes grouped by the band base^{-k-1} < <f>_Q <= base^{-k}."""

    base: int
    bands: dict
    dropped_zero_average: tuple

    def band_indices(self) -> list[int]:
        return sorted(self.bands)


def band_index(avg: float, base: int) -> int:
    """The unique k with base^{-k-1} < avg <= base^{-k} (right-closed)."""
    if avg <= 0:
        raise ValueError("band index needs a positive average")
    k = int(math.floor(-math.log(avg) / math.log(base)))
    # float log can be off by one at exact powers; fix with exact comparisons
    while avg > base ** float(-k):
        k -= 1
    while avg <= base ** float(-k - 1):
        k += 1
    return k


def split_by_average(family: SparseFamily, f: StepFunction, base: int = 4
                     ) -> BandSplit:
    """Assign every cube with positive average to its band; zero-average cubes
    are dropped and reported (no band contains 0)."""
    if base not in (2, 4):
        raise ValueError("band base must be 2 or 4")
    bands: dict = {}
    dropped = []
    for q in family.cubes:
        avg = average(f, q)
        if avg == 0.0:
            dropped.append(q)
            continue
        bands.setdefault(band_index(avg, base), []).append(q)
    return BandSplit(base=base,
                     bands={k: tuple(v) for k, v in bands.items()},
                     dropped_zero_average=tuple(dropped))


# ---------------------------------------------------------------------------
# Layer decomposition (peeling by maximality)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayeredBand:
    """One band S_k split into layers: layer 0 holds the maximal cubes and
    layer v+1 the maximal cubes of what is left. exceptional[Q] is
    E_Q = Q minus the union of next-layer cubes; those sets are pairwise
    disjoint across the whole band.
    """

    grid: DyadicGrid
    layers: tuple              # tuple of tuples of cubes
    layer_of: dict             # cube -> layer index
    exceptional: dict          # cube -> CellSet

    def n_layers(self) -> int:
        return len(self.layers)


def layer_decompose(grid: DyadicGrid, cubes: tuple) -> LayeredBand:
    """Layer index of a cube = number of its strict ancestors inside the band
    (ancestors along a dyadic chain are totally ordered, so peeling maximal
    cubes removes exactly one ancestor per pass)."""
    cube_set = set(cubes)
    layer_of = {}
    for q in cubes:
        count = 0
        walk = q
        while walk.level > 0:
            walk = walk.parent()
            if walk in cube_set:
                count += 1
        layer_of[q] = count
    n_layers = max(layer_of.values(), default=-1) + 1
    layers = [[] for _ in range(n_layers)]
    for q in cubes:
        layers[layer_of[q]].append(q)
    layers = tuple(tuple(sorted(layer)) for layer in layers)

    exceptional = {}
    n = grid.n_cells
    for v, layer in enumerate(layers):
        next_mask = np.zeros(n, dtype=bool)
        if v + 1 < n_layers:
            for q in layers[v + 1]:
                a, b = grid.cell_span(q)
                next_mask[a:b] = True
        for q in layer:
            a, b = grid.cell_span(q)
            mask = np.zeros(n, dtype=bool)
            mask[a:b] = True
            mask &= ~next_mask
            exceptional[q] = CellSet(grid, mask)
    return LayeredBand(grid=grid, layers=layers, layer_of=dict(layer_of),
                       exceptional=exceptional)


def deep_descendant_set(layered: LayeredBand, q: Cube, u: int) -> CellSet:
    """Q_u: the union of layer-(v+u) cubes inside Q, where Q sits in layer v.

    Sparsity forces |Q_u| <= 8^{-u} |Q|.
    """
    if u < 1:
        raise ValueError("descendant depth u must be >= 1")
    v = layered.layer_of[q]
    grid = layered.grid
    mask = np.zeros(grid.n_cells, dtype=bool)
    if v + u < layered.n_layers():
        for other in layered.layers[v + u]:
            if q.contains(other):
                a, b = grid.cell_span(other)
                mask[a:b] = True
    return CellSet(grid, mask)


# ---------------------------------------------------------------------------
# Dyadic-power decomposition (base 2 bands with counting functions)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerBand:
    """One base-2 band S_m with its per-cube sets and counting function.

    exceptional[Q] is E_m(Q) = Q minus the union of the strict S_m-descendants
    of Q. counting is b_m = sum of member-cube indicators (integer valued) and
    support is B_m, the union of the maximal cubes of the band.
    """

    m: int
    cubes: tuple
    exceptional: dict          # cube -> CellSet
    counting: StepFunction     # b_m
    support: CellSet           # B_m
    layered: LayeredBand


@dataclass(frozen=True)
class PowerDecomposition:
    bands: dict                # m -> PowerBand
    dropped_zero_average: tuple

    def band_indices(self) -> list[int]:
        return sorted(self.bands)


def power_decompose(family: SparseFamily, f: StepFunction) -> PowerDecomposition:
    split = split_by_average(family, f, base=2)
    grid = family.grid
    n = grid.n_cells
    bands = {}
    for m, cubes in split.bands.items():
        layered = layer_decompose(grid, cubes)
        counting = np.zeros(n)
        for q in cubes:
            a, b = grid.cell_span(q)
            counting[a:b] += 1.0
        support = np.zeros(n, dtype=bool)
        for q in layered.layers[0]:
            a, b = grid.cell_span(q)
            support[a:b] = True
        exceptional = {}
        for q in cubes:
            a, b = grid.cell_span(q)
            mask = np.zeros(n, dtype=bool)
            mask[a:b] = True
            for other in cubes:
                if _is_strict_descendant(other, q):
                    oa, ob = grid.cell_span(other)
                    mask[oa:ob] = False
            exceptional[q] = CellSet(grid, mask)
        bands[m] = PowerBand(m=m, cubes=cubes, exceptional=exceptional,
                             counting=StepFunction(grid, counting),
                             support=CellSet(grid, support), layered=layered)
    return PowerDecomposition(bands=bands,
                              dropped_zero_average=split.dropped_zero_average)


def serialize_decomposition(layered_by_band: dict) -> str:
    """Decomposition report as a JSON tree: band -> layer -> cubes with E_Q masks."""
    tree = {}
    for k, layered in sorted(layered_by_band.items()):
        tree[str(k)] = {
            str(v): [
                {"level": q.level, "index": q.index,
                 "exceptional_hex": layered.exceptional[q].to_hex()}
                for q in layer
            ]
            for v, layer in enumerate(layered.layers)
        }
    return json.dumps(tree, sort_keys=True)

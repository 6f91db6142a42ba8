"""Muckenhoupt weight classes on the dyadic grid: A_p, A_1 and Fujii-Wilson
A_infinity constants, dual weights, reverse Holder ratios, and seeded weight
generators.

All suprema over cubes run over the dyadic cubes of the grid only, matching
the dyadic model everything else lives in.
"""
from __future__ import annotations

import numpy as np

from .dyadic import DyadicGrid, StepFunction, dyadic_maximal, level_averages

__all__ = [
    "Weight",
    "MAX_DYNAMIC_RANGE",
    "ap_constant",
    "a1_constant",
    "a_infinity_constant",
    "dual_weight",
    "reverse_holder_ratio",
    "generate_weight",
    "parse_weight_spec",
    "weight_from_spec",
]

# Weights are kept within this max/min ratio so powers like w^{-1/(p-1)} and
# w^r stay well inside double range.
MAX_DYNAMIC_RANGE = 1e12


class Weight(StepFunction):
    """Strictly positive step function with recorded dynamic range."""

    __slots__ = ("dynamic_range",)

    def __init__(self, grid: DyadicGrid, values):
        super().__init__(grid, values)
        mn = float(self.values.min())
        if mn <= 0.0:
            raise ValueError("weights must be strictly positive")
        self.dynamic_range = float(self.values.max()) / mn
        if self.dynamic_range > MAX_DYNAMIC_RANGE * (1 + 1e-9):
            raise ValueError(
                f"weight dynamic range {self.dynamic_range:.3g} exceeds "
                f"{MAX_DYNAMIC_RANGE:.0e}")

    def scaled(self, c: float) -> "Weight":
        return Weight(self.grid, self.values * c)


def ap_constant(w: Weight, p: float) -> float:
    """[w]_{A_p} = sup_Q <w>_Q <w^{-1/(p-1)}>_Q^{p-1}, dyadic sup."""
    if p <= 1:
        raise ValueError("A_p requires p > 1")
    avgs_w = level_averages(w)
    avgs_s = level_averages(StepFunction(w.grid, w.values ** (-1.0 / (p - 1.0))))
    best = 0.0
    for lvl_w, lvl_s in zip(avgs_w, avgs_s):
        best = max(best, float(np.max(lvl_w * lvl_s ** (p - 1.0))))
    return best


def a1_constant(w: Weight) -> float:
    """[w]_{A_1} = sup_x Mw(x) / w(x)."""
    return float(np.max(dyadic_maximal(w).values / w.values))


def a_infinity_constant(w: Weight) -> float:
    """Fujii-Wilson [w]_{A_inf} = sup_Q int_Q M(w 1_Q) / w(Q).

    M restricted to Q sees only dyadic subcubes of Q, so for x in Q it is the
    max of ancestor averages at levels >= level(Q); those suffix maxima are
    shared across all Q of a given level.
    """
    depth = w.depth
    avgs = level_averages(w)
    # suffix[j][cell] = max over levels j..depth of the ancestor average
    suffix = [None] * (depth + 1)
    cur = avgs[depth]
    suffix[depth] = cur
    for level in range(depth - 1, -1, -1):
        cur = np.maximum(np.repeat(avgs[level], 1 << (depth - level)),
                         suffix[level + 1])
        suffix[level] = cur
    cell = w.grid.cell_measure
    best = 0.0
    for level in range(depth + 1):
        width = 1 << (depth - level)
        integrals = suffix[level].reshape(-1, width).sum(axis=1) * cell
        wq = w.values.reshape(-1, width).sum(axis=1) * cell
        best = max(best, float(np.max(integrals / wq)))
    return best


def dual_weight(w: Weight, p: float) -> Weight:
    """sigma = w^{-1/(p-1)}; for p = 2 the pointwise reciprocal."""
    if p <= 1:
        raise ValueError("dual weight requires p > 1")
    return Weight(w.grid, w.values ** (-1.0 / (p - 1.0)))


def reverse_holder_ratio(w: Weight, r: float) -> float:
    """max over dyadic Q of <w^r>_Q^{1/r} / <w>_Q."""
    if r <= 1:
        raise ValueError("reverse Holder requires r > 1")
    avgs_w = level_averages(w)
    avgs_r = level_averages(StepFunction(w.grid, w.values ** r))
    best = 0.0
    for lvl_w, lvl_r in zip(avgs_w, avgs_r):
        best = max(best, float(np.max(lvl_r ** (1.0 / r) / lvl_w)))
    return best


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _clamp_range(values: np.ndarray) -> np.ndarray:
    top = float(values.max())
    if top <= 0:
        raise ValueError("generator produced a nonpositive weight")
    return np.maximum(values, top / MAX_DYNAMIC_RANGE)


def generate_weight(grid: DyadicGrid, kind: str, params: dict | None = None,
                    seed: int = 0) -> Weight:
    """Seeded weight generator.

    kinds: constant (c), power (a, x0), cascade (theta, depth), spike (j).
    Output is deterministic for a fixed seed and clamped to the allowed
    dynamic range.
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    n = grid.n_cells
    if kind in ("constant", "const"):
        c = float(params.get("c", 1.0))
        if c <= 0:
            raise ValueError("constant weight must be positive")
        return Weight(grid, np.full(n, c))
    if kind == "power":
        a = float(params.get("a", 0.5))
        x0 = float(params.get("x0", rng.uniform()))
        dist = np.abs(grid.cell_centers() - x0)
        vals = dist ** a
        return Weight(grid, _clamp_range(vals))
    if kind == "cascade":
        theta = float(params.get("theta", 0.3))
        if not (0.0 <= theta < 1.0):
            raise ValueError("cascade theta must lie in [0, 1); theta >= 1 zeroes cells")
        levels = int(params.get("depth", grid.depth))
        if not (0 <= levels <= grid.depth):
            raise ValueError("cascade depth outside grid")
        vals = np.ones(n)
        for level in range(levels):
            signs = rng.integers(0, 2, size=1 << level) * 2 - 1
            factors = np.empty(1 << (level + 1))
            factors[0::2] = 1.0 + theta * signs
            factors[1::2] = 1.0 - theta * signs
            vals *= np.repeat(factors, 1 << (grid.depth - level - 1))
        return Weight(grid, _clamp_range(vals))
    if kind == "spike":
        j = int(params.get("j", 4))
        if not (1 <= j <= grid.depth):
            raise ValueError(f"spike j={j} outside grid depth {grid.depth}")
        vals = np.ones(n)
        width = 1 << (grid.depth - j)
        vals[:width] = 2.0 ** j
        return Weight(grid, _clamp_range(vals))
    raise ValueError(f"unknown weight generator kind {kind!r}")


def parse_weight_spec(spec: str) -> tuple[str, dict]:
    """Parse generator specs like "const:1", "power:a=0.5,x0=0.5", "spike:j=8"."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    params: dict = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                # bare value: the kind's leading parameter
                lead = {"const": "c", "constant": "c", "power": "a",
                        "cascade": "theta", "spike": "j"}.get(kind)
                if lead is None:
                    raise ValueError(f"unknown weight generator kind {kind!r}")
                params[lead] = float(key)
            else:
                params[key.strip()] = float(val)
    return kind, params


def weight_from_spec(grid: DyadicGrid, spec: str, seed: int = 0) -> Weight:
    kind, params = parse_weight_spec(spec)
    if "seed" in params:
        seed = int(params.pop("seed"))
    return generate_weight(grid, kind, params, seed)

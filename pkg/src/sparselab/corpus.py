"""Seeded instance corpus for the inequality verifiers.

A corpus is the cross product of weight generator specs, function generator
specs, sparse-family strategies, depths and seeds, captured in one config so
every report line is reproducible from the spec alone. Sub-seeds are derived
by hashing the spec string with the instance seed, so adding a generator does
not shift the streams of the others.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicGrid, StepFunction
from .sparse import SparseFamily, generate_sparse
from .weights import Weight, weight_from_spec

__all__ = [
    "CorpusSpec",
    "Instance",
    "standard_corpus",
    "structural_corpus",
    "generate_function",
    "function_from_spec",
    "derive_seed",
    "iter_instances",
]


def derive_seed(*parts) -> int:
    """Stable 63-bit sub-seed from arbitrary labels (process-independent)."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def generate_function(grid: DyadicGrid, kind: str, params: dict | None = None,
                      seed: int = 0) -> StepFunction:
    """Nonnegative test functions: const, block, uniform, spike, bumps."""
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    n = grid.n_cells
    if kind in ("const", "constant"):
        return StepFunction(grid, np.full(n, float(params.get("c", 1.0))))
    if kind == "block":
        j = int(params.get("j", 2))
        j = min(j, grid.depth)
        width = 1 << (grid.depth - j)
        start = int(rng.integers(0, 1 << j)) * width
        vals = np.zeros(n)
        vals[start:start + width] = float(params.get("h", 1.0))
        return StepFunction(grid, vals)
    if kind == "uniform":
        lo = float(params.get("lo", 0.0))
        hi = float(params.get("hi", 1.0))
        return StepFunction(grid, rng.uniform(lo, hi, size=n))
    if kind == "spike":
        j = int(params.get("j", 4))
        j = min(j, grid.depth)
        width = 1 << (grid.depth - j)
        start = int(rng.integers(0, 1 << j)) * width
        vals = np.zeros(n)
        vals[start:start + width] = 2.0 ** j
        return StepFunction(grid, vals)
    if kind == "bumps":
        count = int(params.get("n", 3))
        vals = np.zeros(n)
        for _ in range(count):
            j = int(rng.integers(1, grid.depth + 1))
            width = 1 << (grid.depth - j)
            start = int(rng.integers(0, 1 << j)) * width
            vals[start:start + width] += float(rng.uniform(0.1, 2.0))
        return StepFunction(grid, vals)
    raise ValueError(f"unknown function generator kind {kind!r}")


def function_from_spec(grid: DyadicGrid, spec: str, seed: int = 0) -> StepFunction:
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    params = {}
    for item in rest.split(","):
        if not item:
            continue
        key, eq, val = item.partition("=")
        if not eq:
            lead = {"const": "c", "constant": "c", "block": "j",
                    "spike": "j", "bumps": "n", "uniform": "hi"}.get(kind)
            if lead is None:
                raise ValueError(f"unknown function generator kind {kind!r}")
            params[lead] = float(key)
        else:
            params[key.strip()] = float(val)
    return generate_function(grid, kind, params, seed)


@dataclass(frozen=True)
class CorpusSpec:
    """Reproducible corpus description; weight specs may vary per depth."""

    name: str
    depths: tuple
    weight_specs: dict          # depth -> tuple of spec strings
    function_specs: tuple
    family_specs: dict          # depth -> tuple of spec strings
    seeds: tuple

    def config_dict(self) -> dict:
        return {
            "name": self.name,
            "depths": list(self.depths),
            "weight_specs": {str(d): list(v) for d, v in sorted(self.weight_specs.items())},
            "function_specs": list(self.function_specs),
            "family_specs": {str(d): list(v) for d, v in sorted(self.family_specs.items())},
            "seeds": list(self.seeds),
        }

    def config_hash(self) -> str:
        text = json.dumps(self.config_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def size(self) -> int:
        return sum(len(self.weight_specs[d]) * len(self.function_specs)
                   * len(self.family_specs[d]) * len(self.seeds)
                   for d in self.depths)


@dataclass(frozen=True)
class Instance:
    depth: int
    seed: int
    weight_spec: str
    function_spec: str
    family_spec: str
    w: Weight
    f: StepFunction
    family: SparseFamily

    @property
    def weight_key(self) -> tuple:
        return (self.depth, self.weight_spec, self.seed)

    def label(self) -> str:
        return (f"d{self.depth}/s{self.seed}/{self.weight_spec}"
                f"/{self.function_spec}/{self.family_spec}")


def iter_instances(spec: CorpusSpec):
    """Yield corpus instances; weights, functions and families are cached by
    their defining keys so repeated combinations are built once."""
    w_cache: dict = {}
    f_cache: dict = {}
    fam_cache: dict = {}
    for depth in spec.depths:
        grid = DyadicGrid(depth)
        for seed in spec.seeds:
            for wspec in spec.weight_specs[depth]:
                wkey = (depth, wspec, seed)
                if wkey not in w_cache:
                    w_cache[wkey] = weight_from_spec(grid, wspec,
                                                     derive_seed("w", wspec, seed))
                for fspec in spec.function_specs:
                    fkey = (depth, fspec, seed)
                    if fkey not in f_cache:
                        f_cache[fkey] = function_from_spec(grid, fspec,
                                                           derive_seed("f", fspec, seed))
                    f = f_cache[fkey]
                    for famspec in spec.family_specs[depth]:
                        famkey = (depth, famspec, seed,
                                  fkey if famspec.startswith("stopping") else None)
                        if famkey not in fam_cache:
                            fam_cache[famkey] = generate_sparse(
                                grid, famspec, f=f,
                                seed=derive_seed("fam", famspec, seed))
                        yield Instance(depth=depth, seed=seed, weight_spec=wspec,
                                       function_spec=fspec, family_spec=famspec,
                                       w=w_cache[wkey], f=f,
                                       family=fam_cache[famkey])


def standard_corpus(depths: tuple = (6, 8, 10, 12), n_seeds: int = 5,
                    name: str = "standard-v1") -> CorpusSpec:
    """The default verification corpus; ~1200 instances at the default size."""
    weight_specs = {}
    family_specs = {}
    for d in depths:
        weight_specs[d] = (
            "const:1",
            "power:a=0.6,x0=0.37",
            "power:a=-0.55,x0=0.61",
            "cascade:theta=0.5",
            "cascade:theta=0.8",
            f"spike:j={max(d - 2, 1)}",
        )
        # candidate density tuned so pruned random families stay around a
        # hundred cubes at every depth
        density = min(0.4, 100.0 / (1 << d))
        family_specs[d] = (
            "stopping:ratio=8",
            f"random:density={density:g}",
            "chain:step=3",
        )
    return CorpusSpec(
        name=name,
        depths=tuple(depths),
        weight_specs=weight_specs,
        # the small constants sit inside one average band, so chains produce
        # genuine layer depth there
        function_specs=("const:1", "const:0.5", "const:0.2", "uniform",
                        "block:j=2", "spike:j=5"),
        family_specs=family_specs,
        seeds=tuple(range(n_seeds)),
    )


def structural_corpus(n_families: int = 1000, depths: tuple = tuple(range(4, 15)),
                      name: str = "structural-v1") -> list:
    """Seeded (family, f) pairs for the exact structural checks: round-robin
    over depths, alternating strategies, functions cycling through kinds."""
    fkinds = ("const:1", "uniform", "block:j=2", "bumps:n=3")
    out = []
    for i in range(n_families):
        depth = depths[i % len(depths)]
        grid = DyadicGrid(depth)
        f = function_from_spec(grid, fkinds[i % len(fkinds)],
                               derive_seed(name, "f", i))
        if i % 2 == 0:
            density = min(0.4, 100.0 / (1 << depth))
            fam = generate_sparse(grid, f"random:density={density:g}",
                                  seed=derive_seed(name, "fam", i))
        else:
            fam = generate_sparse(grid, "stopping:ratio=8", f=f,
                                  seed=derive_seed(name, "fam", i))
        out.append((fam, f))
    return out

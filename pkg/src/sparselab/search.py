"""Randomized extremal search over (weight, function, sparse family) space.

Plain hill climbing with random restarts: coordinate proposals multiply one
dyadic block of f or w by a log-normal factor, or toggle one candidate cube
(with sparsity re-validation); a proposal is accepted iff the objective
strictly improves. Runs are bit-reproducible from the seed.

The probe table contrasts the plain-M objective (the disproved conjecture's
inequality, free to drift upward with depth) against the Orlicz-majorant
objective, which must stay inside the verified bound; crossing that bound
serializes the witness instance and halts, because such an instance would be
a finding.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, DyadicGrid, StepFunction, dyadic_maximal, integrate, \
    lp_norm, weak_norm
from .orlicz import c_phi, orlicz_maximal, parse_young
from .sparse import SparseFamily, apply_sparse, apply_sparse_square
from .verify import _cp_constant
from .weights import MAX_DYNAMIC_RANGE, Weight

__all__ = [
    "SearchConfig",
    "SearchState",
    "WitnessViolation",
    "trivial_instance",
    "random_instance",
    "hill_climb",
    "mw_probe",
]

OBJECTIVES = ("ratioVsOrlicz", "ratioVsPlainM", "squareRatio")


class WitnessViolation(RuntimeError):
    """A search value crossed the recorded theorem bound; witness on disk."""

    def __init__(self, message: str, path: str | None, value: float):
        super().__init__(message)
        self.path = path
        self.value = value


@dataclass(frozen=True)
class SearchConfig:
    objective: str = "ratioVsPlainM"
    phi_spec: str = "llog:eps=0.5"
    p: float = 2.0
    iters: int = 500
    proposal_sigma: float = 0.8
    f_move_prob: float = 0.55
    w_move_prob: float = 0.25          # remaining mass goes to cube toggles
    bound: float | None = None         # soft cross-module bound (already
                                       # includes c_phi for the Orlicz objective)
    witness_dir: str | None = None

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.iters < 0:
            raise ValueError("iters must be >= 0")

    def config_hash(self) -> str:
        text = json.dumps(self.__dict__, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class SearchState:
    family: SparseFamily
    f: StepFunction
    w: Weight
    objective: str
    value: float
    best_value: float
    iterations: int
    seed: int
    trace: list = field(default_factory=list)
    accepted: int = 0

    def instance_digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.f.values.tobytes())
        h.update(self.w.values.tobytes())
        h.update(str(sorted(self.family.cubes)).encode())
        return h.hexdigest()[:16]

    def witness_dict(self, config: SearchConfig) -> dict:
        return {
            "family": json.loads(self.family.to_json()),
            "f": {"depth": self.f.depth, "values": self.f.values.tolist()},
            "w": {"depth": self.w.depth, "values": self.w.values.tolist()},
            "objective": self.objective,
            "value": self.value,
            "seed": self.seed,
            "config_hash": config.config_hash(),
        }


def trivial_instance(grid: DyadicGrid) -> tuple:
    """Single-cube family with f = w = 1; every objective evaluates to >= 1."""
    family = SparseFamily(grid, (grid.root(),))
    ones = np.ones(grid.n_cells)
    return family, StepFunction(grid, ones), Weight(grid, ones.copy())


def random_instance(grid: DyadicGrid, seed: int) -> tuple:
    from .sparse import random_pruned
    rng = np.random.default_rng(seed)
    density = min(0.4, 100.0 / grid.n_cells)
    family = random_pruned(grid, density, seed=seed)
    f = StepFunction(grid, rng.uniform(0.0, 1.0, grid.n_cells))
    w = Weight(grid, np.exp(rng.normal(0.0, 1.0, grid.n_cells)))
    return family, f, w


def structured_instance(grid: DyadicGrid, seed: int) -> tuple:
    """Chain family anchored at a seeded cell, a weight spike at the chain
    bottom, f = 1: the stacked-averages configuration worth refining."""
    from .sparse import anchored_chain
    family = anchored_chain(grid, seed)
    bottom = family.cubes[-1]
    for q in family.cubes:
        if q.level > bottom.level:
            bottom = q
    a, b = grid.cell_span(bottom)
    w_vals = np.ones(grid.n_cells)
    w_vals[a:b] = min(float(grid.n_cells), MAX_DYNAMIC_RANGE / 2)
    f = StepFunction(grid, np.ones(grid.n_cells))
    return family, f, Weight(grid, w_vals)


def embed_instance(family: SparseFamily, f: StepFunction, w: Weight,
                   new_depth: int) -> tuple:
    """Refine an instance to a deeper grid; every objective here is invariant
    under this embedding, so search gains transfer across depths exactly."""
    old_depth = f.depth
    if new_depth < old_depth:
        raise ValueError("can only embed into a deeper grid")
    reps = 1 << (new_depth - old_depth)
    grid = DyadicGrid(new_depth)
    return (SparseFamily(grid, family.cubes, family.eta),
            StepFunction(grid, np.repeat(f.values, reps)),
            Weight(grid, np.repeat(w.values, reps)))


class _Objective:
    """Objective evaluation with caching of the weight-derived majorant."""

    def __init__(self, config: SearchConfig):
        self.config = config
        self.kind = config.objective
        self.phi = parse_young(config.phi_spec) if self.kind == "ratioVsOrlicz" else None
        self._w_key = None
        self._w_derived = None

    def _weight_terms(self, w: Weight):
        key = w.values.tobytes()
        if key != self._w_key:
            if self.kind == "ratioVsOrlicz":
                self._w_derived = orlicz_maximal(w, self.phi)
            elif self.kind == "ratioVsPlainM":
                self._w_derived = dyadic_maximal(w)
            else:
                self._w_derived = _cp_constant(w, self.config.p)
            self._w_key = key
        return self._w_derived

    def value(self, family: SparseFamily, f: StepFunction, w: Weight) -> float:
        if self.kind == "squareRatio":
            cp = self._weight_terms(w)
            norm = lp_norm(f, w, self.config.p)
            if norm == 0.0:
                return 0.0
            sf = apply_sparse_square(family, f)
            return weak_norm(sf, w, self.config.p) / (cp * norm)
        majorant = self._weight_terms(w)
        denom = integrate(StepFunction(f.grid, f.values * majorant.values))
        if denom <= 0.0:
            return 0.0
        tf = apply_sparse(family, f)
        return weak_norm(tf, w, 1.0) / denom


def _write_witness(state: SearchState, config: SearchConfig) -> str:
    out_dir = config.witness_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"witness_{state.objective}_{state.instance_digest()}.json")
    with open(path, "w") as fh:
        json.dump(state.witness_dict(config), fh, sort_keys=True)
    return path


def hill_climb(config: SearchConfig, grid: DyadicGrid, seed: int,
               start: tuple | None = None) -> SearchState:
    """Single deterministic chain; returns the best-so-far state and trace."""
    rng = np.random.default_rng(seed)
    family, f, w = start if start is not None else trivial_instance(grid)
    objective = _Objective(config)
    value = objective.value(family, f, w)
    state = SearchState(family=family, f=f, w=w, objective=config.objective,
                        value=value, best_value=value, iterations=0, seed=seed,
                        trace=[{"iter": 0, "value": value}])
    _check_bound(state, config)
    depth = grid.depth
    f_vals = f.values.copy()
    w_vals = w.values.copy()
    sigma_mix = (0.5, 1.0, 2.5)   # multi-scale proposals escape plateaus
    for it in range(1, config.iters + 1):
        state.iterations = it
        move = rng.random()
        sigma = config.proposal_sigma * sigma_mix[it % len(sigma_mix)]
        if move < config.f_move_prob:
            level = int(rng.integers(0, depth + 1))
            index = int(rng.integers(0, 1 << level))
            factor = float(np.exp(rng.normal(0.0, sigma)))
            a, b = grid.cell_span(Cube(level, index))
            new_f = f_vals.copy()
            new_f[a:b] *= factor
            if not np.all(np.isfinite(new_f)):
                continue
            cand = (state.family, StepFunction(grid, new_f), state.w)
        elif move < config.f_move_prob + config.w_move_prob:
            level = int(rng.integers(0, depth + 1))
            index = int(rng.integers(0, 1 << level))
            factor = float(np.exp(rng.normal(0.0, sigma)))
            a, b = grid.cell_span(Cube(level, index))
            new_w = w_vals.copy()
            new_w[a:b] *= factor
            mx, mn = float(new_w.max()), float(new_w.min())
            if not math.isfinite(mx) or mn <= 0.0 or mx / mn > MAX_DYNAMIC_RANGE:
                continue
            cand = (state.family, state.f, Weight(grid, new_w))
        else:
            level = int(rng.integers(0, depth + 1))
            index = int(rng.integers(0, 1 << level))
            cube = Cube(level, index)
            cubes = set(state.family.cubes)
            if cube in cubes:
                if len(cubes) == 1:
                    continue
                cubes.discard(cube)
            else:
                cubes.add(cube)
            try:
                cand = (SparseFamily(grid, tuple(cubes)), state.f, state.w)
            except ValueError:
                continue                    # sparsity violated: reject
        new_value = objective.value(*cand)
        if new_value > state.value:
            state.family, state.f, state.w = cand
            f_vals = state.f.values.copy()
            w_vals = state.w.values.copy()
            state.value = new_value
            state.best_value = new_value
            state.accepted += 1
            state.trace.append({"iter": it, "value": new_value})
            _check_bound(state, config)
    return state


def _check_bound(state: SearchState, config: SearchConfig) -> None:
    if config.bound is not None and state.value > config.bound:
        path = _write_witness(state, config)
        raise WitnessViolation(
            f"objective {state.objective} reached {state.value:.6g}, above the "
            f"recorded bound {config.bound:.6g}; witness at {path}",
            path, state.value)


def mw_probe(depths, iters_per_depth: int = 300, seed: int = 0,
             phi_spec: str = "llog:eps=0.5", restarts: int = 3,
             orlicz_bound: float | None = None,
             witness_dir: str | None = None) -> dict:
    """Per depth: climb the plain-M objective, then evaluate the Orlicz
    objective on the same best instances.

    The plain-M column is report-only (no failure rate is proved at finite
    depth); the Orlicz column is hard-checked against the recorded bound.
    """
    if list(depths) != sorted(depths):
        raise ValueError("depths must be increasing")
    plain_cfg = SearchConfig(objective="ratioVsPlainM", iters=iters_per_depth)
    phi = parse_young(phi_spec)
    rows = []
    carried = None               # best instance so far, embedded upward
    for depth in depths:
        grid = DyadicGrid(depth)
        plain_best = 0.0
        orlicz_best = 0.0
        best_states = []
        for r in range(restarts):
            chain_seed = seed * 1_000_003 + depth * 101 + r
            if r == 0 and carried is not None:
                start = embed_instance(*carried, depth)
            elif r == 0:
                start = trivial_instance(grid)
            elif r == 1:
                start = structured_instance(grid, chain_seed)
            else:
                start = random_instance(grid, chain_seed)
            state = hill_climb(plain_cfg, grid, chain_seed, start=start)
            plain_best = max(plain_best, state.best_value)
            best_states.append(state)
        top = max(best_states, key=lambda s: s.best_value)
        carried = (top.family, top.f, top.w)
        orl_cfg = SearchConfig(objective="ratioVsOrlicz", phi_spec=phi_spec,
                               iters=0, bound=orlicz_bound,
                               witness_dir=witness_dir)
        objective = _Objective(orl_cfg)
        for state in best_states:
            val = objective.value(state.family, state.f, state.w)
            orlicz_best = max(orlicz_best, val)
            probe_state = SearchState(family=state.family, f=state.f, w=state.w,
                                      objective="ratioVsOrlicz", value=val,
                                      best_value=val, iterations=0,
                                      seed=state.seed)
            _check_bound(probe_state, orl_cfg)
        rows.append({"depth": depth, "plainM_best": plain_best,
                     "orlicz_best": orlicz_best})
    return {"phi": phi.spec, "c_phi": c_phi(phi, use_surrogate=True).value,
            "iters_per_depth": iters_per_depth, "restarts": restarts,
            "seed": seed, "orlicz_bound": orlicz_bound, "rows": rows}

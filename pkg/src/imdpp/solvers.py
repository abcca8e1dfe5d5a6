"""Reference and guarantee solvers for budgeted set-function maximization."""
from __future__ import annotations

import itertools
import math
from typing import Callable, Hashable, Sequence

import numpy as np

from .dysim import FirstPromotionOracle, select_nominees
from .errors import SizeError
from .world import World

MAX_BRUTE_FORCE = 20


class SetFunctionOracle:
    """Memoized set function with element costs and a budget."""

    def __init__(self, ground: Sequence[Hashable], f: Callable[[frozenset], float],
                 cost: dict | Callable, budget: float):
        self.ground = sorted(ground)
        self._f = f
        self.cost = cost if callable(cost) else cost.__getitem__
        self.budget = budget
        self.cache: dict[frozenset, float] = {}

    def __call__(self, s) -> float:
        key = frozenset(s)
        if key not in self.cache:
            self.cache[key] = float(self._f(key))
        return self.cache[key]

    @property
    def calls(self) -> int:
        return len(self.cache)

    def set_cost(self, s) -> float:
        return math.fsum(self.cost(e) for e in s)

    def feasible(self, s) -> bool:
        return self.set_cost(s) <= self.budget + 1e-12


def brute_force_opt(oracle: SetFunctionOracle, budget: float | None = None):
    """Exact best feasible subset; ties go to the lexicographically smallest sorted tuple."""
    ground = oracle.ground
    if len(ground) > MAX_BRUTE_FORCE:
        raise SizeError(f"ground set of {len(ground)} exceeds the cap of {MAX_BRUTE_FORCE}")
    budget = oracle.budget if budget is None else budget
    best, best_v = (), oracle(())
    for r in range(1, len(ground) + 1):
        any_feasible = False
        for combo in itertools.combinations(ground, r):
            if oracle.set_cost(combo) > budget + 1e-12:
                continue
            any_feasible = True
            v = oracle(combo)
            if v > best_v or (v == best_v and combo < best):
                best, best_v = combo, v
        if not any_feasible:
            break
    return frozenset(best), best_v


def usm_double_greedy(oracle: SetFunctionOracle, ground: Sequence | None = None,
                      randomized: bool = False, rng: np.random.Generator | None = None):
    """Double greedy over ``ground`` in sorted order, ignoring the budget."""
    elems = sorted(oracle.ground if ground is None else ground)
    X: set = set()
    Y: set = set(elems)
    rng = rng or np.random.default_rng(0)
    for e in elems:
        a = oracle(X | {e}) - oracle(X)
        b = oracle(Y - {e}) - oracle(Y)
        if randomized:
            a2, b2 = max(a, 0.0), max(b, 0.0)
            keep = rng.random() < (a2 / (a2 + b2) if a2 + b2 > 0 else 1.0)
        else:
            keep = a >= b
        if keep:
            X.add(e)
        else:
            Y.discard(e)
    return frozenset(X)


def greedy_violating(oracle: SetFunctionOracle, ground: Sequence | None = None) -> list:
    return select_nominees(oracle.ground if ground is None else ground, oracle.budget, oracle,
                           oracle.cost, "violating")


def smk_solve(oracle: SetFunctionOracle, randomized_usm: bool = False, rng=None):
    """Best of two violating greedy runs and double greedy, repaired, versus the best singleton."""
    s1 = greedy_violating(oracle)
    rest = [e for e in oracle.ground if e not in set(s1)]
    s2 = greedy_violating(oracle, rest)
    s3 = usm_double_greedy(oracle, s1, randomized_usm, rng)
    order = {e: i for i, e in enumerate(s1)}
    order.update({e: len(s1) + i for i, e in enumerate(s2)})
    cands = [frozenset(s1), frozenset(s2), s3]
    sbar = cands[0]
    for c in cands[1:]:
        if oracle(c) > oracle(sbar):
            sbar = c
    if not oracle.feasible(sbar):
        last = max(sbar, key=order.__getitem__)
        sbar = sbar - {last}
    singles = [e for e in oracle.ground if oracle.cost(e) <= oracle.budget + 1e-12]
    if singles:
        e_max = min(singles, key=lambda e: (-oracle({e}), e))
        if oracle({e_max}) > oracle(sbar):
            return frozenset({e_max})
    return sbar


# ------------------------------------------------------------------ baselines

def degree_baseline(world: World, budget: float, T: int = 1) -> list:
    deg = world.out_degree()
    best_item = max(range(world.k), key=lambda x: (world.weights[x], -x)) if world.k else None
    seeds, spent = [], 0.0
    for u in sorted(range(world.n), key=lambda u: (-deg[u], u)):
        c = world.costs[u, best_item]
        if np.isfinite(c) and spent + c <= budget + 1e-12:
            seeds.append((u, best_item, 1))
            spent += c
    return seeds


def random_baseline(world: World, budget: float, T: int = 1, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    pairs = world.pairs()
    order = rng.permutation(len(pairs))
    seeds, spent = [], 0.0
    for i in order:
        u, x = pairs[i]
        c = world.costs[u, x]
        if spent + c <= budget + 1e-12:
            seeds.append((u, x, int(rng.integers(1, T + 1))))
            spent += c
    return seeds


def single_promotion_greedy(world: World, budget: float, T: int = 1, samples: int = 100,
                            seed: int = 0, lazy: bool = True) -> list:
    f = FirstPromotionOracle(world, samples, seed)
    noms = select_nominees(world.pairs(), budget, f, lambda p: world.cost(*p), "affordable",
                           lazy=lazy)
    return [(u, x, 1) for u, x in noms]


def baselines(world: World, budget: float, T: int, kind: str, **kw) -> list:
    if kind == "degree":
        return degree_baseline(world, budget, T)
    if kind == "random":
        return random_baseline(world, budget, T, **kw)
    if kind in ("single_promotion_greedy", "greedy1"):
        return single_promotion_greedy(world, budget, T, **kw)
    raise ValueError(f"unknown baseline {kind}")

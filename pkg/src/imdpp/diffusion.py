"""Multi-promotion diffusion: simulation, Monte Carlo and exact influence."""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .errors import BudgetError, InputError, SizeError
from .world import World


class Seed(NamedTuple):
    user: str
    item: str
    t: int


class Event(NamedTuple):
    t: int
    step: int
    user: str
    item: str
    kind: str


class SeedGroup(frozenset):
    """Set of (user, item, t) seeds."""

    def total_cost(self, world: World) -> float:
        return math.fsum(world.cost(*_index_pair(world, s)) for s in self)

    def sorted(self):
        return sorted(self, key=lambda s: (s[2], s[0], s[1]))


def _index_pair(world, s):
    u, x = s[0], s[1]
    if isinstance(u, str):
        if u not in world.uidx:
            raise InputError(f"unknown user {u}")
        u = world.uidx[u]
    if isinstance(x, str):
        if x not in world.iidx:
            raise InputError(f"unknown item {x}")
        x = world.iidx[x]
    return int(u), int(x)


def seed_array(world: World, seeds: Iterable, T: int | None = None) -> np.ndarray:
    """Validated (user, item, t) index rows sorted by (t, user, item)."""
    rows = set()
    for s in seeds:
        u, x = _index_pair(world, s)
        if not 0 <= u < world.n or not 0 <= x < world.k:
            raise InputError(f"seed {s} out of range")
        t = int(s[2])
        if t < 1 or (T is not None and t > T):
            raise InputError(f"seed {s} has promotion index outside [1, {T}]")
        if not np.isfinite(world.costs[u, x]):
            raise InputError(f"seed {s} has no seeding cost")
        rows.add((t, u, x))
    out = np.array([(u, x, t) for t, u, x in sorted(rows)], dtype=np.int64).reshape(-1, 3)
    return out


def seed_cost(world: World, seeds) -> float:
    return math.fsum(world.cost(*_index_pair(world, s)) for s in seeds)


def _check_budget(world, seeds, budget):
    if budget is not None and seed_cost(world, seeds) > budget + 1e-12:
        raise BudgetError(f"seed group costs {seed_cost(world, seeds):.6g} > budget {budget}")


def run_kernel(world: World, seeds: np.ndarray, T: int, key: int = 0, state=None,
               realization=None, t0: int = 0, user_mask=None, record=True, backend=None):
    """One campaign. Returns (events array or None, total, masked total, final state)."""
    be = kernels.get_backend(backend)
    st = (state if state is not None else world.init).copy()
    events = np.zeros((max(world.n * world.k, 1), 5), dtype=np.int64) if record else None
    ac = xc = None
    if realization is not None:
        ac, xc = realization.adopt, realization.ext
    mask = None if user_mask is None else np.ascontiguousarray(user_mask, dtype=np.uint8)
    nev, total, masked = be.simulate(world, st, seeds, int(T), int(t0), int(key), ac, xc,
                                     events, mask)
    return (events[:nev] if record else None), total, masked, st


def simulate_campaign(S, world: World, T: int, seed: int = 0, sample: int = 0,
                      budget: float | None = None, backend=None) -> list[Event]:
    _check_budget(world, S, budget)
    arr = seed_array(world, S, T)
    events, *_ = run_kernel(world, arr, T, kernels.sample_key(seed, sample), backend=backend)
    return [Event(int(t), int(z), world.users[u], world.items[x], kernels.KIND_NAMES[int(k)])
            for t, z, u, x, k in events]


def trace_jsonl(events: list[Event]) -> str:
    return "".join(json.dumps({"t": e.t, "step": e.step, "user": e.user, "item": e.item,
                               "kind": e.kind}) + "\n" for e in events)


def sample_keys(seed: int, M: int, offset: int = 0) -> np.ndarray:
    return np.array([kernels.sample_key(seed, offset + i) for i in range(M)], dtype=np.uint64)


def _chunk_values(args):
    world, seeds, T, keys, mask, backend = args
    return kernels.get_backend(backend).sample_values(world, world.init, seeds, T, keys, mask)


def sample_values(world: World, seeds: np.ndarray, T: int, keys, user_mask=None, workers: int = 1,
                  backend=None):
    """Per-sample (total, masked total) arrays for the given sample keys."""
    mask = None if user_mask is None else np.ascontiguousarray(user_mask, dtype=np.uint8)
    keys = np.asarray(keys, dtype=np.uint64)
    if workers <= 1 or len(keys) < 2 * workers:
        return kernels.get_backend(backend).sample_values(world, world.init, seeds, T, keys, mask)
    chunks = np.array_split(keys, workers)
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_chunk_values, [(world, seeds, T, c, mask, backend) for c in chunks]))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def mean_stderr(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    m = len(values)
    if m == 0:
        return 0.0, 0.0
    mean = math.fsum(values) / m
    if m == 1:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (m - 1)
    return mean, math.sqrt(var / m)


def sigma_estimate(S, world: World, T: int, M: int = 100, seed: int = 0,
                   budget: float | None = None, workers: int = 1, backend=None):
    """Monte Carlo importance-weighted adoptions: (mean, standard error)."""
    if M < 1:
        raise InputError("sample count must be at least 1")
    _check_budget(world, S, budget)
    arr = seed_array(world, S, T)
    if len(arr) == 0:
        return 0.0, 0.0
    vals, _ = sample_values(world, arr, T, sample_keys(seed, M), workers=workers, backend=backend)
    return mean_stderr(vals)


# ---------------------------------------------------------------- realizations

@dataclass
class Realization:
    """Outcome of every coin: adopt[t-1, e, x] and ext[t-1, e, x, y] (1 = success)."""

    adopt: np.ndarray
    ext: np.ndarray
    T: int


def _require_frozen(world):
    if world.eta != 0 or world.lam != 0 or world.mu != 0:
        raise InputError("exact and realization evaluation need frozen dynamics (eta=lambda=mu=0)")


def random_coins(world: World, T: int):
    """Coins whose success probability is strictly between 0 and 1, with that probability."""
    _require_frozen(world)
    st = world.init
    out = []
    for t in range(1, T + 1):
        for e in range(world.E):
            d = int(world.dst[e])
            for x in range(world.k):
                if st.adopted[d, x]:
                    continue
                pa = st.pact[e] * st.pref[d, x]
                if 0 < pa < 1:
                    out.append(((t, e, x, -1), pa))
                if pa <= 0:
                    continue
                for y in range(world.k):
                    if y == x or st.adopted[d, y]:
                        continue
                    pe = pa * st.rc[d, x, y]
                    if 0 < pe < 1:
                        out.append(((t, e, x, y), pe))
    return out


def _blank(world, T):
    return (np.zeros((T, world.E, world.k), dtype=np.uint8),
            np.zeros((T, world.E, world.k, world.k), dtype=np.uint8))


def _set_coin(adopt, ext, cid, v):
    t, e, x, y = cid
    if y < 0:
        adopt[t - 1, e, x] = v
    else:
        ext[t - 1, e, x, y] = v


def draw_realization(world: World, T: int, rng: np.random.Generator) -> Realization:
    adopt, ext = _blank(world, T)
    for cid, p in random_coins(world, T):
        _set_coin(adopt, ext, cid, 1 if rng.random() < p else 0)
    return Realization(adopt, ext, T)


def enumerate_realizations(world: World, T: int, cap: int = 1 << 20):
    """Yield (realization, probability) over every outcome of the random coins."""
    coins = random_coins(world, T)
    if len(coins) > 62 or (1 << len(coins)) > cap:
        raise SizeError(f"{len(coins)} random coins exceed the enumeration cap {cap}")
    for bits in itertools.product((0, 1), repeat=len(coins)):
        adopt, ext = _blank(world, T)
        prob = 1.0
        for (cid, p), b in zip(coins, bits):
            _set_coin(adopt, ext, cid, b)
            prob *= p if b else 1.0 - p
        yield Realization(adopt, ext, T), prob


def sigma_on_realization(r: Realization, S, world: World, backend=None) -> float:
    _require_frozen(world)
    arr = seed_array(world, S, r.T)
    _, total, _, _ = run_kernel(world, arr, r.T, realization=r, record=False, backend=backend)
    return total


class _Branch(Exception):
    def __init__(self, cid, p):
        self.cid, self.p = cid, p


def _static_replay(world, seeds, T, decided):
    """Set-based replay of a frozen campaign; raises _Branch at the first undecided coin."""
    st = world.init
    adopted = {(u, x) for u, x in zip(*np.nonzero(st.adopted))}
    out = {}
    for a, b in zip(world.src, world.dst):
        out.setdefault(int(a), []).append(int(b))
    eid = {(int(a), int(b)): e for e, (a, b) in enumerate(zip(world.src, world.dst))}

    def flip(cid, p):
        if p >= 1:
            return True
        if p <= 0:
            return False
        if cid not in decided:
            raise _Branch(cid, p)
        return decided[cid]

    value = 0.0
    for t in range(1, T + 1):
        newly = set()
        for u, x, tt in seeds:
            if tt == t and (u, x) not in adopted:
                adopted.add((u, x))
                newly.add((u, x))
                value += world.weights[x]
        while newly:
            nxt = set()
            for s, x in sorted(newly):
                for d in out.get(s, []):
                    if (d, x) in adopted:
                        continue
                    e = eid[(s, d)]
                    pa = st.pact[e] * st.pref[d, x]
                    if pa <= 0:
                        continue
                    if flip((t, e, x, -1), pa):
                        nxt.add((d, x))
                    for y in range(world.k):
                        if y != x and (d, y) not in adopted and st.rc[d, x, y] > 0:
                            if flip((t, e, x, y), pa * st.rc[d, x, y]):
                                nxt.add((d, y))
            for d, y in nxt:
                adopted.add((d, y))
                value += world.weights[y]
            newly = nxt
    return value


def sigma_exact_static(S, world: World, T: int, cap: int = 1 << 20) -> float:
    """Exact expected influence in the frozen regime, branching only on consulted coins."""
    _require_frozen(world)
    seeds = [(int(u), int(x), int(t)) for u, x, t in seed_array(world, S, T)]
    total = []
    stack = [({}, 1.0)]
    leaves = 0
    while stack:
        decided, prob = stack.pop()
        try:
            v = _static_replay(world, seeds, T, decided)
        except _Branch as br:
            stack.append(({**decided, br.cid: False}, prob * (1 - br.p)))
            stack.append(({**decided, br.cid: True}, prob * br.p))
            continue
        leaves += 1
        if leaves > cap:
            raise SizeError(f"more than {cap} realization outcomes")
        total.append(prob * v)
    return math.fsum(total)

"""Dysim: nominee selection, target markets, item ordering and seed timing."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .diffusion import run_kernel, sample_keys, sample_values, seed_array
from .errors import InputError
from .world import World


@dataclass(frozen=True)
class DysimConfig:
    theta: float = 1
    rho: float = 0.01
    beta: float = 1.0
    samples: int = 100
    seed: int = 0
    lazy: bool = True
    safeguard: bool = True


# ------------------------------------------------------------------ TMI

class FirstPromotionOracle:
    """f(N): influence of nominees all seeded in promotion 1 with frozen dynamics.

    Every evaluation reuses the same sample keys, so differences between sets are
    paired (common random numbers)."""

    def __init__(self, world: World, samples: int = 100, seed: int = 0):
        self.world = world.frozen()
        self.keys = sample_keys(seed, samples)
        self.cache: dict[frozenset, float] = {}
        self.calls = 0

    def __call__(self, nominees) -> float:
        key = frozenset(nominees)
        if key not in self.cache:
            self.calls += 1
            if not key:
                self.cache[key] = 0.0
            else:
                arr = seed_array(self.world, [(u, x, 1) for u, x in key], 1)
                vals, _ = sample_values(self.world, arr, 1, self.keys)
                self.cache[key] = math.fsum(vals) / len(vals)
        return self.cache[key]


def mcp(nominees, cand, f: Callable, cost: float) -> float:
    """Marginal gain of ``cand`` per unit cost."""
    if not cost > 0:
        raise InputError(f"cost of {cand} must be positive, got {cost}")
    base = frozenset(nominees)
    return (f(base | {cand}) - f(base)) / cost


def select_nominees(candidates: Iterable[Hashable], budget: float, f: Callable,
                    cost: Callable[[Hashable], float], variant: str = "affordable",
                    lazy: bool = False) -> list:
    """Greedy by marginal cost-performance ratio; ties go to the smallest candidate.

    ``affordable`` keeps only candidates that fit the remaining budget and runs until
    none is left. ``violating`` considers every candidate with cost <= budget and
    stops right after the budget is exceeded, or before a negative-gain addition.
    """
    if variant not in ("affordable", "violating"):
        raise ValueError(variant)
    pool = sorted(c for c in candidates if cost(c) <= budget + 1e-12)
    chosen: list = []
    spent = 0.0
    if not lazy:
        while pool:
            if variant == "affordable":
                pool = [c for c in pool if cost(c) <= budget - spent + 1e-12]
                if not pool:
                    break
            best, best_r = None, -math.inf
            for c in pool:
                r = mcp(chosen, c, f, cost(c))
                if r > best_r:
                    best, best_r = c, r
            if variant == "violating" and best_r < 0:
                break
            chosen.append(best)
            pool.remove(best)
            spent += cost(best)
            if variant == "violating" and spent > budget + 1e-12:
                break
        return chosen
    heap = [(-mcp([], c, f, cost(c)), c, 0) for c in pool]
    heapq.heapify(heap)
    version = 0
    while heap:
        neg, c, ver = heapq.heappop(heap)
        if variant == "affordable" and cost(c) > budget - spent + 1e-12:
            continue
        if ver != version:
            heapq.heappush(heap, (-mcp(chosen, c, f, cost(c)), c, version))
            continue
        if variant == "violating" and -neg < 0:
            break
        chosen.append(c)
        spent += cost(c)
        version += 1
        if variant == "violating" and spent > budget + 1e-12:
            break
    return chosen


def network_diameter(hops: np.ndarray) -> int:
    return max(int(hops.max()) if hops.size else 0, 1)


def cluster_nominees(nominees: Sequence[tuple[int, int]], rbar_c: np.ndarray, rbar_s: np.ndarray,
                     hops: np.ndarray, diameter: int, beta: float = 1.0) -> list[list]:
    """Average-linkage agglomerative clustering; merge while the best affinity is positive."""
    nominees = sorted(nominees)
    if not nominees:
        return []
    m = len(nominees)
    aff = np.zeros((m, m))
    for i, (u, x) in enumerate(nominees):
        for j, (v, y) in enumerate(nominees):
            if i == j:
                continue
            rel = 0.0 if x == y else rbar_c[x, y] - rbar_s[x, y]
            h = hops[u, v]
            h = diameter if h < 0 else min(h, diameter)
            aff[i, j] = rel - beta * h / diameter
    clusters = [[i] for i in range(m)]
    while len(clusters) > 1:
        best, pair = -math.inf, None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                v = aff[np.ix_(clusters[a], clusters[b])].mean()
                if v > best + 1e-15:
                    best, pair = v, (a, b)
        if best <= 0:
            break
        a, b = pair
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    out = [[nominees[i] for i in c] for c in clusters]
    return sorted(out, key=lambda c: c[0])


@dataclass
class TargetMarket:
    id: int
    nominees: list
    users: list
    diameter: int
    duration: int = 1
    ae: float = 0.0

    @property
    def items(self) -> list[int]:
        return sorted({x for _, x in self.nominees})

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=np.uint8)
        m[self.users] = 1
        return m


def influenced_users(world: World, sources: Iterable[int], rho: float,
                     pact: np.ndarray | None = None) -> list[int]:
    """Users whose best path product of influence from a source exceeds rho."""
    pact = world.init.pact if pact is None else pact
    best = {int(s): 1.0 for s in sources}
    heap = [(-1.0, s) for s in sorted(best)]
    done = set()
    while heap:
        negp, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for e in range(world.out_ptr[v], world.out_ptr[v + 1]):
            w = int(world.dst[e])
            p = -negp * pact[e]
            if p > rho and p > best.get(w, 0.0):
                best[w] = p
                heapq.heappush(heap, (-p, w))
    return sorted(best)


def induced_diameter(hops_fn, users: list[int]) -> int:
    """Hop diameter of the undirected subgraph induced by ``users``."""
    users = list(users)
    if len(users) <= 1:
        return 0
    return min(hops_fn(users), len(users) - 1)


def _induced_hops(world: World):
    def fn(users):
        s = set(users)
        adj = {u: set() for u in users}
        for a, b in zip(world.src, world.dst):
            a, b = int(a), int(b)
            if a in s and b in s:
                adj[a].add(b)
                adj[b].add(a)
        diam = 0
        for u in users:
            dist = {u: 0}
            frontier = [u]
            while frontier:
                nxt = []
                for v in frontier:
                    for w in adj[v]:
                        if w not in dist:
                            dist[w] = dist[v] + 1
                            nxt.append(w)
                frontier = nxt
            diam = max(diam, max(dist.values()))
        return diam
    return fn


def antagonistic_extent(market: TargetMarket, group: list[TargetMarket], rbar_s) -> float:
    total = 0.0
    for other in group:
        if other is market:
            continue
        for x in market.items:
            for y in other.items:
                total += rbar_s[x, y]
    return float(total)


def group_markets(markets: list[TargetMarket], theta: float) -> list[list[TargetMarket]]:
    parent = list(range(len(markets)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(markets)):
        for j in range(i + 1, len(markets)):
            if len(set(markets[i].users) & set(markets[j].users)) > theta:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i, m in enumerate(markets):
        groups.setdefault(find(i), []).append(m)
    return sorted(groups.values(), key=lambda g: min(m.id for m in g))


def identify_and_prioritize(clusters: list[list], theta: float, world: World | None = None,
                            rbar_s: np.ndarray | None = None, rho: float = 0.01,
                            users_of: Callable | None = None, T: int = 1,
                            diameter_of: Callable | None = None) -> list[list[TargetMarket]]:
    """Build one market per cluster, group overlapping markets, order each group by AE."""
    if rbar_s is None:
        rbar_s = world.mean_relevance()[1]
    if users_of is None:
        users_of = lambda c: influenced_users(world, {u for u, _ in c}, rho)
    if diameter_of is None:
        hf = _induced_hops(world)
        diameter_of = lambda us: induced_diameter(hf, us)
    markets = []
    for i, c in enumerate(clusters):
        users = sorted(set(users_of(c)) | {u for u, _ in c})
        markets.append(TargetMarket(i + 1, list(c), users, diameter_of(users)))
    groups = group_markets(markets, theta)
    for g in groups:
        total = sum(len(m.nominees) for m in g)
        for m in g:
            m.ae = antagonistic_extent(m, g, rbar_s)
            m.duration = market_duration(len(m.nominees), T, total)
        g.sort(key=lambda m: (m.ae, m.id))
    return groups


def market_duration(size: int, T: int, group_total: int) -> int:
    """size*T/group_total rounded half-up, at least 1."""
    return max(1, (2 * size * T + group_total) // (2 * group_total))


# ------------------------------------------------------------------ DRE

def likelihoods(rc: float, rs: float) -> tuple[float, float]:
    tot = rc + rs
    if tot <= 0:
        return 0.0, 0.0
    return rc / tot, rs / tot


def impact_term(x: int, y: int, rbar_c, rbar_s, w_y: float, perturb: bool = False) -> float:
    """One-hop contribution of the relation x-y, weighted by importance w_y."""
    lc, ls = likelihoods(rbar_c[x, y], rbar_s[x, y])
    if perturb:
        return lc * rbar_c[x, y] * w_y + ls * rbar_s[x, y] * w_y
    return lc * rbar_c[x, y] * w_y - ls * rbar_s[x, y] * w_y


def _relevant(x, rbar_c, rbar_s):
    k = rbar_c.shape[0]
    return [y for y in range(k) if y != x and rbar_c[x, y] + rbar_s[x, y] > 0]


def proactive_impact(x: int, d: int, rbar_c, rbar_s, weights, perturb: bool = False,
                     _path: frozenset | None = None) -> float:
    """Impact of x on other items' preferences, recursing d hops along simple paths."""
    if d <= 0:
        return 0.0
    path = (_path or frozenset()) | {x}
    total = 0.0
    for y in _relevant(x, rbar_c, rbar_s):
        if y in path:
            continue
        total += impact_term(x, y, rbar_c, rbar_s, weights[y], perturb)
        total += proactive_impact(y, d - 1, rbar_c, rbar_s, weights, perturb, path)
    return total


def reactive_impact(x: int, d: int, rbar_c, rbar_s, w_x: float, perturb: bool = False,
                    _path: frozenset | None = None) -> float:
    """Impact flowing into x from other items, with importance fixed at w_x."""
    if d <= 0:
        return 0.0
    path = (_path or frozenset()) | {x}
    total = 0.0
    for z in _relevant(x, rbar_c, rbar_s):
        if z in path:
            continue
        total += impact_term(z, x, rbar_c, rbar_s, w_x, perturb)
        total += reactive_impact(z, d - 1, rbar_c, rbar_s, w_x, perturb, path)
    return total


def dynamic_reachability(x: int, d: int, rbar_c, rbar_s, weights, perturb: bool = False) -> float:
    return (proactive_impact(x, d, rbar_c, rbar_s, weights, perturb)
            + reactive_impact(x, d, rbar_c, rbar_s, weights[x], perturb))


# ------------------------------------------------------------------ TDSI

def ais_matrix(world: World, adopted: np.ndarray, pact: np.ndarray, model: str = "ic") -> np.ndarray:
    """Aggregated influence on each (user, item) from in-neighbours that adopted the item."""
    n, k = adopted.shape
    src_ad = adopted[world.src].astype(np.float64)          # (E, k)
    if model == "lt":
        acc = np.zeros((n, k))
        np.add.at(acc, world.dst, src_ad * pact[:, None])
        return np.minimum(acc, 1.0)
    keep = np.ones((n, k))
    np.multiply.at(keep, world.dst, 1.0 - src_ad * pact[:, None])
    return 1.0 - keep


def future_likelihood(world: World, state, users, model: str = "ic") -> float:
    """Expected-adoption likelihood over the users' not-yet-adopted items."""
    ais = ais_matrix(world, state.adopted, state.pact, model)
    users = np.asarray(sorted(users), dtype=np.int64)
    open_ = state.adopted[users] == 0
    return float(np.sum(ais[users] * state.pref[users] * open_))


class MarketEvaluator:
    """Monte Carlo statistics of a seed group restricted to one market."""

    def __init__(self, world: World, market_users, T: int, samples: int = 100, seed: int = 0):
        self.world = world
        self.users = sorted(market_users)
        self.mask = np.zeros(world.n, dtype=np.uint8)
        self.mask[self.users] = 1
        self.T = T
        self.keys = sample_keys(seed, samples, offset=1 << 20)
        self.cache: dict = {}

    def stats(self, group) -> tuple[float, float, np.ndarray, np.ndarray]:
        """(market influence, future likelihood, mean r^C, mean r^S) after the group."""
        key = frozenset(group)
        if key in self.cache:
            return self.cache[key]
        w = self.world
        arr = seed_array(w, key, self.T)
        model = w.params.diffusion_model
        sig, pis = [], []
        rc = np.zeros((w.k, w.k))
        rs = np.zeros((w.k, w.k))
        for kk in self.keys:
            _, _, masked, st = run_kernel(w, arr, self.T, int(kk), user_mask=self.mask,
                                          record=False)
            sig.append(masked)
            pis.append(future_likelihood(w, st, self.users, model))
            rc += st.rc[self.users].mean(axis=0)
            rs += st.rs[self.users].mean(axis=0)
        m = len(self.keys)
        out = (math.fsum(sig) / m, math.fsum(pis) / m, rc / m, rs / m)
        self.cache[key] = out
        return out

    def substantial_influence(self, group, cand) -> float:
        base = self.stats(group)
        new = self.stats(set(group) | {cand})
        t = cand[2]
        return (new[0] - base[0]) + (self.T - t + 1) / self.T * (new[1] - base[1])


def timing_window(group_seeds, duration: int, prev_max: int, T: int) -> tuple[int, int]:
    """Candidate timings: the latest group timing and the one after, capped by the market."""
    t_hat = max((s[2] for s in group_seeds), default=1)
    hi = min(t_hat + 1, duration + prev_max, T)
    return min(t_hat, T), max(min(t_hat, T), hi)


def tdsi(item_nominees: list, group_seeds: list, duration: int, prev_max: int, T: int,
         si: Callable, log: list | None = None) -> list:
    """Give each nominee of one item the timing with maximal substantial influence."""
    pending = sorted(item_nominees)
    picked = []
    while pending:
        lo, hi = timing_window(group_seeds, duration, prev_max, T)
        if log is not None:
            log.append(("window", lo, hi))
        best, best_v = None, -math.inf
        for t in range(lo, hi + 1):
            for u, x in pending:
                v = si(group_seeds, (u, x, t))
                if v > best_v + 1e-15:
                    best, best_v = (u, x, t), v
        group_seeds.append(best)
        picked.append(best)
        pending.remove((best[0], best[1]))
        if log is not None:
            log.append(("pick", best, best_v))
    return picked


@dataclass
class DysimResult:
    seeds: list
    nominees: list = field(default_factory=list)
    clusters: list = field(default_factory=list)
    groups: list = field(default_factory=list)
    log: list = field(default_factory=list)
    chosen_from: str = "plan"


def schedule_group(world: World | None, group: list[TargetMarket], T: int, cfg: DysimConfig,
                   log: list, perturb: bool = False, t_floor: int = 1,
                   stop_at_later: bool = False, si_for: Callable | None = None,
                   dr_for: Callable | None = None) -> list:
    """Order items by reachability and time each nominee, market by market.

    ``si_for(market)`` and ``dr_for(market, group_seeds, item)`` replace the Monte
    Carlo estimates when given. Returns the group's seeds in selection order.
    """
    group_seeds: list = []
    prev_max = t_floor - 1
    for market in group:
        if si_for is None or dr_for is None:
            ev = MarketEvaluator(world, market.users, T, cfg.samples, cfg.seed)
        si = si_for(market) if si_for is not None else ev.substantial_influence

        def dr(x):
            if dr_for is not None:
                return dr_for(market, group_seeds, x)
            _, _, rbar_c, rbar_s = ev.stats(group_seeds)
            return dynamic_reachability(x, market.diameter, rbar_c, rbar_s, world.weights,
                                        perturb)

        pending_items = market.items
        market_max = prev_max
        while pending_items:
            scores = [(dr(x), x) for x in pending_items]
            best = max(scores, key=lambda s: (s[0], -s[1]))[1]
            log.append(("item", market.id, best))
            pending_items = [x for x in pending_items if x != best]
            noms = [(u, x) for u, x in market.nominees if x == best]
            if stop_at_later:
                picked = _tdsi_until_later(noms, group_seeds, market.duration, prev_max, T, si,
                                           t_floor, log)
            else:
                picked = tdsi(noms, group_seeds, market.duration, prev_max, T, si, log)
            if picked:
                market_max = max(market_max, max(s[2] for s in picked))
        prev_max = market_max
    return group_seeds


def _tdsi_until_later(noms, group_seeds, duration, prev_max, T, si, t_now, log):
    """Adaptive round: timings limited to {t_now, t_now+1}; stop when t_now+1 wins."""
    pending = sorted(noms)
    picked = []
    while pending:
        best, best_v = None, -math.inf
        for t in (t_now, t_now + 1):
            if t > T:
                continue
            for u, x in pending:
                v = si(group_seeds, (u, x, t))
                if v > best_v + 1e-15:
                    best, best_v = (u, x, t), v
        log.append(("pick", best, best_v))
        if best[2] != t_now:
            break
        group_seeds.append(best)
        picked.append(best)
        pending.remove((best[0], best[1]))
    return picked


def plan_markets(world: World, nominees: list, T: int, cfg: DysimConfig):
    rbar_c, rbar_s = world.mean_relevance()
    hops = world.hop_distances()
    clusters = cluster_nominees(nominees, rbar_c, rbar_s, hops, network_diameter(hops), cfg.beta)
    groups = identify_and_prioritize(clusters, cfg.theta, world, rbar_s, cfg.rho, T=T)
    return clusters, groups


def dysim_solve(world: World, budget: float, T: int, cfg: DysimConfig = DysimConfig(),
                perturb_dr: bool = False) -> DysimResult:
    """Plan seeds, item order and timings for all promotions."""
    if T < 1:
        raise InputError("T must be at least 1")
    f = FirstPromotionOracle(world, cfg.samples, cfg.seed)
    cost = lambda p: world.cost(*p)
    nominees = select_nominees(world.pairs(), budget, f, cost, "affordable", lazy=cfg.lazy)
    res = DysimResult([], nominees)
    if not nominees:
        return res
    res.clusters, res.groups = plan_markets(world, nominees, T, cfg)
    seeds = []
    for g in res.groups:
        seeds.extend(schedule_group(world, g, T, cfg, res.log, perturb_dr))
    res.seeds = seeds
    if cfg.safeguard:
        first = [(u, x, 1) for u, x in nominees]
        single = max(((u, x, 1) for u, x in world.pairs() if world.cost(u, x) <= budget),
                     key=lambda s: (f([s[:2]]), -s[0], -s[1]))
        options = [("plan", seeds), ("first", first), ("single", [single])]
        keys = sample_keys(cfg.seed, cfg.samples, offset=1 << 21)
        vals = []
        for name, s in options:
            v, _ = sample_values(world, seed_array(world, s, T), T, keys)
            vals.append(math.fsum(v) / len(v))
        i = int(np.argmax(vals))  # first maximum, so the plan wins ties
        res.chosen_from, res.seeds = options[i][0], list(options[i][1])
    return res


# ------------------------------------------------------------------ adaptive

def _substitutable_overlap(groups, rbar_s) -> bool:
    for g in groups:
        for i, a in enumerate(g):
            for b in g[i + 1:]:
                if any(rbar_s[x, y] > 0 for x in a.items for y in b.items if x != y):
                    return True
    return False


def default_observer(world: World, seed: int = 0, sample: int = 0):
    """Observer that realizes each round with one fixed sample key."""
    from . import kernels
    key = kernels.sample_key(seed, sample)

    def observe(state, t, seeds):
        arr = seed_array(world, [(u, x, 1) for u, x, _ in seeds], 1)
        _, total, _, st = run_kernel(world, arr, 1, key, state=state, t0=t - 1, record=False)
        return st, total
    return observe


def dysim_adaptive(world: World, budget: float, T: int, observe: Callable | None = None,
                   cfg: DysimConfig = DysimConfig()):
    """Plan round by round, observing each realized promotion before the next.

    ``observe(state, t, seeds)`` returns (state after promotion t, realized value).
    Returns (list of per-round seed lists, total realized value).
    """
    observe = observe or default_observer(world, cfg.seed)
    state = world.init.copy()
    remaining = budget
    rounds = []
    realized = 0.0
    for t in range(1, T + 1):
        cur = world.with_state(state)
        f = FirstPromotionOracle(cur, cfg.samples, cfg.seed + t)
        cost = lambda p: cur.cost(*p)
        pool = [p for p in cur.pairs() if not state.adopted[p]]
        if t == T:
            noms = select_nominees(pool, remaining, f, cost, "affordable", lazy=cfg.lazy)
            chosen = [(u, x, t) for u, x in noms]
        else:
            noms = []
            rbar_c, rbar_s = cur.mean_relevance()
            while True:
                left = remaining - sum(cost(p) for p in noms)
                cands = [p for p in pool if p not in noms and cost(p) <= left + 1e-12]
                if not cands:
                    break
                nxt = select_nominees(cands, left, lambda s: f(list(noms) + list(s)), cost,
                                      "affordable", lazy=False)[:1]
                if not nxt:
                    break
                trial = noms + nxt
                _, groups = plan_markets(cur, trial, T - t + 1, cfg)
                if _substitutable_overlap(groups, rbar_s):
                    break  # reject the latest nominee
                noms = trial
            chosen = []
            if noms:
                horizon = T - t + 1
                _, groups = plan_markets(cur, noms, horizon, cfg)
                log: list = []
                for g in groups:
                    picked = schedule_group(cur, g, horizon, cfg, log, t_floor=1,
                                             stop_at_later=True)
                    chosen.extend((u, x, t) for u, x, _ in picked)
        remaining -= sum(cur.cost(u, x) for u, x, _ in chosen)
        state, value = observe(state, t, chosen)
        realized += value
        rounds.append(chosen)
    return rounds, realized

"""Acceptance checks with independent oracles; each returns a CheckResult."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diffusion import (enumerate_realizations, mean_stderr, run_kernel, sample_keys,
                        sample_values, seed_array, sigma_exact_static)
from .dysim import (DysimConfig, TargetMarket, cluster_nominees, dynamic_reachability,
                    identify_and_prioritize, impact_term, network_diameter, select_nominees,
                    dysim_solve, tdsi)
from .errors import SizeError
from .solvers import SetFunctionOracle, brute_force_opt, single_promotion_greedy, \
    degree_baseline, smk_solve, usm_double_greedy
from .world import Params, World, array_world

TOL = 1e-9


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0
    limit: float = math.inf

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = []
        for k, v in self.detail.items():
            parts.append(f"{k}={_fmt(v)}")
        return f"[{status}] {self.number:2d} {self.name} ({self.seconds:.2f}s) " + " ".join(parts)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(number, name, limit):
    def deco(fn):
        def run(*args, **kw):
            t0 = time.perf_counter()
            passed, detail = fn(*args, **kw)
            dt = time.perf_counter() - t0
            detail = dict(detail)
            if dt > limit:
                detail["over_time_limit"] = f"{dt:.1f}s>{limit}s"
            return CheckResult(number, name, bool(passed) and dt <= limit, detail, dt, limit)
        run.__name__ = fn.__name__
        run.number = number
        return run
    return deco


# ------------------------------------------------------------------ random tiny worlds

def tiny_world(rng: np.random.Generator, max_users=5, max_items=2, max_T=2, frozen=True,
               positive=False, max_coins=None, tries=200):
    """Random small world; with ``max_coins`` retries until the random coin count fits."""
    from .diffusion import random_coins
    for _ in range(tries):
        n = int(rng.integers(2, max_users + 1))
        k = int(rng.integers(1, max_items + 1))
        T = int(rng.integers(1, max_T + 1))
        edges = {}
        for a in range(n):
            for b in range(n):
                if a != b and (positive and b == (a + 1) % n or rng.random() < 0.35):
                    edges[(a, b)] = float(rng.choice([1.0, rng.uniform(0.2, 0.9)]))
        if positive:
            pref = rng.uniform(0.3, 1.0, (n, k))
        else:
            pref = np.where(rng.random((n, k)) < 0.3, 1.0, rng.uniform(0.0, 1.0, (n, k)))
        s_c = np.zeros((1, k, k))
        for x in range(k):
            for y in range(x + 1, k):
                s_c[0, x, y] = s_c[0, y, x] = rng.uniform(0.2, 1.0) if positive else \
                    float(rng.choice([0.0, rng.uniform(0.2, 1.0)]))
        weights = rng.uniform(0.5, 1.5, k).round(3)
        costs = rng.uniform(0.5, 2.0, (n, k)).round(3)
        params = Params(0, 0, 0) if frozen else Params(0.5, 0.2, 0.25)
        w = array_world(n, k, edges, pref, s_c=s_c, weights=weights, costs=costs, params=params)
        if max_coins is not None:
            if len(random_coins(w, T)) > max_coins:
                continue
        return w, T
    raise SizeError("could not draw a small enough instance")


# ------------------------------------------------------------------ 1: DR terms

def impact_terms_fixture():
    """Items iPhone, iPad, AirPods with the relevances used in the DR worked example."""
    rbar_c = np.zeros((3, 3))
    rbar_s = np.zeros((3, 3))
    rbar_c[0, 1] = rbar_c[1, 0] = 0.2
    rbar_s[0, 1] = rbar_s[1, 0] = 0.4
    rbar_c[0, 2] = rbar_c[2, 0] = 0.4
    weights = np.array([1.0, 1.0, 0.5])
    return rbar_c, rbar_s, weights


def _path_sum(x, d, rbar_c, rbar_s, term):
    """Sum of term(prev, last) over every simple path from x with 1..d hops."""
    k = rbar_c.shape[0]
    total = 0.0
    stack = [(x,)]
    while stack:
        path = stack.pop()
        if len(path) - 1 >= d:
            continue
        a = path[-1]
        for b in range(k):
            if b in path or rbar_c[a, b] + rbar_s[a, b] <= 0:
                continue
            total += term(a, b)
            stack.append(path + (b,))
    return total


def dr_by_paths(x, d, rbar_c, rbar_s, weights):
    """Reachability evaluated by explicit path enumeration."""
    def lik(a, b):
        s = rbar_c[a, b] + rbar_s[a, b]
        return rbar_c[a, b] / s, rbar_s[a, b] / s

    def pro(a, b):
        lc, ls = lik(a, b)
        return (lc * rbar_c[a, b] - ls * rbar_s[a, b]) * weights[b]

    def rea(a, b):
        lc, ls = lik(b, a)
        return (lc * rbar_c[b, a] - ls * rbar_s[b, a]) * weights[x]

    return _path_sum(x, d, rbar_c, rbar_s, pro) + _path_sum(x, d, rbar_c, rbar_s, rea)


@_timed(1, "dr_first_hop_terms", 1.0)
def check_dr_terms(perturb: bool = False, graphs: int = 50, seed: int = 1):
    rbar_c, rbar_s, w = impact_terms_fixture()
    ipad = impact_term(0, 1, rbar_c, rbar_s, w[1], perturb)
    airpods = impact_term(0, 2, rbar_c, rbar_s, w[2], perturb)
    reactive = impact_term(2, 0, rbar_c, rbar_s, w[0], perturb)
    first_ok = (abs(ipad + 0.2) <= 1e-12 and abs(airpods - 0.2) <= 1e-12
                and abs(reactive - 0.4) <= 1e-12)
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(graphs):
        k = int(rng.integers(2, 7))
        rc = np.triu(np.where(rng.random((k, k)) < 0.5, rng.uniform(0, 1, (k, k)), 0.0), 1)
        rs = np.triu(np.where(rng.random((k, k)) < 0.4, rng.uniform(0, 1, (k, k)), 0.0), 1)
        rc, rs = rc + rc.T, rs + rs.T
        wt = rng.uniform(0.1, 2.0, k)
        d = int(rng.integers(0, 5))
        for x in range(k):
            got = dynamic_reachability(x, d, rc, rs, wt, perturb)
            want = dr_by_paths(x, d, rc, rs, wt)
            if abs(got - want) > 1e-9 * max(1.0, abs(want)):
                mismatches += 1
    return first_ok and mismatches == 0, {
        "pi_ipad": ipad, "pi_airpods": airpods, "ri_airpods": reactive,
        "recursive_mismatches": mismatches, "graphs": graphs}


# ------------------------------------------------------------------ 2: non-monotonicity

def non_monotone_world() -> World:
    """Six users, two items; adding a seed lowers expected influence."""
    s1, s2, d, e, c, u = range(6)
    edges = {(s1, d): 0.5, (s1, e): 1.0, (d, u): 1.0, (e, u): 0.48, (s2, e): 1.0,
             (s2, c): 1.0, (c, u): 12 / 13}
    pref = np.zeros((6, 2))
    pref[:, 0] = 1
    s_c = np.zeros((2, 2, 2))  # meta 0 links the items, meta 1 links nothing
    s_c[0, 0, 1] = s_c[0, 1, 0] = 1
    wc = np.tile([0.0, 1.0], (6, 1))
    wc[u] = [1, 0]
    return array_world(6, 2, edges, pref, s_c=s_c, weights=[0, 1], wc=wc, params=Params(0, 0, 0))


@_timed(2, "non_monotone_instance", 5.0)
def check_non_monotone():
    w = non_monotone_world()
    small = [(1, 0, 2)]
    large = [(1, 0, 2), (0, 0, 1)]
    a = sigma_exact_static(small, w, 2)
    b = sigma_exact_static(large, w, 2)
    ok = abs(a - 0.96) <= 1e-9 and abs(b - 0.8648) <= 1e-9 and b < a
    return ok, {"sigma_small": a, "sigma_superset": b}


# ------------------------------------------------------------------ 3: realization submodularity

def _pair_index(n):
    """Index arrays (X, X+e1, X+e2, X+e1+e2) over all X and e1<e2 outside X."""
    rows = []
    for X in range(1 << n):
        for i in range(n):
            for j in range(i + 1, n):
                bi, bj = 1 << i, 1 << j
                if not X & bi and not X & bj:
                    rows.append((X, X | bi, X | bj, X | bi | bj))
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


def submodular_violations(values: np.ndarray, n: int, tol: float = 1e-9) -> int:
    """Count failures of f(X+a)+f(X+b) >= f(X)+f(X+a+b) over a table indexed by bitmask."""
    idx = _pair_index(n)
    if not len(idx):
        return 0
    v = np.atleast_2d(values)
    lhs = v[:, idx[:, 1]] + v[:, idx[:, 2]]
    rhs = v[:, idx[:, 0]] + v[:, idx[:, 3]]
    return int(np.sum(lhs < rhs - tol))


@_timed(3, "realization_submodularity", 120.0)
def check_realization_submodularity(instances: int = 30, seed: int = 3, max_coins: int = 10):
    rng = np.random.default_rng(seed)
    violations = 0
    realizations = 0
    bad_instances = 0
    for _ in range(instances):
        w, T = tiny_world(rng, max_coins=max_coins)
        triples = [(u, x, t) for u in range(w.n) for x in range(w.k) for t in range(1, T + 1)]
        pick = rng.choice(len(triples), size=min(6, len(triples)), replace=False)
        ground = [triples[i] for i in sorted(pick)]
        n = len(ground)
        arrays = [seed_array(w, [ground[i] for i in range(n) if m >> i & 1], T)
                  for m in range(1 << n)]
        table = []
        for r, _ in enumerate_realizations(w, T):
            table.append([run_kernel(w, a, T, realization=r, record=False)[1] for a in arrays])
        table = np.array(table)
        v = submodular_violations(table, n)
        realizations += len(table)
        violations += v
        bad_instances += v > 0
    return violations == 0, {"instances": instances, "realizations": realizations,
                             "violations": violations, "violating_instances": bad_instances}


# ------------------------------------------------------------------ random submodular functions

def random_submodular(rng: np.random.Generator, n: int, monotone: bool | None = None):
    """Nonnegative submodular function on range(n): coverage, graph cut, or their sum."""
    kind = rng.choice(["coverage", "cut", "mixed"]) if monotone is None else \
        ("coverage" if monotone else rng.choice(["cut", "mixed"]))
    m = int(rng.integers(n, 3 * n + 1))
    covers = [set(np.nonzero(rng.random(m) < 0.3)[0].tolist()) for _ in range(n)]
    uw = rng.uniform(0, 1, m)
    W = np.where(rng.random((n, n)) < 0.4, rng.uniform(0, 1, (n, n)), 0.0)
    np.fill_diagonal(W, 0.0)
    scale = float(rng.uniform(0.2, 1.0))

    def coverage(S):
        cov = set().union(*(covers[i] for i in S)) if S else set()
        return math.fsum(uw[j] for j in cov)

    def cut(S):
        inside = np.zeros(n, dtype=bool)
        inside[list(S)] = True
        return float(W[inside][:, ~inside].sum())

    if kind == "coverage":
        return coverage
    if kind == "cut":
        return cut
    return lambda S: cut(S) + scale * coverage(S)


# ------------------------------------------------------------------ 4: greedy half bound

@_timed(4, "violating_greedy_half_bound", 120.0)
def check_greedy_bound(instances: int = 50, seed: int = 4):
    rng = np.random.default_rng(seed)
    failures = 0
    worst = math.inf
    for _ in range(instances):
        n = int(rng.integers(3, 11))
        f = random_submodular(rng, n)
        cost = rng.uniform(0.1, 1.0, n)
        budget = float(rng.uniform(0.3, cost.sum()))
        oracle = SetFunctionOracle(range(n), f, dict(enumerate(cost)), budget)
        S = frozenset(select_nominees(range(n), budget, oracle, oracle.cost, "violating"))
        fs = oracle(S)
        ok = True
        for r in range(n + 1):
            for C in itertools.combinations(range(n), r):
                if oracle.set_cost(C) > budget + 1e-12:
                    continue
                whole = oracle(S | set(C))
                if whole > 0:
                    worst = min(worst, fs / whole)
                if fs < 0.5 * whole - 1e-12:
                    ok = False
        failures += not ok
    return failures == 0, {"instances": instances, "failures": failures,
                           "min_ratio": worst if worst < math.inf else 1.0}


# ------------------------------------------------------------------ 5: composite bound

@_timed(5, "smk_vs_brute_force", 300.0)
def check_smk_bound(instances: int = 200, seed: int = 5, max_ground: int = 8):
    rng = np.random.default_rng(seed)
    ratios = []
    violations = 0
    for _ in range(instances):
        w, T = tiny_world(rng, max_users=4, max_coins=8)
        triples = [(u, x, t) for u in range(w.n) for x in range(w.k) for t in range(1, T + 1)]
        pick = rng.choice(len(triples), size=min(max_ground, len(triples)), replace=False)
        ground = [triples[i] for i in sorted(pick)]
        cost = {g: float(w.costs[g[0], g[1]]) for g in ground}
        budget = float(rng.uniform(min(cost.values()), sum(cost.values())))
        oracle = SetFunctionOracle(ground, lambda S: sigma_exact_static(S, w, T), cost, budget)
        got = oracle(smk_solve(oracle))
        _, opt = brute_force_opt(oracle)
        ratio = got / opt if opt > 0 else 1.0
        ratios.append(ratio)
        violations += got < opt / 12 - 1e-12
    q = np.quantile(ratios, [0.0, 0.25, 0.5]).tolist()
    return violations == 0, {"instances": instances, "violations": violations,
                             "ratio_min": q[0], "ratio_q25": q[1], "ratio_median": q[2]}


# ------------------------------------------------------------------ 6: double greedy

@_timed(6, "double_greedy_third_bound", 120.0)
def check_usm(instances: int = 200, seed: int = 6):
    rng = np.random.default_rng(seed)
    violations = 0
    worst = math.inf
    for _ in range(instances):
        n = int(rng.integers(2, 13))
        f = random_submodular(rng, n, monotone=False)
        oracle = SetFunctionOracle(range(n), f, lambda e: 0.0, math.inf)
        got = oracle(usm_double_greedy(oracle))
        _, opt = brute_force_opt(oracle)
        if opt > 0:
            worst = min(worst, got / opt)
        violations += got < opt / 3 - 1e-12
    return violations == 0, {"instances": instances, "violations": violations,
                             "min_ratio": worst if worst < math.inf else 1.0}


# ------------------------------------------------------------------ 7: estimator

@_timed(7, "estimator_vs_exact", 120.0)
def check_estimator(instances: int = 20, seed: int = 7, M: int = 1000):
    rng = np.random.default_rng(seed)
    within = 0
    ratios = []
    for i in range(instances):
        while True:
            w, T = tiny_world(rng, max_coins=12)
            pairs = w.pairs()
            m = int(rng.integers(1, min(3, len(pairs)) + 1))
            seeds = [(*pairs[j], int(rng.integers(1, T + 1)))
                     for j in rng.choice(len(pairs), m, replace=False)]
            exact = sigma_exact_static(seeds, w, T)
            arr = seed_array(w, seeds, T)
            v1, _ = sample_values(w, arr, T, sample_keys(seed * 1000 + i, M))
            mean, se = mean_stderr(v1)
            if se > 0:
                break
        within += abs(mean - exact) <= 3 * se
        v4, _ = sample_values(w, arr, T, sample_keys(seed * 1000 + i, 4 * M))
        ratios.append(mean_stderr(v4)[1] / se)
    halving = all(0.4 <= r <= 0.6 for r in ratios)
    return within >= instances - 1 and halving, {
        "within_3se": f"{within}/{instances}", "se_ratio_min": min(ratios),
        "se_ratio_max": max(ratios)}


# ------------------------------------------------------------------ 8: worked examples

IPHONE, IPAD, AIRPODS = 0, 1, 2
ITEM_NAMES = ["iPhone", "iPad", "AirPods"]


def market_world() -> World:
    """Seven users; friendships shaped so the three markets overlap on two users each."""
    u1, u2, u3, u4, u5, u6, u7 = range(7)
    both = [(u3, u2), (u2, u4), (u4, u6), (u2, u6), (u6, u5)]
    edges = {}
    for a, b in both:
        edges[(a, b)] = edges[(b, a)] = 0.5
    for a, b in [(u1, u3), (u1, u2), (u7, u5), (u7, u6)]:
        edges[(a, b)] = 0.5
    w = array_world(7, 3, edges, np.full((7, 3), 0.5), weights=[1.0, 1.0, 0.5])
    return w


def market_relevance():
    rbar_c = np.zeros((3, 3))
    rbar_s = np.zeros((3, 3))
    rbar_c[IPHONE, AIRPODS] = rbar_c[AIRPODS, IPHONE] = 0.8
    rbar_s[IPHONE, IPAD] = rbar_s[IPAD, IPHONE] = 0.5
    return rbar_c, rbar_s


TIMING_SI_TABLES = {
    0: {(1, AIRPODS, 2): 1.2, (1, AIRPODS, 3): 1.1, (5, AIRPODS, 2): 2.3, (5, AIRPODS, 3): 1.9},
    1: {(1, AIRPODS, 2): 1.2, (1, AIRPODS, 3): 1.1, (1, AIRPODS, 4): 1.0},
}


@_timed(8, "worked_example_traces", 10.0)
def check_examples():
    u1, u2, u3, u4, u5, u6, u7 = range(7)
    w = market_world()
    rbar_c, rbar_s = market_relevance()
    hops = w.hop_distances()
    nominees = [(u1, IPAD), (u2, AIRPODS), (u4, IPHONE), (u6, AIRPODS), (u7, IPAD)]
    clusters = cluster_nominees(nominees, rbar_c, rbar_s, hops, network_diameter(hops))
    want_clusters = [[(u1, IPAD)], [(u2, AIRPODS), (u4, IPHONE), (u6, AIRPODS)], [(u7, IPAD)]]
    cluster_ok = sorted(clusters) == sorted(want_clusters)
    # market ids follow the worked example: tau1 = u1's, tau2 = u7's, tau3 = the rest
    named = [[(u1, IPAD)], [(u7, IPAD)], want_clusters[1]]
    groups = identify_and_prioritize(named, 1, w, rbar_s, rho=0.3, T=5)
    overlaps = [len(set(groups[0][i].users) & set(groups[0][j].users))
                for i, j in ((0, 2), (1, 2))] if len(groups) == 1 else []
    ids = [[m.id for m in g] for g in groups]
    ae = {m.id: m.ae for g in groups for m in g}
    group_ok = len(groups) == 1 and sorted(ids[0]) == [1, 2, 3]
    ae_ok = group_ok and all(abs(ae[i] - v) <= 1e-12 for i, v in ((1, 0.5), (2, 0.5), (3, 1.0)))
    order_ok = group_ok and ids[0] == [1, 2, 3]

    # timing trace: tau3 after tau1 and tau2 placed their iPad seeds at t=1 and t=2
    tau3 = next(m for m in groups[0] if m.id == 3) if group_ok else \
        TargetMarket(3, want_clusters[1], list(range(7)), 3)
    tau3 = TargetMarket(3, tau3.nominees, tau3.users, 3, duration=3, ae=tau3.ae)
    group_seeds = [(u1, IPAD, 1), (u7, IPAD, 2)]
    log: list = []

    def si(seeds, cand):
        # the printed values depend only on how many tau3 seeds exist so far
        return TIMING_SI_TABLES[min(len(seeds) - 2, 1)].get(cand, -math.inf)

    dr_table = {IPHONE: 1.7, AIRPODS: 2.05}
    seeds = list(group_seeds)
    noms = [(u, x) for u, x in tau3.nominees if x == AIRPODS]
    ordered = max(dr_table, key=dr_table.get)
    tdsi(noms, seeds, tau3.duration, 2, 5, si, log)
    windows = [(lo, hi) for tag, lo, hi in (e for e in log if e[0] == "window")]
    picks = [p[1] for p in log if p[0] == "pick"]
    windows_ok = windows == [(2, 3), (3, 4)]
    picks_ok = [p[0] for p in picks] == [u6, u2] and ordered == AIRPODS
    ok = cluster_ok and group_ok and ae_ok and order_ok and windows_ok and picks_ok
    return ok, {
        "clusters": len(clusters), "clusters_match": cluster_ok,
        "group_ids": ids, "overlaps": overlaps,
        "ae": [ae.get(i, float("nan")) for i in (1, 2, 3)], "order_match": order_ok,
        "windows": windows, "windows_expected": [(2, 3), (3, 4)],
        "picks": [(f"u{u + 1}", ITEM_NAMES[x], t) for u, x, t in picks], "picks_match": picks_ok}


# ------------------------------------------------------------------ 9: dominance

def dominance_world(seed: int) -> tuple[World, float, int]:
    from .harness import SyntheticSpec, generate_synthetic
    spec = SyntheticSpec(users=30, edge_density=0.12, items=3, features=3, brands=1,
                         categories=3, support_prob=0.8, strength=(0.3, 0.7),
                         preference=(0.02, 0.15), cost_alpha=0.2, seed=seed)
    ds = generate_synthetic(spec, np.random.default_rng(seed))
    w = ds.world(Params(eta=0.5, lam=0.6, mu=0.25))
    budget = float(np.nanmedian(w.costs)) * 6
    return w, budget, 5


@_timed(9, "dysim_dominance", 600.0)
def check_dominance(worlds: int = 20, seed: int = 9, samples: int = 100, M: int = 500):
    diffs = {"greedy1": [], "degree": []}
    means = {"dysim": [], "greedy1": [], "degree": []}
    complementary = 0
    chosen: dict = {}
    for i in range(worlds):
        w, budget, T = dominance_world(seed * 100 + i)
        rbar_c, _ = w.mean_relevance()
        complementary += int(np.sum(np.triu(rbar_c, 1) > 0) >= 1 and w.k >= 2)
        cfg = DysimConfig(samples=samples, seed=i)
        res = dysim_solve(w, budget, T, cfg)
        chosen[res.chosen_from] = chosen.get(res.chosen_from, 0) + 1
        plans = {"dysim": res.seeds,
                 "greedy1": single_promotion_greedy(w, budget, T, samples, i),
                 "degree": degree_baseline(w, budget, T)}
        keys = sample_keys(10_000 + i, M)
        vals = {k: sample_values(w, seed_array(w, s, T), T, keys)[0] if s else np.zeros(M)
                for k, s in plans.items()}
        for k in means:
            means[k].append(float(vals[k].mean()))
        for k in diffs:
            diffs[k].append(vals["dysim"] - vals[k])
    detail = {k: float(np.mean(v)) for k, v in means.items()}
    detail["chosen"] = ",".join(f"{k}:{v}" for k, v in sorted(chosen.items()))
    ok = complementary == worlds
    for k, d in diffs.items():
        d = np.concatenate(d)
        m, se = mean_stderr(d)
        detail[f"gain_vs_{k}"] = m
        detail[f"z_vs_{k}"] = m / se if se > 0 else (math.inf if m > 0 else 0.0)
        ok = ok and m >= 3 * se and m > 0
    return ok, detail


# ------------------------------------------------------------------ 10: approximation spot-check

def _instance_gamma(w: World) -> tuple[float, int]:
    st = w.init
    c = max(int(w.hop_distances().max()), 1)
    pmin_pref = float(st.pref.min())
    pmin_act = float(st.pact.min())
    ext = [st.pact[e] * st.pref[w.dst[e], x] * st.rc[w.dst[e], x, y]
           for e in range(w.E) for x in range(w.k) for y in range(w.k) if x != y]
    pmin_ext = float(min(ext)) if ext else 0.0
    return min(pmin_pref ** c * pmin_act ** c, pmin_ext ** c), c


@_timed(10, "approximation_spot_check", 300.0)
def check_approximation(instances: int = 10, seed: int = 10, M: int = 2000):
    rng = np.random.default_rng(seed)
    failures = 0
    gammas, ratios = [], []
    for i in range(instances):
        while True:
            w, T = tiny_world(rng, max_users=4, max_items=2, max_T=2, frozen=False,
                              positive=True)
            if w.k >= 2:
                break
        gamma, c = _instance_gamma(w)
        triples = [(u, x, t) for u in range(w.n) for x in range(w.k) for t in range(1, T + 1)]
        cost = {g: float(w.costs[g[0], g[1]]) for g in triples}
        budget = float(rng.uniform(1.0, 3.0))
        keys = sample_keys(seed * 100 + i, 400)

        def f(S):
            if not S:
                return 0.0
            return float(sample_values(w, seed_array(w, S, T), T, keys)[0].mean())
        oracle = SetFunctionOracle(triples, f, cost, budget)
        opt_set, _ = brute_force_opt(oracle)
        plan = dysim_solve(w, budget, T, DysimConfig(samples=200, seed=i)).seeds
        fresh = sample_keys(seed * 100 + i + 50_000, M)
        got, se_got = mean_stderr(sample_values(w, seed_array(w, plan, T), T, fresh)[0]) \
            if plan else (0.0, 0.0)
        opt, se_opt = mean_stderr(sample_values(w, seed_array(w, opt_set, T), T, fresh)[0]) \
            if opt_set else (0.0, 0.0)
        eps = 3 * math.hypot(se_got, se_opt) / opt if opt > 0 else 0.0
        bound = (1 - 1 / math.sqrt(math.e) - eps) * gamma * opt
        failures += got < bound
        gammas.append(gamma)
        ratios.append(got / opt if opt > 0 else 1.0)
    return failures == 0, {"instances": instances, "failures": failures,
                           "gamma_max": max(gammas), "ratio_min": min(ratios)}


ALL_CHECKS: list[Callable[..., CheckResult]] = [
    check_dr_terms, check_non_monotone, check_realization_submodularity, check_greedy_bound,
    check_smk_bound, check_usm, check_estimator, check_examples, check_dominance,
    check_approximation,
]


def run_checks(select: list[int] | None = None, perturb_dr: bool = False,
               report: Callable[[str], None] | None = print) -> list[CheckResult]:
    out = []
    for chk in ALL_CHECKS:
        if select and chk.number not in select:
            continue
        res = chk(perturb=True) if chk is check_dr_terms and perturb_dr else chk()
        if report:
            report(res.line())
        out.append(res)
    return out

"""Array form of a problem instance, shared by the kernels and the algorithms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import InputError
from .graph_model import (COMPLEMENTARY, ItemCatalog, KnowledgeGraph, MetaGraph, SocialNetwork,
                          instance_count_matrix, relevance_from_counts)
from .perception import CampaignState, derive_pin


@dataclass(frozen=True)
class Params:
    eta: float = 0.5
    lam: float = 0.1
    mu: float = 0.25
    diffusion_model: str = "ic"


@dataclass(eq=False)
class World:
    users: list[str]
    items: list[str]
    src: np.ndarray
    dst: np.ndarray
    pact0: np.ndarray
    s_c: np.ndarray
    s_s: np.ndarray
    weights: np.ndarray
    costs: np.ndarray              # (n, k), nan where a pair cannot be seeded
    init: CampaignState
    params: Params = field(default_factory=Params)
    meta_ids_c: tuple = ()
    meta_ids_s: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.n, self.k, self.E = len(self.users), len(self.items), len(self.src)
        self.uidx = {u: i for i, u in enumerate(self.users)}
        self.iidx = {x: i for i, x in enumerate(self.items)}
        self.src = np.ascontiguousarray(self.src, dtype=np.int64)
        self.dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        order = np.lexsort((self.dst, self.src))
        if not np.array_equal(order, np.arange(self.E)):
            raise InputError("edges must be sorted by (src, dst)")
        self.out_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self.out_ptr, self.src + 1, 1)
        self.out_ptr = np.cumsum(self.out_ptr)
        inc = np.lexsort((self.src, self.dst))
        self.in_eid = np.ascontiguousarray(inc, dtype=np.int64)
        self.in_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self.in_ptr, self.dst + 1, 1)
        self.in_ptr = np.cumsum(self.in_ptr)
        self.ev_c = np.ascontiguousarray(self.s_c > 0, dtype=np.uint8)
        self.ev_s = np.ascontiguousarray(self.s_s > 0, dtype=np.uint8)

    eta = property(lambda self: self.params.eta)
    lam = property(lambda self: self.params.lam)
    mu = property(lambda self: self.params.mu)

    def frozen(self) -> "World":
        """Same instance with all perception dynamics switched off."""
        return self.with_params(eta=0.0, lam=0.0, mu=0.0)

    def with_params(self, **kw) -> "World":
        return replace(self, params=replace(self.params, **kw), _cache={})

    def with_state(self, state: CampaignState) -> "World":
        return replace(self, init=state.copy(), _cache={})

    def cost(self, u: int, x: int) -> float:
        return float(self.costs[u, x])

    def pairs(self):
        """All (user, item) index pairs that have a seeding cost."""
        us, xs = np.nonzero(np.isfinite(self.costs))
        return [(int(u), int(x)) for u, x in zip(us, xs)]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def mean_relevance(self, state: CampaignState | None = None, users=None):
        st = state or self.init
        sel = slice(None) if users is None else np.asarray(sorted(users), dtype=np.int64)
        return st.rc[sel].mean(axis=0), st.rs[sel].mean(axis=0)

    def hop_distances(self) -> np.ndarray:
        if "hops" not in self._cache:
            net = SocialNetwork(self.users, {(self.users[a], self.users[b]): 0.0
                                             for a, b in zip(self.src, self.dst)})
            self._cache["hops"] = net.hop_distances()
        return self._cache["hops"]


def make_state(n, k, E, s_c, s_s, pref, pact, adopted=None, wc=None, ws=None) -> CampaignState:
    mc, ms = s_c.shape[0], s_s.shape[0]
    wc = np.full((n, mc), 1.0 / mc) if wc is None and mc else (
        np.zeros((n, 0)) if wc is None else np.asarray(wc, dtype=np.float64))
    ws = np.full((n, ms), 1.0 / ms) if ws is None and ms else (
        np.zeros((n, 0)) if ws is None else np.asarray(ws, dtype=np.float64))
    rc = np.zeros((n, k, k))
    rs = np.zeros((n, k, k))
    for u in range(n):
        rc[u], rs[u] = derive_pin(wc[u], ws[u], s_c, s_s)
    if adopted is None:
        adopted = np.zeros((n, k), dtype=np.uint8)
    return CampaignState(np.ascontiguousarray(adopted, dtype=np.uint8),
                         np.ascontiguousarray(pref, dtype=np.float64),
                         np.ascontiguousarray(wc), np.ascontiguousarray(ws),
                         rc, rs, np.ascontiguousarray(pact, dtype=np.float64).copy())


def build_world(network: SocialNetwork, kg: KnowledgeGraph, metas: list[MetaGraph],
                catalog: ItemCatalog, prefs: Mapping[tuple[str, str], float],
                params: Params = Params(), default_pref: float = 0.0) -> World:
    catalog.check_against(kg)
    items = catalog.items
    for x in items:
        if x not in kg.node_types:
            raise InputError(f"catalog item {x} missing from the knowledge graph")
    users = network.users
    n, k = len(users), len(items)
    comp = [m for m in metas if m.relationship == COMPLEMENTARY]
    subs = [m for m in metas if m.relationship != COMPLEMENTARY]
    s_c = np.array([relevance_from_counts(instance_count_matrix(kg, m, items)) for m in comp]
                   ).reshape(len(comp), k, k)
    s_s = np.array([relevance_from_counts(instance_count_matrix(kg, m, items)) for m in subs]
                   ).reshape(len(subs), k, k)
    src, dst, p = network.edge_arrays()
    pref = np.full((n, k), float(default_pref))
    uidx = network.index
    iidx = {x: i for i, x in enumerate(items)}
    for (u, x), v in prefs.items():
        if u not in uidx or x not in iidx:
            raise InputError(f"preference for unknown pair ({u}, {x})")
        pref[uidx[u], iidx[x]] = v
    costs = np.full((n, k), np.nan)
    for (u, x), c in catalog.costs.items():
        if u not in uidx or x not in iidx:
            raise InputError(f"cost for unknown pair ({u}, {x})")
        costs[uidx[u], iidx[x]] = c
    weights = np.array([catalog.importance[x] for x in items], dtype=np.float64)
    init = make_state(n, k, len(src), s_c, s_s, pref, p)
    return World(users, items, src, dst, p, s_c, s_s, weights, costs, init, params,
                 tuple(m.id for m in comp), tuple(m.id for m in subs))


def array_world(n, k, edges, pref, s_c=None, s_s=None, weights=None, costs=None,
                params: Params = Params(), wc=None, ws=None, adopted=None) -> World:
    """Build a world directly from arrays; users are u0.., items i0.. ."""
    edges = sorted(((int(a), int(b)), float(p)) for (a, b), p in dict(edges).items())
    src = np.array([a for (a, _), _ in edges], dtype=np.int64)
    dst = np.array([b for (_, b), _ in edges], dtype=np.int64)
    p = np.array([q for _, q in edges], dtype=np.float64)
    s_c = np.zeros((0, k, k)) if s_c is None else np.asarray(s_c, dtype=np.float64).reshape(-1, k, k)
    s_s = np.zeros((0, k, k)) if s_s is None else np.asarray(s_s, dtype=np.float64).reshape(-1, k, k)
    weights = np.ones(k) if weights is None else np.asarray(weights, dtype=np.float64)
    costs = np.ones((n, k)) if costs is None else np.asarray(costs, dtype=np.float64)
    init = make_state(n, k, len(src), s_c, s_s, np.asarray(pref, dtype=np.float64).reshape(n, k),
                      p, adopted=adopted, wc=wc, ws=ws)
    width = max(len(str(n - 1)), 1)
    users = [f"u{i:0{width}d}" for i in range(n)]
    items = [f"i{i:0{len(str(max(k - 1, 0)))}d}" for i in range(k)]
    return World(users, items, src, dst, p, s_c, s_s, weights, costs, init, params)

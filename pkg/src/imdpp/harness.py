"""Synthetic instances, dataset I/O, experiment configs and metric emission."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import kernels
from .diffusion import seed_cost, sigma_estimate, simulate_campaign, trace_jsonl
from .dysim import DysimConfig, dysim_adaptive, dysim_solve
from .errors import ConfigError
from .graph_model import (COMPLEMENTARY, ITEM, SUBSTITUTABLE, ItemCatalog, KnowledgeGraph,
                          MetaGraph, SocialNetwork, cost_rule, load_metagraphs, read_preferences,
                          save_metagraphs)
from .solvers import SetFunctionOracle, baselines, brute_force_opt, smk_solve
from .world import Params, World, build_world

SOLVERS = ("dysim", "dysim-adaptive", "smk", "opt", "degree", "random", "greedy1")


def standard_metagraphs() -> list[MetaGraph]:
    """Shared feature, shared brand, feature-and-brand (complementary); shared category (substitutable)."""
    i2 = {"role": "i2", "type": ITEM}
    i1 = {"role": "i1", "type": ITEM}
    raw = [
        {"id": "m_feature", "relationship": COMPLEMENTARY,
         "nodes": [i1, i2, {"role": "f", "type": "FEATURE"}],
         "edges": [{"from": "i1", "to": "f", "edge_type": "SUPPORT"},
                   {"from": "i2", "to": "f", "edge_type": "SUPPORT"}],
         "endpoints": ["i1", "i2"]},
        {"id": "m_brand", "relationship": COMPLEMENTARY,
         "nodes": [i1, i2, {"role": "b", "type": "BRAND"}],
         "edges": [{"from": "i1", "to": "b", "edge_type": "BELONG"},
                   {"from": "i2", "to": "b", "edge_type": "BELONG"}],
         "endpoints": ["i1", "i2"]},
        {"id": "m_feature_brand", "relationship": COMPLEMENTARY,
         "nodes": [i1, i2, {"role": "f", "type": "FEATURE"}, {"role": "b", "type": "BRAND"}],
         "edges": [{"from": "i1", "to": "f", "edge_type": "SUPPORT"},
                   {"from": "i2", "to": "f", "edge_type": "SUPPORT"},
                   {"from": "i1", "to": "b", "edge_type": "BELONG"},
                   {"from": "i2", "to": "b", "edge_type": "BELONG"}],
         "endpoints": ["i1", "i2"]},
        {"id": "m_category", "relationship": SUBSTITUTABLE,
         "nodes": [i1, i2, {"role": "c", "type": "CATEGORY"}],
         "edges": [{"from": "i1", "to": "c", "edge_type": "IN"},
                   {"from": "i2", "to": "c", "edge_type": "IN"}],
         "endpoints": ["i1", "i2"]},
    ]
    return [MetaGraph.from_dict(d) for d in raw]


KG_SCHEMA = {(ITEM, "SUPPORT", "FEATURE"), (ITEM, "BELONG", "BRAND"), (ITEM, "IN", "CATEGORY")}


@dataclass
class SyntheticSpec:
    users: int = 30
    edge_density: float = 0.1
    items: int = 4
    features: int = 4
    brands: int = 2
    categories: int = 2
    support_prob: float = 0.5
    strength: tuple = (0.1, 0.5)
    importance: dict = field(default_factory=lambda: {"dist": "uniform", "low": 0.5, "high": 2.0})
    preference: tuple = (0.1, 0.6)
    cost_alpha: float = 0.2
    supports: dict | None = None      # explicit item -> features layout
    item_brand: dict | None = None
    item_category: dict | None = None
    seed: int = 0

    def __post_init__(self):
        for key in ("users", "items", "features", "brands", "categories"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be positive")
        if not 0 < self.edge_density <= 1:
            raise ConfigError("edge_density", "must be in (0, 1]")
        self.strength = tuple(self.strength)
        self.preference = tuple(self.preference)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        names = {f.name for f in fields(cls)}
        bad = set(d) - names
        if bad:
            raise ConfigError(sorted(bad)[0], "unknown synthetic spec key")
        return cls(**d)


@dataclass
class Dataset:
    network: SocialNetwork
    kg: KnowledgeGraph
    metas: list
    catalog: ItemCatalog
    prefs: dict

    def world(self, params: Params = Params()) -> World:
        return build_world(self.network, self.kg, self.metas, self.catalog, self.prefs, params)

    def save(self, out):
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        self.network.to_tsv(out / "social.tsv")
        self.kg.to_tsv(out / "kg_nodes.tsv", out / "kg_edges.tsv", out / "kg_schema.tsv")
        save_metagraphs(self.metas, out / "metagraphs.json")
        with open(out / "items.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["item", "importance"])
            for x in self.catalog.items:
                w.writerow([x, repr(self.catalog.importance[x])])
        with open(out / "costs.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["user", "item", "cost"])
            for (u, x) in sorted(self.catalog.costs):
                w.writerow([u, x, repr(self.catalog.costs[(u, x)])])
        with open(out / "preferences.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["user", "item", "preference"])
            for (u, x) in sorted(self.prefs):
                w.writerow([u, x, repr(self.prefs[(u, x)])])

    @classmethod
    def load(cls, d, cost_alpha: float | None = None) -> "Dataset":
        d = Path(d)
        net = SocialNetwork.from_tsv(d / "social.tsv")
        kg = KnowledgeGraph.from_tsv(d / "kg_nodes.tsv", d / "kg_edges.tsv", d / "kg_schema.tsv")
        metas = load_metagraphs(d / "metagraphs.json")
        prefs = read_preferences(d / "preferences.csv") if (d / "preferences.csv").exists() else {}
        costs_path = d / "costs.csv"
        cat = ItemCatalog.from_csv(d / "items.csv", costs_path if costs_path.exists() else None)
        if not cat.costs:
            cat = ItemCatalog(cat.importance, cost_rule(net, cat.items, prefs, cost_alpha or 1.0))
        return cls(net, kg, metas, cat, prefs)


def generate_synthetic(spec: SyntheticSpec, rng: np.random.Generator | None = None) -> Dataset:
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    wu = len(str(spec.users - 1))
    users = [f"u{i:0{wu}d}" for i in range(spec.users)]
    edges = {}
    lo, hi = spec.strength
    for a in range(spec.users):
        for b in range(spec.users):
            if a != b and rng.random() < spec.edge_density:
                edges[(users[a], users[b])] = float(round(rng.uniform(lo, hi), 6))
    net = SocialNetwork(users, edges)

    wi = len(str(spec.items - 1))
    items = [f"i{i:0{wi}d}" for i in range(spec.items)]
    feats = [f"f{i}" for i in range(spec.features)]
    brands = [f"b{i}" for i in range(spec.brands)]
    cats = [f"c{i}" for i in range(spec.categories)]
    types = {x: ITEM for x in items}
    types.update({f: "FEATURE" for f in feats})
    types.update({b: "BRAND" for b in brands})
    types.update({c: "CATEGORY" for c in cats})
    kg_edges = []
    for x in items:
        if spec.supports is not None:
            chosen = spec.supports.get(x, [])
        else:
            chosen = [f for f in feats if rng.random() < spec.support_prob]
        kg_edges += [(x, f, "SUPPORT") for f in chosen]
        b = spec.item_brand.get(x) if spec.item_brand else brands[int(rng.integers(len(brands)))]
        if b is not None:
            kg_edges.append((x, b, "BELONG"))
        c = spec.item_category.get(x) if spec.item_category else cats[int(rng.integers(len(cats)))]
        if c is not None:
            kg_edges.append((x, c, "IN"))
    for node in {b for _, b, _ in kg_edges}:
        if node not in types:
            types[node] = "FEATURE"
    kg = KnowledgeGraph(types, kg_edges, KG_SCHEMA)

    imp = spec.importance
    if imp.get("dist", "uniform") == "uniform":
        w = rng.uniform(imp.get("low", 0.5), imp.get("high", 2.0), spec.items)
    elif imp["dist"] == "lognormal":
        w = rng.lognormal(imp.get("mean", 0.0), imp.get("sigma", 0.5), spec.items)
    elif imp["dist"] == "constant":
        w = np.full(spec.items, float(imp.get("value", 1.0)))
    else:
        raise ConfigError("importance", f"unknown distribution {imp['dist']}")
    importance = {x: float(round(v, 6)) for x, v in zip(items, w)}
    plo, phi = spec.preference
    prefs = {(u, x): float(round(rng.uniform(plo, phi), 6)) for u in users for x in items}
    costs = {k: float(round(v, 6)) for k, v in cost_rule(net, items, prefs, spec.cost_alpha).items()}
    return Dataset(net, kg, standard_metagraphs(), ItemCatalog(importance, costs), prefs)


# ------------------------------------------------------------------ experiments

@dataclass
class ExperimentConfig:
    dataset: str | None = None
    synthetic: dict | None = None
    budgets: list = field(default_factory=lambda: [5.0])
    promotions: list = field(default_factory=lambda: [3])
    theta: float = 1
    rho: float = 0.01
    beta: float = 1.0
    eta: float = 0.5
    lam: float = 0.1
    mu: float = 0.25
    samples: int = 100
    seed: int = 0
    diffusion_model: str = "ic"
    cost_alpha: float | None = None
    solvers: list = field(default_factory=lambda: ["dysim", "greedy1", "degree"])
    output: str = "results"
    write_traces: bool = False
    workers: int = 1

    KEYS = {"b": "budgets", "budget": "budgets", "T": "promotions", "lambda": "lam",
            "generator": "synthetic"}

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        kw: dict[str, Any] = {}
        for key, v in d.items():
            name = cls.KEYS.get(key, key)
            if name not in names:
                raise ConfigError(key, "unknown configuration key")
            if name in ("budgets", "promotions") and not isinstance(v, list):
                v = [v]
            kw[name] = v
        cfg = cls(**kw)
        if base is not None and cfg.dataset is not None:
            p = Path(cfg.dataset)
            cfg.dataset = str(p if p.is_absolute() else base / p)
        if base is not None and not Path(cfg.output).is_absolute():
            cfg.output = str(base / cfg.output)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"not valid JSON ({exc})") from None
        return cls.from_dict(d, path.parent)

    def validate(self):
        if any(not b > 0 for b in self.budgets):
            raise ConfigError("budgets", "every budget must be positive")
        if any(int(t) != t or t < 1 for t in self.promotions):
            raise ConfigError("promotions", "every T must be an integer >= 1")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ConfigError("samples", "must be an integer >= 1")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("workers", "must be an integer >= 1")
        if self.theta < 0:
            raise ConfigError("theta", "must be nonnegative")
        if self.diffusion_model not in ("ic", "lt"):
            raise ConfigError("diffusion_model", "must be ic or lt")
        for s in self.solvers:
            if s not in SOLVERS:
                raise ConfigError("solvers", f"unknown solver {s}")
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigError("dataset", "give exactly one of dataset or synthetic")
        if self.dataset is not None and not Path(self.dataset).is_dir():
            raise ConfigError("dataset", f"directory {self.dataset} does not exist")

    def params(self) -> Params:
        return Params(self.eta, self.lam, self.mu, self.diffusion_model)

    def dysim(self) -> DysimConfig:
        return DysimConfig(self.theta, self.rho, self.beta, self.samples, self.seed)

    def dataset_obj(self) -> Dataset:
        if self.dataset is not None:
            return Dataset.load(self.dataset, self.cost_alpha)
        spec = dict(self.synthetic)
        if self.cost_alpha is not None:
            spec.setdefault("cost_alpha", self.cost_alpha)
        return generate_synthetic(SyntheticSpec.from_dict(spec))


def solve(world: World, solver: str, budget: float, T: int, cfg: DysimConfig,
          max_brute: int = 20) -> list:
    """Seed triples (user, item, t) as indices."""
    if solver == "dysim":
        return dysim_solve(world, budget, T, cfg).seeds
    if solver == "dysim-adaptive":
        rounds, _ = dysim_adaptive(world, budget, T, cfg=cfg)
        return [s for r in rounds for s in r]
    if solver in ("degree", "random", "greedy1"):
        kw = {"seed": cfg.seed} if solver == "random" else (
            {"samples": cfg.samples, "seed": cfg.seed} if solver == "greedy1" else {})
        return baselines(world, budget, T, solver, **kw)
    if solver in ("smk", "opt"):
        ground = [(u, x, t) for u, x in world.pairs() for t in range(1, T + 1)]
        f = lambda s: sigma_estimate(list(s), world, T, cfg.samples, cfg.seed)[0]
        oracle = SetFunctionOracle(ground, f, lambda e: world.cost(e[0], e[1]), budget)
        best = brute_force_opt(oracle)[0] if solver == "opt" else smk_solve(oracle)
        return sorted(best, key=lambda s: (s[2], s[0], s[1]))
    raise ValueError(solver)


METRIC_HEADER = ["solver", "b", "T", "sigma", "stderr", "time_ms", "cost_used"]


def _g(v) -> str:
    return f"{v:.6g}"


def cell_seed(master: int, cell: int) -> int:
    """RNG stream of one (b, T, solver) cell, independent of execution order."""
    return int(kernels.sample_key(master, cell) >> 1)


def _run_cell(args):
    world, solver, b, T, cfg, out, seed = args
    dcfg = replace(cfg.dysim(), seed=seed)
    t0 = time.perf_counter()
    seeds = solve(world, solver, float(b), int(T), dcfg)
    ms = (time.perf_counter() - t0) * 1000
    # evaluation keys are shared by every solver of a (b, T) pair so comparisons are paired
    sig, se = sigma_estimate(seeds, world, int(T), cfg.samples, cfg.seed + 7919)
    cost = seed_cost(world, seeds)
    write_seeds(out / f"seeds_{solver}_b{_g(b)}_T{T}.csv", world, seeds)
    if cfg.write_traces:
        named = [(world.users[u], world.items[x], t) for u, x, t in seeds]
        (out / f"trace_{solver}_b{_g(b)}_T{T}.jsonl").write_text(
            trace_jsonl(simulate_campaign(named, world, int(T), cfg.seed)))
    return [solver, _g(b), str(T), _g(sig), _g(se), _g(ms), _g(cost)]


def run_experiment(cfg: ExperimentConfig, log=print) -> Path:
    """Solve and evaluate every (b, T, solver) cell; write metrics and seed files."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    world = cfg.dataset_obj().world(cfg.params())
    cells = [(b, T, s) for b in cfg.budgets for T in cfg.promotions for s in cfg.solvers]
    jobs = [(world, s, b, T, cfg, out, cell_seed(cfg.seed, i)) for i, (b, T, s) in enumerate(cells)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(j) for j in jobs]
    if log:
        for r in rows:
            log(f"{r[0]:15s} b={r[1]:>8s} T={r[2]:<3s} sigma={r[3]:>10s} se={r[4]:>9s} "
                f"cost={r[6]}")
    path = out / "metrics.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_HEADER)
        w.writerows(rows)
    return path


def write_seeds(path, world: World, seeds):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user", "item", "t", "cost"])
        for u, x, t in sorted(seeds, key=lambda s: (s[2], s[0], s[1])):
            w.writerow([world.users[u], world.items[x], t, _g(world.cost(u, x))])


def read_seeds(path) -> list:
    with open(path, newline="") as fh:
        return [(r["user"], r["item"], int(r["t"])) for r in csv.DictReader(fh)]


def write_estimate(path, sigma, stderr, samples, seed):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sigma", "stderr", "samples", "seed"])
        w.writerow([_g(sigma), _g(stderr), samples, seed])

"""Social network, knowledge graph, meta-graph schemas and item catalog."""
from __future__ import annotations

import csv
import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError, SchemaError

ITEM = "ITEM"
COMPLEMENTARY = "COMPLEMENTARY"
SUBSTITUTABLE = "SUBSTITUTABLE"


class SocialNetwork:
    """Directed friendship graph with base influence strengths in [0, 1]."""

    def __init__(self, users: Iterable[str], edges: Mapping[tuple[str, str], float]):
        self.users = sorted(set(users))
        self.index = {u: i for i, u in enumerate(self.users)}
        clean = {}
        for (u, v), s in edges.items():
            if u not in self.index or v not in self.index:
                raise InputError(f"edge ({u}, {v}) references an unknown user")
            if u == v:
                raise InputError(f"self-loop on {u}")
            s = float(s)
            if not 0.0 <= s <= 1.0:
                raise InputError(f"strength of ({u}, {v}) outside [0, 1]: {s}")
            clean[(u, v)] = s
        # edges sorted by (src index, dst index); position is the edge id
        self.edges = sorted(clean, key=lambda e: (self.index[e[0]], self.index[e[1]]))
        self.strength = clean

    @property
    def n(self) -> int:
        return len(self.users)

    def out_degree(self, u: str) -> int:
        i = self.index[u]
        return sum(1 for a, _ in self.edges if self.index[a] == i)

    def edge_arrays(self):
        src = np.array([self.index[a] for a, _ in self.edges], dtype=np.int64)
        dst = np.array([self.index[b] for _, b in self.edges], dtype=np.int64)
        p = np.array([self.strength[e] for e in self.edges], dtype=np.float64)
        return src, dst, p

    def hop_distances(self) -> np.ndarray:
        """All-pairs hop distance on the undirected skeleton (-1 if unreachable)."""
        n = self.n
        nbrs = [set() for _ in range(n)]
        for a, b in self.edges:
            i, j = self.index[a], self.index[b]
            nbrs[i].add(j)
            nbrs[j].add(i)
        dist = np.full((n, n), -1, dtype=np.int64)
        for s in range(n):
            dist[s, s] = 0
            q = deque([s])
            while q:
                v = q.popleft()
                for w in nbrs[v]:
                    if dist[s, w] < 0:
                        dist[s, w] = dist[s, v] + 1
                        q.append(w)
        return dist

    @classmethod
    def from_tsv(cls, path) -> "SocialNetwork":
        users, edges = set(), {}
        for row in _read_rows(path, "\t"):
            if len(row) != 3:
                raise InputError(f"{path}: expected src<TAB>dst<TAB>strength, got {row}")
            u, v, s = row
            users.update((u, v))
            edges[(u, v)] = float(s)
        return cls(users, edges)

    def to_tsv(self, path):
        with open(path, "w") as fh:
            for u, v in self.edges:
                fh.write(f"{u}\t{v}\t{self.strength[(u, v)]!r}\n")


class KnowledgeGraph:
    def __init__(self, node_types: Mapping[str, str], edges: Iterable[tuple[str, str, str]],
                 schema: Iterable[tuple[str, str, str]] | None = None):
        self.node_types = dict(node_types)
        self.edges = sorted(set((str(a), str(b), str(t)) for a, b, t in edges))
        if schema is None:
            schema = {(self.node_types.get(a), t, self.node_types.get(b)) for a, b, t in self.edges}
        self.schema = set(schema)
        self.types = set(self.node_types.values())
        self.out = defaultdict(set)
        self.inn = defaultdict(set)
        for a, b, t in self.edges:
            if a not in self.node_types or b not in self.node_types:
                raise InputError(f"KG edge ({a}, {b}, {t}) references an unknown node")
            if (self.node_types[a], t, self.node_types[b]) not in self.schema:
                raise SchemaError(
                    f"KG edge ({a}, {b}, {t}) does not match a declared schema triple")
            self.out[(a, t)].add(b)
            self.inn[(b, t)].add(a)
        self.edge_set = set(self.edges)

    def items(self) -> list[str]:
        return sorted(n for n, t in self.node_types.items() if t == ITEM)

    def nodes_of_type(self, typ: str) -> list[str]:
        return sorted(n for n, t in self.node_types.items() if t == typ)

    @classmethod
    def from_tsv(cls, nodes_path, edges_path, schema_path) -> "KnowledgeGraph":
        types = {}
        for row in _read_rows(nodes_path, "\t"):
            if len(row) != 2:
                raise InputError(f"{nodes_path}: expected id<TAB>type, got {row}")
            if row[0] in types and types[row[0]] != row[1]:
                raise InputError(f"node {row[0]} declared with two types")
            types[row[0]] = row[1]
        edges = []
        for row in _read_rows(edges_path, "\t"):
            if len(row) != 3:
                raise InputError(f"{edges_path}: expected src<TAB>dst<TAB>edge_type, got {row}")
            edges.append(tuple(row))
        schema = []
        for row in _read_rows(schema_path, "\t"):
            if len(row) != 3:
                raise InputError(f"{schema_path}: expected src_type<TAB>edge_type<TAB>dst_type")
            schema.append(tuple(row))
        return cls(types, edges, schema)

    def to_tsv(self, nodes_path, edges_path, schema_path):
        with open(nodes_path, "w") as fh:
            for n in sorted(self.node_types):
                fh.write(f"{n}\t{self.node_types[n]}\n")
        with open(edges_path, "w") as fh:
            for a, b, t in self.edges:
                fh.write(f"{a}\t{b}\t{t}\n")
        with open(schema_path, "w") as fh:
            for a, t, b in sorted(self.schema):
                fh.write(f"{a}\t{t}\t{b}\n")


@dataclass(frozen=True)
class MetaGraph:
    """Typed schema whose instances relate two endpoint items."""

    id: str
    relationship: str
    roles: Mapping[str, str]
    edges: tuple[tuple[str, str, str], ...]
    endpoints: tuple[str, str]

    def __post_init__(self):
        if self.relationship not in (COMPLEMENTARY, SUBSTITUTABLE):
            raise InputError(f"meta-graph {self.id}: unknown relationship {self.relationship}")
        if len(self.endpoints) != 2 or self.endpoints[0] == self.endpoints[1]:
            raise InputError(f"meta-graph {self.id}: needs two distinct endpoint roles")
        for r in self.endpoints:
            if r not in self.roles:
                raise InputError(f"meta-graph {self.id}: endpoint {r} is not a role")
            if self.roles[r] != ITEM:
                raise InputError(f"meta-graph {self.id}: endpoint {r} must have type ITEM")
        for a, b, _ in self.edges:
            if a not in self.roles or b not in self.roles:
                raise InputError(f"meta-graph {self.id}: edge ({a}, {b}) uses an unknown role")
        if not _connected(self.roles, self.edges):
            raise InputError(f"meta-graph {self.id}: schema graph is not connected")

    @classmethod
    def from_dict(cls, d: Mapping, default_id: str = "m") -> "MetaGraph":
        try:
            roles = {n["role"]: n["type"] for n in d["nodes"]}
            edges = tuple((e["from"], e["to"], e["edge_type"]) for e in d["edges"])
            return cls(str(d.get("id", default_id)), d["relationship"].upper(), roles,
                       edges, tuple(d["endpoints"]))
        except KeyError as exc:
            raise InputError(f"meta-graph description missing key {exc}") from None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "relationship": self.relationship,
            "nodes": [{"role": r, "type": t} for r, t in self.roles.items()],
            "edges": [{"from": a, "to": b, "edge_type": t} for a, b, t in self.edges],
            "endpoints": list(self.endpoints),
        }


def load_metagraphs(path) -> list[MetaGraph]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("metagraphs", [data])
    return [MetaGraph.from_dict(d, f"m{i + 1}") for i, d in enumerate(data)]


def save_metagraphs(metas, path):
    Path(path).write_text(json.dumps([m.to_dict() for m in metas], indent=2) + "\n")


def _connected(roles, edges) -> bool:
    nodes = list(roles)
    if not nodes:
        return False
    adj = defaultdict(set)
    for a, b, _ in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        v = stack.pop()
        for w in adj[v] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == len(nodes)


def _check_schema(kg: KnowledgeGraph, m: MetaGraph):
    for r, t in m.roles.items():
        if t not in kg.types:
            raise SchemaError(f"meta-graph {m.id}: node type {t} absent from the knowledge graph")
    for a, b, t in m.edges:
        triple = (m.roles[a], t, m.roles[b])
        if triple not in kg.schema:
            raise SchemaError(f"meta-graph {m.id}: edge triple {triple} not declared")


def _role_order(m: MetaGraph) -> list[str]:
    # endpoints first, then breadth-first so each role touches a placed one
    order = list(m.endpoints)
    adj = defaultdict(set)
    for a, b, _ in m.edges:
        adj[a].add(b)
        adj[b].add(a)
    q = deque(order)
    seen = set(order)
    while q:
        v = q.popleft()
        for w in sorted(adj[v] - seen):
            seen.add(w)
            order.append(w)
            q.append(w)
    return order


def iter_embeddings(kg: KnowledgeGraph, m: MetaGraph, bind: Mapping[str, str] | None = None):
    """Yield injective, type- and edge-respecting role->node mappings."""
    order = _role_order(m)
    bind = dict(bind or {})
    by_type = {t: kg.nodes_of_type(t) for t in set(m.roles.values())}
    mapping: dict[str, str] = {}
    used: set[str] = set()

    def candidates(role):
        if role in bind:
            node = bind[role]
            return [node] if kg.node_types.get(node) == m.roles[role] else []
        pool = None
        for a, b, t in m.edges:
            if a == role and b in mapping:
                s = kg.inn.get((mapping[b], t), set())
            elif b == role and a in mapping:
                s = kg.out.get((mapping[a], t), set())
            else:
                continue
            pool = set(s) if pool is None else pool & s
        if pool is None:
            return by_type[m.roles[role]]
        return sorted(v for v in pool if kg.node_types[v] == m.roles[role])

    def consistent(role, node):
        for a, b, t in m.edges:
            if a == role and (b in mapping or b == role):
                if (node, mapping.get(b, node), t) not in kg.edge_set:
                    return False
            elif b == role and a in mapping:
                if (mapping[a], node, t) not in kg.edge_set:
                    return False
        return True

    def rec(i):
        if i == len(order):
            yield dict(mapping)
            return
        role = order[i]
        for node in candidates(role):
            if node in used or not consistent(role, node):
                continue
            mapping[role] = node
            used.add(node)
            yield from rec(i + 1)
            del mapping[role]
            used.discard(node)

    yield from rec(0)


def count_meta_instances(kg: KnowledgeGraph, m: MetaGraph, x: str, y: str) -> int:
    for it in (x, y):
        if it not in kg.node_types:
            raise InputError(f"unknown item {it}")
        if kg.node_types[it] != ITEM:
            raise InputError(f"{it} is not an ITEM node")
    if x == y:
        raise InputError("endpoints must be distinct items")
    _check_schema(kg, m)
    e1, e2 = m.endpoints
    found = set()
    for a, b in ((x, y), (y, x)):
        for emb in iter_embeddings(kg, m, {e1: a, e2: b}):
            found.add(frozenset(emb.values()))
    return len(found)


def instance_count_matrix(kg: KnowledgeGraph, m: MetaGraph, items: list[str]) -> np.ndarray:
    """Pair counts for all items at once, from a single unbound enumeration."""
    _check_schema(kg, m)
    pos = {it: i for i, it in enumerate(items)}
    e1, e2 = m.endpoints
    found = set()
    for emb in iter_embeddings(kg, m):
        a, b = emb[e1], emb[e2]
        if a in pos and b in pos:
            found.add((frozenset((a, b)), frozenset(emb.values())))
    counts = np.zeros((len(items), len(items)), dtype=np.int64)
    for pair, _ in found:
        a, b = sorted(pair, key=pos.get)
        counts[pos[a], pos[b]] += 1
        counts[pos[b], pos[a]] += 1
    return counts


def relevance_from_counts(counts: np.ndarray) -> np.ndarray:
    top = counts.max() if counts.size else 0
    if top <= 0:
        return np.zeros(counts.shape, dtype=np.float64)
    return counts.astype(np.float64) / float(top)


def base_relevance(kg: KnowledgeGraph, m: MetaGraph, x: str, y: str) -> float:
    c = count_meta_instances(kg, m, x, y)
    if c == 0:
        return 0.0
    top = instance_count_matrix(kg, m, kg.items()).max()
    return c / float(top)


@dataclass
class ItemCatalog:
    importance: dict[str, float]
    costs: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        for it, w in self.importance.items():
            if not w >= 0:
                raise InputError(f"importance of {it} must be nonnegative, got {w}")
        for key, c in self.costs.items():
            if not c > 0:
                raise InputError(f"cost of {key} must be strictly positive, got {c}")

    @property
    def items(self) -> list[str]:
        return sorted(self.importance)

    def check_against(self, kg: KnowledgeGraph):
        for it in self.items:
            if it in kg.node_types and kg.node_types[it] != ITEM:
                raise SchemaError(f"catalog item {it} has KG type {kg.node_types[it]}")

    @classmethod
    def from_csv(cls, items_path, costs_path=None) -> "ItemCatalog":
        imp = {}
        with open(items_path, newline="") as fh:
            for row in csv.DictReader(fh):
                imp[row["item"]] = float(row["importance"])
        costs = {}
        if costs_path is not None:
            with open(costs_path, newline="") as fh:
                for row in csv.DictReader(fh):
                    costs[(row["user"], row["item"])] = float(row["cost"])
        return cls(imp, costs)


def cost_rule(network: SocialNetwork, items, prefs: Mapping[tuple[str, str], float],
              alpha: float = 1.0) -> dict[tuple[str, str], float]:
    """Seeding cost proportional to out-degree and preference.

    Users with no out-edges get the floor degree 1 so every cost stays positive.
    """
    deg = defaultdict(int)
    for a, _ in network.edges:
        deg[a] += 1
    out = {}
    for u in network.users:
        for x in items:
            out[(u, x)] = alpha * max(deg[u], 1) * (1.5 - prefs.get((u, x), 0.0))
    return out


def read_preferences(path) -> dict[tuple[str, str], float]:
    prefs = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            p = float(row["preference"])
            if not 0.0 <= p <= 1.0:
                raise InputError(f"preference of ({row['user']}, {row['item']}) outside [0, 1]")
            prefs[(row["user"], row["item"])] = p
    return prefs


def _read_rows(path, delim):
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            rows.append(line.split(delim))
    return rows

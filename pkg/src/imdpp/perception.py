"""Per-user perception state and its end-of-step update rules.

These are the reference (numpy) forms of the rules; the campaign kernels in
``_pykernels`` / ``_ckernels`` implement the same arithmetic in loops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _clamp(v):
    return np.minimum(1.0, np.maximum(0.0, v))


def meta_evidence(adopted_items, ev: np.ndarray) -> np.ndarray:
    """Number of unordered adopted pairs with a positive instance count, per meta-graph."""
    items = sorted(adopted_items)
    out = np.zeros(ev.shape[0], dtype=np.int64)
    for i, a in enumerate(items):
        for b in items[i + 1:]:
            out += ev[:, a, b] != 0
    return out


def update_meta_weights(weights: np.ndarray, adopted_items, ev: np.ndarray, eta: float,
                        newly_adopted: bool = True) -> np.ndarray:
    if not newly_adopted or weights.size == 0:
        return weights.copy()
    new = weights * (1.0 + eta * meta_evidence(adopted_items, ev))
    total = new.sum()
    return new / total if total > 0 else new


def derive_pin(wc: np.ndarray, ws: np.ndarray, s_c: np.ndarray, s_s: np.ndarray):
    """Personal relevance maps as weight-mixtures of base relevance, clamped to [0, 1]."""
    k = s_c.shape[1] if s_c.ndim == 3 else s_s.shape[1]
    rc = np.tensordot(wc, s_c, axes=1) if wc.size else np.zeros((k, k))
    rs = np.tensordot(ws, s_s, axes=1) if ws.size else np.zeros((k, k))
    return _clamp(rc), _clamp(rs)


def update_preferences(pref: np.ndarray, adopted: np.ndarray, rc: np.ndarray, rs: np.ndarray,
                       lam: float) -> np.ndarray:
    """Shift preference of every not-yet-adopted item by the net relevance to adopted ones."""
    adopted = adopted.astype(bool)
    if not adopted.any():
        return pref.copy()
    shift = (rc[adopted] - rs[adopted]).sum(axis=0)
    new = _clamp(pref + lam * shift)
    return np.where(adopted, pref, new)


def jaccard(a: np.ndarray, b: np.ndarray) -> float:
    a, b = a.astype(bool), b.astype(bool)
    union = np.count_nonzero(a | b)
    return np.count_nonzero(a & b) / union if union else 0.0


def update_influence(base: float, adopted_u: np.ndarray, adopted_v: np.ndarray, mu: float) -> float:
    return float(min(1.0, max(0.0, base * (1.0 + mu * jaccard(adopted_u, adopted_v)))))


def ext_probability(p_act: float, pref_x: float, rc_xy: float) -> float:
    """Chance that promoting x also triggers adoption of y."""
    if rc_xy <= 0:
        return 0.0
    return p_act * pref_x * rc_xy


def aggregated_influence(p_acts, model: str = "ic") -> float:
    """Combine the influence of adopting in-neighbours into one probability."""
    p = np.asarray(list(p_acts), dtype=np.float64)
    if p.size == 0:
        return 0.0
    if model == "lt":
        return float(min(1.0, p.sum()))
    return float(1.0 - np.prod(1.0 - p))


@dataclass
class CampaignState:
    adopted: np.ndarray   # (n, k) uint8
    pref: np.ndarray      # (n, k)
    wc: np.ndarray        # (n, mC)
    ws: np.ndarray        # (n, mS)
    rc: np.ndarray        # (n, k, k)
    rs: np.ndarray        # (n, k, k)
    pact: np.ndarray      # (E,)

    def copy(self) -> "CampaignState":
        return CampaignState(*(np.array(a, copy=True) for a in self.arrays()))

    def arrays(self):
        return (self.adopted, self.pref, self.wc, self.ws, self.rc, self.rs, self.pact)

    def load(self, other: "CampaignState"):
        for dst, src in zip(self.arrays(), other.arrays()):
            np.copyto(dst, src)


def end_of_step(state: CampaignState, world, changed_users) -> None:
    """Apply all four update rules to users with a new adoption, reading a snapshot."""
    snap = state.copy()
    for u in sorted(set(changed_users)):
        items = np.flatnonzero(snap.adopted[u])
        if world.eta != 0:
            state.wc[u] = update_meta_weights(snap.wc[u], items, world.ev_c, world.eta)
            state.ws[u] = update_meta_weights(snap.ws[u], items, world.ev_s, world.eta)
            state.rc[u], state.rs[u] = derive_pin(state.wc[u], state.ws[u], world.s_c, world.s_s)
        if world.lam != 0:
            state.pref[u] = update_preferences(snap.pref[u], snap.adopted[u], state.rc[u],
                                               state.rs[u], world.lam)
    if world.mu != 0:
        touched = set(changed_users)
        for e in range(world.E):
            a, b = int(world.src[e]), int(world.dst[e])
            if a in touched or b in touched:
                state.pact[e] = update_influence(world.pact0[e], snap.adopted[a],
                                                 snap.adopted[b], world.mu)

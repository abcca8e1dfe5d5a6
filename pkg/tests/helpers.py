import numpy as np

from imdpp._pykernels import EXTRA, PROMOTED, SEEDED, coin
from imdpp.perception import end_of_step
from imdpp.world import Params, array_world


def reference_campaign(world, seeds, T, key):
    """Straightforward campaign replay built on the numpy update rules."""
    st = world.init.copy()
    events = []
    out = {}
    for e, (a, b) in enumerate(zip(world.src, world.dst)):
        out.setdefault(int(a), []).append((e, int(b)))
    for t in range(1, T + 1):
        newly = []
        for u, x, tt in sorted(seeds, key=lambda s: (s[2], s[0], s[1])):
            if tt == t and not st.adopted[u, x] and (u, x) not in newly:
                newly.append((u, x))
        for u, x in newly:
            st.adopted[u, x] = 1
            events.append((t, 0, u, x, SEEDED))
        if not newly:
            continue
        end_of_step(st, world, {u for u, _ in newly})
        step = 1
        while newly:
            kind = {}
            for s, x in newly:
                for e, d in out.get(s, []):
                    if st.adopted[d, x]:
                        continue
                    pa = st.pact[e] * st.pref[d, x]
                    if pa <= 0:
                        continue
                    if coin(key, t, e, x, 0) < pa:
                        kind[(d, x)] = PROMOTED
                    for y in range(world.k):
                        if y == x or st.adopted[d, y] or st.rc[d, x, y] <= 0:
                            continue
                        if coin(key, t, e, x, y + 1) < pa * st.rc[d, x, y]:
                            kind.setdefault((d, y), EXTRA)
            newly = sorted(kind)
            for d, y in newly:
                st.adopted[d, y] = 1
                events.append((t, step, d, y, kind[(d, y)]))
            if newly:
                end_of_step(st, world, {d for d, _ in newly})
            step += 1
    return events, st


def random_world(rng, n=None, k=None, params=None, density=0.4):
    n = n or int(rng.integers(2, 7))
    k = k or int(rng.integers(1, 4))
    edges = {(a, b): float(rng.uniform(0.1, 1.0)) for a in range(n) for b in range(n)
             if a != b and rng.random() < density}
    pref = rng.uniform(0, 1, (n, k))
    s_c = rng.uniform(0, 1, (2, k, k)) * (rng.random((2, k, k)) < 0.6)
    s_s = rng.uniform(0, 1, (1, k, k)) * (rng.random((1, k, k)) < 0.4)
    s_c = (s_c + s_c.transpose(0, 2, 1)) / 2
    s_s = (s_s + s_s.transpose(0, 2, 1)) / 2
    for a in (s_c, s_s):
        for m in range(a.shape[0]):
            np.fill_diagonal(a[m], 0)
    weights = rng.uniform(0.5, 2.0, k)
    params = params or Params(0.5, 0.3, 0.25)
    return array_world(n, k, edges, pref, s_c=s_c, s_s=s_s, weights=weights, params=params)


def random_seeds(rng, world, T, m=None):
    m = m or int(rng.integers(1, 4))
    return sorted({(int(rng.integers(world.n)), int(rng.integers(world.k)),
                    int(rng.integers(1, T + 1))) for _ in range(m)})

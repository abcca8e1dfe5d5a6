"""Pure-Python campaign kernel; mirrors ``_ckernels.pyx`` operation for operation."""
import numpy as np

MASK = (1 << 64) - 1
INV53 = 1.0 / 9007199254740992.0

SEEDED, PROMOTED, EXTRA = 0, 1, 2


def mix64(z):
    z = (z + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def coin(key, t, e, x, y1):
    """Uniform in [0, 1) keyed by (sample key, promotion, edge, item, extra item + 1)."""
    h = mix64(key ^ t)
    h = mix64(h ^ e)
    h = mix64(h ^ x)
    h = mix64(h ^ y1)
    return (h >> 11) * INV53


def sample_key(master, index):
    return mix64((master & MASK) ^ mix64(index & MASK))


def _end_of_step(changed, n, k, mc, ms, adopted, pref, wc, ws, rc, rs, pact,
                 s_c, s_s, ev_c, ev_s, eta, lam, mu, pact0, src, dst, out_ptr, in_ptr, in_eid,
                 stamp, stamp_id):
    kk = k * k
    for u in changed:
        ad = [a for a in range(k) if adopted[u * k + a]]
        if eta != 0.0:
            for (w, m_cnt, ev) in ((wc, mc, ev_c), (ws, ms, ev_s)):
                if m_cnt == 0:
                    continue
                tot = 0.0
                for m in range(m_cnt):
                    cnt = 0
                    base = m * kk
                    for i in range(len(ad)):
                        a = ad[i]
                        for j in range(i + 1, len(ad)):
                            if ev[base + a * k + ad[j]]:
                                cnt += 1
                    v = w[u * m_cnt + m] * (1.0 + eta * cnt)
                    w[u * m_cnt + m] = v
                    tot += v
                if tot > 0.0:
                    for m in range(m_cnt):
                        w[u * m_cnt + m] = w[u * m_cnt + m] / tot
            for (w, m_cnt, s, r) in ((wc, mc, s_c, rc), (ws, ms, s_s, rs)):
                for ab in range(kk):
                    acc = 0.0
                    for m in range(m_cnt):
                        acc += w[u * m_cnt + m] * s[m * kk + ab]
                    if acc > 1.0:
                        acc = 1.0
                    elif acc < 0.0:
                        acc = 0.0
                    r[u * kk + ab] = acc
        if lam != 0.0 and ad:
            for y in range(k):
                if adopted[u * k + y]:
                    continue
                acc = 0.0
                for a in ad:
                    acc += rc[u * kk + a * k + y] - rs[u * kk + a * k + y]
                v = pref[u * k + y] + lam * acc
                if v > 1.0:
                    v = 1.0
                elif v < 0.0:
                    v = 0.0
                pref[u * k + y] = v
    if mu != 0.0:
        for u in changed:
            for e in range(out_ptr[u], out_ptr[u + 1]):
                if stamp[e] != stamp_id:
                    stamp[e] = stamp_id
                    _refresh_edge(e, src[e], dst[e], k, adopted, pact, pact0, mu)
            for j in range(in_ptr[u], in_ptr[u + 1]):
                e = in_eid[j]
                if stamp[e] != stamp_id:
                    stamp[e] = stamp_id
                    _refresh_edge(e, src[e], dst[e], k, adopted, pact, pact0, mu)


def _refresh_edge(e, a, b, k, adopted, pact, pact0, mu):
    inter = 0
    union = 0
    for y in range(k):
        pa = adopted[a * k + y]
        pb = adopted[b * k + y]
        if pa or pb:
            union += 1
            if pa and pb:
                inter += 1
    j = inter / union if union else 0.0
    v = pact0[e] * (1.0 + mu * j)
    if v > 1.0:
        v = 1.0
    elif v < 0.0:
        v = 0.0
    pact[e] = v


def simulate(kw, state, seeds, T, t0, key, adopt_coins, ext_coins, events, user_mask):
    """Run promotions t0+1..t0+T in place on ``state``.

    seeds: (s, 3) int64 rows (user, item, local t), sorted by t.
    Coins come from the hash of ``key`` unless ``adopt_coins`` is given, in which
    case they are read from the realization arrays (1 = success).
    Returns (number of events, weighted adoptions, weighted adoptions by masked users).
    """
    n, k, E = kw.n, kw.k, kw.E
    mc, ms = kw.s_c.shape[0], kw.s_s.shape[0]
    adopted = state.adopted.ravel().tolist()
    pref = state.pref.ravel().tolist()
    wc = state.wc.ravel().tolist()
    ws = state.ws.ravel().tolist()
    rc = state.rc.ravel().tolist()
    rs = state.rs.ravel().tolist()
    pact = state.pact.tolist()
    s_c = kw.s_c.ravel().tolist()
    s_s = kw.s_s.ravel().tolist()
    ev_c = kw.ev_c.ravel().tolist()
    ev_s = kw.ev_s.ravel().tolist()
    pact0 = kw.pact0.tolist()
    src = kw.src.tolist()
    dst = kw.dst.tolist()
    out_ptr = kw.out_ptr.tolist()
    in_ptr = kw.in_ptr.tolist()
    in_eid = kw.in_eid.tolist()
    w = kw.weights.tolist()
    mask = user_mask.tolist() if user_mask is not None else None
    eta, lam, mu = float(kw.eta), float(kw.lam), float(kw.mu)
    use_arrays = adopt_coins is not None
    if use_arrays:
        ac = np.ravel(adopt_coins).tolist()
        xc = np.ravel(ext_coins).tolist()
    seeds = seeds.tolist() if hasattr(seeds, "tolist") else list(seeds)
    kk = k * k
    flag = [0] * (n * k)
    stamp = [0] * E
    stamp_id = 0
    n_ev = 0
    total = 0.0
    masked = 0.0
    si = 0
    for tl in range(1, T + 1):
        t = t0 + tl
        newly = []
        while si < len(seeds) and seeds[si][2] < tl:
            si += 1
        while si < len(seeds) and seeds[si][2] == tl:
            u, x = seeds[si][0], seeds[si][1]
            si += 1
            if adopted[u * k + x]:
                continue
            adopted[u * k + x] = 1
            newly.append(u * k + x)
            if events is not None:
                events[n_ev] = (t, 0, u, x, SEEDED)
            n_ev += 1
            total += w[x]
            if mask is not None and mask[u]:
                masked += w[x]
        if not newly:
            continue
        changed = sorted(set(p // k for p in newly))
        stamp_id += 1
        _end_of_step(changed, n, k, mc, ms, adopted, pref, wc, ws, rc, rs, pact, s_c, s_s,
                     ev_c, ev_s, eta, lam, mu, pact0, src, dst, out_ptr, in_ptr, in_eid,
                     stamp, stamp_id)
        step = 1
        while newly:
            marked = []
            for p in newly:
                s, x = divmod(p, k)
                for e in range(out_ptr[s], out_ptr[s + 1]):
                    d = dst[e]
                    if adopted[d * k + x]:
                        continue
                    pa = pact[e] * pref[d * k + x]
                    if pa <= 0.0:
                        continue
                    if use_arrays:
                        cidx = ((t - 1) * E + e) * k + x
                        ok = pa >= 1.0 or ac[cidx] != 0
                    else:
                        ok = coin(key, t, e, x, 0) < pa
                    if ok:
                        if flag[d * k + x] == 0:
                            marked.append(d * k + x)
                        flag[d * k + x] = 1
                    rbase = d * kk + x * k
                    for y in range(k):
                        if y == x or adopted[d * k + y]:
                            continue
                        r = rc[rbase + y]
                        if r <= 0.0:
                            continue
                        pe = pa * r
                        if use_arrays:
                            ok = pe >= 1.0 or xc[(((t - 1) * E + e) * k + x) * k + y] != 0
                        else:
                            ok = coin(key, t, e, x, y + 1) < pe
                        if ok and flag[d * k + y] == 0:
                            marked.append(d * k + y)
                            flag[d * k + y] = 2
            marked.sort()
            for p in marked:
                d, y = divmod(p, k)
                adopted[p] = 1
                if events is not None:
                    events[n_ev] = (t, step, d, y, PROMOTED if flag[p] == 1 else EXTRA)
                n_ev += 1
                flag[p] = 0
                total += w[y]
                if mask is not None and mask[d]:
                    masked += w[y]
            newly = marked
            if newly:
                changed = sorted(set(p // k for p in newly))
                stamp_id += 1
                _end_of_step(changed, n, k, mc, ms, adopted, pref, wc, ws, rc, rs, pact, s_c,
                             s_s, ev_c, ev_s, eta, lam, mu, pact0, src, dst, out_ptr, in_ptr,
                             in_eid, stamp, stamp_id)
            step += 1
    state.adopted[...] = np.array(adopted, dtype=np.uint8).reshape(state.adopted.shape)
    state.pref[...] = np.array(pref).reshape(state.pref.shape)
    if state.wc.size:
        state.wc[...] = np.array(wc).reshape(state.wc.shape)
    if state.ws.size:
        state.ws[...] = np.array(ws).reshape(state.ws.shape)
    state.rc[...] = np.array(rc).reshape(state.rc.shape)
    state.rs[...] = np.array(rs).reshape(state.rs.shape)
    if E:
        state.pact[...] = np.array(pact)
    return n_ev, total, masked


def sample_values(kw, init, seeds, T, keys, user_mask):
    """Weighted adoption totals for each key, each run from a fresh copy of ``init``."""
    out = np.zeros(len(keys))
    out_masked = np.zeros(len(keys))
    state = init.copy()
    for i, key in enumerate(keys):
        state.load(init)
        _, out[i], out_masked[i] = simulate(kw, state, seeds, T, 0, int(key), None, None, None,
                                            user_mask)
    return out, out_masked

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled campaign kernel; same arithmetic and order as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.string cimport memcpy

cnp.import_array()

cdef enum:
    SEEDED = 0
    PROMOTED = 1
    EXTRA = 2

cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double coin(uint64_t key, uint64_t t, uint64_t e, uint64_t x, uint64_t y1) nogil:
    cdef uint64_t h = mix64(key ^ t)
    h = mix64(h ^ e)
    h = mix64(h ^ x)
    h = mix64(h ^ y1)
    return (h >> 11) * INV53


def py_coin(uint64_t key, uint64_t t, uint64_t e, uint64_t x, uint64_t y1):
    return coin(key, t, e, x, y1)


cdef struct Ctx:
    int64_t n, k, E, mc, ms
    uint8_t* adopted
    double* pref
    double* wc
    double* ws
    double* rc
    double* rs
    double* pact
    const double* s_c
    const double* s_s
    const uint8_t* ev_c
    const uint8_t* ev_s
    const double* pact0
    const int64_t* src
    const int64_t* dst
    const int64_t* out_ptr
    const int64_t* in_ptr
    const int64_t* in_eid
    const double* w
    double eta, lam, mu
    int64_t* stamp
    int64_t stamp_id  # persists across runs sharing the stamp buffer
    int64_t* ad


cdef inline double clamp01(double v) nogil:
    if v > 1.0:
        return 1.0
    if v < 0.0:
        return 0.0
    return v


cdef void refresh_edge(Ctx* c, int64_t e) nogil:
    cdef int64_t a = c.src[e], b = c.dst[e], y, inter = 0, union = 0
    cdef int k = c.k
    for y in range(k):
        if c.adopted[a * k + y] or c.adopted[b * k + y]:
            union += 1
            if c.adopted[a * k + y] and c.adopted[b * k + y]:
                inter += 1
    cdef double j = (<double>inter) / union if union else 0.0
    c.pact[e] = clamp01(c.pact0[e] * (1.0 + c.mu * j))


cdef void update_weights(Ctx* c, int64_t u, double* w, int64_t m_cnt, const uint8_t* ev,
                         int64_t nad) nogil:
    cdef int64_t m, i, j, cnt, k = c.k, kk = c.k * c.k
    cdef double tot = 0.0, v
    if m_cnt == 0:
        return
    for m in range(m_cnt):
        cnt = 0
        for i in range(nad):
            for j in range(i + 1, nad):
                if ev[m * kk + c.ad[i] * k + c.ad[j]]:
                    cnt += 1
        v = w[u * m_cnt + m] * (1.0 + c.eta * cnt)
        w[u * m_cnt + m] = v
        tot += v
    if tot > 0.0:
        for m in range(m_cnt):
            w[u * m_cnt + m] = w[u * m_cnt + m] / tot


cdef void mix_pin(Ctx* c, int64_t u, const double* w, int64_t m_cnt, const double* s,
                  double* r) nogil:
    cdef int64_t ab, m, kk = c.k * c.k
    cdef double acc
    for ab in range(kk):
        acc = 0.0
        for m in range(m_cnt):
            acc += w[u * m_cnt + m] * s[m * kk + ab]
        r[u * kk + ab] = clamp01(acc)


cdef void end_of_step(Ctx* c, int64_t* changed, int64_t nch, int64_t stamp_id) nogil:
    cdef int64_t i, u, a, y, nad, e, j, k = c.k, kk = c.k * c.k
    cdef double acc
    for i in range(nch):
        u = changed[i]
        nad = 0
        for a in range(k):
            if c.adopted[u * k + a]:
                c.ad[nad] = a
                nad += 1
        if c.eta != 0.0:
            update_weights(c, u, c.wc, c.mc, c.ev_c, nad)
            update_weights(c, u, c.ws, c.ms, c.ev_s, nad)
            mix_pin(c, u, c.wc, c.mc, c.s_c, c.rc)
            mix_pin(c, u, c.ws, c.ms, c.s_s, c.rs)
        if c.lam != 0.0 and nad > 0:
            for y in range(k):
                if c.adopted[u * k + y]:
                    continue
                acc = 0.0
                for j in range(nad):
                    a = c.ad[j]
                    acc += c.rc[u * kk + a * k + y] - c.rs[u * kk + a * k + y]
                c.pref[u * k + y] = clamp01(c.pref[u * k + y] + c.lam * acc)
    if c.mu != 0.0:
        for i in range(nch):
            u = changed[i]
            for e in range(c.out_ptr[u], c.out_ptr[u + 1]):
                if c.stamp[e] != stamp_id:
                    c.stamp[e] = stamp_id
                    refresh_edge(c, e)
            for j in range(c.in_ptr[u], c.in_ptr[u + 1]):
                e = c.in_eid[j]
                if c.stamp[e] != stamp_id:
                    c.stamp[e] = stamp_id
                    refresh_edge(c, e)


cdef int64_t changed_users(int64_t* pairs, int64_t npairs, int64_t k, int64_t* out) nogil:
    # pairs are sorted, so users come out sorted
    cdef int64_t i, u, nch = 0
    for i in range(npairs):
        u = pairs[i] // k
        if nch == 0 or out[nch - 1] != u:
            out[nch] = u
            nch += 1
    return nch


cdef void isort(int64_t* a, int64_t m) nogil:
    cdef int64_t i, j, v
    for i in range(1, m):
        v = a[i]
        j = i - 1
        while j >= 0 and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


cdef void run(Ctx* c, const int64_t* seeds, int64_t nseeds, int64_t T, int64_t t0, uint64_t key,
              const uint8_t* ac, const uint8_t* xc, int64_t* events, const uint8_t* mask,
              int64_t* newly, int64_t* marked, int64_t* changed, uint8_t* flag,
              int64_t* out_nev, double* out_total, double* out_masked) nogil:
    cdef int64_t n = c.n, k = c.k, E = c.E, kk = c.k * c.k
    cdef int64_t tl, t, si = 0, nnew, nmark, nch, p, s, x, e, d, y, u, step, i, rbase
    cdef int64_t n_ev = 0
    cdef double total = 0.0, masked = 0.0, pa, pe, r
    cdef bint ok
    for tl in range(1, T + 1):
        t = t0 + tl
        nnew = 0
        while si < nseeds and seeds[si * 3 + 2] < tl:
            si += 1
        while si < nseeds and seeds[si * 3 + 2] == tl:
            u = seeds[si * 3]
            x = seeds[si * 3 + 1]
            si += 1
            if c.adopted[u * k + x]:
                continue
            c.adopted[u * k + x] = 1
            newly[nnew] = u * k + x
            nnew += 1
            if events != NULL:
                events[n_ev * 5] = t
                events[n_ev * 5 + 1] = 0
                events[n_ev * 5 + 2] = u
                events[n_ev * 5 + 3] = x
                events[n_ev * 5 + 4] = SEEDED
            n_ev += 1
            total += c.w[x]
            if mask != NULL and mask[u]:
                masked += c.w[x]
        if nnew == 0:
            continue
        isort(newly, nnew)
        nch = changed_users(newly, nnew, k, changed)
        c.stamp_id += 1
        end_of_step(c, changed, nch, c.stamp_id)
        step = 1
        while nnew > 0:
            nmark = 0
            for i in range(nnew):
                p = newly[i]
                s = p // k
                x = p % k
                for e in range(c.out_ptr[s], c.out_ptr[s + 1]):
                    d = c.dst[e]
                    if c.adopted[d * k + x]:
                        continue
                    pa = c.pact[e] * c.pref[d * k + x]
                    if pa <= 0.0:
                        continue
                    if ac != NULL:
                        ok = pa >= 1.0 or ac[((t - 1) * E + e) * k + x] != 0
                    else:
                        ok = coin(key, t, e, x, 0) < pa
                    if ok:
                        if flag[d * k + x] == 0:
                            marked[nmark] = d * k + x
                            nmark += 1
                        flag[d * k + x] = 1
                    rbase = d * kk + x * k
                    for y in range(k):
                        if y == x or c.adopted[d * k + y]:
                            continue
                        r = c.rc[rbase + y]
                        if r <= 0.0:
                            continue
                        pe = pa * r
                        if ac != NULL:
                            ok = pe >= 1.0 or xc[(((t - 1) * E + e) * k + x) * k + y] != 0
                        else:
                            ok = coin(key, t, e, x, y + 1) < pe
                        if ok and flag[d * k + y] == 0:
                            marked[nmark] = d * k + y
                            nmark += 1
                            flag[d * k + y] = 2
            isort(marked, nmark)
            for i in range(nmark):
                p = marked[i]
                d = p // k
                y = p % k
                c.adopted[p] = 1
                if events != NULL:
                    events[n_ev * 5] = t
                    events[n_ev * 5 + 1] = step
                    events[n_ev * 5 + 2] = d
                    events[n_ev * 5 + 3] = y
                    events[n_ev * 5 + 4] = PROMOTED if flag[p] == 1 else EXTRA
                n_ev += 1
                flag[p] = 0
                total += c.w[y]
                if mask != NULL and mask[d]:
                    masked += c.w[y]
            for i in range(nmark):
                newly[i] = marked[i]
            nnew = nmark
            if nnew > 0:
                nch = changed_users(newly, nnew, k, changed)
                c.stamp_id += 1
                end_of_step(c, changed, nch, c.stamp_id)
            step += 1
    out_nev[0] = n_ev
    out_total[0] = total
    out_masked[0] = masked


cdef class _Buffers:
    cdef public object newly, marked, changed, flag, stamp, ad

    def __init__(self, int64_t n, int64_t k, int64_t E):
        self.newly = np.zeros(max(n * k, 1), dtype=np.int64)
        self.marked = np.zeros(max(n * k, 1), dtype=np.int64)
        self.changed = np.zeros(max(n, 1), dtype=np.int64)
        self.flag = np.zeros(max(n * k, 1), dtype=np.uint8)
        self.stamp = np.zeros(max(E, 1), dtype=np.int64)
        self.ad = np.zeros(max(k, 1), dtype=np.int64)


cdef void fill_ctx(Ctx* c, kw, state, _Buffers b,
                   uint8_t[::1] adopted, double[::1] pref, double[::1] wc, double[::1] ws,
                   double[::1] rc, double[::1] rs, double[::1] pact,
                   const double[::1] s_c, const double[::1] s_s, const uint8_t[::1] ev_c,
                   const uint8_t[::1] ev_s, const double[::1] pact0, const int64_t[::1] src,
                   const int64_t[::1] dst, const int64_t[::1] out_ptr, const int64_t[::1] in_ptr,
                   const int64_t[::1] in_eid, const double[::1] w,
                   int64_t[::1] stamp, int64_t[::1] ad):
    c.n = kw.n
    c.k = kw.k
    c.E = kw.E
    c.mc = kw.s_c.shape[0]
    c.ms = kw.s_s.shape[0]
    c.adopted = &adopted[0] if adopted.shape[0] else NULL
    c.pref = &pref[0] if pref.shape[0] else NULL
    c.wc = &wc[0] if wc.shape[0] else NULL
    c.ws = &ws[0] if ws.shape[0] else NULL
    c.rc = &rc[0] if rc.shape[0] else NULL
    c.rs = &rs[0] if rs.shape[0] else NULL
    c.pact = &pact[0] if pact.shape[0] else NULL
    c.s_c = &s_c[0] if s_c.shape[0] else NULL
    c.s_s = &s_s[0] if s_s.shape[0] else NULL
    c.ev_c = &ev_c[0] if ev_c.shape[0] else NULL
    c.ev_s = &ev_s[0] if ev_s.shape[0] else NULL
    c.pact0 = &pact0[0] if pact0.shape[0] else NULL
    c.src = &src[0] if src.shape[0] else NULL
    c.dst = &dst[0] if dst.shape[0] else NULL
    c.out_ptr = &out_ptr[0]
    c.in_ptr = &in_ptr[0]
    c.in_eid = &in_eid[0] if in_eid.shape[0] else NULL
    c.w = &w[0] if w.shape[0] else NULL
    c.eta = kw.eta
    c.lam = kw.lam
    c.mu = kw.mu
    c.stamp = &stamp[0]
    c.stamp_id = 0
    c.ad = &ad[0]


def _flat(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype).reshape(-1)


cdef uint8_t _no_coins = 0


def simulate(kw, state, seeds, int64_t T, int64_t t0, uint64_t key, adopt_coins, ext_coins,
             events, user_mask):
    cdef Ctx c
    cdef _Buffers b = _Buffers(kw.n, kw.k, kw.E)
    # state arrays must be C-contiguous so the kernel writes through
    views = [state.adopted.reshape(-1), state.pref.reshape(-1), state.wc.reshape(-1),
             state.ws.reshape(-1), state.rc.reshape(-1), state.rs.reshape(-1), state.pact]
    for v, a in zip(views, state.arrays()):
        if not a.flags.c_contiguous:
            raise ValueError("state arrays must be C-contiguous")
    fill_ctx(&c, kw, state, b, views[0], views[1], views[2], views[3], views[4], views[5],
             views[6], _flat(kw.s_c, np.float64), _flat(kw.s_s, np.float64),
             _flat(kw.ev_c, np.uint8), _flat(kw.ev_s, np.uint8), kw.pact0, kw.src, kw.dst,
             kw.out_ptr, kw.in_ptr, kw.in_eid, kw.weights, b.stamp, b.ad)
    cdef int64_t[::1] sd = _flat(seeds, np.int64) if len(seeds) else np.zeros(3, dtype=np.int64)
    cdef int64_t nseeds = len(seeds)
    cdef const uint8_t[::1] acv
    cdef const uint8_t[::1] xcv
    cdef const uint8_t* acp = NULL
    cdef const uint8_t* xcp = NULL
    if adopt_coins is not None:
        acv = _flat(adopt_coins, np.uint8)
        xcv = _flat(ext_coins, np.uint8)
        if acv.shape[0]:
            acp = &acv[0]
        else:
            acp = &_no_coins  # never read: no edges
        if xcv.shape[0]:
            xcp = &xcv[0]
        else:
            xcp = acp
    cdef int64_t[:, ::1] ev
    cdef int64_t* evp = NULL
    if events is not None:
        ev = events
        if ev.shape[0]:
            evp = &ev[0, 0]
    cdef const uint8_t[::1] mv
    cdef const uint8_t* mp = NULL
    if user_mask is not None:
        mv = _flat(user_mask, np.uint8)
        mp = &mv[0]
    cdef int64_t[::1] newly = b.newly
    cdef int64_t[::1] marked = b.marked
    cdef int64_t[::1] changed = b.changed
    cdef uint8_t[::1] flag = b.flag
    cdef int64_t nev = 0
    cdef double total = 0.0, masked = 0.0
    with nogil:
        run(&c, &sd[0], nseeds, T, t0, key, acp, xcp, evp, mp, &newly[0], &marked[0],
            &changed[0], &flag[0], &nev, &total, &masked)
    return nev, total, masked


def sample_values(kw, init, seeds, int64_t T, keys, user_mask):
    cdef Ctx c
    cdef _Buffers b = _Buffers(kw.n, kw.k, kw.E)
    state = init.copy()
    views = [state.adopted.reshape(-1), state.pref.reshape(-1), state.wc.reshape(-1),
             state.ws.reshape(-1), state.rc.reshape(-1), state.rs.reshape(-1), state.pact]
    base = [np.ascontiguousarray(a).reshape(-1) for a in init.arrays()]
    fill_ctx(&c, kw, state, b, views[0], views[1], views[2], views[3], views[4], views[5],
             views[6], _flat(kw.s_c, np.float64), _flat(kw.s_s, np.float64),
             _flat(kw.ev_c, np.uint8), _flat(kw.ev_s, np.uint8), kw.pact0, kw.src, kw.dst,
             kw.out_ptr, kw.in_ptr, kw.in_eid, kw.weights, b.stamp, b.ad)
    cdef int64_t[::1] sd = _flat(seeds, np.int64) if len(seeds) else np.zeros(3, dtype=np.int64)
    cdef int64_t nseeds = len(seeds)
    cdef const uint64_t[::1] kv = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef int64_t m = kv.shape[0], i
    out = np.zeros(m)
    out_m = np.zeros(m)
    cdef double[::1] ov = out
    cdef double[::1] omv = out_m
    cdef const uint8_t[::1] mv
    cdef const uint8_t* mp = NULL
    if user_mask is not None:
        mv = _flat(user_mask, np.uint8)
        mp = &mv[0]
    cdef int64_t[::1] newly = b.newly
    cdef int64_t[::1] marked = b.marked
    cdef int64_t[::1] changed = b.changed
    cdef uint8_t[::1] flag = b.flag
    # raw pointers for the per-sample reset
    cdef uint8_t[::1] a0 = base[0]
    cdef double[::1] p0 = base[1]
    cdef double[::1] wc0 = base[2]
    cdef double[::1] ws0 = base[3]
    cdef double[::1] rc0 = base[4]
    cdef double[::1] rs0 = base[5]
    cdef double[::1] pa0 = base[6]
    cdef int64_t nev
    cdef double total, masked
    with nogil:
        for i in range(m):
            if a0.shape[0]:
                memcpy(c.adopted, &a0[0], a0.shape[0])
                memcpy(c.pref, &p0[0], p0.shape[0] * sizeof(double))
                memcpy(c.rc, &rc0[0], rc0.shape[0] * sizeof(double))
                memcpy(c.rs, &rs0[0], rs0.shape[0] * sizeof(double))
            if wc0.shape[0]:
                memcpy(c.wc, &wc0[0], wc0.shape[0] * sizeof(double))
            if ws0.shape[0]:
                memcpy(c.ws, &ws0[0], ws0.shape[0] * sizeof(double))
            if pa0.shape[0]:
                memcpy(c.pact, &pa0[0], pa0.shape[0] * sizeof(double))
            run(&c, &sd[0], nseeds, T, 0, kv[i], NULL, NULL, NULL, mp, &newly[0], &marked[0],
                &changed[0], &flag[0], &nev, &total, &masked)
            ov[i] = total
            omv[i] = masked
    return out, out_m

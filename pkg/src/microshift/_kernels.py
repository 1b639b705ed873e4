"""Compiled per-pixel loops: coding, context statistics, heuristic decode
and the 1-D weighted least squares solves.

Level planes are addressed as ``buf[r % R, c]`` so the same helpers serve
the encoder's ring of recent rows (R = N + 1) and a full decoded image
(R = height).
"""

import numpy as np
from numba import njit

ESCAPE_Q = 24
RESET = 64

# status codes returned by the decoder
OK = 0
TRUNCATED = 1
CORRUPT = 2


@njit(cache=True)
def template(buf, R, r, c, W, N):
    """Causal neighbours A, B, C, D, E with border substitution.

    Must not be called for the first position of a subimage.
    """
    cj = c % N
    wsub = (W - cj + N - 1) // N
    sr = r // N
    sc = c // N
    row = r % R
    if sr == 0:
        a = buf[row, c - N]
        e = buf[row, c - 2 * N] if sc >= 2 else a
        return a, a, a, a, e
    up = (r - N) % R
    b = buf[up, c]
    if sc >= 1:
        a = buf[row, c - N]
        cc = buf[up, c - N]
    else:
        a = b
        cc = b
    d = buf[up, c + N] if sc + 1 < wsub else a
    e = buf[row, c - 2 * N] if sc >= 2 else b
    return a, b, cc, d, e


@njit(cache=True)
def _clamp2(v):
    if v > 2:
        return 2
    if v < -2:
        return -2
    return v


@njit(cache=True)
def context_of(a, b, cc, d, e):
    """(index, sign) of the clamped, sign-folded texture vector."""
    b1 = _clamp2(a - cc)
    b2 = _clamp2(cc - b)
    b3 = _clamp2(d - a)
    b4 = _clamp2(b - e)
    sign = 1
    if b1 < 0 or (b1 == 0 and (b2 < 0 or (b2 == 0 and (b3 < 0 or (b3 == 0 and b4 < 0))))):
        sign = -1
        b1 = -b1
        b2 = -b2
        b3 = -b3
        b4 = -b4
    raw = (((b1 + 2) * 5 + (b2 + 2)) * 5 + (b3 + 2)) * 5 + (b4 + 2)
    return raw - 312, sign


@njit(cache=True)
def intersect_step(lo, w, lo2, w2):
    """One greedy step; returns the old arc when the result would be empty."""
    d = (lo2 - lo) & 255
    if d < w:
        return lo2, min(w2, w - d)
    if d + w2 > 256:
        return lo, min(w, d + w2 - 256)
    return lo, w


@njit(cache=True)
def inter_predict(buf, R, r, c, W, N, t, shifts, delta, obs_dr, obs_dc, obs_n):
    lo = -1
    w = 0
    for m in range(obs_n[t]):
        rr = r + obs_dr[t, m]
        cc = c + obs_dc[t, m]
        if cc < 0 or cc >= W:
            continue
        u = (rr % N) * N + cc % N
        lo2 = (buf[rr % R, cc] * delta - shifts[u]) & 255
        if lo < 0:
            lo = lo2
            w = delta
        else:
            lo, w = intersect_step(lo, w, lo2, delta)
    est = (lo + (w - 1) // 2) & 255
    return ((est + shifts[t]) & 255) // delta


@njit(cache=True)
def map_residue(eps, xhat, M):
    top = (1 << M) - 1
    pos = top - xhat
    neg = xhat
    if eps == 0:
        return 0
    s = min(pos, neg)
    a = abs(eps)
    if a > s:
        return s + a
    positive_first = xhat < (1 << (M - 1))
    if (eps > 0) == positive_first:
        return 2 * a - 1
    return 2 * a


@njit(cache=True)
def unmap_residue(code, xhat, M):
    top = (1 << M) - 1
    pos = top - xhat
    neg = xhat
    s = min(pos, neg)
    if code == 0:
        return 0
    if code > 2 * s:
        a = code - s
        return a if pos > neg else -a
    a = (code + 1) // 2
    positive_first = xhat < (1 << (M - 1))
    if (code & 1) == 1:
        return a if positive_first else -a
    return -a if positive_first else a


@njit(cache=True)
def rice_k(count, acc):
    k = 0
    while (count << k) < acc:
        k += 1
    return k


# ---------------------------------------------------------------- writing

@njit(cache=True)
def put_bits(j, value, n, wacc, wn, out, olen):
    wacc[j] = (wacc[j] << n) | (value & ((1 << n) - 1))
    wn[j] += n
    while wn[j] >= 8:
        wn[j] -= 8
        out[j, olen[j]] = (wacc[j] >> wn[j]) & 255
        olen[j] += 1
    wacc[j] &= (1 << wn[j]) - 1


@njit(cache=True)
def put_rice(j, k, v, escape_bits, wacc, wn, out, olen):
    q = v >> k
    if q >= ESCAPE_Q:
        put_bits(j, (1 << ESCAPE_Q) - 1, ESCAPE_Q, wacc, wn, out, olen)
        put_bits(j, 0, 1, wacc, wn, out, olen)
        put_bits(j, v, escape_bits, wacc, wn, out, olen)
    else:
        put_bits(j, ((1 << q) - 1) << 1, q + 1, wacc, wn, out, olen)
        if k > 0:
            put_bits(j, v, k, wacc, wn, out, olen)


@njit(cache=True)
def _put_adaptive(j, v, escape_bits, cnt, acc, wacc, wn, out, olen):
    k = rice_k(cnt[j], acc[j])
    put_rice(j, k, v, escape_bits, wacc, wn, out, olen)
    acc[j] += v
    cnt[j] += 1
    if cnt[j] >= RESET:
        cnt[j] = (cnt[j] + 1) >> 1
        acc[j] = (acc[j] + 1) >> 1


@njit(cache=True)
def encode_row(vals, r, buf, W, M, N, delta, shifts, table, obs_dr, obs_dc, obs_n,
               cnt, acc, rcnt, racc, run_on, run_len, wacc, wn, out, olen):
    """Quantize one image row into the ring buffer and code its samples."""
    R = buf.shape[0]
    row = r % R
    rp = r % N
    sr = r // N
    for c in range(W):
        t = rp * N + c % N
        lv = ((np.int64(vals[c]) + shifts[t]) & 255) // delta
        buf[row, c] = lv
        sc = c // N
        if sr == 0 and sc == 0:
            if t == 0:
                xhat = 1 << (M - 1)
            else:
                xhat = inter_predict(buf, R, r, c, W, N, t, shifts, delta, obs_dr, obs_dc, obs_n)
            _put_adaptive(t, map_residue(lv - xhat, xhat, M), 8, cnt, acc, wacc, wn, out, olen)
            continue
        last = sc == (W - c % N + N - 1) // N - 1
        a, b, cc, d, e = template(buf, R, r, c, W, N)
        uniform = a == cc and cc == b and d == a and b == e
        if run_on[t] == 1:
            if uniform and lv == b:
                run_len[t] += 1
                if last:
                    _put_adaptive(t, run_len[t], 16, rcnt, racc, wacc, wn, out, olen)
                    run_on[t] = 0
                continue
            _put_adaptive(t, run_len[t], 16, rcnt, racc, wacc, wn, out, olen)
            run_on[t] = 0
        elif uniform:
            if lv == b:
                run_on[t] = 1
                run_len[t] = 1
                if last:
                    _put_adaptive(t, 1, 16, rcnt, racc, wacc, wn, out, olen)
                    run_on[t] = 0
                continue
            _put_adaptive(t, 0, 16, rcnt, racc, wacc, wn, out, olen)
        if t == 0:
            idx, sign = context_of(a, b, cc, d, e)
            xhat = min((1 << M) - 1, max(0, b + sign * table[idx]))
        else:
            xhat = inter_predict(buf, R, r, c, W, N, t, shifts, delta, obs_dr, obs_dc, obs_n)
        _put_adaptive(t, map_residue(lv - xhat, xhat, M), 8, cnt, acc, wacc, wn, out, olen)


# ---------------------------------------------------------------- reading

@njit(cache=True)
def get_bit(data, rd):
    pos = rd[0]
    if (pos >> 3) >= data.shape[0]:
        rd[1] = TRUNCATED
        return 0
    rd[0] = pos + 1
    return (data[pos >> 3] >> (7 - (pos & 7))) & 1


@njit(cache=True)
def get_bits(data, rd, n):
    v = 0
    for _ in range(n):
        v = (v << 1) | get_bit(data, rd)
    return v


@njit(cache=True)
def get_rice(data, rd, k, escape_bits):
    q = 0
    while get_bit(data, rd) == 1:
        q += 1
        if q == ESCAPE_Q:
            if get_bit(data, rd) == 1:
                rd[1] = CORRUPT
                return 0
            return get_bits(data, rd, escape_bits)
    if rd[1] != OK:
        return 0
    return (q << k) | get_bits(data, rd, k)


@njit(cache=True)
def _get_adaptive(data, rd, escape_bits, st):
    k = rice_k(st[0], st[1])
    v = get_rice(data, rd, k, escape_bits)
    st[1] += v
    st[0] += 1
    if st[0] >= RESET:
        st[0] = (st[0] + 1) >> 1
        st[1] = (st[1] + 1) >> 1
    return v


@njit(cache=True)
def decode_stream(data, levels, t, M, N, delta, shifts, table, obs_dr, obs_dc, obs_n):
    """Decode subimage t (0-based) into ``levels``; returns a status code.

    Subimages 0..t-1 must already be present in ``levels``.
    """
    H, W = levels.shape
    ri = t // N
    ci = t % N
    top = (1 << M) - 1
    rd = np.zeros(2, dtype=np.int64)
    reg = np.array([1, 0], dtype=np.int64)
    run = np.array([1, 0], dtype=np.int64)
    wsub = (W - ci + N - 1) // N
    for r in range(ri, H, N):
        sr = r // N
        run_left = 0
        forced = False
        for sc in range(wsub):
            c = sc * N + ci
            if sr == 0 and sc == 0:
                if t == 0:
                    xhat = 1 << (M - 1)
                else:
                    xhat = inter_predict(levels, H, r, c, W, N, t, shifts, delta, obs_dr, obs_dc, obs_n)
                code = _get_adaptive(data, rd, 8, reg)
                if rd[1] != OK:
                    return rd[1]
                if code > top:
                    return CORRUPT
                levels[r, c] = xhat + unmap_residue(code, xhat, M)
                continue
            last = sc == wsub - 1
            a, b, cc, d, e = template(levels, H, r, c, W, N)
            if run_left > 0:
                levels[r, c] = b
                run_left -= 1
                if run_left == 0 and not last:
                    forced = True
                continue
            if not forced and a == cc and cc == b and d == a and b == e:
                length = _get_adaptive(data, rd, 16, run)
                if rd[1] != OK:
                    return rd[1]
                if length > wsub - sc:
                    return CORRUPT
                if length > 0:
                    levels[r, c] = b
                    run_left = length - 1
                    if run_left == 0 and not last:
                        forced = True
                    continue
            forced = False
            if t == 0:
                idx, sign = context_of(a, b, cc, d, e)
                xhat = min(top, max(0, b + sign * table[idx]))
            else:
                xhat = inter_predict(levels, H, r, c, W, N, t, shifts, delta, obs_dr, obs_dc, obs_n)
            code = _get_adaptive(data, rd, 8, reg)
            if rd[1] != OK:
                return rd[1]
            if code > top:
                return CORRUPT
            levels[r, c] = xhat + unmap_residue(code, xhat, M)
    return OK


# ---------------------------------------------------------------- statistics

@njit(cache=True)
def accumulate_histogram(sub, hist, lim):
    """Histogram of sign*(X - B) per context over one subimage."""
    H, W = sub.shape
    for r in range(H):
        for c in range(W):
            if r == 0 and c == 0:
                continue
            a, b, cc, d, e = template(sub, H, r, c, W, 1)
            idx, sign = context_of(a, b, cc, d, e)
            hist[idx, sign * (sub[r, c] - b) + lim] += 1


@njit(cache=True)
def intra_codes(sub, table, M, med):
    """Mapped residues of a subimage under the learned table or MED."""
    H, W = sub.shape
    out = np.empty(H * W, dtype=np.int64)
    top = (1 << M) - 1
    n = 0
    for r in range(H):
        for c in range(W):
            x = sub[r, c]
            if r == 0 and c == 0:
                xhat = 1 << (M - 1)
            else:
                a, b, cc, d, e = template(sub, H, r, c, W, 1)
                if med:
                    if cc >= max(a, b):
                        xhat = min(a, b)
                    elif cc <= min(a, b):
                        xhat = max(a, b)
                    else:
                        xhat = a + b - cc
                else:
                    idx, sign = context_of(a, b, cc, d, e)
                    xhat = min(top, max(0, b + sign * table[idx]))
            out[n] = map_residue(x - xhat, xhat, M)
            n += 1
    return out


# ---------------------------------------------------------------- decoding

@njit(cache=True)
def heuristic_plane(levels, present, N, delta, shifts):
    """Heuristic estimate of every present pixel from its N x N window.

    The window is centred on the pixel and slid inward at the borders so it
    always covers a full period of the shift pattern.
    """
    H, W = levels.shape
    out = np.zeros((H, W), dtype=np.uint8)
    nn = N * N
    keys = np.empty(nn, dtype=np.int64)
    los = np.empty(nn, dtype=np.int64)
    half = (N - 1) // 2
    for r in range(H):
        r0 = min(max(r - half, 0), max(H - N, 0))
        r1 = min(r0 + N, H)
        for c in range(W):
            if not present[r, c]:
                continue
            c0 = min(max(c - half, 0), max(W - N, 0))
            c1 = min(c0 + N, W)
            m = 0
            for rr in range(r0, r1):
                for cc in range(c0, c1):
                    if not present[rr, cc]:
                        continue
                    d2 = (rr - r) * (rr - r) + (cc - c) * (cc - c)
                    key = (d2 * N + (rr - r0)) * N + (cc - c0)
                    lo = (levels[rr, cc] * delta - shifts[(rr % N) * N + cc % N]) & 255
                    # insertion sort by key
                    i = m
                    while i > 0 and keys[i - 1] > key:
                        keys[i] = keys[i - 1]
                        los[i] = los[i - 1]
                        i -= 1
                    keys[i] = key
                    los[i] = lo
                    m += 1
            lo = los[0]
            w = delta
            for i in range(1, m):
                lo, w = intersect_step(lo, w, los[i], delta)
            out[r, c] = (lo + (w - 1) // 2) & 255
    return out


@njit(cache=True)
def wls_pass(u, g, lam, sigma, axis):
    """Solve (I + lam * L_g) x = u along every row (axis=1) or column (axis=0)
    in place, with L_g the weighted path Laplacian from guide g."""
    H, W = u.shape
    n = W if axis == 1 else H
    lines = H if axis == 1 else W
    cp = np.empty(n)
    dp = np.empty(n)
    wt = np.empty(n)
    for ln in range(lines):
        for i in range(n - 1):
            if axis == 1:
                diff = g[ln, i + 1] - g[ln, i]
            else:
                diff = g[i + 1, ln] - g[i, ln]
            wt[i] = lam * np.exp(-abs(diff) / sigma)
        # forward sweep
        for i in range(n):
            a = wt[i - 1] if i > 0 else 0.0
            cc = wt[i] if i < n - 1 else 0.0
            b = 1.0 + a + cc
            f = u[ln, i] if axis == 1 else u[i, ln]
            if i == 0:
                cp[i] = -cc / b
                dp[i] = f / b
            else:
                den = b + a * cp[i - 1]
                cp[i] = -cc / den
                dp[i] = (f + a * dp[i - 1]) / den
        x = dp[n - 1]
        if axis == 1:
            u[ln, n - 1] = x
        else:
            u[n - 1, ln] = x
        for i in range(n - 2, -1, -1):
            x = dp[i] - cp[i] * x
            if axis == 1:
                u[ln, i] = x
            else:
                u[i, ln] = x

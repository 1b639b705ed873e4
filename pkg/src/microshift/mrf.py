"""MAP reconstruction over an 8-connected MRF.

Energy = sum of per-pixel data costs + gamma * sum over neighbouring pairs of
w_pq * |x_p - x_q|.  The data cost is the negative log probability that a
Gaussian-perturbed intensity falls in the observed quantization cell, with
the modulo wrap resolved by taking the representative nearest the cell.
Minimized by alpha-expansion, one binary graph cut per label.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import erfc

from .fast import progressive_init
from .maxflow import bk_maxflow

COST_CAP = 50.0
# forward neighbour offsets; each undirected edge is stored once
DIRS = ((0, 1), (1, 0), (1, 1), (1, -1))


@dataclass(frozen=True)
class MrfParams:
    sigma: float = 5.0
    gamma: float = 0.015
    t_sim: float = None  # defaults to the quantization step
    alpha_nu: float = 0.25
    max_sweeps: int = 4
    label_margin: int = None  # defaults to the quantization step

    def __post_init__(self):
        if self.sigma <= 0 or self.gamma < 0 or self.alpha_nu <= 0:
            raise ValueError("need sigma > 0, gamma >= 0, alpha_nu > 0")
        if self.t_sim is not None and self.t_sim <= 0:
            raise ValueError("t_sim must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")

    def resolved(self, delta):
        return (delta if self.t_sim is None else self.t_sim,
                delta if self.label_margin is None else self.label_margin)


def _log_cell_prob(lo, hi, s, sigma):
    """log P(lo <= s + n < hi) for n ~ N(0, sigma^2), tail-stable."""
    k = 1.0 / (math.sqrt(2.0) * sigma)
    a = (lo - s) * k
    b = (hi - s) * k
    if a >= 0:
        diff = erfc(a) - erfc(b)
    elif b <= 0:
        diff = erfc(-b) - erfc(-a)
    else:
        diff = 2.0 - erfc(b) - erfc(-a)
    if diff <= 0:
        return -math.inf
    return math.log(0.5 * diff)


def representative(x, shift, level, delta):
    """(x + shift) mod 256, unwrapped to the copy nearest the cell centre."""
    centre = level * delta + delta / 2.0
    s = (x + shift) % 256
    return min((s - 256, s, s + 256), key=lambda v: abs(v - centre))


def data_cost(x, level, shift, delta, p=MrfParams()):
    x, level, shift, delta = int(x), int(level), int(shift), int(delta)
    s = representative(x, shift, level, delta)
    lp = _log_cell_prob(level * delta, level * delta + delta, s, p.sigma)
    # density of the cell, i.e. probability divided by its width
    return min(COST_CAP, -(lp - math.log(delta)))


def cost_table(params, p=MrfParams()):
    """Data costs indexed [level * N^2 + t, x], plus a final all-zero row for
    pixels that were not received."""
    nn = params.n_sub
    out = np.zeros((params.levels * nn + 1, 256))
    for z in range(params.levels):
        for t in range(nn):
            row = out[z * nn + t]
            for x in range(256):
                row[x] = data_cost(x, z, params.shifts[t], params.delta, p)
    return out


def edge_weight(pos_p, pos_q, obs_p, obs_q, params, p=MrfParams()):
    """lambda * mu * nu for neighbouring positions.

    ``obs_p``/``obs_q`` are (level, shift) or None for a pixel that was not
    received; the intensity similarity test is waived for such pixels.
    """
    dr = pos_p[0] - pos_q[0]
    dc = pos_p[1] - pos_q[1]
    if max(abs(dr), abs(dc)) != 1:
        raise ValueError("positions are not 8-neighbours")
    t_sim, _ = p.resolved(params.delta)
    lam = 1.0 / math.hypot(dr, dc)
    sp = params.shifts[(pos_p[0] % params.N) * params.N + pos_p[1] % params.N]
    sq = params.shifts[(pos_q[0] % params.N) * params.N + pos_q[1] % params.N]
    mu = 1.0
    if obs_p is not None and obs_q is not None:
        d = (obs_p[0] * params.delta - obs_p[1] - obs_q[0] * params.delta + obs_q[1]) % 256
        mu = 1.0 if min(d, 256 - d) < t_sim else 0.0
    nu = 1.0 / (1.0 + math.exp(-p.alpha_nu * abs(sp - sq)))
    return lam * mu * nu


@dataclass
class MrfModel:
    """Everything alpha-expansion needs.

    costs:   (n_codes, L) data cost rows
    code:    (H, W) row of ``costs`` used by each pixel
    weights: (4, H, W) edge weights towards DIRS[d]; 0 where the edge leaves
             the image
    gamma:   smoothness multiplier applied on top of ``weights``
    cand_lo, cand_w: per pixel circular label window {lo, ..., lo + w - 1}
    """

    costs: np.ndarray
    code: np.ndarray
    weights: np.ndarray
    gamma: float
    cand_lo: np.ndarray
    cand_w: np.ndarray

    @property
    def n_labels(self):
        return self.costs.shape[1]

    @property
    def shape(self):
        return self.code.shape


def grid_weights(shape, fn):
    """(4, H, W) array with fn(r, c, rr, cc) for each in-image forward edge."""
    H, W = shape
    w = np.zeros((4, H, W))
    for d, (dr, dc) in enumerate(DIRS):
        for r in range(H):
            for c in range(W):
                rr, cc = r + dr, c + dc
                if 0 <= rr < H and 0 <= cc < W:
                    w[d, r, c] = fn(r, c, rr, cc)
    return w


def build_model(q, p=MrfParams(), gamma=None, costs=None):
    params = q.params
    H, W = q.levels.shape
    nn = params.n_sub
    delta = params.delta
    t_sim, margin = p.resolved(delta)
    present = q.present()
    shift = params.shift_map(H, W)
    lev = q.levels.astype(np.int64)
    costs = cost_table(params, p) if costs is None else costs
    t = (np.arange(H)[:, None] % params.N) * params.N + np.arange(W)[None, :] % params.N
    code = np.where(present, lev * nn + t, params.levels * nn)
    lo = (lev * delta - shift) % 256
    weights = np.zeros((4, H, W))
    for d, (dr, dc) in enumerate(DIRS):
        r0, r1 = 0, H - dr
        c0, c1 = max(0, -dc), W - max(0, dc)
        sl_p = (slice(r0, r1), slice(c0, c1))
        sl_q = (slice(r0 + dr, r1 + dr), slice(c0 + dc, c1 + dc))
        diff = (lo[sl_p] - lo[sl_q]) % 256
        mu = np.minimum(diff, 256 - diff) < t_sim
        mu |= ~(present[sl_p] & present[sl_q])
        nu = 1.0 / (1.0 + np.exp(-p.alpha_nu * np.abs(shift[sl_p] - shift[sl_q])))
        weights[d][sl_p] = mu * nu / math.hypot(dr, dc)
    cand_w = np.where(present, min(256, delta + 2 * margin), 256)
    cand_lo = np.where(present, (lo - margin) % 256, 0)
    g = p.gamma if gamma is None else gamma
    return MrfModel(costs, code.astype(np.int64), weights, float(g),
                    cand_lo.astype(np.int64), cand_w.astype(np.int64))


@njit(cache=True)
def _energy(labels, code, costs, weights, gamma):
    H, W = labels.shape
    e = 0.0
    for r in range(H):
        for c in range(W):
            x = labels[r, c]
            e += costs[code[r, c], x]
            for d in range(4):
                w = weights[d, r, c]
                if w == 0.0:
                    continue
                rr = r + (0 if d == 0 else 1)
                cc = c + (1 if d == 0 or d == 2 else (0 if d == 1 else -1))
                e += gamma * w * abs(x - labels[rr, cc])
    return e


def total_energy(labels, model):
    labels = np.asarray(labels, dtype=np.int64)
    return _energy(labels, model.code, model.costs, model.weights, model.gamma)


@njit(cache=True)
def _expand(labels, alpha, code, costs, weights, gamma, cand_lo, cand_w, L, tol):
    """Best alpha-expansion move; applied in place when it lowers the energy
    by more than ``tol``.  Returns the energy change of the optimal move."""
    H, W = labels.shape
    nid = np.full((H, W), -1, dtype=np.int64)
    n = 0
    for r in range(H):
        for c in range(W):
            if labels[r, c] != alpha and (alpha - cand_lo[r, c]) % L < cand_w[r, c]:
                nid[r, c] = n
                n += 1
    if n == 0:
        return 0.0
    tr = np.zeros(n)
    first = np.full(n, -1, dtype=np.int64)
    head = np.empty(8 * n, dtype=np.int64)
    nxt = np.empty(8 * n, dtype=np.int64)
    rcap = np.empty(8 * n)
    m = 0
    for r in range(H):
        for c in range(W):
            i = nid[r, c]
            xp = labels[r, c]
            if i >= 0:
                tr[i] += costs[code[r, c], alpha] - costs[code[r, c], xp]
            for d in range(4):
                w = weights[d, r, c]
                if w == 0.0:
                    continue
                rr = r + (0 if d == 0 else 1)
                cc = c + (1 if d == 0 or d == 2 else (0 if d == 1 else -1))
                j = nid[rr, cc]
                if i < 0 and j < 0:
                    continue
                w *= gamma
                xq = labels[rr, cc]
                A = w * abs(xp - xq)
                if i >= 0 and j >= 0:
                    B = w * abs(xp - alpha)
                    C = w * abs(alpha - xq)
                    tr[i] += C - A
                    tr[j] -= C
                    cap = B + C - A
                    if cap > 0:
                        head[m] = j
                        rcap[m] = cap
                        nxt[m] = first[i]
                        first[i] = m
                        head[m + 1] = i
                        rcap[m + 1] = 0.0
                        nxt[m + 1] = first[j]
                        first[j] = m + 1
                        m += 2
                elif i >= 0:
                    tr[i] += w * abs(alpha - xq) - A
                else:
                    tr[j] += w * abs(xp - alpha) - A
    neg = 0.0
    for i in range(n):
        if tr[i] < 0:
            neg += tr[i]
    flow, take = bk_maxflow(first, nxt[:m], head[:m], rcap[:m], tr)
    change = flow + neg
    if change < -tol:
        for r in range(H):
            for c in range(W):
                i = nid[r, c]
                if i >= 0 and take[i]:
                    labels[r, c] = alpha
    return change


def alpha_expansion(init, model, p=MrfParams(), alphas=None, check=False, trace=None):
    """Sweep expansion moves until a sweep changes nothing or ``max_sweeps``
    sweeps have run.  ``check`` recomputes the energy after every accepted
    move and raises if it went up; ``trace`` (a list) collects the energy
    after each accepted move."""
    labels = np.array(init, dtype=np.int64)
    L = model.n_labels
    if labels.shape != model.shape or labels.min() < 0 or labels.max() >= L:
        raise ValueError("initial labelling does not fit the model")
    alphas = range(L) if alphas is None else alphas
    energy = total_energy(labels, model)
    tol = 1e-9 * max(1.0, abs(energy))
    for _ in range(p.max_sweeps):
        moved = False
        for alpha in alphas:
            change = _expand(labels, int(alpha), model.code, model.costs, model.weights,
                             model.gamma, model.cand_lo, model.cand_w, L, tol)
            if change < -tol:
                moved = True
                if check or trace is not None:
                    new = total_energy(labels, model)
                    if check and new > energy + tol:
                        raise AssertionError(f"energy rose from {energy} to {new}")
                    energy = new
                    if trace is not None:
                        trace.append(new)
        if not moved:
            break
    return labels


def mrf_decode(q, p=MrfParams(), received=None):
    """MAP estimate from the subimages present in ``q``."""
    nn = q.params.n_sub
    if received is None:
        received = nn if q.mask is None else int(
            q.params.subimage_map(*q.levels.shape)[q.mask].max())
    if not 1 <= received <= nn:
        raise ValueError(f"received count must be in 1..{nn}")
    model = build_model(q, p, gamma=p.gamma * received / nn)
    init = np.clip(np.rint(progressive_init(q)), 0, 255).astype(np.int64)
    return alpha_expansion(init, model, p).astype(np.uint8)

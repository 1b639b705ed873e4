"""Augmenting-path max-flow with reused search trees (Boykov-Kolmogorov).

Graphs are stored as arc arrays: arc ``a`` runs to ``head[a]``, its reverse
is ``a ^ 1``, and ``first``/``nxt`` chain the arcs leaving each node.
Terminal links are folded into one signed capacity per node: positive means
an edge from the source, negative an edge to the sink.
"""

import numpy as np
from numba import njit

NONE = -1
TERMINAL = -2
ORPHAN = -3
INF_D = 1 << 60


@njit(cache=True)
def _push(v, queue, inq, qt, size):
    if not inq[v]:
        inq[v] = True
        queue[qt] = v
        qt = (qt + 1) % size
    return qt


@njit(cache=True)
def bk_maxflow(first, nxt, head, rcap, tr):
    """Run to completion, modifying ``rcap`` and ``tr`` into residuals.

    Returns (flow, sink_side) where sink_side marks nodes not reachable from
    the source in the residual graph.
    """
    n = first.shape[0]
    parent = np.full(n, NONE, dtype=np.int64)
    is_sink = np.zeros(n, dtype=np.bool_)
    ts = np.zeros(n, dtype=np.int64)
    dist = np.zeros(n, dtype=np.int64)
    size = n + 1
    queue = np.empty(size, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    qh = 0
    qt = 0
    orphans = np.empty(n, dtype=np.int64)
    no = 0
    for i in range(n):
        if tr[i] > 0:
            parent[i] = TERMINAL
            dist[i] = 1
            qt = _push(i, queue, inq, qt, size)
        elif tr[i] < 0:
            parent[i] = TERMINAL
            is_sink[i] = True
            dist[i] = 1
            qt = _push(i, queue, inq, qt, size)
    flow = 0.0
    time = 0
    cur = -1
    while True:
        if cur >= 0 and parent[cur] != NONE:
            i = cur
        else:
            i = -1
            while qh != qt:
                v = queue[qh]
                qh = (qh + 1) % size
                inq[v] = False
                if parent[v] != NONE:
                    i = v
                    break
            if i < 0:
                break
        # grow the tree of i until it touches the other tree
        mid = -1
        a = first[i]
        if not is_sink[i]:
            while a >= 0:
                if rcap[a] > 0:
                    j = head[a]
                    if parent[j] == NONE:
                        is_sink[j] = False
                        parent[j] = a ^ 1
                        ts[j] = ts[i]
                        dist[j] = dist[i] + 1
                        qt = _push(j, queue, inq, qt, size)
                    elif is_sink[j]:
                        mid = a
                        break
                    elif ts[j] <= ts[i] and dist[j] > dist[i]:
                        parent[j] = a ^ 1
                        ts[j] = ts[i]
                        dist[j] = dist[i] + 1
                a = nxt[a]
        else:
            while a >= 0:
                if rcap[a ^ 1] > 0:
                    j = head[a]
                    if parent[j] == NONE:
                        is_sink[j] = True
                        parent[j] = a ^ 1
                        ts[j] = ts[i]
                        dist[j] = dist[i] + 1
                        qt = _push(j, queue, inq, qt, size)
                    elif not is_sink[j]:
                        mid = a ^ 1
                        break
                    elif ts[j] <= ts[i] and dist[j] > dist[i]:
                        parent[j] = a ^ 1
                        ts[j] = ts[i]
                        dist[j] = dist[i] + 1
                a = nxt[a]
        time += 1
        if mid < 0:
            cur = -1
            continue
        cur = i

        # bottleneck along source path, middle arc and sink path
        b = rcap[mid]
        v = head[mid ^ 1]
        while parent[v] != TERMINAL:
            e = parent[v]
            b = min(b, rcap[e ^ 1])
            v = head[e]
        b = min(b, tr[v])
        v = head[mid]
        while parent[v] != TERMINAL:
            e = parent[v]
            b = min(b, rcap[e])
            v = head[e]
        b = min(b, -tr[v])

        rcap[mid ^ 1] += b
        rcap[mid] -= b
        v = head[mid ^ 1]
        while parent[v] != TERMINAL:
            e = parent[v]
            rcap[e] += b
            rcap[e ^ 1] -= b
            if rcap[e ^ 1] <= 0:
                parent[v] = ORPHAN
                orphans[no] = v
                no += 1
            v = head[e]
        tr[v] -= b
        if tr[v] <= 0:
            parent[v] = ORPHAN
            orphans[no] = v
            no += 1
        v = head[mid]
        while parent[v] != TERMINAL:
            e = parent[v]
            rcap[e ^ 1] += b
            rcap[e] -= b
            if rcap[e] <= 0:
                parent[v] = ORPHAN
                orphans[no] = v
                no += 1
            v = head[e]
        tr[v] += b
        if tr[v] >= 0:
            parent[v] = ORPHAN
            orphans[no] = v
            no += 1
        flow += b

        # adopt orphans
        while no > 0:
            no -= 1
            v = orphans[no]
            sink_tree = is_sink[v]
            d_min = INF_D
            a_min = -1
            a0 = first[v]
            while a0 >= 0:
                ok = rcap[a0] > 0 if sink_tree else rcap[a0 ^ 1] > 0
                j = head[a0]
                if ok and is_sink[j] == sink_tree and parent[j] != NONE:
                    d = 0
                    jj = j
                    while True:
                        if ts[jj] == time:
                            d += dist[jj]
                            break
                        e = parent[jj]
                        d += 1
                        if e == TERMINAL:
                            ts[jj] = time
                            dist[jj] = 1
                            break
                        if e == ORPHAN:
                            d = INF_D
                            break
                        jj = head[e]
                    if d < INF_D:
                        if d < d_min:
                            a_min = a0
                            d_min = d
                        jj = j
                        while ts[jj] != time:
                            ts[jj] = time
                            dist[jj] = d
                            d -= 1
                            jj = head[parent[jj]]
                a0 = nxt[a0]
            if a_min >= 0:
                parent[v] = a_min
                ts[v] = time
                dist[v] = d_min + 1
                continue
            a0 = first[v]
            while a0 >= 0:
                j = head[a0]
                if is_sink[j] == sink_tree and parent[j] != NONE:
                    ok = rcap[a0] > 0 if sink_tree else rcap[a0 ^ 1] > 0
                    if ok:
                        qt = _push(j, queue, inq, qt, size)
                    e = parent[j]
                    if e != TERMINAL and e != ORPHAN and head[e] == v:
                        parent[j] = ORPHAN
                        orphans[no] = j
                        no += 1
                a0 = nxt[a0]
            parent[v] = NONE

    sink_side = np.ones(n, dtype=np.bool_)
    for i in range(n):
        if parent[i] != NONE and not is_sink[i]:
            sink_side[i] = False
    return flow, sink_side


class FlowGraph:
    """Small builder around :func:`bk_maxflow` for ad hoc graphs."""

    def __init__(self, n):
        self.n = n
        self.cap_source = np.zeros(n)
        self.cap_sink = np.zeros(n)
        self._arcs = []

    def add_tweights(self, i, cap_source, cap_sink):
        if cap_source < 0 or cap_sink < 0:
            raise ValueError("negative capacity")
        self.cap_source[i] += cap_source
        self.cap_sink[i] += cap_sink

    def add_edge(self, u, v, cap, rev_cap=0.0):
        if cap < 0 or rev_cap < 0:
            raise ValueError("negative capacity")
        if u != v:
            self._arcs.append((u, v, cap, rev_cap))

    def maxflow(self):
        m = len(self._arcs)
        head = np.empty(2 * m, dtype=np.int64)
        rcap = np.empty(2 * m)
        nxt = np.empty(2 * m, dtype=np.int64)
        first = np.full(self.n, -1, dtype=np.int64)
        for k, (u, v, c, rc) in enumerate(self._arcs):
            for a, src, dst, cap in ((2 * k, u, v, c), (2 * k + 1, v, u, rc)):
                head[a] = dst
                rcap[a] = cap
                nxt[a] = first[src]
                first[src] = a
        # flow that can go straight source -> i -> sink is settled up front
        const = float(np.minimum(self.cap_source, self.cap_sink).sum())
        tr = self.cap_source - self.cap_sink
        flow, sink_side = bk_maxflow(first, nxt, head, rcap, tr)
        return const + flow, sink_side


def max_flow(n_nodes, edges, source, sink):
    """Maximum s-t flow on a directed graph given as (u, v, capacity) triples.

    Returns (flow value, source_side) with ``source_side`` a boolean array
    marking the source side of a minimum cut.
    """
    if source == sink:
        raise ValueError("source and sink coincide")
    inner = [v for v in range(n_nodes) if v not in (source, sink)]
    index = {v: k for k, v in enumerate(inner)}
    g = FlowGraph(len(inner))
    direct = 0.0
    for u, v, cap in edges:
        if cap < 0:
            raise ValueError("negative capacity")
        if u == v or u == sink or v == source:
            continue
        if u == source and v == sink:
            direct += cap
        elif u == source:
            g.add_tweights(index[v], cap, 0.0)
        elif v == sink:
            g.add_tweights(index[u], 0.0, cap)
        else:
            g.add_edge(index[u], index[v], cap)
    flow, sink_side = g.maxflow() if inner else (0.0, np.zeros(0, dtype=bool))
    side = np.zeros(n_nodes, dtype=bool)
    side[source] = True
    for v, k in index.items():
        side[v] = not sink_side[k]
    return flow + direct, side

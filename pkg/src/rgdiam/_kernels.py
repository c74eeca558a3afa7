"""Compiled BFS kernels over CSR arrays.

Distances are int32 with -1 for "not reached".  Scratch arrays passed in
must be all -1 / all 0 on entry and are restored before returning, so one
allocation serves any number of searches.
"""

from __future__ import annotations

import numpy as np
from numba import njit

WORD = 64


@njit(cache=True)
def bfs(indptr, indices, src, dist, queue):
    """Plain BFS from ``src``.  Leaves ``dist`` filled for the visited
    vertices, which are ``queue[:count]`` in visiting order.

    Returns ``(count, ecc, far)`` with ``far`` the lowest-id vertex at
    distance ``ecc``.
    """
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v] + 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dv
                queue[tail] = w
                tail += 1
    ecc = dist[queue[tail - 1]]
    far = queue[tail - 1]
    i = tail - 1
    while i >= 0 and dist[queue[i]] == ecc:
        if queue[i] < far:
            far = queue[i]
        i -= 1
    return tail, ecc, far


@njit(cache=True)
def reset(dist, queue, count):
    for i in range(count):
        dist[queue[i]] = -1


@njit(cache=True)
def bfs_limited(indptr, indices, src, radius, dist, queue):
    """BFS from ``src`` that does not expand past distance ``radius``."""
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        if dist[v] >= radius:
            continue
        dv = dist[v] + 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dv
                queue[tail] = w
                tail += 1
    return tail


@njit(cache=True)
def sphere_sizes(indptr, indices, sources, radius, dist, queue):
    """``out[i, t]`` = number of vertices at distance exactly ``t`` from
    ``sources[i]``, for ``t <= radius``."""
    out = np.zeros((sources.shape[0], radius + 1), dtype=np.int64)
    for i in range(sources.shape[0]):
        cnt = bfs_limited(indptr, indices, sources[i], radius, dist, queue)
        for j in range(cnt):
            out[i, dist[queue[j]]] += 1
        reset(dist, queue, cnt)
    return out


@njit(cache=True)
def midpoint(indptr, indices, dist, b):
    """Vertex halfway along a shortest path to ``b`` from the source whose
    BFS distances are in ``dist``; steps go to the lowest-id parent."""
    d = dist[b]
    v = b
    for _ in range(d - d // 2):
        best = -1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] == dist[v] - 1 and (best < 0 or w < best):
                best = w
        v = best
    return v


@njit(cache=True)
def multi_ecc(indptr, indices, sources, ns, seen, bufa, bufb, front, front2,
              levelmask, touch):
    """Eccentricities of up to ``64 * W`` sources by one bit-parallel BFS.

    ``seen``, ``bufa`` and ``bufb`` are ``(n, W)`` uint64 arrays, zero on
    entry and on return; bit ``b`` of row ``v`` stands for "``v`` reached
    from ``sources[b]``".  Small frontiers are expanded top-down; once the
    frontier's arc count is a sizeable fraction of the graph every
    unsaturated vertex pulls bits from its neighbours instead.
    """
    n = indptr.shape[0] - 1
    nw = (ns + 63) // 64
    m2 = indices.shape[0]
    full = np.zeros(nw, dtype=np.uint64)
    for b in range(ns):
        full[b // 64] |= np.uint64(1) << np.uint64(b % 64)
    miss = np.zeros(nw, dtype=np.uint64)
    acc = np.zeros(nw, dtype=np.uint64)
    cur = bufa
    nxt = bufb
    nf = 0
    ntouch = 0
    farcs = 0
    for b in range(ns):
        s = sources[b]
        fresh = True
        for q in range(nw):
            if seen[s, q] != 0:
                fresh = False
        if fresh:
            front[nf] = s
            nf += 1
            touch[ntouch] = s
            ntouch += 1
            farcs += indptr[s + 1] - indptr[s]
        bit = np.uint64(1) << np.uint64(b % 64)
        cur[s, b // 64] |= bit
        seen[s, b // 64] |= bit
    level = 0
    dense = False
    while nf > 0:
        level += 1
        for q in range(nw):
            levelmask[level, q] = 0
        nn = 0
        nfarcs = 0
        if not dense and farcs * 4 < m2:
            for i in range(nf):
                v = front[i]
                for k in range(indptr[v], indptr[v + 1]):
                    w = indices[k]
                    anynew = False
                    untouched = True
                    first = True
                    for q in range(nw):
                        if cur[v, q] & ~seen[w, q]:
                            anynew = True
                        if seen[w, q]:
                            untouched = False
                        if nxt[w, q]:
                            first = False
                    if not anynew:
                        continue
                    if untouched:
                        touch[ntouch] = w
                        ntouch += 1
                    if first:
                        front2[nn] = w
                        nn += 1
                        nfarcs += indptr[w + 1] - indptr[w]
                    for q in range(nw):
                        new = cur[v, q] & ~seen[w, q]
                        nxt[w, q] |= new
                        seen[w, q] |= new
                        levelmask[level, q] |= new
            for i in range(nf):
                v = front[i]
                for q in range(nw):
                    cur[v, q] = 0
        else:
            dense = True
            for v in range(n):
                need = False
                for q in range(nw):
                    miss[q] = full[q] & ~seen[v, q]
                    acc[q] = 0
                    if miss[q]:
                        need = True
                if not need:
                    continue
                for k in range(indptr[v], indptr[v + 1]):
                    w = indices[k]
                    done = True
                    for q in range(nw):
                        acc[q] |= cur[w, q]
                        if (acc[q] & miss[q]) != miss[q]:
                            done = False
                    if done:
                        break
                got = False
                for q in range(nw):
                    new = acc[q] & miss[q]
                    if new:
                        nxt[v, q] = new
                        seen[v, q] |= new
                        levelmask[level, q] |= new
                        got = True
                if got:
                    front2[nn] = v
                    nn += 1
            for v in range(n):
                for q in range(nw):
                    cur[v, q] = 0
        tmp = cur
        cur = nxt
        nxt = tmp
        for i in range(nn):
            front[i] = front2[i]
        nf = nn
        farcs = nfarcs
    ecc = np.zeros(ns, dtype=np.int32)
    for lv in range(1, level + 1):
        for b in range(ns):
            if (levelmask[lv, b // 64] >> np.uint64(b % 64)) & np.uint64(1):
                ecc[b] = lv
    if dense:
        for v in range(n):
            for q in range(nw):
                seen[v, q] = 0
                cur[v, q] = 0
    else:
        for i in range(ntouch):
            v = touch[i]
            for q in range(nw):
                seen[v, q] = 0
                cur[v, q] = 0
    return ecc


@njit(cache=True)
def _all_bfs_component(indptr, indices, verts, dist, queue):
    best = 0
    wa = verts[0]
    wb = verts[0]
    for i in range(verts.shape[0]):
        cnt, ecc, far = bfs(indptr, indices, verts[i], dist, queue)
        reset(dist, queue, cnt)
        if ecc > best:
            best = ecc
            wa = verts[i]
            wb = far
    return best, wa, wb, verts.shape[0]


@njit(cache=True)
def _certify(indptr, indices, s, ecc_s, lb, ecc_up, dist, queue):
    """Tighten eccentricity upper bounds around ``s`` using
    ecc(w) <= ecc(s) + d(s, w), out to the radius where that stops helping."""
    if ecc_s < ecc_up[s]:
        ecc_up[s] = ecc_s
    radius = lb - ecc_s
    if radius <= 0:
        return
    cnt = bfs_limited(indptr, indices, s, radius, dist, queue)
    for j in range(cnt):
        w = queue[j]
        bound = ecc_s + dist[w]
        if bound < ecc_up[w]:
            ecc_up[w] = bound
    reset(dist, queue, cnt)


@njit(cache=True)
def _ifub_component(indptr, indices, verts, dist, queue, ecc_up, seen, cur, nxt,
                    front, front2, touch, pending, done_v, srcbuf, tight):
    """Exact diameter of the connected component ``verts``.

    Four-sweep start, then a descending scan of the BFS levels of the
    four-sweep centre.  Before handling level ``i`` the scan stops if the
    best eccentricity found is at least ``2 i``: every remaining pair lies
    within distance ``2 i`` through the centre.  Vertices whose
    eccentricity upper bound already fits under the current best are
    skipped; the rest are evaluated in bit-parallel batches, never putting
    two adjacent vertices in one batch so that each source can certify its
    neighbours.
    With ``tight`` the stopping rule is the classic ``best > 2(i - 1)``
    and no skipping is done.
    """
    n_total = indptr.shape[0] - 1
    nbfs = 0
    lb = 0
    wa = verts[0]
    wb = verts[0]
    r1 = verts[0]
    for i in range(verts.shape[0]):
        v = verts[i]
        if indptr[v + 1] - indptr[v] > indptr[r1 + 1] - indptr[r1]:
            r1 = v
    # four sweeps: r1 -> a1 -> b1 (midpoint r2) -> a2 -> b2 (midpoint u)
    cnt, e, a1 = bfs(indptr, indices, r1, dist, queue)
    nbfs += 1
    if e > lb:
        lb, wa, wb = e, r1, a1
    if not tight:
        _bound_from_dist(dist, queue, cnt, e, ecc_up)
    reset(dist, queue, cnt)
    cnt, e, b1 = bfs(indptr, indices, a1, dist, queue)
    nbfs += 1
    if e > lb:
        lb, wa, wb = e, a1, b1
    if not tight:
        _bound_from_dist(dist, queue, cnt, e, ecc_up)
    r2 = midpoint(indptr, indices, dist, b1)
    reset(dist, queue, cnt)
    cnt, e, a2 = bfs(indptr, indices, r2, dist, queue)
    nbfs += 1
    if e > lb:
        lb, wa, wb = e, r2, a2
    if not tight:
        _bound_from_dist(dist, queue, cnt, e, ecc_up)
    reset(dist, queue, cnt)
    cnt, e, b2 = bfs(indptr, indices, a2, dist, queue)
    nbfs += 1
    if e > lb:
        lb, wa, wb = e, a2, b2
    if not tight:
        _bound_from_dist(dist, queue, cnt, e, ecc_up)
    u = midpoint(indptr, indices, dist, b2)
    reset(dist, queue, cnt)

    cnt, eu, _ = bfs(indptr, indices, u, dist, queue)
    nbfs += 1
    if not tight:
        _bound_from_dist(dist, queue, cnt, eu, ecc_up)
    # vertices by level (descending), then degree (descending), then id
    nv = cnt
    level = np.empty(nv, dtype=np.int32)
    deg = np.empty(nv, dtype=np.int64)
    order_v = np.empty(nv, dtype=np.int64)
    for j in range(nv):
        w = queue[j]
        order_v[j] = w
        level[j] = dist[w]
        deg[j] = indptr[w + 1] - indptr[w]
    reset(dist, queue, cnt)
    maxdeg = 0
    for j in range(nv):
        if deg[j] > maxdeg:
            maxdeg = deg[j]
    key = np.empty(nv, dtype=np.int64)
    for j in range(nv):
        key[j] = ((eu - level[j]) * (maxdeg + 1) + (maxdeg - deg[j])) * n_total + order_v[j]
    perm = np.argsort(key)
    lstart = np.zeros(eu + 2, dtype=np.int64)
    for j in range(nv):
        lstart[eu - level[j] + 1] += 1
    for L in range(1, eu + 2):
        lstart[L] += lstart[L - 1]

    nbits = seen.shape[1] * WORD
    levelmask = np.zeros((2 * eu + 2, seen.shape[1]), dtype=np.uint64)
    for i in range(eu, 0, -1):
        if tight:
            if lb > 2 * i:
                break
        elif lb >= 2 * i:
            break
        lo = lstart[eu - i]
        hi = lstart[eu - i + 1]
        # repeat passes over the level until every vertex is evaluated or
        # certified; a pass skips neighbours of sources already in the batch
        while True:
            j = lo
            picked_any = False
            while j < hi:
                ns = 0
                while j < hi and ns < nbits:
                    w = order_v[perm[j]]
                    j += 1
                    if done_v[w] or pending[w]:
                        continue
                    if not tight and ecc_up[w] <= lb:
                        done_v[w] = True
                        continue
                    srcbuf[ns] = w
                    ns += 1
                    if not tight:
                        for k in range(indptr[w], indptr[w + 1]):
                            pending[indices[k]] = True
                if ns == 0:
                    break
                picked_any = True
                eccs = multi_ecc(indptr, indices, srcbuf, ns, seen, cur, nxt,
                                 front, front2, levelmask, touch)
                nbfs += ns
                for b in range(ns):
                    done_v[srcbuf[b]] = True
                    if eccs[b] > lb:
                        c2, e2, far = bfs(indptr, indices, srcbuf[b], dist, queue)
                        reset(dist, queue, c2)
                        lb, wa, wb = e2, srcbuf[b], far
                for b in range(ns):
                    w = srcbuf[b]
                    for k in range(indptr[w], indptr[w + 1]):
                        pending[indices[k]] = False
                    if not tight:
                        _certify(indptr, indices, w, eccs[b], lb, ecc_up, dist, queue)
            if not picked_any:
                break
    for j in range(nv):
        done_v[order_v[j]] = False
    return lb, wa, wb, nbfs


@njit(cache=True)
def _bound_from_dist(dist, queue, cnt, ecc_s, ecc_up):
    for j in range(cnt):
        w = queue[j]
        b = ecc_s + dist[w]
        if b < ecc_up[w]:
            ecc_up[w] = b


@njit(cache=True)
def diameter_all(indptr, indices, order, start, threshold, use_ifub, tight, words):
    """Per-component exact diameters.

    ``order[start[c]:start[c+1]]`` are the vertices of component ``c``.
    Components smaller than ``threshold`` (or all, without ``use_ifub``)
    are handled by BFS from every vertex.  ``words`` sets the bit-parallel
    batch width (64 sources per word).
    """
    n = indptr.shape[0] - 1
    ncomp = start.shape[0] - 1
    diam = np.zeros(ncomp, dtype=np.int64)
    wit_a = np.zeros(ncomp, dtype=np.int64)
    wit_b = np.zeros(ncomp, dtype=np.int64)
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    ecc_up = np.full(n, np.iinfo(np.int32).max, dtype=np.int32)
    seen = np.zeros((n, words), dtype=np.uint64)
    cur = np.zeros((n, words), dtype=np.uint64)
    nxt = np.zeros((n, words), dtype=np.uint64)
    front = np.empty(n, dtype=np.int64)
    front2 = np.empty(n, dtype=np.int64)
    touch = np.empty(n, dtype=np.int64)
    pending = np.zeros(n, dtype=np.bool_)
    done_v = np.zeros(n, dtype=np.bool_)
    srcbuf = np.empty(words * WORD, dtype=np.int64)
    total_bfs = 0
    for c in range(ncomp):
        verts = order[start[c]:start[c + 1]]
        size = verts.shape[0]
        if size == 1:
            diam[c] = 0
            wit_a[c] = verts[0]
            wit_b[c] = verts[0]
            continue
        if size == 2:
            diam[c] = 1
            wit_a[c] = verts[0]
            wit_b[c] = verts[1]
            continue
        if use_ifub and size >= threshold:
            d, a, b, k = _ifub_component(indptr, indices, verts, dist, queue, ecc_up,
                                         seen, cur, nxt, front, front2, touch,
                                         pending, done_v, srcbuf, tight)
        else:
            d, a, b, k = _all_bfs_component(indptr, indices, verts, dist, queue)
        diam[c] = d
        wit_a[c] = a
        wit_b[c] = b
        total_bfs += k
    return diam, wit_a, wit_b, total_bfs


@njit(cache=True)
def peel_two_core(indptr, indices):
    """Remove degree <= 1 vertices until none remain.  Vertices are
    queued in ascending id order, then in the order they become light."""
    n = indptr.shape[0] - 1
    deg = np.empty(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] <= 1:
            alive[v] = False
            queue[tail] = v
            tail += 1
    head = 0
    while head < tail:
        v = queue[head]
        head += 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if alive[w]:
                deg[w] -= 1
                if deg[w] <= 1:
                    alive[w] = False
                    queue[tail] = w
                    tail += 1
    return alive


@njit(cache=True)
def kernel_chains(indptr, indices, incore):
    """Walk the 2-core (given by the ``incore`` mask) from every vertex of
    core degree >= 3 along maximal chains of core-degree-2 vertices.

    Returns kernel edges ``(a, b, chain_edges)`` (each chain once), and the
    lengths of the cycles that contain no vertex of degree >= 3.
    """
    n = indptr.shape[0] - 1
    cdeg = np.zeros(n, dtype=np.int64)
    for v in range(n):
        if incore[v]:
            for k in range(indptr[v], indptr[v + 1]):
                if incore[indices[k]]:
                    cdeg[v] += 1
    used = np.zeros(indices.shape[0], dtype=np.bool_)
    ea = []
    eb = []
    el = []
    visited2 = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if not incore[v] or cdeg[v] < 3:
            continue
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if not incore[w] or used[k]:
                continue
            used[k] = True
            prev = v
            cur = w
            length = 1
            while cdeg[cur] == 2:
                visited2[cur] = True
                nxt = -1
                for k2 in range(indptr[cur], indptr[cur + 1]):
                    x = indices[k2]
                    if incore[x] and x != prev:
                        nxt = x
                        break
                prev = cur
                cur = nxt
                length += 1
            # mark the arc entering ``cur`` from ``prev`` as used
            for k2 in range(indptr[cur], indptr[cur + 1]):
                if indices[k2] == prev and not used[k2]:
                    used[k2] = True
                    break
            ea.append(v)
            eb.append(cur)
            el.append(length)
    cycles = []
    for v in range(n):
        if not incore[v] or cdeg[v] != 2 or visited2[v]:
            continue
        # cycle of degree-2 vertices only
        length = 0
        prev = -1
        cur = v
        while True:
            visited2[cur] = True
            length += 1
            nxt = -1
            for k2 in range(indptr[cur], indptr[cur + 1]):
                x = indices[k2]
                if incore[x] and x != prev:
                    nxt = x
                    break
            prev = cur
            cur = nxt
            if cur == v:
                break
        cycles.append(length)
    return (np.array(ea, dtype=np.int64), np.array(eb, dtype=np.int64),
            np.array(el, dtype=np.int64), np.array(cycles, dtype=np.int64))


@njit(cache=True)
def peel_forest(indptr, indices):
    """Peel degree <= 1 vertices, recording the tree structure removed.

    Returns ``(alive, parent, height, deep, best, best_a, best_b)``:
    ``parent[v]`` is the neighbour still present when ``v`` was removed
    (-1 for core vertices and for the last vertex of a tree component),
    ``height[v]``/``deep[v]`` the height of the subtree hanging below ``v``
    and a deepest vertex in it, and ``best[v]`` the longest path whose
    topmost vertex is ``v`` with endpoints ``best_a[v]``, ``best_b[v]``.
    For a core vertex the subtree is the union of trees attached to it.
    """
    n = indptr.shape[0] - 1
    deg = np.empty(n, dtype=np.int64)
    queued = np.zeros(n, dtype=np.bool_)
    alive = np.ones(n, dtype=np.bool_)
    parent = np.full(n, -1, dtype=np.int64)
    height = np.zeros(n, dtype=np.int64)
    deep = np.arange(n)
    best = np.zeros(n, dtype=np.int64)
    best_a = np.arange(n)
    best_b = np.arange(n)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] <= 1:
            queued[v] = True
            queue[tail] = v
            tail += 1
    head = 0
    while head < tail:
        v = queue[head]
        head += 1
        alive[v] = False
        p = -1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if alive[w]:
                p = w
                break
        if p < 0:
            continue
        parent[v] = p
        through = height[p] + height[v] + 1
        if through > best[p]:
            best[p] = through
            best_a[p] = deep[p]
            best_b[p] = deep[v]
        if height[v] + 1 > height[p]:
            height[p] = height[v] + 1
            deep[p] = deep[v]
        deg[p] -= 1
        if deg[p] <= 1 and not queued[p]:
            queued[p] = True
            queue[tail] = p
            tail += 1
    return alive, parent, height, deep, best, best_a, best_b

"""Compiled inner loops.  All arrays are int64 CSR graph arrays plus int64 state.

Worklists are FIFO ring buffers of capacity ``n``.  A vertex is pushed only
when its height crosses from below ``deg`` to at least ``deg``, and a popped
vertex topples ``h // deg`` times at once, so it leaves the queue stable
(a loop can push it straight back).  Each vertex is therefore queued at most
once at any time.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def stabilize_fifo(indptr, indices, mult, deg, can_topple, h, odo):
    """Topple until every vertex with ``can_topple`` is stable.  Mutates ``h`` and ``odo``.

    Heights may be negative on entry (bulk-applied odometers); such vertices
    simply wait for particles.
    """
    n = h.shape[0]
    queue = np.empty(n, np.int64)
    size = 0
    for v in range(n):
        if can_topple[v] and h[v] >= deg[v]:
            queue[size] = v
            size += 1
    head = 0
    tail = size % n
    while size > 0:
        v = queue[head]
        head += 1
        if head == n:
            head = 0
        size -= 1
        hv = h[v]
        dv = deg[v]
        k = 1 if hv < 2 * dv else hv // dv
        h[v] = hv - k * dv
        odo[v] += k
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            gain = k * mult[p]
            hw = h[w] + gain
            h[w] = hw
            dw = deg[w]
            if hw >= dw and hw - gain < dw and can_topple[w]:
                queue[tail] = w
                tail += 1
                if tail == n:
                    tail = 0
                size += 1


@njit(cache=True)
def stabilize_or_detect(indptr, indices, mult, deg, h, odo):
    """Sinkless stabilisation that gives up once every vertex has toppled.

    Returns True when ``h`` ended stable.  ``odo`` must be zero on entry.
    """
    n = h.shape[0]
    queue = np.empty(n, np.int64)
    size = 0
    for v in range(n):
        if h[v] >= deg[v]:
            queue[size] = v
            size += 1
    head = 0
    tail = size % n
    touched = 0
    while size > 0:
        v = queue[head]
        head += 1
        if head == n:
            head = 0
        size -= 1
        hv = h[v]
        dv = deg[v]
        k = 1 if hv < 2 * dv else hv // dv
        if odo[v] == 0:
            touched += 1
        h[v] = hv - k * dv
        odo[v] += k
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            gain = k * mult[p]
            hw = h[w] + gain
            h[w] = hw
            dw = deg[w]
            if hw >= dw and hw - gain < dw:
                queue[tail] = w
                tail += 1
                if tail == n:
                    tail = 0
                size += 1
        if touched == n:
            return False
    return True


@njit(cache=True)
def threshold_additions(indptr, indices, mult, deg, s, sites, start, state,
                        queue, tstamp, tlist, tcount):
    """Add ``sites[start:]`` one at a time, stabilising after each.

    Works on relative heights ``s = h - deg`` (a vertex is unstable iff
    ``s >= 0``), which keeps the neighbour loop on a single array.

    ``state`` holds ``[m, total_topples, epoch]``.  Stops at the first
    addition during which every vertex topples; that addition is undone (its
    topplings are reversed) so ``s`` is left at the last stable configuration.
    Returns ``(next_index, failed)``.
    """
    n = s.shape[0]
    m = state[0]
    total = state[1]
    epoch = state[2]
    for i in range(start, sites.shape[0]):
        epoch += 1
        v = sites[i]
        s[v] += 1
        if s[v] < 0:
            m += 1
            continue
        head = 0
        tail = 1
        size = 1
        queue[0] = v
        toppled = 0
        topples = 0
        while size > 0:
            x = queue[head]
            head += 1
            if head == n:
                head = 0
            size -= 1
            sx = s[x]
            dx = deg[x]
            k = 1 if sx < dx else sx // dx + 1
            s[x] = sx - k * dx
            topples += k
            if tstamp[x] != epoch:
                tstamp[x] = epoch
                tlist[toppled] = x
                tcount[x] = k
                toppled += 1
            else:
                tcount[x] += k
            for p in range(indptr[x], indptr[x + 1]):
                w = indices[p]
                gain = k * mult[p]
                sw = s[w] + gain
                s[w] = sw
                if sw >= 0 and sw < gain:
                    queue[tail] = w
                    tail += 1
                    if tail == n:
                        tail = 0
                    size += 1
            if toppled == n:
                for j in range(n):
                    x = tlist[j]
                    k = tcount[x]
                    s[x] += k * deg[x]
                    for p in range(indptr[x], indptr[x + 1]):
                        s[indices[p]] -= k * mult[p]
                s[v] -= 1
                state[0] = m
                state[1] = total
                state[2] = epoch
                return i, True
        m += 1
        total += topples
    state[0] = m
    state[1] = total
    state[2] = epoch
    return sites.shape[0], False


@njit(cache=True)
def parallel_step(indptr, indices, mult, deg, h, out, fired):
    """One synchronous update ``out = h + sum_{v unstable} Delta_v``; returns the number fired."""
    n = h.shape[0]
    for v in range(n):
        out[v] = h[v]
    count = 0
    for v in range(n):
        if h[v] >= deg[v]:
            count += 1
            fired[v] += 1
            out[v] -= deg[v]
            for p in range(indptr[v], indptr[v + 1]):
                out[indices[p]] += mult[p]
    return count


@njit(cache=True)
def apply_odometer(indptr, indices, mult, deg, h, u):
    """``h += Delta u`` in exact integer arithmetic (no legality check)."""
    n = h.shape[0]
    for v in range(n):
        k = u[v]
        if k == 0:
            continue
        h[v] -= k * deg[v]
        for p in range(indptr[v], indptr[v + 1]):
            h[indices[p]] += k * mult[p]


@njit(cache=True)
def driven_additions(indptr, indices, mult, deg, active, h, sites, queue):
    """Add one particle at each of ``sites`` and stabilise after each (sinks inactive).

    ``h`` must be stable on entry.  Returns the total number of topplings.
    """
    n = h.shape[0]
    total = 0
    for i in range(sites.shape[0]):
        v = sites[i]
        h[v] += 1
        if h[v] < deg[v] or not active[v]:
            continue
        head = 0
        tail = 1
        size = 1
        queue[0] = v
        while size > 0:
            x = queue[head]
            head += 1
            if head == n:
                head = 0
            size -= 1
            hx = h[x]
            dx = deg[x]
            k = 1 if hx < 2 * dx else hx // dx
            h[x] = hx - k * dx
            total += k
            for p in range(indptr[x], indptr[x + 1]):
                w = indices[p]
                gain = k * mult[p]
                hw = h[w] + gain
                h[w] = hw
                dw = deg[w]
                if hw >= dw and hw - gain < dw and active[w]:
                    queue[tail] = w
                    tail += 1
                    if tail == n:
                        tail = 0
                    size += 1
    return total

"""Compiled inner loops for the large Monte Carlo runs.

Each kernel takes a ``numpy.random.Generator`` and draws from it inside
numba, so a seeded generator gives the same output as an equivalent
pure-Python loop would consume, one uniform at a time.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _pick_existing_table(sizes, table_of, n, a, rng):
    # Uniform customer, accepted with prob (n_t - a)/n_t: proportional to n_t - a.
    while True:
        t = table_of[int(rng.random() * n)]
        s = sizes[t]
        if rng.random() * s < s - a:
            return t


@njit(cache=True)
def _insert_left_of(nxt, prv, j, new):
    # doubly linked spinal order; index -1 is the head/tail sentinel slot
    p = prv[j]
    prv[new] = p
    nxt[new] = j
    prv[j] = new
    if p >= 0:
        nxt[p] = new
        return False
    return True


@njit(cache=True)
def _place_table(nxt, prv, k, head, tail, a, t, rng):
    """Put table ``k`` into the spinal order of tables ``0..k-1``.

    Right of all with weight t; immediately left of a uniformly chosen
    existing table with total weight k * a. Returns updated (head, tail).
    """
    if k == 0:
        nxt[0] = -1
        prv[0] = -1
        return 0, 0
    if rng.random() * (k * a + t) < t:
        prv[k] = tail
        nxt[k] = -1
        nxt[tail] = k
        return head, k
    j = min(int(rng.random() * k), k - 1)
    if _insert_left_of(nxt, prv, j, k):
        head = k
    return head, tail


@njit(cache=True)
def _walk(nxt, head, k):
    out = np.empty(k, np.int64)
    v = head
    for i in range(k):
        out[i] = v
        v = nxt[v]
    return out


@njit(cache=True)
def crp_kernel(n, a, t, rng):
    """Ordered CRP with ``n`` customers.

    Returns ``(spinal, sizes)``: birth indices (0-based) of the tables in
    left-to-right order, and table sizes indexed by birth.
    """
    sizes = np.zeros(n, np.int64)
    table_of = np.zeros(n, np.int64)
    nxt = np.zeros(n, np.int64)
    prv = np.zeros(n, np.int64)
    head, tail = _place_table(nxt, prv, 0, 0, 0, a, t, rng)
    sizes[0] = 1
    k = 1
    for m in range(1, n):
        if rng.random() * (m + t) < k * a + t:
            head, tail = _place_table(nxt, prv, k, head, tail, a, t, rng)
            sizes[k] = 1
            table_of[m] = k
            k += 1
        else:
            tab = _pick_existing_table(sizes, table_of, m, a, rng)
            sizes[tab] += 1
            table_of[m] = tab
    return _walk(nxt, head, k), sizes[:k].copy()


@njit(cache=True)
def crp_batch(reps, n, a, t, rng):
    """Many independent CRPs: spinal compositions (zero-padded), K, and the
    spinal position of customer 1's table."""
    parts = np.zeros((reps, n), np.int64)
    ks = np.zeros(reps, np.int64)
    c1 = np.zeros(reps, np.int64)
    for r in range(reps):
        spinal, sizes = crp_kernel(n, a, t, rng)
        k = spinal.shape[0]
        ks[r] = k
        for j in range(k):
            parts[r, j] = sizes[spinal[j]]
            if spinal[j] == 0:
                c1[r] = j
    return parts, ks, c1


@njit(cache=True)
def table_counts(reps, n, a, t, rng):
    """K_n for ``reps`` independent (a, t) seating plans with ``n`` customers."""
    out = np.empty(reps, np.int64)
    for r in range(reps):
        k = 1
        for m in range(1, n):
            if rng.random() * (m + t) < k * a + t:
                k += 1
        out[r] = k
    return out


@njit(cache=True)
def grow_kernel(n, a, t, rng):
    """(a, t)-tree growth to ``n`` leaves.

    Node ids: leaf j is ``j - 1``; the branch point created when leaf j is
    attached is ``n + j - 2``. ``child1`` holds the child containing the
    smaller labels. Returns ``(parent, child0, child1, size, root, history)``
    where ``history[j]`` is the node whose parent edge received leaf j + 2.
    """
    total = max(2 * n - 1, 1)
    parent = -np.ones(total, np.int64)
    child0 = -np.ones(total, np.int64)
    child1 = -np.ones(total, np.int64)
    size = np.zeros(total, np.int64)
    history = np.zeros(max(n - 1, 0), np.int64)
    size[0] = 1
    root = 0
    for leaf in range(2, n + 1):
        # descend from the root branch point
        v = root
        while True:
            if child0[v] < 0:
                break
            s = size[v]
            m = size[child0[v]]
            u = rng.random() * (s - 1 + t)
            if u < a:
                break
            elif u < m:
                v = child0[v]
                if child0[v] < 0:
                    break
            else:
                v = child1[v]
                if child0[v] < 0:
                    break
        history[leaf - 2] = v
        new_leaf = leaf - 1
        b = n + leaf - 2
        p = parent[v]
        parent[b] = p
        if p < 0:
            root = b
        elif child0[p] == v:
            child0[p] = b
        else:
            child1[p] = b
        # v holds the smaller labels relative to the new leaf
        child1[b] = v
        child0[b] = new_leaf
        parent[v] = b
        parent[new_leaf] = b
        size[new_leaf] = 1
        size[b] = size[v] + 1
        w = p
        while w >= 0:
            size[w] += 1
            w = parent[w]
    return parent, child0, child1, size, root, history


@njit(cache=True)
def grow_histories(reps, n, a, t, rng):
    out = np.zeros((reps, max(n - 1, 0)), np.int64)
    for r in range(reps):
        out[r] = grow_kernel(n, a, t, rng)[5]
    return out


@njit(cache=True)
def leaf1_heights(reps, n, a, t, rng):
    """Number of branch points on the path from the root to leaf 1."""
    out = np.empty(reps, np.int64)
    for r in range(reps):
        parent = grow_kernel(n, a, t, rng)[0]
        h = 0
        v = parent[0]
        while v >= 0:
            h += 1
            v = parent[v]
        out[r] = h
    return out


@njit(cache=True)
def walker_kernel(n, t, rng):
    """One tree from the beta(1, t) random-environment walker.

    Marks are drawn when a branch point is created; the walker only stops
    at leaves, so each branch point keeps one vertex of the complete binary
    tree and this is the same environment as lazy sampling on first visit.
    Returns ``(parent, history)`` with node ids as in :func:`grow_kernel`.
    """
    total = 2 * n - 1
    parent = -np.ones(total, np.int64)
    child0 = -np.ones(total, np.int64)
    child1 = -np.ones(total, np.int64)
    mark = np.zeros(total)
    history = np.zeros(max(n - 1, 0), np.int64)
    root = 0
    for leaf in range(2, n + 1):
        v = root
        while child0[v] >= 0:
            # mark = probability of moving away from the smallest label
            if rng.random() < mark[v]:
                v = child0[v]
            else:
                v = child1[v]
        history[leaf - 2] = v
        new_leaf = leaf - 1
        b = n + leaf - 2
        p = parent[v]
        parent[b] = p
        if p < 0:
            root = b
        elif child0[p] == v:
            child0[p] = b
        else:
            child1[p] = b
        child1[b] = v
        child0[b] = new_leaf
        parent[v] = b
        parent[new_leaf] = b
        mark[b] = rng.beta(1.0, t) if t > 0 else 1.0
    return parent, history


@njit(cache=True)
def walker_heights(reps, n, t, rng):
    """Leaf-1 heights of ``reps`` walker trees."""
    out = np.empty(reps, np.int64)
    for r in range(reps):
        parent, _ = walker_kernel(n, t, rng)
        h = 0
        v = parent[0]
        while v >= 0:
            h += 1
            v = parent[v]
        out[r] = h
    return out


@njit(cache=True)
def walker_histories(reps, n, t, rng):
    out = np.zeros((reps, max(n - 1, 0)), np.int64)
    for r in range(reps):
        out[r] = walker_kernel(n, t, rng)[1]
    return out


@njit(cache=True)
def table_order_kernel(k, a, t, rng):
    """Spinal order of tables 1..k placed by the order scheme alone.

    Returns ``order`` with ``order[j]`` the birth index (0-based) of the
    j-th table from the left.
    """
    nxt = np.zeros(k, np.int64)
    prv = np.zeros(k, np.int64)
    head, tail = 0, 0
    for i in range(k):
        head, tail = _place_table(nxt, prv, i, head, tail, a, t, rng)
    return _walk(nxt, head, k)


@njit(cache=True)
def urn_kernel(gammas, steps, rng):
    """Polya urn: add 1 to a component chosen proportionally to current weights."""
    m = gammas.shape[0]
    w = gammas.copy()
    counts = np.zeros(m, np.int64)
    total = w.sum()
    for _ in range(steps):
        u = rng.random() * total
        j = 0
        acc = w[0]
        while u >= acc and j < m - 1:
            j += 1
            acc += w[j]
        w[j] += 1.0
        counts[j] += 1
        total += 1.0
    return counts


@njit(cache=True)
def _append_string(pos, mass, used, budget, a, t, scale_mass, rng):
    """Append an (a, t)-string from ``budget`` customers, masses times
    ``scale_mass`` and lengths times ``scale_mass ** a``; returns
    ``(new used, length)``."""
    spinal, sizes = crp_kernel(budget, a, t, rng)
    k = spinal.shape[0]
    step = budget ** -a * scale_mass ** a
    for j in range(k):
        pos[used + j] = (j + 1) * step
        mass[used + j] = sizes[spinal[j]] / budget * scale_mass
    return used + k, k * step


@njit(cache=True)
def crush_chain(k, budget, a, t, rng):
    """Bead-crushing chain from one (a, t)-string to ``k`` leaves.

    Atoms live in one pool; the edge above node v owns the pool slice
    ``[e_start[v], e_end[v])`` with positions ``pos - e_off[v]`` measured
    from its upper end. Node ids follow :func:`grow_kernel`.
    """
    cap = k * budget + 1
    pos = np.empty(cap)
    mass = np.empty(cap)
    total = 2 * k - 1
    parent = -np.ones(total, np.int64)
    child0 = -np.ones(total, np.int64)
    child1 = -np.ones(total, np.int64)
    e_start = np.zeros(total, np.int64)
    e_end = np.zeros(total, np.int64)
    e_off = np.zeros(total)
    e_len = np.zeros(total)
    history = np.zeros(max(k - 1, 0), np.int64)
    used, length = _append_string(pos, mass, 0, budget, a, t, 1.0, rng)
    e_end[0] = used
    e_len[0] = length
    root = 0
    for leaf in range(2, k + 1):
        # edge chosen with probability equal to its mass
        u = rng.random()
        tot = 0.0
        n_alive = leaf - 1
        for i in range(2 * n_alive - 1):
            v = i if i < n_alive else k + i - n_alive
            for q in range(e_start[v], e_end[v]):
                tot += mass[q]
        u *= tot
        chosen = -1
        acc = 0.0
        for i in range(2 * n_alive - 1):
            v = i if i < n_alive else k + i - n_alive
            for q in range(e_start[v], e_end[v]):
                acc += mass[q]
            if e_end[v] > e_start[v]:
                chosen = v
                if u < acc:
                    break
        v = chosen
        # bead on that edge
        s0, s1 = e_start[v], e_end[v]
        is_leaf = child0[v] < 0
        if is_leaf and t == 0:
            j = s1 - 1
        else:
            rem = 0.0
            for q in range(s0, s1):
                rem += mass[q]
            j = s1 - 1
            for q in range(s0, s1):
                after = rem - mass[q]
                if q == s1 - 1:
                    x = 0.0
                else:
                    x = after / rem
                if is_leaf:
                    den = (1 - x) * t + x * a
                    pr = (1 - x) * t / den if den > 0 else 1.0
                else:
                    pr = 1 - x
                if rng.random() < pr:
                    j = q
                    break
                rem = after
        history[leaf - 2] = v
        m = mass[j]
        cut = pos[j]
        b = k + leaf - 2
        new_leaf = leaf - 1
        # upper part becomes the new branch block's edge
        e_start[b] = s0
        e_end[b] = j
        e_off[b] = e_off[v]
        e_len[b] = cut - e_off[v]
        # lower part stays with v
        old_bottom = e_off[v] + e_len[v]
        e_start[v] = j + 1
        e_off[v] = cut
        e_len[v] = max(old_bottom - cut, 0.0)
        # fresh string for the new leaf
        e_start[new_leaf] = used
        used, length = _append_string(pos, mass, used, budget, a, t, m, rng)
        e_end[new_leaf] = used
        e_len[new_leaf] = length
        p = parent[v]
        parent[b] = p
        if p < 0:
            root = b
        elif child0[p] == v:
            child0[p] = b
        else:
            child1[p] = b
        child1[b] = v
        child0[b] = new_leaf
        parent[v] = b
        parent[new_leaf] = b
    return (pos[:used].copy(), mass[:used].copy(), parent, child0, child1, e_start, e_end,
            e_off, e_len, root, history)


@njit(cache=True)
def crush_histories(reps, k, budget, a, t, rng):
    out = np.zeros((reps, max(k - 1, 0)), np.int64)
    for r in range(reps):
        out[r] = crush_chain(k, budget, a, t, rng)[10]
    return out


@njit(cache=True)
def crush_mass_drift(k, budget, a, t, rng):
    """Largest deviation of the total edge mass from 1 over a chain to ``k``."""
    res = crush_chain(k, budget, a, t, rng)
    mass, e_start, e_end = res[1], res[5], res[6]
    tot = 0.0
    for v in range(e_start.shape[0]):
        for q in range(e_start[v], e_end[v]):
            tot += mass[q]
    return abs(tot - 1.0)


@njit(cache=True)
def _scaled_local_time(cum, n, a, u):
    return np.searchsorted(cum, u * n, side="right") * n ** -a


@njit(cache=True)
def crp_sup_gaps(ns, a, t, rng):
    """One ordered CRP run to ``ns[-1]``; returns, for each earlier snapshot
    ``ns[i]``, ``sup_u |n^-a L_n(u) - N^-a L_N(u)|`` with ``N = ns[-1]``."""
    N = ns[-1]
    sizes = np.zeros(N, np.int64)
    table_of = np.zeros(N, np.int64)
    nxt = np.zeros(N, np.int64)
    prv = np.zeros(N, np.int64)
    head, tail = _place_table(nxt, prv, 0, 0, 0, a, t, rng)
    sizes[0] = 1
    k = 1
    snaps = []
    si = 0
    for m in range(1, N + 1):
        if si < ns.shape[0] and m == ns[si]:
            cum = np.cumsum(sizes[_walk(nxt, head, k)]).astype(np.float64)
            snaps.append((cum, m))
            si += 1
        if m == N:
            break
        if rng.random() * (m + t) < k * a + t:
            head, tail = _place_table(nxt, prv, k, head, tail, a, t, rng)
            sizes[k] = 1
            table_of[m] = k
            k += 1
        else:
            tab = _pick_existing_table(sizes, table_of, m, a, rng)
            sizes[tab] += 1
            table_of[m] = tab
    final, nf = snaps[-1]
    out = np.zeros(len(snaps) - 1)
    for i in range(len(snaps) - 1):
        cum, n = snaps[i]
        pts = np.concatenate((cum / n, final / nf))
        best = 0.0
        for u in pts:
            d = abs(_scaled_local_time(cum, n, a, u) - _scaled_local_time(final, nf, a, u))
            if d > best:
                best = d
        out[i] = best
    return out

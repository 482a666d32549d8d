"""Independent reference implementations used only by the test-suite.

Nothing here imports from ``ikka``; each oracle is the slow, obvious version
of the thing it checks.
"""

import itertools
import math

import numpy as np


def cheb(p, q):
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def rips_simplices(points, max_radius):
    """All simplices of the Rips complex up to triangles, enumerated directly."""
    n = len(points)
    out = [((i,), 0.0) for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        d = cheb(points[i], points[j])
        if d <= max_radius:
            out.append(((i, j), d))
    for i, j, k in itertools.combinations(range(n), 3):
        d = max(cheb(points[i], points[j]), cheb(points[i], points[k]), cheb(points[j], points[k]))
        if d <= max_radius:
            out.append(((i, j, k), d))
    out.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return out


def brute_force_pd(points, max_radius, degree=1):
    """Dense boundary-matrix reduction over GF(2) on every simplex at once."""
    simplices = rips_simplices(points, max_radius)
    index = {s: k for k, (s, _) in enumerate(simplices)}
    m = len(simplices)
    D = np.zeros((m, m), dtype=np.uint8)
    for col, (s, _) in enumerate(simplices):
        if len(s) > 1:
            for face in itertools.combinations(s, len(s) - 1):
                D[index[face], col] = 1

    def low(c):
        nz = np.flatnonzero(D[:, c])
        return nz[-1] if len(nz) else -1

    lows = {}
    for c in range(m):
        lc = low(c)
        while lc >= 0 and lc in lows:
            D[:, c] ^= D[:, lows[lc]]
            lc = low(c)
        if lc >= 0:
            lows[lc] = c

    pairs = []
    paired = set()
    for row, col in lows.items():
        paired.add(row)
        paired.add(col)
        s_row, b = simplices[row]
        if len(s_row) == degree + 1:
            d = simplices[col][1]
            if d > b:
                pairs.append((b, d))
    for k, (s, v) in enumerate(simplices):
        if k not in paired and len(s) == degree + 1 and max_radius > v:
            pairs.append((v, max_radius))
    return sorted(pairs)


def brute_bottleneck(a, b):
    """Bottleneck distance by enumerating every matching of the augmented diagrams."""
    a, b = list(a), list(b)
    left = [("p", p) for p in a] + [("d", q) for q in b]
    right = [("p", q) for q in b] + [("d", p) for p in a]

    def cost(u, v):
        if u[0] == "p" and v[0] == "p":
            return cheb(u[1], v[1])
        if u[0] == "p" and v[0] == "d":
            return (u[1][1] - u[1][0]) / 2 if u[1] is v[1] else math.inf
        if u[0] == "d" and v[0] == "p":
            return (v[1][1] - v[1][0]) / 2 if u[1] is v[1] else math.inf
        return 0.0

    best = math.inf
    for perm in itertools.permutations(range(len(right))):
        worst = max((cost(left[i], right[perm[i]]) for i in range(len(left))), default=0.0)
        best = min(best, worst)
    return best


def average_ranks(values):
    """Tie-averaged ranks by counting, O(n^2)."""
    out = []
    for v in values:
        less = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        out.append(less + (equal + 1) / 2.0)
    return out


def kruskal_h(groups):
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = average_ranks(pooled)
    h = 0.0
    pos = 0
    for g in groups:
        r = ranks[pos:pos + len(g)]
        pos += len(g)
        h += sum(r) ** 2 / len(g)
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1)
    counts = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    ties = sum(t ** 3 - t for t in counts.values())
    denom = 1 - ties / (n ** 3 - n)
    return 0.0 if denom == 0 else h / denom


def cliffs_brute(a, b):
    gt = lt = 0
    for x in a:
        for y in b:
            if x > y:
                gt += 1
            elif x < y:
                lt += 1
    return (gt - lt) / (len(a) * len(b))


def wilcoxon_enum(x, y):
    """Exact two-sided Wilcoxon p by flipping every sign; returns (W+, p)."""
    d = [xi - yi for xi, yi in zip(x, y) if xi != yi]
    ranks = average_ranks([abs(v) for v in d])
    w_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    total = sum(ranks)
    mean = total / 2
    obs = abs(w_plus - mean)
    hits = 0
    count = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        w = sum(r for r, s in zip(ranks, signs) if s)
        count += 1
        if abs(w - mean) >= obs - 1e-9:
            hits += 1
    return w_plus, hits / count


def wilcoxon_enum_greater(x, y):
    """Exact one-sided p for W+ >= observed (x tends to exceed y)."""
    d = [xi - yi for xi, yi in zip(x, y) if xi != yi]
    ranks = average_ranks([abs(v) for v in d])
    w_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    hits = count = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        w = sum(r for r, s in zip(ranks, signs) if s)
        count += 1
        if w >= w_plus - 1e-9:
            hits += 1
    return hits / count


def spearman_brute(x, y):
    rx, ry = average_ranks(x), average_ranks(y)
    n = len(x)
    mx, my = sum(rx) / n, sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    return sxy / math.sqrt(sxx * syy)


def projected_gradient_qp(K, y, C, iters=200000, lr=None, tol=1e-12):
    """Maximise sum(a) - 0.5 a'Qa over 0<=a<=C, y'a=0 by projected gradient ascent.

    The projection onto box-intersect-hyperplane is found by bisection on the
    multiplier of the equality constraint.
    """
    y = np.asarray(y, dtype=float)
    Q = (y[:, None] * y[None, :]) * K
    n = len(y)
    if lr is None:
        lr = 1.0 / np.linalg.eigvalsh(Q).max()

    def project(v):
        lo, hi = -1e6, 1e6
        for _ in range(200):
            mu = (lo + hi) / 2
            a = np.clip(v - mu * y, 0, C)
            if a @ y > 0:
                lo = mu
            else:
                hi = mu
        return np.clip(v - (lo + hi) / 2 * y, 0, C)

    a = np.zeros(n)
    for _ in range(iters):
        grad = 1 - Q @ a
        nxt = project(a + lr * grad)
        if np.max(np.abs(nxt - a)) < tol:
            a = nxt
            break
        a = nxt
    return a

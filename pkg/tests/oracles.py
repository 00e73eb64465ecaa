"""Independent reference computations used only by the tests.

None of these share code paths with the package: triangle areas instead of
ray decompositions, Monte Carlo instead of clipping, union-find instead of
scipy labelling, plain uncentered least squares instead of IRLS.
"""
import numpy as np


def tri_area(a, b, c):
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))


def pyramid_height(vertices, p, tol=1e-12):
    """Height of the pyramid over the quad at p by barycentric interpolation.

    The apex (vertex centroid) has height 1 and the base vertices 0, so on
    triangle (apex, v_i, v_i+1) the height equals the apex's barycentric weight.
    """
    v = np.asarray(vertices, dtype=float)
    o = v.mean(axis=0)
    for i in range(4):
        a, b = v[i], v[(i + 1) % 4]
        total = tri_area(o, a, b)
        w_o = tri_area(p, a, b) / total
        w_a = tri_area(o, p, b) / total
        w_b = tri_area(o, a, p) / total
        if min(w_o, w_a, w_b) >= -tol:
            return max(w_o, 0.0)
    return 0.0


def pyramid_grid(vertices, box, width, height):
    x0, y0, x1, y1 = box
    out = np.zeros((height, width))
    for j in range(height):
        for i in range(width):
            px = x0 + (i + 0.5) * (x1 - x0) / width
            py = y0 + (j + 0.5) * (y1 - y0) / height
            out[j, i] = pyramid_height(vertices, (px, py))
    return out


def inside_convex(vertices, pts):
    """Boolean mask of points inside a positively oriented convex polygon."""
    v = np.asarray(vertices, dtype=float)
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        inside &= cross >= 0
    return inside


def monte_carlo_iou(v1, v2, n=1_000_000, seed=0):
    rng = np.random.default_rng(seed)
    allv = np.vstack([v1, v2])
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    pts = rng.uniform(lo, hi, size=(n, 2))
    a = inside_convex(v1, pts)
    b = inside_convex(v2, pts)
    union = np.count_nonzero(a | b)
    return np.count_nonzero(a & b) / union if union else 0.0


def union_find_components(bits):
    """8-connected components as a list of sorted cell lists."""
    h, w = bits.shape
    parent = list(range(h * w))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for r in range(h):
        for c in range(w):
            if not bits[r, c]:
                continue
            for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and bits[rr, cc]:
                    union(r * w + c, rr * w + cc)
    groups = {}
    for r in range(h):
        for c in range(w):
            if bits[r, c]:
                groups.setdefault(find(r * w + c), []).append((r, c))
    return sorted(sorted(g) for g in groups.values())


def ols_plane(points):
    """(a, b, d) of a*x + b*y + z + d = 0 by ordinary least squares on z."""
    p = np.asarray(points, dtype=float)
    X = np.column_stack([p[:, 0], p[:, 1], np.ones(len(p))])
    coef = np.linalg.lstsq(X, p[:, 2], rcond=None)[0]
    return -coef

"""Independent reference implementations used only to check the package.

Everything here is deliberately written from the defining formulas with
plain loops and dicts, sharing no code with the package: scalar-loop
filter recursions, exhaustive assignment search, Monte-Carlo box volume
estimation, and a from-scratch tube accumulator for the association
score.
"""

from itertools import permutations

import numpy as np


# -- scalar Kalman recursions ----------------------------------------------


def _matmul(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return out


def _matvec(a, v):
    return [sum(a[i][t] * v[t] for t in range(len(v))) for i in range(len(a))]


def _transpose(a):
    return [[a[i][j] for i in range(len(a))] for j in range(len(a[0]))]


def _add(a, b):
    return [[a[i][j] + b[i][j] for j in range(len(a[0]))] for i in range(len(a))]


def _inverse(a):
    """Gauss-Jordan with partial pivoting on a small dense matrix."""
    n = len(a)
    aug = [list(row) + [1.0 if i == j else 0.0 for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(aug[r][col]))
        aug[col], aug[pivot] = aug[pivot], aug[col]
        scale = aug[col][col]
        aug[col] = [v / scale for v in aug[col]]
        for r in range(n):
            if r == col:
                continue
            factor = aug[r][col]
            aug[r] = [v - factor * p for v, p in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def kalman_predict_scalar(x, P, F, Q):
    x = [float(v) for v in x]
    P = [[float(v) for v in row] for row in P]
    F = [[float(v) for v in row] for row in F]
    Q = [[float(v) for v in row] for row in Q]
    x_new = _matvec(F, x)
    P_new = _add(_matmul(_matmul(F, P), _transpose(F)), Q)
    return np.array(x_new), np.array(P_new)


def kalman_update_scalar(x, P, z, H, R):
    x = [float(v) for v in x]
    P = [[float(v) for v in row] for row in P]
    z = [float(v) for v in z]
    H = [[float(v) for v in row] for row in H]
    R = [[float(v) for v in row] for row in R]
    n, m = len(x), len(z)

    hx = _matvec(H, x)
    innovation = [z[i] - hx[i] for i in range(m)]
    S = _add(_matmul(_matmul(H, P), _transpose(H)), R)
    K = _matmul(_matmul(P, _transpose(H)), _inverse(S))
    x_new = [x[i] + sum(K[i][j] * innovation[j] for j in range(m))
             for i in range(n)]
    KH = _matmul(K, H)
    I_KH = [[(1.0 if i == j else 0.0) - KH[i][j] for j in range(n)]
            for i in range(n)]
    P_new = _matmul(I_KH, P)
    return np.array(x_new), np.array(P_new)


# -- exhaustive assignment ---------------------------------------------------


def brute_force_assignment_value(similarity) -> float:
    """Maximum total similarity over all injective row-column pairings."""
    sim = np.asarray(similarity, dtype=float)
    m, n = sim.shape
    if m == 0 or n == 0:
        return 0.0
    if m <= n:
        perms = np.array(list(permutations(range(n), m)))
        totals = sim[np.arange(m), perms].sum(axis=1)
    else:
        perms = np.array(list(permutations(range(m), n)))
        totals = sim[perms, np.arange(n)].sum(axis=1)
    return float(totals.max())


# -- Monte-Carlo box overlap -------------------------------------------------


def mc_iou(box_a, box_b, samples: int, rng: np.random.Generator) -> float:
    """IoU estimated by uniform sampling inside the joint bounding box."""

    def bounds(box):
        c = np.array([box.cx, box.cy, box.cz])
        half = np.array([box.l, box.w, box.h]) / 2.0
        return c - half, c + half

    amin, amax = bounds(box_a)
    bmin, bmax = bounds(box_b)
    lo = np.minimum(amin, bmin)
    hi = np.maximum(amax, bmax)
    pts = rng.uniform(lo, hi, size=(samples, 3))
    in_a = np.all((pts >= amin) & (pts <= amax), axis=1)
    in_b = np.all((pts >= bmin) & (pts <= bmax), axis=1)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


# -- tube-based association score -------------------------------------------


def brute_force_s_assoc(gt_frames, pred_frames, things_classes,
                        min_points: int = 1) -> float:
    """Association score by explicit tube enumeration, one sequence.

    ``gt_frames`` / ``pred_frames`` hold (semantic, instance) pairs per
    frame. Ground-truth and prediction instances below ``min_points``
    points in a frame are skipped for that frame; prediction tube sizes
    are keyed per class of the prediction semantics, intersections are
    class-agnostic on the prediction side.
    """
    gt_tubes = {}      # (class, gt id) -> size
    pred_tubes = {}    # pred id -> size
    overlaps = {}      # (class, gt id, pred id) -> count

    for (gt_sem, gt_inst), (pred_sem, pred_inst) in zip(gt_frames, pred_frames):
        gt_sem = list(map(int, gt_sem))
        gt_inst = list(map(int, gt_inst))
        pred_sem = list(map(int, pred_sem))
        pred_inst = list(map(int, pred_inst))
        n = len(gt_sem)
        for cl in sorted(things_classes):
            gt_counts = {}
            pred_counts = {}
            for i in range(n):
                if gt_sem[i] == 0:
                    continue
                if gt_sem[i] == cl and gt_inst[i] > 0:
                    gt_counts[gt_inst[i]] = gt_counts.get(gt_inst[i], 0) + 1
                if pred_sem[i] == cl and pred_inst[i] > 0:
                    pred_counts[pred_inst[i]] = pred_counts.get(pred_inst[i], 0) + 1
            kept_gt = {g for g, c in gt_counts.items() if c >= min_points}
            for g in kept_gt:
                gt_tubes[(cl, g)] = gt_tubes.get((cl, g), 0) + gt_counts[g]
            for p, c in pred_counts.items():
                if c >= min_points:
                    pred_tubes[p] = pred_tubes.get(p, 0) + c
            for i in range(n):
                if gt_sem[i] != cl or gt_sem[i] == 0:
                    continue
                if gt_inst[i] in kept_gt and pred_inst[i] > 0:
                    key = (cl, gt_inst[i], pred_inst[i])
                    overlaps[key] = overlaps.get(key, 0) + 1

    if not gt_tubes:
        return float("nan")
    total = 0.0
    for (cl, g), t_size in gt_tubes.items():
        inner = 0.0
        for (cl2, g2, p), ovl in overlaps.items():
            if cl2 != cl or g2 != g or p not in pred_tubes:
                continue
            s_size = pred_tubes[p]
            inner += ovl * (ovl / (t_size + s_size - ovl))
        total += inner / t_size
    return total / len(gt_tubes)

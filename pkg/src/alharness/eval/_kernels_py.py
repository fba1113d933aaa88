"""Pure-Python evaluation kernels, used when the compiled extension is absent.

Operation order mirrors ``_kernels.pyx`` so both give identical floats.
"""
from __future__ import annotations

import numpy as np


def _iou(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1):
    iw = (ax1 if ax1 < bx1 else bx1) - (ax0 if ax0 > bx0 else bx0)
    if iw <= 0:
        return 0.0
    ih = (ay1 if ay1 < by1 else by1) - (ay0 if ay0 > by0 else by0)
    if ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def iou_matrix(a, b):
    a_rows = np.asarray(a, dtype=np.float64).tolist()
    b_rows = np.asarray(b, dtype=np.float64).tolist()
    out = np.zeros((len(a_rows), len(b_rows)), dtype=np.float64)
    for i, ra in enumerate(a_rows):
        for j, rb in enumerate(b_rows):
            out[i, j] = _iou(*ra, *rb)
    return out


def match_image(dets, gts, difficult, thr):
    det_rows = np.asarray(dets, dtype=np.float64).tolist()
    gt_rows = np.asarray(gts, dtype=np.float64).tolist()
    hard = [bool(x) for x in np.asarray(difficult).tolist()]
    taken = [False] * len(gt_rows)
    flags = np.zeros(len(det_rows), dtype=np.int8)
    matched = np.full(len(det_rows), -1, dtype=np.int64)
    for i, d in enumerate(det_rows):
        best, best_iou, hit_difficult = -1, -1.0, False
        for j, g in enumerate(gt_rows):
            v = _iou(*d, *g)
            if hard[j]:
                if v >= thr:
                    hit_difficult = True
            elif not taken[j] and v > best_iou:
                best_iou, best = v, j
        if best >= 0 and best_iou >= thr:
            flags[i], matched[i] = 1, best
            taken[best] = True
        elif hit_difficult:
            flags[i] = -1
    return flags, matched


def ap_all_points(flags, n_gt):
    flags = np.asarray(flags).tolist()
    prec = []
    tp = 0
    for i, f in enumerate(flags):
        if f == 1:
            tp += 1
        prec.append(tp / (i + 1))
    env = 0.0
    for i in range(len(prec) - 1, -1, -1):
        if prec[i] > env:
            env = prec[i]
        prec[i] = env
    total = 0.0
    for f, p in zip(flags, prec):
        if f == 1:
            total += p
    return total / n_gt


def ap_11pt(flags, n_gt):
    best = [0.0] * 11
    tp = 0
    for i, f in enumerate(np.asarray(flags).tolist()):
        if f == 1:
            tp += 1
        p = tp / (i + 1)
        r = tp / n_gt
        for t in range(11):
            if r >= t / 10.0 and p > best[t]:
                best[t] = p
    total = 0.0
    for b in best:
        total += b
    return total / 11.0

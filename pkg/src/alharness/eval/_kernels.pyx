# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled evaluation kernels.

Must stay numerically identical to ``_kernels_py``: same operation order,
same tie rules.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _iou(double ax0, double ay0, double ax1, double ay1,
                        double bx0, double by0, double bx1, double by1) nogil:
    cdef double iw = (ax1 if ax1 < bx1 else bx1) - (ax0 if ax0 > bx0 else bx0)
    if iw <= 0:
        return 0.0
    cdef double ih = (ay1 if ay1 < by1 else by1) - (ay0 if ay0 > by0 else by0)
    if ih <= 0:
        return 0.0
    cdef double inter = iw * ih
    cdef double union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def iou_matrix(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = _iou(a[i, 0], a[i, 1], a[i, 2], a[i, 3],
                               b[j, 0], b[j, 1], b[j, 2], b[j, 3])
    return out


def match_image(const double[:, ::1] dets, const double[:, ::1] gts,
                const unsigned char[::1] difficult, double thr):
    """Greedy matching of confidence-sorted detections to ground truth.

    Returns ``(flags, matched)``: flag 1 = true positive, 0 = false positive,
    -1 = ignored (overlaps only difficult ground truth).
    """
    cdef Py_ssize_t n = dets.shape[0], m = gts.shape[0], i, j, best
    cdef double v, best_iou
    cdef bint hit_difficult
    flags_arr = np.zeros(n, dtype=np.int8)
    matched_arr = np.full(n, -1, dtype=np.int64)
    taken_arr = np.zeros(m, dtype=np.uint8)
    cdef signed char[::1] flags = flags_arr
    cdef long long[::1] matched = matched_arr
    cdef unsigned char[::1] taken = taken_arr
    with nogil:
        for i in range(n):
            best = -1
            best_iou = -1.0
            hit_difficult = False
            for j in range(m):
                v = _iou(dets[i, 0], dets[i, 1], dets[i, 2], dets[i, 3],
                         gts[j, 0], gts[j, 1], gts[j, 2], gts[j, 3])
                if difficult[j]:
                    if v >= thr:
                        hit_difficult = True
                elif not taken[j] and v > best_iou:
                    best_iou = v
                    best = j
            if best >= 0 and best_iou >= thr:
                flags[i] = 1
                matched[i] = best
                taken[best] = 1
            elif hit_difficult:
                flags[i] = -1
            else:
                flags[i] = 0
    return flags_arr, matched_arr


def ap_all_points(const signed char[::1] flags, Py_ssize_t n_gt):
    cdef Py_ssize_t n = flags.shape[0], i
    cdef long long tp = 0
    cdef double env = 0.0, total = 0.0
    prec_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] prec = prec_arr
    with nogil:
        for i in range(n):
            if flags[i] == 1:
                tp += 1
            prec[i] = <double>tp / <double>(i + 1)
        for i in range(n - 1, -1, -1):
            if prec[i] > env:
                env = prec[i]
            prec[i] = env
        for i in range(n):
            if flags[i] == 1:
                total += prec[i]
    return total / <double>n_gt


def ap_11pt(const signed char[::1] flags, Py_ssize_t n_gt):
    cdef Py_ssize_t n = flags.shape[0], i, t
    cdef long long tp = 0
    cdef double p, r, total = 0.0
    best_arr = np.zeros(11, dtype=np.float64)
    cdef double[::1] best = best_arr
    with nogil:
        for i in range(n):
            if flags[i] == 1:
                tp += 1
            p = <double>tp / <double>(i + 1)
            r = <double>tp / <double>n_gt
            for t in range(11):
                if r >= <double>t / 10.0 and p > best[t]:
                    best[t] = p
        for t in range(11):
            total += best[t]
    return total / 11.0

# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled k-nearest-neighbor vote kernel.

Semantics are identical to swarmfe._knn_py.predict_remapped: Euclidean
distance, distance ties broken by lower training-row index, class-vote ties
broken by the tied class appearing earliest in the neighbor list.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def predict_remapped(const double[:, ::1] train_x, const long[::1] train_y,
                     const double[:, ::1] query_x, int k, int n_classes):
    """Predict class codes (0..n_classes-1) for each query row."""
    cdef Py_ssize_t n = train_x.shape[0]
    cdef Py_ssize_t m = train_x.shape[1]
    cdef Py_ssize_t q = query_x.shape[0]
    cdef Py_ssize_t i, j, f, pos, slot
    cdef double d, diff, best_d
    cdef long cls, best_cls
    cdef int count, best_count

    out = np.empty(q, dtype=np.int64)
    cdef long[::1] out_v = out
    # k-best kept sorted ascending by (distance, train index)
    cdef double[::1] nd = np.empty(k, dtype=np.float64)
    cdef long[::1] ni = np.empty(k, dtype=np.int64)
    cdef int[::1] votes = np.zeros(n_classes, dtype=np.int32)
    cdef long[::1] first_seen = np.empty(n_classes, dtype=np.int64)

    with nogil:
        for i in range(q):
            for slot in range(k):
                nd[slot] = 1e308
                ni[slot] = n
            for j in range(n):
                d = 0.0
                for f in range(m):
                    diff = train_x[j, f] - query_x[i, f]
                    d += diff * diff
                # strict < keeps the earlier index on exact ties
                if d < nd[k - 1]:
                    pos = k - 1
                    while pos > 0 and nd[pos - 1] > d:
                        nd[pos] = nd[pos - 1]
                        ni[pos] = ni[pos - 1]
                        pos -= 1
                    nd[pos] = d
                    ni[pos] = j
            for cls in range(n_classes):
                votes[cls] = 0
                first_seen[cls] = k
            for slot in range(k):
                cls = train_y[ni[slot]]
                votes[cls] += 1
                if first_seen[cls] == k:
                    first_seen[cls] = slot
            best_cls = -1
            best_count = -1
            for cls in range(n_classes):
                count = votes[cls]
                if count > best_count or (count == best_count and
                                          first_seen[cls] < first_seen[best_cls]):
                    best_cls = cls
                    best_count = count
            out_v[i] = best_cls
    return out

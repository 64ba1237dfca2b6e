"""Pure-numpy fallback for the KNN vote kernel.

Mirrors the compiled kernel's tie rules exactly: distance ties go to the
lower training-row index (stable argsort), class-vote ties go to the class
appearing earliest among the k neighbors.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 256  # queries per distance-matrix block, bounds memory at n*_CHUNK*8


def predict_remapped(train_x: np.ndarray, train_y: np.ndarray,
                     query_x: np.ndarray, k: int, n_classes: int) -> np.ndarray:
    out = np.empty(query_x.shape[0], dtype=np.int64)
    for start in range(0, query_x.shape[0], _CHUNK):
        block = query_x[start:start + _CHUNK]
        diffs = train_x[None, :, :] - block[:, None, :]
        d2 = np.einsum("qnm,qnm->qn", diffs, diffs)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for row, top in enumerate(order):
            neighbor_classes = train_y[top]
            votes = np.bincount(neighbor_classes, minlength=n_classes)
            best = votes.max()
            tied = np.flatnonzero(votes == best)
            if len(tied) == 1:
                out[start + row] = tied[0]
            else:
                # earliest neighbor belonging to a tied class wins
                for cls in neighbor_classes:
                    if votes[cls] == best:
                        out[start + row] = cls
                        break
    return out

"""Gini split search, the training hot loop.

Two interchangeable implementations: a numba ``@njit`` kernel and a pure
numpy fallback.  Selection happens once at import: set ``MALCDF_NO_NUMBA=1``
to force the numpy path (or it is used automatically when numba is not
installed).  Both follow the same candidate rule, thresholds at midpoints
between consecutive distinct sorted feature values, with strict-improvement
tie-breaking, so they pick identical splits.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("MALCDF_NO_NUMBA", "") == "1"


def _best_split_numpy(X: np.ndarray, y: np.ndarray, feature_indices: np.ndarray):
    n = X.shape[0]
    best_feature = -1
    best_threshold = 0.0
    best_impurity = np.inf
    total_attack = int(y.sum())
    for f in feature_indices:
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y[order]
        prefix_attack = np.cumsum(sy)
        # Candidate split after position i iff the value changes there.
        cut = np.nonzero(sv[:-1] < sv[1:])[0]
        if cut.size == 0:
            continue
        n_left = (cut + 1).astype(np.float64)
        n_right = n - n_left
        a_left = prefix_attack[cut].astype(np.float64)
        a_right = total_attack - a_left
        p_left = a_left / n_left
        p_right = a_right / n_right
        gini_left = 1.0 - p_left * p_left - (1.0 - p_left) * (1.0 - p_left)
        gini_right = 1.0 - p_right * p_right - (1.0 - p_right) * (1.0 - p_right)
        weighted = (n_left * gini_left + n_right * gini_right) / n
        j = int(np.argmin(weighted))
        if weighted[j] < best_impurity:
            best_impurity = float(weighted[j])
            best_feature = int(f)
            best_threshold = float((sv[cut[j]] + sv[cut[j] + 1]) / 2.0)
    return best_feature, best_threshold, best_impurity


def _best_split_loops(X, y, feature_indices):  # compiled by numba when available
    n = X.shape[0]
    best_feature = -1
    best_threshold = 0.0
    best_impurity = np.inf
    total_attack = 0
    for i in range(n):
        total_attack += y[i]
    for k in range(feature_indices.shape[0]):
        f = feature_indices[k]
        order = np.argsort(X[:, f], kind="mergesort")
        attack_so_far = 0
        for i in range(n - 1):
            attack_so_far += y[order[i]]
            lo = X[order[i], f]
            hi = X[order[i + 1], f]
            if lo >= hi:
                continue
            n_left = float(i + 1)
            n_right = float(n - i - 1)
            a_left = float(attack_so_far)
            a_right = float(total_attack - attack_so_far)
            p_left = a_left / n_left
            p_right = a_right / n_right
            gini_left = 1.0 - p_left * p_left - (1.0 - p_left) * (1.0 - p_left)
            gini_right = 1.0 - p_right * p_right - (1.0 - p_right) * (1.0 - p_right)
            weighted = (n_left * gini_left + n_right * gini_right) / n
            if weighted < best_impurity:
                best_impurity = weighted
                best_feature = f
                best_threshold = (lo + hi) / 2.0
    return best_feature, best_threshold, best_impurity


USING_NUMBA = False
if not _FORCE_NUMPY:
    try:
        from numba import njit

        _best_split_numba = njit(cache=True)(_best_split_loops)
        USING_NUMBA = True
    except ImportError:
        pass


def best_split(X: np.ndarray, y: np.ndarray, feature_indices: np.ndarray):
    """Best (feature, threshold) over the candidate features by weighted
    Gini impurity; returns (-1, 0.0, inf) when no feature admits a split."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    feature_indices = np.ascontiguousarray(feature_indices, dtype=np.int64)
    if USING_NUMBA:
        return _best_split_numba(X, y, feature_indices)
    return _best_split_numpy(X, y, feature_indices)


def gini(y: np.ndarray) -> float:
    """Gini impurity of a boolean label vector."""
    n = y.shape[0]
    if n == 0:
        return 0.0
    p = float(np.sum(y)) / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)

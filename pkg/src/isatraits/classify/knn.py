"""k-nearest-neighbors with Euclidean distance and majority vote.

Tie handling: distance ties rank by lower training index (stable sort);
vote ties go to the class of the nearest neighbor among the tied classes.
"""

from __future__ import annotations

from typing import Any

import numpy as np


def train(X: np.ndarray, y: np.ndarray, k: int) -> dict[str, Any]:
    return {"train_x": X.copy(), "train_y": y.copy(), "k": int(k)}


def predict_indices(params: dict[str, Any], Q: np.ndarray, n_classes: int) -> np.ndarray:
    X = params["train_x"]
    y = params["train_y"]
    k = min(params["k"], X.shape[0])

    # Squared distances via (q - x)^2 = |q|^2 - 2 q.x + |x|^2; identical
    # training rows still produce identical floats, so ties stay exact.
    d2 = (
        np.einsum("ij,ij->i", Q, Q)[:, None]
        - 2.0 * (Q @ X.T)
        + np.einsum("ij,ij->i", X, X)[None, :]
    )

    out = np.empty(Q.shape[0], dtype=np.int64)
    for row in range(Q.shape[0]):
        order = np.argsort(d2[row], kind="stable")
        neighbors = y[order[:k]]
        counts = np.bincount(neighbors, minlength=n_classes)
        best = counts.max()
        tied = counts == best
        if tied.sum() == 1:
            out[row] = int(np.argmax(counts))
        else:
            for label in neighbors:  # nearest-first
                if tied[label]:
                    out[row] = int(label)
                    break
    return out

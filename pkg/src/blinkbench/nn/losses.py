"""Binary cross-entropy with epsilon stabilization."""

import numpy as np

CLAMP_EPS = 1e-12


def bce_loss(prediction, label):
    """-[y*ln(p) + (1-y)*ln(1-p)] with p clamped to [1e-12, 1 - 1e-12].

    Accepts scalars or same-shaped arrays; returns the same shape.
    """
    p = np.clip(np.asarray(prediction, dtype=np.float64), CLAMP_EPS, 1.0 - CLAMP_EPS)
    y = np.asarray(label, dtype=np.float64)
    out = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(out) if out.ndim == 0 else out


def mean_bce(predictions, labels):
    return float(np.mean(bce_loss(predictions, labels)))

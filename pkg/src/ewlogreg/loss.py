"""Scalar logistic primitives shared by every other module.

All functions accept scalars or numpy arrays and work in float64.
"""

import numpy as np


def sigmoid(z):
    """Numerically stable logistic function ``1 / (1 + exp(-z))``."""
    z = np.asarray(z, dtype=np.float64)
    # exp is only ever taken of a non-positive number
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0, e) / (1.0 + e)
    return out[()] if out.ndim == 0 else out


def logistic_loss(z):
    """``-log sigmoid(z)`` where the caller supplies the signed score ``z = y * <theta, x>``."""
    z = np.asarray(z, dtype=np.float64)
    # log1p(exp(-|z|)) + max(-z, 0); about 3x faster than logaddexp
    if z.ndim == 0:
        return float(np.log1p(np.exp(-abs(z))) + max(-z, 0.0))
    out = np.exp(-np.abs(z))
    np.log1p(out, out=out)
    out += np.maximum(-z, 0.0)
    return out


def loss_grad_scalar(z):
    """Derivative of :func:`logistic_loss`, i.e. ``-(1 - sigmoid(z)) = -sigmoid(-z)``."""
    return -sigmoid(-np.asarray(z, dtype=np.float64))


def smooth(p, alpha):
    """Shrink a probability towards 1/2: ``(1 - alpha) p + alpha / 2``.

    Raises:
        ValueError: if ``alpha`` is outside ``[0, 1/2]``.
    """
    if not 0.0 <= alpha <= 0.5:
        raise ValueError(f"smoothing level must lie in [0, 1/2], got {alpha}")
    p = np.asarray(p, dtype=np.float64)
    out = (1.0 - alpha) * p + 0.5 * alpha
    return out[()] if out.ndim == 0 else out

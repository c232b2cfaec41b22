"""Binary logistic loss, its gradient and smoothness constants.

All functions take a ``view``: anything exposing a CSR design matrix ``X``
and a +-1 label vector ``y`` (:class:`~adaptive_erm.data.SampleView` or
:class:`~adaptive_erm.data.SparseDataset`).
"""
import math
import warnings

import numpy as np
from scipy.special import expit

__all__ = [
    "DegenerateDataWarning",
    "softplus",
    "logistic_loss",
    "logistic_grad",
    "loss_and_grad",
    "smoothness_constant",
    "lipschitz_constant",
]

SMOOTHNESS_FLOOR = 1e-12
SAFETY_FACTOR = 1.01


class DegenerateDataWarning(UserWarning):
    """The design matrix is all zeros; the smoothness floor is returned."""


def softplus(z):
    """log(1 + exp(z)) in overflow-safe form."""
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _check_dims(w, view):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != view.X.shape[1]:
        raise ValueError(f"weight vector has shape {w.shape}, expected "
                         f"({view.X.shape[1]},)")
    if view.X.shape[0] < 1:
        raise ValueError("empty sample")
    return w


def _mean(values):
    # exact summation: reproducible regardless of reduction order
    return math.fsum(values.tolist()) / values.shape[0]


def logistic_loss(w, view):
    """Mean of softplus(-y_i <x_i, w>) over the rows of ``view``."""
    w = _check_dims(w, view)
    return _mean(softplus(-view.y * (view.X @ w)))


def logistic_grad(w, view):
    w = _check_dims(w, view)
    z = -view.y * (view.X @ w)
    coef = -expit(z) * view.y / view.X.shape[0]
    return view.X.T @ coef


def loss_and_grad(w, view):
    """Loss and gradient sharing one pass over the margins."""
    w = _check_dims(w, view)
    z = -view.y * (view.X @ w)
    coef = -expit(z) * view.y / view.X.shape[0]
    return _mean(softplus(z)), view.X.T @ coef


def smoothness_constant(view, tol=1e-6, max_iter=1000, seed=0):
    """Upper estimate of the gradient Lipschitz constant, lambda_max(X^T X) / (4m).

    The top eigenvalue of the Gram operator is found by matrix-free power
    iteration (Rayleigh quotient) and inflated by a 1.01 safety factor.
    An all-zero design yields ``1e-12`` and a :class:`DegenerateDataWarning`.
    """
    X = view.X
    m = X.shape[0]
    v = np.random.default_rng(seed).standard_normal(X.shape[1])
    v /= np.abs(v).max()
    lam = 0.0
    for _ in range(max_iter):
        u = X.T @ (X @ v)
        # max-abs normalisation keeps intermediates finite for large entries
        lam_new = float(v @ u) / float(v @ v)
        scale = np.abs(u).max() if u.size else 0.0
        if not np.isfinite(scale) or not np.isfinite(lam_new):
            raise ValueError("Gram operator overflows float64; rescale the data")
        if scale == 0.0:
            break
        v = u / scale
        if lam_new > 0 and abs(lam_new - lam) < tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    if lam <= 0.0:
        warnings.warn("all-zero design matrix; using smoothness floor",
                      DegenerateDataWarning, stacklevel=2)
        return SMOOTHNESS_FLOOR
    return SAFETY_FACTOR * lam / (4.0 * m)


def lipschitz_constant(view):
    """max_i ||x_i||, the Lipschitz constant of each per-sample loss.

    Diagnostic only; no solver consumes it.
    """
    sq = np.asarray(view.X.multiply(view.X).sum(axis=1)).ravel()
    return float(np.sqrt(sq.max())) if sq.size else 0.0

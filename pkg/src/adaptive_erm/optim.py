"""Full-batch gradient descent and mini-batch ADAM with fixed iteration budgets.

Cost is counted in single-sample gradient evaluations: one GD iteration or
one ADAM epoch on a view of size m costs m units.

A ``trace_sink`` is any callable ``sink(iteration, grad_evals, w)`` invoked
after every GD iteration or ADAM epoch. ``w`` is a fresh copy.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .loss import loss_and_grad

__all__ = [
    "DivergenceError",
    "OptimizerState",
    "GDConfig",
    "AdamConfig",
    "run_gd",
    "run_adam",
    "epoch_batches",
    "epoch_permutation",
]

TraceSink = Callable[[int, int, np.ndarray], None]


class DivergenceError(ArithmeticError):
    """A solver produced a non-finite loss or iterate."""


@dataclass
class OptimizerState:
    w: np.ndarray
    grad_evals: int = 0
    iteration: int = 0
    adam_m: Optional[np.ndarray] = None
    adam_v: Optional[np.ndarray] = None
    adam_t: int = 0


@dataclass(frozen=True)
class GDConfig:
    step_size: float

    def __post_init__(self):
        if not (np.isfinite(self.step_size) and self.step_size > 0):
            raise ValueError(f"step_size must be finite and > 0, "
                             f"got {self.step_size}")


@dataclass(frozen=True)
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eta: float = 0.01
    epsilon: float = 1e-8
    batch_size: int = 5
    shuffle_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.beta1 < 1:
            raise ValueError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0 <= self.beta2 < 1:
            raise ValueError(f"beta2 must be in [0, 1), got {self.beta2}")
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError(f"batch_size must be a positive integer, "
                             f"got {self.batch_size}")


def _check_budget(budget_T):
    if int(budget_T) != budget_T or budget_T < 0:
        raise ValueError(f"budget must be a nonnegative integer, got {budget_T}")
    return int(budget_T)


def run_gd(w0, view, budget_T, cfg, trace_sink=None, *, grad_evals=0,
           iteration=0):
    """Run exactly ``budget_T`` steps of ``w <- w - step_size * grad(w)``.

    ``grad_evals`` and ``iteration`` are starting counters, so consecutive
    calls can share one cost axis.

    Raises
    ------
    DivergenceError
        If the loss becomes non-finite, which means the step size is too
        large for the data.
    """
    budget_T = _check_budget(budget_T)
    w = np.array(w0, dtype=np.float64)
    m = view.X.shape[0]
    for _ in range(budget_T):
        loss, g = loss_and_grad(w, view)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"non-finite loss at GD iteration {iteration}")
        with np.errstate(over="ignore", invalid="ignore"):
            w = w - cfg.step_size * g
        grad_evals += m
        iteration += 1
        if not np.all(np.isfinite(w)):
            raise DivergenceError(
                f"non-finite iterate at GD iteration {iteration}")
        if trace_sink is not None:
            trace_sink(iteration, grad_evals, w.copy())
    return OptimizerState(w=w, grad_evals=grad_evals, iteration=iteration)


def epoch_permutation(n, seed, epoch):
    return np.random.default_rng([seed, epoch]).permutation(n)


def epoch_batches(n, batch_size, seed, epoch):
    """Index batches of one epoch; the permutation depends on (seed, epoch).

    The last batch is smaller when ``batch_size`` does not divide ``n``.
    """
    perm = epoch_permutation(n, seed, epoch)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def _batch_grad(X, y, lo, hi, w):
    # mean logistic gradient over rows lo:hi of CSR matrix X
    s, e = X.indptr[lo], X.indptr[hi]
    data, ind = X.data[s:e], X.indices[s:e]
    rows = np.repeat(np.arange(hi - lo), np.diff(X.indptr[lo:hi + 1]))
    margins = np.bincount(rows, weights=data * w[ind], minlength=hi - lo)
    yb = y[lo:hi]
    coef = -expit(-yb * margins) * yb / (hi - lo)
    return np.bincount(ind, weights=data * coef[rows], minlength=w.shape[0])


def run_adam(w0, view, budget_T, cfg, trace_sink=None, *, grad_evals=0,
             iteration=0):
    """Run ``budget_T`` epochs of bias-corrected mini-batch ADAM.

    ``iteration`` counts epochs and is mixed into each epoch's shuffle, so
    resuming with a larger ``iteration`` never repeats a permutation. Moment
    estimates start at zero on every call.
    """
    budget_T = _check_budget(budget_T)
    w = np.array(w0, dtype=np.float64)
    X, y = view.X, view.y
    n = X.shape[0]
    bs = int(cfg.batch_size)
    m_t = np.zeros_like(w)
    v_t = np.zeros_like(w)
    t = 0
    b1, b2 = cfg.beta1, cfg.beta2
    for _ in range(budget_T):
        perm = epoch_permutation(n, cfg.shuffle_seed, iteration)
        Xp, yp = X[perm], y[perm]
        for lo in range(0, n, bs):
            g = _batch_grad(Xp, yp, lo, min(lo + bs, n), w)
            t += 1
            m_t = b1 * m_t + (1.0 - b1) * g
            v_t = b2 * v_t + (1.0 - b2) * (g * g)
            m_hat = m_t / (1.0 - b1 ** t)
            v_hat = v_t / (1.0 - b2 ** t)
            w = w - cfg.eta * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        grad_evals += n
        iteration += 1
        if not np.all(np.isfinite(w)):
            raise DivergenceError(
                f"non-finite iterate after ADAM epoch {iteration}")
        if trace_sink is not None:
            trace_sink(iteration, grad_evals, w.copy())
    return OptimizerState(w=w, grad_evals=grad_evals, iteration=iteration,
                          adam_m=m_t, adam_v=v_t, adam_t=t)

"""Adaptive sample-size ERM driver.

Solve the ERM on a small prefix of the data only up to its statistical
accuracy V_m = m^-alpha, then double the sample and warm-start the next
solve from the previous solution. The per-stage iteration budget follows
from the sublinear rate 1/T^zeta of the inner solver.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import SampleView
from .loss import smoothness_constant
from .optim import AdamConfig, GDConfig, run_adam, run_gd

__all__ = [
    "ScheduleConfig",
    "StageReport",
    "statistical_accuracy",
    "theorem1_bound",
    "lemma1_bound",
    "iteration_budget",
    "growth_iteration_budget",
    "stage_budget",
    "stage_schedule",
    "schedule_cost",
    "adaptive_solve",
    "default_zeta",
    "default_m0",
    "SOLVERS",
]

SOLVERS = ("gd", "adam")
_DEFAULT_ZETA = {"gd": 1.0, "adam": 0.5}


def default_zeta(solver):
    """Sublinear rate exponent: 1 for GD (O(1/T)), 0.5 for ADAM (O(1/sqrt T))."""
    return _DEFAULT_ZETA[solver]


def default_m0(n_samples):
    return min(n_samples, max(64, n_samples // 64))


@dataclass(frozen=True)
class ScheduleConfig:
    """Parameters of the doubling schedule.

    ``stage0_multiplier`` inflates the first stage's budget: that stage
    starts from zero weights rather than from a solution that is already
    within statistical accuracy.
    """

    alpha: float = 0.5
    zeta: float = 1.0
    m0: int = 64
    growth: float = 2.0
    stage0_multiplier: int = 3

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must be in [0, 0.5], got {self.alpha}")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be > 0, got {self.zeta}")
        if int(self.m0) != self.m0 or self.m0 < 1:
            raise ValueError(f"m0 must be a positive integer, got {self.m0}")
        if not self.growth > 1:
            raise ValueError(f"growth must be > 1, got {self.growth}")
        if int(self.stage0_multiplier) != self.stage0_multiplier \
                or self.stage0_multiplier < 1:
            raise ValueError("stage0_multiplier must be a positive integer")


@dataclass
class StageReport:
    stage_index: int
    sample_size: int
    budget_T: int
    # None for stage 0, which has no previous solution to bound
    entry_suboptimality_bound: Optional[float]
    grad_evals_spent: int
    w_out: np.ndarray = field(repr=False)


def statistical_accuracy(n, alpha):
    """V_n = n^-alpha."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    return float(n) ** -alpha


def theorem1_bound(delta_m, m, n, alpha):
    """Expected suboptimality on the n-sample ERM of a delta_m-accurate
    solution of the nested m-sample ERM:

        delta_m + (n - m)/n * (2 V_{n-m} + V_m + V_n)
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if n < m:
        raise ValueError(f"n must be >= m, got n={n} < m={m}")
    if delta_m < 0:
        raise ValueError(f"delta_m must be >= 0, got {delta_m}")
    if n == m:
        return float(delta_m)
    V = statistical_accuracy
    return delta_m + (n - m) / n * (2.0 * V(n - m, alpha) + V(m, alpha)
                                    + V(n, alpha))


def lemma1_bound(delta_m, m, alpha):
    """theorem1_bound specialised to n = 2m: delta_m + (3 + 2^-alpha)/2 * V_m."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if delta_m < 0:
        raise ValueError(f"delta_m must be >= 0, got {delta_m}")
    return delta_m + 0.5 * (3.0 + 2.0 ** -alpha) * statistical_accuracy(m, alpha)


def iteration_budget(alpha, zeta):
    """Iterations (before the log factor) taking a V_m-accurate warm start
    to V_2m accuracy under a 1/T^zeta rate: (2^alpha (5/2 + 2^-(alpha+1)))^(1/zeta).
    """
    if not zeta > 0:
        raise ValueError(f"zeta must be > 0, got {zeta}")
    return (2.0 ** alpha * (2.5 + 2.0 ** -(alpha + 1.0))) ** (1.0 / zeta)


def growth_iteration_budget(alpha, zeta, m, n):
    """Generalisation of :func:`iteration_budget` to arbitrary n > m.

    Solves (1/T^zeta) * theorem1_bound(V_m, m, n) <= V_n for T; equals
    ``iteration_budget`` when n = 2m.
    """
    if not zeta > 0:
        raise ValueError(f"zeta must be > 0, got {zeta}")
    ratio = (theorem1_bound(statistical_accuracy(m, alpha), m, n, alpha)
             / statistical_accuracy(n, alpha))
    return ratio ** (1.0 / zeta)


def stage_budget(alpha, zeta, n):
    """ceil(iteration_budget(alpha, zeta) * ln n), at least 1."""
    if n < 2:
        raise ValueError(f"stage budget needs n >= 2, got {n}")
    return max(1, math.ceil(iteration_budget(alpha, zeta) * math.log(n)))


def _stage0_budget(cfg):
    base = stage_budget(cfg.alpha, cfg.zeta, cfg.m0) if cfg.m0 >= 2 else 1
    return base * int(cfg.stage0_multiplier)


def stage_schedule(n_samples, cfg):
    """List of ``(sample_size, budget_T)`` pairs, one per stage.

    Sizes grow as ``min(ceil(growth * m), n_samples)`` and the last stage
    covers the whole dataset.
    """
    if cfg.m0 > n_samples:
        raise ValueError(f"m0={cfg.m0} exceeds n_samples={n_samples}")
    stages = [(int(cfg.m0), _stage0_budget(cfg))]
    m = int(cfg.m0)
    while m < n_samples:
        n = min(max(math.ceil(cfg.growth * m), m + 1), n_samples)
        if cfg.growth == 2:
            T = stage_budget(cfg.alpha, cfg.zeta, n)
        else:
            T = max(1, math.ceil(
                growth_iteration_budget(cfg.alpha, cfg.zeta, m, n)
                * math.log(n)))
        stages.append((n, T))
        m = n
    return stages


def schedule_cost(schedule):
    """Total single-sample gradient evaluations of a schedule."""
    return sum(n * T for n, T in schedule)


def _entry_bound(cfg, m, n):
    v_m = statistical_accuracy(m, cfg.alpha)
    if n == 2 * m:
        return lemma1_bound(v_m, m, cfg.alpha)
    return theorem1_bound(v_m, m, n, cfg.alpha)


def adaptive_solve(dataset, cfg, solver="gd", solver_cfg=None, trace_sink=None,
                   w0=None):
    """Run the doubling schedule on an already-shuffled ``dataset``.

    Parameters
    ----------
    dataset : SparseDataset
        Rows in the order the prefixes should be taken.
    cfg : ScheduleConfig
    solver : {"gd", "adam"}
    solver_cfg : GDConfig or AdamConfig, optional
        For GD, ``None`` means a per-stage step of 1/L with L estimated on
        the stage's sample. For ADAM, ``None`` means the default AdamConfig.
    trace_sink : callable, optional
        Called as ``sink(stage, sample_size, iteration, grad_evals, w)``
        after every inner iteration (GD step or ADAM epoch). Counters are
        cumulative over stages.
    w0 : array, optional
        Initial weights for stage 0; zeros by default.

    Returns
    -------
    w : ndarray
    reports : list of StageReport
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    if solver == "adam" and solver_cfg is None:
        solver_cfg = AdamConfig()
    schedule = stage_schedule(dataset.n_samples, cfg)
    w = np.zeros(dataset.n_features) if w0 is None else np.array(w0, float)
    grad_evals = 0
    iteration = 0
    reports = []
    prev_n = None
    for k, (n, T) in enumerate(schedule):
        view = SampleView(dataset, n)
        sink = None
        if trace_sink is not None:
            def sink(it, ge, w_it, _k=k, _n=n):
                trace_sink(_k, _n, it, ge, w_it)
        if solver == "gd":
            step_cfg = solver_cfg or GDConfig(1.0 / smoothness_constant(view))
            state = run_gd(w, view, T, step_cfg, sink,
                           grad_evals=grad_evals, iteration=iteration)
        else:
            state = run_adam(w, view, T, solver_cfg, sink,
                             grad_evals=grad_evals, iteration=iteration)
        reports.append(StageReport(
            stage_index=k,
            sample_size=n,
            budget_T=T,
            entry_suboptimality_bound=(None if prev_n is None
                                       else _entry_bound(cfg, prev_n, n)),
            grad_evals_spent=state.grad_evals - grad_evals,
            w_out=state.w.copy(),
        ))
        w, grad_evals, iteration = state.w, state.grad_evals, state.iteration
        prev_n = n
    return w, reports

"""Adaptive sample-size empirical risk minimization for sublinear solvers."""
from .adaptive import (
    ScheduleConfig,
    StageReport,
    adaptive_solve,
    iteration_budget,
    lemma1_bound,
    stage_budget,
    stage_schedule,
    statistical_accuracy,
    theorem1_bound,
)
from .data import (
    ParseError,
    SampleView,
    SparseDataset,
    convert_mnist_idx,
    dump_libsvm,
    parse_libsvm,
    shuffle,
)
from .estimator import AdaptiveLogisticRegression
from .loss import logistic_grad, logistic_loss, smoothness_constant
from .optim import AdamConfig, DivergenceError, GDConfig, run_adam, run_gd

__version__ = "0.1.0"

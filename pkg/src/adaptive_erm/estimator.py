"""scikit-learn compatible classifier around the adaptive ERM solvers."""
import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .adaptive import (
    SOLVERS,
    ScheduleConfig,
    adaptive_solve,
    default_m0,
    default_zeta,
)
from .bench import fixed_budget
from .data import SparseDataset, shuffle
from .loss import smoothness_constant
from .optim import AdamConfig, GDConfig, run_adam, run_gd


class AdaptiveLogisticRegression(ClassifierMixin, BaseEstimator):
    """Unregularized binary logistic regression trained by GD or ADAM,
    optionally with the adaptive doubling sample schedule.

    Parameters
    ----------
    solver : {"gd", "adam"}, default="gd"
    adaptive : bool, default=True
        Grow the training sample from ``m0`` by doubling, warm-starting each
        stage. If False, train on all samples for ``max_iter`` iterations.
    alpha : float, default=0.5
        Statistical accuracy exponent, V_n = n^-alpha.
    zeta : float, default=None
        Sublinear rate exponent of the solver. None means 1.0 for GD and
        0.5 for ADAM.
    m0 : int, default=None
        Initial sample size; None means ``max(64, n_samples // 64)``.
    growth : float, default=2.0
    stage0_multiplier : int, default=3
    max_iter : int, default=None
        Non-adaptive budget (GD steps or ADAM epochs). None matches the
        gradient-evaluation cost of the adaptive schedule.
    step_size : float, default=None
        GD step; None means 1/L with L estimated from the data.
    learning_rate, beta1, beta2, epsilon, batch_size
        ADAM hyperparameters.
    fit_intercept : bool, default=False
        Append a constant feature. The underlying model has no intercept.
    random_state : int, RandomState instance or None, default=0
        Seeds the row shuffle and ADAM's epoch permutations.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
    coef_ : ndarray of shape (1, n_features)
    intercept_ : ndarray of shape (1,)
    stages_ : list of StageReport
        Empty when ``adaptive=False``.
    n_grad_evals_ : int
        Single-sample gradient evaluations spent.
    n_iter_ : int
        GD steps or ADAM epochs, summed over stages.
    """

    def __init__(self, solver="gd", adaptive=True, alpha=0.5, zeta=None,
                 m0=None, growth=2.0, stage0_multiplier=3, max_iter=None,
                 step_size=None, learning_rate=0.01, beta1=0.9, beta2=0.999,
                 epsilon=1e-8, batch_size=5, fit_intercept=False,
                 random_state=0):
        self.solver = solver
        self.adaptive = adaptive
        self.alpha = alpha
        self.zeta = zeta
        self.m0 = m0
        self.growth = growth
        self.stage0_multiplier = stage0_multiplier
        self.max_iter = max_iter
        self.step_size = step_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def _augment(self, X):
        if not self.fit_intercept:
            return X
        ones = np.ones((X.shape[0], 1))
        if sp.issparse(X):
            return sp.hstack([X, ones], format="csr")
        return np.hstack([X, ones])

    def fit(self, X, y):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, "
                             f"got {self.solver!r}")
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(f"only binary problems are supported; got "
                             f"{self.classes_.shape[0]} classes")
        self.n_features_in_ = X.shape[1]
        y_pm = np.where(y == self.classes_[1], 1.0, -1.0)
        Xa = sp.csr_matrix(self._augment(X), dtype=np.float64, copy=True)
        Xa.sum_duplicates()
        Xa.sort_indices()

        seed = self.random_state
        if not isinstance(seed, (int, np.integer)):
            seed = int(check_random_state(seed).randint(np.iinfo(np.int32).max))
        data = shuffle(SparseDataset(Xa, y_pm), seed)
        n = data.n_samples

        cfg = ScheduleConfig(
            alpha=self.alpha,
            zeta=default_zeta(self.solver) if self.zeta is None else self.zeta,
            m0=default_m0(n) if self.m0 is None else self.m0,
            growth=self.growth,
            stage0_multiplier=self.stage0_multiplier,
        )
        if self.solver == "gd":
            solver_cfg = (None if self.step_size is None
                          else GDConfig(self.step_size))
        else:
            solver_cfg = AdamConfig(beta1=self.beta1, beta2=self.beta2,
                                    eta=self.learning_rate,
                                    epsilon=self.epsilon,
                                    batch_size=self.batch_size,
                                    shuffle_seed=seed)

        if self.adaptive:
            w, self.stages_ = adaptive_solve(data, cfg, self.solver, solver_cfg)
            self.n_grad_evals_ = sum(r.grad_evals_spent for r in self.stages_)
            self.n_iter_ = sum(r.budget_T for r in self.stages_)
        else:
            T = fixed_budget(n, cfg) if self.max_iter is None else self.max_iter
            w0 = np.zeros(data.n_features)
            if self.solver == "gd":
                state = run_gd(w0, data, T, solver_cfg or GDConfig(
                    1.0 / smoothness_constant(data)))
            else:
                state = run_adam(w0, data, T, solver_cfg)
            w = state.w
            self.stages_ = []
            self.n_grad_evals_ = state.grad_evals
            self.n_iter_ = state.iteration

        if self.fit_intercept:
            self.coef_, self.intercept_ = w[None, :-1], w[-1:]
        else:
            self.coef_, self.intercept_ = w[None, :], np.zeros(1)
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected "
                             f"{self.n_features_in_}")
        return np.asarray(X @ self.coef_[0]).ravel() + self.intercept_[0]

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[(scores > 0).astype(int)]

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

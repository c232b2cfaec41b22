"""Experiment harness: reference optima, fixed vs adaptive runs, CSV traces.

Suboptimality is always measured on the full training set against a
reference optimum computed by long gradient descent. Full-loss evaluations
for the trace are not counted as gradient evaluations.
"""
import csv
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .adaptive import (
    ScheduleConfig,
    adaptive_solve,
    default_m0,
    default_zeta,
    schedule_cost,
    stage_schedule,
)
from .loss import logistic_grad, logistic_loss, smoothness_constant
from .optim import AdamConfig, DivergenceError, GDConfig, run_adam, run_gd

__all__ = [
    "METHODS",
    "ReferenceOptimum",
    "TraceRecord",
    "ReferenceMismatchError",
    "compute_reference",
    "save_reference",
    "load_reference",
    "fixed_budget",
    "run_experiment",
    "emit_csv",
    "read_csv",
    "first_crossing",
    "default_schedule",
]

METHODS = ("gd", "adagd", "adam", "adaadam")
CSV_HEADER = ("run_id", "method", "stage", "sample_size", "iteration",
              "grad_evals", "full_loss", "suboptimality")


class ReferenceMismatchError(ValueError):
    """The reference optimum was computed on a different dataset."""


@dataclass
class ReferenceOptimum:
    L_star: float
    w_star: np.ndarray = field(repr=False)
    grad_norm_at_star: float
    iterations_used: int
    threshold: float = 1e-10
    stale: bool = False
    fingerprint: str = ""


@dataclass(frozen=True)
class TraceRecord:
    run_id: str
    method: str
    stage: int
    sample_size: int
    iteration: int
    grad_evals: int
    full_loss: float
    suboptimality: float


def compute_reference(dataset, threshold=1e-10, max_iters=1_000_000):
    """Minimise the full-data loss by GD with step 1/L.

    Stops once ``||grad||_2 <= threshold`` or after ``max_iters`` steps; in
    the latter case the result is flagged ``stale``.

    Raises
    ------
    DivergenceError
        If the iterates become non-finite (the smoothness estimate is wrong).
    """
    if dataset.n_samples < 1:
        raise ValueError("empty dataset")
    step = 1.0 / smoothness_constant(dataset)
    w = np.zeros(dataset.n_features)
    g = logistic_grad(w, dataset)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > threshold and it < max_iters:
        w = w - step * g
        it += 1
        g = logistic_grad(w, dataset)
        gnorm = float(np.linalg.norm(g))
        if not np.isfinite(gnorm):
            raise DivergenceError(f"reference GD diverged at iteration {it}")
    return ReferenceOptimum(
        L_star=logistic_loss(w, dataset),
        w_star=w,
        grad_norm_at_star=gnorm,
        iterations_used=it,
        threshold=threshold,
        stale=gnorm > threshold,
        fingerprint=dataset.fingerprint(),
    )


def save_reference(ref, file):
    """Write ``ref`` as an ``.npz`` archive to a path or binary file object."""
    opened = isinstance(file, (str, bytes)) or hasattr(file, "__fspath__")
    f = open(file, "wb") if opened else file
    try:
        np.savez(f, L_star=ref.L_star, w_star=ref.w_star,
                 grad_norm_at_star=ref.grad_norm_at_star,
                 iterations_used=ref.iterations_used,
                 threshold=ref.threshold, stale=ref.stale,
                 fingerprint=np.array(ref.fingerprint))
    finally:
        if opened:
            f.close()


def load_reference(file):
    with np.load(file, allow_pickle=False) as z:
        return ReferenceOptimum(
            L_star=float(z["L_star"]),
            w_star=z["w_star"].copy(),
            grad_norm_at_star=float(z["grad_norm_at_star"]),
            iterations_used=int(z["iterations_used"]),
            threshold=float(z["threshold"]),
            stale=bool(z["stale"]),
            fingerprint=str(z["fingerprint"]),
        )


def fixed_budget(n_samples, schedule_cfg):
    """Full-data iterations whose cost matches the adaptive schedule's
    (rounded up, so never less)."""
    return math.ceil(schedule_cost(stage_schedule(n_samples, schedule_cfg))
                     / n_samples)


def run_experiment(dataset, method, schedule_cfg, optimizer_cfg, reference,
                   eval_stride=1, sink=None, budget=None, run_id=None):
    """Run one method and return its trace.

    Parameters
    ----------
    dataset : SparseDataset
        Already shuffled; adaptive methods take prefixes in this order.
    method : {"gd", "adagd", "adam", "adaadam"}
    schedule_cfg : ScheduleConfig
        Drives adaptive methods; for fixed methods it only sets the default
        budget, matched to the adaptive run's total gradient evaluations.
    optimizer_cfg : GDConfig, AdamConfig or None
        ``None`` picks step 1/L (GD) or the default AdamConfig.
    reference : ReferenceOptimum
    eval_stride : int
        Emit a record every ``eval_stride`` iterations (GD steps or ADAM
        epochs). The initial and final iterates are always recorded.
    sink : callable, optional
        Receives each TraceRecord as it is produced.
    budget : int, optional
        Overrides the matched budget for fixed methods.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if eval_stride < 1:
        raise ValueError("eval_stride must be >= 1")
    if reference.fingerprint and reference.fingerprint != dataset.fingerprint():
        raise ReferenceMismatchError(
            "reference optimum was computed on a different dataset")
    run_id = run_id or method
    records = []

    def record(stage, n, it, ge, w):
        loss = logistic_loss(w, dataset)
        rec = TraceRecord(run_id, method, stage, n, it, ge, loss,
                          loss - reference.L_star)
        records.append(rec)
        if sink is not None:
            sink(rec)

    last = {}

    def on_iter(stage, n, it, ge, w):
        last.update(stage=stage, n=n, it=it, ge=ge, w=w, emitted=False)
        if it % eval_stride == 0:
            record(stage, n, it, ge, w)
            last["emitted"] = True

    w0 = np.zeros(dataset.n_features)
    solver = "adam" if method in ("adam", "adaadam") else "gd"
    if method in ("adagd", "adaadam"):
        record(0, schedule_cfg.m0, 0, 0, w0)
        adaptive_solve(dataset, schedule_cfg, solver, optimizer_cfg, on_iter)
    else:
        N = dataset.n_samples
        T = fixed_budget(N, schedule_cfg) if budget is None else int(budget)
        record(0, N, 0, 0, w0)

        def fixed_sink(it, ge, w):
            on_iter(0, N, it, ge, w)
        if solver == "gd":
            cfg = optimizer_cfg or GDConfig(1.0 / smoothness_constant(dataset))
            run_gd(w0, dataset, T, cfg, fixed_sink)
        else:
            run_adam(w0, dataset, T, optimizer_cfg or AdamConfig(), fixed_sink)
    if last and not last["emitted"]:
        record(last["stage"], last["n"], last["it"], last["ge"], last["w"])
    return records


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(records, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, name)) for name in CSV_HEADER])


def read_csv(stream):
    types = {f.name: f.type for f in fields(TraceRecord)}
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [TraceRecord(**{k: types[k](v) for k, v in row.items()})
            for row in reader]


def first_crossing(records, level):
    """grad_evals of the first record with suboptimality <= level, else None."""
    for rec in records:
        if rec.suboptimality <= level:
            return rec.grad_evals
    return None


def default_schedule(n_samples, solver="gd", alpha=0.5, zeta=None, m0=None):
    """ScheduleConfig with the solver's default zeta and m0 = max(64, n/64)."""
    return ScheduleConfig(
        alpha=alpha,
        zeta=default_zeta(solver) if zeta is None else zeta,
        m0=default_m0(n_samples) if m0 is None else m0,
    )

"""Monte Carlo study runner: replicate generation, analysis, and aggregation.

Each replicate draws its own random stream from (master_seed, replicate index),
so results are a pure function of the configuration and independent of how
replicates are scheduled across workers. Aggregation is an ordered reduction
by replicate index.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .datagen import RngStream, generate_trial
from .errors import DegenerateTestError, InvalidModelError, InvalidParameterError
from .inference import AnalysisSpec, Method, TIE_METHODS, cox_fit, logrank
from .trial import ScenarioSpec, TrialDesign

#: Cox estimation methods, in reporting order.
COX_KEYS = ("unstrat_cox", "mult_cox", "strat_cox")
_COX_METHODS = (Method.COX_UNSTRATIFIED, Method.COX_MULTIVARIATE, Method.COX_STRATIFIED)

#: Hypothesis tests, in reporting order: the two log-rank tests and the
#: one-sided Wald tests of the three Cox fits.
TEST_KEYS = ("lr", "strat_lr", "mult_cox", "strat_cox", "unstrat_cox")

SE_SCALES = ("log", "hr")


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo study cell: scenario, design, and run controls."""

    scenario: ScenarioSpec
    design: TrialDesign
    replicates: int = 10000
    master_seed: int = 0
    tie_method: str = "efron"
    se_scale: str = "log"
    workers: int | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidParameterError("replicates must be at least 1")
        if self.tie_method not in TIE_METHODS:
            raise InvalidParameterError(f"tie_method must be one of {TIE_METHODS}")
        if self.se_scale not in SE_SCALES:
            raise InvalidParameterError(f"se_scale must be one of {SE_SCALES}")
        if self.master_seed < 0:
            raise InvalidParameterError("master_seed must be nonnegative")


@dataclass(frozen=True)
class ReplicateResult:
    """Per-replicate estimates and test outcomes.

    ``hr`` and ``log_hr_se`` follow COX_KEYS order (NaN when not converged);
    ``reject`` and ``degenerate`` follow TEST_KEYS order. A degenerate test is
    never counted as a rejection.
    """

    hr: tuple[float, ...]
    log_hr_se: tuple[float, ...]
    converged: tuple[bool, ...]
    reject: tuple[bool, ...]
    degenerate: tuple[bool, ...]


@dataclass(frozen=True)
class MethodMetrics:
    """Estimation quality of one Cox method over the usable replicates."""

    avg_bias: float | None
    avg_se: float | None
    mse: float | None
    replicates_used: int
    replicates_excluded: int


@dataclass(frozen=True)
class AggregateMetrics:
    """Study-cell summary: estimation metrics per method, power per test."""

    true_hr: float
    replicates: int
    methods: dict[str, MethodMetrics]
    power: dict[str, float]
    degenerate_counts: dict[str, int]


@dataclass(frozen=True)
class StudyRow:
    """Outcome of one configured study cell; ``error`` set if the row failed."""

    config: SimConfig
    metrics: AggregateMetrics | None
    error: str | None = None


@lru_cache(maxsize=8)
def _z_crit(alpha_one_sided: float) -> float:
    return float(norm.ppf(alpha_one_sided))


def run_replicate(config: SimConfig, index: int) -> ReplicateResult:
    """Generate and analyze one replicate on stream (master_seed, index)."""
    dataset = generate_trial(
        config.design, config.scenario, RngStream(config.master_seed, index))
    alpha = config.design.alpha_one_sided
    zcrit = _z_crit(alpha)

    lr_reject: dict[str, bool] = {}
    lr_degen: dict[str, bool] = {}
    for key, stratified in (("lr", False), ("strat_lr", True)):
        try:
            res = logrank(dataset, stratified=stratified)
            lr_reject[key] = bool(res.z < zcrit)
            lr_degen[key] = False
        except DegenerateTestError:
            lr_reject[key] = False
            lr_degen[key] = True

    hrs, ses, convs, wald_reject_flags, wald_degen = [], [], [], {}, {}
    for key, method in zip(COX_KEYS, _COX_METHODS):
        spec = AnalysisSpec(method, tie_method=config.tie_method, alpha_one_sided=alpha)
        try:
            fit = cox_fit(dataset, spec)
            usable = fit.converged and math.isfinite(fit.treatment_se)
        except InvalidModelError:
            fit, usable = None, False
        if usable:
            hrs.append(fit.treatment_hr)
            ses.append(fit.treatment_se)
            convs.append(True)
            wald_reject_flags[key] = bool(fit.wald_z < zcrit)
            wald_degen[key] = False
        else:
            hrs.append(float("nan"))
            ses.append(float("nan"))
            convs.append(False)
            wald_reject_flags[key] = False
            wald_degen[key] = True

    reject = (lr_reject["lr"], lr_reject["strat_lr"], wald_reject_flags["mult_cox"],
              wald_reject_flags["strat_cox"], wald_reject_flags["unstrat_cox"])
    degen = (lr_degen["lr"], lr_degen["strat_lr"], wald_degen["mult_cox"],
             wald_degen["strat_cox"], wald_degen["unstrat_cox"])
    return ReplicateResult(
        hr=tuple(hrs),
        log_hr_se=tuple(ses),
        converged=tuple(convs),
        reject=reject,
        degenerate=degen,
    )


def aggregate(
    results: list[ReplicateResult], true_hr: float, se_scale: str = "log"
) -> AggregateMetrics:
    """Reduce replicate results to bias/SE/MSE per method and power per test.

    Non-converged fits are excluded from that method's estimation metrics and
    counted; degenerate tests count as non-rejections. Accumulation order is
    the replicate order of ``results``.
    """
    if not results:
        raise InvalidParameterError("no replicate results to aggregate")
    if se_scale not in SE_SCALES:
        raise InvalidParameterError(f"se_scale must be one of {SE_SCALES}")
    n = len(results)
    hr = np.array([r.hr for r in results])
    se = np.array([r.log_hr_se for r in results])
    conv = np.array([r.converged for r in results])
    reject = np.array([r.reject for r in results])
    degen = np.array([r.degenerate for r in results])

    methods: dict[str, MethodMetrics] = {}
    for k, key in enumerate(COX_KEYS):
        mask = conv[:, k]
        used = int(mask.sum())
        if used == 0:
            methods[key] = MethodMetrics(None, None, None, 0, n)
            continue
        h = hr[mask, k]
        s = se[mask, k] if se_scale == "log" else hr[mask, k] * se[mask, k]
        methods[key] = MethodMetrics(
            avg_bias=float(np.mean(h) - true_hr),
            avg_se=float(np.mean(s)),
            mse=float(np.mean((h - true_hr) ** 2)),
            replicates_used=used,
            replicates_excluded=n - used,
        )

    power = {key: float(np.mean(reject[:, j])) for j, key in enumerate(TEST_KEYS)}
    degenerate_counts = {key: int(degen[:, j].sum()) for j, key in enumerate(TEST_KEYS)}
    return AggregateMetrics(
        true_hr=true_hr,
        replicates=n,
        methods=methods,
        power=power,
        degenerate_counts=degenerate_counts,
    )


def _replicate_range(config: SimConfig, lo: int, hi: int) -> list[ReplicateResult]:
    return [run_replicate(config, i) for i in range(lo, hi)]


def _resolve_workers(config: SimConfig, workers: int | None) -> int:
    if workers is None:
        workers = config.workers
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise InvalidParameterError("workers must be at least 1")
    return workers


def run_replicates(config: SimConfig, workers: int | None = None) -> list[ReplicateResult]:
    """All replicates of one config, in replicate-index order."""
    w = _resolve_workers(config, workers)
    n = config.replicates
    if w == 1 or n == 1:
        return _replicate_range(config, 0, n)
    chunk = max(1, math.ceil(n / (w * 4)))
    bounds = list(range(0, n, chunk)) + [n]
    out: list[ReplicateResult] = []
    with ProcessPoolExecutor(max_workers=w) as pool:
        futures = [
            pool.submit(_replicate_range, config, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        for fut in futures:
            out.extend(fut.result())
    return out


def run_study(configs: list[SimConfig], workers: int | None = None) -> list[StudyRow]:
    """Run every configured study cell; a failing row never aborts the others."""
    if not configs:
        raise InvalidParameterError("config list must not be empty")
    rows: list[StudyRow] = []
    for config in configs:
        try:
            results = run_replicates(config, workers)
            metrics = aggregate(results, config.design.true_hr, config.se_scale)
            rows.append(StudyRow(config=config, metrics=metrics))
        except Exception as exc:  # row isolation by contract
            rows.append(StudyRow(config=config, metrics=None,
                                 error=f"{type(exc).__name__}: {exc}"))
    return rows

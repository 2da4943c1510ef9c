"""Trial structure: stratification factors, prognostic scenarios, hazard rates.

Twelve strata arise from three baseline factors (2 x 3 x 2 levels). A scenario
describes how the control-arm hazard varies across strata; everything is
configured in median survival months and converted to exponential rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .design import sample_size
from .errors import InvalidParameterError

STRATUM_COUNT = 12

#: Within-stratum covariate columns in model order: treatment is prepended by
#: the fitting code, then x1, the two x2-level indicators, and x3.
COVARIATE_NAMES = ("x1", "x2_level1", "x2_level2", "x3")


@dataclass(frozen=True)
class StratumProfile:
    """One of the 12 cells defined by factors x1 (2 levels), x2 (3), x3 (2)."""

    x1: int
    x2: int
    x3: int

    def __post_init__(self):
        if self.x1 not in (0, 1):
            raise InvalidParameterError(f"x1 must be 0 or 1, got {self.x1}")
        if self.x2 not in (0, 1, 2):
            raise InvalidParameterError(f"x2 must be 0, 1 or 2, got {self.x2}")
        if self.x3 not in (0, 1):
            raise InvalidParameterError(f"x3 must be 0 or 1, got {self.x3}")

    @property
    def index(self) -> int:
        """Position in the canonical ordering: x1 major, x2 middle, x3 minor."""
        return self.x1 * 6 + self.x2 * 2 + self.x3

    @classmethod
    def from_index(cls, index: int) -> "StratumProfile":
        if not 0 <= index < STRATUM_COUNT:
            raise InvalidParameterError(f"stratum index must be in [0, 12), got {index}")
        x1, rest = divmod(index, 6)
        x2, x3 = divmod(rest, 2)
        return cls(x1=x1, x2=x2, x3=x3)

    def covariates(self) -> tuple[int, int, int, int]:
        """Indicator coding (x1, x2==1, x2==2, x3) used by the multivariate model."""
        return (self.x1, int(self.x2 == 1), int(self.x2 == 2), self.x3)


ALL_STRATA = tuple(StratumProfile.from_index(i) for i in range(STRATUM_COUNT))


def stratum_covariates(index: np.ndarray) -> np.ndarray:
    """Vectorized indicator coding for an array of stratum indices.

    Returns a float array of shape (n, 4) with columns x1, x2==1, x2==2, x3.
    """
    idx = np.asarray(index)
    x1, rest = np.divmod(idx, 6)
    x2, x3 = np.divmod(rest, 2)
    out = np.empty((idx.shape[0], 4), dtype=float)
    out[:, 0] = x1
    out[:, 1] = x2 == 1
    out[:, 2] = x2 == 2
    out[:, 3] = x3
    return out


class ScenarioKind(Enum):
    """How the control-arm hazard depends on the stratum."""

    NO_PROGNOSTIC = "no_prognostic"
    MULTIPLICATIVE_COVARIATES = "multiplicative_covariates"
    STRATUM_BASELINES = "stratum_baselines"


#: Reference parameters of the bundled study: base median 16 months, covariate
#: hazard ratios 0.5 / 0.75 / 1.25 / 0.75, and the 16-vs-50-month baselines.
DEFAULT_BASE_MEDIAN = 16.0
DEFAULT_COVARIATE_HRS = {"hr_x1": 0.5, "hr_x2_level1": 0.75, "hr_x2_level2": 1.25, "hr_x3": 0.75}
DEFAULT_STRATUM_MEDIANS = (16.0,) * 6 + (50.0,) * 6


@dataclass(frozen=True)
class ScenarioSpec:
    """Data-generating mechanism for control-arm hazards.

    Exactly the fields relevant to ``kind`` may be set:

    * ``NO_PROGNOSTIC``: ``base_median`` only; every stratum shares one hazard.
    * ``MULTIPLICATIVE_COVARIATES``: ``base_median`` plus the four covariate
      hazard ratios acting multiplicatively on the rate.
    * ``STRATUM_BASELINES``: twelve per-stratum medians.
    """

    kind: ScenarioKind
    base_median: float | None = None
    hr_x1: float | None = None
    hr_x2_level1: float | None = None
    hr_x2_level2: float | None = None
    hr_x3: float | None = None
    stratum_medians: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = self.kind
        hrs = (self.hr_x1, self.hr_x2_level1, self.hr_x2_level2, self.hr_x3)
        if kind in (ScenarioKind.NO_PROGNOSTIC, ScenarioKind.MULTIPLICATIVE_COVARIATES):
            _require_positive("base_median", self.base_median)
            if self.stratum_medians is not None:
                raise InvalidParameterError(f"stratum_medians is not used by {kind.value}")
        if kind is ScenarioKind.NO_PROGNOSTIC and any(h is not None for h in hrs):
            raise InvalidParameterError("covariate hazard ratios are not used by no_prognostic")
        if kind is ScenarioKind.MULTIPLICATIVE_COVARIATES:
            for name, value in zip(("hr_x1", "hr_x2_level1", "hr_x2_level2", "hr_x3"), hrs):
                _require_positive(name, value)
        if kind is ScenarioKind.STRATUM_BASELINES:
            if self.base_median is not None or any(h is not None for h in hrs):
                raise InvalidParameterError(
                    "stratum_baselines takes only the 12 stratum medians")
            if self.stratum_medians is None or len(self.stratum_medians) != STRATUM_COUNT:
                raise InvalidParameterError("stratum_medians must hold exactly 12 values")
            for m in self.stratum_medians:
                _require_positive("stratum_medians entry", m)

    @classmethod
    def no_prognostic(cls, base_median: float = DEFAULT_BASE_MEDIAN) -> "ScenarioSpec":
        return cls(kind=ScenarioKind.NO_PROGNOSTIC, base_median=base_median)

    @classmethod
    def multiplicative_covariates(
        cls,
        base_median: float = DEFAULT_BASE_MEDIAN,
        hr_x1: float = DEFAULT_COVARIATE_HRS["hr_x1"],
        hr_x2_level1: float = DEFAULT_COVARIATE_HRS["hr_x2_level1"],
        hr_x2_level2: float = DEFAULT_COVARIATE_HRS["hr_x2_level2"],
        hr_x3: float = DEFAULT_COVARIATE_HRS["hr_x3"],
    ) -> "ScenarioSpec":
        return cls(
            kind=ScenarioKind.MULTIPLICATIVE_COVARIATES,
            base_median=base_median,
            hr_x1=hr_x1,
            hr_x2_level1=hr_x2_level1,
            hr_x2_level2=hr_x2_level2,
            hr_x3=hr_x3,
        )

    @classmethod
    def stratum_baselines(
        cls, medians: tuple[float, ...] = DEFAULT_STRATUM_MEDIANS
    ) -> "ScenarioSpec":
        return cls(kind=ScenarioKind.STRATUM_BASELINES, stratum_medians=tuple(medians))


def median_to_rate(median: float) -> float:
    """Exponential hazard rate per month with the given median survival."""
    if not (isinstance(median, (int, float)) and math.isfinite(median) and median > 0):
        raise InvalidParameterError(f"median must be a positive finite number, got {median!r}")
    return math.log(2.0) / median


def control_rate(scenario: ScenarioSpec, stratum: StratumProfile) -> float:
    """Control-arm hazard rate per month for one stratum under a scenario."""
    if scenario.kind is ScenarioKind.NO_PROGNOSTIC:
        return median_to_rate(scenario.base_median)
    if scenario.kind is ScenarioKind.MULTIPLICATIVE_COVARIATES:
        rate = median_to_rate(scenario.base_median)
        if stratum.x1 == 1:
            rate *= scenario.hr_x1
        if stratum.x2 == 1:
            rate *= scenario.hr_x2_level1
        elif stratum.x2 == 2:
            rate *= scenario.hr_x2_level2
        if stratum.x3 == 1:
            rate *= scenario.hr_x3
        return rate
    return median_to_rate(scenario.stratum_medians[stratum.index])


def control_median(scenario: ScenarioSpec, stratum: StratumProfile) -> float:
    """Control-arm median survival in months implied by the scenario."""
    return math.log(2.0) / control_rate(scenario, stratum)


def control_rate_table(scenario: ScenarioSpec) -> np.ndarray:
    """Control-arm rates for all 12 strata, indexed by stratum index."""
    return np.array([control_rate(scenario, s) for s in ALL_STRATA])


BALANCED_WEIGHTS = (1.0,) * STRATUM_COUNT


@dataclass(frozen=True)
class TrialDesign:
    """Operating characteristics of one simulated trial."""

    true_hr: float
    target_events: int
    sample_size: int
    accrual_months: float = 14.0
    allocation_weights: tuple[float, ...] = BALANCED_WEIGHTS
    randomization_prob: float = 0.5
    alpha_one_sided: float = 0.025
    nominal_power: float = 0.80

    def __post_init__(self):
        if not 0.0 < self.true_hr <= 1.0:
            raise InvalidParameterError(f"true_hr must be in (0, 1], got {self.true_hr}")
        if self.target_events < 1:
            raise InvalidParameterError("target_events must be a positive integer")
        if self.sample_size < self.target_events:
            raise InvalidParameterError(
                f"sample_size {self.sample_size} is below target_events {self.target_events}")
        _require_positive("accrual_months", self.accrual_months)
        weights = tuple(float(w) for w in self.allocation_weights)
        if len(weights) != STRATUM_COUNT:
            raise InvalidParameterError("allocation_weights must hold exactly 12 values")
        if any(w < 0 or not math.isfinite(w) for w in weights) or sum(weights) <= 0:
            raise InvalidParameterError(
                "allocation_weights must be nonnegative and not all zero")
        object.__setattr__(self, "allocation_weights", weights)
        for name in ("randomization_prob", "alpha_one_sided", "nominal_power"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidParameterError(f"{name} must be in (0, 1), got {v}")

    @property
    def normalized_weights(self) -> np.ndarray:
        w = np.asarray(self.allocation_weights, dtype=float)
        return w / w.sum()

    @classmethod
    def from_event_target(
        cls, true_hr: float, target_events: int, event_fraction: float = 0.70, **kwargs
    ) -> "TrialDesign":
        """Design with sample size ceil(target_events / event_fraction)."""
        n = sample_size(target_events, event_fraction)
        return cls(true_hr=true_hr, target_events=target_events, sample_size=n, **kwargs)


def _require_positive(name: str, value) -> None:
    if value is None or not math.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")

"""Candidate growth models and their closed-form properties.

The central model is hyperbolic growth

    y(t) = 1 / (a - k t)

whose reciprocal is a straight line in time. It diverges at the finite
singularity year ``t_s = a / k`` and its relative growth rate is ``k y(t)``,
proportional to its own size. The competing descriptions are a constant level
(stagnation), exponential growth and stagnation followed by exponential growth
from a break year.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dataset import Observation, TimeSeries

DEVELOPED = "developed"
LESS_DEVELOPED = "less-developed"
RegionClass = Literal["developed", "less-developed"]

DEFAULT_CLAIM_YEARS: dict[str, float] = {DEVELOPED: 1750.0, LESS_DEVELOPED: 1900.0}
INDUSTRIAL_REVOLUTION = (1760.0, 1840.0)


class AtOrBeyondSingularity(ValueError):
    def __init__(self, t: float, t_s: float | None) -> None:
        self.t = t
        self.t_s = t_s
        super().__init__(f"t={t} is at or beyond the singularity t_s={t_s}")


class NoSingularity(ValueError):
    pass


class ZeroSpan(ValueError):
    pass


@dataclass(frozen=True)
class HyperbolicParams:
    """Reciprocal-space line ``1/y = a - k t``.

    ``a`` is the reciprocal GDP at year 0 (1/billion) and ``k`` the yearly
    decline of the reciprocal. ``k > 0`` means growth; ``k == 0`` degenerates
    to a constant level and a negative ``k`` is a shrinking economy.
    """

    a: float
    k: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.k)):
            raise ValueError(f"non-finite hyperbolic parameters a={self.a}, k={self.k}")

    @property
    def t_s(self) -> float | None:
        return self.a / self.k if self.k > 0 else None

    def shifted(self, c: float) -> HyperbolicParams:
        """Parameters for the time axis ``t -> t - c``."""
        return HyperbolicParams(self.a - self.k * c, self.k)


def reciprocal(series: TimeSeries) -> TimeSeries:
    """Map every ``(t, y)`` to ``(t, 1/y)``."""
    return TimeSeries(series.region, tuple(Observation(o.year, 1.0 / o.gdp) for o in series))


def predict_hyperbolic(params: HyperbolicParams, t: float) -> float:
    denom = params.a - params.k * t
    if denom <= 0:
        raise AtOrBeyondSingularity(t, params.t_s)
    return 1.0 / denom


def hyperbolic_curve(params: HyperbolicParams, t: np.ndarray) -> np.ndarray:
    """Vectorised :func:`predict_hyperbolic`; ``nan`` where the curve is undefined."""
    denom = params.a - params.k * np.asarray(t, dtype=float)
    out = np.full(denom.shape, np.nan)
    ok = denom > 0
    out[ok] = 1.0 / denom[ok]
    return out


def singularity(params: HyperbolicParams) -> float:
    if params.k <= 0:
        raise NoSingularity(f"k={params.k} <= 0: the hyperbola never diverges")
    return params.a / params.k


def growth_rate_empirical(p1: Observation, p2: Observation) -> float:
    """Average continuous growth rate per year between two observations."""
    span = p2.year - p1.year
    if span == 0:
        raise ZeroSpan(f"both observations are at year {p1.year}")
    return (math.log(p2.gdp) - math.log(p1.gdp)) / span


def growth_rate_model(params: HyperbolicParams, t: float) -> float:
    """Instantaneous relative growth rate of the hyperbola, ``k * y(t)``."""
    return params.k * predict_hyperbolic(params, t)


@dataclass(frozen=True)
class ModelKind:
    """One of the competing growth descriptions.

    ``break_year`` is only meaningful for stagnation-then-exponential, where
    it is a fixed hyper-parameter rather than a fitted value.
    """

    name: str
    break_year: float | None = None

    def __post_init__(self) -> None:
        if self.name not in _PARAM_COUNTS:
            raise ValueError(f"unknown model kind {self.name!r}")
        if (self.name == "stagnation_then_exponential") != (self.break_year is not None):
            raise ValueError("break_year is required for, and only for, stagnation_then_exponential")

    @property
    def n_params(self) -> int:
        return _PARAM_COUNTS[self.name]

    @property
    def order(self) -> int:
        return list(_PARAM_COUNTS).index(self.name)

    def __str__(self) -> str:
        if self.break_year is None:
            return self.name
        return f"{self.name}({self.break_year:g})"


# Declaration order doubles as the final tie-breaker in model ranking.
_PARAM_COUNTS = {
    "constant": 1,
    "hyperbolic": 2,
    "exponential": 2,
    # level, rate, break year, continuity offset
    "stagnation_then_exponential": 4,
}

CONSTANT = ModelKind("constant")
HYPERBOLIC = ModelKind("hyperbolic")
EXPONENTIAL = ModelKind("exponential")


def stagnation_then_exponential(break_year: float) -> ModelKind:
    return ModelKind("stagnation_then_exponential", float(break_year))


def predict_log(kind: ModelKind, params: dict[str, float], t: np.ndarray) -> np.ndarray:
    """Model prediction of ``ln y`` at years ``t`` (``nan`` where undefined)."""
    t = np.asarray(t, dtype=float)
    if kind.name == "constant":
        return np.full(t.shape, math.log(params["level"]))
    if kind.name == "exponential":
        return params["log_intercept"] + params["rate"] * t
    if kind.name == "hyperbolic":
        with np.errstate(invalid="ignore"):
            return np.log(hyperbolic_curve(HyperbolicParams(params["a"], params["k"]), t))
    if kind.name == "stagnation_then_exponential":
        level = math.log(params["level"])
        b = params["break_year"]
        return np.where(t < b, level, level + params["rate"] * (t - b))
    raise ValueError(f"unknown model kind {kind.name!r}")


@dataclass(frozen=True)
class TakeoffClaim:
    region_class: RegionClass
    claimed_year: float

    def __post_init__(self) -> None:
        if self.region_class not in DEFAULT_CLAIM_YEARS:
            raise ValueError(f"unknown region class {self.region_class!r}")

    @classmethod
    def default(cls, region_class: RegionClass) -> TakeoffClaim:
        return cls(region_class, DEFAULT_CLAIM_YEARS[region_class])

"""Parameter estimation and goodness of fit.

The hyperbolic fit is an ordinary least-squares straight line through the
reciprocal values ``(t, 1/y)``. The other model kinds are fitted in log space
so that all of them can be ranked with one information criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dataset import TimeSeries
from .models import HyperbolicParams, ModelKind, predict_log

EPS_SSE = 1e-20

Weighting = Literal["reciprocal", "gdp"]


class TooFewPoints(ValueError):
    def __init__(self, n: int, needed: int) -> None:
        self.n = n
        self.needed = needed
        super().__init__(f"need at least {needed} observations, got {n}")


class EmptyRegime(ValueError):
    def __init__(self, side: str, count: int) -> None:
        self.side = side
        self.count = count
        super().__init__(f"{side} side of the break has {count} observation(s); need 2")


@dataclass(frozen=True)
class Line:
    intercept: float
    slope: float
    sse: float
    sst: float


def fit_line(t: np.ndarray, z: np.ndarray, w: np.ndarray | None = None) -> Line:
    """Weighted least-squares line ``z = intercept + slope * t``.

    Centred sums keep the estimate exact on collinear data and invariant to
    shifts of the time origin. The SSE is accumulated from explicit residuals.
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.ones_like(t) if w is None else np.asarray(w, dtype=float)
    sw = w.sum()
    tbar = float(w @ t) / sw
    zbar = float(w @ z) / sw
    dt = t - tbar
    dz = z - zbar
    stt = float(w @ (dt * dt))
    slope = float(w @ (dt * dz)) / stt if stt > 0 else 0.0
    intercept = zbar - slope * tbar
    resid = dz - slope * dt
    return Line(float(intercept), float(slope), float(w @ (resid * resid)), float(w @ (dz * dz)))


@dataclass(frozen=True)
class HyperbolicFit:
    params: HyperbolicParams
    window: tuple[float, float]
    n: int
    r2_reciprocal: float
    sse_reciprocal: float
    max_rel_err_gdp: float
    aic: float
    weighting: str = "reciprocal"
    region: str = ""

    @property
    def t_s(self) -> float | None:
        return self.params.t_s

    def reciprocal_at(self, t):
        """Fitted reciprocal line, defined for all t (also past the singularity)."""
        return self.params.a - self.params.k * np.asarray(t, dtype=float)


def r_squared(sse: float, sst: float) -> float:
    if sst <= EPS_SSE:
        return 1.0 if sse <= EPS_SSE else 0.0
    return min(1.0, max(0.0, 1.0 - sse / sst))


def fit_hyperbolic(series: TimeSeries, weighting: Weighting = "reciprocal") -> HyperbolicFit:
    """Least-squares hyperbola via a straight line through ``(t, 1/y)``.

    ``weighting="gdp"`` applies weights ``y**4``, which approximates least
    squares on the GDP values themselves; the default treats every reciprocal
    equally and therefore leans on the early, small-GDP observations.
    """
    n = len(series)
    if n < 3:
        raise TooFewPoints(n, 3)
    t = series.years
    y = series.values
    z = 1.0 / y
    if weighting == "reciprocal":
        w = None
    elif weighting == "gdp":
        w = y**4 / np.max(y**4)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    line = fit_line(t, z, w)
    params = HyperbolicParams(a=line.intercept, k=-line.slope)
    zhat = params.a - params.k * t
    if np.all(zhat > 0):
        # |1/zhat - 1/z| * z == |z - zhat| / zhat
        max_rel = float(np.max(np.abs(z - zhat) / zhat))
        log_resid = np.log(zhat) - np.log(z)
        model_aic = aic(float(log_resid @ log_resid), n, 2)
    else:
        max_rel = model_aic = math.inf
    return HyperbolicFit(
        params=params,
        window=(float(t[0]), float(t[-1])),
        n=n,
        r2_reciprocal=r_squared(line.sse, line.sst),
        sse_reciprocal=line.sse,
        max_rel_err_gdp=max_rel,
        aic=model_aic,
        weighting=weighting,
        region=series.region,
    )


@dataclass(frozen=True)
class ModelFit:
    kind: ModelKind
    params: dict[str, float]
    sse_log: float
    n: int
    p: int
    aic: float


def aic(sse_log: float, n: int, p: int) -> float:
    if not math.isfinite(sse_log):
        return math.inf
    return n * math.log(max(sse_log, EPS_SSE) / n) + 2 * p


def fit_model(series: TimeSeries, kind: ModelKind) -> ModelFit:
    n = len(series)
    p = kind.n_params
    if n < p + 1:
        raise TooFewPoints(n, p + 1)
    t = series.years
    ly = np.log(series.values)

    if kind.name == "constant":
        params = {"level": math.exp(float(ly.mean()))}
    elif kind.name == "exponential":
        line = fit_line(t, ly)
        params = {"log_intercept": line.intercept, "rate": line.slope}
    elif kind.name == "hyperbolic":
        hf = fit_hyperbolic(series)
        params = {"a": hf.params.a, "k": hf.params.k}
    elif kind.name == "stagnation_then_exponential":
        b = kind.break_year
        pre = t < b
        n_pre, n_post = int(pre.sum()), int((~pre).sum())
        if n_pre < 2:
            raise EmptyRegime("pre", n_pre)
        if n_post < 2:
            raise EmptyRegime("post", n_post)
        params = {
            "level": math.exp(float(ly[pre].mean())),
            "rate": fit_line(t[~pre], ly[~pre]).slope,
            "break_year": b,
        }
    else:
        raise ValueError(f"unknown model kind {kind.name!r}")

    pred = predict_log(kind, params, t)
    if np.all(np.isfinite(pred)):
        resid = ly - pred
        sse = float(resid @ resid)
    else:
        sse = math.inf
    return ModelFit(kind, params, sse, n, p, aic(sse, n, p))


@dataclass(frozen=True)
class RankedModel:
    kind: ModelKind
    fit: ModelFit | None
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.fit is not None


def compare_models(series: TimeSeries, kinds: list[ModelKind]) -> list[RankedModel]:
    """Fit every kind and rank by AIC, then parameter count, then declaration order.

    A kind whose fit fails is kept in the ranking, after all feasible kinds,
    with the failure message in ``error``.
    """
    if not kinds:
        raise ValueError("no model kinds to compare")
    feasible: list[RankedModel] = []
    infeasible: list[RankedModel] = []
    for kind in kinds:
        try:
            feasible.append(RankedModel(kind, fit_model(series, kind)))
        except (TooFewPoints, EmptyRegime) as exc:
            infeasible.append(RankedModel(kind, None, str(exc)))
    feasible.sort(key=lambda r: (r.fit.aic, r.fit.p, r.kind.order))
    infeasible.sort(key=lambda r: r.kind.order)
    return feasible + infeasible

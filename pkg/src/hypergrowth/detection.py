"""Break tests, breakpoint search and takeoff-signature evaluation.

Everything here works in reciprocal space, where a single hyperbola is a
straight line. A claimed takeoff must show three features at once: a
statistically prominent change of pattern, a change from stagnation to growth,
and a location close to the claimed year. A change from one growth
trajectory to another is classified separately and never counts as a takeoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import special

from .dataset import TimeSeries, window
from .fitting import EPS_SSE, HyperbolicFit, TooFewPoints, fit_hyperbolic, fit_line
from .models import TakeoffClaim, growth_rate_empirical

MIN_SEGMENT = 3
N_LINE_PARAMS = 2


class InsufficientSide(ValueError):
    def __init__(self, side: str, count: int) -> None:
        self.side = side
        self.count = count
        super().__init__(f"{side} side of the break has {count} observation(s); need {MIN_SEGMENT}")


class EmptyWindow(ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    alpha: float = 0.05
    r_stag: float = 0.001
    r_growth: float = 0.005
    tau: float = 30.0
    half_window: float = 150.0

    def __post_init__(self) -> None:
        for name in ("alpha", "r_stag", "r_growth", "tau", "half_window"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"threshold {name} must be positive, got {value!r}")


# -- Chow-style test ------------------------------------------------------


@dataclass(frozen=True)
class BreakTest:
    break_year: float
    f_statistic: float
    p_value: float
    sse_pooled: float
    sse_split: float
    n_pre: int
    n_post: int


def f_test(sse_pooled: float, sse_split: float, n: int) -> tuple[float, float]:
    """F statistic and upper-tail p-value for one pooled line vs two lines."""
    if sse_pooled <= EPS_SSE:
        return 0.0, 1.0
    sse_split = min(sse_split, sse_pooled)
    dof = n - 2 * N_LINE_PARAMS
    f = ((sse_pooled - sse_split) / N_LINE_PARAMS) / (max(sse_split, EPS_SSE) / dof)
    # Complemented F cdf, evaluated through the regularised incomplete beta.
    p = float(special.fdtrc(N_LINE_PARAMS, dof, f))
    return f, min(1.0, max(0.0, p))


def chow_break_test(series: TimeSeries, break_year: float) -> BreakTest:
    t = series.years
    z = 1.0 / series.values
    pre = t < break_year
    n_pre, n_post = int(pre.sum()), int((~pre).sum())
    if n_pre < MIN_SEGMENT:
        raise InsufficientSide("pre", n_pre)
    if n_post < MIN_SEGMENT:
        raise InsufficientSide("post", n_post)
    sse_pooled = fit_line(t, z).sse
    sse_split = fit_line(t[pre], z[pre]).sse + fit_line(t[~pre], z[~pre]).sse
    sse_split = min(sse_split, sse_pooled)
    f, p = f_test(sse_pooled, sse_split, n_pre + n_post)
    return BreakTest(float(break_year), f, p, sse_pooled, sse_split, n_pre, n_post)


# -- exhaustive segmentation ---------------------------------------------


def segment_costs(t: np.ndarray, z: np.ndarray, min_size: int = MIN_SEGMENT) -> np.ndarray:
    """Reciprocal-space line SSE for every contiguous block ``[i, j)``.

    Entry ``[i, j]`` is ``inf`` when the block has fewer than ``min_size``
    points. Residuals are formed explicitly (two-pass), so blocks lying on an
    exact line cost ~1e-30 rather than the ~1e-16 of a sums-of-squares
    shortcut.
    """
    n = len(t)
    costs = np.full((n + 1, n + 1), np.inf)
    for i in range(n - min_size + 1):
        T = t[i:]
        Z = z[i:]
        size = len(T)
        m = np.arange(1, size + 1)
        tbar = np.cumsum(T) / m
        zbar = np.cumsum(Z) / m
        mask = np.tri(size, dtype=bool)  # row r covers points 0..r
        dt = np.where(mask, T[None, :] - tbar[:, None], 0.0)
        dz = np.where(mask, Z[None, :] - zbar[:, None], 0.0)
        stt = np.einsum("ij,ij->i", dt, dt)
        stz = np.einsum("ij,ij->i", dt, dz)
        slope = np.divide(stz, stt, out=np.zeros_like(stz), where=stt > 0)
        resid = dz - slope[:, None] * dt
        sse = np.einsum("ij,ij->i", resid, resid)
        ends = np.arange(min_size, size + 1)
        costs[i, i + ends] = sse[ends - 1]
    return costs


def best_partition(
    costs: np.ndarray, n_breaks: int, min_size: int = MIN_SEGMENT
) -> tuple[float, tuple[int, ...]] | None:
    """Cheapest split into ``n_breaks + 1`` blocks by brute-force enumeration.

    Returns ``(total_sse, boundary indices)``, each boundary being the index of
    the first point of a new block. Exact ties go to the earliest boundaries.
    """
    n = costs.shape[0] - 1
    if n < min_size * (n_breaks + 1):
        return None
    best: tuple[float, tuple[int, ...]] | None = None
    for bounds in combinations(range(min_size, n - min_size + 1), n_breaks):
        edges = (0, *bounds, n)
        if any(b - a < min_size for a, b in zip(edges, edges[1:])):
            continue
        total = float(sum(costs[a, b] for a, b in zip(edges, edges[1:])))
        if best is None or total < best[0] - EPS_SSE:
            best = (total, bounds)
    return best


@dataclass(frozen=True)
class SegmentedFit:
    """Piecewise hyperbolic fit.

    ``breakpoints`` are midpoints between the last observation of one segment
    and the first of the next. ``junctions`` are the years where neighbouring
    fitted trajectories meet, clamped to that same pair of observations; for a
    kinked series whose kink sits on an observation they locate the kink
    itself rather than the middle of the surrounding gap.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[HyperbolicFit, ...]
    total_sse: float
    junctions: tuple[float, ...] = ()


def _junction(left: HyperbolicFit, right: HyperbolicFit, lo: float, hi: float) -> float:
    dk = left.params.k - right.params.k
    if dk == 0:
        return (lo + hi) / 2
    meet = (left.params.a - right.params.a) / dk
    if not math.isfinite(meet):
        return (lo + hi) / 2
    return min(hi, max(lo, meet))


def segmented_fit(series: TimeSeries, bounds: tuple[int, ...]) -> SegmentedFit:
    """Fit independent hyperbolas on the blocks delimited by ``bounds``."""
    t = series.years
    edges = (0, *bounds, len(series))
    segments = tuple(
        fit_hyperbolic(TimeSeries(series.region, series.observations[a:b]))
        for a, b in zip(edges, edges[1:])
    )
    breakpoints = tuple(float((t[b - 1] + t[b]) / 2) for b in bounds)
    junctions = tuple(
        _junction(segments[i], segments[i + 1], float(t[b - 1]), float(t[b]))
        for i, b in enumerate(bounds)
    )
    total = float(sum(s.sse_reciprocal for s in segments))
    return SegmentedFit(breakpoints, segments, total, junctions)


def find_breakpoints(
    series: TimeSeries, max_breaks: int = 2, min_improvement: float = 0.01
) -> SegmentedFit:
    """Search every admissible set of up to ``max_breaks`` breakpoints.

    A fit with more breaks is only preferred when it lowers the total
    reciprocal SSE by more than ``min_improvement`` (relative) compared with
    the best accepted fit with fewer breaks. Totals within ``EPS_SSE`` of each
    other count as ties, which go to the earliest breakpoints.
    """
    if max_breaks not in (0, 1, 2):
        raise ValueError(f"max_breaks must be 0, 1 or 2, got {max_breaks}")
    n = len(series)
    needed = MIN_SEGMENT * (max_breaks + 1)
    if n < needed:
        raise TooFewPoints(n, needed)
    t = series.years
    z = 1.0 / series.values
    costs = segment_costs(t, z)

    accepted_sse = float(costs[0, n])
    accepted: tuple[int, ...] = ()
    for m in range(1, max_breaks + 1):
        found = best_partition(costs, m)
        if found is None:
            break
        sse, bounds = found
        if accepted_sse > EPS_SSE and sse < (1.0 - min_improvement) * accepted_sse:
            accepted_sse, accepted = sse, bounds
    return segmented_fit(series, accepted)


# -- takeoff signature -----------------------------------------------------


@dataclass(frozen=True)
class TakeoffVerdict:
    claim: TakeoffClaim
    criterion_prominent: bool
    criterion_stagnation_to_growth: bool
    criterion_timing: bool
    verdict: str
    thresholds: Thresholds
    break_year_best: float | None = None
    evidence: BreakTest | None = None
    pre_rate: float | None = None
    post_rate: float | None = None
    undecidable_side: str | None = None
    region: str = ""


def local_sample(series: TimeSeries, claim_year: float, half_window: float) -> TimeSeries | str:
    """Observations within ``half_window`` of the claim, widened to 3 per side.

    Sparse records (benchmark years only) often leave fewer than three points
    on a side of the claimed year inside the window; the sample is then
    extended outward to the nearest observations. Returns the name of the
    deficient side when the whole series cannot supply three points.
    """
    t = series.years
    n_before = int(np.searchsorted(t, claim_year, side="left"))
    if n_before < MIN_SEGMENT:
        return "pre"
    if len(t) - n_before < MIN_SEGMENT:
        return "post"
    lo = int(np.searchsorted(t, claim_year - half_window, side="left"))
    hi = int(np.searchsorted(t, claim_year + half_window, side="right"))
    lo = min(lo, n_before - MIN_SEGMENT)
    hi = max(hi, n_before + MIN_SEGMENT)
    return TimeSeries(series.region, series.observations[lo:hi])


def takeoff_test(
    series: TimeSeries, claim: TakeoffClaim, thresholds: Thresholds = Thresholds()
) -> TakeoffVerdict:
    """Evaluate the three takeoff features at ``claim.claimed_year``.

    The test runs on :func:`local_sample`. The break is the observation
    midpoint within ``half_window`` of the claim whose two-line split has the
    smallest reciprocal SSE (three points per side at least). Growth rates are
    average log-growth across each side of that break.
    """
    c = claim.claimed_year
    hw = thresholds.half_window
    local = local_sample(series, c, hw)
    if isinstance(local, str):
        return TakeoffVerdict(
            claim,
            False,
            False,
            False,
            "undecidable",
            thresholds,
            undecidable_side=local,
            region=series.region,
        )

    t = local.years
    z = 1.0 / local.values
    n = len(local)
    best: tuple[float, int] | None = None
    for b in range(MIN_SEGMENT, n - MIN_SEGMENT + 1):
        mid = float((t[b - 1] + t[b]) / 2)
        if abs(mid - c) > hw:
            continue
        sse = fit_line(t[:b], z[:b]).sse + fit_line(t[b:], z[b:]).sse
        if best is None or sse < best[0] - EPS_SSE:
            best = (sse, b)
    if best is None:
        # every admissible split is further than half_window from the claim;
        # blame the side whose gap pushes the straddling midpoint away
        n_pre = int((t < c).sum())
        side = "pre" if (t[n_pre - 1] + t[n_pre]) / 2 < c else "post"
        return TakeoffVerdict(
            claim,
            False,
            False,
            False,
            "undecidable",
            thresholds,
            undecidable_side=side,
            region=series.region,
        )

    b = best[1]
    break_year = float((t[b - 1] + t[b]) / 2)
    test = chow_break_test(local, break_year)
    obs = local.observations
    pre_rate = growth_rate_empirical(obs[0], obs[b - 1])
    post_rate = growth_rate_empirical(obs[b], obs[-1])

    prominent = test.p_value < thresholds.alpha
    stag_to_growth = pre_rate < thresholds.r_stag and post_rate >= max(
        10 * pre_rate, thresholds.r_growth
    )
    timing = abs(break_year - c) <= thresholds.tau
    verdict = "present" if (prominent and stag_to_growth and timing) else "absent"
    return TakeoffVerdict(
        claim,
        prominent,
        stag_to_growth,
        timing,
        verdict,
        thresholds,
        break_year_best=break_year,
        evidence=test,
        pre_rate=pre_rate,
        post_rate=post_rate,
        region=series.region,
    )


# -- growth-to-growth diversions -------------------------------------------


@dataclass(frozen=True)
class TransitionClass:
    at: float
    label: str
    mean_excess_reciprocal: float
    dead_band: float
    pre_window: tuple[float, float]
    post_window: tuple[float, float]
    region: str = ""


def classify_transition(
    series: TimeSeries,
    pre_window: tuple[float, float],
    post_window: tuple[float, float],
    band: float = 0.02,
) -> TransitionClass:
    """Compare post-window data with the extrapolated pre-window hyperbola.

    Positive excess reciprocal means GDP below the old trajectory (``slower``),
    negative means above it (``faster``). The dead band is ``band`` times the
    mean extrapolated reciprocal level over the post-window observations.
    """
    if pre_window[1] >= post_window[0]:
        raise ValueError(f"pre window {pre_window} must end before post window {post_window}")
    pre = window(series, *pre_window)
    post = window(series, *post_window)
    if len(pre) < 3:
        raise TooFewPoints(len(pre), 3)
    if len(post) == 0:
        raise EmptyWindow(f"no observations in post window {post_window}")
    fit = fit_hyperbolic(pre)
    trend = fit.reciprocal_at(post.years)
    excess = float(np.mean(1.0 / post.values - trend))
    dead_band = band * abs(float(np.mean(trend)))
    if excess > dead_band:
        label = "slower"
    elif excess < -dead_band:
        label = "faster"
    else:
        label = "none"
    at = float((pre.span[1] + post.span[0]) / 2)
    return TransitionClass(
        at, label, excess, dead_band, tuple(pre_window), tuple(post_window), series.region
    )

"""Result files and SVG figures.

Figures plot GDP against year on a log10 axis (or the reciprocal on a linear
axis), overlay fitted hyperbolas and mark claimed takeoff years with dashed
vertical lines. Output is plain SVG 1.1 text built by hand so that identical
inputs always give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal
from xml.sax.saxutils import escape

import numpy as np

from .dataset import TimeSeries
from .detection import (
    BreakTest,
    SegmentedFit,
    TakeoffVerdict,
    Thresholds,
    TransitionClass,
)
from .fitting import HyperbolicFit
from .models import HyperbolicParams, TakeoffClaim, hyperbolic_curve

SUMMARY_HEADER = ("region", "claimed_year", "verdict", "break_year_best", "p_value")
OVERLAY_SAMPLES = 240
SINGULARITY_CLIP = 0.99


class EmptySpec(ValueError):
    pass


class NonPositiveOnLogScale(ValueError):
    pass


class IoFailure(OSError):
    def __init__(self, path: Path, reason: str) -> None:
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")


# -- serialisation ----------------------------------------------------------


def _num(x: float | None) -> float | None:
    """JSON-safe float: ``None`` for missing or non-finite values."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def verdict_to_dict(v: TakeoffVerdict) -> dict[str, Any]:
    ev = v.evidence
    return {
        "region": v.region,
        "claimed_year": v.claim.claimed_year,
        "region_class": v.claim.region_class,
        "criteria": {
            "prominent": v.criterion_prominent,
            "stagnation_to_growth": v.criterion_stagnation_to_growth,
            "timing": v.criterion_timing,
        },
        "verdict": v.verdict,
        "break_year_best": _num(v.break_year_best),
        "f_statistic": _num(ev.f_statistic) if ev else None,
        "p_value": _num(ev.p_value) if ev else None,
        "pre_rate": _num(v.pre_rate),
        "post_rate": _num(v.post_rate),
        "thresholds": {
            "alpha": v.thresholds.alpha,
            "r_stag": v.thresholds.r_stag,
            "r_growth": v.thresholds.r_growth,
            "tau": v.thresholds.tau,
            "half_window": v.thresholds.half_window,
        },
        "undecidable_side": v.undecidable_side,
        "evidence": None
        if ev is None
        else {
            "sse_pooled": ev.sse_pooled,
            "sse_split": ev.sse_split,
            "n_pre": ev.n_pre,
            "n_post": ev.n_post,
        },
    }


def verdict_from_dict(d: dict[str, Any]) -> TakeoffVerdict:
    ev = d.get("evidence")
    evidence = None
    if ev is not None:
        evidence = BreakTest(
            d["break_year_best"],
            d["f_statistic"],
            d["p_value"],
            ev["sse_pooled"],
            ev["sse_split"],
            ev["n_pre"],
            ev["n_post"],
        )
    return TakeoffVerdict(
        claim=TakeoffClaim(d["region_class"], d["claimed_year"]),
        criterion_prominent=d["criteria"]["prominent"],
        criterion_stagnation_to_growth=d["criteria"]["stagnation_to_growth"],
        criterion_timing=d["criteria"]["timing"],
        verdict=d["verdict"],
        thresholds=Thresholds(**d["thresholds"]),
        break_year_best=d["break_year_best"],
        evidence=evidence,
        pre_rate=d["pre_rate"],
        post_rate=d["post_rate"],
        undecidable_side=d.get("undecidable_side"),
        region=d["region"],
    )


def fit_to_dict(fit: HyperbolicFit, label: str = "") -> dict[str, Any]:
    return {
        "region": fit.region,
        "label": label,
        "window": {"from": fit.window[0], "to": fit.window[1]},
        "model": "hyperbolic",
        "weighting": fit.weighting,
        "params": {"a": fit.params.a, "k": fit.params.k},
        "t_s": _num(fit.t_s),
        "n": fit.n,
        "r2_reciprocal": fit.r2_reciprocal,
        "sse_reciprocal": fit.sse_reciprocal,
        "max_rel_err_gdp": _num(fit.max_rel_err_gdp),
        "aic": _num(fit.aic),
    }


def transition_to_dict(tc: TransitionClass, origin: str = "") -> dict[str, Any]:
    return {
        "region": tc.region,
        "origin": origin,
        "at": tc.at,
        "class": tc.label,
        "mean_excess_reciprocal": tc.mean_excess_reciprocal,
        "dead_band": tc.dead_band,
        "pre_window": {"from": tc.pre_window[0], "to": tc.pre_window[1]},
        "post_window": {"from": tc.post_window[0], "to": tc.post_window[1]},
    }


def segmented_to_dict(region: str, sf: SegmentedFit) -> dict[str, Any]:
    return {
        "region": region,
        "breakpoints": list(sf.breakpoints),
        "junctions": list(sf.junctions),
        "total_sse": sf.total_sse,
        "segments": [fit_to_dict(s, f"segment {i + 1}") for i, s in enumerate(sf.segments)],
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def summary_csv(verdicts: list[TakeoffVerdict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for v in verdicts:
        d = verdict_to_dict(v)
        writer.writerow(
            [
                d["region"],
                _plain(d["claimed_year"]),
                d["verdict"],
                _plain(d["break_year_best"]),
                "" if d["p_value"] is None else repr(d["p_value"]),
            ]
        )
    return buf.getvalue()


def _plain(x: float | None) -> str:
    if x is None:
        return ""
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def write_results(
    out_dir: str | Path,
    verdicts: list[TakeoffVerdict],
    fits: list[dict[str, Any]],
    transitions: list[dict[str, Any]],
    segments: list[dict[str, Any]] | None = None,
) -> list[Path]:
    """Write ``verdicts.json``, ``fits.json``, ``transitions.json`` and ``summary.csv``.

    ``fits``/``transitions``/``segments`` are already-serialised records (see
    :func:`fit_to_dict` and friends). Returns the written paths.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(out, exc.strerror or str(exc)) from exc
    files = {
        "verdicts.json": dumps([verdict_to_dict(v) for v in verdicts]),
        "fits.json": dumps(fits),
        "transitions.json": dumps(transitions),
        "summary.csv": summary_csv(verdicts),
    }
    if segments is not None:
        files["segments.json"] = dumps(segments)
    written = []
    for name, text in files.items():
        _write(out / name, text)
        written.append(out / name)
    return written


# -- figures ------------------------------------------------------------------

Scale = Literal["log10", "linear", "reciprocal"]


@dataclass(frozen=True)
class FigureSpec:
    title: str
    series: TimeSeries | None = None
    overlays: tuple[HyperbolicFit | SegmentedFit, ...] = ()
    markers: tuple[tuple[float, str], ...] = ()
    y_scale: Scale = "log10"
    width: int = 900
    height: int = 600
    overlay_span: tuple[float, float] | None = field(default=None)


MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 90, 30, 50, 60


def log_position(v: float, lo: float, hi: float, p_lo: float, p_hi: float) -> float:
    """Pixel for value ``v`` on a log axis mapping ``[lo, hi]`` onto ``[p_lo, p_hi]``."""
    frac = (math.log10(v) - math.log10(lo)) / (math.log10(hi) - math.log10(lo))
    return p_lo + frac * (p_hi - p_lo)


def linear_position(v: float, lo: float, hi: float, p_lo: float, p_hi: float) -> float:
    return p_lo + (v - lo) / (hi - lo) * (p_hi - p_lo)


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round-number ticks (1, 2 or 5 times a power of ten) covering ``[lo, hi]``."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    stop = math.ceil(hi / step) * step
    count = int(round((stop - start) / step))
    return [round(start + i * step, 12) for i in range(count + 1)]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:g}"


@dataclass(frozen=True)
class _Curve:
    xs: np.ndarray
    ys: np.ndarray


def _hyperbola_curve(params: HyperbolicParams, x0: float, x1: float, scale: Scale) -> _Curve | None:
    ts = params.t_s
    if ts is not None:
        x1 = min(x1, SINGULARITY_CLIP * ts)
    if x1 <= x0:
        return None
    xs = np.linspace(x0, x1, OVERLAY_SAMPLES)
    if scale == "reciprocal":
        ys = params.a - params.k * xs
    else:
        ys = hyperbolic_curve(params, xs)
        # a shrinking fit (k < 0) is undefined before some year; drop that part
        ok = np.isfinite(ys)
        xs, ys = xs[ok], ys[ok]
        if len(xs) < 2:
            if scale == "log10":
                raise NonPositiveOnLogScale(
                    f"hyperbola a={params.a:g}, k={params.k:g} has no positive values "
                    f"on [{x0:g}, {x1:g}]"
                )
            return None
    return _Curve(xs, ys)


def _overlay_curves(spec: FigureSpec, x0: float, x1: float) -> list[_Curve]:
    curves = []
    for ov in spec.overlays:
        if isinstance(ov, SegmentedFit):
            for seg in ov.segments:
                c = _hyperbola_curve(seg.params, seg.window[0], seg.window[1], spec.y_scale)
                if c is not None:
                    curves.append(c)
        else:
            c = _hyperbola_curve(ov.params, x0, x1, spec.y_scale)
            if c is not None:
                curves.append(c)
    return curves


def _x_extent(spec: FigureSpec) -> tuple[float, float]:
    if spec.overlay_span is not None:
        return spec.overlay_span
    xs: list[float] = []
    if spec.series is not None and len(spec.series):
        xs.extend(spec.series.span)
    for ov in spec.overlays:
        segs = ov.segments if isinstance(ov, SegmentedFit) else (ov,)
        for s in segs:
            xs.extend(s.window)
    return min(xs), max(xs)


def render_figure(spec: FigureSpec) -> str:
    has_series = spec.series is not None and len(spec.series) > 0
    if not has_series and not spec.overlays:
        raise EmptySpec("figure needs a series or at least one overlay")

    data_lo, data_hi = _x_extent(spec)
    span = max(data_hi - data_lo, 1.0)
    for year, label in spec.markers:
        if not (data_lo - 0.1 * span <= year <= data_hi + 0.1 * span):
            raise ValueError(f"marker {label!r} at {year:g} lies outside the data range")
    marker_years = [m[0] for m in spec.markers]
    x_lo = min([data_lo, *marker_years])
    x_hi = max([data_hi, *marker_years])
    pad = 0.03 * max(x_hi - x_lo, 1.0)
    x_lo, x_hi = x_lo - pad, x_hi + pad

    curves = _overlay_curves(spec, data_lo, data_hi)

    if has_series:
        px = spec.series.years
        py = 1.0 / spec.series.values if spec.y_scale == "reciprocal" else spec.series.values
        range_values = py
    else:
        px = py = np.array([])
        range_values = np.concatenate([c.ys for c in curves]) if curves else np.array([1.0])

    if spec.y_scale == "log10" and np.any(range_values <= 0):
        raise NonPositiveOnLogScale("log10 axis needs strictly positive values")

    left = MARGIN_LEFT
    right = spec.width - MARGIN_RIGHT
    top = MARGIN_TOP
    bottom = spec.height - MARGIN_BOTTOM

    def X(v: float) -> float:
        return linear_position(v, x_lo, x_hi, left, right)

    if spec.y_scale == "log10":
        y_lo = 10 ** math.floor(math.log10(float(range_values.min())))
        y_hi = 10 ** math.ceil(math.log10(float(range_values.max())))
        if y_hi == y_lo:
            y_hi *= 10

        def Y(v: float) -> float:
            return log_position(v, y_lo, y_hi, bottom, top)

        decades = range(round(math.log10(y_lo)), round(math.log10(y_hi)) + 1)
        major = [10.0**d for d in decades]
        minor = [m * 10.0**d for d in decades[:-1] for m in range(2, 10)]
        y_label = "GDP (billions of 1990 GK$, log scale)"
    else:
        ticks = nice_ticks(float(range_values.min()), float(range_values.max()))
        if spec.y_scale == "reciprocal" and ticks[0] > 0:
            ticks = nice_ticks(0.0, float(range_values.max()))
        y_lo, y_hi = ticks[0], ticks[-1]

        def Y(v: float) -> float:
            return linear_position(v, y_lo, y_hi, bottom, top)

        major, minor = ticks, []
        y_label = (
            "1/GDP (1/billion 1990 GK$)"
            if spec.y_scale == "reciprocal"
            else "GDP (billions of 1990 GK$)"
        )

    out: list[str] = []
    w = out.append
    w('<?xml version="1.0" encoding="UTF-8"?>')
    w(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}" font-family="serif">'
    )
    w(
        f'<defs><clipPath id="plot-area"><rect x="{_fmt(left)}" y="{_fmt(top)}" '
        f'width="{_fmt(right - left)}" height="{_fmt(bottom - top)}"/></clipPath></defs>'
    )
    w(f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white"/>')
    w(
        f'<text x="{_fmt(spec.width / 2)}" y="{_fmt(top / 2 + 6)}" text-anchor="middle" '
        f'font-size="18">{escape(spec.title)}</text>'
    )

    # axes
    w(f'<g class="axes" stroke="black" stroke-width="1" fill="none">')
    w(f'<line x1="{_fmt(left)}" y1="{_fmt(bottom)}" x2="{_fmt(right)}" y2="{_fmt(bottom)}"/>')
    w(f'<line x1="{_fmt(left)}" y1="{_fmt(top)}" x2="{_fmt(left)}" y2="{_fmt(bottom)}"/>')
    w("</g>")

    w('<g class="x-ticks" font-size="12" text-anchor="middle">')
    for v in nice_ticks(x_lo, x_hi):
        if not x_lo <= v <= x_hi:
            continue
        x = _fmt(X(v))
        w(f'<line x1="{x}" y1="{_fmt(bottom)}" x2="{x}" y2="{_fmt(bottom + 6)}" stroke="black"/>')
        w(f'<text x="{x}" y="{_fmt(bottom + 20)}">{_tick_label(v)}</text>')
    w("</g>")

    w('<g class="y-ticks" font-size="12" text-anchor="end">')
    for v in major:
        y = _fmt(Y(v))
        w(f'<line x1="{_fmt(left - 6)}" y1="{y}" x2="{_fmt(left)}" y2="{y}" stroke="black"/>')
        w(f'<line x1="{_fmt(left)}" y1="{y}" x2="{_fmt(right)}" y2="{y}" stroke="#dddddd"/>')
        w(f'<text x="{_fmt(left - 9)}" y="{_fmt(Y(v) + 4)}">{_tick_label(v)}</text>')
    for v in minor:
        y = _fmt(Y(v))
        w(f'<line x1="{_fmt(left - 3)}" y1="{y}" x2="{_fmt(left)}" y2="{y}" stroke="black"/>')
    w("</g>")

    w(
        f'<text x="{_fmt((left + right) / 2)}" y="{_fmt(spec.height - 15)}" '
        f'text-anchor="middle" font-size="14">Year (CE)</text>'
    )
    w(
        f'<text x="18" y="{_fmt((top + bottom) / 2)}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {_fmt((top + bottom) / 2)})">{escape(y_label)}</text>'
    )

    w('<g class="overlays" clip-path="url(#plot-area)" fill="none" stroke="#1f4e9c" stroke-width="1.5">')
    for c in curves:
        pts = " ".join(f"{_fmt(X(x))},{_fmt(Y(y))}" for x, y in zip(c.xs, c.ys))
        w(f'<path class="fit" d="M {pts}"/>')
    w("</g>")

    w('<g class="markers" font-size="12" fill="#a02020">')
    for year, label in spec.markers:
        x = _fmt(X(year))
        w(
            f'<line class="marker" x1="{x}" y1="{_fmt(top)}" x2="{x}" y2="{_fmt(bottom)}" '
            f'stroke="#a02020" stroke-width="1" stroke-dasharray="6,4"/>'
        )
        w(f'<text x="{_fmt(X(year) + 4)}" y="{_fmt(top + 14)}">{escape(label)}</text>')
    w("</g>")

    w('<g class="observations" fill="black">')
    for x, y in zip(px, py):
        w(f'<circle class="obs" cx="{_fmt(X(x))}" cy="{_fmt(Y(y))}" r="3"/>')
    w("</g>")
    w("</svg>")
    return "\n".join(out) + "\n"


def write_figure(path: str | Path, spec: FigureSpec) -> Path:
    path = Path(path)
    _write(path, render_figure(spec))
    return path

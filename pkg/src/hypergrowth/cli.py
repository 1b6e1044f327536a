"""Command-line entry point: ``hypergrowth {ingest,analyze,takeoff,segment,fig}``.

Exit codes: 0 when the command completed (whatever the verdicts), 1 for data or
I/O failures, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .dataset import (
    DataError,
    RegionDataset,
    TimeSeries,
    bundled_benchmarks,
    load_dataset,
    to_long_csv,
    window,
)
from .detection import (
    InsufficientSide,
    EmptyWindow,
    SegmentedFit,
    Thresholds,
    classify_transition,
    find_breakpoints,
    takeoff_test,
)
from .fitting import EmptyRegime, HyperbolicFit, TooFewPoints, fit_hyperbolic
from .models import DEFAULT_CLAIM_YEARS, DEVELOPED, LESS_DEVELOPED, TakeoffClaim
from .report import (
    FigureSpec,
    IoFailure,
    dumps,
    fit_to_dict,
    render_figure,
    segmented_to_dict,
    transition_to_dict,
    verdict_to_dict,
    write_figure,
    write_results,
)

WORLD = "World"

# Region -> class. World carries both claims.
REGION_CLASSES: dict[str, tuple[str, ...]] = {
    WORLD: (DEVELOPED, LESS_DEVELOPED),
    "Western Europe": (DEVELOPED,),
    "Eastern Europe": (DEVELOPED,),
    "Former USSR": (DEVELOPED,),
    "Asia": (LESS_DEVELOPED,),
    "Africa": (LESS_DEVELOPED,),
    "Latin America": (LESS_DEVELOPED,),
}

DEFAULT_FIT_WINDOW = (1000.0, 1955.0)
# Extra fit windows on top of the default one.
EXTRA_FIT_WINDOWS: dict[str, tuple[tuple[str, float, float], ...]] = {
    "Africa": (("before 1820", 1000.0, 1820.0), ("after 1820", 1820.0, 1955.0)),
}
# Trajectory comparisons checked regardless of what the free search finds.
DEFAULT_TRANSITIONS: dict[str, tuple[tuple[float, float], tuple[float, float]]] = {
    "Latin America": ((1600.0, 1870.0), (1871.0, 2100.0)),
    "Asia": ((1500.0, 1940.0), (1950.0, 2008.0)),
}
SEGMENT_FROM = 1500.0


class UsageError(Exception):
    pass


class RegionFailure(Exception):
    pass


# -- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    thresholds: Thresholds = Thresholds()
    claim_years: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CLAIM_YEARS))
    region_classes: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(REGION_CLASSES)
    )
    default_class: str | None = None
    fit_window: tuple[float, float] | None = None
    segment_from: float = SEGMENT_FROM
    max_breaks: int = 2
    figures: bool = True
    jobs: int = 4

    def classes_for(self, region: str) -> tuple[str, ...]:
        if region in self.region_classes:
            return self.region_classes[region]
        if self.default_class is None:
            raise RegionFailure(
                f"no region class known for {region!r}; pass --class {region!r}=developed "
                "(or less-developed) or --default-class"
            )
        return (self.default_class,)

    def claims_for(self, region: str) -> list[TakeoffClaim]:
        return [TakeoffClaim(c, self.claim_years[c]) for c in self.classes_for(region)]

    def windows_for(self, region: str) -> list[tuple[str, float, float]]:
        lo, hi = self.fit_window or DEFAULT_FIT_WINDOW
        out = [("main", lo, hi)]
        if self.fit_window is None:
            out.extend(EXTRA_FIT_WINDOWS.get(region, ()))
        return out


def _thresholds(args: argparse.Namespace) -> Thresholds:
    try:
        return Thresholds(args.alpha, args.r_stag, args.r_growth, args.tau, args.half_window)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _class_overrides(items: list[str]) -> dict[str, tuple[str, ...]]:
    out = {}
    for item in items:
        region, sep, cls = item.rpartition("=")
        if not sep or cls not in DEFAULT_CLAIM_YEARS:
            raise UsageError(f"--class expects REGION=developed|less-developed, got {item!r}")
        out[region] = (cls,)
    return out


def _config(args: argparse.Namespace) -> RunConfig:
    classes = dict(REGION_CLASSES)
    classes.update(_class_overrides(args.region_class_override))
    fit_window = None
    if args.fit_from is not None or args.fit_to is not None:
        fit_window = (
            DEFAULT_FIT_WINDOW[0] if args.fit_from is None else args.fit_from,
            DEFAULT_FIT_WINDOW[1] if args.fit_to is None else args.fit_to,
        )
        if fit_window[0] >= fit_window[1]:
            raise UsageError(f"empty fit window {fit_window}")
    return RunConfig(
        thresholds=_thresholds(args),
        claim_years={DEVELOPED: args.developed_year, LESS_DEVELOPED: args.less_developed_year},
        region_classes=classes,
        default_class=args.default_class,
        fit_window=fit_window,
        segment_from=args.segment_from,
        max_breaks=args.max_breaks,
        figures=not args.no_figures,
        jobs=args.jobs,
    )


# -- per-region analysis ----------------------------------------------------


@dataclass
class RegionResult:
    region: str
    verdicts: list = field(default_factory=list)
    fits: list[dict[str, Any]] = field(default_factory=list)
    fit_objects: list[HyperbolicFit] = field(default_factory=list)
    transitions: list[dict[str, Any]] = field(default_factory=list)
    segments: dict[str, Any] | None = None
    segmented: SegmentedFit | None = None
    figure: str | None = None


def analyze_region(series: TimeSeries, cfg: RunConfig) -> RegionResult:
    region = series.region
    res = RegionResult(region)

    for label, lo, hi in cfg.windows_for(region):
        sub = window(series, lo, hi)
        try:
            fit = fit_hyperbolic(sub)
        except TooFewPoints as exc:
            raise RegionFailure(f"{region}: fit window {lo:g}-{hi:g}: {exc}") from None
        res.fit_objects.append(fit)
        res.fits.append(fit_to_dict(fit, label))

    for claim in cfg.claims_for(region):
        res.verdicts.append(takeoff_test(series, claim, cfg.thresholds))

    search = window(series, cfg.segment_from, series.span[1])
    try:
        seg = find_breakpoints(search, cfg.max_breaks)
    except TooFewPoints as exc:
        raise RegionFailure(
            f"{region}: breakpoint search from {cfg.segment_from:g}: {exc}"
        ) from None
    res.segmented = seg
    res.segments = segmented_to_dict(region, seg)

    for left, right, at in zip(seg.segments, seg.segments[1:], seg.breakpoints):
        try:
            tc = classify_transition(series, left.window, right.window)
        except (TooFewPoints, EmptyWindow):
            continue
        res.transitions.append(transition_to_dict(tc, f"breakpoint {at:g}"))
    if region in DEFAULT_TRANSITIONS:
        pre, post = DEFAULT_TRANSITIONS[region]
        try:
            tc = classify_transition(series, pre, post)
        except (TooFewPoints, EmptyWindow):
            pass
        else:
            res.transitions.append(transition_to_dict(tc, "default"))

    if cfg.figures:
        res.figure = render_figure(region_figure(series, res.fit_objects, res.verdicts))
    return res


def region_figure(series: TimeSeries, fits: list[HyperbolicFit], verdicts: list) -> FigureSpec:
    markers = tuple(
        (v.claim.claimed_year, f"claimed takeoff {v.claim.claimed_year:g}") for v in verdicts
    )
    return FigureSpec(
        title=f"{series.region}: GDP and hyperbolic fits",
        series=series,
        overlays=tuple(fits),
        markers=markers,
        y_scale="log10",
    )


# -- input ------------------------------------------------------------------


def _load(args: argparse.Namespace) -> RegionDataset:
    if args.input is None:
        return bundled_benchmarks()
    try:
        return load_dataset(args.input, args.format, args.scale)
    except OSError as exc:
        raise RegionFailure(f"cannot read {args.input}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise RegionFailure(f"{args.input}: not UTF-8 text") from None


def _resolve(ds: RegionDataset, names: list[str]) -> list[str]:
    missing = [n for n in names if n not in ds]
    if missing:
        raise RegionFailure(
            f"unknown region(s): {', '.join(missing)}; available: {', '.join(ds.regions)}"
        )
    return names


def _slug(region: str) -> str:
    return "".join(ch.lower() if ch.isalnum() else "_" for ch in region).strip("_")


# -- commands ---------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    ds = _load(args)
    text = to_long_csv(ds)
    try:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(Path(args.out), exc.strerror or str(exc)) from None
    for region, s in ds.series.items():
        print(f"{region}\t{len(s)}")
    print(f"{len(ds)} regions, {sum(len(s) for s in ds.series.values())} observations")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _config(args)
    ds = _load(args)
    regions = _resolve(ds, args.regions) if args.regions else ds.regions
    for r in regions:
        cfg.classes_for(r)  # fail before doing any work

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(lambda r: analyze_region(ds[r], cfg), regions))

    out = Path(args.out)
    write_results(
        out,
        [v for r in results for v in r.verdicts],
        [f for r in results for f in r.fits],
        [t for r in results for t in r.transitions],
        [r.segments for r in results],
    )
    if cfg.figures:
        for r in results:
            target = out / f"{_slug(r.region)}.svg"
            try:
                target.write_text(r.figure, encoding="utf-8", newline="\n")
            except OSError as exc:
                raise IoFailure(target, exc.strerror or str(exc)) from None
    for r in results:
        for v in r.verdicts:
            print(f"{r.region}@{v.claim.claimed_year:g}: {v.verdict}")
    return 0


def cmd_takeoff(args: argparse.Namespace) -> int:
    thresholds = _thresholds(args)
    ds = _load(args)
    _resolve(ds, [args.region])
    cls = args.region_class
    if cls is None:
        known = REGION_CLASSES.get(args.region, (args.default_class,) if args.default_class else ())
        if not known:
            raise UsageError(f"no region class known for {args.region!r}; pass --region-class")
        # nearest default claim year decides for dual-class regions
        cls = min(known, key=lambda c: abs(DEFAULT_CLAIM_YEARS[c] - args.year))
    verdict = takeoff_test(ds[args.region], TakeoffClaim(cls, args.year), thresholds)
    sys.stdout.write(dumps(verdict_to_dict(verdict)))
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    ds = _load(args)
    _resolve(ds, [args.region])
    s = ds[args.region]
    lo = s.span[0] if args.start is None else args.start
    hi = s.span[1] if args.end is None else args.end
    if lo > hi:
        raise UsageError(f"--from {lo:g} is after --to {hi:g}")
    try:
        seg = find_breakpoints(window(s, lo, hi), args.max_breaks, args.min_improvement)
    except TooFewPoints as exc:
        raise RegionFailure(f"{args.region}: {exc}") from None
    sys.stdout.write(dumps(segmented_to_dict(args.region, seg)))
    return 0


def cmd_fig(args: argparse.Namespace) -> int:
    ds = _load(args)
    _resolve(ds, [args.region])
    s = ds[args.region]
    overlays: list[HyperbolicFit] = []
    if not args.no_fit:
        sub = window(s, args.fit_from, args.fit_to)
        try:
            overlays.append(fit_hyperbolic(sub))
        except TooFewPoints as exc:
            raise RegionFailure(f"{args.region}: {exc}") from None
    markers = tuple((y, f"claimed takeoff {y:g}") for y in args.marker)
    spec = FigureSpec(
        title=args.title or args.region,
        series=s,
        overlays=tuple(overlays),
        markers=markers,
        y_scale=args.y_scale,
        width=args.width,
        height=args.height,
    )
    try:
        write_figure(args.out, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return 0


# -- parser -----------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--input", help="GDP table (default: bundled benchmark-year table)")
    g.add_argument("--format", choices=("long", "maddison"), default="long")
    g.add_argument(
        "--scale",
        type=float,
        default=1.0,
        help="multiply every value, e.g. 0.001 to turn millions into billions",
    )


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    d = Thresholds()
    g = p.add_argument_group("takeoff thresholds")
    g.add_argument("--alpha", type=float, default=d.alpha, help="significance level")
    g.add_argument("--r-stag", type=float, default=d.r_stag, help="max stagnant growth rate")
    g.add_argument("--r-growth", type=float, default=d.r_growth, help="min post-takeoff rate")
    g.add_argument("--tau", type=float, default=d.tau, help="timing tolerance (years)")
    g.add_argument("--half-window", type=float, default=d.half_window)
    g.add_argument(
        "--default-class",
        choices=tuple(DEFAULT_CLAIM_YEARS),
        help="class for regions without a built-in one",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypergrowth",
        description="Hyperbolic-growth fits and takeoff tests on historical GDP tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalise a GDP table to the long layout")
    _add_input(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="full regional analysis with result bundle")
    _add_input(p)
    _add_thresholds(p)
    sel = p.add_mutually_exclusive_group()
    sel.add_argument("--regions", nargs="+", metavar="REGION")
    sel.add_argument("--all-regions", action="store_true", help="every region (the default)")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--developed-year", type=float, default=DEFAULT_CLAIM_YEARS[DEVELOPED])
    p.add_argument(
        "--less-developed-year", type=float, default=DEFAULT_CLAIM_YEARS[LESS_DEVELOPED]
    )
    p.add_argument(
        "--class",
        dest="region_class_override",
        action="append",
        default=[],
        metavar="REGION=CLASS",
    )
    p.add_argument("--fit-from", type=float, help=f"fit window start (default {DEFAULT_FIT_WINDOW[0]:g})")
    p.add_argument("--fit-to", type=float, help=f"fit window end (default {DEFAULT_FIT_WINDOW[1]:g})")
    p.add_argument("--segment-from", type=float, default=SEGMENT_FROM)
    p.add_argument("--max-breaks", type=int, choices=(0, 1, 2), default=2)
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("takeoff", help="takeoff test at one claimed year; JSON on stdout")
    _add_input(p)
    _add_thresholds(p)
    p.add_argument("--region", required=True)
    p.add_argument("--year", type=float, required=True)
    p.add_argument("--region-class", choices=tuple(DEFAULT_CLAIM_YEARS))
    p.set_defaults(func=cmd_takeoff)

    p = sub.add_parser("segment", help="free breakpoint search; JSON on stdout")
    _add_input(p)
    p.add_argument("--region", required=True)
    p.add_argument("--max-breaks", type=int, choices=(0, 1, 2), default=2)
    p.add_argument("--min-improvement", type=float, default=0.01)
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="end", type=float)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("fig", help="render one region as SVG")
    _add_input(p)
    p.add_argument("--region", required=True)
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--y-scale", choices=("log10", "linear", "reciprocal"), default="log10")
    p.add_argument("--fit-from", type=float, default=DEFAULT_FIT_WINDOW[0])
    p.add_argument("--fit-to", type=float, default=DEFAULT_FIT_WINDOW[1])
    p.add_argument("--no-fit", action="store_true")
    p.add_argument("--marker", type=float, action="append", default=[], metavar="YEAR")
    p.add_argument("--title")
    p.add_argument("--width", type=int, default=900)
    p.add_argument("--height", type=int, default=600)
    p.set_defaults(func=cmd_fig)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hypergrowth: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, RegionFailure, IoFailure, InsufficientSide, EmptyRegime) as exc:
        print(f"hypergrowth: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

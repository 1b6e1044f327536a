from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypergrowth.dataset import (
    BadNumber,
    DuplicateRegion,
    DuplicateYear,
    InvertedWindow,
    MalformedHeader,
    MalformedRow,
    NonPositiveGdp,
    Observation,
    RegionDataset,
    TimeSeries,
    bundled_benchmarks,
    load_dataset,
    parse_long_csv,
    parse_maddison_horizontal,
    to_long_csv,
    window,
)

from .conftest import FIXTURES

HEADER = "region,year,gdp\n"


class TestObservation:
    def test_rejects_non_positive_gdp(self):
        with pytest.raises(ValueError):
            Observation(1820, 0.0)
        with pytest.raises(ValueError):
            Observation(1820, -1.0)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Observation(float("nan"), 1.0)
        with pytest.raises(ValueError):
            Observation(1820, float("inf"))


class TestTimeSeries:
    def test_years_must_increase(self):
        with pytest.raises(ValueError):
            TimeSeries("X", (Observation(1900, 1.0), Observation(1800, 1.0)))

    def test_duplicate_year(self):
        with pytest.raises(DuplicateYear):
            TimeSeries("X", (Observation(1900, 1.0), Observation(1900, 2.0)))

    def test_from_pairs_sorts(self):
        s = TimeSeries.from_pairs("X", [1900, 1820, 1870], [3.0, 1.0, 2.0])
        assert list(s.years) == [1820, 1870, 1900]
        assert list(s.values) == [1.0, 2.0, 3.0]

    def test_empty_span_raises(self):
        with pytest.raises(ValueError):
            TimeSeries("X").span


class TestParseLong:
    def test_two_regions(self):
        ds = parse_long_csv(HEADER + "World,1820,2.0\nWorld,1870,4.0\nAsia,1820,1.0")
        assert ds.regions == ["World", "Asia"]
        assert len(ds["World"]) == 2
        assert ds["Asia"][0] == Observation(1820.0, 1.0)

    def test_non_positive(self):
        with pytest.raises(NonPositiveGdp) as exc:
            parse_long_csv(HEADER + "World,1820,0")
        assert exc.value.line == 2

    def test_duplicate_year(self):
        with pytest.raises(DuplicateYear) as exc:
            parse_long_csv(HEADER + "World,1820,2.0\nWorld,1820,2.1")
        assert (exc.value.region, exc.value.year) == ("World", 1820.0)

    @pytest.mark.parametrize("header", ["", "year,region,gdp\n", "region,year\n"])
    def test_bad_header(self, header):
        with pytest.raises(MalformedHeader):
            parse_long_csv(header + "World,1820,2.0\n")

    def test_bad_number_reports_line(self):
        with pytest.raises(BadNumber) as exc:
            parse_long_csv(HEADER + "World,1820,2.0\nWorld,18x0,2.0\n")
        assert exc.value.line == 3
        assert "line 3" in str(exc.value)

    def test_wrong_field_count(self):
        with pytest.raises(MalformedRow):
            parse_long_csv(HEADER + "World,1820\n")

    def test_blank_lines_crlf_and_bom(self):
        text = "﻿region,year,gdp\r\n\r\nWorld,1870,4.0\r\nWorld,1820,2.0\r\n\r\n"
        s = parse_long_csv(text)["World"]
        assert list(s.years) == [1820.0, 1870.0]

    def test_fractional_years(self):
        s = parse_long_csv(HEADER + "X,1820.5,1\nX,1821.25,2\n")["X"]
        assert list(s.years) == [1820.5, 1821.25]


class TestParseHorizontal:
    def test_gaps_are_absent(self):
        ds = parse_maddison_horizontal(",1,1000,1500\nWorld,,100.0,200.0\nAfrica,5.0,,7.0\n")
        assert [(o.year, o.gdp) for o in ds["World"]] == [(1000.0, 100.0), (1500.0, 200.0)]
        assert [(o.year, o.gdp) for o in ds["Africa"]] == [(1.0, 5.0), (1500.0, 7.0)]

    def test_bad_cell_names_row_and_column(self):
        with pytest.raises(BadNumber) as exc:
            parse_maddison_horizontal(",1,1000\nWorld,1.0,abc\n")
        assert (exc.value.line, exc.value.column) == (2, 3)
        assert "row 2, column 3" in str(exc.value)

    def test_non_positive_cell(self):
        with pytest.raises(NonPositiveGdp) as exc:
            parse_maddison_horizontal(",1,1000\nWorld,1.0,-2\n")
        assert exc.value.column == 3

    def test_thousands_separators_and_scale(self):
        ds = parse_maddison_horizontal(',1820,1870\nWorld,"695,346","1,112,655"\n', scale=1e-3)
        assert list(ds["World"].values) == pytest.approx([695.346, 1112.655])

    def test_title_rows_skipped(self):
        ds = parse_maddison_horizontal(",1820,1870\nRegional totals,,\nWorld,1,2\n")
        assert ds.regions == ["World"]

    def test_duplicate_region(self):
        with pytest.raises(DuplicateRegion):
            parse_maddison_horizontal(",1820\nWorld,1\nWorld,2\n")

    def test_value_under_unlabelled_column(self):
        with pytest.raises(MalformedRow):
            parse_maddison_horizontal(",1820,\nWorld,1,2\n")

    def test_header_must_have_years(self):
        with pytest.raises(MalformedHeader):
            parse_maddison_horizontal("Region,Name\nWorld,1\n")

    def test_matches_long_form(self, benchmarks):
        text = (FIXTURES / "maddison_horizontal_millions.csv").read_text()
        wide = parse_maddison_horizontal(text, scale=1e-3)
        assert len(wide.flatten()) == len(benchmarks.flatten())
        for (r1, y1, g1), (r2, y2, g2) in zip(wide.flatten(), benchmarks.flatten()):
            assert (r1, y1) == (r2, y2)
            assert g1 == pytest.approx(g2, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.lists(
                st.one_of(st.none(), st.floats(0.001, 1e6, allow_nan=False)),
                min_size=4,
                max_size=4,
            ),
            min_size=1,
            max_size=5,
        )
    )
    def test_never_invents_observations(self, grid):
        lines = [",1,1000,1500,1820"]
        for i, row in enumerate(grid):
            lines.append(f"R{i}," + ",".join("" if v is None else repr(v) for v in row))
        ds = parse_maddison_horizontal("\n".join(lines) + "\n")
        filled = sum(v is not None for row in grid for v in row)
        assert sum(len(s) for s in ds.series.values()) == filled


class TestWindow:
    @pytest.fixture
    def s(self):
        return TimeSeries.from_pairs("X", [1500, 1700, 1820, 1900], [1, 2, 3, 4])

    def test_inner(self, s):
        assert list(window(s, 1600, 1850).years) == [1700, 1820]

    def test_inclusive_single_year(self, s):
        assert list(window(s, 1500, 1500).years) == [1500]

    def test_empty_is_valid(self, s):
        assert len(window(s, 1901, 1950)) == 0

    def test_full_range_is_identity(self, s):
        assert window(s, *s.span) == s

    def test_inverted(self, s):
        with pytest.raises(InvertedWindow):
            window(s, 1900, 1800)


class TestRoundTrip:
    def test_bundled(self, benchmarks):
        again = parse_long_csv(to_long_csv(benchmarks), benchmarks.source)
        assert again == benchmarks

    def test_lf_only(self, benchmarks):
        assert "\r" not in to_long_csv(benchmarks)

    @settings(max_examples=50, deadline=None)
    @given(
        st.dictionaries(
            st.text("abcXYZ ", min_size=1, max_size=6).filter(lambda r: r.strip() == r),
            st.dictionaries(
                st.floats(1, 2100, allow_nan=False),
                st.floats(1e-6, 1e9, allow_nan=False),
                min_size=1,
                max_size=6,
            ),
            min_size=1,
            max_size=4,
        )
    )
    def test_property(self, data):
        ds = RegionDataset(
            {r: TimeSeries.from_pairs(r, obs.keys(), obs.values()) for r, obs in data.items()}
        )
        assert parse_long_csv(to_long_csv(ds)) == ds

    def test_shuffled_rows_same_dataset(self, benchmarks):
        rows = to_long_csv(benchmarks).splitlines()
        body = rows[1:]
        random.Random(7).shuffle(body)
        shuffled = parse_long_csv("\n".join([rows[0], *body]))
        for r in benchmarks.regions:
            assert shuffled[r] == benchmarks[r]


class TestLoad:
    def test_source_has_hash(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text(HEADER + "World,1820,2\n")
        ds = load_dataset(p)
        assert ds.source.startswith(str(p) + "#sha256=")
        assert len(ds.source.split("=")[-1]) == 16

    def test_scale_long(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text(HEADER + "World,1820,2000\n")
        assert load_dataset(p, scale=1e-3)["World"][0].gdp == pytest.approx(2.0)

    def test_unknown_format(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text(HEADER)
        with pytest.raises(ValueError):
            load_dataset(p, fmt="xls")

    def test_bundled_regions(self):
        ds = bundled_benchmarks()
        assert ds.regions == [
            "World",
            "Western Europe",
            "Eastern Europe",
            "Former USSR",
            "Asia",
            "Africa",
            "Latin America",
        ]
        assert all(len(s) == 11 for s in ds.series.values())

"""Reference-implementation checks against hand-derived values.

The numbers in this file were worked out on paper from the feature
definitions; they are frozen here so the reference cannot drift to match
the streaming engine.
"""

import math

import pytest

from nettisa.features import FEATURE_NAMES
from nettisa.oracle import (
    StoredSeries,
    oracle_avg_dispersion,
    oracle_avg_dispersion_exact,
    oracle_kurtosis,
    oracle_max,
    oracle_max_time_differences,
    oracle_mean,
    oracle_mean_relative_times,
    oracle_mean_time_differences,
    oracle_min,
    oracle_min_time_differences,
    oracle_record,
    oracle_report,
    oracle_rms,
    oracle_stdev,
    oracle_stdev_exact,
    oracle_switching_ratio,
    oracle_time_distribution,
)

X = [100.0, 200.0, 300.0]
T = [0.0, 1.0, 3.0]


def test_mean_min_max():
    assert oracle_mean(X) == 200.0
    assert oracle_min(X) == 100.0
    assert oracle_max(X) == 300.0


def test_stdev_accumulator_form():
    # sqrt(E[x^2] - E[x]^2) = sqrt(140000/3 - 40000) = sqrt(20000/3)
    assert oracle_stdev(X) == pytest.approx(math.sqrt(20000.0 / 3.0), rel=1e-12)
    assert oracle_stdev(X) == pytest.approx(81.64965809277261, rel=1e-12)


def test_stdev_exact_matches_population_formula():
    # same value for this series because the accumulator form is algebraically
    # identical in exact arithmetic
    assert oracle_stdev_exact(X) == pytest.approx(oracle_stdev(X), rel=1e-12)


def test_rms():
    # sqrt((100^2 + 200^2 + 300^2)/3) = sqrt(140000/3)
    assert oracle_rms(X) == pytest.approx(216.02468994692867, rel=1e-12)


def test_avg_dispersion_uses_running_mean():
    # running mean trace: 100, 150, 200 -> |dev| terms 0, 50, 100 -> mean 50
    assert oracle_avg_dispersion(X) == pytest.approx(50.0, rel=1e-12)


def test_avg_dispersion_exact_differs():
    # against the final mean 200 the deviations are 100, 0, 100 -> 200/3
    assert oracle_avg_dispersion_exact(X) == pytest.approx(200.0 / 3.0, rel=1e-12)
    assert oracle_avg_dispersion_exact(X) != pytest.approx(
        oracle_avg_dispersion(X), rel=1e-3)


def test_kurtosis():
    # dev terms vs running mean: 0, 50, 100; sum d^4 = 106250000
    # denominator n * stdev^4 = 3 * (20000/3)^2
    expected = 106250000.0 / (3 * (20000.0 / 3.0) ** 2)
    assert expected == pytest.approx(0.796875, rel=1e-12)
    assert oracle_kurtosis(X) == pytest.approx(expected, rel=1e-12)


def test_time_features():
    # relative times 0, 1, 3 -> mean 4/3
    assert oracle_mean_relative_times(T) == pytest.approx(4.0 / 3.0, rel=1e-12)
    # gaps 1, 2 -> mean 1.5
    assert oracle_mean_time_differences(T) == pytest.approx(1.5, rel=1e-12)
    assert oracle_min_time_differences(T) == 1.0
    assert oracle_max_time_differences(T) == 2.0


def test_time_distribution():
    # gap running mean trace: 1, 1.5 -> |dev| terms 0, 0.5 -> sum 0.5
    # (0.5 / 2) / (0.5 * (2 - 1)) = 0.5
    assert oracle_time_distribution(T) == pytest.approx(0.5, rel=1e-12)


def test_switching_ratio():
    # both transitions change the length: 2 / (0.5 * 2) = 2
    assert oracle_switching_ratio(X) == pytest.approx(2.0, rel=1e-12)
    assert oracle_switching_ratio([5.0, 5.0, 5.0, 7.0]) == pytest.approx(
        1.0 / 1.5, rel=1e-12)


def test_record_canonical_order():
    rec = oracle_record(X, T)
    got = dict(zip(FEATURE_NAMES, rec.as_tuple()))
    assert got["mean"] == 200.0
    assert got["switching_ratio"] == 2.0
    assert list(FEATURE_NAMES)[0] == "mean"
    assert list(FEATURE_NAMES)[-1] == "switching_ratio"


def test_single_packet_zero_fill():
    rec = oracle_record([123.0], [45.0])
    assert rec.mean == 123.0
    assert rec.min == 123.0
    assert rec.max == 123.0
    for name in ("stdev", "avg_dispersion", "kurtosis", "mean_relative_times",
                 "mean_time_differences", "min_time_differences",
                 "max_time_differences", "time_distribution", "switching_ratio"):
        assert getattr(rec, name) == 0.0, name
    # rms of one sample is the sample
    assert rec.rms == 123.0


def test_two_packet_time_distribution_zero():
    # needs at least three packets (two gaps) to have a gap range
    rec = oracle_record([10.0, 20.0], [0.0, 1.0])
    assert rec.time_distribution == 0.0
    assert rec.mean_time_differences == 1.0


def test_constant_gaps_time_distribution_zero():
    # max gap == min gap -> normalizing range is zero -> defined as 0
    rec = oracle_record([1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 2.0, 3.0])
    assert rec.time_distribution == 0.0


def test_constant_payload_kurtosis_zero():
    rec = oracle_record([7.0, 7.0, 7.0], [0.0, 1.0, 2.0])
    assert rec.stdev == 0.0
    assert rec.kurtosis == 0.0
    assert rec.switching_ratio == 0.0


def test_negative_gap_clamps():
    # reordered capture: gap -1 clamps to 0 and participates in min
    assert oracle_min_time_differences([0.0, 2.0, 1.0]) == 0.0
    assert oracle_max_time_differences([0.0, 2.0, 1.0]) == 2.0


def test_report_names_both_routes():
    rep = oracle_report(X, T)
    assert rep["approx"].avg_dispersion == pytest.approx(50.0)
    assert rep["exact"]["avg_dispersion"] == pytest.approx(200.0 / 3.0)
    assert rep["gap"]["avg_dispersion"] == pytest.approx(200.0 / 3.0 - 50.0)


def test_stored_series_guards():
    with pytest.raises(ValueError):
        oracle_record([], [])
    with pytest.raises(ValueError):
        oracle_record([1.0], [1.0, 2.0])
    s = StoredSeries()
    s.lengths += [10.0, 20.0]
    s.times += [1.0, 2.0]
    assert oracle_record(s.lengths, s.times).mean == 15.0

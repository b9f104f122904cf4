import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tqdmotion.config import ModelConfig
from tqdmotion.correlator import DIRECTIONS, DirectionalField, normalize
from tqdmotion.exceptions import ContractError, InvalidParameterError, WarmupError
from tqdmotion.metrics import (CSV_HEADER, MetricsReport, ReportCell, ThresholdSchedule,
                               compare_models, count_detections, detection_rate,
                               normalized_points)
from tqdmotion.stimulus import StimulusSpec, generate


def count_loop(values, gamma):
    out = [0, 0, 0, 0]
    for k in range(4):
        for v in values[k].ravel():
            if v > gamma:
                out[k] += 1
    return out


def test_default_schedule():
    g = ThresholdSchedule().gammas
    assert g[0] == 0.01 and g[-1] == 0.5 and len(g) == 11
    assert g[1:] == tuple(round(0.05 * i, 2) for i in range(1, 11))


@pytest.mark.parametrize("text", ["0.05,0.1", "0.01,0.01", "0.01,0.2,0.1", "0.01,1.5", "", "a,b"])
def test_schedule_validation(text):
    with pytest.raises(InvalidParameterError):
        ThresholdSchedule.parse(text)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 6, 5), elements=st.floats(0, 1)), st.floats(0.001, 1.0))
def test_counts_match_exhaustive_loop(v, gamma):
    assert list(count_detections(DirectionalField(v), gamma)) == count_loop(v, gamma)


def test_threshold_is_strict():
    v = np.zeros((4, 1, 2))
    v[0, 0, 0] = 0.5
    v[0, 0, 1] = 1.0
    assert list(count_detections(DirectionalField(v), 0.5)) == [1, 0, 0, 0]


def test_counts_require_normalised_field():
    with pytest.raises(ContractError):
        count_detections(DirectionalField(np.full((4, 2, 2), 2.0)), 0.1)
    with pytest.raises(ContractError):
        count_detections(DirectionalField(np.zeros((4, 2, 2))), 0.0)


def test_detection_rate_values():
    assert detection_rate([3, 1, 0, 0], 0.0) == 0.75
    assert detection_rate([3, 1, 0, 0], "up") == 0.25
    assert detection_rate([0, 0, 0, 0], 0.0) is None


def test_normalized_points():
    assert normalized_points([6, 3, 1]) == [0.6, 0.3, 0.1]
    assert normalized_points([0, 0]) == [None, None]


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 6, 6), elements=st.floats(0, 1e3)))
def test_np_is_nonincreasing_for_any_field(v):
    cell = ReportCell.from_field(DirectionalField(v), ThresholdSchedule(), 0.0, 0)
    vals = [x for x in cell.np_ if x is not None]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def make_report():
    rng = np.random.default_rng(0)
    a = DirectionalField(rng.random((4, 5, 5)) * [[[1]], [[0]], [[0.005]], [[0]]], 0.84, "improved")
    b = DirectionalField(rng.random((4, 5, 5)), 0.84, "classic")
    cells = [ReportCell.from_field(f, ThresholdSchedule(), 0.0, 840, 250.0) for f in (a, b)]
    return MetricsReport(cells, ThresholdSchedule(), ModelConfig())


def test_csv_layout():
    lines = make_report().to_csv().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 2 * 11 * 4
    first = lines[1].split(",")
    assert first[:5] == ["improved", "250.0", "840", "0.01", "0.0"]


def test_summary_and_checks():
    rep = make_report()
    s = json.loads(rep.summary())
    assert s["schedule"][0] == 0.01
    assert s["config"]["tau3"] == ModelConfig().tau3
    checks = rep.checks()["250.0"]
    assert checks["improved_np_nonincreasing"] and checks["classic_np_nonincreasing"]
    assert checks["improved_dr_ge_classic_at_first_gamma"]
    assert checks["improved_dr_min"]


def test_undefined_dr_is_an_empty_csv_cell():
    cell = ReportCell.from_field(DirectionalField(np.zeros((4, 2, 2))), ThresholdSchedule(), 0.0, 0)
    rep = MetricsReport([cell], ThresholdSchedule())
    row = rep.to_csv().splitlines()[1].split(",")
    assert row[6] == "" and row[7] == ""


def test_combine_and_lookup():
    rep = MetricsReport.combine([make_report(), make_report()])
    assert len(rep.cells) == 4
    assert rep.cell("classic", 250.0).variant == "classic"
    with pytest.raises(KeyError):
        rep.cell("classic", 100.0)


def test_compare_models_refuses_warmup_frames():
    spec = StimulusSpec(width=8, height=6, frame_count=5, velocity=100.0)
    with pytest.raises(WarmupError):
        compare_models(generate(spec), ModelConfig(), ThresholdSchedule(), 3, 0.0)


def test_compare_models_evaluates_both_variants():
    cfg = ModelConfig()
    spec = StimulusSpec(width=24, height=16, frame_count=420, velocity=250.0, texture="blocks", seed=1)
    rep = compare_models(generate(spec), cfg, ThresholdSchedule(), 410, 0.0, 250.0)
    assert {c.variant for c in rep.cells} == {"classic", "improved"}
    assert all(c.frame == 410 for c in rep.cells)
    with pytest.raises(ContractError):
        compare_models(generate(spec), cfg, ThresholdSchedule(), 500, 0.0)

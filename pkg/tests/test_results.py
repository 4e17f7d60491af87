from __future__ import annotations

import json
import math

import pytest

from hubbard_trotter.results import ExperimentPoint, ResultSet


def _points():
    return [
        ExperimentPoint(0.25, 0.01, [0.24, 0.26], r=1, tau=0.5, diagnostics={"k": (1, 2)}, wall_time=0.3),
        ExperimentPoint(-0.1, r=2, tau=1.0, depth={"depth": 46}, wall_time=0.5, timings={"sweep_seconds": 0.4}),
    ]


def test_json_round_trip_without_timing():
    rs = ResultSet({"name": "x", "values": (1, 2)}, _points())
    text = rs.to_json()
    back = ResultSet.from_json(text)
    assert back.to_json() == text
    assert back.points[0].diagnostics == {"k": [1, 2]}
    assert "wall_time" not in text and back.points[0].wall_time is None


def test_timing_only_serialized_on_request():
    rs = ResultSet({}, _points())
    d = json.loads(rs.to_json(include_timing=True))
    assert d["points"][1]["wall_time"] == 0.5
    assert d["points"][1]["timings"] == {"sweep_seconds": 0.4}


def test_timing_sidecar_merges_back():
    rs = ResultSet({}, _points())
    side = rs.timings()
    assert side == {"1": {"wall_time": 0.3}, "2": {"wall_time": 0.5, "sweep_seconds": 0.4}}
    back = ResultSet.from_json(rs.to_json())
    back.merge_timings(side)
    assert back.points[1].wall_time == 0.5 and back.points[1].timings == {"sweep_seconds": 0.4}


def test_points_must_be_ordered():
    with pytest.raises(ValueError):
        ResultSet({}, list(reversed(_points())))


def test_non_finite_values_become_strings():
    p = ExperimentPoint(float("nan"), diagnostics={"x": math.inf})
    d = p.to_dict()
    assert d["value"] == "nan" and d["diagnostics"]["x"] == "inf"
    assert math.isnan(ExperimentPoint.from_dict(d).value)


def test_attachments_are_not_serialized():
    rs = ResultSet({}, _points(), attachments={"log": object()})
    assert "log" not in rs.to_json()
    assert rs == ResultSet({}, _points())

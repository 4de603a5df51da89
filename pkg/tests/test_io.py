import json

import jsonschema
import numpy as np
import pytest

from repulsive_abc.inference.mcmc import PosteriorSamples
from repulsive_abc.io import (
    PatternFormatError,
    dump_json,
    read_pattern,
    read_posterior_csv,
    summary_document,
    validate_summary,
    write_pattern,
    write_posterior_csv,
)
from repulsive_abc.models import ModelKind
from repulsive_abc.pattern import PointPattern, Window

UNIT = Window.unit()


def test_pattern_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    w = Window(-3.5, 1e-3, 10, 10.7)
    pts = np.column_stack([rng.uniform(w.x_min, w.x_max, 300), rng.uniform(w.y_min, w.y_max, 300)])
    pts[0] = (w.x_min, w.y_max)
    p = PointPattern(pts, w)
    write_pattern(p, tmp_path / "p.csv")
    q = read_pattern(tmp_path / "p.csv")
    assert q.window == w
    np.testing.assert_array_equal(q.points, p.points)


def test_header_only_file_is_empty_pattern(tmp_path):
    f = tmp_path / "e.csv"
    f.write_text("# window 0 1 0 1\nx,y\n")
    assert read_pattern(f).n() == 0


def test_eighty_nine_rows(tmp_path):
    rng = np.random.default_rng(1)
    f = tmp_path / "trees.csv"
    f.write_text("# window 0 1 0 1\nx,y\n" + "".join(f"{x},{y}\n" for x, y in rng.random((89, 2))))
    p = read_pattern(f)
    assert p.n() == 89 and p.window == UNIT


@pytest.mark.parametrize(
    "body, line",
    [
        ("# window 0 1 0 1\nx,y\n0.1,0.2\n1.5,0.3\n", 4),
        ("# window 0 1 0 1\nx,y\n0.1,abc\n", 3),
        ("# window 0 1 0 1\nx,y\n0.1,0.2,0.3\n", 3),
        ("# window 0 1 0 1\nx,y\nnan,0.2\n", 3),
        ("# window 0 1 1 0\nx,y\n", 1),
        ("0.1,0.2\n", 1),
        ("# window 0 1 0 1\nu,v\n", 2),
    ],
)
def test_read_errors_name_the_line(tmp_path, body, line):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(PatternFormatError, match=f"bad.csv:{line}:"):
        read_pattern(f)


def test_out_of_window_error_mentions_point(tmp_path):
    f = tmp_path / "o.csv"
    f.write_text("# window 0 1 0 1\nx,y\n1.25,0.5\n")
    with pytest.raises(PatternFormatError, match="outside the window"):
        read_pattern(f)


def samples(kind, theta, eps=0.0):
    theta = np.asarray(theta, float)
    return PosteriorSamples(kind, theta, np.arange(1, len(theta) + 1), np.full(len(theta), 88.0), 0.25, 1, eps,
                            seed=7, prior=("beta ~ uniform(50, 400)", "gamma ~ uniform(0, 1)"))


def test_posterior_csv_round_trip(tmp_path):
    kind = ModelKind("strauss", {"R": 0.05})
    s = samples(kind, np.random.default_rng(2).random((20, 2)) * [300, 1])
    write_posterior_csv(s, tmp_path / "post.csv")
    lines = (tmp_path / "post.csv").read_text().splitlines()
    assert lines[0] == "beta,gamma,sim_count"
    back = read_posterior_csv(tmp_path / "post.csv", kind)
    np.testing.assert_array_equal(back.theta, s.theta)
    np.testing.assert_array_equal(back.sim_count, s.sim_count)
    with pytest.raises(ValueError):
        read_posterior_csv(tmp_path / "post.csv", ModelKind("dpp_gauss"))


def test_summary_document_validates():
    kind = ModelKind("strauss", {"R": 0.05})
    a = samples(kind, [[180, 0.1], [200, 0.2], [190, 0.15]])
    b = samples(kind, [[170, 0.12], [210, 0.3]], eps=0.0)
    doc = summary_document([a, b], 7, {"run": {"seed": 7}})
    validate_summary(doc)
    assert doc["draws"] == 5
    assert set(doc["parameters"]) == {"beta", "gamma", "n"}
    assert doc["parameters"]["beta"]["mean"] == pytest.approx(190.0)
    assert len(doc["chains"]) == 2
    inf_doc = summary_document([samples(kind, [[180, 0.1]], eps=float("inf"))], 1, {})
    assert inf_doc["epsilon"] is None
    validate_summary(inf_doc)


def test_schema_rejects_malformed_summary():
    kind = ModelKind("hpp")
    doc = summary_document([samples(kind, [[100.0], [101.0]])], 3, {})
    bad = json.loads(json.dumps(doc))
    bad["parameters"]["lam"]["sd"] = -1.0
    with pytest.raises(jsonschema.ValidationError):
        validate_summary(bad)
    extra = dict(doc, surprise=1)
    with pytest.raises(jsonschema.ValidationError):
        validate_summary(extra)


def test_dump_json_is_canonical(tmp_path):
    dump_json({"b": 1, "a": [0.1, 2]}, tmp_path / "x.json")
    assert (tmp_path / "x.json").read_text() == '{\n  "a": [\n    0.1,\n    2\n  ],\n  "b": 1\n}\n'
    with pytest.raises(ValueError):
        dump_json({"x": float("nan")}, tmp_path / "y.json")

import json

import numpy as np
import pytest

from qredist.linalg import RegisterLayout, random_state
from qredist.statefile import StateFileError, dumps_state, fmt, loads_state


def test_fmt_is_seventeen_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(2) == "2"
    assert fmt(float("inf")) == "inf"
    assert fmt(float("-inf")) == "-inf"
    assert fmt(float("nan")) == "nan"


@pytest.mark.parametrize("kind", ["pure", "density"])
def test_round_trip_is_lossless(kind):
    s = random_state(kind, RegisterLayout.of(["R", "A", "C"], [2, 3, 2]), 11)
    back = loads_state(dumps_state(s))
    assert back.layout == s.layout
    if kind == "pure":
        assert np.array_equal(back.amplitudes, s.amplitudes)
    else:
        assert np.array_equal(back.matrix, s.matrix)


def _doc(**kw):
    base = {"labels": ["A"], "dims": [2], "kind": "pure", "data": [[1, 0], [0, 0]]}
    base.update(kw)
    return json.dumps(base)


@pytest.mark.parametrize("doc, field", [
    ('{"labels": ["A"], "dims": [2], "kind": "pure"}', "data"),
    (_doc(labels="A"), "labels"),
    (_doc(dims=[0]), "dims"),
    (_doc(dims=[2, 2]), "labels"),
    (_doc(kind="mixed"), "kind"),
    (_doc(data=[[1, 0]]), "data"),
    (_doc(data=[[1, 0], ["x", 0]]), "data"),
    (_doc(labels=["A", "A"], dims=[2, 2], data=[[1, 0]] + [[0, 0]] * 3), "labels"),
])
def test_schema_errors_name_the_field(doc, field):
    with pytest.raises(StateFileError, match=field):
        loads_state(doc)


def test_invariant_violation_reports_residual():
    with pytest.raises(StateFileError, match="norm"):
        loads_state(_doc(data=[[1, 0], [1, 0]]))
    doc = json.dumps({"labels": ["A"], "dims": [2], "kind": "density",
                      "data": [[0.7, 0], [0, 0], [0, 0], [0.7, 0]]})
    with pytest.raises(StateFileError, match="trace 1.4"):
        loads_state(doc)


def test_not_json():
    with pytest.raises(StateFileError, match="JSON"):
        loads_state("{")

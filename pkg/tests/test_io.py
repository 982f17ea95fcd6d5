import json

import numpy as np
import pytest

from holocalc import io
from holocalc.calib import Calibration, DerivedSeminorm, WeightedSup
from holocalc.errors import DimensionError, PreconditionError


def test_operator_round_trip():
    A = np.array([[1 + 2j, -0.5], [3e-17, 1e300j]])
    B = io.operator_from_json(json.loads(io.dumps(io.operator_to_json(A))))
    assert np.array_equal(A, B)


def test_operator_errors():
    with pytest.raises(DimensionError):
        io.operator_from_json({"dim": 3, "re": [[1, 0], [0, 1]]})
    with pytest.raises(DimensionError):
        io.operator_from_json({"re": [[1, 0]]})
    with pytest.raises(DimensionError):
        io.operator_from_json({"re": [[1, 0], [0, 1]], "im": [[0]]})
    with pytest.raises(PreconditionError):
        io.operator_from_json({"im": [[0]]})


def test_calibration_round_trip():
    D = DerivedSeminorm(np.array([[1, 1j, 0], [0, 0, 2]]), {"n": 1})
    P = Calibration((WeightedSup([1, 0, 2]), D), principal=False)
    Q = io.calibration_from_json(json.loads(io.dumps(io.calibration_to_json(P))))
    x = np.array([0.3, -1j, 2.0])
    assert np.allclose(P.evaluate(x), Q.evaluate(x))
    with pytest.raises(DimensionError):
        io.calibration_from_json({"dim": 2, "seminorms": [{"weights": [1, 1, 1]}]})
    with pytest.raises(PreconditionError):
        io.calibration_from_json({"seminorms": [{"kind": "mystery"}]})


def test_dumps_is_deterministic_and_plain():
    obj = {"b": np.float64(np.inf), "a": np.array([1 + 1j]), "c": np.bool_(True), 2: np.int64(3)}
    text = io.dumps(obj)
    assert text == io.dumps(dict(reversed(list(obj.items()))))
    back = json.loads(text)
    assert back == {"a": {"re": [1.0], "im": [1.0]}, "b": "inf", "c": True, "2": 3}

"""Number formatting and document structure for the export layer."""

import json
import math

import numpy as np
import pytest

from moonlab import output


class TestFmt:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (0.1, "0.1"),
            (1 / 3, "0.3333333333333333"),
            (5, "5"),
            (np.int64(7), "7"),
            (float("nan"), "nan"),
            (np.float64(2.5), "2.5"),
        ],
    )
    def test_shortest_roundtrip_forms(self, value, expected):
        assert output.fmt(value) == expected

    def test_floats_roundtrip_exactly(self):
        rng = np.random.default_rng(1)
        for v in rng.exponential(size=200):
            assert float(output.fmt(float(v))) == v


class TestJsonCleaning:
    def test_non_finite_becomes_null(self):
        doc = {"a": float("nan"), "b": [1.0, float("inf")], "c": np.array([1.0, 2.0])}
        text = output.dumps(doc)
        parsed = json.loads(text)
        assert parsed["a"] is None
        assert parsed["b"] == [1.0, None]
        assert parsed["c"] == [1.0, 2.0]

    def test_json_floats_roundtrip(self):
        value = 0.9166666666666666
        parsed = json.loads(output.dumps({"v": value}))
        assert parsed["v"] == value

    def test_metadata_carries_tool_identity(self):
        meta = output.metadata({"samples": 10})
        assert meta["tool"] == "moonlab"
        assert meta["config"]["samples"] == 10
        assert "generated_at" in meta

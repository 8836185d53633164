import pandas as pd
import pytest

import realpg as rpg
from realpg.app import report


def _reports():
    return {
        "real": rpg.metrics.report([1.0, 2.0, 3.5, 4.0], [1, 2, 3, 5]),
        "standard_rl": rpg.metrics.report([2.0, 2.0, 3.0, 4.0], [1, 2, 3, 5]),
    }


def test_dataframe():
    frame = report.dataframe(_reports())
    assert list(frame.index) == ["real", "standard_rl"]
    assert list(frame.columns) == report.COLUMNS
    assert frame.loc["real", "r"] > 0.9


def test_markdown():
    text = report.markdown(_reports())
    assert "real" in text and "rmse" in text


def test_summarize():
    frame = pd.DataFrame(
        {"estimator": ["real", "real", "sft"], "seed": [0, 1, 0], "r": [0.5, 0.7, 0.1], "rmse": [1.0, 0.8, 1.5]}
    )
    summary = report.summarize(frame, by=["estimator"])
    assert len(summary) == 2
    assert summary[("r", "mean")].iloc[0] == pytest.approx(0.6)
# =============================================================================
# IMPORTS
# =============================================================================
import pandas as pd

COLUMNS = ["r", "rho", "tau", "rmse", "mae", "mean_entropy", "mean_resp_len"]


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def dataframe(results_dict):
    """Table of metrics, one row per run.

    Parameters
    ----------
    results_dict : dict
        Run name to `MetricsReport` (or its `model_dump()`).
    """
    rows = []
    for name, report in results_dict.items():
        values = report if isinstance(report, dict) else report.model_dump()
        rows.append([round(float(values[column]), 4) for column in COLUMNS])
    return pd.DataFrame(rows, columns=COLUMNS, index=list(results_dict.keys()))


def markdown(results_dict):
    return dataframe(results_dict).to_markdown()


def summarize(frame, by, metrics=("r", "rmse")):
    """Mean and standard deviation of `metrics` over seeds, grouped by `by`."""
    return frame.groupby(list(by))[list(metrics)].agg(["mean", "std"]).reset_index()

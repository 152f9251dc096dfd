"""Deterministic CSV / JSON result files."""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
FORMATS = ("csv", "json")


def _round_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    return value


def records_frame(records: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """One row per record, columns in first-seen order."""
    columns: List[str] = []
    for record in records:
        columns.extend(key for key in record if key not in columns)
    return pd.DataFrame(list(records), columns=columns)


def write_results(records: Sequence[Dict[str, Any]], path: Union[str, Path], output_format: str = "csv") -> Path:
    """Write records with 12 significant digits; identical input gives identical bytes."""
    if output_format not in FORMATS:
        raise ValueError(f"output_format must be one of {FORMATS}, got {output_format!r}")
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)

    if output_format == "csv":
        frame = records_frame(records)
        frame.to_csv(path, index=False, float_format=f"%.{SIGNIFICANT_DIGITS}g", lineterminator="\n")
    else:
        rows = [{key: _round_value(value) for key, value in record.items()} for record in records]
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(rows, f, indent=2, ensure_ascii=False)
            f.write("\n")
    logger.info(f"Wrote {len(records)} records to {path}")
    return path

"""Long-format result rows shared by the verification and CLI layers."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

COLUMNS = ("experiment", "param_json", "value_name", "value", "reference", "ratio")


@dataclass(frozen=True)
class Row:
    experiment: str
    params: dict
    value_name: str
    value: float
    reference: float | None = None

    @property
    def ratio(self) -> float | None:
        if self.reference is None or self.reference == 0:
            return None
        return self.value / self.reference

    def as_list(self) -> list[str]:
        return [self.experiment, json.dumps(self.params, sort_keys=True, default=_jsonable),
                self.value_name, _fmt(self.value), _fmt(self.reference), _fmt(self.ratio)]


def _jsonable(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()

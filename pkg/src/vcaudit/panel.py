"""Analysis-panel construction: outcome coding, winsorization, interactions.

A panel is the rectangular form behind every regression: one outcome vector,
named regressor columns, optional fixed-effect group ids and cluster ids.
Rows failing the subsample filter are removed first, then rows with missing
values in any used column; both counts are reported and must add up.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .design import approx_age  # re-exported: age enters regressions as coded here

__all__ = [
    "Panel", "PanelSpec", "PanelError", "build_panel", "winsorize",
    "approx_age", "write_panel", "read_panel",
]


class PanelError(ValueError):
    """Raised when a panel cannot be built as specified."""


def winsorize(values, percentile: float = 95.0) -> np.ndarray:
    """Cap values above the nearest-rank percentile at that percentile value.

    The cap is the ``ceil(percentile/100 * n)``-th order statistic, so the
    result is idempotent and values at or below the cap pass through.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise PanelError("cannot winsorize an empty vector")
    if not 0.0 < percentile < 100.0:
        raise PanelError(f"percentile must lie in (0, 100), got {percentile}")
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        raise PanelError("cannot winsorize a vector with no finite values")
    rank = math.ceil(percentile / 100.0 * finite.size)
    cap = np.sort(finite)[rank - 1]
    return np.where(arr > cap, cap, arr)


@dataclass(frozen=True)
class PanelSpec:
    """Declarative regression layout.

    ``terms`` may include squared regressors as ``"name^2"``; interactions
    are (a, b) column pairs coded as elementwise products.  ``subsample`` is
    a pandas query string applied before any coding.
    """

    outcome: str
    terms: tuple[str, ...]
    interactions: tuple[tuple[str, str], ...] = ()
    fixed_effect: str | None = None
    cluster: str | None = None
    subsample: str | None = None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "terms": list(self.terms),
            "interactions": [list(pair) for pair in self.interactions],
            "fixed_effect": self.fixed_effect,
            "cluster": self.cluster,
            "subsample": self.subsample,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PanelSpec":
        return cls(
            outcome=payload["outcome"],
            terms=tuple(payload["terms"]),
            interactions=tuple(tuple(p) for p in payload.get("interactions", ())),
            fixed_effect=payload.get("fixed_effect"),
            cluster=payload.get("cluster"),
            subsample=payload.get("subsample"),
        )


@dataclass
class PanelMeta:
    n_input: int
    n_filtered_out: int
    n_missing_dropped: int
    n_rows: int
    spec: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_filtered_out": self.n_filtered_out,
            "n_missing_dropped": self.n_missing_dropped,
            "n_rows": self.n_rows,
            "spec": self.spec,
        }


@dataclass
class Panel:
    """Rectangular analysis dataset (no missing values by construction)."""

    outcome: np.ndarray
    columns: dict[str, np.ndarray]
    fe_group: np.ndarray | None = None
    cluster: np.ndarray | None = None
    meta: PanelMeta | None = None

    def __post_init__(self):
        n = len(self.outcome)
        for name, col in self.columns.items():
            if len(col) != n:
                raise PanelError(f"column {name!r} length {len(col)} != {n}")
        for name, vec in (("fe_group", self.fe_group), ("cluster", self.cluster)):
            if vec is not None and len(vec) != n:
                raise PanelError(f"{name} length {len(vec)} != {n}")

    @property
    def n_rows(self) -> int:
        return len(self.outcome)

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    @property
    def X(self) -> pd.DataFrame:
        return pd.DataFrame(self.columns)


def _base_column(records: pd.DataFrame, name: str) -> tuple[str, ...]:
    """Raw columns a term depends on (handles the ``^2`` suffix)."""
    if name.endswith("^2"):
        return (name[:-2],)
    return (name,)


def _coded_column(records: pd.DataFrame, name: str) -> np.ndarray:
    if name.endswith("^2"):
        base = records[name[:-2]].to_numpy(dtype=float)
        return base**2
    col = records[name]
    if col.dtype == bool:
        return col.to_numpy(dtype=float)
    return col.to_numpy(dtype=float)


def build_panel(records: pd.DataFrame, spec: PanelSpec) -> Panel:
    """Build a panel from raw records per the spec.

    Order of operations: subsample filter, listwise deletion on every used
    column, then coding (dummies as floats, squares, interaction products).
    """
    used_raw: list[str] = []
    for term in (spec.outcome, *spec.terms):
        used_raw.extend(_base_column(records, term))
    for a, b in spec.interactions:
        used_raw.extend(_base_column(records, a))
        used_raw.extend(_base_column(records, b))
    for extra in (spec.fixed_effect, spec.cluster):
        if extra is not None:
            used_raw.append(extra)
    unknown = [c for c in dict.fromkeys(used_raw) if c not in records.columns]
    if unknown:
        raise PanelError(f"unknown column(s): {unknown}")

    n_input = len(records)
    frame = records
    if spec.subsample:
        try:
            frame = frame.query(spec.subsample)
        except Exception as exc:  # pandas raises several types here
            raise PanelError(f"bad subsample filter {spec.subsample!r}: {exc}") from exc
    n_filtered_out = n_input - len(frame)

    value_cols = [c for c in dict.fromkeys(used_raw) if c not in (spec.fixed_effect, spec.cluster)]
    frame = frame.dropna(subset=value_cols)
    n_missing_dropped = n_input - n_filtered_out - len(frame)
    if len(frame) == 0:
        raise PanelError("panel is empty after filtering and missing-value drops")

    columns: dict[str, np.ndarray] = {}
    for term in spec.terms:
        columns[term] = _coded_column(frame, term)
    for a, b in spec.interactions:
        columns[f"{a}:{b}"] = _coded_column(frame, a) * _coded_column(frame, b)

    meta = PanelMeta(
        n_input=n_input,
        n_filtered_out=n_filtered_out,
        n_missing_dropped=n_missing_dropped,
        n_rows=len(frame),
        spec=spec.to_dict(),
    )
    return Panel(
        outcome=frame[spec.outcome].to_numpy(dtype=float),
        columns=columns,
        fe_group=frame[spec.fixed_effect].to_numpy() if spec.fixed_effect else None,
        cluster=frame[spec.cluster].to_numpy() if spec.cluster else None,
        meta=meta,
    )


def write_panel(panel: Panel, csv_path, meta_path=None) -> None:
    """Write ``panel.csv`` plus a ``panel.meta`` sidecar with drop counts."""
    frame = pd.DataFrame({"outcome": panel.outcome})
    for name, col in panel.columns.items():
        frame[name] = col
    if panel.fe_group is not None:
        frame["fe_group"] = panel.fe_group
    if panel.cluster is not None:
        frame["cluster"] = panel.cluster
    frame.to_csv(csv_path, index=False, float_format="%.12g")
    if meta_path is not None and panel.meta is not None:
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(panel.meta.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_panel(csv_path) -> Panel:
    frame = pd.read_csv(csv_path)
    fe = frame.pop("fe_group").to_numpy() if "fe_group" in frame.columns else None
    cluster = frame.pop("cluster").to_numpy() if "cluster" in frame.columns else None
    outcome = frame.pop("outcome").to_numpy(dtype=float)
    return Panel(
        outcome=outcome,
        columns={c: frame[c].to_numpy(dtype=float) for c in frame.columns},
        fe_group=fe,
        cluster=cluster,
    )

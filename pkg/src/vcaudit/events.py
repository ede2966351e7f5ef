"""Email tracking events: records, JSONL serialization, and parsing.

An opened email fetches a one-pixel tracking image and then streams a large
invisible image at a throttled download rate, so the bytes downloaded are a
clock: staying_seconds = bytes / rate.  Unopened emails leave only their
``sent`` event.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable

import pandas as pd

DOWNLOAD_RATE_BYTES_PER_S = 10_240  # 10 KB/s, binary convention

EVENT_KINDS = ("sent", "pixel_fetch", "bytes_progress", "click", "reply")
_KIND_ORDER = {k: i for i, k in enumerate(EVENT_KINDS)}


class MalformedLogError(ValueError):
    """Raised when an event log violates the tracking protocol."""


@dataclass(frozen=True)
class EmailEvent:
    """One tracked event for one email."""

    email_id: str
    kind: str
    t: datetime
    bytes: int | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise MalformedLogError(f"unknown event kind {self.kind!r}")
        if self.kind == "bytes_progress" and (self.bytes is None or self.bytes < 0):
            raise MalformedLogError("bytes_progress requires a non-negative byte count")

    def to_json(self) -> str:
        payload = {
            "email_id": self.email_id,
            "kind": self.kind,
            "bytes": self.bytes,
            "t": self.t.isoformat(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EmailEvent":
        payload = json.loads(line)
        return cls(
            email_id=payload["email_id"],
            kind=payload["kind"],
            t=datetime.fromisoformat(payload["t"]),
            bytes=payload.get("bytes"),
        )


def sort_events(events: Iterable[EmailEvent]) -> list[EmailEvent]:
    return sorted(events, key=lambda e: (e.t, e.email_id, _KIND_ORDER[e.kind]))


def write_event_log(events: Iterable[EmailEvent], path) -> None:
    """Write events as JSONL in global time order."""
    with open(path, "w", encoding="utf-8") as fh:
        for event in sort_events(events):
            fh.write(event.to_json() + "\n")


def read_event_log(path) -> list[EmailEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(EmailEvent.from_json(line))
    return events


def parse_events(
    events: Iterable[EmailEvent],
    download_rate_bytes_per_s: int = DOWNLOAD_RATE_BYTES_PER_S,
) -> pd.DataFrame:
    """Reduce an event log to per-email outcomes.

    Returns one row per email with columns ``opened``, ``staying_seconds``
    (max bytes downloaded divided by the throttled rate; 0.0 when unopened),
    ``open_count``, ``clicked`` and ``replied``.

    Raises :class:`MalformedLogError` if an email shows download progress
    without a preceding pixel fetch.
    """
    if download_rate_bytes_per_s <= 0:
        raise ValueError("download rate must be positive")
    per_email: dict[str, dict] = {}
    for event in sort_events(events):
        rec = per_email.setdefault(
            event.email_id,
            {"opened": False, "max_bytes": 0, "open_count": 0,
             "clicked": False, "replied": False},
        )
        if event.kind == "pixel_fetch":
            rec["opened"] = True
            rec["open_count"] += 1
        elif event.kind == "bytes_progress":
            if not rec["opened"]:
                raise MalformedLogError(
                    f"email {event.email_id}: bytes_progress without pixel_fetch"
                )
            rec["max_bytes"] = max(rec["max_bytes"], int(event.bytes or 0))
        elif event.kind == "click":
            rec["clicked"] = True
        elif event.kind == "reply":
            rec["replied"] = True
    rows = []
    for email_id in sorted(per_email):
        rec = per_email[email_id]
        rows.append(
            {
                "email_id": email_id,
                "opened": rec["opened"],
                "staying_seconds": rec["max_bytes"] / download_rate_bytes_per_s,
                "open_count": rec["open_count"],
                "clicked": rec["clicked"],
                "replied": rec["replied"],
            }
        )
    return pd.DataFrame(
        rows,
        columns=["email_id", "opened", "staying_seconds", "open_count", "clicked", "replied"],
    )

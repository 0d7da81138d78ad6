"""License-exempt duty-cycle budgeting.

The scheduler applies two constraints and returns the later start time:

* the per-packet off-time rule used by common LoRaWAN stacks,
  ``Toff = ToA * (1/limit - 1)`` measured from the end of the previous
  transmission, and
* a sliding one-hour window budget: the on-air time of all transmissions
  intersecting any window of one hour may never exceed ``limit * window``.

The off-time rule alone is not quite window-safe: at saturation a one-hour
window can pick up one extra burst (~ToA/window above the limit), so the
window constraint is enforced explicitly. ``check_duty_compliance`` is the
independent verifier: it re-scans a finished schedule at tx-segment
granularity with brute-force window placement.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .errors import ValidationError

#: Regulatory observation window for duty-cycle accounting.
REGULATORY_WINDOW_MS = 3_600_000


@dataclass(frozen=True)
class TxEntry:
    """One logged burst: total on-air ms plus the busy wall-clock span
    (>= on-air; Sigfox bursts include interframe gaps)."""

    start_ms: int
    on_air_ms: float
    busy_ms: float

    def __post_init__(self) -> None:
        if self.on_air_ms <= 0:
            raise ValidationError("on_air_ms must be positive")
        if self.busy_ms < self.on_air_ms:
            raise ValidationError("busy_ms cannot be below on_air_ms")

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.busy_ms


@dataclass
class DutyCycleLedger:
    """Single-writer transmission history for one node on one band."""

    band_limit: float = 0.01
    history: list[TxEntry] = field(default_factory=list)
    # cumulative on-air through each entry, kept aligned with history
    _prefix_on_air: list[float] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 < self.band_limit <= 1:
            raise ValidationError(f"band_limit {self.band_limit} outside (0, 1]")
        self._prefix_on_air = []
        total = 0.0
        for entry in self.history:
            total += entry.on_air_ms
            self._prefix_on_air.append(total)

    def record(self, start_ms: int, on_air_ms: float, busy_ms: float | None = None) -> TxEntry:
        busy = on_air_ms if busy_ms is None else busy_ms
        entry = TxEntry(start_ms, on_air_ms, busy)
        if self.history and entry.start_ms < self.history[-1].end_ms:
            raise ValidationError(
                f"tx at {start_ms} overlaps previous burst ending {self.history[-1].end_ms}"
            )
        self.history.append(entry)
        previous = self._prefix_on_air[-1] if self._prefix_on_air else 0.0
        self._prefix_on_air.append(previous + entry.on_air_ms)
        return entry


def duty_next_allowed(
    ledger: DutyCycleLedger,
    now_ms: int,
    intended_on_air_ms: float,
    intended_busy_ms: float | None = None,
) -> int:
    """Earliest start time >= now_ms at which the intended burst keeps both the
    per-packet off-time rule and the one-hour window budget."""
    if intended_on_air_ms <= 0:
        raise ValidationError("intended_on_air_ms must be positive")
    window = REGULATORY_WINDOW_MS
    budget = ledger.band_limit * window
    if intended_on_air_ms > budget:
        raise ValidationError(
            f"burst of {intended_on_air_ms} ms on-air can never fit a "
            f"{ledger.band_limit:.2%} budget over {window} ms"
        )

    t = now_ms
    if ledger.history:
        last = ledger.history[-1]
        off_time = last.on_air_ms * (1.0 / ledger.band_limit - 1.0)
        t = max(t, math.ceil(last.end_ms + off_time))

        # Window budget: a burst starting at t is visible to windows reaching
        # back to t - window; drop oldest entries until the remainder leaves
        # room. Entry k stops intersecting (t - window, t] once
        # t >= entry_k.end + window, and history ends are monotone, so the
        # smallest sufficient drop count comes from the on-air prefix sums.
        total = ledger._prefix_on_air[-1]
        need = total + intended_on_air_ms - budget
        if need > 0:
            k = bisect.bisect_left(ledger._prefix_on_air, need)
            t = max(t, math.ceil(ledger.history[k].end_ms + window))
    return t


def check_duty_compliance(
    segments: list[tuple[float, float]],
    band_limit: float,
    window_ms: float = REGULATORY_WINDOW_MS,
    tolerance_ms: float = 1e-6,
) -> list[tuple[float, float]]:
    """Brute-force sliding-window verifier over raw tx segments.

    segments: (start_ms, duration_ms) of every individual tx phase.
    Returns the list of violating windows as (window_start, on_air_in_window);
    empty means compliant. Windows are anchored at every segment start and end,
    which covers all extremal placements.
    """
    if not segments:
        return []
    segs = sorted(segments)
    budget = band_limit * window_ms
    anchors: set[float] = set()
    for start, dur in segs:
        end = start + dur
        # window ending at a segment end, and window starting at a segment start
        anchors.add(end - window_ms)
        anchors.add(start)

    violations: list[tuple[float, float]] = []
    for w_start in sorted(anchors):
        w_end = w_start + window_ms
        on_air = 0.0
        for start, dur in segs:
            end = start + dur
            if end <= w_start or start >= w_end:
                continue
            on_air += min(end, w_end) - max(start, w_start)
        if on_air > budget + tolerance_ms:
            violations.append((w_start, on_air))
    return violations

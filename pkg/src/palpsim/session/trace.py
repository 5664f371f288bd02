"""Force traces recorded at the step rate, and peak extraction for reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..haptics import DT


class ForceTrace:
    """Per-step samples of (t, |F|, position); appended once per 1 ms step."""

    def __init__(self):
        self._t: list[float] = []
        self._f: list[float] = []
        self._pos: list[tuple[float, float, float]] = []

    def append(self, t: float, magnitude: float, position) -> None:
        if self._t and t <= self._t[-1]:
            raise ValueError("trace timestamps must strictly increase")
        self._t.append(float(t))
        self._f.append(float(magnitude))
        p = np.asarray(position, dtype=np.float64)
        self._pos.append((float(p[0]), float(p[1]), float(p[2])))

    def __len__(self) -> int:
        return len(self._t)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self._t)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.asarray(self._f)

    @property
    def positions(self) -> np.ndarray:
        return np.asarray(self._pos).reshape(-1, 3)

    def downsampled(self, every: int = 20) -> list[dict]:
        """Every n-th sample (default 20 -> 50 Hz from the 1 kHz grid)."""
        return [
            {"t": self._t[i], "force_n": self._f[i]}
            for i in range(0, len(self._t), every)
        ]


@dataclass(frozen=True)
class Peak:
    t: float
    magnitude: float
    position: tuple[float, float, float]
    prominence: float


def _plateau_maxima(values: np.ndarray) -> list[int]:
    """Indices of local maxima; plateaus report their earliest sample.

    Endpoint runs are never peak candidates: a trace that ends while still
    rising reports no peak there.
    """
    n = len(values)
    maxima = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        if i > 0 and j < n - 1 and values[i - 1] < values[i] and values[j + 1] < values[i]:
            maxima.append(i)
        i = j + 1
    return maxima


def _prominence(values: np.ndarray, peak: int) -> float:
    """Topographic prominence: drop to the higher of the two base valleys."""
    height = values[peak]
    left_min = height
    i = peak - 1
    while i >= 0 and values[i] <= height:
        left_min = min(left_min, values[i])
        i -= 1
    right_min = height
    i = peak + 1
    n = len(values)
    while i < n and values[i] <= height:
        right_min = min(right_min, values[i])
        i += 1
    return float(height - max(left_min, right_min))


def detect_peaks(trace: ForceTrace, min_prominence: float = 0.1,
                 min_separation: float = 0.05) -> list[Peak]:
    """Prominent force peaks, at least ``min_separation`` seconds apart.

    Local maxima below ``min_prominence`` are dropped; of two surviving
    peaks closer than the separation window the larger wins (earlier on
    equal magnitude). Results are sorted by time.
    """
    values = trace.magnitudes
    times = trace.times
    if len(values) < 3:
        return []
    candidates = [
        (idx, _prominence(values, idx))
        for idx in _plateau_maxima(values)
    ]
    candidates = [(idx, prom) for idx, prom in candidates if prom >= min_prominence]
    # greedy by magnitude, earlier time wins ties
    candidates.sort(key=lambda item: (-values[item[0]], times[item[0]]))
    accepted: list[tuple[int, float]] = []
    for idx, prom in candidates:
        if all(abs(times[idx] - times[other]) >= min_separation for other, _ in accepted):
            accepted.append((idx, prom))
    accepted.sort(key=lambda item: times[item[0]])
    positions = trace.positions
    return [
        Peak(
            t=float(times[idx]),
            magnitude=float(values[idx]),
            position=tuple(positions[idx]),
            prominence=prom,
        )
        for idx, prom in accepted
    ]


def record_step(trace: ForceTrace, frame) -> None:
    """Append one simulation frame: proxy position in contact, device otherwise."""
    pos = frame.contact.proxy.position if frame.contact.in_contact else frame.probe.device_position
    trace.append(frame.t, frame.force_magnitude, pos)


def trace_from_arrays(times, magnitudes, positions=None) -> ForceTrace:
    """Build a trace from plain arrays (synthetic traces in tests and demos)."""
    trace = ForceTrace()
    times = np.asarray(times, dtype=np.float64)
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    if positions is None:
        positions = np.zeros((len(times), 3))
    for t, f, p in zip(times, magnitudes, np.asarray(positions, dtype=np.float64)):
        trace.append(float(t), float(f), p)
    return trace


def constant_rate_times(n: int, dt: float = DT) -> np.ndarray:
    return np.arange(n) * dt

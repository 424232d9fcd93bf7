"""Time-series storage and dataset construction for path measurements.

A store keeps per-series (timestamp, value) pairs with strictly
increasing timestamps, serves tail windows to the forecasting pipeline,
and round-trips through a plain CSV format (header ``t,<series>,...``,
one row per sample instant).  A seeded synthetic generator stands in
for a two-path wireless bandwidth trace: one path starts strong and
degrades, the other starts weak and improves, crossing partway through.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TelemetrySample:
    series_key: str
    t: float
    value: float


class InsufficientHistoryError(ValueError):
    def __init__(self, series_key: str, wanted: int, available: int):
        super().__init__(
            f"series {series_key!r} has {available} points, need {wanted}"
        )
        self.series_key = series_key
        self.wanted = wanted
        self.available = available


class TelemetryStore:
    """In-memory append-only series store with monotone timestamps.

    With a journal path, every accepted append is also written through
    to a flat ``series,t,value`` CSV, from which a store can be rebuilt.
    """

    def __init__(self, journal_path=None):
        self._times: dict[str, list[float]] = {}
        self._values: dict[str, list[float]] = {}
        self._journal = None
        if journal_path is not None:
            self._journal = open(journal_path, "a", newline="")
            self._journal_writer = csv.writer(self._journal)

    def append(self, sample: TelemetrySample) -> None:
        times = self._times.setdefault(sample.series_key, [])
        values = self._values.setdefault(sample.series_key, [])
        if times and sample.t <= times[-1]:
            raise ValueError(
                f"series {sample.series_key!r}: timestamp {sample.t} is not "
                f"after {times[-1]}"
            )
        times.append(sample.t)
        values.append(sample.value)
        if self._journal is not None:
            self._journal_writer.writerow(
                [sample.series_key, repr(sample.t), repr(sample.value)])
            self._journal.flush()

    @classmethod
    def from_journal(cls, journal_path) -> "TelemetryStore":
        store = cls()
        with open(journal_path, newline="") as fh:
            for key, t, value in csv.reader(fh):
                store.append(TelemetrySample(key, float(t), float(value)))
        return store

    def close(self) -> None:
        if self._journal is not None:
            self._journal.close()
            self._journal = None

    def extend(self, samples) -> None:
        for sample in samples:
            self.append(sample)

    def series_keys(self) -> "list[str]":
        return sorted(self._times)

    def length(self, series_key: str) -> int:
        return len(self._times.get(series_key, ()))

    def window(self, series_key: str, n: int) -> "list[float]":
        """Last n values of a series, oldest first."""
        values = self._values.get(series_key, [])
        if n > len(values):
            raise InsufficientHistoryError(series_key, n, len(values))
        return list(values[len(values) - n:])

    def series(self, series_key: str) -> "list[tuple[float, float]]":
        times = self._times.get(series_key, [])
        return list(zip(times, self._values.get(series_key, [])))

    def tail(self, series_key: str, n: int) -> "list[tuple[float, float]]":
        pts = self.series(series_key)
        if n > len(pts):
            raise InsufficientHistoryError(series_key, n, len(pts))
        return pts[len(pts) - n:]


@dataclass
class LaggedDataset:
    """Sliding lag windows: X[i] = values[i..i+n_lags), y[i] = values[i+n_lags]."""

    X: np.ndarray
    y: np.ndarray
    n_lags: int


def lagged_dataset(values, n_lags: int) -> LaggedDataset:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if n_lags < 1:
        raise ValueError("n_lags must be >= 1")
    if len(arr) <= n_lags:
        raise ValueError(
            f"need more than {n_lags} values to build lag windows, got {len(arr)}"
        )
    rows = len(arr) - n_lags
    X = np.empty((rows, n_lags))
    for i in range(rows):
        X[i] = arr[i:i + n_lags]
    y = arr[n_lags:].copy()
    return LaggedDataset(X, y, n_lags)


# -- CSV round trip -----------------------------------------------------------

def write_csv(path, columns: "dict[str, list[tuple[float, float]]]") -> None:
    """Write aligned series as ``t,<series>,...`` rows.

    All series must share the same timestamp column.
    """
    keys = list(columns)
    if not keys:
        raise ValueError("nothing to write")
    times = [t for t, _ in columns[keys[0]]]
    for key in keys[1:]:
        if [t for t, _ in columns[key]] != times:
            raise ValueError(f"series {key!r} timestamps differ from {keys[0]!r}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + keys)
        for i, t in enumerate(times):
            writer.writerow([repr(t)] + [repr(columns[k][i][1]) for k in keys])


def read_csv(path) -> "dict[str, list[tuple[float, float]]]":
    """Read the write_csv format back; timestamps must strictly increase."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t" or len(header) < 2:
            raise ValueError(f"{path}: expected header 't,<series>,...'")
        out: dict[str, list[tuple[float, float]]] = {k: [] for k in header[1:]}
        last_t = None
        for row in reader:
            t = float(row[0])
            if last_t is not None and t <= last_t:
                raise ValueError(f"{path}: t column must strictly increase")
            last_t = t
            for key, cell in zip(header[1:], row[1:]):
                out[key].append((t, float(cell)))
    return out


def store_from_csv(path) -> TelemetryStore:
    store = TelemetryStore()
    for key, points in read_csv(path).items():
        for t, value in points:
            store.append(TelemetrySample(key, t, value))
    return store


# -- synthetic two-path wireless trace ----------------------------------------

N_SAMPLES = 500
REGIME_SWITCH = 100   # strong-indoor regime ends here
RAMP = 50             # linear transition length, samples

PATH1_HIGH, PATH1_LOW = 45.0, 10.0
PATH2_LOW, PATH2_HIGH = 5.0, 35.0
PATH1_NOISE = (5.0, 3.0)
PATH2_NOISE = (2.0, 5.0)


def _two_regime(rng, high_first: bool, levels, noise) -> np.ndarray:
    lo, hi = levels
    base = np.empty(N_SAMPLES)
    base[:REGIME_SWITCH] = hi if high_first else lo
    ramp = np.linspace(0.0, 1.0, RAMP)
    target = lo if high_first else hi
    start = hi if high_first else lo
    base[REGIME_SWITCH:REGIME_SWITCH + RAMP] = start + ramp * (target - start)
    base[REGIME_SWITCH + RAMP:] = target
    n0, n1 = noise
    amplitude = np.where(np.arange(N_SAMPLES) < REGIME_SWITCH + RAMP // 2, n0, n1)
    values = base + rng.uniform(-1.0, 1.0, N_SAMPLES) * amplitude
    return np.clip(values, 0.0, None)


def generate_synthetic_wireless(seed: int) -> "tuple[np.ndarray, np.ndarray]":
    """Two 500-sample bandwidth traces at 1 s spacing, deterministic per seed.

    Path 1 runs high (~45 Mbps) then drops (~10); path 2 runs low (~5)
    then rises (~35); they cross during the ramp after sample 100.
    Values are clipped at 0.
    """
    rng = np.random.default_rng(seed)
    path1 = _two_regime(rng, True, (PATH1_LOW, PATH1_HIGH), PATH1_NOISE)
    path2 = _two_regime(rng, False, (PATH2_LOW, PATH2_HIGH), PATH2_NOISE)
    return path1, path2


def synthetic_columns(seed: int) -> "dict[str, list[tuple[float, float]]]":
    """Synthetic trace in CSV column form (t starting at 1.0, 1 s spacing)."""
    path1, path2 = generate_synthetic_wireless(seed)
    times = [float(i + 1) for i in range(N_SAMPLES)]
    return {
        "path1_mbps": list(zip(times, map(float, path1))),
        "path2_mbps": list(zip(times, map(float, path2))),
    }

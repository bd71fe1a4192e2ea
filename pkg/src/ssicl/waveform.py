"""Uniformly sampled multi-channel waveform record and its CSV layout.

CSV layout::

    # key=value            (metadata, one per line)
    t,<channel>,...        (header)
    0.000000000,...        (t fixed-point with 9 decimals, values in repr form)
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class WaveformRecord:
    sample_rate: float
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError(f"channels differ in length: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(next(iter(self.channels.values()))) if self.channels else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    def window(self, start: float, stop: float) -> slice:
        """Index slice covering ``start <= t < stop``."""
        i0 = int(np.ceil(start * self.sample_rate - 1e-9))
        i1 = int(np.ceil(stop * self.sample_rate - 1e-9))
        return slice(max(i0, 0), max(min(i1, len(self)), 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}={self.metadata[key]}\n")
        buf.write(f"# sample_rate={self.sample_rate!r}\n")
        names = list(self.channels)
        buf.write(",".join(["t", *names]) + "\n")
        cols = [self.channels[n] for n in names]
        for k, t in enumerate(self.t):
            buf.write(f"{t:.9f}")
            for c in cols:
                buf.write("," + repr(float(c[k])))
            buf.write("\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "WaveformRecord":
        meta: dict[str, str] = {}
        rows: list[list[float]] = []
        header: list[str] | None = None
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif header is None:
                header = line.split(",")
            else:
                rows.append([float(x) for x in line.split(",")])
        if header is None:
            raise ValueError("CSV has no header row")
        sample_rate = float(meta.pop("sample_rate"))
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        channels = {name: data[:, j] for j, name in enumerate(header) if name != "t"}
        return cls(sample_rate=sample_rate, channels=channels, metadata=meta)

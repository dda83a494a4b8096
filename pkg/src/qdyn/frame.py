"""Uniformly sampled multichannel signal container."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SignalFrame"]


@dataclass(frozen=True, eq=False)
class SignalFrame:
    sample_rate: float
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    t0: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError(f"channels differ in length: {sorted(lengths)}")
        object.__setattr__(
            self, "channels", {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        )

    def __len__(self) -> int:
        return next((len(v) for v in self.channels.values()), 0)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(f"unknown channel {name!r}; have {list(self.channels)}") from None

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.sample_rate

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    def with_channel(self, name: str, values) -> "SignalFrame":
        chans = dict(self.channels)
        chans[name] = np.asarray(values, dtype=float)
        return SignalFrame(self.sample_rate, chans, self.t0)

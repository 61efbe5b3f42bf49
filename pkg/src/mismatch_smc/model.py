"""Second-order plant with a mismatched disturbance channel.

The plant has the form

    x1' = x2 + z1 * d(t)
    x2' = a(x) + b(x) * u + z2 * d(t)

with z = [1, 0] for the benchmark, i.e. the disturbance enters the x1 equation
while the control enters the x2 equation.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DivergenceError

__all__ = [
    "PlantState",
    "PlantModel",
    "benchmark_plant",
    "plant_derivative",
    "Segment",
    "DisturbanceProfile",
    "disturbance_at",
    "scenario_profile",
    "zero_profile",
    "constant_profile",
    "max_abs_acceleration",
]


@dataclass(frozen=True, slots=True)
class PlantState:
    x1: float
    x2: float
    t: float = 0.0

    def is_finite(self) -> bool:
        return math.isfinite(self.x1) and math.isfinite(self.x2) and math.isfinite(self.t)


@dataclass(frozen=True)
class PlantModel:
    """Drift ``a(x1, x2)``, input gain ``b(x1, x2)`` and disturbance coefficients ``z``."""

    a: Callable[[float, float], float]
    b: Callable[[float, float], float]
    z: tuple[float, float] = (1.0, 0.0)
    name: str = "custom"

    def g1(self, x: PlantState) -> tuple[float, float]:
        return x.x2, self.a(x.x1, x.x2)

    def g2(self, x: PlantState) -> tuple[float, float]:
        return 0.0, self.b(x.x1, x.x2)


def _benchmark_a(x1: float, x2: float) -> float:
    return -x1 - x2 + x2 * x2 * math.cos(x1) + math.exp(x1)


def _unit_gain(x1: float, x2: float) -> float:
    return 1.0


def benchmark_plant() -> PlantModel:
    """a(x) = -x1 - x2 + x2^2 cos(x1) + exp(x1), b(x) = 1, z = [1, 0]."""
    return PlantModel(a=_benchmark_a, b=_unit_gain, z=(1.0, 0.0), name="benchmark")


def plant_derivative(state: PlantState, model: PlantModel, u: float, d: float) -> tuple[float, float]:
    """Right-hand side of the plant, ``g1(x) + g2(x) u + z d``.

    Raises:
        DivergenceError: if the derivative is not finite. The caller should
            reject the step.
    """
    x1, x2 = state.x1, state.x2
    z1, z2 = model.z
    dx1 = x2 + z1 * d
    dx2 = model.a(x1, x2) + model.b(x1, x2) * u + z2 * d
    if not (math.isfinite(dx1) and math.isfinite(dx2)):
        raise DivergenceError("plant", f"non-finite derivative at t={state.t:g}")
    return dx1, dx2


SEGMENT_KINDS = ("zero", "step", "multisine")


@dataclass(frozen=True)
class Segment:
    """One piece of a disturbance profile, active from ``start`` until the next segment.

    ``multisine`` evaluates ``amplitude * sum(sin(w t))`` at absolute time t (no
    shift to the segment start).
    """

    start: float
    kind: str = "zero"
    level: float = 0.0
    amplitude: float = 0.0
    frequencies: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ConfigError("kind", f"unknown segment kind {self.kind!r}; expected one of {SEGMENT_KINDS}")
        if not math.isfinite(self.start) or self.start < 0:
            raise ConfigError("start", f"must be a finite time >= 0, got {self.start!r}")
        if self.kind == "multisine" and not self.frequencies:
            raise ConfigError("frequencies", "multisine segment needs at least one frequency")
        object.__setattr__(self, "frequencies", tuple(float(w) for w in self.frequencies))

    @classmethod
    def zero(cls, start: float) -> "Segment":
        return cls(start=start, kind="zero")

    @classmethod
    def step(cls, start: float, level: float) -> "Segment":
        return cls(start=start, kind="step", level=level)

    @classmethod
    def multisine(cls, start: float, amplitude: float, frequencies: Sequence[float]) -> "Segment":
        return cls(start=start, kind="multisine", amplitude=amplitude, frequencies=tuple(frequencies))

    def value(self, t: float) -> float:
        if self.kind == "step":
            return self.level
        if self.kind == "multisine":
            return self.amplitude * sum(math.sin(w * t) for w in self.frequencies)
        return 0.0

    def acceleration(self, t: float) -> float:
        if self.kind == "multisine":
            return -self.amplitude * sum(w * w * math.sin(w * t) for w in self.frequencies)
        return 0.0


@dataclass(frozen=True)
class DisturbanceProfile:
    """Piecewise disturbance d(t). Segments are left-closed: ``[start_i, start_{i+1})``.

    Before the first segment start the disturbance is zero.
    """

    segments: tuple[Segment, ...] = ()
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        starts = tuple(s.start for s in segs)
        for i in range(1, len(starts)):
            if not starts[i] > starts[i - 1]:
                raise ConfigError(f"segments[{i}].start", "segment start times must be strictly increasing")
        object.__setattr__(self, "_starts", starts)

    def __call__(self, t: float) -> float:
        return disturbance_at(self, t)

    def active_segment(self, t: float) -> Segment | None:
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[i] if i >= 0 else None

    @property
    def event_times(self) -> tuple[float, ...]:
        """Segment start times after t=0, i.e. the instants where a new disturbance kicks in."""
        return tuple(s for s in self._starts if s > 0.0)


def disturbance_at(profile: DisturbanceProfile, t: float) -> float:
    seg = profile.active_segment(t)
    return 0.0 if seg is None else seg.value(t)


def scenario_profile() -> DisturbanceProfile:
    """Zero until 10 s, a 0.3 step until 20 s, then 0.15 (sin t + sin 2t)."""
    return DisturbanceProfile((
        Segment.zero(0.0),
        Segment.step(10.0, 0.3),
        Segment.multisine(20.0, 0.15, (1.0, 2.0)),
    ))


def zero_profile() -> DisturbanceProfile:
    return DisturbanceProfile((Segment.zero(0.0),))


def constant_profile(level: float, start: float = 0.0) -> DisturbanceProfile:
    if start > 0.0:
        return DisturbanceProfile((Segment.zero(0.0), Segment.step(start, level)))
    return DisturbanceProfile((Segment.step(0.0, level),))


def max_abs_acceleration(profile: DisturbanceProfile, t_end: float, dt: float = 1e-3) -> float:
    """Sampled sup |d''(t)| over [0, t_end], ignoring the impulses at step edges.

    For the benchmark multisine this is about 0.708, below the triangle-inequality
    bound 0.15 * (1 + 4) = 0.75.
    """
    ts = np.arange(0.0, t_end + 0.5 * dt, dt)
    peak = 0.0
    for seg_i, seg in enumerate(profile.segments):
        if seg.kind != "multisine":
            continue
        hi = profile.segments[seg_i + 1].start if seg_i + 1 < len(profile.segments) else np.inf
        mask = (ts >= seg.start) & (ts < hi)
        if not mask.any():
            continue
        acc = -seg.amplitude * sum(w * w * np.sin(w * ts[mask]) for w in seg.frequencies)
        peak = max(peak, float(np.max(np.abs(acc))))
    return peak

"""Sliding-mode control laws for the mismatched-disturbance plant.

Every law is a pure map from the measured state (plus observer outputs where
needed) to a :class:`ControlOutput`. The switching term is ``k * sgn(s)`` with
``sgn(0) = 0``; an optional boundary layer replaces it with ``k * sat(s / width)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, SingularInputGainError
from .model import PlantModel, PlantState

__all__ = [
    "ControllerKind",
    "ControllerGains",
    "IsmcState",
    "ControlOutput",
    "sgn",
    "sat",
    "smc_step",
    "ismc_step",
    "smc_bndo_step",
    "smc_sldo_step",
]


class ControllerKind(str, Enum):
    SMC = "smc"
    ISMC = "ismc"
    SMC_BNDO = "smc-bndo"
    SMC_SLDO = "smc-sldo"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class ControllerGains:
    """Sliding-surface slope ``lam`` and switching gain ``k``.

    ``boundary_layer`` is the saturation width; ``None`` keeps the discontinuous sgn.
    """

    lam: float = 5.0
    k: float = 6.5
    boundary_layer: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ConfigError("lam", f"must be > 0, got {self.lam!r}")
        if not (math.isfinite(self.k) and self.k > 0):
            raise ConfigError("k", f"must be > 0, got {self.k!r}")
        if self.boundary_layer is not None and not self.boundary_layer > 0:
            raise ConfigError("boundary_layer", f"must be > 0 or null, got {self.boundary_layer!r}")


@dataclass(frozen=True, slots=True)
class IsmcState:
    integral: float = 0.0


@dataclass(frozen=True, slots=True)
class ControlOutput:
    u: float
    s: float


def sgn(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def sat(v: float) -> float:
    return max(-1.0, min(1.0, v))


def _switch(s: float, g: ControllerGains) -> float:
    if g.boundary_layer is None:
        return g.k * sgn(s)
    return g.k * sat(s / g.boundary_layer)


def _input_gain(x: PlantState, model: PlantModel) -> float:
    b = model.b(x.x1, x.x2)
    if b == 0.0:
        raise SingularInputGainError(f"b(x) = 0 at x = ({x.x1:g}, {x.x2:g})")
    return b


def smc_step(x: PlantState, model: PlantModel, g: ControllerGains) -> ControlOutput:
    """Classical SMC: s = x2 + lam x1, u = -(a + lam x2 + k sgn s) / b."""
    b = _input_gain(x, model)
    s = x.x2 + g.lam * x.x1
    u = -(model.a(x.x1, x.x2) + g.lam * x.x2 + _switch(s, g)) / b
    return ControlOutput(u, s)


def ismc_step(x: PlantState, ist: IsmcState, model: PlantModel, g: ControllerGains) -> ControlOutput:
    """Integral SMC with surface x2 + 2 lam x1 + lam^2 * integral(x1).

    The integral is advanced by the simulation loop alongside the plant.
    """
    b = _input_gain(x, model)
    lam = g.lam
    s = x.x2 + 2.0 * lam * x.x1 + lam * lam * ist.integral
    u = -(model.a(x.x1, x.x2) + 2.0 * lam * x.x2 + lam * lam * x.x1 + _switch(s, g)) / b
    return ControlOutput(u, s)


def smc_bndo_step(x: PlantState, d_hat: float, model: PlantModel, g: ControllerGains) -> ControlOutput:
    b = _input_gain(x, model)
    s = x.x2 + g.lam * x.x1 + d_hat
    u = -(model.a(x.x1, x.x2) + g.lam * (x.x2 + d_hat) + _switch(s, g)) / b
    return ControlOutput(u, s)


def smc_sldo_step(
    x: PlantState, d_hat: float, d_hat_rate: float, model: PlantModel, g: ControllerGains
) -> ControlOutput:
    """SMC fed by the self-learning observer.

    Same surface as :func:`smc_bndo_step`, with the estimated disturbance rate
    added to the equivalent control so that ds/dt = -k sgn(s) + lam * e_d.
    """
    b = _input_gain(x, model)
    s = x.x2 + g.lam * x.x1 + d_hat
    u = -(model.a(x.x1, x.x2) + g.lam * (x.x2 + d_hat) + d_hat_rate + _switch(s, g)) / b
    return ControlOutput(u, s)

"""Disturbance observers: the basic nonlinear observer (BNDO) and the self-learning one (SLDO).

All updates are explicit Euler steps at the sampling period. Each update takes
the current measurement ``x`` and the control ``u`` that was applied since the
previous measurement; the observer keeps the previous measurement itself so
that the integration is causal.

The SLDO runs a BNDO whose correction term is fed with the SLDO estimate
instead of its own, so that the inner observer's rate is
``l.z * (d - d_hat_sl)``. Two cascaded filtered differentiators give the first and
second derivatives of that inner estimate; they form the learning surface
``eta = tau_c`` and the neuro-fuzzy inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DivergenceError
from .model import PlantModel, PlantState
from .neurofuzzy import NfsForwardResult, NfsParameters, nfs_adapt, nfs_forward

__all__ = [
    "BndoState",
    "FilteredDifferentiatorState",
    "SldoState",
    "bndo_update",
    "filtered_derivative_update",
    "conventional_estimation_law",
    "sldo_update",
]


@dataclass(frozen=True, slots=True)
class BndoState:
    """Observer gain ``l`` and internal state ``p``.

    ``p`` is ``None`` until the first measurement, which sets ``p = -l.x(0)``
    (zero initial estimate). ``x_prev`` and ``d_hat`` belong to the last
    measurement.
    """

    l: tuple[float, float] = (5.0, 0.0)
    p: float | None = None
    x_prev: PlantState | None = None
    d_hat: float = 0.0

    def lz(self, model: PlantModel) -> float:
        return self.l[0] * model.z[0] + self.l[1] * model.z[1]


def bndo_update(
    st: BndoState,
    x: PlantState,
    model: PlantModel,
    u: float,
    dt: float,
    feedback: float | None = None,
) -> tuple[BndoState, float]:
    """Advance p' = -l.z p - l (z l.x + g1(x) + g2(x) u) one step and return d_hat = p + l.x.

    The right-hand side is evaluated at the previous measurement with the
    control ``u`` held since then. ``feedback`` replaces the observer's own
    previous estimate ``p + l.x`` in the correction term; the SLDO passes its
    own estimate here.

    Raises:
        ConfigError: ``l.z <= 0`` or ``dt <= 0``.
        DivergenceError: non-finite internal state.
    """
    l1, l2 = st.l
    lz = l1 * model.z[0] + l2 * model.z[1]
    if not lz > 0.0:
        raise ConfigError("observer_gain", f"l.z must be > 0, got {lz!r}")
    if not dt > 0.0:
        raise ConfigError("dt", "must be > 0")
    if st.p is None or st.x_prev is None:
        p = -(l1 * x.x1 + l2 * x.x2)
    else:
        xp = st.x_prev
        est = st.d_hat if feedback is None else feedback
        # -l.z p - l.z (l.x) == -l.z * (p + l.x)
        drift = l1 * xp.x2 + l2 * (model.a(xp.x1, xp.x2) + model.b(xp.x1, xp.x2) * u)
        p = st.p + dt * (-lz * est - drift)
        if not math.isfinite(p):
            raise DivergenceError("observer", f"BNDO state non-finite at t={x.t:g}")
    d_hat = p + l1 * x.x1 + l2 * x.x2
    return BndoState(st.l, p, x, d_hat), d_hat


@dataclass(frozen=True, slots=True)
class FilteredDifferentiatorState:
    """First-order filtered differentiator N s / (s + N).

    ``y`` is the low-passed input; the derivative estimate is ``N (input - y)``.
    """

    bandwidth: float = 100.0
    y: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0.0:
            raise ConfigError("filter_bandwidth", f"must be > 0, got {self.bandwidth!r}")


def filtered_derivative_update(
    st: FilteredDifferentiatorState, value: float, dt: float
) -> tuple[FilteredDifferentiatorState, float]:
    """Return the derivative estimate at ``value`` and the filter advanced by ``dt``.

    The discrete filter reproduces the slope of a ramp exactly in steady state.

    Raises:
        ConfigError: ``bandwidth * dt >= 1``.
    """
    n = st.bandwidth
    if not 0.0 < n * dt < 1.0:
        raise ConfigError("filter_bandwidth", f"bandwidth*dt must lie in (0, 1), got {n * dt!r}")
    deriv = n * (value - st.y)
    return FilteredDifferentiatorState(n, st.y + dt * deriv), deriv


def conventional_estimation_law(d_bn_rate: float, d_bn_accel: float, lz: float) -> float:
    """tau_c = d_bn'' + l.z d_bn'. This is also the learning surface eta."""
    if not lz > 0.0:
        raise ConfigError("observer_gain", f"l.z must be > 0, got {lz!r}")
    return d_bn_accel + lz * d_bn_rate


@dataclass(frozen=True, slots=True)
class SldoState:
    """Everything the self-learning observer carries between samples.

    ``xi1``, ``xi2``, ``eta`` and ``forward`` are kept from the previous sample:
    the parameter step that starts there is completed once the next inputs are
    known, so the center rule sees the forward difference of its input.
    """

    bndo: BndoState
    diff1: FilteredDifferentiatorState
    diff2: FilteredDifferentiatorState
    nfs: NfsParameters
    d_hat_sl: float = 0.0
    rate: float = 0.0
    tau_c: float = 0.0
    tau_n: float = 0.0
    eta: float = 0.0
    xi1: float = 0.0
    xi2: float = 0.0
    forward: NfsForwardResult | None = None
    started: bool = False

    @classmethod
    def initial(
        cls,
        l: tuple[float, float] = (5.0, 0.0),
        bandwidth: float = 100.0,
        nfs: NfsParameters | None = None,
    ) -> "SldoState":
        return cls(
            bndo=BndoState(tuple(l)),
            diff1=FilteredDifferentiatorState(bandwidth),
            diff2=FilteredDifferentiatorState(bandwidth),
            nfs=nfs if nfs is not None else NfsParameters.grid(),
        )

    @property
    def d_hat_bn(self) -> float:
        """Estimate of the inner observer (fed back from the SLDO estimate)."""
        return self.bndo.d_hat


def sldo_update(
    st: SldoState, x: PlantState, model: PlantModel, u: float, dt: float
) -> tuple[SldoState, float, float]:
    """One sample of the self-learning observer.

    Returns the new state, ``d_hat_sl`` at this sample and its rate
    ``d_bn' + tau_c - tau_n``. The next sample advances ``d_hat_sl`` by
    ``dt * rate``.

    Raises:
        DivergenceError: the inner observer or the neuro-fuzzy output became non-finite.
    """
    if st.started:
        d_sl = st.d_hat_sl + dt * st.rate
        bndo, d_bn = bndo_update(st.bndo, x, model, u, dt, feedback=st.d_hat_sl)
    else:
        d_sl = st.d_hat_sl
        bndo, d_bn = bndo_update(st.bndo, x, model, u, dt)

    diff1, xi1 = filtered_derivative_update(st.diff1, d_bn, dt)
    diff2, xi2 = filtered_derivative_update(st.diff2, xi1, dt)
    lz = bndo.lz(model)
    tau_c = conventional_estimation_law(xi1, xi2, lz)
    eta = tau_c

    nfs = st.nfs
    if st.started:
        nfs = nfs_adapt(
            nfs, st.xi1, st.xi2, (xi1 - st.xi1) / dt, (xi2 - st.xi2) / dt, st.eta, dt, st.forward
        )
    fwd = nfs_forward(nfs, xi1, xi2)
    tau_n = fwd.tau_n
    if not math.isfinite(tau_n):
        raise DivergenceError("learning", f"neuro-fuzzy output non-finite at t={x.t:g}")
    rate = xi1 + tau_c - tau_n
    if not math.isfinite(d_sl) or not math.isfinite(rate):
        raise DivergenceError("observer", f"SLDO estimate non-finite at t={x.t:g}")

    new = SldoState(bndo, diff1, diff2, nfs, d_sl, rate, tau_c, tau_n, eta, xi1, xi2, fwd, True)
    return new, d_sl, rate

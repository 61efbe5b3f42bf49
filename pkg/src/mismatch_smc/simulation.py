"""Fixed-step closed-loop simulation and the reported performance metrics.

Per sample the loop reads the true disturbance, updates both observers with the
current measurement and the previously applied control, evaluates the selected
control law and advances the plant by one step with the control held. Both
observers always run, so every trajectory carries estimation columns; only the
observer-based controllers feed them back.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .controllers import (
    ControllerGains,
    ControllerKind,
    IsmcState,
    ismc_step,
    smc_bndo_step,
    smc_sldo_step,
    smc_step,
)
from .errors import ConfigError, DivergenceError, SingularInputGainError
from .model import (
    DisturbanceProfile,
    PlantModel,
    PlantState,
    benchmark_plant,
    plant_derivative,
    scenario_profile,
)
from .neurofuzzy import WEIGHT_NORM_FLOOR, NfsParameters
from .observers import BndoState, SldoState, bndo_update, sldo_update

__all__ = [
    "NfsConfig",
    "ScenarioConfig",
    "TrajectoryRecord",
    "RunMetrics",
    "COLUMNS",
    "PLANTS",
    "simulate",
    "compute_metrics",
    "settling_time",
    "rms",
]

COLUMNS = ("t", "x1", "x2", "u", "s", "d_true", "d_hat_bn", "d_hat_sl", "tau_c", "tau_n", "eta")
INTEGRATORS = ("euler", "rk4")
PLANTS = {"benchmark": benchmark_plant}


@dataclass(frozen=True)
class NfsConfig:
    rules1: int = 3
    rules2: int = 3
    alpha1: float = 0.01
    alpha2: float = 1.0
    center_range: tuple[float, float] = (-1.0, 1.0)
    sigma_init: float = 0.5
    f_init: float = 0.0
    sigma_min: float = 1e-3
    sigma_max: float = 1e3
    eps: float = 1e-6

    def build(self) -> NfsParameters:
        return NfsParameters.grid(
            self.rules1,
            self.rules2,
            alpha1=self.alpha1,
            alpha2=self.alpha2,
            center_range=self.center_range,
            sigma=self.sigma_init,
            f=self.f_init,
            sigma_min=self.sigma_min,
            sigma_max=self.sigma_max,
            eps=self.eps,
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one run. Defaults reproduce Scenario 1."""

    name: str = "scenario1"
    controller: ControllerKind = ControllerKind.SMC_SLDO
    gains: ControllerGains = field(default_factory=ControllerGains)
    observer_gain: tuple[float, float] = (5.0, 0.0)
    filter_bandwidth: float = 100.0
    nfs: NfsConfig = field(default_factory=NfsConfig)
    disturbance: DisturbanceProfile = field(default_factory=scenario_profile)
    x0: tuple[float, float] = (0.5, -0.5)
    dt: float = 1e-3
    duration: float = 30.0
    integrator: str = "euler"
    plant: str = "benchmark"
    settle_band: float = 0.02
    chattering_window: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "controller", ControllerKind(self.controller))
        self.validate()

    def validate(self) -> None:
        """Raise :class:`ConfigError` with a field path on the first invalid entry."""
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt", f"must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ConfigError("duration", f"must be > 0, got {self.duration!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError("integrator", f"must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.plant not in PLANTS:
            raise ConfigError("plant", f"unknown plant {self.plant!r}; known: {sorted(PLANTS)}")
        if len(self.x0) != 2 or not all(math.isfinite(v) for v in self.x0):
            raise ConfigError("x0", "must be two finite numbers")
        if len(self.observer_gain) != 2:
            raise ConfigError("observer_gain", "must have two entries")
        z = PLANTS[self.plant]().z
        lz = self.observer_gain[0] * z[0] + self.observer_gain[1] * z[1]
        if not lz > 0:
            raise ConfigError("observer_gain", f"l.z must be > 0, got {lz!r}")
        if not self.filter_bandwidth > 0:
            raise ConfigError("filter_bandwidth", "must be > 0")
        if not self.filter_bandwidth * self.dt < 1.0:
            raise ConfigError("filter_bandwidth", f"bandwidth*dt must be < 1, got {self.filter_bandwidth * self.dt!r}")
        n = self.nfs
        if n.rules1 < 1 or n.rules2 < 1:
            raise ConfigError("nfs.rules1" if n.rules1 < 1 else "nfs.rules2", "must be >= 1")
        for name in ("alpha1", "alpha2", "sigma_init", "sigma_min", "sigma_max", "eps"):
            if not getattr(n, name) > 0:
                raise ConfigError(f"nfs.{name}", f"must be > 0, got {getattr(n, name)!r}")
        if not n.sigma_min <= n.sigma_init <= n.sigma_max:
            raise ConfigError("nfs.sigma_init", "must lie within [sigma_min, sigma_max]")
        if not self.settle_band > 0:
            raise ConfigError("settle_band", "must be > 0")
        if self.chattering_window is not None:
            lo, hi = self.chattering_window
            if not hi > lo:
                raise ConfigError("chattering_window", "end must be after start")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def plant_model(self) -> PlantModel:
        return PLANTS[self.plant]()


@dataclass
class TrajectoryRecord:
    """Per-sample log. ``data`` has one column per entry of :data:`COLUMNS`.

    ``extras`` holds optional diagnostic columns (the neuro-fuzzy inputs ``xi1``
    and ``xi2``); ``nfs_initial`` / ``nfs_final`` are parameter snapshots.
    """

    data: np.ndarray
    controller: ControllerKind
    dt: float
    diverged: bool = False
    reason: str | None = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    nfs_initial: NfsParameters | None = None
    nfs_final: NfsParameters | None = None

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, column: str) -> np.ndarray:
        if column in self.extras:
            return self.extras[column]
        return self.data[:, COLUMNS.index(column)]

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean mask of samples with ``t0 <= t <= t1`` (half a step slack on both ends)."""
        t = self["t"]
        h = 0.5 * self.dt
        return (t >= t0 - h) & (t <= t1 + h)

    def to_csv(self, path: str | os.PathLike, extras: bool = False) -> None:
        cols = list(COLUMNS)
        arr = self.data
        if extras and self.extras:
            names = sorted(self.extras)
            cols += names
            arr = np.column_stack([arr] + [self.extras[n] for n in names])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in arr:
                w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class RunMetrics:
    mean_abs_x1: float
    settling_times: tuple[float | None, ...]
    overshoot: float
    chattering_index: float
    rms_estimation_error: float

    def to_dict(self) -> dict:
        return {
            "mean_abs_x1": self.mean_abs_x1,
            "settling_times": list(self.settling_times),
            "overshoot": self.overshoot,
            "chattering_index": self.chattering_index,
            "rms_estimation_error": self.rms_estimation_error,
        }


def _rk4_step(state, u, t, dt, model, profile, with_integral):
    x1, x2, integ = state

    def f(a, b, tt):
        d = profile(tt)
        dx1, dx2 = plant_derivative(PlantState(a, b, tt), model, u, d)
        return dx1, dx2, a

    h = 0.5 * dt
    k1 = f(x1, x2, t)
    k2 = f(x1 + h * k1[0], x2 + h * k1[1], t + h)
    k3 = f(x1 + h * k2[0], x2 + h * k2[1], t + h)
    k4 = f(x1 + dt * k3[0], x2 + dt * k3[1], t + dt)
    w = dt / 6.0
    nx1 = x1 + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    nx2 = x2 + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    ninteg = integ + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]) if with_integral else integ
    return nx1, nx2, ninteg


def simulate(
    cfg: ScenarioConfig,
    model: PlantModel | None = None,
    *,
    capture_inputs: bool = False,
    reference: bool = False,
) -> TrajectoryRecord:
    """Run one closed-loop simulation.

    ``model`` overrides the plant named in the config. With ``capture_inputs``
    the neuro-fuzzy inputs are logged as ``extras['xi1']`` / ``extras['xi2']``.

    A non-finite state, estimate or control ends the run early; the record is
    then truncated to the accepted samples and flagged ``diverged``.

    By default the loop runs a fused kernel with the observer and learning
    state held in local variables. ``reference=True`` composes the public step
    functions instead; both paths produce bit-identical records.
    """
    model = model if model is not None else cfg.plant_model()
    if not reference:
        return _simulate_fused(cfg, model, capture_inputs)
    dt = cfg.dt
    n = cfg.n_steps
    profile = cfg.disturbance
    kind = cfg.controller
    gains = cfg.gains
    nfs0 = cfg.nfs.build()

    bndo = BndoState(tuple(cfg.observer_gain))
    sldo = SldoState.initial(cfg.observer_gain, cfg.filter_bandwidth, nfs0)
    x1, x2 = cfg.x0
    integral = 0.0
    u_prev = 0.0

    rows: list[tuple] = []
    xi1s: list[float] = []
    xi2s: list[float] = []
    diverged = False
    reason = None
    rk4 = cfg.integrator == "rk4"
    with_integral = kind is ControllerKind.ISMC

    for k in range(n + 1):
        t = k * dt
        x = PlantState(x1, x2, t)
        try:
            if not (math.isfinite(x1) and math.isfinite(x2)):
                raise DivergenceError("plant", f"non-finite state at t={t:g}")
            d = profile(t)
            bndo, d_bn = bndo_update(bndo, x, model, u_prev, dt)
            sldo, d_sl, d_sl_rate = sldo_update(sldo, x, model, u_prev, dt)

            if kind is ControllerKind.SMC:
                out = smc_step(x, model, gains)
            elif kind is ControllerKind.ISMC:
                out = ismc_step(x, IsmcState(integral), model, gains)
            elif kind is ControllerKind.SMC_BNDO:
                out = smc_bndo_step(x, d_bn, model, gains)
            else:
                out = smc_sldo_step(x, d_sl, d_sl_rate, model, gains)
            u = out.u
            if not math.isfinite(u):
                raise DivergenceError("controller", f"non-finite control at t={t:g}")

            if k < n:
                if rk4:
                    nx1, nx2, nint = _rk4_step((x1, x2, integral), u, t, dt, model, profile, with_integral)
                else:
                    dx1, dx2 = plant_derivative(x, model, u, d)
                    nx1, nx2 = x1 + dt * dx1, x2 + dt * dx2
                    nint = integral + dt * x1 if with_integral else integral
        except DivergenceError as exc:
            diverged = True
            reason = str(exc)
            break
        except OverflowError:
            # math.exp and friends raise instead of returning inf
            diverged = True
            reason = f"plant diverged: overflow at t={t:g}"
            break

        rows.append((t, x1, x2, u, out.s, d, d_bn, d_sl, sldo.tau_c, sldo.tau_n, sldo.eta))
        if capture_inputs:
            xi1s.append(sldo.xi1)
            xi2s.append(sldo.xi2)
        if k < n:
            x1, x2, integral = nx1, nx2, nint
            u_prev = u

    data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    extras = {}
    if capture_inputs:
        extras = {"xi1": np.array(xi1s), "xi2": np.array(xi2s)}
    return TrajectoryRecord(
        data=data,
        controller=kind,
        dt=dt,
        diverged=diverged,
        reason=reason,
        extras=extras,
        nfs_initial=nfs0,
        nfs_final=sldo.nfs,
    )


def _simulate_fused(cfg: ScenarioConfig, model: PlantModel, capture_inputs: bool) -> TrajectoryRecord:
    # Mirrors bndo_update, sldo_update, nfs_adapt and the control laws term by
    # term; keep the floating-point expressions in sync with those functions.
    dt = cfg.dt
    n = cfg.n_steps
    profile = cfg.disturbance
    kind = cfg.controller
    g = cfg.gains
    lam, kgain, bl = g.lam, g.k, g.boundary_layer
    nfs0 = cfg.nfs.build()
    fa, fb = model.a, model.b
    z1, z2 = model.z
    l1, l2 = float(cfg.observer_gain[0]), float(cfg.observer_gain[1])
    lz = l1 * z1 + l2 * z2
    if not lz > 0.0:
        raise ConfigError("observer_gain", f"l.z must be > 0, got {lz!r}")
    nbw = cfg.filter_bandwidth
    if not 0.0 < nbw * dt < 1.0:
        raise ConfigError("filter_bandwidth", f"bandwidth*dt must lie in (0, 1), got {nbw * dt!r}")

    c1, s1, c2, s2 = list(nfs0.c1), list(nfs0.sigma1), list(nfs0.c2), list(nfs0.sigma2)
    f = [list(r) for r in nfs0.f]
    alpha1, alpha2 = nfs0.alpha1, nfs0.alpha2
    smin, smax, eps = nfs0.sigma_min, nfs0.sigma_max, nfs0.eps

    is_smc = kind is ControllerKind.SMC
    is_ismc = kind is ControllerKind.ISMC
    is_bndo = kind is ControllerKind.SMC_BNDO
    rk4 = cfg.integrator == "rk4"
    isfinite = math.isfinite
    exp = math.exp
    segs = profile.segments
    starts = [sg.start for sg in segs]
    nxt = 0  # index of the first segment not started yet

    x1, x2 = cfg.x0
    integral = 0.0
    u_prev = 0.0
    p_bn = p_in = 0.0
    d_bn = 0.0
    y1 = y2 = 0.0
    d_sl = rate = 0.0
    xi1p = xi2p = etap = 0.0
    mu1p = mu2p = None
    xp2 = a_prev = b_prev = 0.0

    rows: list[tuple] = []
    xi1s: list[float] = []
    xi2s: list[float] = []
    diverged = False
    reason = None

    for k in range(n + 1):
        t = k * dt
        try:
            if not (isfinite(x1) and isfinite(x2)):
                raise DivergenceError("plant", f"non-finite state at t={t:g}")
            while nxt < len(starts) and starts[nxt] <= t:
                nxt += 1
            d = segs[nxt - 1].value(t) if nxt else 0.0
            a_k = fa(x1, x2)
            b_k = fb(x1, x2)
            lx = l1 * x1 + l2 * x2

            if k == 0:
                p_bn = -lx
                p_in = -lx
            else:
                drift = l1 * xp2 + l2 * (a_prev + b_prev * u_prev)
                p_bn = p_bn + dt * (-lz * d_bn - drift)
                if not isfinite(p_bn):
                    raise DivergenceError("observer", f"BNDO state non-finite at t={t:g}")
                p_in = p_in + dt * (-lz * d_sl - drift)
                if not isfinite(p_in):
                    raise DivergenceError("observer", f"BNDO state non-finite at t={t:g}")
                d_sl = d_sl + dt * rate
            d_bn = p_bn + l1 * x1 + l2 * x2
            d_in = p_in + l1 * x1 + l2 * x2

            xi1 = nbw * (d_in - y1)
            y1 = y1 + dt * xi1
            xi2 = nbw * (xi1 - y2)
            y2 = y2 + dt * xi2
            tau_c = xi2 + lz * xi1
            eta = tau_c

            if k > 0:
                r1 = (xi1 - xi1p) / dt
                r2 = (xi2 - xi2p) / dt
                sg = 1.0 if etap > 0.0 else (-1.0 if etap < 0.0 else 0.0)
                a1s = alpha1 * sg
                if sg != 0.0:
                    for i in range(len(s1)):
                        ci, si = c1[i], s1[i]
                        off2 = (xi1p - ci) * (xi1p - ci)
                        v = si - dt * (si + si * si * si / (off2 if off2 > eps else eps)) * a1s
                        s1[i] = v if smin <= v <= smax else (smax if v > smax else smin)
                    for j in range(len(s2)):
                        cj, sj = c2[j], s2[j]
                        off2 = (xi2p - cj) * (xi2p - cj)
                        v = sj - dt * (sj + sj * sj * sj / (off2 if off2 > eps else eps)) * a1s
                        s2[j] = v if smin <= v <= smax else (smax if v > smax else smin)
                    norm = sum([m * m for m in mu1p]) * sum([m * m for m in mu2p])
                    gain = dt * alpha2 * sg / (norm if norm > WEIGHT_NORM_FLOOR else WEIGHT_NORM_FLOOR)
                    for frow, m1 in zip(f, mu1p):
                        ga = gain * m1
                        for j in range(len(frow)):
                            frow[j] = frow[j] - ga * mu2p[j]
                c1 = [ci + dt * (r1 + (xi1p - ci) * a1s) for ci in c1]
                c2 = [cj + dt * (r2 + (xi2p - cj) * a1s) for cj in c2]

            q = [((xi1 - ci) / si) ** 2 for ci, si in zip(c1, s1)]
            qm = min(q)
            e = [exp(qm - qi) for qi in q]
            tot = sum(e)
            mu1p = [m / tot for m in e]
            q = [((xi2 - cj) / sj) ** 2 for cj, sj in zip(c2, s2)]
            qm = min(q)
            e = [exp(qm - qi) for qi in q]
            tot = sum(e)
            mu2p = [m / tot for m in e]
            tau_n = 0.0
            for m1, frow in zip(mu1p, f):
                tau_n += m1 * sum([fij * m2 for fij, m2 in zip(frow, mu2p)])
            if not isfinite(tau_n):
                raise DivergenceError("learning", f"neuro-fuzzy output non-finite at t={t:g}")
            rate = xi1 + tau_c - tau_n
            if not isfinite(d_sl) or not isfinite(rate):
                raise DivergenceError("observer", f"SLDO estimate non-finite at t={t:g}")
            xi1p, xi2p, etap = xi1, xi2, eta

            if b_k == 0.0:
                raise SingularInputGainError(f"b(x) = 0 at x = ({x1:g}, {x2:g})")
            if is_smc:
                sv = x2 + lam * x1
            elif is_ismc:
                sv = x2 + 2.0 * lam * x1 + lam * lam * integral
            elif is_bndo:
                sv = x2 + lam * x1 + d_bn
            else:
                sv = x2 + lam * x1 + d_sl
            if bl is None:
                sw = kgain * (1.0 if sv > 0.0 else (-1.0 if sv < 0.0 else 0.0))
            else:
                sw = kgain * max(-1.0, min(1.0, sv / bl))
            if is_smc:
                u = -(a_k + lam * x2 + sw) / b_k
            elif is_ismc:
                u = -(a_k + 2.0 * lam * x2 + lam * lam * x1 + sw) / b_k
            elif is_bndo:
                u = -(a_k + lam * (x2 + d_bn) + sw) / b_k
            else:
                u = -(a_k + lam * (x2 + d_sl) + rate + sw) / b_k
            if not isfinite(u):
                raise DivergenceError("controller", f"non-finite control at t={t:g}")

            if k < n:
                if rk4:
                    nx1, nx2, nint = _rk4_step((x1, x2, integral), u, t, dt, model, profile, is_ismc)
                else:
                    dx1 = x2 + z1 * d
                    dx2 = a_k + b_k * u + z2 * d
                    if not (isfinite(dx1) and isfinite(dx2)):
                        raise DivergenceError("plant", f"non-finite derivative at t={t:g}")
                    nx1, nx2 = x1 + dt * dx1, x2 + dt * dx2
                    nint = integral + dt * x1 if is_ismc else integral
        except DivergenceError as exc:
            diverged = True
            reason = str(exc)
            break
        except OverflowError:
            # math.exp and friends raise instead of returning inf
            diverged = True
            reason = f"plant diverged: overflow at t={t:g}"
            break

        rows.append((t, x1, x2, u, sv, d, d_bn, d_sl, tau_c, tau_n, eta))
        if capture_inputs:
            xi1s.append(xi1)
            xi2s.append(xi2)
        if k < n:
            xp2, a_prev, b_prev = x2, a_k, b_k
            x1, x2, integral = nx1, nx2, nint
            u_prev = u

    data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    extras = {}
    if capture_inputs:
        extras = {"xi1": np.array(xi1s), "xi2": np.array(xi2s)}
    nfs_final = NfsParameters(
        tuple(c1), tuple(s1), tuple(c2), tuple(s2), tuple(tuple(r) for r in f),
        alpha1, alpha2, smin, smax, eps,
    )
    return TrajectoryRecord(
        data=data,
        controller=kind,
        dt=dt,
        diverged=diverged,
        reason=reason,
        extras=extras,
        nfs_initial=nfs0,
        nfs_final=nfs_final,
    )


def settling_time(t: np.ndarray, x: np.ndarray, event: float, end: float, band: float) -> float | None:
    """Time from ``event`` until ``|x|`` enters ``band`` for good (up to ``end``).

    Returns ``None`` when the window is empty or the signal is still outside
    the band at its last sample.
    """
    h = 1e-9 * max(1.0, abs(end))
    mask = (t >= event - h) & (t < end - h)
    if not mask.any():
        return None
    tw = t[mask]
    outside = np.flatnonzero(np.abs(x[mask]) > band)
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last + 1 >= tw.size:
        return None
    return float(tw[last + 1] - event)


def compute_metrics(
    tr: TrajectoryRecord,
    events: Sequence[float],
    settle_band: float = 0.02,
    chattering_window: tuple[float, float] | None = None,
) -> RunMetrics:
    """Summary metrics of a completed run.

    * ``mean_abs_x1``: mean of |x1| over the whole record.
    * ``settling_times``: per event, the settling duration measured within the
      interval up to the next event (or the end of the record).
    * ``overshoot``: peak |x1| from the first event on (whole record without events).
    * ``chattering_index``: mean |u[k+1] - u[k]| inside ``chattering_window``.
    * ``rms_estimation_error``: RMS of ``d_true`` minus the estimate the
      controller uses (``d_hat_sl`` for smc-sldo, ``d_hat_bn`` otherwise).

    Raises:
        ValueError: the record is diverged or empty.
    """
    if tr.diverged:
        raise ValueError(f"cannot score a diverged run ({tr.reason})")
    if len(tr) == 0:
        raise ValueError("empty trajectory")
    t = tr["t"]
    x1 = tr["x1"]
    ev = sorted(float(e) for e in events)
    t_end = float(t[-1]) + tr.dt

    settle = []
    for i, e in enumerate(ev):
        end = ev[i + 1] if i + 1 < len(ev) else t_end
        settle.append(settling_time(t, x1, e, end, settle_band))

    after = t >= ev[0] - 1e-12 if ev else np.ones_like(t, dtype=bool)
    overshoot = float(np.max(np.abs(x1[after]))) if after.any() else 0.0

    u = tr["u"]
    if chattering_window is not None:
        u = u[tr.window(*chattering_window)]
    chat = float(np.mean(np.abs(np.diff(u)))) if u.size > 1 else 0.0

    est = tr["d_hat_sl"] if tr.controller is ControllerKind.SMC_SLDO else tr["d_hat_bn"]
    rms = float(np.sqrt(np.mean((tr["d_true"] - est) ** 2)))

    return RunMetrics(
        mean_abs_x1=float(np.mean(np.abs(x1))),
        settling_times=tuple(settle),
        overshoot=overshoot,
        chattering_index=chat,
        rms_estimation_error=rms,
    )


def rms(a: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(a))))


"""Zeroth-order TSK neuro-fuzzy structure with sliding-mode learning.

Two inputs, Gaussian memberships (I on the first input, J on the second) and
I*J rules with constant consequents ``f[i][j]``. The adaptation rules move the
centers with the input, shrink or widen the widths and push the consequents
along the normalized firing strengths, all driven by ``sgn(eta)``. Under these
rules the normalized firing strengths are stationary and the output obeys
``d(tau_n)/dt = -alpha2 * sgn(eta)``; :func:`nfs_output_rate_check` measures how
well a discrete run honours that identity.

Parameters are stored as tuples of Python floats. The structure is tiny (nine
rules for the benchmark) and is evaluated once per millisecond of simulated
time, so scalar code beats small-array numpy by a wide margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError

__all__ = [
    "NfsParameters",
    "NfsForwardResult",
    "ParameterRates",
    "nfs_forward",
    "nfs_parameter_rates",
    "nfs_adapt",
    "nfs_adapt_guarded",
    "nfs_output_rate_check",
    "antecedent_products",
]

WEIGHT_NORM_FLOOR = 1e-12


def _sgn(v: float) -> float:
    return 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)


@dataclass(frozen=True, slots=True)
class NfsParameters:
    """Learnable state of the neuro-fuzzy structure plus its learning constants.

    ``eps`` floors the squared center offset in the width rule, which is singular
    when an input sits exactly on a center. Widths are clamped into
    ``[sigma_min, sigma_max]``.
    """

    c1: tuple[float, ...]
    sigma1: tuple[float, ...]
    c2: tuple[float, ...]
    sigma2: tuple[float, ...]
    f: tuple[tuple[float, ...], ...]
    alpha1: float = 0.01
    alpha2: float = 1.0
    sigma_min: float = 1e-3
    sigma_max: float = 1e3
    eps: float = 1e-6

    def __post_init__(self):
        ni, nj = len(self.c1), len(self.c2)
        if ni < 1 or nj < 1:
            raise ConfigError("nfs", "need at least one membership function per input")
        if len(self.sigma1) != ni or len(self.sigma2) != nj:
            raise ConfigError("nfs.sigma", "width vectors must match the center vectors")
        if len(self.f) != ni or any(len(row) != nj for row in self.f):
            raise ConfigError("nfs.f", f"consequent matrix must be {ni}x{nj}")
        if min(self.sigma1) <= 0.0 or min(self.sigma2) <= 0.0:
            raise ConfigError("nfs.sigma", "widths must be > 0")
        if not (self.alpha1 > 0.0 and self.alpha2 > 0.0):
            raise ConfigError("nfs.alpha", "learning rates must be > 0")

    @classmethod
    def grid(
        cls,
        n1: int = 3,
        n2: int = 3,
        *,
        alpha1: float = 0.01,
        alpha2: float = 1.0,
        center_range: tuple[float, float] = (-1.0, 1.0),
        sigma: float = 0.5,
        f: float = 0.0,
        sigma_min: float = 1e-3,
        sigma_max: float = 1e3,
        eps: float = 1e-6,
    ) -> "NfsParameters":
        """Centers spread uniformly over ``center_range``, equal widths, constant consequents."""
        return cls(
            c1=_spread(n1, center_range),
            sigma1=(float(sigma),) * n1,
            c2=_spread(n2, center_range),
            sigma2=(float(sigma),) * n2,
            f=tuple((float(f),) * n2 for _ in range(n1)),
            alpha1=alpha1,
            alpha2=alpha2,
            sigma_min=sigma_min,
            sigma_max=sigma_max,
            eps=eps,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.c1), len(self.c2)

    def flat(self) -> dict[str, list]:
        """Plain-list snapshot, e.g. for JSON dumps."""
        return {
            "c1": list(self.c1),
            "sigma1": list(self.sigma1),
            "c2": list(self.c2),
            "sigma2": list(self.sigma2),
            "f": [list(r) for r in self.f],
        }


def _spread(n: int, rng: tuple[float, float]) -> tuple[float, ...]:
    lo, hi = float(rng[0]), float(rng[1])
    if n == 1:
        return (0.5 * (lo + hi),)
    step = (hi - lo) / (n - 1)
    return tuple(lo + i * step for i in range(n))


@dataclass(frozen=True, slots=True)
class NfsForwardResult:
    """Output of a forward pass.

    Rule weights factor into per-input normalized memberships ``mu1`` and
    ``mu2``; ``w_tilde[i][j] == mu1[i] * mu2[j]``.
    """

    tau_n: float
    mu1: tuple[float, ...]
    mu2: tuple[float, ...]
    w_sum: float  # raw sum of firing strengths, may underflow to 0

    @property
    def w_tilde(self) -> tuple[tuple[float, ...], ...]:
        m2 = self.mu2
        return tuple([tuple([a * b for b in m2]) for a in self.mu1])


def _normalized_memberships(x: float, c: Sequence[float], sigma: Sequence[float]) -> tuple[tuple[float, ...], float, float]:
    # exp(qmin - q) / sum equals the normalized membership and stays finite
    # even when every raw membership underflows.
    q = [((x - ci) / si) ** 2 for ci, si in zip(c, sigma)]
    qmin = min(q)
    mu = [math.exp(qmin - qi) for qi in q]
    total = sum(mu)
    return tuple([m / total for m in mu]), qmin, total


def nfs_forward(p: NfsParameters, xi1: float, xi2: float) -> NfsForwardResult:
    m1, q1, s1 = _normalized_memberships(xi1, p.c1, p.sigma1)
    m2, q2, s2 = _normalized_memberships(xi2, p.c2, p.sigma2)
    # w_ij = mu1_i mu2_j, so sum(w) = sum(mu1) sum(mu2) and normalization is per input.
    tau = 0.0
    for a, frow in zip(m1, p.f):
        tau += a * sum([fij * b for fij, b in zip(frow, m2)])
    w_sum = math.exp(-(q1 + q2)) * s1 * s2
    return NfsForwardResult(tau, m1, m2, w_sum)


@dataclass(frozen=True, slots=True)
class ParameterRates:
    """Continuous-time parameter derivatives given by the adaptation rules."""

    c1: tuple[float, ...]
    sigma1: tuple[float, ...]
    c2: tuple[float, ...]
    sigma2: tuple[float, ...]
    f: tuple[tuple[float, ...], ...]


def _center_rates(x: float, xdot: float, c: Sequence[float], a1s: float) -> tuple[float, ...]:
    return tuple([xdot + (x - ci) * a1s for ci in c])


def _width_rates(x: float, c: Sequence[float], sigma: Sequence[float], a1s: float, eps: float) -> tuple[float, ...]:
    return tuple([-(si + si ** 3 / max((x - ci) ** 2, eps)) * a1s for ci, si in zip(c, sigma)])


def nfs_parameter_rates(
    p: NfsParameters,
    xi1: float,
    xi2: float,
    xi1_rate: float,
    xi2_rate: float,
    eta: float,
) -> ParameterRates:
    fwd = nfs_forward(p, xi1, xi2)
    s = _sgn(eta)
    a1s = p.alpha1 * s
    norm = sum([a * a for a in fwd.mu1]) * sum([b * b for b in fwd.mu2])
    gain = -p.alpha2 * s / max(norm, WEIGHT_NORM_FLOOR)
    return ParameterRates(
        c1=_center_rates(xi1, xi1_rate, p.c1, a1s),
        sigma1=_width_rates(xi1, p.c1, p.sigma1, a1s, p.eps),
        c2=_center_rates(xi2, xi2_rate, p.c2, a1s),
        sigma2=_width_rates(xi2, p.c2, p.sigma2, a1s, p.eps),
        f=tuple([tuple([gain * w for w in row]) for row in fwd.w_tilde]),
    )


def _step_widths(x, c, sigma, a1s, dt, eps, lo, hi):
    out = []
    clamped = False
    for ci, si in zip(c, sigma):
        off2 = (x - ci) * (x - ci)
        v = si - dt * (si + si * si * si / (off2 if off2 > eps else eps)) * a1s
        if not lo <= v <= hi:
            # Rules whose input sits on the center (offset inside the eps
            # guard) are degenerate; clamping them is not reported.
            if off2 >= eps:
                clamped = True
            v = hi if v > hi else lo
        out.append(v)
    return tuple(out), clamped


def nfs_adapt_guarded(
    p: NfsParameters,
    xi1: float,
    xi2: float,
    xi1_rate: float,
    xi2_rate: float,
    eta: float,
    dt: float,
    fwd: NfsForwardResult | None = None,
) -> tuple[NfsParameters, bool]:
    """:func:`nfs_adapt` that also reports whether a width clamp engaged on an off-center rule."""
    if not dt > 0.0:
        raise ConfigError("dt", "must be > 0")
    s = _sgn(eta)
    a1s = p.alpha1 * s
    c1 = tuple([ci + dt * (xi1_rate + (xi1 - ci) * a1s) for ci in p.c1])
    c2 = tuple([ci + dt * (xi2_rate + (xi2 - ci) * a1s) for ci in p.c2])
    if s == 0.0:
        return NfsParameters(c1, p.sigma1, c2, p.sigma2, p.f, p.alpha1, p.alpha2,
                             p.sigma_min, p.sigma_max, p.eps), False

    sigma1, k1 = _step_widths(xi1, p.c1, p.sigma1, a1s, dt, p.eps, p.sigma_min, p.sigma_max)
    sigma2, k2 = _step_widths(xi2, p.c2, p.sigma2, a1s, dt, p.eps, p.sigma_min, p.sigma_max)
    if fwd is None:
        fwd = nfs_forward(p, xi1, xi2)
    m2 = fwd.mu2
    norm = sum([a * a for a in fwd.mu1]) * sum([b * b for b in m2])
    gain = dt * p.alpha2 * s / (norm if norm > WEIGHT_NORM_FLOOR else WEIGHT_NORM_FLOOR)
    f = tuple([
        tuple([fij - ga * b for fij, b in zip(frow, m2)])
        for frow, ga in zip(p.f, [gain * a for a in fwd.mu1])
    ])
    return NfsParameters(c1, sigma1, c2, sigma2, f, p.alpha1, p.alpha2,
                         p.sigma_min, p.sigma_max, p.eps), k1 or k2


def nfs_adapt(
    p: NfsParameters,
    xi1: float,
    xi2: float,
    xi1_rate: float,
    xi2_rate: float,
    eta: float,
    dt: float,
    fwd: NfsForwardResult | None = None,
) -> NfsParameters:
    """One explicit-Euler step of the adaptation rules.

    ``fwd`` may carry a forward pass of ``p`` at the same ``(xi1, xi2)`` so the
    firing strengths are not recomputed.
    """
    return nfs_adapt_guarded(p, xi1, xi2, xi1_rate, xi2_rate, eta, dt, fwd)[0]


def antecedent_products(
    p: NfsParameters, xi1: float, xi2: float, xi1_rate: float, xi2_rate: float, eta: float
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """N * dN/dt for every membership, with N = (xi - c) / sigma.

    The adaptation rules make each product equal ``alpha1 * sgn(eta)`` whenever
    the squared offset is above ``eps``.
    """
    r = nfs_parameter_rates(p, xi1, xi2, xi1_rate, xi2_rate, eta)

    def products(x, xdot, c, sigma, cdot, sdot):
        out = []
        for ci, si, cd, sd in zip(c, sigma, cdot, sdot):
            n = (x - ci) / si
            ndot = ((xdot - cd) * si - (x - ci) * sd) / (si * si)
            out.append(n * ndot)
        return tuple(out)

    return (
        products(xi1, xi1_rate, p.c1, p.sigma1, r.c1, r.sigma1),
        products(xi2, xi2_rate, p.c2, p.sigma2, r.c2, r.sigma2),
    )


def nfs_output_rate_check(
    p: NfsParameters,
    samples: Iterable[Sequence[float]],
    dt: float,
    *,
    min_samples: int = 10,
) -> float:
    """Largest ``|d(tau_n)/dt + alpha2 sgn(eta)|`` along a replayed adaptation run.

    ``samples`` yields ``(xi1, xi2, xi1_rate, xi2_rate, eta)`` per step, with the
    rates equal to forward differences of the inputs. The adaptation is replayed
    from ``p`` and the output finite-differenced across consecutive steps.
    Steps where ``sgn(eta)`` changed from the previous step, or where a width
    clamp engaged on an off-center rule, are skipped.

    This is a verification utility. It is not used by the observer itself.

    Raises:
        ValueError: fewer than ``min_samples`` usable steps.
    """
    worst = 0.0
    used = 0
    current = p
    pending = None  # (tau_n, sign, excluded) of the previous step
    prev_sign = None
    for xi1, xi2, r1, r2, eta in samples:
        fwd = nfs_forward(current, xi1, xi2)
        if pending is not None:
            tau_prev, s_prev, excluded = pending
            if not excluded:
                worst = max(worst, abs((fwd.tau_n - tau_prev) / dt + p.alpha2 * s_prev))
                used += 1
        s = _sgn(eta)
        current, clamped = nfs_adapt_guarded(current, xi1, xi2, r1, r2, eta, dt, fwd)
        pending = (fwd.tau_n, s, clamped or (prev_sign is not None and s != prev_sign))
        prev_sign = s
    if used < min_samples:
        raise ValueError(f"only {used} usable samples for the output-rate check (need {min_samples})")
    return worst

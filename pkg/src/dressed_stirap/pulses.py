"""Optical pulse envelopes: representations, far-off-resonant SATD
synthesis, and the chopped-random-basis (CRAB) parameterization.

Envelopes are callables ``t (us) -> rad/us`` that also know how to encode
themselves for the compiled propagator.  The SATD chain follows the
effective two-level reduction of the far-detuned lambda system::

    Omega_eff = Omega_s Omega_p / (2 Delta)
    Delta_eff = (Omega_p^2 - Omega_s^2) / (4 Delta)

a counter-diabatic coupling

    Omega_a = 2 (dOmega_p Omega_s - Omega_p dOmega_s) / (Omega_p^2 + Omega_s^2)

folded into modified effective controls

    Omega_eff~ = sqrt(Omega_eff^2 + Omega_a^2)
    Delta_eff~ = Delta_eff + d/dt atan(Omega_a / Omega_eff)

and the inversion back to optical envelopes

    Omega_p = sqrt(2 Delta (sqrt(Omega_eff~^2 + Delta_eff~^2) + Delta_eff~))
    Omega_s = sqrt(2 Delta (sqrt(Omega_eff~^2 + Delta_eff~^2) - Delta_eff~)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from . import _core
from .errors import (
    CapExceeded,
    DegenerateEnvelope,
    NegativeRadicand,
    ZeroDetuning,
)
from .model import TWO_PI, PhysicsConfig

_CAP_SLACK = 1.0 + 1e-9


def _scalar_or_array(t, values):
    values = np.asarray(values)
    if np.ndim(t) == 0:
        return float(values)
    return values


class Envelope:
    """Base class: scalar/vectorized value plus numerical derivatives.

    Subclasses with closed forms override the derivatives analytically;
    the default is a centered 5-point stencil with step span/1e5.
    """

    span: float = 1.0

    def __call__(self, t):
        raise NotImplementedError

    @property
    def _h(self) -> float:
        return self.span / 1e5

    def derivative(self, t):
        h = self._h
        t = np.asarray(t, dtype=float)
        v = (-self(t + 2 * h) + 8 * self(t + h) - 8 * self(t - h) + self(t - 2 * h)) / (
            12 * h
        )
        return _scalar_or_array(t, v)

    def second_derivative(self, t):
        h = self._h
        t = np.asarray(t, dtype=float)
        v = (
            -self(t + 2 * h)
            + 16 * self(t + h)
            - 30 * self(t)
            + 16 * self(t - h)
            - self(t - 2 * h)
        ) / (12 * h * h)
        return _scalar_or_array(t, v)

    def numba_spec(self):
        raise NotImplementedError(f"{type(self).__name__} has no compiled form")


class ZeroEnvelope(Envelope):
    def __init__(self, span: float = 1.0):
        self.span = span

    def __call__(self, t):
        return _scalar_or_array(t, np.zeros_like(np.asarray(t, dtype=float)))

    def derivative(self, t):
        return self(t)

    def second_derivative(self, t):
        return self(t)

    def numba_spec(self):
        return _core.KIND_ZERO, np.array([1.0]), _core._EMPTY_TX, _core._EMPTY_TC


class GaussianEnvelope(Envelope):
    """amp * exp(-(t - center)^2 / (2 width^2)) with analytic derivatives."""

    def __init__(self, amplitude: float, center: float, width: float, span: float = 1.0):
        if width <= 0:
            raise ValueError("width must be positive")
        self.amplitude = float(amplitude)
        self.center = float(center)
        self.width = float(width)
        self.span = span

    def __call__(self, t):
        x = np.asarray(t, dtype=float) - self.center
        v = self.amplitude * np.exp(-(x * x) / (2.0 * self.width**2))
        return _scalar_or_array(t, v)

    def derivative(self, t):
        x = np.asarray(t, dtype=float) - self.center
        v = -(x / self.width**2) * self.amplitude * np.exp(
            -(x * x) / (2.0 * self.width**2)
        )
        return _scalar_or_array(t, v)

    def second_derivative(self, t):
        x = np.asarray(t, dtype=float) - self.center
        w2 = self.width**2
        v = (x * x / (w2 * w2) - 1.0 / w2) * self.amplitude * np.exp(
            -(x * x) / (2.0 * w2)
        )
        return _scalar_or_array(t, v)

    def numba_spec(self):
        par = np.array([1.0, self.amplitude, self.center, self.width])
        return _core.KIND_GAUSSIAN, par, _core._EMPTY_TX, _core._EMPTY_TC


class ScaledEnvelope(Envelope):
    """Multiply an envelope by a constant factor (applied after any clamp
    of the inner envelope, so scaled pulses keep identical lineshapes)."""

    def __init__(self, inner: Envelope, factor: float):
        self.inner = inner
        self.factor = float(factor)
        self.span = inner.span

    def __call__(self, t):
        return _scalar_or_array(t, self.factor * np.asarray(self.inner(t)))

    def derivative(self, t):
        return _scalar_or_array(t, self.factor * np.asarray(self.inner.derivative(t)))

    def second_derivative(self, t):
        return _scalar_or_array(
            t, self.factor * np.asarray(self.inner.second_derivative(t))
        )

    def numba_spec(self):
        kind, par, tx, tc = self.inner.numba_spec()
        par = par.copy()
        par[0] *= self.factor
        return kind, par, tx, tc


class TabulatedEnvelope(Envelope):
    """Cubic-spline interpolation of sampled values on [t0, t1]; queries
    outside the table are clamped to the boundary."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 4:
            raise ValueError("need matching 1-d arrays with at least 4 samples")
        self._spline = CubicSpline(times, values)
        self.times = times
        self.values = values
        self.span = float(times[-1] - times[0])

    def __call__(self, t):
        tt = np.clip(np.asarray(t, dtype=float), self.times[0], self.times[-1])
        return _scalar_or_array(t, self._spline(tt))

    def numba_spec(self):
        par = np.array([1.0])
        tx = np.ascontiguousarray(self._spline.x, dtype=float)
        tc = np.ascontiguousarray(self._spline.c, dtype=float)
        return _core.KIND_TABLE, par, tx, tc


class FunctionEnvelope(Envelope):
    """Wrap an arbitrary callable; the compiled form is a cubic table
    sampled on a dense uniform grid over [0, span]."""

    def __init__(self, fn: Callable, span: float, table_points: int = 8193):
        self.fn = fn
        self.span = float(span)
        self.table_points = int(table_points)
        self._table = None

    def __call__(self, t):
        return _scalar_or_array(t, np.asarray(self.fn(np.asarray(t, dtype=float))))

    def numba_spec(self):
        if self._table is None:
            grid = np.linspace(0.0, self.span, self.table_points)
            self._table = TabulatedEnvelope(grid, np.asarray(self.fn(grid), dtype=float))
        return self._table.numba_spec()


class CrabEnvelope(Envelope):
    """Windowed randomized-Fourier correction on top of a base envelope.

    value = clamp(base(t) + sin^2(pi t / T) * sum_k [a_k sin(nu_k t)
    + b_k cos(nu_k t)], -cap, +cap).  The window pins the endpoints to the
    base values; the clamp is the amplitude-constraint mechanism, so sign
    changes (pi phase flips) are representable.
    """

    def __init__(self, base: Envelope, freqs, a_coeffs, b_coeffs, duration_T, cap):
        self.base = base
        self.freqs = np.asarray(freqs, dtype=float)
        self.a_coeffs = np.asarray(a_coeffs, dtype=float)
        self.b_coeffs = np.asarray(b_coeffs, dtype=float)
        if not (self.freqs.shape == self.a_coeffs.shape == self.b_coeffs.shape):
            raise ValueError("freqs and coefficient arrays must share a shape")
        self.duration_T = float(duration_T)
        self.cap = float(cap)
        self.span = self.duration_T

    def __call__(self, t):
        tt = np.asarray(t, dtype=float)
        win = np.sin(math.pi * tt / self.duration_T) ** 2
        phases = np.multiply.outer(tt, self.freqs)
        series = np.sin(phases) @ self.a_coeffs + np.cos(phases) @ self.b_coeffs
        val = np.asarray(self.base(tt)) + win * series
        return _scalar_or_array(t, np.clip(val, -self.cap, self.cap))

    def numba_spec(self):
        if isinstance(self.base, ZeroEnvelope):
            base_par = (0.0, 0.0, 1.0)
        elif isinstance(self.base, GaussianEnvelope):
            base_par = (self.base.amplitude, self.base.center, self.base.width)
        else:
            # no closed form for the composite: fall back to a cubic table
            return FunctionEnvelope(
                lambda tt: self(tt), span=self.duration_T
            ).numba_spec()
        n = self.freqs.size
        par = np.empty(7 + 3 * n)
        par[0] = 1.0
        par[1] = self.cap
        par[2] = self.duration_T
        par[3] = float(n)
        par[4:7] = base_par
        par[7 : 7 + n] = self.freqs
        par[7 + n : 7 + 2 * n] = self.a_coeffs
        par[7 + 2 * n :] = self.b_coeffs
        return _core.KIND_CRAB, par, _core._EMPTY_TX, _core._EMPTY_TC


class SatdChannelEnvelope(Envelope):
    """One channel of the far-off-resonant SATD synthesis, evaluated in
    closed form from the Gaussian base parameters."""

    def __init__(self, base: "BaseStirapShape", Delta: float, channel: str, scale=1.0):
        if channel not in ("s", "p"):
            raise ValueError("channel must be 's' or 'p'")
        self.base = base
        self.Delta = float(Delta)
        self.channel = channel
        self.scale = float(scale)
        self.span = base.duration_T

    def __call__(self, t):
        tt = np.asarray(t, dtype=float)
        b = self.base
        w2 = b.width**2
        xp = tt - (b.duration_T / 2.0 + b.separation)
        xs = tt - (b.duration_T / 2.0 - b.separation)
        gp = b.amplitude * np.exp(-(xp * xp) / (2 * w2))
        gs = b.amplitude * np.exp(-(xs * xs) / (2 * w2))
        gp1 = -(xp / w2) * gp
        gs1 = -(xs / w2) * gs
        gp2 = (xp * xp / (w2 * w2) - 1.0 / w2) * gp
        gs2 = (xs * xs / (w2 * w2) - 1.0 / w2) * gs

        om_eff = gs * gp / (2 * self.Delta)
        om_eff_dot = (gs1 * gp + gs * gp1) / (2 * self.Delta)
        d_eff = (gp * gp - gs * gs) / (4 * self.Delta)

        den = gp * gp + gs * gs
        num = gp1 * gs - gp * gs1
        om_a = 2 * num / den
        om_a_dot = 2 * (gp2 * gs - gp * gs2) / den - 2 * num * 2 * (
            gp * gp1 + gs * gs1
        ) / (den * den)

        om_mod = np.sqrt(om_eff * om_eff + om_a * om_a)
        d_mod = d_eff + (om_a_dot * om_eff - om_a * om_eff_dot) / (
            om_eff * om_eff + om_a * om_a
        )
        root = np.sqrt(om_mod * om_mod + d_mod * d_mod)
        if self.channel == "p":
            rad = 2 * self.Delta * (root + d_mod)
        else:
            rad = 2 * self.Delta * (root - d_mod)
        return _scalar_or_array(t, self.scale * np.sqrt(np.maximum(rad, 0.0)))

    def numba_spec(self):
        kind = _core.KIND_SATD_P if self.channel == "p" else _core.KIND_SATD_S
        b = self.base
        par = np.array(
            [self.scale, b.amplitude, b.width, b.separation, b.duration_T, self.Delta]
        )
        return kind, par, _core._EMPTY_TX, _core._EMPTY_TC


@dataclass(frozen=True)
class BaseStirapShape:
    """Counterintuitively ordered Gaussian pair used as the SATD base:
    Stokes peaks at T/2 - separation, pump at T/2 + separation."""

    amplitude: float
    width: float
    separation: float
    duration_T: float

    def envelopes(self) -> tuple[GaussianEnvelope, GaussianEnvelope]:
        t0 = self.duration_T / 2.0
        stokes = GaussianEnvelope(
            self.amplitude, t0 - self.separation, self.width, span=self.duration_T
        )
        pump = GaussianEnvelope(
            self.amplitude, t0 + self.separation, self.width, span=self.duration_T
        )
        return stokes, pump

    def pulse_pair(self, cap: float) -> "PulsePair":
        stokes, pump = self.envelopes()
        return PulsePair(self.duration_T, stokes, pump, cap)


@dataclass(frozen=True)
class PulsePair:
    """Time-dependent optical envelope pair with an amplitude cap."""

    duration_T: float
    omega_s: Envelope
    omega_p: Envelope
    cap: float

    def sample(self, n_samples: int = 1441):
        t = np.linspace(0.0, self.duration_T, n_samples)
        return t, np.asarray(self.omega_s(t)), np.asarray(self.omega_p(t))

    def check_cap(self, n_samples: int = 4097):
        t, s, p = self.sample(n_samples)
        for values in (s, p):
            peak_idx = int(np.argmax(np.abs(values)))
            peak = abs(float(values[peak_idx]))
            if peak > self.cap * _CAP_SLACK:
                raise CapExceeded(peak, float(t[peak_idx]), self.cap)

    def scaled(self, factor: float) -> "PulsePair":
        return PulsePair(
            self.duration_T,
            ScaledEnvelope(self.omega_s, factor),
            ScaledEnvelope(self.omega_p, factor),
            self.cap * abs(factor),
        )

    def core_spec(self):
        ks, ps, txs, tcs = self.omega_s.numba_spec()
        kp, pp, txp, tcp = self.omega_p.numba_spec()
        return ks, ps, txs, tcs, kp, pp, txp, tcp

    @classmethod
    def zero(cls, duration_T: float, cap: float) -> "PulsePair":
        return cls(duration_T, ZeroEnvelope(duration_T), ZeroEnvelope(duration_T), cap)


@dataclass
class TimeFunction:
    """Callable with an optional analytic derivative (stencil fallback)."""

    value: Callable
    derivative: Callable | None = None
    span: float = 1.0

    def __call__(self, t):
        return self.value(t)

    def d(self, t):
        if self.derivative is not None:
            return self.derivative(t)
        h = self.span / 1e5
        t = np.asarray(t, dtype=float)
        return (
            -self.value(t + 2 * h)
            + 8 * self.value(t + h)
            - 8 * self.value(t - h)
            + self.value(t - 2 * h)
        ) / (12 * h)


@dataclass
class EffectiveTwoLevel:
    """Effective Rabi frequency and detuning of the far-detuned reduction."""

    omega_eff: TimeFunction
    delta_eff: TimeFunction
    duration_T: float


def effective_two_level(pulses: PulsePair, Delta: float) -> EffectiveTwoLevel:
    """Reduce a pulse pair to the effective two-level controls."""
    if Delta == 0:
        raise ZeroDetuning("effective two-level model needs Delta != 0")
    s, p = pulses.omega_s, pulses.omega_p

    def om(t):
        return np.asarray(s(t)) * np.asarray(p(t)) / (2.0 * Delta)

    def om_dot(t):
        return (
            np.asarray(s.derivative(t)) * np.asarray(p(t))
            + np.asarray(s(t)) * np.asarray(p.derivative(t))
        ) / (2.0 * Delta)

    def de(t):
        return (np.asarray(p(t)) ** 2 - np.asarray(s(t)) ** 2) / (4.0 * Delta)

    def de_dot(t):
        return (
            np.asarray(p(t)) * np.asarray(p.derivative(t))
            - np.asarray(s(t)) * np.asarray(s.derivative(t))
        ) / (2.0 * Delta)

    T = pulses.duration_T
    return EffectiveTwoLevel(
        TimeFunction(om, om_dot, span=T), TimeFunction(de, de_dot, span=T), T
    )


def invert_effective(
    eff: EffectiveTwoLevel, Delta: float, cap: float = math.inf
) -> PulsePair:
    """Solve the effective controls back for the optical envelopes."""
    if Delta == 0:
        raise ZeroDetuning("inversion needs Delta != 0")

    def radicals(t):
        om = np.asarray(eff.omega_eff(t), dtype=float)
        de = np.asarray(eff.delta_eff(t), dtype=float)
        root = np.sqrt(om * om + de * de)
        return 2.0 * Delta * (root + de), 2.0 * Delta * (root - de)

    grid = np.linspace(0.0, eff.duration_T, 2049)
    rp, rs = radicals(grid)
    worst = min(float(np.min(rp)), float(np.min(rs)))
    if worst < -1e-9 * max(1.0, abs(Delta)):
        raise NegativeRadicand(f"radicand reaches {worst:.3e}")

    def omega_p(t):
        rp, _ = radicals(t)
        return np.sqrt(np.maximum(rp, 0.0))

    def omega_s(t):
        _, rs = radicals(t)
        return np.sqrt(np.maximum(rs, 0.0))

    T = eff.duration_T
    return PulsePair(
        T, FunctionEnvelope(omega_s, span=T), FunctionEnvelope(omega_p, span=T), cap
    )


def counter_diabatic(pulses: PulsePair) -> TimeFunction:
    """Counter-diabatic coupling Omega_a of the pulse pair; equals twice
    the mixing-angle velocity for theta = atan(Omega_p / Omega_s)."""
    s, p = pulses.omega_s, pulses.omega_p
    grid = np.linspace(0.0, pulses.duration_T, 2049)
    den_max = float(np.max(np.asarray(s(grid)) ** 2 + np.asarray(p(grid)) ** 2))
    if den_max == 0.0:
        raise DegenerateEnvelope("both envelopes vanish on the whole window")

    def value(t):
        sv, pv = np.asarray(s(t)), np.asarray(p(t))
        den = pv * pv + sv * sv
        num = np.asarray(p.derivative(t)) * sv - pv * np.asarray(s.derivative(t))
        return 2.0 * np.where(den > 0.0, num / np.maximum(den, 1e-300), 0.0)

    def deriv(t):
        sv, pv = np.asarray(s(t)), np.asarray(p(t))
        s1, p1 = np.asarray(s.derivative(t)), np.asarray(p.derivative(t))
        s2, p2 = np.asarray(s.second_derivative(t)), np.asarray(p.second_derivative(t))
        den = pv * pv + sv * sv
        num = p1 * sv - pv * s1
        num_dot = p2 * sv - pv * s2
        den_dot = 2.0 * (pv * p1 + sv * s1)
        safe = np.maximum(den, 1e-300)
        return 2.0 * np.where(
            den > 0.0, (num_dot * safe - num * den_dot) / (safe * safe), 0.0
        )

    return TimeFunction(value, deriv, span=pulses.duration_T)


def satd_modify(eff: EffectiveTwoLevel, omega_a: TimeFunction) -> EffectiveTwoLevel:
    """Fold the counter-diabatic coupling into modified effective controls."""

    def om(t):
        oe = np.asarray(eff.omega_eff(t))
        oa = np.asarray(omega_a(t))
        return np.sqrt(oe * oe + oa * oa)

    def de(t):
        oe = np.asarray(eff.omega_eff(t))
        oa = np.asarray(omega_a(t))
        oe_dot = np.asarray(eff.omega_eff.d(t))
        oa_dot = np.asarray(omega_a.d(t))
        return np.asarray(eff.delta_eff(t)) + (oa_dot * oe - oa * oe_dot) / (
            oe * oe + oa * oa
        )

    T = eff.duration_T
    return EffectiveTwoLevel(
        TimeFunction(om, span=T), TimeFunction(de, span=T), T
    )


def gaussian_stirap_base(
    cfg: PhysicsConfig,
    amplitude: float,
    width: float | None = None,
    separation: float | None = None,
) -> BaseStirapShape:
    """Default Gaussian STIRAP base: width T/6, separation T/10, Stokes
    leading the pump."""
    T = cfg.duration_T
    return BaseStirapShape(
        amplitude=amplitude,
        width=T / 6.0 if width is None else width,
        separation=T / 10.0 if separation is None else separation,
        duration_T=T,
    )


def satd_pipeline(base: BaseStirapShape, cfg: PhysicsConfig) -> PulsePair:
    """Synthesize the modified optical envelopes for the far-off-resonant
    SATD protocol: base pair -> effective reduction -> counter-diabatic
    coupling -> modified effective controls -> inversion.  Raises
    :class:`CapExceeded` when the modified pulses overflow the cap.

    The chain is nonlinear in the base amplitude, so the synthesis must
    target the system it runs on: rescaling a synthesized pair breaks the
    transitionless property (the counter-diabatic term has to match the
    mixing-angle velocity exactly, not a multiple of it).
    """
    if cfg.Delta == 0:
        raise ZeroDetuning("SATD synthesis needs Delta != 0")
    if base.amplitude == 0:
        raise DegenerateEnvelope("zero base pulses cannot be modified")
    stokes = SatdChannelEnvelope(base, cfg.Delta, "s")
    pump = SatdChannelEnvelope(base, cfg.Delta, "p")
    pair = PulsePair(base.duration_T, stokes, pump, cfg.cap)
    pair.check_cap()
    return pair


def _satd_peak(shape: BaseStirapShape, Delta: float) -> float:
    pair = PulsePair(
        shape.duration_T,
        SatdChannelEnvelope(shape, Delta, "s"),
        SatdChannelEnvelope(shape, Delta, "p"),
        math.inf,
    )
    _, s, p = pair.sample(2049)
    return max(float(np.max(np.abs(s))), float(np.max(np.abs(p))))


def satd_base_for_cap(
    cfg: PhysicsConfig, fill: float = 0.995, tol: float = 1e-10
) -> BaseStirapShape:
    """Base shape whose synthesized pulses saturate ``fill`` of the cap.

    The amplitude is bisected at the default width; when the counter-
    diabatic contribution alone overflows the cap (small cap or large
    detuning: the mixing-angle velocity scales as separation/width^2),
    the width is widened in small steps until a usable amplitude exists.
    Widening trades boundary sharpness for counter-diabatic headroom, so
    only the minimal widening is applied.
    """
    target = fill * cfg.cap
    for widen in range(0, 31):
        width = cfg.duration_T * (1.0 / 6.0) * (1.0 + widen / 10.0)

        def peak(amplitude):
            return _satd_peak(
                gaussian_stirap_base(cfg, amplitude, width=width), cfg.Delta
            )

        if peak(1e-9 * cfg.cap) >= 0.9 * target:
            continue  # CD floor leaves no room for an actual base pulse
        lo, hi = 0.0, cfg.cap
        while peak(hi) < target:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if peak(mid) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol * max(1.0, hi):
                break
        return gaussian_stirap_base(cfg, lo, width=width)
    raise CapExceeded(_satd_peak(gaussian_stirap_base(cfg, 0.0), cfg.Delta),
                      cfg.duration_T / 2.0, cfg.cap)


def default_satd_pulses(cfg: PhysicsConfig, fill: float = 0.995) -> PulsePair:
    """SATD pulses from the cap-saturating base for this configuration."""
    return satd_pipeline(satd_base_for_cap(cfg, fill), cfg)


@dataclass(frozen=True, eq=False)
class CrabParams:
    """Randomized truncated-Fourier parameterization of a pulse pair.

    ``coeffs`` concatenates [a_s, b_s, a_p, b_p], each of length
    ``n_harmonics``.  Frequencies are nu_k = (2 pi k / T)(1 + r_k) with
    r_k drawn uniformly from [-0.5, 0.5] by the seeded generator.
    """

    n_harmonics: int
    freqs_s: np.ndarray
    freqs_p: np.ndarray
    coeffs: np.ndarray
    seed: int

    def __post_init__(self):
        if self.coeffs.shape != (4 * self.n_harmonics,):
            raise ValueError("coeffs must have length 4 * n_harmonics")

    @classmethod
    def randomized(cls, n_harmonics: int, duration_T: float, seed: int) -> "CrabParams":
        rng = np.random.Generator(
            np.random.Philox(key=np.array([seed, 0x0C0FFEE], dtype=np.uint64))
        )
        r = rng.uniform(-0.5, 0.5, size=2 * n_harmonics)
        k = np.arange(1, n_harmonics + 1)
        base = TWO_PI * k / duration_T
        return cls(
            n_harmonics=n_harmonics,
            freqs_s=base * (1.0 + r[:n_harmonics]),
            freqs_p=base * (1.0 + r[n_harmonics:]),
            coeffs=np.zeros(4 * n_harmonics),
            seed=seed,
        )

    def with_coeffs(self, coeffs) -> "CrabParams":
        return replace(self, coeffs=np.asarray(coeffs, dtype=float))

    def split(self):
        n = self.n_harmonics
        c = self.coeffs
        return c[:n], c[n : 2 * n], c[2 * n : 3 * n], c[3 * n :]


def crab_pulse(params: CrabParams, base: PulsePair) -> PulsePair:
    """Pulse pair from CRAB parameters on top of ``base`` (the correction
    is clamped to the base pair's cap)."""
    a_s, b_s, a_p, b_p = params.split()
    stokes = CrabEnvelope(
        base.omega_s, params.freqs_s, a_s, b_s, base.duration_T, base.cap
    )
    pump = CrabEnvelope(
        base.omega_p, params.freqs_p, a_p, b_p, base.duration_T, base.cap
    )
    return PulsePair(base.duration_T, stokes, pump, base.cap)


def write_pulse_csv(pulses: PulsePair, path, n_samples: int = 1441) -> None:
    """Export on a uniform grid; header row records duration and cap so
    the file round-trips exactly."""
    t, s, p = pulses.sample(n_samples)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# duration_us={pulses.duration_T!r} cap_rad_per_us={pulses.cap!r}\n"
        )
        fh.write("t_us,omega_s_rad_per_us,omega_p_rad_per_us\n")
        for ti, si, pi in zip(t, s, p):
            fh.write(f"{ti!r},{si!r},{pi!r}\n")


def read_pulse_csv(path) -> PulsePair:
    with open(path, "r", encoding="utf-8") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("#"):
            raise ValueError(f"{path}: missing metadata header")
        fields = dict(tok.split("=", 1) for tok in meta[1:].split())
        duration = float(fields["duration_us"])
        cap = float(fields["cap_rad_per_us"])
        header = fh.readline().strip()
        if header != "t_us,omega_s_rad_per_us,omega_p_rad_per_us":
            raise ValueError(f"{path}: unexpected column header {header!r}")
        data = np.loadtxt(fh, delimiter=",")
    pair = PulsePair(
        duration,
        TabulatedEnvelope(data[:, 0], data[:, 1]),
        TabulatedEnvelope(data[:, 0], data[:, 2]),
        cap,
    )
    pair.check_cap()
    return pair

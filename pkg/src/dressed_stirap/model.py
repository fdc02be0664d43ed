"""Physical model of the driven lambda system.

Level ordering is fixed package-wide: index 0 is the lower spin state
``|0>``, index 1 the lower spin state ``|-1>``, index 2 the optically
excited state ``|e>``.  All rates and frequencies are angular (rad/us);
helpers accepting ordinary frequencies in MHz convert by 2*pi at the
boundary.

Rotating frame
--------------
``|e>`` co-rotates with the pump at omega_p and ``|-1>`` with the Raman
difference omega_p - omega_s, so both optical couplings are static and
real and the only oscillating term is the microwave coupling::

    <0|H|-1>  = (Omega0/2) * exp(-i * Omega_R * t)
    <0|H|e>   = Omega_p(t) / 2
    <-1|H|e>  = Omega_s(t) / 2
    <-1|H|-1> = delta - Omega_R
    <e|H|e>   = Delta

with the Raman offset ``Omega_R = (omega_p - omega_s) - omega_B``.
Dressed runs set the lasers on the shifted two-photon resonance, i.e.
``Omega_R = Omega0``; bare runs (no microwave) use ``Omega_R = 0``.  The
phase sign of the microwave element is fixed by requiring that the frame
with a static microwave coupling reproduces the resonant dressing
Hamiltonian; with the opposite sign the shifted Raman condition would
address the wrong dressed transition.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import linalg
from .errors import DegenerateDressing

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

STATE_0, STATE_M1, STATE_E = 0, 1, 2

Frame = Literal["dressed", "bare"]

#: Microwave phases realizing the preparation |0> -> (|0> - |-1>)/sqrt(2)
#: and the readout (|0> + |-1>)/sqrt(2) -> |-1> with a quarter-period pulse.
PREP_PHASE = +math.pi / 2
READ_PHASE = -math.pi / 2


def ket(index: int) -> np.ndarray:
    """Basis vector of the three-level system."""
    v = np.zeros(3, dtype=complex)
    v[index] = 1.0
    return v


@dataclass(frozen=True)
class PhysicsConfig:
    """Fixed physical rates and frequencies (angular, rad/us; times in us).

    ``omega_B`` is bookkeeping only: the rotating frame eliminates it from
    the dynamics.  ``delta`` is the quasi-static bath shift of ``|-1>``.
    The amplitude caps apply per optical channel; the dressed defaults are
    sqrt(2) above the bare ones so that bare and dressed runs share the
    same effective two-level Rabi frequency.
    """

    Gamma: float = TWO_PI * 14.0
    gamma_s: float = TWO_PI * 1e-3
    Omega0: float = TWO_PI * 50.0
    Delta: float = TWO_PI * 3000.0
    omega_B: float = 0.0
    delta: float = 0.0
    duration_T: float = 0.72
    omega_max_s: float = SQRT2 * TWO_PI * 100.0
    omega_max_p: float = SQRT2 * TWO_PI * 100.0

    def __post_init__(self):
        if not self.Gamma > 0:
            raise ValueError("Gamma must be positive")
        if self.gamma_s < 0:
            raise ValueError("gamma_s must be non-negative")
        if self.Omega0 < 0:
            raise ValueError("Omega0 must be non-negative")
        if not self.duration_T > 0:
            raise ValueError("duration_T must be positive")
        if self.omega_max_s <= 0 or self.omega_max_p <= 0:
            raise ValueError("envelope caps must be positive")

    @classmethod
    def from_mhz(
        cls,
        Gamma_MHz: float = 14.0,
        gamma_s_MHz: float = 1e-3,
        Omega0_MHz: float = 50.0,
        Delta_MHz: float = 3000.0,
        omega_B_MHz: float = 0.0,
        delta_MHz: float = 0.0,
        duration_us: float = 0.72,
        omega_max_s_MHz: float = SQRT2 * 100.0,
        omega_max_p_MHz: float = SQRT2 * 100.0,
    ) -> "PhysicsConfig":
        """Build a config from ordinary frequencies (X/2pi) in MHz."""
        return cls(
            Gamma=TWO_PI * Gamma_MHz,
            gamma_s=TWO_PI * gamma_s_MHz,
            Omega0=TWO_PI * Omega0_MHz,
            Delta=TWO_PI * Delta_MHz,
            omega_B=TWO_PI * omega_B_MHz,
            delta=TWO_PI * delta_MHz,
            duration_T=duration_us,
            omega_max_s=TWO_PI * omega_max_s_MHz,
            omega_max_p=TWO_PI * omega_max_p_MHz,
        )

    def replace(self, **changes) -> "PhysicsConfig":
        return dataclasses.replace(self, **changes)

    def bare_variant(self) -> "PhysicsConfig":
        """Config for the bare-state comparison: no microwave dressing and
        optical caps reduced by sqrt(2) (identical lineshapes convention)."""
        return self.replace(
            Omega0=0.0,
            omega_max_s=self.omega_max_s / SQRT2,
            omega_max_p=self.omega_max_p / SQRT2,
        )

    @property
    def cap(self) -> float:
        """Single per-channel amplitude cap (the channel caps are equal in
        every configuration this package generates)."""
        return min(self.omega_max_s, self.omega_max_p)


@dataclass(frozen=True)
class DressedPair:
    """Dressed spin states of the resonantly driven two-level spin.

    ``theta0 = atan[Omega0 / (sqrt(Omega0^2 + delta^2) + delta)]`` and

        |+> = sin(theta0)|0> + cos(theta0)|-1>
        |-> = cos(theta0)|0> - sin(theta0)|-1>

    Energies are quoted relative to the mean of the spin block,
    E_pm = +-sqrt(Omega0^2 + delta^2)/2 (the bare spin block carries an
    additional global offset delta/2 that has no physical effect).
    """

    theta0: float
    E_plus: float
    E_minus: float
    ket_plus: np.ndarray
    ket_minus: np.ndarray

    @property
    def splitting(self) -> float:
        return self.E_plus - self.E_minus


def dressed_states(Omega0: float, delta: float) -> DressedPair:
    """Dressed states and energies for microwave Rabi ``Omega0`` and bath
    shift ``delta`` (both rad/us)."""
    if Omega0 == 0.0 and delta == 0.0:
        raise DegenerateDressing("Omega0 = delta = 0 leaves the spin undressed")
    r = math.hypot(Omega0, delta)
    if Omega0 == 0.0:
        theta0 = 0.0 if delta > 0 else math.pi / 2
    else:
        theta0 = math.atan2(Omega0, r + delta)
    sin_t, cos_t = math.sin(theta0), math.cos(theta0)
    plus = np.array([sin_t, cos_t, 0.0], dtype=complex)
    minus = np.array([cos_t, -sin_t, 0.0], dtype=complex)
    return DressedPair(
        theta0=theta0,
        E_plus=+r / 2.0,
        E_minus=-r / 2.0,
        ket_plus=plus,
        ket_minus=minus,
    )


def mw_hamiltonian_matrix(Omega0: float, delta: float) -> np.ndarray:
    """Static spin-block Hamiltonian of the microwave dressing,
    delta|-1><-1| + (Omega0/2)(|0><-1| + h.c.), embedded in 3x3."""
    h = np.zeros((3, 3), dtype=complex)
    h[STATE_M1, STATE_M1] = delta
    h[STATE_0, STATE_M1] = Omega0 / 2.0
    h[STATE_M1, STATE_0] = Omega0 / 2.0
    return h


def raman_offset(cfg: PhysicsConfig, frame: Frame) -> float:
    """Raman offset Omega_R = (omega_p - omega_s) - omega_B implied by the
    run type: the shifted two-photon resonance Omega0 for dressed runs,
    zero for bare runs."""
    if frame == "dressed":
        return cfg.Omega0
    if frame == "bare":
        return 0.0
    raise ValueError(f"unknown frame {frame!r}")


def hamiltonian(t: float, pulses, cfg: PhysicsConfig, frame: Frame) -> np.ndarray:
    """Rotating-frame Hamiltonian (hbar = 1) at time ``t``.

    ``pulses`` provides the optical envelopes Omega_s(t), Omega_p(t); see
    the module docstring for the matrix elements.  Bare runs have the
    microwave block identically zero.
    """
    omega_r = raman_offset(cfg, frame)
    omega0 = cfg.Omega0 if frame == "dressed" else 0.0
    h = np.zeros((3, 3), dtype=complex)
    h[STATE_M1, STATE_M1] = cfg.delta - omega_r
    h[STATE_E, STATE_E] = cfg.Delta
    m = 0.5 * omega0 * np.exp(-1j * omega_r * t)
    h[STATE_0, STATE_M1] = m
    h[STATE_M1, STATE_0] = np.conj(m)
    p = 0.5 * float(pulses.omega_p(t))
    s = 0.5 * float(pulses.omega_s(t))
    h[STATE_0, STATE_E] = p
    h[STATE_E, STATE_0] = p
    h[STATE_M1, STATE_E] = s
    h[STATE_E, STATE_M1] = s
    return h


def jump_operators(cfg: PhysicsConfig) -> list[np.ndarray]:
    """Lindblad jump operators: branching decay of |e> into both lower
    states at Gamma/2 each, and spin dephasing at gamma_s."""
    l0 = np.zeros((3, 3), dtype=complex)
    l0[STATE_0, STATE_E] = math.sqrt(cfg.Gamma / 2.0)
    l1 = np.zeros((3, 3), dtype=complex)
    l1[STATE_M1, STATE_E] = math.sqrt(cfg.Gamma / 2.0)
    l3 = np.zeros((3, 3), dtype=complex)
    l3[STATE_M1, STATE_M1] = math.sqrt(cfg.gamma_s)
    l3[STATE_0, STATE_0] = -math.sqrt(cfg.gamma_s)
    return [l0, l1, l3]


def mw_frame_rotation(cfg: PhysicsConfig, frame: Frame, t: float) -> np.ndarray:
    """Unitary mapping a simulation-frame state at time ``t`` into the
    frame where the microwave coupling is static (the frame in which the
    dressed states and the pi/2 pulses are defined):

        rho_static = W rho_sim W^dag,   W = diag(1, exp(-i Omega_R t), 1).
    """
    omega_r = raman_offset(cfg, frame)
    return np.diag([1.0, np.exp(-1j * omega_r * t), 1.0]).astype(complex)


def nonadiabatic_rate(Omega: float, Delta: float, Gamma: float) -> float:
    """Effective optically-induced decay rate (Omega / 2 Delta)^2 * Gamma
    in the far-detuned limit (all arguments angular, rad/us)."""
    if Delta == 0:
        raise ValueError("Delta must be nonzero")
    return (Omega / (2.0 * Delta)) ** 2 * Gamma


def pi_half_pulse(
    rho: np.ndarray,
    cfg: PhysicsConfig,
    phase: float,
    delta_during_pulse: float,
    solver=None,
) -> np.ndarray:
    """Propagate ``rho`` through a resonant microwave quarter-period pulse.

    The drive Hamiltonian is ``delta|-1><-1| + (Omega0/2)(e^{i phase}
    |0><-1| + h.c.)`` applied for t = pi/(2 Omega0) with the optical
    fields off and all dissipators active.  With ``phase = PREP_PHASE``
    and delta = 0 this maps |0> to (|0> - |-1>)/sqrt(2) exactly; with
    ``phase = READ_PHASE`` it maps (|0> + |-1>)/sqrt(2) to |-1>.
    """
    from .lindblad import mw_drive_propagate

    if cfg.Omega0 <= 0:
        raise ValueError("pi/2 pulse requires Omega0 > 0")
    duration = math.pi / (2.0 * cfg.Omega0)
    traj = mw_drive_propagate(rho, cfg, phase, delta_during_pulse, duration, solver)
    return traj.final_state


def hermitian_check(h: np.ndarray) -> float:
    """Hermiticity defect of a Hamiltonian matrix (diagnostic)."""
    return linalg.hermiticity_defect(h)

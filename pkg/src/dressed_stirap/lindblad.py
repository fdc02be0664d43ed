"""Time-dependent Lindblad propagation of the three-level density matrix.

The generator is

    drho/dt = -i [H(t), rho] + sum_k ( L_k rho L_k^dag
                                       - 1/2 {L_k^dag L_k, rho} )

with the jump operators of :func:`dressed_stirap.model.jump_operators`.
Integration uses an embedded adaptive Dormand-Prince 5(4) pair with
dense output on a uniform grid (0.5 ns spacing, at least 1441 points for
a transfer run).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _core, model
from .errors import StepSizeUnderflow, ToleranceNotMet
from .model import Frame, PhysicsConfig
from .pulses import PulsePair

log = logging.getLogger(__name__)

TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-9
POSITIVITY_TOL = 1e-8

#: transfer-run grid policy: 0.5 ns spacing, never fewer than 1441 points
GRID_DT = 5e-4
MIN_GRID_POINTS = 1441


@dataclass(frozen=True)
class SolverOptions:
    """Adaptive-stepper settings.  Defaults sit two decades below the
    1e-6 oracle tolerances used in the tests."""

    rtol: float = 1e-8
    atol: float = 1e-10
    min_step: float = 1e-9
    n_grid_points: int | None = None

    def grid(self, duration: float, minimum: int = MIN_GRID_POINTS) -> np.ndarray:
        if self.n_grid_points is not None:
            n = self.n_grid_points
        else:
            n = max(minimum, int(round(duration / GRID_DT)) + 1)
        return np.linspace(0.0, duration, n)


@dataclass(frozen=True)
class Trajectory:
    """Stored propagation result on the uniform output grid."""

    times: np.ndarray
    states: np.ndarray  # (n, 3, 3) complex
    peak_excited_population: float
    final_state: np.ndarray


def validate_density_matrix(rho: np.ndarray, context: str = "state") -> None:
    rho = np.asarray(rho)
    if rho.shape != (3, 3):
        raise ValueError(f"{context}: expected a 3x3 matrix, got {rho.shape}")
    defect = float(np.max(np.abs(rho - rho.conj().T)))
    if defect > HERMITICITY_TOL:
        raise ValueError(f"{context}: hermiticity defect {defect:.3e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{context}: trace {tr} is not 1")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if float(w[0]) < -POSITIVITY_TOL:
        raise ValueError(f"{context}: negative eigenvalue {w[0]:.3e}")


def lindblad_rhs(t: float, rho: np.ndarray, pulses: PulsePair,
                 cfg: PhysicsConfig, frame: Frame) -> np.ndarray:
    """Reference right-hand side built from the explicit operator algebra
    (the propagator uses an equivalent compiled elementwise form)."""
    h = model.hamiltonian(t, pulses, cfg, frame)
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (h @ rho - rho @ h)
    for lk in model.jump_operators(cfg):
        lkd = lk.conj().T
        ll = lkd @ lk
        out += lk @ rho @ lkd - 0.5 * (ll @ rho + rho @ ll)
    return out


def _run_core(rho0, grid, cfg, omega0, omega_r, phase, h_mm, pulses, solver, store):
    ks, ps, txs, tcs, kp, pp, txp, tcp = pulses.core_spec()
    states, peak_ee, n_steps, status = _core.dp45_propagate(
        np.ascontiguousarray(np.asarray(rho0, dtype=complex).reshape(9)),
        grid,
        h_mm,
        cfg.Delta,
        omega0,
        omega_r,
        phase,
        cfg.Gamma,
        cfg.gamma_s,
        ks, ps, txs, tcs,
        kp, pp, txp, tcp,
        solver.rtol,
        solver.atol,
        solver.min_step,
        store,
    )
    if status == _core.STATUS_STEP_UNDERFLOW:
        raise StepSizeUnderflow(
            f"adaptive step fell below {solver.min_step:g} us after {n_steps} steps"
        )
    return states, peak_ee, n_steps


def _finalize(states, grid, peak_ee, store):
    final = states[-1].reshape(3, 3).copy()
    drift = abs(complex(np.trace(final)) - 1.0)
    if drift > 1e-6:
        raise ToleranceNotMet(f"final trace drift {drift:.3e} exceeds 1e-6")
    if drift > 1e-10:
        log.info("re-hermitizing final state, trace drift %.3e", drift)
        final = (final + final.conj().T) / 2.0
        final = final / np.trace(final).real
    if store:
        all_states = states.reshape(-1, 3, 3)
    else:
        all_states = final.reshape(1, 3, 3)
        grid = grid[-1:]
    return Trajectory(
        times=grid,
        states=all_states,
        peak_excited_population=float(peak_ee),
        final_state=final,
    )


def propagate(
    rho0: np.ndarray,
    pulses: PulsePair,
    cfg: PhysicsConfig,
    frame: Frame,
    solver: SolverOptions | None = None,
    store_states: bool = True,
) -> Trajectory:
    """Integrate the master equation over [0, duration_T]."""
    solver = solver or SolverOptions()
    validate_density_matrix(rho0, "initial state")
    omega_r = model.raman_offset(cfg, frame)
    omega0 = cfg.Omega0 if frame == "dressed" else 0.0
    grid = solver.grid(pulses.duration_T)
    states, peak_ee, _ = _run_core(
        rho0, grid, cfg, omega0, omega_r, 0.0, cfg.delta - omega_r,
        pulses, solver, store_states,
    )
    return _finalize(states, grid, peak_ee, store_states)


def mw_drive_propagate(
    rho0: np.ndarray,
    cfg: PhysicsConfig,
    phase: float,
    delta: float,
    duration: float,
    solver: SolverOptions | None = None,
    store_states: bool = False,
) -> Trajectory:
    """Propagate under the static microwave drive
    delta |-1><-1| + (Omega0/2)(e^{i phase}|0><-1| + h.c.)
    with the optical fields off and all dissipators active."""
    solver = solver or SolverOptions()
    validate_density_matrix(rho0, "initial state")
    grid = solver.grid(duration, minimum=101)
    pulses = PulsePair.zero(duration, cfg.cap)
    states, peak_ee, _ = _run_core(
        rho0, grid, cfg, cfg.Omega0, 0.0, phase, delta, pulses, solver, store_states
    )
    return _finalize(states, grid, peak_ee, store_states)


def transfer_efficiency(traj: Trajectory, target: np.ndarray) -> float:
    """eta = <target| rho(T) |target> for a normalized target vector."""
    target = np.asarray(target, dtype=complex)
    norm = np.linalg.norm(target)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"target vector norm {norm} is not 1")
    val = complex(target.conj() @ traj.final_state @ target)
    if abs(val.imag) > 1e-9:
        raise ValueError(f"efficiency has imaginary part {val.imag:.3e}")
    return float(val.real)


def transfer_run(
    pulses: PulsePair,
    cfg: PhysicsConfig,
    frame: Frame,
    initial_state: np.ndarray,
    target_state: np.ndarray,
    solver: SolverOptions | None = None,
    store_states: bool = False,
):
    """One full transfer: propagate, rotate into the static-microwave frame,
    project on the target.  Returns ``(eta, trajectory)``."""
    rho0 = np.outer(initial_state, np.conj(initial_state))
    traj = propagate(rho0, pulses, cfg, frame, solver, store_states)
    w = model.mw_frame_rotation(cfg, frame, pulses.duration_T)
    rho_static = w @ traj.final_state @ w.conj().T
    target = np.asarray(target_state, dtype=complex)
    eta = float(np.real(target.conj() @ rho_static @ target))
    return eta, traj


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Populations and the spin coherence along the stored grid."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_us,rho_00,rho_m1m1,rho_ee,re_rho_0m1,im_rho_0m1\n")
        for t, rho in zip(traj.times, traj.states):
            fh.write(
                f"{t!r},{rho[0, 0].real!r},{rho[1, 1].real!r},"
                f"{rho[2, 2].real!r},{rho[0, 1].real!r},{rho[0, 1].imag!r}\n"
            )


def trajectory_checks(traj: Trajectory):
    """Worst-case trace, hermiticity and positivity defects over the grid
    (used by the conservation tests)."""
    states = traj.states
    trace_dev = float(np.max(np.abs(np.einsum("nii->n", states) - 1.0)))
    herm = float(np.max(np.abs(states - np.conj(np.swapaxes(states, 1, 2)))))
    sym = (states + np.conj(np.swapaxes(states, 1, 2))) / 2.0
    min_eig = float(np.min(np.linalg.eigvalsh(sym)))
    return trace_dev, herm, min_eig

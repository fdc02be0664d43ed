"""Compiled numerical core: envelope evaluation and the adaptive
Dormand-Prince 5(4) propagator for the 3x3 Lindblad equation.

Everything here is nopython/nogil so ensemble runs can be fanned out over
a thread pool.  The density matrix travels as a flat row-major
complex128[9] vector.  Envelopes are encoded as ``(kind, params, table_x,
table_c)`` with the closed forms evaluated directly (no interpolation)
for the Gaussian, CRAB and SATD families; tabulated pulses use the cubic
spline coefficients produced by the Python layer.
"""

import math

import numpy as np
from numba import njit

KIND_ZERO = 0
KIND_GAUSSIAN = 1
KIND_CRAB = 2
KIND_SATD_S = 3
KIND_SATD_P = 4
KIND_TABLE = 5

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

_EMPTY_PAR = np.zeros(0, dtype=np.float64)
_EMPTY_TX = np.zeros(1, dtype=np.float64)
_EMPTY_TC = np.zeros((4, 1), dtype=np.float64)


@njit(cache=True, nogil=True)
def _satd_channel(t, amp, width, tau, big_t, delta_dipole, want_p):
    """Far-off-resonant SATD chain evaluated in closed form.

    Base pulses are the counterintuitively ordered Gaussian pair
    (Stokes peaking at T/2 - tau, pump at T/2 + tau).  The chain maps the
    base through the effective two-level reduction, adds the
    counter-diabatic coupling, and inverts back to optical envelopes.
    """
    w2 = width * width
    xp = t - (big_t / 2.0 + tau)
    xs = t - (big_t / 2.0 - tau)
    gp = amp * math.exp(-xp * xp / (2.0 * w2))
    gs = amp * math.exp(-xs * xs / (2.0 * w2))
    gp1 = -(xp / w2) * gp
    gs1 = -(xs / w2) * gs
    gp2 = (xp * xp / (w2 * w2) - 1.0 / w2) * gp
    gs2 = (xs * xs / (w2 * w2) - 1.0 / w2) * gs

    om_eff = gs * gp / (2.0 * delta_dipole)
    om_eff_dot = (gs1 * gp + gs * gp1) / (2.0 * delta_dipole)
    d_eff = (gp * gp - gs * gs) / (4.0 * delta_dipole)

    den = gp * gp + gs * gs
    num = gp1 * gs - gp * gs1
    om_a = 2.0 * num / den
    num_dot = gp2 * gs - gp * gs2
    den_dot = 2.0 * (gp * gp1 + gs * gs1)
    om_a_dot = 2.0 * (num_dot * den - num * den_dot) / (den * den)

    om_mod = math.sqrt(om_eff * om_eff + om_a * om_a)
    d_mod = d_eff + (om_a_dot * om_eff - om_a * om_eff_dot) / (
        om_eff * om_eff + om_a * om_a
    )

    root = math.sqrt(om_mod * om_mod + d_mod * d_mod)
    if want_p:
        rad = 2.0 * delta_dipole * (root + d_mod)
    else:
        rad = 2.0 * delta_dipole * (root - d_mod)
    if rad < 0.0:
        rad = 0.0
    return math.sqrt(rad)


@njit(cache=True, nogil=True)
def env_value(kind, par, tx, tc, t):
    """Scalar envelope value at time t (rad/us)."""
    if kind == KIND_ZERO:
        return 0.0
    if kind == KIND_GAUSSIAN:
        scale = par[0]
        amp = par[1]
        center = par[2]
        width = par[3]
        x = t - center
        return scale * amp * math.exp(-x * x / (2.0 * width * width))
    if kind == KIND_CRAB:
        scale = par[0]
        cap = par[1]
        big_t = par[2]
        n = int(par[3])
        base_amp = par[4]
        base_center = par[5]
        base_width = par[6]
        val = 0.0
        if base_amp != 0.0:
            xb = t - base_center
            val = base_amp * math.exp(-xb * xb / (2.0 * base_width * base_width))
        win = math.sin(math.pi * t / big_t)
        win = win * win
        acc = 0.0
        for k in range(n):
            f = par[7 + k]
            acc += par[7 + n + k] * math.sin(f * t)
            acc += par[7 + 2 * n + k] * math.cos(f * t)
        val += win * acc
        if val > cap:
            val = cap
        elif val < -cap:
            val = -cap
        return scale * val
    if kind == KIND_SATD_S or kind == KIND_SATD_P:
        scale = par[0]
        return scale * _satd_channel(
            t, par[1], par[2], par[3], par[4], par[5], kind == KIND_SATD_P
        )
    if kind == KIND_TABLE:
        scale = par[0]
        m = tx.shape[0] - 1
        tt = t
        if tt < tx[0]:
            tt = tx[0]
        elif tt > tx[m]:
            tt = tx[m]
        idx = np.searchsorted(tx, tt) - 1
        if idx < 0:
            idx = 0
        elif idx > m - 1:
            idx = m - 1
        dx = tt - tx[idx]
        v = ((tc[0, idx] * dx + tc[1, idx]) * dx + tc[2, idx]) * dx + tc[3, idx]
        return scale * v
    return 0.0


@njit(cache=True, nogil=True)
def _rhs(
    t,
    r,
    out,
    hmm,
    hee,
    om0,
    om_r,
    phi,
    gamma,
    gs,
    kind_s,
    par_s,
    tx_s,
    tc_s,
    kind_p,
    par_p,
    tx_p,
    tc_p,
):
    """Lindblad right-hand side drho/dt into ``out`` (flat row-major)."""
    p = 0.5 * env_value(kind_p, par_p, tx_p, tc_p, t)
    s = 0.5 * env_value(kind_s, par_s, tx_s, tc_s, t)
    ang = phi - om_r * t
    m = 0.5 * om0 * complex(math.cos(ang), math.sin(ang))
    mc = m.conjugate()

    r00, r01, r02 = r[0], r[1], r[2]
    r10, r11, r12 = r[3], r[4], r[5]
    r20, r21, r22 = r[6], r[7], r[8]

    # H rho with H = [[0, m, p], [mc, hmm, s], [p, s, hee]]
    a00 = m * r10 + p * r20
    a01 = m * r11 + p * r21
    a02 = m * r12 + p * r22
    a10 = mc * r00 + hmm * r10 + s * r20
    a11 = mc * r01 + hmm * r11 + s * r21
    a12 = mc * r02 + hmm * r12 + s * r22
    a20 = p * r00 + s * r10 + hee * r20
    a21 = p * r01 + s * r11 + hee * r21
    a22 = p * r02 + s * r12 + hee * r22

    # rho H
    b00 = r01 * mc + r02 * p
    b01 = r00 * m + r01 * hmm + r02 * s
    b02 = r00 * p + r01 * s + r02 * hee
    b10 = r11 * mc + r12 * p
    b11 = r10 * m + r11 * hmm + r12 * s
    b12 = r10 * p + r11 * s + r12 * hee
    b20 = r21 * mc + r22 * p
    b21 = r20 * m + r21 * hmm + r22 * s
    b22 = r20 * p + r21 * s + r22 * hee

    half_g = 0.5 * gamma
    ge = half_g + 0.5 * gs  # decay of the optical coherences

    out[0] = -1j * (a00 - b00) + half_g * r22
    out[1] = -1j * (a01 - b01) - 2.0 * gs * r01
    out[2] = -1j * (a02 - b02) - ge * r02
    out[3] = -1j * (a10 - b10) - 2.0 * gs * r10
    out[4] = -1j * (a11 - b11) + half_g * r22
    out[5] = -1j * (a12 - b12) - ge * r12
    out[6] = -1j * (a20 - b20) - ge * r20
    out[7] = -1j * (a21 - b21) - ge * r21
    out[8] = -1j * (a22 - b22) - gamma * r22


@njit(cache=True, nogil=True)
def _error_norm(err, y_old, y_new, rtol, atol):
    acc = 0.0
    for i in range(9):
        ya = abs(y_old[i])
        yb = abs(y_new[i])
        if yb > ya:
            ya = yb
        sc = atol + rtol * ya
        e = abs(err[i]) / sc
        acc += e * e
    return math.sqrt(acc / 9.0)


@njit(cache=True, nogil=True)
def dp45_propagate(
    rho0,
    grid,
    hmm,
    hee,
    om0,
    om_r,
    phi,
    gamma,
    gs,
    kind_s,
    par_s,
    tx_s,
    tc_s,
    kind_p,
    par_p,
    tx_p,
    tc_p,
    rtol,
    atol,
    h_min,
    store,
):
    """Adaptive Dormand-Prince 5(4) integration over ``grid``.

    The stepper lands exactly on every grid point (natural steps are much
    finer than the output grid, so clipping costs nothing) and records the
    state there when ``store`` is true.  Returns ``(states, peak_ee,
    n_steps, status)``; with ``store`` false the states array holds only
    the final state.
    """
    n_out = grid.shape[0]
    n_keep = n_out if store else 1
    states = np.zeros((n_keep, 9), dtype=np.complex128)

    y = rho0.copy()
    t = grid[0]
    t_end = grid[n_out - 1]
    peak_ee = y[8].real
    if store:
        for i in range(9):
            states[0, i] = y[i]

    k1 = np.zeros(9, dtype=np.complex128)
    k2 = np.zeros(9, dtype=np.complex128)
    k3 = np.zeros(9, dtype=np.complex128)
    k4 = np.zeros(9, dtype=np.complex128)
    k5 = np.zeros(9, dtype=np.complex128)
    k6 = np.zeros(9, dtype=np.complex128)
    k7 = np.zeros(9, dtype=np.complex128)
    ytmp = np.zeros(9, dtype=np.complex128)
    ynew = np.zeros(9, dtype=np.complex128)
    yerr = np.zeros(9, dtype=np.complex128)

    _rhs(t, y, k1, hmm, hee, om0, om_r, phi, gamma, gs,
         kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)

    # initial step size heuristic (order-5 variant of the standard rule)
    d0 = 0.0
    d1 = 0.0
    for i in range(9):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(k1[i]) / sc) ** 2
    d0 = math.sqrt(d0 / 9.0)
    d1 = math.sqrt(d1 / 9.0)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    for i in range(9):
        ytmp[i] = y[i] + h * k1[i]
    _rhs(t + h, ytmp, k2, hmm, hee, om0, om_r, phi, gamma, gs,
         kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
    d2 = 0.0
    for i in range(9):
        sc = atol + rtol * abs(y[i])
        d2 += (abs(k2[i] - k1[i]) / sc) ** 2
    d2 = math.sqrt(d2 / 9.0) / h
    dm = d1 if d1 > d2 else d2
    if dm > 1e-15:
        h1 = (0.01 / dm) ** 0.2
        if h1 < 100.0 * h:
            h = h1
        else:
            h = 100.0 * h
    span = t_end - t
    if h > span:
        h = span

    gi = 1
    n_steps = 0
    status = STATUS_OK

    while gi < n_out:
        target = grid[gi]
        if h < h_min:
            status = STATUS_STEP_UNDERFLOW
            break
        landing = False
        hs = h
        if t + hs >= target:
            hs = target - t
            landing = True

        # Dormand-Prince stages
        for i in range(9):
            ytmp[i] = y[i] + hs * 0.2 * k1[i]
        _rhs(t + 0.2 * hs, ytmp, k2, hmm, hee, om0, om_r, phi, gamma, gs,
             kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
        for i in range(9):
            ytmp[i] = y[i] + hs * (0.075 * k1[i] + 0.225 * k2[i])
        _rhs(t + 0.3 * hs, ytmp, k3, hmm, hee, om0, om_r, phi, gamma, gs,
             kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
        for i in range(9):
            ytmp[i] = y[i] + hs * (
                (44.0 / 45.0) * k1[i]
                - (56.0 / 15.0) * k2[i]
                + (32.0 / 9.0) * k3[i]
            )
        _rhs(t + 0.8 * hs, ytmp, k4, hmm, hee, om0, om_r, phi, gamma, gs,
             kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
        for i in range(9):
            ytmp[i] = y[i] + hs * (
                (19372.0 / 6561.0) * k1[i]
                - (25360.0 / 2187.0) * k2[i]
                + (64448.0 / 6561.0) * k3[i]
                - (212.0 / 729.0) * k4[i]
            )
        _rhs(t + (8.0 / 9.0) * hs, ytmp, k5, hmm, hee, om0, om_r, phi, gamma, gs,
             kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
        for i in range(9):
            ytmp[i] = y[i] + hs * (
                (9017.0 / 3168.0) * k1[i]
                - (355.0 / 33.0) * k2[i]
                + (46732.0 / 5247.0) * k3[i]
                + (49.0 / 176.0) * k4[i]
                - (5103.0 / 18656.0) * k5[i]
            )
        _rhs(t + hs, ytmp, k6, hmm, hee, om0, om_r, phi, gamma, gs,
             kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
        for i in range(9):
            ynew[i] = y[i] + hs * (
                (35.0 / 384.0) * k1[i]
                + (500.0 / 1113.0) * k3[i]
                + (125.0 / 192.0) * k4[i]
                - (2187.0 / 6784.0) * k5[i]
                + (11.0 / 84.0) * k6[i]
            )
        _rhs(t + hs, ynew, k7, hmm, hee, om0, om_r, phi, gamma, gs,
             kind_s, par_s, tx_s, tc_s, kind_p, par_p, tx_p, tc_p)
        for i in range(9):
            yerr[i] = hs * (
                (71.0 / 57600.0) * k1[i]
                - (71.0 / 16695.0) * k3[i]
                + (71.0 / 1920.0) * k4[i]
                - (17253.0 / 339200.0) * k5[i]
                + (22.0 / 525.0) * k6[i]
                - (1.0 / 40.0) * k7[i]
            )

        err = _error_norm(yerr, y, ynew, rtol, atol)
        n_steps += 1

        if err <= 1.0:
            t = target if landing else t + hs
            for i in range(9):
                y[i] = ynew[i]
                k1[i] = k7[i]  # FSAL
            if landing:
                if store:
                    for i in range(9):
                        states[gi, i] = y[i]
                ee = y[8].real
                if ee > peak_ee:
                    peak_ee = ee
                gi += 1
            if err == 0.0:
                factor = 10.0
            else:
                factor = 0.9 * err ** -0.2
                if factor > 10.0:
                    factor = 10.0
                elif factor < 0.2:
                    factor = 0.2
            if landing:
                # the clipped landing step is artificially short; never let
                # it shrink the controller step
                if hs * factor > h:
                    h = hs * factor
            else:
                h = hs * factor
        else:
            factor = 0.9 * err ** -0.2
            if factor < 0.2:
                factor = 0.2
            elif factor > 1.0:
                factor = 1.0
            h = hs * factor

    if not store:
        for i in range(9):
            states[0, i] = y[i]
    return states, peak_ee, n_steps, status


@njit(cache=True, nogil=True)
def hamiltonian_matrix(
    t,
    hmm,
    hee,
    om0,
    om_r,
    phi,
    kind_s,
    par_s,
    tx_s,
    tc_s,
    kind_p,
    par_p,
    tx_p,
    tc_p,
):
    """Hamiltonian the propagator integrates, for cross-checks against the
    reference construction in :mod:`dressed_stirap.model`."""
    h = np.zeros((3, 3), dtype=np.complex128)
    h[1, 1] = hmm
    h[2, 2] = hee
    ang = phi - om_r * t
    m = 0.5 * om0 * complex(math.cos(ang), math.sin(ang))
    h[0, 1] = m
    h[1, 0] = m.conjugate()
    p = 0.5 * env_value(kind_p, par_p, tx_p, tc_p, t)
    s = 0.5 * env_value(kind_s, par_s, tx_s, tc_s, t)
    h[0, 2] = p
    h[2, 0] = p
    h[1, 2] = s
    h[2, 1] = s
    return h

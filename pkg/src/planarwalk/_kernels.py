"""Numba kernels for the planar biped: kinematics, dynamics, contact.

Generalized coordinates (9): [x, z, pitch, R-hip, R-knee, R-ankle, L-hip,
L-knee, L-ankle]. Links: torso, R-thigh, R-shank, R-foot, L-thigh, L-shank,
L-foot. Contact points: R-heel, R-toe, L-heel, L-toe.

The integrator is symplectic Euler with a trapezoidal position update
(exact for constant acceleration). Contact damping, ground friction, and
joint friction are folded into the velocity solve implicitly (the system
matrix M + dt*J^T D J stays SPD), which keeps the 1 kHz substeps stable
even for light feet and stiff contact settings.
"""
import numpy as np
from numba import njit

# angular columns per link: col 2 is root pitch, 3..8 are joints
LINK_NCOLS = np.array([1, 2, 3, 4, 2, 3, 4], dtype=np.int64)
LINK_COLS = np.array([
    [2, 0, 0, 0],
    [2, 3, 0, 0],
    [2, 3, 4, 0],
    [2, 3, 4, 5],
    [2, 6, 0, 0],
    [2, 6, 7, 0],
    [2, 6, 7, 8],
], dtype=np.int64)
# contact points 0,1 live on link 3 (right foot), 2,3 on link 6 (left foot)
POINT_LINK = np.array([3, 3, 6, 6], dtype=np.int64)

NC = 9  # generalized coordinates
NP = 4  # contact points


@njit(cache=True)
def fk_state(q, v, geom, link_com):
    """Forward kinematics plus velocity-product CoM accelerations.

    geom = (thigh_len, shank_len, ankle_h, heel_off, toe_off).
    Returns (angles[7], coms[7,2], gammas[7,2], anchors[9,2], points[4,2]).
    anchors[c] is the pivot for angular column c (rows 0,1 unused).
    """
    lt, ls, ha, hb, tb = geom[0], geom[1], geom[2], geom[3], geom[4]
    rx, rz = q[0], q[1]

    angles = np.empty(7)
    coms = np.empty((7, 2))
    gammas = np.empty((7, 2))
    anchors = np.zeros((NC, 2))
    points = np.empty((NP, 2))

    anchors[2, 0] = rx
    anchors[2, 1] = rz

    # torso
    a0 = q[2]
    w0 = v[2]
    c0, s0 = np.cos(a0), np.sin(a0)
    angles[0] = a0
    ux, uz = link_com[0, 0], link_com[0, 1]
    dx = ux * c0 - uz * s0
    dz = ux * s0 + uz * c0
    coms[0, 0] = rx + dx
    coms[0, 1] = rz + dz
    gammas[0, 0] = -w0 * w0 * dx
    gammas[0, 1] = -w0 * w0 * dz

    for side in range(2):
        jh = 3 + 3 * side      # hip column
        li = 1 + 3 * side      # thigh link index
        a_th = a0 + q[jh]
        a_sh = a_th + q[jh + 1]
        a_ft = a_sh + q[jh + 2]
        w_th = w0 + v[jh]
        w_sh = w_th + v[jh + 1]
        w_ft = w_sh + v[jh + 2]
        cth, sth = np.cos(a_th), np.sin(a_th)
        csh, ssh = np.cos(a_sh), np.sin(a_sh)
        cft, sft = np.cos(a_ft), np.sin(a_ft)

        angles[li] = a_th
        angles[li + 1] = a_sh
        angles[li + 2] = a_ft

        # knee = root + R(a_th) @ (0, -lt)
        dknx = lt * sth
        dknz = -lt * cth
        knx = rx + dknx
        knz = rz + dknz
        gknx = -w_th * w_th * dknx
        gknz = -w_th * w_th * dknz
        # ankle = knee + R(a_sh) @ (0, -ls)
        danx = ls * ssh
        danz = -ls * csh
        anx = knx + danx
        anz = knz + danz
        ganx = gknx - w_sh * w_sh * danx
        ganz = gknz - w_sh * w_sh * danz

        anchors[jh, 0] = rx
        anchors[jh, 1] = rz
        anchors[jh + 1, 0] = knx
        anchors[jh + 1, 1] = knz
        anchors[jh + 2, 0] = anx
        anchors[jh + 2, 1] = anz

        # thigh CoM
        ux, uz = link_com[li, 0], link_com[li, 1]
        dx = ux * cth - uz * sth
        dz = ux * sth + uz * cth
        coms[li, 0] = rx + dx
        coms[li, 1] = rz + dz
        gammas[li, 0] = -w_th * w_th * dx
        gammas[li, 1] = -w_th * w_th * dz
        # shank CoM
        ux, uz = link_com[li + 1, 0], link_com[li + 1, 1]
        dx = ux * csh - uz * ssh
        dz = ux * ssh + uz * csh
        coms[li + 1, 0] = knx + dx
        coms[li + 1, 1] = knz + dz
        gammas[li + 1, 0] = gknx - w_sh * w_sh * dx
        gammas[li + 1, 1] = gknz - w_sh * w_sh * dz
        # foot CoM
        ux, uz = link_com[li + 2, 0], link_com[li + 2, 1]
        dx = ux * cft - uz * sft
        dz = ux * sft + uz * cft
        coms[li + 2, 0] = anx + dx
        coms[li + 2, 1] = anz + dz
        gammas[li + 2, 0] = ganx - w_ft * w_ft * dx
        gammas[li + 2, 1] = ganz - w_ft * w_ft * dz

        # heel / toe
        pb = 2 * side
        points[pb, 0] = anx + (-hb) * cft + ha * sft
        points[pb, 1] = anz + (-hb) * sft - ha * cft
        points[pb + 1, 0] = anx + tb * cft + ha * sft
        points[pb + 1, 1] = anz + tb * sft - ha * cft

    return angles, coms, gammas, anchors, points


@njit(cache=True)
def point_jacobian_rows(px, pz, link, anchors, jx, jz):
    """Fill angular Jacobian entries for a point rigidly on `link`.

    jx, jz are length-4 scratch; returns the number of valid columns. The
    translation columns are implicit (dx/d(col0)=1, dz/d(col1)=1).
    """
    ncol = LINK_NCOLS[link]
    for kk in range(ncol):
        col = LINK_COLS[link, kk]
        jx[kk] = -(pz - anchors[col, 1])
        jz[kk] = px - anchors[col, 0]
    return ncol


@njit(cache=True)
def point_velocity(px, pz, link, anchors, v):
    """World velocity of a point rigidly attached to `link`."""
    vx = v[0]
    vz = v[1]
    ncol = LINK_NCOLS[link]
    for kk in range(ncol):
        col = LINK_COLS[link, kk]
        vx += -(pz - anchors[col, 1]) * v[col]
        vz += (px - anchors[col, 0]) * v[col]
    return vx, vz


@njit(cache=True)
def terrain_height_at(px, heights, span, cell, x_offset, z_offset, enabled):
    """Ground height at world x: shifted height cell over a flat floor at 0."""
    if not enabled:
        return 0.0
    xr = px - x_offset + 0.5 * span
    if xr < 0.0:
        return 0.0
    idx = int(xr / cell)
    if idx >= heights.shape[0]:
        return 0.0
    h = heights[idx] + z_offset
    if h > 0.0:
        return h
    return 0.0


@njit(cache=True)
def _mass_matrix_and_forces(q, v, coms, gammas, anchors,
                            link_mass, link_inertia, tau_act, gravity):
    """Dense mass matrix M and generalized force Q (gravity, bias, actuation)."""
    M = np.zeros((NC, NC))
    Q = np.zeros(NC)
    jx = np.empty(4)
    jz = np.empty(4)
    for i in range(7):
        m = link_mass[i]
        inertia = link_inertia[i]
        ncol = point_jacobian_rows(coms[i, 0], coms[i, 1], i, anchors, jx, jz)
        gx = gammas[i, 0]
        gz = gammas[i, 1]
        M[0, 0] += m
        M[1, 1] += m
        Q[0] += -m * gx
        Q[1] += -m * gravity - m * gz
        for kk in range(ncol):
            ca = LINK_COLS[i, kk]
            M[0, ca] += m * jx[kk]
            M[ca, 0] += m * jx[kk]
            M[1, ca] += m * jz[kk]
            M[ca, 1] += m * jz[kk]
            Q[ca] += -m * gravity * jz[kk] - m * (jx[kk] * gx + jz[kk] * gz)
            for ll in range(ncol):
                cb = LINK_COLS[i, ll]
                M[ca, cb] += m * (jx[kk] * jx[ll] + jz[kk] * jz[ll]) + inertia
    for j in range(6):
        Q[3 + j] += tau_act[j]
    return M, Q


@njit(cache=True)
def _solve_spd(A, b):
    """Cholesky solve for the (small) SPD velocity system."""
    n = A.shape[0]
    L = A.copy()
    x = b.copy()
    for j in range(n):
        d = L[j, j]
        for k in range(j):
            d -= L[j, k] * L[j, k]
        if d <= 0.0:
            return x, False
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            s = L[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    for i in range(n):
        s = x[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x, True


@njit(cache=True)
def _friction_diag(v, visc, dry, slip):
    """Implicit per-joint damping: viscous plus secant-linearized dry friction."""
    diag = np.empty(6)
    for j in range(6):
        speed = abs(v[3 + j])
        if speed < 1e-12:
            kappa = dry[j] / slip
        else:
            kappa = dry[j] * np.tanh(speed / slip) / speed
        diag[j] = visc[j] + kappa
    return diag


@njit(cache=True)
def _finish_step(q, v, v_new, dt, q_lo, q_hi):
    """Trapezoidal position update followed by joint-limit clamping."""
    q_new = q + 0.5 * dt * (v + v_new)
    for j in range(6):
        if q_new[3 + j] < q_lo[j]:
            q_new[3 + j] = q_lo[j]
            if v_new[3 + j] < 0.0:
                v_new[3 + j] = 0.0
        elif q_new[3 + j] > q_hi[j]:
            q_new[3 + j] = q_hi[j]
            if v_new[3 + j] > 0.0:
                v_new[3 + j] = 0.0
    return q_new, v_new


@njit(cache=True)
def _all_finite(q, v):
    for i in range(NC):
        if not (np.isfinite(q[i]) and np.isfinite(v[i])):
            return False
        if abs(v[i]) > 1e8:
            return False
    return True


@njit(cache=True)
def step_explicit(q, v, tau_act, point_forces,
                  link_mass, link_com, link_inertia, geom,
                  q_lo, q_hi, visc, dry, slip, gravity, dt):
    """One substep with externally supplied forces at the four foot points."""
    angles, coms, gammas, anchors, points = fk_state(q, v, geom, link_com)
    M, Q = _mass_matrix_and_forces(q, v, coms, gammas, anchors,
                                   link_mass, link_inertia, tau_act, gravity)
    jx = np.empty(4)
    jz = np.empty(4)
    for p in range(NP):
        fx = point_forces[p, 0]
        fz = point_forces[p, 1]
        if fx == 0.0 and fz == 0.0:
            continue
        link = POINT_LINK[p]
        ncol = point_jacobian_rows(points[p, 0], points[p, 1], link, anchors, jx, jz)
        Q[0] += fx
        Q[1] += fz
        for kk in range(ncol):
            col = LINK_COLS[link, kk]
            Q[col] += jx[kk] * fx + jz[kk] * fz
    rhs = M @ v + dt * Q
    A = M
    diag = _friction_diag(v, visc, dry, slip)
    for j in range(6):
        A[3 + j, 3 + j] += dt * diag[j]
    v_new, ok = _solve_spd(A, rhs)
    if not ok:
        return q, v * np.nan, False
    q_new, v_new = _finish_step(q, v, v_new, dt, q_lo, q_hi)
    return q_new, v_new, _all_finite(q_new, v_new)


@njit(cache=True)
def step_contact(q, v, tau_act,
                 link_mass, link_com, link_inertia, geom,
                 q_lo, q_hi, visc, dry, slip,
                 heights, span, cell, x_offset, z_offset, terrain_on,
                 tau_c, zeta, mu, slip_c, gravity, dt):
    """One substep with terrain contact resolved implicitly.

    Normal springs follow k = m_eff / tau_c^2 with m_eff = total mass over
    penetrating points; damping (2*zeta*m_eff/tau_c) and tangential friction
    act on the post-step velocity so the solve stays unconditionally stable.
    Contacts whose solved normal force would pull are dropped and the system
    is re-solved (normal force is never negative).

    Returns (q_new, v_new, point_forces[4,2], point_vels[4,2], ok).
    """
    angles, coms, gammas, anchors, points = fk_state(q, v, geom, link_com)
    M, Q = _mass_matrix_and_forces(q, v, coms, gammas, anchors,
                                   link_mass, link_inertia, tau_act, gravity)
    total_mass = link_mass.sum()

    pen = np.empty(NP)
    active = np.zeros(NP, dtype=np.bool_)
    n_active = 0
    for p in range(NP):
        pen[p] = terrain_height_at(points[p, 0], heights, span, cell,
                                   x_offset, z_offset, terrain_on) - points[p, 1]
        if pen[p] > 0.0:
            active[p] = True
            n_active += 1

    spring = np.zeros(NP)
    cdamp = np.zeros(NP)
    kappa = np.zeros(NP)
    pjx = np.zeros((NP, 4))
    pjz = np.zeros((NP, 4))
    if n_active > 0:
        m_eff = total_mass / n_active
        for p in range(NP):
            if not active[p]:
                continue
            tc = tau_c[p // 2]
            k = m_eff / (tc * tc)
            c = 2.0 * zeta * m_eff / tc
            spring[p] = k * pen[p]
            cdamp[p] = c
            link = POINT_LINK[p]
            point_jacobian_rows(points[p, 0], points[p, 1], link, anchors,
                                pjx[p], pjz[p])
            vtx, vtz = point_velocity(points[p, 0], points[p, 1], link, anchors, v)
            n_hat = spring[p] - c * vtz
            if n_hat < 0.0:
                n_hat = 0.0
            u = abs(vtx)
            if u < 1e-12:
                kappa[p] = mu * n_hat / slip_c
            else:
                kappa[p] = mu * n_hat * np.tanh(u / slip_c) / u

    fdiag = _friction_diag(v, visc, dry, slip)
    rhs_base = M @ v + dt * Q
    point_forces = np.zeros((NP, 2))
    point_vels = np.zeros((NP, 2))
    v_new = v.copy()

    for _attempt in range(NP + 1):
        A = M.copy()
        rhs = rhs_base.copy()
        for j in range(6):
            A[3 + j, 3 + j] += dt * fdiag[j]
        for p in range(NP):
            if not active[p]:
                continue
            link = POINT_LINK[p]
            ncol = LINK_NCOLS[link]
            s = spring[p]
            c = cdamp[p]
            kap = kappa[p]
            rhs[1] += dt * s
            A[1, 1] += dt * c
            A[0, 0] += dt * kap
            for kk in range(ncol):
                col = LINK_COLS[link, kk]
                rhs[col] += dt * pjz[p, kk] * s
                A[1, col] += dt * c * pjz[p, kk]
                A[col, 1] += dt * c * pjz[p, kk]
                A[0, col] += dt * kap * pjx[p, kk]
                A[col, 0] += dt * kap * pjx[p, kk]
                for ll in range(ncol):
                    cb = LINK_COLS[link, ll]
                    A[col, cb] += dt * (c * pjz[p, kk] * pjz[p, ll]
                                        + kap * pjx[p, kk] * pjx[p, ll])
        v_new, ok = _solve_spd(A, rhs)
        if not ok:
            return q, v * np.nan, point_forces, point_vels, False
        pulled = False
        for p in range(NP):
            if not active[p]:
                continue
            link = POINT_LINK[p]
            vnx, vnz = point_velocity(points[p, 0], points[p, 1], link, anchors, v_new)
            fn = spring[p] - cdamp[p] * vnz
            if fn < -1e-9:
                active[p] = False
                pulled = True
            else:
                point_forces[p, 0] = -kappa[p] * vnx
                point_forces[p, 1] = fn if fn > 0.0 else 0.0
                point_vels[p, 0] = vnx
                point_vels[p, 1] = vnz
        if not pulled:
            break
        point_forces[:] = 0.0
        point_vels[:] = 0.0

    for p in range(NP):
        link = POINT_LINK[p]
        vnx, vnz = point_velocity(points[p, 0], points[p, 1], link, anchors, v_new)
        point_vels[p, 0] = vnx
        point_vels[p, 1] = vnz

    q_new, v_new = _finish_step(q, v, v_new, dt, q_lo, q_hi)
    return q_new, v_new, point_forces, point_vels, _all_finite(q_new, v_new)


@njit(cache=True)
def run_substeps(q, v, q_des, n_sub,
                 link_mass, link_com, link_inertia, geom,
                 kp, kd, tau_lim, q_lo, q_hi, visc, dry, slip,
                 heights, span, cell, x_offset, z_offset, terrain_on,
                 tau_c, zeta, mu, slip_c, gravity, dt):
    """Run one control period: PD at every substep plus contact dynamics.

    Returns (q, v, mean_pd_torque[6], mean_foot_grf[2,2], mean_foot_speed[2],
    ok). Foot order is (right, left); GRF rows are (fx, fz) summed over
    heel and toe, averaged over substeps.
    """
    tau = np.empty(6)
    tau_acc = np.zeros(6)
    grf_acc = np.zeros((2, 2))
    speed_acc = np.zeros(2)
    ok = True
    for _ in range(n_sub):
        for j in range(6):
            t = kp[j] * (q_des[j] - q[3 + j]) - kd[j] * v[3 + j]
            if t > tau_lim[j]:
                t = tau_lim[j]
            elif t < -tau_lim[j]:
                t = -tau_lim[j]
            tau[j] = t
            tau_acc[j] += t
        q, v, pf, pv, ok = step_contact(
            q, v, tau, link_mass, link_com, link_inertia, geom,
            q_lo, q_hi, visc, dry, slip,
            heights, span, cell, x_offset, z_offset, terrain_on,
            tau_c, zeta, mu, slip_c, gravity, dt)
        if not ok:
            break
        for foot in range(2):
            pb = 2 * foot
            grf_acc[foot, 0] += pf[pb, 0] + pf[pb + 1, 0]
            grf_acc[foot, 1] += pf[pb, 1] + pf[pb + 1, 1]
            mvx = 0.5 * (pv[pb, 0] + pv[pb + 1, 0])
            mvz = 0.5 * (pv[pb, 1] + pv[pb + 1, 1])
            speed_acc[foot] += np.sqrt(mvx * mvx + mvz * mvz)
    inv = 1.0 / n_sub
    return q, v, tau_acc * inv, grf_acc * inv, speed_acc * inv, ok

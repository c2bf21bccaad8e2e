"""Pure-numpy kernel implementations (fallback backend).

Every function here has an ``@njit`` twin with the same signature in
:mod:`cwhfmt.kernels_numba`.  State convention throughout: a state is the
6-vector ``[dx, dy, dz, vx, vy, vz]`` resolved in the target's LVLH frame
(radial, in-track, out-of-plane).
"""

from __future__ import annotations

import numpy as np

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def stm(omega, T):
    """Closed-form coast state-transition matrix for elapsed time T."""
    th = omega * T
    c = np.cos(th)
    s = np.sin(th)
    phi = np.zeros((6, 6))
    phi[0, 0] = 4.0 - 3.0 * c
    phi[0, 3] = s / omega
    phi[0, 4] = 2.0 * (1.0 - c) / omega
    phi[1, 0] = 6.0 * (s - th)
    phi[1, 1] = 1.0
    phi[1, 3] = 2.0 * (c - 1.0) / omega
    phi[1, 4] = (4.0 * s - 3.0 * th) / omega
    phi[2, 2] = c
    phi[2, 5] = s / omega
    phi[3, 0] = 3.0 * omega * s
    phi[3, 3] = c
    phi[3, 4] = 2.0 * s
    phi[4, 0] = 6.0 * omega * (c - 1.0)
    phi[4, 3] = -2.0 * s
    phi[4, 4] = 4.0 * c - 3.0
    phi[5, 2] = -omega * s
    phi[5, 5] = c
    return phi


def stm_batch(omega, Ts):
    Ts = np.asarray(Ts, dtype=np.float64)
    out = np.zeros((Ts.size, 6, 6))
    th = omega * Ts
    c = np.cos(th)
    s = np.sin(th)
    out[:, 0, 0] = 4.0 - 3.0 * c
    out[:, 0, 3] = s / omega
    out[:, 0, 4] = 2.0 * (1.0 - c) / omega
    out[:, 1, 0] = 6.0 * (s - th)
    out[:, 1, 1] = 1.0
    out[:, 1, 3] = 2.0 * (c - 1.0) / omega
    out[:, 1, 4] = (4.0 * s - 3.0 * th) / omega
    out[:, 2, 2] = c
    out[:, 2, 5] = s / omega
    out[:, 3, 0] = 3.0 * omega * s
    out[:, 3, 3] = c
    out[:, 3, 4] = 2.0 * s
    out[:, 4, 0] = 6.0 * omega * (c - 1.0)
    out[:, 4, 3] = -2.0 * s
    out[:, 4, 4] = 4.0 * c - 3.0
    out[:, 5, 2] = -omega * s
    out[:, 5, 5] = c
    return out


def impulse_matrix(omega, T):
    """[Phi(T) B | B]: maps the stacked 6-vector of two burns to the end state."""
    m = np.zeros((6, 6))
    m[:, 0:3] = stm(omega, T)[:, 3:6]
    m[0:3, 3:6] = 0.0
    m[3:6, 3:6] = np.eye(3)
    return m


def propagate_grid(omega, x0, taus, dvs, ts):
    """States at times ts (ascending) under the impulsive schedule.

    A burn at tau contributes to every t >= tau (post-burn convention at
    t == tau).  O(len(ts) * len(taus)) closed-form evaluation.
    """
    ts = np.asarray(ts, dtype=np.float64)
    out = np.empty((ts.size, 6))
    th = omega * ts
    c = np.cos(th)
    s = np.sin(th)
    dx, dy, dz, vx, vy, vz = x0
    out[:, 0] = (4.0 - 3.0 * c) * dx + (s / omega) * vx + (2.0 * (1.0 - c) / omega) * vy
    out[:, 1] = (
        6.0 * (s - th) * dx
        + dy
        + (2.0 * (c - 1.0) / omega) * vx
        + ((4.0 * s - 3.0 * th) / omega) * vy
    )
    out[:, 2] = c * dz + (s / omega) * vz
    out[:, 3] = 3.0 * omega * s * dx + c * vx + 2.0 * s * vy
    out[:, 4] = 6.0 * omega * (c - 1.0) * dx - 2.0 * s * vx + (4.0 * c - 3.0) * vy
    out[:, 5] = -omega * s * dz + c * vz
    for i in range(len(taus)):
        tau = taus[i]
        dvx, dvy, dvz = dvs[i]
        mask = ts >= tau
        if not mask.any():
            continue
        thi = omega * (ts[mask] - tau)
        ci = np.cos(thi)
        si = np.sin(thi)
        out[mask, 0] += (si / omega) * dvx + (2.0 * (1.0 - ci) / omega) * dvy
        out[mask, 1] += (2.0 * (ci - 1.0) / omega) * dvx + ((4.0 * si - 3.0 * thi) / omega) * dvy
        out[mask, 2] += (si / omega) * dvz
        out[mask, 3] += ci * dvx + 2.0 * si * dvy
        out[mask, 4] += -2.0 * si * dvx + (4.0 * ci - 3.0) * dvy
        out[mask, 5] += ci * dvz
    return out


def pair_cost_profiles(X0, XF, phis, phiv_invs, valid):
    """Full duration-grid cost profile for all ordered pairs.

    Returns the (n, m, G) cost profile (inf at invalid grid durations) so
    callers can bracket every local minimum, plus the (n, m) minimum
    stacked-burn norm used as the reachability lower bound.  Memory is the
    caller's problem; chunk XF if needed.
    """
    n = X0.shape[0]
    m = XF.shape[0]
    G = phis.shape[0]
    prof = np.full((n, m, G), np.inf)
    stack_min = np.full((n, m), np.inf)
    for g in range(G):
        if not valid[g]:
            continue
        P = X0 @ phis[g].T
        for i in range(n):
            Y = XF - P[i]
            DV = Y @ phiv_invs[g].T
            n1 = np.sqrt(DV[:, 0] ** 2 + DV[:, 1] ** 2 + DV[:, 2] ** 2)
            n2 = np.sqrt(DV[:, 3] ** 2 + DV[:, 4] ** 2 + DV[:, 5] ** 2)
            prof[i, :, g] = n1 + n2
            np.minimum(stack_min[i], np.sqrt(n1 * n1 + n2 * n2), out=stack_min[i])
    return prof, stack_min


def aligned_cost_profiles(X0, XF, phis, phiv_invs, valid):
    """Duration-grid cost profile for aligned pairs X0[i] -> XF[i].

    Returns (M, G) profile and (M,) minimum stacked-burn norm.
    """
    M = X0.shape[0]
    G = phis.shape[0]
    prof = np.full((M, G), np.inf)
    stack_min = np.full(M, np.inf)
    for g in range(G):
        if not valid[g]:
            continue
        Y = XF - X0 @ phis[g].T
        DV = Y @ phiv_invs[g].T
        n1 = np.sqrt(DV[:, 0] ** 2 + DV[:, 1] ** 2 + DV[:, 2] ** 2)
        n2 = np.sqrt(DV[:, 3] ** 2 + DV[:, 4] ** 2 + DV[:, 5] ** 2)
        prof[:, g] = n1 + n2
        np.minimum(stack_min, np.sqrt(n1 * n1 + n2 * n2), out=stack_min)
    return prof, stack_min


def _eval_cost_batch(omega, X0, XF, Ts):
    """Two-impulse cost at per-pair durations Ts; also returns the burns."""
    phis = stm_batch(omega, Ts)
    mats = np.zeros((Ts.size, 6, 6))
    mats[:, :, 0:3] = phis[:, :, 3:6]
    mats[:, 3:6, 3:6] = np.eye(3)
    Y = XF - np.einsum("kab,kb->ka", phis, X0)
    DV = np.linalg.solve(mats, Y[:, :, None])[:, :, 0]
    n1 = np.linalg.norm(DV[:, 0:3], axis=1)
    n2 = np.linalg.norm(DV[:, 3:6], axis=1)
    return n1 + n2, DV


def refine_brackets(omega, X0, XF, lo, hi, tol):
    """Golden-section minimization of the two-impulse cost per bracket.

    All brackets iterate in lockstep; converged entries freeze.  Returns the
    best duration/cost evaluated (including interior seed points), plus the
    burns recomputed at the returned duration.
    """
    M = X0.shape[0]
    a = lo.astype(np.float64).copy()
    b = hi.astype(np.float64).copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, _ = _eval_cost_batch(omega, X0, XF, c)
    fd, _ = _eval_cost_batch(omega, X0, XF, d)
    best_t = np.where(fc <= fd, c, d)
    best_f = np.minimum(fc, fd)
    active = (b - a) > tol
    while active.any():
        left = fc < fd
        shrink_l = active & left
        shrink_r = active & ~left
        b[shrink_l] = d[shrink_l]
        d[shrink_l] = c[shrink_l]
        fd[shrink_l] = fc[shrink_l]
        c[shrink_l] = b[shrink_l] - _INVPHI * (b[shrink_l] - a[shrink_l])
        a[shrink_r] = c[shrink_r]
        c[shrink_r] = d[shrink_r]
        fc[shrink_r] = fd[shrink_r]
        d[shrink_r] = a[shrink_r] + _INVPHI * (b[shrink_r] - a[shrink_r])
        if shrink_l.any():
            fc[shrink_l], _ = _eval_cost_batch(omega, X0[shrink_l], XF[shrink_l], c[shrink_l])
        if shrink_r.any():
            fd[shrink_r], _ = _eval_cost_batch(omega, X0[shrink_r], XF[shrink_r], d[shrink_r])
        f_new = np.minimum(fc, fd)
        t_new = np.where(fc <= fd, c, d)
        upd = active & (f_new < best_f)
        best_f[upd] = f_new[upd]
        best_t[upd] = t_new[upd]
        active = active & ((b - a) > tol)
    cost, DV = _eval_cost_batch(omega, X0, XF, best_t)
    return best_t, cost, DV[:, 0:3].copy(), DV[:, 3:6].copy()


def feasible_points(states, box_lo, box_hi, koz_inv_sq, koz_rmax, c_apex, c_axis, c_tanb, c_h, c_bc, c_br):
    """Point-wise free-space membership with bounding-volume pruning.

    A state is feasible iff it is inside the box, strictly outside the
    (closed) KOZ ellipsoid, and strictly outside every (closed) cone.
    ``koz_rmax`` / ``c_bc``+``c_br`` are bounding spheres used to prune.
    """
    M = states.shape[0]
    ok = np.ones(M, dtype=np.bool_)
    for k in range(6):
        ok &= (states[:, k] >= box_lo[k]) & (states[:, k] <= box_hi[k])
    r = states[:, 0:3]
    if koz_rmax > 0.0:
        rn2 = np.einsum("ij,ij->i", r, r)
        near = ok & (rn2 <= koz_rmax * koz_rmax)
        if near.any():
            q = (
                r[near, 0] ** 2 * koz_inv_sq[0]
                + r[near, 1] ** 2 * koz_inv_sq[1]
                + r[near, 2] ** 2 * koz_inv_sq[2]
            )
            hit = q <= 1.0
            idx = np.flatnonzero(near)
            ok[idx[hit]] = False
    for ci in range(c_apex.shape[0]):
        d2 = np.einsum("ij,ij->i", r - c_bc[ci], r - c_bc[ci])
        near = ok & (d2 <= c_br[ci] * c_br[ci])
        if not near.any():
            continue
        rel = r[near] - c_apex[ci]
        s = rel @ c_axis[ci]
        rad2 = np.einsum("ij,ij->i", rel, rel) - s * s
        rad2 = np.maximum(rad2, 0.0)
        inside = (s >= 0.0) & (s <= c_h[ci]) & (rad2 <= (s * c_tanb[ci]) ** 2)
        idx = np.flatnonzero(near)
        ok[idx[inside]] = False
    return ok


def dvcirc_sq_profile(omega, x_fail, thetas):
    """Squared circularization-burn cost along the coast from x_fail.

    At coast angle theta the burn is (-vx, -1.5*omega*dx - vy, -vz) of the
    coasted state.
    """
    ts = thetas / omega
    st = propagate_grid(omega, x_fail, np.empty(0), np.empty((0, 3)), ts)
    gy = 1.5 * omega * st[:, 0] + st[:, 4]
    return st[:, 3] ** 2 + gy * gy + st[:, 5] ** 2

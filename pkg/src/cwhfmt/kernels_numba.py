"""Numba-compiled kernel implementations (default backend).

Signature-compatible with :mod:`cwhfmt.kernels_numpy`; see that module for
parameter documentation.  Kernels are cached to disk so repeated CLI runs do
not pay the JIT cost.
"""

from __future__ import annotations

import numpy as np
import numba
from numba import njit, prange

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def configure_threads(cap):
    try:
        numba.set_num_threads(max(1, min(cap, numba.config.NUMBA_NUM_THREADS)))
    except ValueError:
        pass


@njit(cache=True)
def _stm_into(omega, T, phi):
    th = omega * T
    c = np.cos(th)
    s = np.sin(th)
    phi[:, :] = 0.0
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


@njit(cache=True)
def stm(omega, T):
    phi = np.empty((6, 6))
    _stm_into(omega, T, phi)
    return phi


@njit(cache=True)
def stm_batch(omega, Ts):
    out = np.empty((Ts.size, 6, 6))
    for k in range(Ts.size):
        _stm_into(omega, Ts[k], out[k])
    return out


@njit(cache=True)
def impulse_matrix(omega, T):
    phi = stm(omega, T)
    m = np.zeros((6, 6))
    for i in range(6):
        for j in range(3):
            m[i, j] = phi[i, j + 3]
    for j in range(3):
        m[j + 3, j + 3] = 1.0
    return m


@njit(cache=True)
def _coast_state(omega, x0, t, out):
    th = omega * t
    c = np.cos(th)
    s = np.sin(th)
    dx = x0[0]
    dy = x0[1]
    dz = x0[2]
    vx = x0[3]
    vy = x0[4]
    vz = x0[5]
    out[0] = (4.0 - 3.0 * c) * dx + (s / omega) * vx + (2.0 * (1.0 - c) / omega) * vy
    out[1] = (
        6.0 * (s - th) * dx
        + dy
        + (2.0 * (c - 1.0) / omega) * vx
        + ((4.0 * s - 3.0 * th) / omega) * vy
    )
    out[2] = c * dz + (s / omega) * vz
    out[3] = 3.0 * omega * s * dx + c * vx + 2.0 * s * vy
    out[4] = 6.0 * omega * (c - 1.0) * dx - 2.0 * s * vx + (4.0 * c - 3.0) * vy
    out[5] = -omega * s * dz + c * vz


@njit(cache=True)
def propagate_grid(omega, x0, taus, dvs, ts):
    out = np.empty((ts.size, 6))
    for m in range(ts.size):
        t = ts[m]
        _coast_state(omega, x0, t, out[m])
        for i in range(taus.size):
            tau = taus[i]
            if t < tau:
                continue
            thi = omega * (t - tau)
            ci = np.cos(thi)
            si = np.sin(thi)
            dvx = dvs[i, 0]
            dvy = dvs[i, 1]
            dvz = dvs[i, 2]
            out[m, 0] += (si / omega) * dvx + (2.0 * (1.0 - ci) / omega) * dvy
            out[m, 1] += (2.0 * (ci - 1.0) / omega) * dvx + ((4.0 * si - 3.0 * thi) / omega) * dvy
            out[m, 2] += (si / omega) * dvz
            out[m, 3] += ci * dvx + 2.0 * si * dvy
            out[m, 4] += -2.0 * si * dvx + (4.0 * ci - 3.0) * dvy
            out[m, 5] += ci * dvz
    return out


@njit(cache=True, parallel=True)
def pair_cost_profiles(X0, XF, phis, phiv_invs, valid):
    n = X0.shape[0]
    m = XF.shape[0]
    G = phis.shape[0]
    prof = np.full((n, m, G), np.inf)
    stack_min = np.full((n, m), np.inf)
    for i in prange(n):
        p = np.empty(6)
        y = np.empty(6)
        for g in range(G):
            if not valid[g]:
                continue
            for a in range(6):
                acc = 0.0
                for b in range(6):
                    acc += phis[g, a, b] * X0[i, b]
                p[a] = acc
            for j in range(m):
                for a in range(6):
                    y[a] = XF[j, a] - p[a]
                n1sq = 0.0
                n2sq = 0.0
                for a in range(3):
                    acc = 0.0
                    for b in range(6):
                        acc += phiv_invs[g, a, b] * y[b]
                    n1sq += acc * acc
                for a in range(3, 6):
                    acc = 0.0
                    for b in range(6):
                        acc += phiv_invs[g, a, b] * y[b]
                    n2sq += acc * acc
                prof[i, j, g] = np.sqrt(n1sq) + np.sqrt(n2sq)
                sg = np.sqrt(n1sq + n2sq)
                if sg < stack_min[i, j]:
                    stack_min[i, j] = sg
    return prof, stack_min


@njit(cache=True, parallel=True)
def aligned_cost_profiles(X0, XF, phis, phiv_invs, valid):
    M = X0.shape[0]
    G = phis.shape[0]
    prof = np.full((M, G), np.inf)
    stack_min = np.full(M, np.inf)
    for i in prange(M):
        y = np.empty(6)
        for g in range(G):
            if not valid[g]:
                continue
            for a in range(6):
                acc = 0.0
                for b in range(6):
                    acc += phis[g, a, b] * X0[i, b]
                y[a] = XF[i, a] - acc
            n1sq = 0.0
            n2sq = 0.0
            for a in range(3):
                acc = 0.0
                for b in range(6):
                    acc += phiv_invs[g, a, b] * y[b]
                n1sq += acc * acc
            for a in range(3, 6):
                acc = 0.0
                for b in range(6):
                    acc += phiv_invs[g, a, b] * y[b]
                n2sq += acc * acc
            prof[i, g] = np.sqrt(n1sq) + np.sqrt(n2sq)
            sg = np.sqrt(n1sq + n2sq)
            if sg < stack_min[i]:
                stack_min[i] = sg
    return prof, stack_min


@njit(cache=True)
def _pair_cost_at(omega, x0, xf, T):
    phi = stm(omega, T)
    mat = np.zeros((6, 6))
    for i in range(6):
        for j in range(3):
            mat[i, j] = phi[i, j + 3]
    for j in range(3):
        mat[j + 3, j + 3] = 1.0
    y = np.empty(6)
    for a in range(6):
        acc = 0.0
        for b in range(6):
            acc += phi[a, b] * x0[b]
        y[a] = xf[a] - acc
    dv = np.linalg.solve(mat, y)
    n1 = np.sqrt(dv[0] ** 2 + dv[1] ** 2 + dv[2] ** 2)
    n2 = np.sqrt(dv[3] ** 2 + dv[4] ** 2 + dv[5] ** 2)
    return n1 + n2, dv


@njit(cache=True, parallel=True)
def refine_brackets(omega, X0, XF, lo, hi, tol):
    M = X0.shape[0]
    best_t = np.empty(M)
    best_f = np.empty(M)
    dv1 = np.empty((M, 3))
    dv2 = np.empty((M, 3))
    for m in prange(M):
        a = lo[m]
        b = hi[m]
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc, _ = _pair_cost_at(omega, X0[m], XF[m], c)
        fd, _ = _pair_cost_at(omega, X0[m], XF[m], d)
        if fc <= fd:
            bt = c
            bf = fc
        else:
            bt = d
            bf = fd
        while (b - a) > tol:
            if fc < fd:
                b = d
                d = c
                fd = fc
                c = b - _INVPHI * (b - a)
                fc, _ = _pair_cost_at(omega, X0[m], XF[m], c)
            else:
                a = c
                c = d
                fc = fd
                d = a + _INVPHI * (b - a)
                fd, _ = _pair_cost_at(omega, X0[m], XF[m], d)
            if fc <= fd:
                if fc < bf:
                    bf = fc
                    bt = c
            else:
                if fd < bf:
                    bf = fd
                    bt = d
        cost, dv = _pair_cost_at(omega, X0[m], XF[m], bt)
        best_t[m] = bt
        best_f[m] = cost
        for k in range(3):
            dv1[m, k] = dv[k]
            dv2[m, k] = dv[k + 3]
    return best_t, best_f, dv1, dv2


@njit(cache=True)
def feasible_points(states, box_lo, box_hi, koz_inv_sq, koz_rmax, c_apex, c_axis, c_tanb, c_h, c_bc, c_br):
    M = states.shape[0]
    ok = np.ones(M, dtype=np.bool_)
    ncones = c_apex.shape[0]
    for i in range(M):
        good = True
        for k in range(6):
            if states[i, k] < box_lo[k] or states[i, k] > box_hi[k]:
                good = False
                break
        if good and koz_rmax > 0.0:
            rn2 = states[i, 0] ** 2 + states[i, 1] ** 2 + states[i, 2] ** 2
            if rn2 <= koz_rmax * koz_rmax:
                q = (
                    states[i, 0] ** 2 * koz_inv_sq[0]
                    + states[i, 1] ** 2 * koz_inv_sq[1]
                    + states[i, 2] ** 2 * koz_inv_sq[2]
                )
                if q <= 1.0:
                    good = False
        if good:
            for ci in range(ncones):
                dx = states[i, 0] - c_bc[ci, 0]
                dy = states[i, 1] - c_bc[ci, 1]
                dz = states[i, 2] - c_bc[ci, 2]
                if dx * dx + dy * dy + dz * dz > c_br[ci] * c_br[ci]:
                    continue
                rx = states[i, 0] - c_apex[ci, 0]
                ry = states[i, 1] - c_apex[ci, 1]
                rz = states[i, 2] - c_apex[ci, 2]
                s = rx * c_axis[ci, 0] + ry * c_axis[ci, 1] + rz * c_axis[ci, 2]
                if s < 0.0 or s > c_h[ci]:
                    continue
                rad2 = rx * rx + ry * ry + rz * rz - s * s
                if rad2 < 0.0:
                    rad2 = 0.0
                if rad2 <= (s * c_tanb[ci]) ** 2:
                    good = False
                    break
        ok[i] = good
    return ok


@njit(cache=True)
def dvcirc_sq_profile(omega, x_fail, thetas):
    out = np.empty(thetas.size)
    st = np.empty(6)
    for k in range(thetas.size):
        _coast_state(omega, x_fail, thetas[k] / omega, st)
        gy = 1.5 * omega * st[0] + st[4]
        out[k] = st[3] ** 2 + gy * gy + st[5] ** 2
    return out

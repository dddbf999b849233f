# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bounded-variable revised simplex kernel.

Twin of ``gridrisk.lp._pure``: same two-phase algorithm, same pivot rules
(Dantzig pricing with a permanent switch to Bland's rule after a degenerate
stall), same canonical sorted-basis refresh at termination. Columns are
held in compressed-sparse form so pricing and FTRAN cost O(nnz) instead of
O(m) per column, which is what makes full contingency sweeps cheap.
"""

import numpy as np

from libc.math cimport INFINITY, fabs

AT_LOWER, AT_UPPER, BASIC, FREE = 0, 1, 2, 3
OPTIMAL, INFEASIBLE, UNBOUNDED, STALLED = 0, 1, 2, 3

cdef int _LO = 0, _UP = 1, _BA = 2, _FR = 3
cdef int _OPT = 0, _INF = 1, _UNB = 2, _STA = 3
cdef double _PIV_TOL = 1e-10
cdef double _ETA_TOL = 1e-11
cdef int _REFACTOR_EVERY = 64
cdef int _STALL_LIMIT = 200


cdef int _invert(double[:, ::1] work, double[:, ::1] binv,
                 long[::1] basis, long[::1] col_ptr, long[::1] col_idx,
                 double[::1] col_val, int m) noexcept:
    """binv = inverse of the basis matrix; returns 1 when singular."""
    cdef int i, k, r, col, prow
    cdef long p
    cdef double piv, best, f, inv
    for i in range(m):
        for k in range(m):
            work[i, k] = 0.0
            binv[i, k] = 1.0 if i == k else 0.0
    for k in range(m):
        for p in range(col_ptr[basis[k]], col_ptr[basis[k] + 1]):
            work[col_idx[p], k] = col_val[p]
    for col in range(m):
        prow = col
        best = fabs(work[col, col])
        for r in range(col + 1, m):
            f = fabs(work[r, col])
            if f > best:
                best = f
                prow = r
        if best < _ETA_TOL:
            return 1
        if prow != col:
            for k in range(m):
                f = work[col, k]
                work[col, k] = work[prow, k]
                work[prow, k] = f
                f = binv[col, k]
                binv[col, k] = binv[prow, k]
                binv[prow, k] = f
        piv = work[col, col]
        inv = 1.0 / piv
        for k in range(m):
            work[col, k] *= inv
            binv[col, k] *= inv
        for r in range(m):
            if r == col:
                continue
            f = work[r, col]
            if f != 0.0:
                for k in range(m):
                    work[r, k] -= f * work[col, k]
                    binv[r, k] -= f * binv[col, k]
    return 0


cdef void _compute_xb(double[::1] bs, long[::1] col_ptr, long[::1] col_idx,
                      double[::1] col_val, double[::1] lower_f,
                      double[::1] upper_f, long[::1] vstat, long[::1] basis,
                      double[:, ::1] binv, double[::1] rhs, double[::1] x_b,
                      int m, int ntot) noexcept:
    cdef int i, k, j, s
    cdef long p
    cdef double val, acc
    for i in range(m):
        rhs[i] = bs[i]
    for j in range(ntot):
        s = vstat[j]
        if s == _BA:
            continue
        if s == _LO:
            val = lower_f[j]
        elif s == _UP:
            val = upper_f[j]
        else:
            val = 0.0
        if val != 0.0:
            for p in range(col_ptr[j], col_ptr[j + 1]):
                rhs[col_idx[p]] -= col_val[p] * val
    for i in range(m):
        acc = 0.0
        for k in range(m):
            acc += binv[i, k] * rhs[k]
        x_b[i] = acc


cdef int _simplex_loop(double[::1] cph, double tol_d, int phase,
                       long[::1] vstat, long[::1] basis,
                       double[::1] lower_f, double[::1] upper_f,
                       double[::1] x_b, double[:, ::1] binv,
                       double[:, ::1] work, double[::1] y, double[::1] w,
                       double[::1] rhs, double[::1] bs, long[::1] col_ptr,
                       long[::1] col_idx, double[::1] col_val, int m, int n,
                       int ntot, int max_iter, long[::1] iters) noexcept:
    """Iterate one phase to optimality; returns an outcome code."""
    cdef bint bland = False
    cdef int stall = 0
    cdef int since_refactor = 0
    cdef int i, k, j, s_j, best_j, leave, lv
    cdef long p, v
    cdef double d, best_d, score, best_score, direction, rng, t, t_basic
    cdef double t_flip, wd, room, lb, ub, piv, enter_val, cb
    while True:
        if iters[0] >= max_iter:
            return _STA
        if since_refactor >= _REFACTOR_EVERY:
            if _invert(work, binv, basis, col_ptr, col_idx, col_val, m):
                return _STA
            _compute_xb(bs, col_ptr, col_idx, col_val, lower_f, upper_f,
                        vstat, basis, binv, rhs, x_b, m, ntot)
            since_refactor = 0
        # BTRAN: y = binv' c_B (zero-cost basic rows contribute nothing)
        for k in range(m):
            y[k] = 0.0
        for i in range(m):
            cb = cph[basis[i]]
            if cb != 0.0:
                for k in range(m):
                    y[k] += cb * binv[i, k]
        # pricing (Dantzig: first of the most improving; Bland: first improving)
        best_j = -1
        best_score = tol_d
        best_d = 0.0
        for j in range(ntot):
            s_j = vstat[j]
            if s_j == _BA:
                continue
            rng = upper_f[j] - lower_f[j]
            if rng <= 0.0:
                continue
            d = cph[j]
            for p in range(col_ptr[j], col_ptr[j + 1]):
                d -= y[col_idx[p]] * col_val[p]
            if s_j == _LO:
                score = -d
            elif s_j == _UP:
                score = d
            else:
                score = fabs(d)
            if score > best_score:
                best_j = j
                best_score = score
                best_d = d
                if bland:
                    break
        if best_j == -1:
            return _OPT
        j = best_j
        s_j = vstat[j]
        direction = 1.0 if (s_j == _LO or (s_j == _FR and best_d < 0.0)) else -1.0
        # FTRAN: w = binv @ column j
        for i in range(m):
            w[i] = 0.0
        for p in range(col_ptr[j], col_ptr[j + 1]):
            d = col_val[p]
            k = col_idx[p]
            for i in range(m):
                w[i] += d * binv[i, k]
        # ratio test, ties broken toward the smallest leaving variable index
        t_basic = INFINITY
        leave = -1
        for i in range(m):
            wd = direction * w[i]
            v = basis[i]
            if wd > _PIV_TOL:
                lb = lower_f[v]
                if lb == -INFINITY:
                    continue
                room = x_b[i] - lb
                if room < 0.0:
                    room = 0.0
                t = room / wd
            elif wd < -_PIV_TOL:
                ub = upper_f[v]
                if ub == INFINITY:
                    continue
                room = ub - x_b[i]
                if room < 0.0:
                    room = 0.0
                t = room / (-wd)
            else:
                continue
            if t < t_basic:
                t_basic = t
                leave = i
            elif t == t_basic and leave >= 0 and v < basis[leave]:
                leave = i
        t_flip = (upper_f[j] - lower_f[j]) if s_j != _FR else INFINITY
        if t_basic < t_flip:
            t = t_basic
        elif t_flip == INFINITY:
            return _STA if phase == 1 else _UNB
        else:
            leave = -1
            t = t_flip
        iters[0] += 1
        if t <= 1e-12:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        else:
            stall = 0
        if leave < 0:
            for i in range(m):
                x_b[i] -= direction * t * w[i]
            vstat[j] = _UP if s_j == _LO else _LO
            continue
        piv = w[leave]
        if fabs(piv) < _ETA_TOL:
            if _invert(work, binv, basis, col_ptr, col_idx, col_val, m):
                return _STA
            _compute_xb(bs, col_ptr, col_idx, col_val, lower_f, upper_f,
                        vstat, basis, binv, rhs, x_b, m, ntot)
            since_refactor = 0
            continue
        if s_j == _LO:
            enter_val = lower_f[j] + direction * t
        elif s_j == _UP:
            enter_val = upper_f[j] + direction * t
        else:
            enter_val = direction * t
        for i in range(m):
            x_b[i] -= direction * t * w[i]
        lv = basis[leave]
        vstat[lv] = _LO if direction * w[leave] > 0.0 else _UP
        if lv >= n:
            upper_f[lv] = 0.0  # artificials never re-enter
        # eta update of the explicit inverse
        d = 1.0 / piv
        for k in range(m):
            rhs[k] = binv[leave, k] * d
        for i in range(m):
            if i == leave:
                continue
            d = w[i]
            if d != 0.0:
                for k in range(m):
                    binv[i, k] -= d * rhs[k]
        for k in range(m):
            binv[leave, k] = rhs[k]
        basis[leave] = j
        vstat[j] = _BA
        x_b[leave] = enter_val
        since_refactor += 1


def _finish(int status, double infeas_floor, c_np, long[::1] vstat,
            long[::1] basis, double[::1] lower_f, double[::1] upper_f,
            double[::1] x_b, double[:, ::1] binv, double[:, ::1] work,
            double[::1] rhs, double[::1] bs, long[::1] col_ptr,
            long[::1] col_idx, double[::1] col_val, int m, int n, int ntot,
            int iterations):
    """Canonical sorted-basis refresh, then extract the solution tuple."""
    cdef double[::1] cs = c_np
    basis_np = np.sort(np.asarray(basis))
    cdef long[::1] bsorted = basis_np
    cdef int i, j
    cdef long p
    cdef double acc, obj = 0.0, resid = 0.0, viol = 0.0, infeas
    if not _invert(work, binv, bsorted, col_ptr, col_idx, col_val, m):
        for i in range(m):
            basis[i] = bsorted[i]
        _compute_xb(bs, col_ptr, col_idx, col_val, lower_f, upper_f, vstat,
                    basis, binv, rhs, x_b, m, ntot)
    x_np = np.empty(n)
    cdef double[::1] x = x_np
    for j in range(n):
        if vstat[j] == _LO:
            x[j] = lower_f[j]
        elif vstat[j] == _UP:
            x[j] = upper_f[j]
        else:
            x[j] = 0.0
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = x_b[i]
    for j in range(n):
        obj += cs[j] * x[j]
    # residual of the structural system a_eq x - b
    for i in range(m):
        rhs[i] = -bs[i]
    for j in range(n):
        acc = x[j]
        if acc != 0.0:
            for p in range(col_ptr[j], col_ptr[j + 1]):
                rhs[col_idx[p]] += col_val[p] * acc
    for i in range(m):
        if fabs(rhs[i]) > resid:
            resid = fabs(rhs[i])
    for j in range(n):
        if lower_f[j] != -INFINITY and lower_f[j] - x[j] > viol:
            viol = lower_f[j] - x[j]
        if upper_f[j] != INFINITY and x[j] - upper_f[j] > viol:
            viol = x[j] - upper_f[j]
    infeas = resid
    if status == _INF and infeas_floor > infeas:
        infeas = infeas_floor
    if viol > infeas:
        infeas = viol
    return (status, x_np, obj, iterations, np.asarray(basis).copy(),
            np.asarray(vstat)[:n].copy(), infeas)


def solve_kernel(c, a_eq, b_eq, lower, upper, basis0=None, vstatus0=None,
                 double eps_feas=1e-7, double eps_opt=1e-9, int max_iter=0):
    """Solve min c'x s.t. a_eq x = b_eq, lower <= x <= upper.

    Same contract as ``gridrisk.lp._pure.solve_kernel``.
    """
    c_np = np.ascontiguousarray(c, dtype=np.float64)
    a_np = np.ascontiguousarray(a_eq, dtype=np.float64)
    b_np = np.ascontiguousarray(b_eq, dtype=np.float64)
    lo_np = np.ascontiguousarray(lower, dtype=np.float64)
    up_np = np.ascontiguousarray(upper, dtype=np.float64)
    cdef int m = a_np.shape[0] if a_np.ndim == 2 else 0
    cdef int n = c_np.shape[0]
    cdef int ntot = n + m
    if max_iter <= 0:
        max_iter = 2000 + 50 * (m + n)

    # Compressed columns of [A | I]; artificial signs may flip at setup.
    cdef double[:, ::1] amat = a_np if m else np.zeros((0, n))
    col_ptr_np = np.zeros(ntot + 1, dtype=np.int64)
    cdef long[::1] col_ptr = col_ptr_np
    cdef int i, j, k
    cdef long p, nnz = 0
    for j in range(n):
        for i in range(m):
            if amat[i, j] != 0.0:
                nnz += 1
        col_ptr[j + 1] = nnz
    for i in range(m):
        nnz += 1
        col_ptr[n + i + 1] = nnz
    col_idx_np = np.empty(nnz, dtype=np.int64)
    col_val_np = np.empty(nnz, dtype=np.float64)
    cdef long[::1] col_idx = col_idx_np
    cdef double[::1] col_val = col_val_np
    p = 0
    for j in range(n):
        for i in range(m):
            if amat[i, j] != 0.0:
                col_idx[p] = i
                col_val[p] = amat[i, j]
                p += 1
    for i in range(m):
        col_idx[p] = i
        col_val[p] = 1.0
        p += 1

    cdef double[::1] bs = b_np
    lower_f_np = np.concatenate([lo_np, np.zeros(m)])
    upper_f_np = np.concatenate([up_np, np.full(m, np.inf)])
    cdef double[::1] lower_f = lower_f_np
    cdef double[::1] upper_f = upper_f_np
    vstat_np = np.empty(ntot, dtype=np.int64)
    cdef long[::1] vstat = vstat_np
    want_np = (np.full(n, -1, dtype=np.int64) if vstatus0 is None
               else np.ascontiguousarray(vstatus0, dtype=np.int64))
    cdef long[::1] want_status = want_np
    cdef long want
    for j in range(n):
        want = want_status[j]
        if want == _LO and lower_f[j] != -INFINITY:
            vstat[j] = _LO
        elif want == _UP and upper_f[j] != INFINITY:
            vstat[j] = _UP
        elif want == _FR and lower_f[j] == -INFINITY and upper_f[j] == INFINITY:
            vstat[j] = _FR
        elif lower_f[j] != -INFINITY:
            vstat[j] = _LO
        elif upper_f[j] != INFINITY:
            vstat[j] = _UP
        else:
            vstat[j] = _FR
    for j in range(n, ntot):
        vstat[j] = _LO

    basis_np = np.arange(n, ntot, dtype=np.int64)
    cdef long[::1] basis = basis_np
    crash_np = (np.full(m, -1, dtype=np.int64) if basis0 is None
                else np.ascontiguousarray(basis0, dtype=np.int64))
    cdef long[::1] crash = crash_np
    used = set()
    cdef long v
    for i in range(m):
        v = crash[i]
        if 0 <= v < n and v not in used:
            basis[i] = v
            used.add(v)
    for i in range(m):
        vstat[basis[i]] = _BA
        if basis[i] != n + i:
            upper_f[n + i] = 0.0

    work_np = np.empty((m, m))
    binv_np = np.empty((m, m))
    cdef double[:, ::1] work = work_np
    cdef double[:, ::1] binv = binv_np
    rhs_np = np.empty(m)
    xb_np = np.empty(m)
    y_np = np.empty(m)
    w_np = np.empty(m)
    cdef double[::1] rhs = rhs_np
    cdef double[::1] x_b = xb_np
    cdef double[::1] y = y_np
    cdef double[::1] w = w_np
    iters_np = np.zeros(1, dtype=np.int64)
    cdef long[::1] iters = iters_np

    cdef int singular = _invert(work, binv, basis, col_ptr, col_idx, col_val, m)
    if not singular:
        _compute_xb(bs, col_ptr, col_idx, col_val, lower_f, upper_f, vstat,
                    basis, binv, rhs, x_b, m, ntot)
    cdef bint crash_bad = singular != 0
    if not singular and basis0 is not None:
        for i in range(m):
            v = basis[i]
            if v < n and not (lower_f[v] - eps_feas <= x_b[i] <= upper_f[v] + eps_feas):
                crash_bad = True
                break
    if crash_bad:
        for i in range(m):
            v = basis[i]
            if v < n:
                if lower_f[v] != -INFINITY:
                    vstat[v] = _LO
                elif upper_f[v] != INFINITY:
                    vstat[v] = _UP
                else:
                    vstat[v] = _FR
            basis[i] = n + i
            vstat[n + i] = _BA
            upper_f[n + i] = INFINITY
        _invert(work, binv, basis, col_ptr, col_idx, col_val, m)
        _compute_xb(bs, col_ptr, col_idx, col_val, lower_f, upper_f, vstat,
                    basis, binv, rhs, x_b, m, ntot)
    # Flip artificial columns so their basic values start nonnegative.
    for k in range(m):
        v = basis[k]
        if v >= n and x_b[k] < 0.0:
            col_val[col_ptr[v]] = -1.0
            for i in range(m):
                binv[k, i] = -binv[k, i]
            x_b[k] = -x_b[k]

    cdef double bmax = 0.0
    for i in range(m):
        if fabs(bs[i]) > bmax:
            bmax = fabs(bs[i])
    cdef double p1_tol = eps_feas * (1.0 + bmax)

    cdef double p1_obj = 0.0
    for k in range(m):
        if basis[k] >= n:
            p1_obj += x_b[k]
    cdef int outcome
    if p1_obj > p1_tol:
        cph1_np = np.zeros(ntot)
        cph1_np[n:] = 1.0
        outcome = _simplex_loop(cph1_np, eps_opt, 1, vstat, basis, lower_f,
                                upper_f, x_b, binv, work, y, w, rhs, bs,
                                col_ptr, col_idx, col_val, m, n, ntot,
                                max_iter, iters)
        if outcome == _STA:
            return _finish(_STA, 0.0, c_np, vstat, basis, lower_f, upper_f,
                           x_b, binv, work, rhs, bs, col_ptr, col_idx,
                           col_val, m, n, ntot, iters[0])
        if _invert(work, binv, basis, col_ptr, col_idx, col_val, m):
            return _finish(_STA, 0.0, c_np, vstat, basis, lower_f, upper_f,
                           x_b, binv, work, rhs, bs, col_ptr, col_idx,
                           col_val, m, n, ntot, iters[0])
        _compute_xb(bs, col_ptr, col_idx, col_val, lower_f, upper_f, vstat,
                    basis, binv, rhs, x_b, m, ntot)
        p1_obj = 0.0
        for k in range(m):
            if basis[k] >= n:
                p1_obj += fabs(x_b[k])
        if p1_obj > p1_tol:
            return _finish(_INF, p1_obj, c_np, vstat, basis, lower_f, upper_f,
                           x_b, binv, work, rhs, bs, col_ptr, col_idx,
                           col_val, m, n, ntot, iters[0])

    for j in range(n, ntot):
        upper_f[j] = 0.0
    for k in range(m):
        if basis[k] >= n:
            x_b[k] = 0.0

    cost_np = np.zeros(ntot)
    cost_np[:n] = c_np
    cdef double cmax = 1.0
    for j in range(n):
        if fabs(c_np[j]) > cmax:
            cmax = fabs(c_np[j])
    outcome = _simplex_loop(cost_np, eps_opt * cmax, 2, vstat, basis, lower_f,
                            upper_f, x_b, binv, work, y, w, rhs, bs, col_ptr,
                            col_idx, col_val, m, n, ntot, max_iter, iters)
    return _finish(outcome, 0.0, c_np, vstat, basis, lower_f, upper_f, x_b,
                   binv, work, rhs, bs, col_ptr, col_idx, col_val, m, n,
                   ntot, iters[0])

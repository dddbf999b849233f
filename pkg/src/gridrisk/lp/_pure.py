"""Pure NumPy bounded-variable revised simplex kernel.

This is the fallback twin of the compiled kernel in ``_core.pyx``; both
implement the same algorithm with the same pivot rules, so they agree on
status and (to floating-point resolution) on objective values:

* two phases with artificial variables (phase 1 minimizes total residual),
* Dantzig pricing switching permanently to Bland's rule after a degenerate
  stall (the anti-cycling safeguard),
* explicit dense basis inverse maintained by eta updates, refactorized
  periodically and at termination,
* a canonical final refresh against the sorted basis, which makes solutions
  a function of the optimal basis alone rather than of the pivot path.

Status codes: 0 optimal, 1 infeasible, 2 unbounded, 3 stalled (numerical
breakdown or iteration cap; never a silent wrong answer).
"""

from __future__ import annotations

import numpy as np

AT_LOWER, AT_UPPER, BASIC, FREE = 0, 1, 2, 3
OPTIMAL, INFEASIBLE, UNBOUNDED, STALLED = 0, 1, 2, 3

_REFACTOR_EVERY = 64
_PIV_TOL = 1e-10
_ETA_TOL = 1e-11
_STALL_LIMIT = 200


def _invert(bmat):
    """Gauss-Jordan inverse with partial pivoting; None when singular."""
    m = bmat.shape[0]
    work = np.hstack([bmat.astype(np.float64, copy=True), np.eye(m)])
    for col in range(m):
        pivot_row = col + int(np.argmax(np.abs(work[col:, col])))
        piv = work[pivot_row, col]
        if abs(piv) < _ETA_TOL:
            return None
        if pivot_row != col:
            work[[col, pivot_row]] = work[[pivot_row, col]]
        work[col] /= work[col, col]
        others = np.delete(np.arange(m), col)
        work[others] -= np.outer(work[others, col], work[col])
    return np.ascontiguousarray(work[:, m:])


def _nonbasic_values(vstat, lower_f, upper_f):
    vals = np.where(vstat == AT_UPPER, upper_f,
                    np.where(vstat == AT_LOWER, lower_f, 0.0))
    vals[vstat == BASIC] = 0.0
    return vals


def _refresh(af, b, lower_f, upper_f, vstat, basis):
    binv = _invert(af[:, basis])
    if binv is None:
        return None, None
    rhs = b - af @ _nonbasic_values(vstat, lower_f, upper_f)
    return binv, binv @ rhs


def solve_kernel(c, a_eq, b_eq, lower, upper, basis0=None, vstatus0=None,
                 eps_feas=1e-7, eps_opt=1e-9, max_iter=0):
    """Solve min c'x s.t. a_eq x = b_eq, lower <= x <= upper.

    basis0 (len m, -1 for "use an artificial") and vstatus0 (len n, -1 for
    automatic placement, else AT_LOWER/AT_UPPER/FREE) give callers a crash
    start. Returns (status, x, objective, iterations, basis, vstatus,
    max_infeasibility).
    """
    c = np.ascontiguousarray(c, dtype=np.float64)
    a_eq = np.ascontiguousarray(a_eq, dtype=np.float64)
    b_eq = np.ascontiguousarray(b_eq, dtype=np.float64)
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    m, n = a_eq.shape if a_eq.ndim == 2 else (0, c.shape[0])
    if max_iter <= 0:
        max_iter = 2000 + 50 * (m + n)

    ntot = n + m
    af = np.zeros((m, ntot))
    af[:, :n] = a_eq
    af[np.arange(m), n + np.arange(m)] = 1.0
    lower_f = np.concatenate([lower, np.zeros(m)])
    upper_f = np.concatenate([upper, np.full(m, np.inf)])

    # Nonbasic placement: prefer a finite lower bound, then a finite upper,
    # else the variable starts free at zero.
    vstat = np.empty(ntot, dtype=np.int8)
    for j in range(n):
        want = -1 if vstatus0 is None else int(vstatus0[j])
        if want == AT_LOWER and np.isfinite(lower[j]):
            vstat[j] = AT_LOWER
        elif want == AT_UPPER and np.isfinite(upper[j]):
            vstat[j] = AT_UPPER
        elif want == FREE and not (np.isfinite(lower[j]) or np.isfinite(upper[j])):
            vstat[j] = FREE
        elif np.isfinite(lower[j]):
            vstat[j] = AT_LOWER
        elif np.isfinite(upper[j]):
            vstat[j] = AT_UPPER
        else:
            vstat[j] = FREE
    vstat[n:] = AT_LOWER

    basis = np.arange(n, ntot, dtype=np.int64)
    if basis0 is not None:
        used: set[int] = set()
        for i in range(m):
            v = int(basis0[i])
            if 0 <= v < n and v not in used:
                basis[i] = v
                used.add(v)
    for i in range(m):
        vstat[basis[i]] = BASIC
        if basis[i] != n + i:
            upper_f[n + i] = 0.0  # unused artificial: locked out

    def _setup():
        binv, x_b = _refresh(af, b_eq, lower_f, upper_f, vstat, basis)
        if binv is None:
            return None, None
        for k in range(m):
            v = basis[k]
            if v >= n and x_b[k] < 0.0:
                af[v - n, v] = -1.0
                binv[k] *= -1.0
                x_b[k] *= -1.0
        return binv, x_b

    binv, x_b = _setup()
    crash_bad = binv is None
    if binv is not None and basis0 is not None:
        for k in range(m):
            v = basis[k]
            if v < n and not (lower[v] - eps_feas <= x_b[k] <= upper[v] + eps_feas):
                crash_bad = True
                break
    if crash_bad:
        # Crash basis singular or infeasible: fall back to all-artificial.
        for k in range(m):
            v = basis[k]
            if v < n:
                vstat[v] = AT_LOWER if np.isfinite(lower[v]) else (
                    AT_UPPER if np.isfinite(upper[v]) else FREE)
        basis = np.arange(n, ntot, dtype=np.int64)
        vstat[n:] = BASIC
        af[:, n:] = np.eye(m)
        upper_f[n:] = np.inf
        binv, x_b = _setup()

    p1_tol = eps_feas * (1.0 + (np.abs(b_eq).max() if m else 0.0))
    iterations = 0

    def _loop(cost, tol_d, phase):
        nonlocal binv, x_b, iterations
        bland = False
        stall = 0
        since_refactor = 0
        rng_all = upper_f - lower_f
        while True:
            if iterations >= max_iter:
                return STALLED
            if since_refactor >= _REFACTOR_EVERY:
                binv, x_b = _refresh(af, b_eq, lower_f, upper_f, vstat, basis)
                if binv is None:
                    return STALLED
                since_refactor = 0
            y = cost[basis] @ binv if m else np.zeros(0)
            d = cost - (y @ af if m else 0.0)
            score = np.where(vstat == AT_LOWER, -d,
                             np.where(vstat == AT_UPPER, d, np.abs(d)))
            blocked = (vstat == BASIC) | (rng_all <= 0.0)
            score[blocked] = -np.inf
            if bland:
                improving = score > tol_d
                if not improving.any():
                    return OPTIMAL
                j = int(np.argmax(improving))
            else:
                j = int(np.argmax(score))
                if score[j] <= tol_d:
                    return OPTIMAL
            s_j = vstat[j]
            direction = 1.0 if s_j == AT_LOWER or (s_j == FREE and d[j] < 0.0) else -1.0

            w = binv @ af[:, j] if m else np.zeros(0)
            wd = direction * w
            ratios = np.full(m, np.inf)
            if m:
                lb = lower_f[basis]
                ub = upper_f[basis]
                dn = (wd > _PIV_TOL) & np.isfinite(lb)
                up = (wd < -_PIV_TOL) & np.isfinite(ub)
                ratios[dn] = np.maximum(x_b[dn] - lb[dn], 0.0) / wd[dn]
                ratios[up] = np.maximum(ub[up] - x_b[up], 0.0) / (-wd[up])
            t_basic = ratios.min() if m else np.inf
            t_flip = rng_all[j] if s_j != FREE else np.inf

            if t_basic < t_flip:
                ties = np.nonzero(ratios == t_basic)[0]
                leave = int(ties[np.argmin(basis[ties])])
                t = t_basic
            elif np.isinf(t_flip):
                return STALLED if phase == 1 else UNBOUNDED
            else:
                leave = -1
                t = t_flip

            iterations += 1
            stall = stall + 1 if t <= 1e-12 else 0
            if stall > _STALL_LIMIT:
                bland = True
            if leave < 0:
                x_b -= (direction * t) * w
                vstat[j] = AT_UPPER if s_j == AT_LOWER else AT_LOWER
                continue

            piv = w[leave]
            if abs(piv) < _ETA_TOL:
                binv, x_b = _refresh(af, b_eq, lower_f, upper_f, vstat, basis)
                if binv is None:
                    return STALLED
                since_refactor = 0
                continue
            enter_val = (lower_f[j] if s_j == AT_LOWER else
                         upper_f[j] if s_j == AT_UPPER else 0.0) + direction * t
            x_b -= (direction * t) * w
            lv = int(basis[leave])
            vstat[lv] = AT_LOWER if wd[leave] > 0.0 else AT_UPPER
            if lv >= n:
                upper_f[lv] = 0.0  # artificials never re-enter
                rng_all[lv] = 0.0
            brow = binv[leave] / piv
            delta = w.copy()
            delta[leave] = 0.0
            binv -= np.outer(delta, brow)
            binv[leave] = brow
            basis[leave] = j
            vstat[j] = BASIC
            x_b[leave] = enter_val
            since_refactor += 1

    def _finish(status, infeas_floor=0.0):
        nonlocal binv, x_b, basis
        # Canonical refresh against the sorted basis: the returned point is
        # then a function of the optimal basis alone, not of the pivot path.
        basis_sorted = np.sort(basis)
        fresh_binv, fresh_xb = _refresh(af, b_eq, lower_f, upper_f, vstat,
                                        basis_sorted)
        if fresh_binv is not None:
            basis, binv, x_b = basis_sorted, fresh_binv, fresh_xb
        x_full = _nonbasic_values(vstat, lower_f, upper_f)
        if m:
            x_full[basis] = x_b
        x = x_full[:n].copy()
        obj = float(np.dot(c, x))
        resid = float(np.abs(a_eq @ x - b_eq).max()) if m else 0.0
        lo_v = np.where(np.isfinite(lower), lower - x, -np.inf)
        hi_v = np.where(np.isfinite(upper), x - upper, -np.inf)
        bound_v = max(float(lo_v.max()), float(hi_v.max()), 0.0) if n else 0.0
        infeas = resid if status != INFEASIBLE else max(resid, infeas_floor)
        infeas = max(infeas, bound_v)
        return (status, x, obj, iterations, basis.copy(),
                vstat[:n].copy(), infeas)

    if binv is None:
        return _finish(STALLED)

    p1_obj = float(sum(x_b[k] for k in range(m) if basis[k] >= n))
    if p1_obj > p1_tol:
        cph = np.zeros(ntot)
        cph[n:] = 1.0
        outcome = _loop(cph, eps_opt, phase=1)
        if outcome == STALLED:
            return _finish(STALLED)
        binv, x_b = _refresh(af, b_eq, lower_f, upper_f, vstat, basis)
        if binv is None:
            return _finish(STALLED)
        p1_obj = float(sum(abs(x_b[k]) for k in range(m) if basis[k] >= n))
        if p1_obj > p1_tol:
            return _finish(INFEASIBLE, infeas_floor=p1_obj)

    upper_f[n:] = 0.0
    for k in range(m):
        if basis[k] >= n:
            x_b[k] = 0.0

    cf = np.zeros(ntot)
    cf[:n] = c
    tol_d = eps_opt * max(1.0, float(np.abs(c).max()) if n else 1.0)
    outcome = _loop(cf, tol_d, phase=2)
    if outcome == OPTIMAL:
        return _finish(OPTIMAL)
    return _finish(outcome)

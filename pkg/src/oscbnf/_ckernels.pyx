# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Signatures mirror ``oscbnf._kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sin, cos

cnp.import_array()


cdef Py_ssize_t _bisect_left(const double[::1] a, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _bisect_right(const double[::1] a, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def sublevel_areas(const double[::1] v0, const double[::1] v1, const double[::1] v2,
                   const double[::1] mass, const double[::1] t):
    cdef Py_ssize_t M = v0.shape[0], nt = t.shape[0], c, i, i0, i1
    out_arr = np.zeros(nt, dtype=np.float64)
    diff_arr = np.zeros(nt + 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] diff = diff_arr
    cdef double x, acc
    with nogil:
        for c in range(M):
            i1 = _bisect_left(t, v2[c])
            diff[i1] += mass[c]
            i0 = _bisect_right(t, v0[c])
            for i in range(i0, i1):
                x = t[i]
                if x <= v1[c]:
                    out[i] += mass[c] * (x - v0[c]) * (x - v0[c]) / ((v1[c] - v0[c]) * (v2[c] - v0[c]))
                else:
                    out[i] += mass[c] * (1.0 - (v2[c] - x) * (v2[c] - x) / ((v2[c] - v0[c]) * (v2[c] - v1[c])))
        acc = 0.0
        for i in range(nt):
            acc += diff[i]
            out[i] += acc
    return out_arr


cdef inline double _ipow(double x, long e) noexcept nogil:
    cdef double r = 1.0
    while e > 0:
        r *= x
        e -= 1
    return r


cdef void _poly_val_grad(const double* y, const long[:, ::1] exps, const double[::1] coefs,
                         double* val, double* grad) noexcept nogil:
    cdef Py_ssize_t m = exps.shape[0], j, q, r
    cdef double term, g
    val[0] = 0.0
    for q in range(4):
        grad[q] = 0.0
    for j in range(m):
        term = coefs[j]
        for q in range(4):
            term *= _ipow(y[q], exps[j, q])
        val[0] += term
        for q in range(4):
            if exps[j, q] == 0:
                continue
            g = coefs[j] * exps[j, q] * _ipow(y[q], exps[j, q] - 1)
            for r in range(4):
                if r != q:
                    g *= _ipow(y[r], exps[j, r])
            grad[q] += g


cdef void _clenshaw2(const double[:, ::1] C, Py_ssize_t row, double x,
                     double* out) noexcept nogil:
    cdef Py_ssize_t n = C.shape[1], k
    cdef double b0 = 0.0, b1 = 0.0, b2 = 0.0
    for k in range(n - 1, 0, -1):
        b2 = b1
        b1 = b0
        b0 = C[row, k] + 2.0 * x * b1 - b2
    out[0] = C[row, 0] + x * b0 - b1


cdef void _composite_field(const double* y, const long[:, ::1] e0, const double[::1] k0,
                           const long[:, ::1] e1, const double[::1] k1,
                           const double[::1] lam_nodes, const double[::1] a_nodes,
                           const double[::1] b_nodes, const double[:, ::1] T,
                           const double[:, ::1] dT, double* f) noexcept nogil:
    cdef double p0, p1, g0[4], g1[4]
    cdef Py_ssize_t L = lam_nodes.shape[0], l, m, r
    cdef double ell[16], dell[16]
    cdef double a = 0.0, b = 0.0, da = 0.0, db = 0.0, prod, s, term
    cdef double x, xl, width, tv, dtv, c0 = 0.0, c1 = 0.0
    _poly_val_grad(y, e0, k0, &p0, g0)
    _poly_val_grad(y, e1, k1, &p1, g1)
    for l in range(L):
        prod = 1.0
        for m in range(L):
            if m != l:
                prod *= (p0 - lam_nodes[m]) / (lam_nodes[l] - lam_nodes[m])
        ell[l] = prod
        s = 0.0
        for m in range(L):
            if m == l:
                continue
            term = 1.0 / (lam_nodes[l] - lam_nodes[m])
            for r in range(L):
                if r != l and r != m:
                    term *= (p0 - lam_nodes[r]) / (lam_nodes[l] - lam_nodes[r])
            s += term
        dell[l] = s
        a += ell[l] * a_nodes[l]
        b += ell[l] * b_nodes[l]
        da += dell[l] * a_nodes[l]
        db += dell[l] * b_nodes[l]
    width = b - a
    x = 2.0 * (p1 - a) / width - 1.0
    xl = 2.0 * (-da * width - (p1 - a) * (db - da)) / (width * width)
    for l in range(L):
        _clenshaw2(T, l, x, &tv)
        _clenshaw2(dT, l, x, &dtv)
        c1 += ell[l] * dtv * 2.0 / width
        c0 += dell[l] * tv + ell[l] * dtv * xl
    f[0] = c0 * g0[1] + c1 * g1[1]
    f[1] = -(c0 * g0[0] + c1 * g1[0])
    f[2] = c0 * g0[3] + c1 * g1[3]
    f[3] = -(c0 * g0[2] + c1 * g1[2])


def midpoint_composite(const double[:, ::1] y0, double h, long nsteps,
                       const long[:, ::1] e0, const double[::1] k0,
                       const long[:, ::1] e1, const double[::1] k1,
                       const double[::1] lam_nodes, const double[::1] a_nodes,
                       const double[::1] b_nodes, const double[:, ::1] T,
                       const double[:, ::1] dT, double solve_tol, long max_iter):
    cdef Py_ssize_t nb = y0.shape[0], p, q, step
    cdef long it, worst = 0, failed_step = -1
    cdef double yc[4], y1[4], ym[4], f[4], ynew[4], err, scale
    out_arr = np.array(y0, dtype=np.float64, copy=True)
    cdef double[:, ::1] out = out_arr
    if lam_nodes.shape[0] > 16:
        raise ValueError("at most 16 interpolation levels supported")
    with nogil:
        for p in range(nb):
            for q in range(4):
                yc[q] = out[p, q]
            for step in range(nsteps):
                _composite_field(yc, e0, k0, e1, k1, lam_nodes, a_nodes, b_nodes, T, dT, f)
                for q in range(4):
                    y1[q] = yc[q] + h * f[q]
                it = 0
                while True:
                    for q in range(4):
                        ym[q] = 0.5 * (yc[q] + y1[q])
                    _composite_field(ym, e0, k0, e1, k1, lam_nodes, a_nodes, b_nodes, T, dT, f)
                    err = 0.0
                    scale = 1.0
                    for q in range(4):
                        ynew[q] = yc[q] + h * f[q]
                        if fabs(ynew[q] - y1[q]) > err:
                            err = fabs(ynew[q] - y1[q])
                        if fabs(ynew[q]) > scale:
                            scale = fabs(ynew[q])
                        y1[q] = ynew[q]
                    it += 1
                    if err <= solve_tol * scale:
                        break
                    if it >= max_iter:
                        failed_step = step
                        break
                if it > worst:
                    worst = it
                if failed_step >= 0:
                    break
                for q in range(4):
                    yc[q] = y1[q]
            for q in range(4):
                out[p, q] = yc[q]
            if failed_step >= 0:
                break
    return out_arr, worst, failed_step


cdef inline void _magnetic_field(const double* y, double* f) noexcept nogil:
    cdef double sp = sin(y[1]), cp = cos(y[1])
    cdef double q = y[2] + cp
    f[0] = q / (sp * sp)
    f[1] = y[3]
    f[2] = 0.0
    f[3] = q / sp + q * q * cp / (sp * sp * sp)


def midpoint_magnetic(const double[::1] y0, double h, long nsteps,
                      double solve_tol, long max_iter):
    cdef Py_ssize_t step, q
    cdef long it, worst = 0, failed_step = -1
    cdef double yc[4], y1[4], ym[4], f[4], ynew[4], err, scale
    traj_arr = np.empty((nsteps + 1, 4), dtype=np.float64)
    cdef double[:, ::1] traj = traj_arr
    for q in range(4):
        yc[q] = y0[q]
        traj[0, q] = y0[q]
    with nogil:
        for step in range(nsteps):
            _magnetic_field(yc, f)
            for q in range(4):
                y1[q] = yc[q] + h * f[q]
            it = 0
            while True:
                for q in range(4):
                    ym[q] = 0.5 * (yc[q] + y1[q])
                _magnetic_field(ym, f)
                err = 0.0
                scale = 1.0
                for q in range(4):
                    ynew[q] = yc[q] + h * f[q]
                    if fabs(ynew[q] - y1[q]) > err:
                        err = fabs(ynew[q] - y1[q])
                    if fabs(ynew[q]) > scale:
                        scale = fabs(ynew[q])
                    y1[q] = ynew[q]
                it += 1
                if err <= solve_tol * scale:
                    break
                if it >= max_iter:
                    failed_step = step
                    break
            if it > worst:
                worst = it
            if failed_step >= 0:
                break
            for q in range(4):
                yc[q] = y1[q]
                traj[step + 1, q] = y1[q]
    if failed_step >= 0:
        traj_arr = traj_arr[: failed_step + 1]
    return traj_arr, worst, failed_step

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: MC inner loop and the per-sample SDE.

Contracts match ``_kernels_py`` exactly; both consume the same pre-drawn
normals so the backends are interchangeable.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, hypot, log, sin, sqrt

cnp.import_array()

cdef double PI = 3.141592653589793238462643383279502884


def mi_logpout(double complex y, double[::1] zr, double[::1] zi,
               double gamma_l, double ql, double p, double prop_var):
    """Importance-sampled log output density at one received point."""
    cdef Py_ssize_t n = zr.shape[0]
    cdef double[::1] li = np.empty(n, dtype=np.float64)
    cdef double y_re = y.real, y_im = y.imag
    cdef double ay, phs, cs, sn, s, base
    cdef double xr, xi, ax2, ax, mu, cm, sm, tr, ti, u, v, c32
    cdef double lq, m, se, se2, e
    cdef Py_ssize_t j

    with nogil:
        ay = hypot(y_re, y_im)
        phs = atan2(y_im, y_re) - gamma_l * ay * ay
        if ay == 0.0:
            phs = 0.0
        cs = cos(phs)
        sn = sin(phs)
        s = sqrt(0.5 * prop_var)
        # the z-independent parts of lcond + lprior - lq
        base = -log(PI * ql) - log(PI * p) + log(PI * prop_var)
        m = -1e308
        for j in range(n):
            xr = ay * cs + s * (zr[j] * cs - zi[j] * sn)
            xi = ay * sn + s * (zr[j] * sn + zi[j] * cs)
            ax2 = xr * xr + xi * xi
            ax = sqrt(ax2)
            mu = gamma_l * ax2
            # y e^{-i(phase(xp)+mu)} = (y conj(xp) / |xp|) e^{-i mu}
            tr = y_re * xr + y_im * xi
            ti = y_im * xr - y_re * xi
            cm = cos(mu)
            sm = sin(mu)
            u = (tr * cm + ti * sm) / ax - ax
            v = (ti * cm - tr * sm) / ax
            c32 = 1.0 + mu * mu / 3.0
            li[j] = (base - 0.5 * log(c32)
                     - ((1.0 + 4.0 * mu * mu / 3.0) * u * u - 2.0 * mu * u * v + v * v)
                     / (ql * c32)
                     - ax2 / p + 0.5 * (zr[j] * zr[j] + zi[j] * zi[j]))
            if li[j] > m:
                m = li[j]
        se = 0.0
        se2 = 0.0
        for j in range(n):
            e = exp(li[j] - m)
            se += e
            se2 += e * e
    return m + log(se) - log(<double> n), se * se / se2


def sde_rotation(double complex[::1] x, double[:, :, ::1] z,
                 double gamma_l, double ql, int scheme=0):
    """Integrate the per-sample nonlinear SDE over unit span."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_steps = z.shape[0]
    if scheme not in (0, 1):
        raise ValueError(f"unknown scheme {scheme}")
    pr_arr = np.empty(n, dtype=np.float64)
    pi_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] pr = pr_arr
    cdef double[::1] pi_ = pi_arr
    cdef double h = gamma_l / n_steps
    cdef double sig = sqrt(0.5 * ql / n_steps)
    cdef double a2, f, c, s_, tr
    cdef Py_ssize_t i, k

    with nogil:
        for i in range(n):
            pr[i] = x[i].real
            pi_[i] = x[i].imag
        if scheme == 0:
            for i in range(n):
                a2 = pr[i] * pr[i] + pi_[i] * pi_[i]
                f = 0.5 * h * a2
                c = cos(f)
                s_ = sin(f)
                tr = pr[i] * c - pi_[i] * s_
                pi_[i] = pr[i] * s_ + pi_[i] * c
                pr[i] = tr
            for k in range(n_steps):
                for i in range(n):
                    pr[i] += sig * z[k, 0, i]
                    pi_[i] += sig * z[k, 1, i]
                    a2 = pr[i] * pr[i] + pi_[i] * pi_[i]
                    f = (h if k < n_steps - 1 else 0.5 * h) * a2
                    c = cos(f)
                    s_ = sin(f)
                    tr = pr[i] * c - pi_[i] * s_
                    pi_[i] = pr[i] * s_ + pi_[i] * c
                    pr[i] = tr
        else:
            for k in range(n_steps):
                for i in range(n):
                    a2 = pr[i] * pr[i] + pi_[i] * pi_[i]
                    tr = pr[i] - h * a2 * pi_[i] + sig * z[k, 0, i]
                    pi_[i] = pi_[i] + h * a2 * pr[i] + sig * z[k, 1, i]
                    pr[i] = tr
    out = np.empty(n, dtype=np.complex128)
    out.real = pr_arr
    out.imag = pi_arr
    return out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: forward recurrence, final moments and the adjoint sweep.

Same index conventions and outputs as ``_kernels_py``.  Only the default
classical-nucleation / softplus-growth law is compiled in; custom kinetics go
through the pure-Python path.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, log1p, pow, sqrt, isfinite

cnp.import_array()


cdef inline double _pw(double base, double e) nogil:
    if e == 1.5:
        return base * sqrt(base)
    if e == 0.5:
        return sqrt(base)
    if e == -0.5:
        return 1.0 / sqrt(base)
    return pow(base, e)


cdef inline void _cnt_rates(double c, double kN, double B, double kG, double csat,
                            double eps, double* out) nogil:
    cdef double lnS, expo, rate, x, z, ez
    out[0] = 0.0
    out[1] = 0.0
    if c > csat:
        lnS = log(c / csat)
        expo = B / (lnS * lnS)
        if expo <= 700.0:
            rate = kN * exp(-expo)
            out[0] = rate
            out[1] = rate * 2.0 * expo / (lnS * c)
    x = c - csat
    if eps == 0.0:
        if x > 0:
            out[2] = kG * x
            out[3] = kG
        else:
            out[2] = 0.0
            out[3] = 0.0
        return
    z = x / eps
    if z > 35.0:
        out[2] = kG * (x + eps * log1p(exp(-z)))
        out[3] = kG / (1.0 + exp(-z))
    elif z < -700.0:
        out[2] = 0.0
        out[3] = 0.0
    else:
        ez = exp(z)
        out[2] = kG * eps * log1p(ez)
        out[3] = kG * ez / (1.0 + ez)


cdef void _total_concentration(const double[:] v, const double[:] t, const double[:] delta,
                               double kr, double[:] ctot) nogil:
    # ctot[k] = sum_l v[l]*delta[l] - lagged[k], lagged[k] = sum_l v[l]*expm1(kr*delta[l])/kr*exp(-kr*(t[k]-t[l]))
    cdef Py_ssize_t n = v.shape[0], k
    cdef double fed = 0.0, lagged = 0.0
    ctot[0] = 0.0
    for k in range(n):
        fed = fed + v[k] * delta[k]
        lagged = (lagged + v[k] * expm1(kr * delta[k]) / kr) * exp(-kr * delta[k])
        ctot[k + 1] = fed - lagged


def total_concentration(v, t, delta, double kr):
    cdef const double[:] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef const double[:] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:] dd = np.ascontiguousarray(delta, dtype=np.float64)
    out = np.zeros(vv.shape[0] + 1)
    cdef double[:] o = out
    with nogil:
        _total_concentration(vv, tt, dd, kr, o)
    return out


cdef Py_ssize_t _forward(const double[:] v, const double[:] t, const double[:] delta, double kr,
                         double gamma1, double gamma2, double xn, double beta,
                         double kN, double B, double kG, double csat, double eps,
                         double[:] c, double[:] ctot, double[:] n, double[:] g, double[:] s,
                         double[:] dn, double[:] dg) nogil:
    cdef Py_ssize_t nt = v.shape[0], k, l
    cdef double a = 1.0 - beta
    cdef double xa = pow(xn, a)
    cdef double p3 = 3.0 / a
    cdef double acc, base, sp
    cdef double r[4]
    _total_concentration(v, t, delta, kr, ctot)
    c[0] = 0.0
    for k in range(nt):
        _cnt_rates(c[k], kN, B, kG, csat, eps, r)
        n[k] = r[0] * delta[k]
        dn[k] = r[1] * delta[k]
        g[k] = r[2] * delta[k]
        dg[k] = r[3] * delta[k]
        if k > 0:
            s[k] = s[k - 1] + g[k]
        else:
            s[k] = g[k]
        acc = 0.0
        for l in range(k + 1):
            if n[l] == 0.0:
                continue
            sp = s[l - 1] if l > 0 else 0.0
            base = xa + a * (s[k] - sp)
            if base <= 0.0:
                return -2 - k
            acc = acc + n[l] * _pw(base, p3)
        c[k + 1] = gamma1 * ctot[k + 1] - gamma2 * acc
        if not isfinite(c[k + 1]):
            return k + 1
    return -1


def forward_cnt(v, t, delta, double kr, double gamma1, double gamma2, double xn, double beta,
                double kN, double B, double kG, double csat, double eps):
    cdef const double[:] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef const double[:] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:] dd = np.ascontiguousarray(delta, dtype=np.float64)
    cdef Py_ssize_t nt = vv.shape[0]
    c = np.zeros(nt + 1)
    ctot = np.zeros(nt + 1)
    n = np.zeros(nt)
    g = np.zeros(nt)
    s = np.zeros(nt)
    dn = np.zeros(nt)
    dg = np.zeros(nt)
    cdef double[:] c_ = c, ctot_ = ctot, n_ = n, g_ = g, s_ = s, dn_ = dn, dg_ = dg
    cdef Py_ssize_t bad
    with nogil:
        bad = _forward(vv, tt, dd, kr, gamma1, gamma2, xn, beta, kN, B, kG, csat, eps,
                       c_, ctot_, n_, g_, s_, dn_, dg_)
    return c, ctot, n, g, s, dn, dg, int(bad)


def moments(n, s, double xn, double beta, Py_ssize_t k, int pmax=3):
    cdef const double[:] nn = np.ascontiguousarray(n, dtype=np.float64)
    cdef const double[:] ss = np.ascontiguousarray(s, dtype=np.float64)
    out = np.zeros(pmax + 1)
    cdef double[:] o = out
    cdef double a = 1.0 - beta
    cdef double xa = pow(xn, a)
    cdef double sp, size, w
    cdef Py_ssize_t l
    cdef int p
    if k <= 0:
        return out
    with nogil:
        for l in range(k):
            if nn[l] == 0.0:
                continue
            sp = ss[l - 1] if l > 0 else 0.0
            size = pow(xa + a * (ss[k - 1] - sp), 1.0 / a)
            w = nn[l]
            for p in range(pmax + 1):
                o[p] += w
                w = w * size
    return out


def adjoint(v, t, delta, double kr, double gamma1, double gamma2, double xn, double beta,
            n, g, s, dn, dg, dj):
    cdef const double[:] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:] dd = np.ascontiguousarray(delta, dtype=np.float64)
    cdef const double[:] nn = np.ascontiguousarray(n, dtype=np.float64)
    cdef const double[:] ss = np.ascontiguousarray(s, dtype=np.float64)
    cdef const double[:] dnn = np.ascontiguousarray(dn, dtype=np.float64)
    cdef const double[:] dgg = np.ascontiguousarray(dg, dtype=np.float64)
    cdef double dj0 = dj[0], dj1 = dj[1], dj2 = dj[2]
    cdef Py_ssize_t nt = nn.shape[0], j, l, k, i
    cdef double a = 1.0 - beta
    cdef double xa = pow(xn, a)
    cdef double p3 = 3.0 / a
    cdef double ia = 1.0 / a
    grad = np.zeros(nt)
    lam = np.zeros(nt + 1)
    djdc_arr = np.zeros(nt + 1)
    q_arr = np.zeros(nt)
    cdef double[:] gr = grad, lm = lam, djdc = djdc_arr, q = q_arr
    cdef double z, sp, acc, tn, tg, lag, e0, e1, e2
    with nogil:
        # contributions of c[j] to the final moments, accumulated as a running sum over l <= j
        acc = 0.0
        for j in range(nt):
            sp = ss[j - 1] if j > 0 else 0.0
            z = xa + a * (ss[nt - 1] - sp)
            # E_p(z) = z**(p/a); dE_p/ds = p * z**(p/a - 1)
            e1 = pow(z, ia)
            e2 = e1 * e1
            acc = acc + nn[j] * (dj1 * e1 / z + dj2 * 2.0 * e2 / z)
            djdc[j] = dnn[j] * (dj0 + dj1 * e1 + dj2 * e2) + dgg[j] * acc
        for j in range(nt - 1, -1, -1):
            if lm[j + 1] != 0.0:
                for l in range(j + 1):
                    sp = ss[l - 1] if l > 0 else 0.0
                    z = xa + a * (ss[j] - sp)
                    q[l] = q[l] + lm[j + 1] * 3.0 * _pw(z, p3 - 1.0)
            tn = 0.0
            if dnn[j] != 0.0:
                sp = ss[j - 1] if j > 0 else 0.0
                for k in range(j, nt):
                    tn = tn + lm[k + 1] * _pw(xa + a * (ss[k] - sp), p3)
            tg = 0.0
            if dgg[j] != 0.0:
                for l in range(j + 1):
                    tg = tg + nn[l] * q[l]
            lm[j] = djdc[j] - gamma2 * (dnn[j] * tn + dgg[j] * tg)
        # grad[i] = gamma1 * sum_{k>i} lam[k] * (delta[i] - lag[i]*exp(-kr*(t[k]-t[i])))
        acc = 0.0
        tn = 0.0
        for i in range(nt - 1, -1, -1):
            acc = acc + lm[i + 1]
            tn = (tn + lm[i + 1]) * exp(-kr * dd[i])
            lag = expm1(kr * dd[i]) / kr
            gr[i] = gamma1 * (dd[i] * acc - lag * tn)
    return grad, lam

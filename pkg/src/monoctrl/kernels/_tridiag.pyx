# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels: Thomas solves and fused Crank-Nicolson sweeps.

Complex arithmetic is written out on split real/imaginary doubles; numpy
complex128 buffers are interleaved (re, im) pairs, so a double* view walks
them directly.  Divisions go through explicit reciprocals.
"""

import numpy as np

BACKEND = "compiled"

DEF PIVOT_FLOOR = 1e-300


cdef int _thomas_split(const double* dl, const double* d, const double* du,
                       const double* b, double* cp, double* xp,
                       Py_ssize_t n) except -1 nogil:
    # All pointers walk interleaved (re, im) pairs.  Returns the failing
    # 1-based row on a zero pivot, 0 on success.
    cdef Py_ssize_t i, j
    cdef double mr, mi, ir, ii, denom, tr, ti
    mr = d[0]
    mi = d[1]
    denom = mr * mr + mi * mi
    if denom < PIVOT_FLOOR:
        return 1
    denom = 1.0 / denom
    ir = mr * denom
    ii = -mi * denom
    cp[0] = du[0] * ir - du[1] * ii
    cp[1] = du[0] * ii + du[1] * ir
    xp[0] = b[0] * ir - b[1] * ii
    xp[1] = b[0] * ii + b[1] * ir
    for i in range(1, n):
        j = 2 * i
        # m = d[i] - dl[i-1] * cp[i-1]
        mr = d[j] - (dl[j - 2] * cp[j - 2] - dl[j - 1] * cp[j - 1])
        mi = d[j + 1] - (dl[j - 2] * cp[j - 1] + dl[j - 1] * cp[j - 2])
        denom = mr * mr + mi * mi
        if denom < PIVOT_FLOOR:
            return <int>(i + 1)
        denom = 1.0 / denom
        ir = mr * denom
        ii = -mi * denom
        if i < n - 1:
            cp[j] = du[j] * ir - du[j + 1] * ii
            cp[j + 1] = du[j] * ii + du[j + 1] * ir
        # t = b[i] - dl[i-1] * xp[i-1]
        tr = b[j] - (dl[j - 2] * xp[j - 2] - dl[j - 1] * xp[j - 1])
        ti = b[j + 1] - (dl[j - 2] * xp[j - 1] + dl[j - 1] * xp[j - 2])
        xp[j] = tr * ir - ti * ii
        xp[j + 1] = tr * ii + ti * ir
    for i in range(n - 2, -1, -1):
        j = 2 * i
        xp[j] -= cp[j] * xp[j + 2] - cp[j + 1] * xp[j + 3]
        xp[j + 1] -= cp[j] * xp[j + 3] + cp[j + 1] * xp[j + 2]
    return 0


cdef int _thomas_d(const double* dl, const double* d, const double* du,
                   const double* b, double* cp, double* xp,
                   Py_ssize_t n) except -1 nogil:
    cdef Py_ssize_t i
    cdef double m
    if d[0] * d[0] < PIVOT_FLOOR:
        return 1
    cp[0] = du[0] / d[0]
    xp[0] = b[0] / d[0]
    for i in range(1, n):
        m = d[i] - dl[i - 1] * cp[i - 1]
        if m * m < PIVOT_FLOOR:
            return <int>(i + 1)
        if i < n - 1:
            cp[i] = du[i] / m
        xp[i] = (b[i] - dl[i - 1] * xp[i - 1]) / m
    for i in range(n - 2, -1, -1):
        xp[i] = xp[i] - cp[i] * xp[i + 1]
    return 0


def solve_tridiag(dl, d, du, b):
    """Solve the tridiagonal system with sub/main/super diagonals dl, d, du."""
    if np.iscomplexobj(d) or np.iscomplexobj(b) or np.iscomplexobj(dl) or np.iscomplexobj(du):
        return _solve_z(np.ascontiguousarray(dl, dtype=np.complex128),
                        np.ascontiguousarray(d, dtype=np.complex128),
                        np.ascontiguousarray(du, dtype=np.complex128),
                        np.ascontiguousarray(b, dtype=np.complex128))
    return _solve_d(np.ascontiguousarray(dl, dtype=np.float64),
                    np.ascontiguousarray(d, dtype=np.float64),
                    np.ascontiguousarray(du, dtype=np.float64),
                    np.ascontiguousarray(b, dtype=np.float64))


def _solve_z(const double complex[::1] dl, const double complex[::1] d,
             const double complex[::1] du, const double complex[::1] b):
    cdef Py_ssize_t n = d.shape[0]
    x = np.empty(n, dtype=np.complex128)
    work = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] xv = x
    cdef double complex[::1] wv = work
    cdef int bad = _thomas_split(<const double*>&dl[0], <const double*>&d[0],
                                 <const double*>&du[0], <const double*>&b[0],
                                 <double*>&wv[0], <double*>&xv[0], n)
    if bad:
        raise ZeroDivisionError(f"singular tridiagonal system at row {bad - 1}")
    return x


def _solve_d(const double[::1] dl, const double[::1] d, const double[::1] du,
             const double[::1] b):
    cdef Py_ssize_t n = d.shape[0]
    x = np.empty(n, dtype=np.float64)
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] xv = x
    cdef double[::1] wv = work
    cdef int bad = _thomas_d(&dl[0], &d[0], &du[0], &b[0], &wv[0], &xv[0], n)
    if bad:
        raise ZeroDivisionError(f"singular tridiagonal system at row {bad - 1}")
    return x


def tridiag_matvec(dl, d, du, x):
    """Tridiagonal matrix-vector product."""
    y = np.asarray(d) * np.asarray(x)
    y[1:] += np.asarray(dl) * np.asarray(x)[:-1]
    y[:-1] += np.asarray(du) * np.asarray(x)[1:]
    return y


cdef void _cn_bands_rhs(const double* h_dl, const double* h_d, const double* h_du,
                        const double* m_dl, const double* m_d, const double* m_du,
                        double vk, double tau, const double* x,
                        double* adl, double* ad, double* adu, double* rhs,
                        Py_ssize_t n) nogil:
    # Plus-branch bands of 1 + i tau H(vk) and minus-branch acting on x:
    # rhs = (1 - i tau H) x.  H bands are real; off-diagonal entries of the
    # stepping matrix are purely imaginary (i*p), diagonals 1 + i*p.
    cdef Py_ssize_t i, j
    cdef double p, xr, xi
    for i in range(n):
        j = 2 * i
        p = tau * (h_d[i] + vk * m_d[i])
        ad[j] = 1.0
        ad[j + 1] = p
        xr = x[j]
        xi = x[j + 1]
        # (1 - i p)(xr + i xi) = (xr + p xi) + i (xi - p xr)
        rhs[j] = xr + p * xi
        rhs[j + 1] = xi - p * xr
    for i in range(n - 1):
        j = 2 * i
        p = tau * (h_dl[i] + vk * m_dl[i])
        adl[j] = 0.0
        adl[j + 1] = p
        # rhs[i+1] -= i p * x[i]
        rhs[j + 2] += p * x[j + 1]
        rhs[j + 3] -= p * x[j]
        p = tau * (h_du[i] + vk * m_du[i])
        adu[j] = 0.0
        adu[j + 1] = p
        rhs[j] += p * x[j + 3]
        rhs[j + 1] -= p * x[j + 2]


def cn_propagate_forward(const double[::1] h_dl, const double[::1] h_d, const double[::1] h_du,
                         const double[::1] m_dl, const double[::1] m_d, const double[::1] m_du,
                         const double[::1] v, double tau, x0):
    """Crank-Nicolson sweep for H(v) = H0 + v * M with real tridiagonal bands.

    tau = dt / 2.  Returns the node trajectory, shape (len(v) + 1, len(x0)).
    """
    cdef Py_ssize_t n = h_d.shape[0]
    cdef Py_ssize_t n_steps = v.shape[0]
    out = np.empty((n_steps + 1, n), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    out[0, :] = np.ascontiguousarray(x0, dtype=np.complex128)

    scratch = np.empty((6, n), dtype=np.complex128)
    cdef double complex[:, ::1] sv = scratch
    cdef double* adl = <double*>&sv[0, 0]
    cdef double* ad = <double*>&sv[1, 0]
    cdef double* adu = <double*>&sv[2, 0]
    cdef double* rhs = <double*>&sv[3, 0]
    cdef double* cp = <double*>&sv[4, 0]
    cdef double* xp = <double*>&sv[5, 0]

    cdef double* base = <double*>&ov[0, 0]
    cdef Py_ssize_t k, i
    cdef int bad = 0
    with nogil:
        for k in range(n_steps):
            _cn_bands_rhs(&h_dl[0], &h_d[0], &h_du[0], &m_dl[0], &m_d[0], &m_du[0],
                          v[k], tau, base + 2 * n * k, adl, ad, adu, rhs, n)
            bad = _thomas_split(adl, ad, adu, rhs, cp, base + 2 * n * (k + 1), n)
            if bad:
                break
    if bad:
        raise ZeroDivisionError(f"singular tridiagonal system at row {bad - 1}")
    return out


def cn_propagate_adjoint(const double[::1] h_dl, const double[::1] h_d, const double[::1] h_du,
                         const double[::1] m_dl, const double[::1] m_d, const double[::1] m_du,
                         const double[::1] v, double tau, y_final):
    """Discrete adjoint of cn_propagate_forward (no state-cost sources).

    Backward step: solve the minus branch, then apply the plus branch.
    """
    cdef Py_ssize_t n = h_d.shape[0]
    cdef Py_ssize_t n_steps = v.shape[0]
    out = np.empty((n_steps + 1, n), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    out[n_steps, :] = np.ascontiguousarray(y_final, dtype=np.complex128)

    scratch = np.empty((6, n), dtype=np.complex128)
    cdef double complex[:, ::1] sv = scratch
    cdef double* adl = <double*>&sv[0, 0]
    cdef double* ad = <double*>&sv[1, 0]
    cdef double* adu = <double*>&sv[2, 0]
    cdef double* rhs = <double*>&sv[3, 0]
    cdef double* cp = <double*>&sv[4, 0]
    cdef double* zp = <double*>&sv[5, 0]

    cdef double* base = <double*>&ov[0, 0]
    cdef double* yk
    cdef Py_ssize_t k, i, j
    cdef double p, zr, zi
    cdef int bad = 0
    with nogil:
        for k in range(n_steps - 1, -1, -1):
            # minus-branch bands: diag 1 - i p, off -i p; rhs = y[k+1]
            for i in range(n):
                j = 2 * i
                p = tau * (h_d[i] + v[k] * m_d[i])
                ad[j] = 1.0
                ad[j + 1] = -p
                rhs[j] = base[2 * n * (k + 1) + j]
                rhs[j + 1] = base[2 * n * (k + 1) + j + 1]
            for i in range(n - 1):
                j = 2 * i
                adl[j] = 0.0
                adl[j + 1] = -tau * (h_dl[i] + v[k] * m_dl[i])
                adu[j] = 0.0
                adu[j + 1] = -tau * (h_du[i] + v[k] * m_du[i])
            bad = _thomas_split(adl, ad, adu, rhs, cp, zp, n)
            if bad:
                break
            # y[k] = (1 + i tau H) z
            yk = base + 2 * n * k
            for i in range(n):
                j = 2 * i
                p = tau * (h_d[i] + v[k] * m_d[i])
                zr = zp[j]
                zi = zp[j + 1]
                yk[j] = zr - p * zi
                yk[j + 1] = zi + p * zr
            for i in range(n - 1):
                j = 2 * i
                p = tau * (h_dl[i] + v[k] * m_dl[i])
                yk[j + 2] += -p * zp[j + 1]
                yk[j + 3] += p * zp[j]
                p = tau * (h_du[i] + v[k] * m_du[i])
                yk[j] += -p * zp[j + 3]
                yk[j + 1] += p * zp[j + 2]
    if bad:
        raise ZeroDivisionError(f"singular tridiagonal system at row {bad - 1}")
    return out

# Compiled Lax-Friedrichs march for quadratic flux factors g(u) = a u + b u^2.
import numpy as np

cdef inline double _g(double x, double a, double b) nogil:
    return a * x + b * x * x


cdef inline double _godunov(double p, double q, double a, double b) nogil:
    cdef double lo, hi, glo, ghi, c, out
    cdef bint has_c = b != 0.0
    c = -a / (2.0 * b) if has_c else 0.0
    if p <= q:
        lo = p
        hi = q
    else:
        lo = q
        hi = p
    glo = _g(lo, a, b)
    ghi = _g(hi, a, b)
    if p <= q:
        out = glo if glo < ghi else ghi
        if b > 0.0 and lo < c < hi:
            out = _g(c, a, b)
    else:
        out = glo if glo > ghi else ghi
        if b < 0.0 and lo < c < hi:
            out = _g(c, a, b)
    return out


def advance(double[::1] u, Py_ssize_t n_steps, double lam, double a, double b,
            double left_datum, double right_datum, bint right_free):
    """March ``n_steps`` equal steps in place; return summed ``lam * F`` at both ends."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t j, k
    cdef double s_in = 0.0, s_out = 0.0
    cdef double half_inv = 0.5 / lam
    cdef double[::1] gv = np.empty(n, dtype=np.float64)
    cdef double[::1] F = np.empty(n + 1, dtype=np.float64)
    with nogil:
        for k in range(n_steps):
            for j in range(n):
                gv[j] = _g(u[j], a, b)
            F[0] = _godunov(left_datum, u[0], a, b)
            if right_free:
                F[n] = gv[n - 1]
            else:
                F[n] = _godunov(u[n - 1], right_datum, a, b)
            for j in range(1, n):
                F[j] = 0.5 * (gv[j - 1] + gv[j]) - half_inv * (u[j] - u[j - 1])
            for j in range(n):
                u[j] -= lam * (F[j + 1] - F[j])
            s_in += lam * F[0]
            s_out += lam * F[n]
    return s_in, s_out

"""Independent reference computations used by the tests.

Nothing here imports the closed-form solver; each helper re-derives its value
from first principles (bisection, golden-section search, high precision).
"""

import math

import mpmath


def golden_max(f, lo, hi, tol=1e-12):
    """Golden-section maximizer of a unimodal f on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
    return 0.5 * (a + b)


def bisect_root(f, lo, hi, tol=1e-15, max_iter=400):
    """Plain bisection; requires a sign change on [lo, hi]."""
    flo = f(lo)
    assert flo * f(hi) <= 0, "no sign change"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def w0_mp(x, dps=40):
    """Principal-branch Lambert W in high precision, rounded to float."""
    with mpmath.workdps(dps):
        return float(mpmath.lambertw(mpmath.mpf(x), 0).real)


def deduct_demand_eta_1d(h, p_c, chi):
    """Single-user efficiency log2(1 + h p) / (P_c + p - chi) as a function of p."""
    return lambda p: math.log2(1.0 + h * p) / (p_c + p - chi)

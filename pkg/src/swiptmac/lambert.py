"""Principal-branch Lambert W and the ``omega ln(omega) - omega = Gamma`` inversion.

The efficiency-maximizing power of a user satisfies
``omega ln(omega) - omega = Gamma`` with ``omega = 1 + SNR``. Writing
``omega = e * exp(u)`` turns this into ``u exp(u) = Gamma / e``, so
``omega = exp(W0(Gamma / e) + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError

BRANCH_POINT = -1.0 / math.e
# Arguments this far below -1/e are treated as floating-point dust and clamped.
CLAMP_WINDOW = 1e-15


@dataclass(frozen=True)
class LambertResult:
    w: float
    iterations: int
    residual: float


def _clamp(x):
    if x < BRANCH_POINT - CLAMP_WINDOW or math.isnan(x):
        raise DomainError(f"W0 is undefined for x={x!r} < -1/e")
    return max(x, BRANCH_POINT)


def lambert_w0(x: float) -> LambertResult:
    """Evaluate W0(x) by regime-dependent initial guess plus Halley iteration.

    >>> round(lambert_w0(1.0).w, 10)
    0.5671432904
    """
    x = float(x)
    if math.isinf(x):
        raise DomainError("W0 of an infinite argument")
    x = _clamp(x)
    w, iterations = _kernels.w0_scalar(x)
    return LambertResult(w, iterations, abs(w * math.exp(w) - x))


def lambert_w0_array(x) -> np.ndarray:
    """Vectorized W0 for many arguments (compiled kernel when available)."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    if np.any(np.isnan(flat)) or np.any(np.isinf(flat)):
        raise DomainError("W0 needs finite arguments")
    if np.any(flat < BRANCH_POINT - CLAMP_WINDOW):
        bad = flat[flat < BRANCH_POINT - CLAMP_WINDOW][0]
        raise DomainError(f"W0 is undefined for x={bad!r} < -1/e")
    flat = np.maximum(flat, BRANCH_POINT)
    return _kernels.lambert_w0_array(flat).reshape(x.shape)


def solve_omega(gamma_cap: float) -> float:
    """Root ``omega >= 1`` of ``omega ln(omega) - omega = gamma_cap``.

    Raises DomainError for ``gamma_cap < -1``: the left-hand side never drops
    below -1, so no stationary point exists.
    """
    gamma_cap = float(gamma_cap)
    if not gamma_cap >= -1.0 - math.e * CLAMP_WINDOW:
        raise DomainError(f"omega ln(omega) - omega = {gamma_cap!r} has no solution (needs >= -1)")
    w = lambert_w0(max(gamma_cap, -1.0) / math.e).w
    return math.exp(w + 1.0)

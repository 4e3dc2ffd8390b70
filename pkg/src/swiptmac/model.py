"""Two-user SWIPT multiple-access channel: domain types and rate/energy formulas.

Units: powers in Watts, energies in Joules, block duration in seconds. The
noise variance at the information decoder is normalized to one, so channel
gains are dimensionless SNR-per-Watt factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import DenominatorNonpositive, ScenarioError, ZeroConsumption

# Smallest net consumption accepted as a meaningful efficiency denominator.
DENOMINATOR_GUARD = 1e-12

DEDUCT_DEMAND = "deduct-demand"
DEDUCT_HARVEST = "deduct-harvest"
NET_MODES = (DEDUCT_DEMAND, DEDUCT_HARVEST)


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise ScenarioError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class UserLink:
    """One transmitter: gains towards the ID and EH receivers, power budget."""

    h: float
    g: float
    p_max: float
    p_circuit: float = 0.0

    def __post_init__(self):
        for name in ("h", "g", "p_max", "p_circuit"):
            value = _finite(name, getattr(self, name))
            if value < 0:
                raise ScenarioError(f"{name} must be >= 0, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class Scenario:
    """A full problem instance: exactly two users plus harvester noise and block length."""

    users: tuple[UserLink, UserLink]
    sigma_h_sq: float = 0.0
    block_t: float = 1.0

    def __post_init__(self):
        users = tuple(self.users)
        if len(users) != 2:
            raise ScenarioError(f"exactly two users required, got {len(users)}")
        if not all(isinstance(u, UserLink) for u in users):
            raise ScenarioError("users must be UserLink instances")
        if users[0].p_max <= 0 and users[1].p_max <= 0:
            raise ScenarioError("at least one user needs p_max > 0")
        sigma = _finite("sigma_h_sq", self.sigma_h_sq)
        if sigma < 0:
            raise ScenarioError(f"sigma_h_sq must be >= 0, got {sigma!r}")
        t = _finite("block_t", self.block_t)
        if t <= 0:
            raise ScenarioError(f"block_t must be > 0, got {t!r}")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "sigma_h_sq", sigma)
        object.__setattr__(self, "block_t", t)

    @classmethod
    def from_arrays(cls, h, g, p_max, p_circuit, sigma_h_sq=0.0, block_t=1.0):
        """Build from per-user sequences ``h, g, p_max, p_circuit`` (length two)."""
        users = tuple(UserLink(*row) for row in zip(h, g, p_max, p_circuit))
        return cls(users, sigma_h_sq, block_t)

    @property
    def h(self):
        return (self.users[0].h, self.users[1].h)

    @property
    def g(self):
        return (self.users[0].g, self.users[1].g)

    @property
    def p_max(self):
        return (self.users[0].p_max, self.users[1].p_max)

    @property
    def p_circuit_total(self):
        return self.users[0].p_circuit + self.users[1].p_circuit

    def with_users(self, **changes):
        """Copy with fields of *both* users replaced, e.g. ``with_users(h=(1, 0))``."""
        users = tuple(
            replace(u, **{k: v[i] for k, v in changes.items()}) for i, u in enumerate(self.users)
        )
        return replace(self, users=users)


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers of the two users, in Watts."""

    p: tuple[float, float] = field(default=(0.0, 0.0))

    def __post_init__(self):
        p = tuple(self.p)
        if len(p) != 2:
            raise ScenarioError(f"allocation needs two powers, got {len(p)}")
        vals = []
        for i, v in enumerate(p):
            v = _finite(f"p[{i}]", v)
            if v < 0:
                raise ScenarioError(f"p[{i}] must be >= 0, got {v!r}")
            vals.append(v)
        object.__setattr__(self, "p", tuple(vals))

    def check(self, s: Scenario):
        for i, (v, u) in enumerate(zip(self.p, s.users)):
            if v > u.p_max:
                raise ScenarioError(f"p[{i}]={v!r} exceeds p_max={u.p_max!r}")
        return self

    @property
    def total(self):
        return self.p[0] + self.p[1]


@dataclass(frozen=True)
class Demand:
    """Required harvested energy chi in Joules."""

    chi: float

    def __post_init__(self):
        chi = _finite("chi", self.chi)
        if chi < 0:
            raise ScenarioError(f"chi must be >= 0, got {chi!r}")
        object.__setattr__(self, "chi", chi)

    def effective(self, s: Scenario):
        """Demand left after the harvester noise floor, ``max(0, chi - sigma_h^2)``."""
        return max(0.0, self.chi - s.sigma_h_sq)


def _as_alloc(alloc, s):
    if not isinstance(alloc, PowerAllocation):
        alloc = PowerAllocation(tuple(alloc))
    return alloc.check(s)


def _as_chi(d):
    return d.chi if isinstance(d, Demand) else Demand(d).chi


def sum_rate(alloc, s: Scenario):
    """Gaussian MAC sum-rate capacity, ``T log2(1 + sum h_i p_i)``."""
    a = _as_alloc(alloc, s)
    snr = s.users[0].h * a.p[0] + s.users[1].h * a.p[1]
    return s.block_t * math.log2(1.0 + snr)


def total_energy(alloc, s: Scenario):
    a = _as_alloc(alloc, s)
    return s.block_t * (s.p_circuit_total + a.total)


def harvested_energy(alloc, s: Scenario):
    """Energy collected at the EH receiver over one block, noise included."""
    a = _as_alloc(alloc, s)
    return s.block_t * (s.users[0].g * a.p[0] + s.users[1].g * a.p[1]) + s.sigma_h_sq


def efficiency_baseline(alloc, s: Scenario):
    """Bits per Joule without any harvesting credit."""
    a = _as_alloc(alloc, s)
    energy = total_energy(a, s)
    if energy <= 0:
        raise ZeroConsumption("total consumed energy is zero")
    return sum_rate(a, s) / energy


def efficiency_net(alloc, s: Scenario, d, mode: str = DEDUCT_DEMAND):
    """Bits per Joule of *net* consumption.

    ``mode='deduct-demand'`` subtracts the demand chi from the consumed energy,
    ``mode='deduct-harvest'`` subtracts the energy actually harvested.
    """
    a = _as_alloc(alloc, s)
    chi = _as_chi(d)
    if mode == DEDUCT_DEMAND:
        deducted = chi
    elif mode == DEDUCT_HARVEST:
        deducted = harvested_energy(a, s)
    else:
        raise ValueError(f"mode must be one of {NET_MODES}, got {mode!r}")
    den = total_energy(a, s) - deducted
    if den <= DENOMINATOR_GUARD:
        raise DenominatorNonpositive(
            f"net consumption {den!r} J is not positive (deducted {deducted!r} J)"
        )
    return sum_rate(a, s) / den


def net_gradient(p: Sequence[float], s: Scenario, chi: float):
    """Closed-form gradient of the deduct-demand efficiency with respect to both powers.

    ``d eta / d p_k = h_k / (ln2 * omega * N) - log2(omega) / N**2`` with
    ``omega = 1 + sum h p`` and ``N`` the per-unit-time net consumption.
    """
    h0, h1 = s.h
    omega = 1.0 + h0 * p[0] + h1 * p[1]
    net = s.p_circuit_total + p[0] + p[1] - chi / s.block_t
    if net <= DENOMINATOR_GUARD:
        raise DenominatorNonpositive(f"net consumption {net!r} W is not positive")
    common = math.log2(omega) / (net * net)
    scale = 1.0 / (math.log(2.0) * omega * net)
    return (h0 * scale - common, h1 * scale - common)

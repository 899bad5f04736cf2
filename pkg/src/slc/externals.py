"""Registered external subprograms: Black-Scholes Monte Carlo and its adjoint.

``mc`` simulates geometric Brownian motion with the exact one-step solution

    s[i] = S0 * exp((r - sigma^2/2) * T + sigma * sqrt(T) * Z_i),   T = 1,

and ``a_mc`` is its hand-written adjoint.  Rather than taping the normals,
the adjoint replays the same deterministic stream from the same seed, which
is cheaper and bit-exact.  The stream is splitmix64 feeding Box-Muller, so it
is reproducible across platforms and easy to regenerate out of order.

``bs_closed_form`` is the analytic pricing oracle used only by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SLRuntimeError

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53

DEFAULT_SEED = 42

# First Box-Muller normal drawn from seed 42; frozen once from the bit-level
# definition above and guarded by tests.
GOLDEN_FIRST_NORMAL_SEED42 = 0.4147197504315306


class Prng:
    """splitmix64 stream; two steps are consumed per normal draw."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        # 53-bit mantissa in [0, 1); zero is remapped so log() stays finite
        u = (self.next_u64() >> 11) * _INV53
        return u if u > 0.0 else _INV53

    def next_normal(self) -> float:
        u1 = self.next_uniform()
        u2 = self.next_uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def normals(seed: int, n: int) -> np.ndarray:
    """Vectorized equivalent of n successive Prng(seed).next_normal() calls."""
    if n == 0:
        return np.zeros(0)
    steps = (np.uint64(seed) + np.arange(1, 2 * n + 1, dtype=np.uint64) * np.uint64(_GAMMA))
    z = steps
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    u = (z >> np.uint64(11)).astype(np.float64) * _INV53
    u = np.where(u > 0.0, u, _INV53)
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _as_int(value: float, what: str) -> int:
    n = int(value)
    if n != value:
        raise SLRuntimeError(f"{what} must be integral, got {value!r}")
    return n


def mc(x: list[float], s: list[float], m: float, seed: int) -> list[float]:
    """Simulate m terminal asset prices into s (in place).

    x = [asset price, interest rate, volatility, strike]; only the first three
    drive the simulation, the strike rides along for the payoff.
    """
    n = _as_int(m, "path count M")
    if len(s) != n:
        raise SLRuntimeError(f"mc: vector of length {len(s)} cannot hold {n} paths")
    s0, r, sigma = x[0], x[1], x[2]
    z = normals(seed, n)
    paths = s0 * np.exp((r - 0.5 * sigma * sigma) + sigma * z)
    s[:] = paths.tolist()
    return s


def a_mc(
    x: list[float],
    a_x: list[float],
    s: list[float],
    a_s: list[float],
    m: float,
    seed: int,
) -> list[float]:
    """Hand-written adjoint of mc.

    Replays the normals from the same seed and recomputes the terminal prices
    from them, bit-equal to what the forward call produced, so the adjoint
    stays correct even if the s argument was meanwhile restored to its
    pre-call contents by the taping machinery.  Increments a_x with the
    pathwise sensitivities weighted by a_s, then zeroes a_s (its values are
    consumed here).
    """
    n = _as_int(m, "path count M")
    if len(s) != n or len(a_s) != n:
        raise SLRuntimeError("a_mc: s/a_s length does not match path count")
    s0, r, sigma = x[0], x[1], x[2]
    z = normals(seed, n)
    sv = s0 * np.exp((r - 0.5 * sigma * sigma) + sigma * z)
    av = np.asarray(a_s)
    a_x[0] += float(np.dot(sv / s0, av))
    a_x[1] += float(np.dot(sv, av))
    a_x[2] += float(np.dot(sv * (-sigma + z), av))
    a_s[:] = [0.0] * n
    return a_x


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CallPrice:
    price: float
    delta: float
    rho: float
    vega: float
    d_strike: float


def bs_closed_form(s0: float, k: float, r: float, sigma: float, t: float) -> CallPrice:
    """European call price and sensitivities under Black-Scholes."""
    if s0 <= 0.0 or k <= 0.0:
        raise ValueError("spot and strike must be positive")
    if sigma <= 0.0 or t <= 0.0:
        raise ValueError("volatility and maturity must be positive")
    sqrt_t = math.sqrt(t)
    d1 = (math.log(s0 / k) + (r + 0.5 * sigma * sigma) * t) / (sigma * sqrt_t)
    d2 = d1 - sigma * sqrt_t
    disc = math.exp(-r * t)
    return CallPrice(
        price=s0 * norm_cdf(d1) - k * disc * norm_cdf(d2),
        delta=norm_cdf(d1),
        rho=k * t * disc * norm_cdf(d2),
        vega=s0 * norm_pdf(d1) * sqrt_t,
        d_strike=-disc * norm_cdf(d2),
    )


@dataclass(frozen=True)
class External:
    """A primal/adjoint pair callable from scripts.

    Both callables receive the evaluated argument values plus the run seed.
    Registering an external requires both entries; the compiler only needs
    the names, the interpreter needs the implementations.
    """

    name: str
    primal: Callable
    adjoint: Callable


REGISTRY: dict[str, External] = {
    "mc": External(name="mc", primal=mc, adjoint=a_mc),
}


def external_names() -> frozenset[str]:
    return frozenset(REGISTRY)

"""Series expansion of the left Riemann-Liouville derivative.

The fractional derivative of order alpha in (0, 1) with lower terminal a,

    D^alpha x(t) = 1/Gamma(1-alpha) * d/dt integral_a^t (t-tau)^(-alpha) x(tau) dtau,

is replaced by a truncated series of integer-order quantities:

    D^alpha x(t) ~= A (t-a)^(-alpha) x(t) + A' (t-a)^(1-alpha) x'(t)
                    - sum_{p=2}^{N} C_p (t-a)^(1-p-alpha) V_p(t),

where each moment integral V_p satisfies the ordinary initial value problem

    V_p'(t) = (1-p) (t-a)^(p-2) x(t),   V_p(a) = 0,   p = 2, ..., N.

The weights are

    A(alpha, N)  = 1/Gamma(1-alpha) * [1 + sum_{p=2}^{N} Gamma(p-1+alpha) / (Gamma(alpha) (p-1)!)]
    A'(alpha, N) = 1/Gamma(2-alpha) * [1 + sum_{p=1}^{N} Gamma(p-1+alpha) / (Gamma(alpha-1) p!)]
    C(alpha, p)  = Gamma(p-1+alpha) / (Gamma(2-alpha) Gamma(alpha-1) (p-1)!).

Because the substitution is algebraic, a d-dimensional fractional system
turns into an ordinary system of dimension d*N (`expand_system`), which any
classical integrator can handle.  alpha = 1 is treated as an exact special
case: the weights contain Gamma(1-alpha) and Gamma(alpha-1) poles there, so
the expansion is bypassed and the original field is embedded unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "PoleError",
    "DegenerateCoefficientError",
    "gamma",
    "ExpansionConfig",
    "ExpansionCoefficients",
    "SampledFunction",
    "AugmentedVectorField",
    "coeff_a",
    "coeff_a_prime",
    "coeff_c",
    "approx_rl_derivative",
    "expand_system",
]


class PoleError(ValueError):
    """Gamma function requested within 1e-12 of a non-positive integer."""


class DegenerateCoefficientError(ValueError):
    """|A'| is too small: the augmented system divides by A'."""


# Rejection threshold for |A'|; the augmented right-hand side multiplies by 1/A'.
DEGENERATE_A_PRIME_TOL = 1e-8

_POLE_TOL = 1e-12

# Lanczos approximation, g = 7, 9 coefficients.  Together with the
# reflection identity below this keeps the relative error under ~1e-13
# for real arguments in (-10, 50).
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _sinpi(x: float) -> float:
    """sin(pi*x) with the argument reduced to [-0.5, 0.5] first.

    Direct evaluation of sin(pi*x) loses relative accuracy next to the
    zeros of the sine; reducing by the nearest integer keeps full
    precision there, which the reflection identity depends on.
    """
    n = round(x)
    r = x - n
    s = math.sin(math.pi * r)
    return -s if n % 2 else s


def _lanczos_gamma(x: float) -> float:
    # Valid for x >= 0.5.
    z = x - 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def gamma(x: float) -> float:
    """Gamma function for real arguments.

    Arguments at or above 0.5 use the Lanczos series directly; arguments
    below 0.5 go through the reflection identity
    Gamma(x) Gamma(1-x) = pi / sin(pi x).

    Raises:
        PoleError: x is within 1e-12 of a non-positive integer.
        ValueError: x is nan or infinite.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gamma requires a finite argument, got {x!r}")
    if x >= 0.5:
        return _lanczos_gamma(x)
    nearest = round(x)
    if nearest <= 0 and abs(x - nearest) <= _POLE_TOL:
        raise PoleError(f"gamma pole at non-positive integer: x = {x!r}")
    return math.pi / (_sinpi(x) * _lanczos_gamma(1.0 - x))


@dataclass(frozen=True)
class ExpansionConfig:
    """Order data for the derivative expansion.

    alpha is the fractional order; alpha = 1 selects the exact classical
    bypass.  order_n is the truncation order N of the series (the V_p sum
    runs over p = 2, ..., N).  lower_terminal is the terminal a of the
    derivative; this package always works with a = 0.
    """

    alpha: float
    order_n: int
    lower_terminal: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.order_n, (int, np.integer)) or isinstance(self.order_n, bool):
            raise ValueError(f"order_n must be an integer, got {self.order_n!r}")
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must satisfy 0 < alpha <= 1, got {self.alpha!r}")
        if self.order_n < 2:
            raise ValueError(f"order_n must be >= 2, got {self.order_n}")
        if not math.isfinite(self.lower_terminal):
            raise ValueError("lower_terminal must be finite")


def _require_expandable(alpha: float) -> None:
    if not (math.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise ValueError(
            f"expansion coefficients require alpha in (0, 1), got {alpha!r}; "
            "alpha = 1 is the classical case and bypasses the expansion"
        )


def coeff_a(alpha: float, order_n: int) -> float:
    """Value-term weight A(alpha, N).

    A = 1/Gamma(1-alpha) * [1 + sum_{p=2}^{N} Gamma(p-1+alpha) / (Gamma(alpha) (p-1)!)].
    Positive for alpha in (0, 1) and any N; tends to 0 as alpha -> 1
    because of the Gamma(1-alpha) pole.
    """
    _require_expandable(alpha)
    if order_n < 1:
        raise ValueError(f"order_n must be >= 1, got {order_n}")
    g_alpha = gamma(alpha)
    total = 1.0
    for p in range(2, order_n + 1):
        total += gamma(p - 1 + alpha) / (g_alpha * math.factorial(p - 1))
    return total / gamma(1.0 - alpha)


def coeff_a_prime(alpha: float, order_n: int) -> float:
    """Derivative-term weight A'(alpha, N).

    A' = 1/Gamma(2-alpha) * [1 + sum_{p=1}^{N} Gamma(p-1+alpha) / (Gamma(alpha-1) p!)].
    Tends to 1 as alpha -> 1 (the Gamma(alpha-1) pole kills the sum).
    """
    _require_expandable(alpha)
    if order_n < 1:
        raise ValueError(f"order_n must be >= 1, got {order_n}")
    g_am1 = gamma(alpha - 1.0)
    total = 1.0
    for p in range(1, order_n + 1):
        total += gamma(p - 1 + alpha) / (g_am1 * math.factorial(p))
    return total / gamma(2.0 - alpha)


def coeff_c(alpha: float, p: int) -> float:
    """Moment weight C(alpha, p) = Gamma(p-1+alpha) / (Gamma(2-alpha) Gamma(alpha-1) (p-1)!).

    Negative for alpha in (0, 1): Gamma(alpha-1) is the only negative factor.
    """
    _require_expandable(alpha)
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    return gamma(p - 1 + alpha) / (gamma(2.0 - alpha) * gamma(alpha - 1.0) * math.factorial(p - 1))


@dataclass(frozen=True)
class ExpansionCoefficients:
    """The weight set (A, A', C_2..C_N) for one (alpha, N) pair.

    c_coefs[p - 2] holds C(alpha, p).  Construction rejects a near-zero A'
    because the augmented right-hand side multiplies by 1/A'.
    """

    a_coef: float
    a_prime_coef: float
    c_coefs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "c_coefs", np.asarray(self.c_coefs, dtype=float))
        if not (math.isfinite(self.a_coef) and math.isfinite(self.a_prime_coef)):
            raise ValueError("expansion coefficients must be finite")
        if not np.all(np.isfinite(self.c_coefs)):
            raise ValueError("expansion coefficients must be finite")
        if abs(self.a_prime_coef) <= DEGENERATE_A_PRIME_TOL:
            raise DegenerateCoefficientError(
                f"|A'| = {abs(self.a_prime_coef):.3e} <= {DEGENERATE_A_PRIME_TOL:.0e}; "
                "the augmented system would divide by ~0"
            )

    @property
    def order_n(self) -> int:
        return len(self.c_coefs) + 1

    @classmethod
    def from_config(cls, cfg: ExpansionConfig) -> "ExpansionCoefficients":
        if cfg.alpha >= 1.0:
            raise ValueError(
                "alpha = 1 has no expansion coefficients (gamma poles); "
                "callers handle the classical case separately"
            )
        cs = np.array([coeff_c(cfg.alpha, p) for p in range(2, cfg.order_n + 1)])
        return cls(
            a_coef=coeff_a(cfg.alpha, cfg.order_n),
            a_prime_coef=coeff_a_prime(cfg.alpha, cfg.order_n),
            c_coefs=cs,
        )


@dataclass(frozen=True)
class SampledFunction:
    """A scalar function sampled on a uniform, strictly increasing grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or values.ndim != 1:
            raise ValueError("times and values must be one-dimensional")
        if len(times) != len(values):
            raise ValueError(f"length mismatch: {len(times)} times, {len(values)} values")
        if len(times) < 3:
            raise ValueError("need at least 3 samples")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("samples must be finite")
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise ValueError("times must be strictly increasing")
        h = steps[0]
        if np.max(np.abs(steps - h)) > 1e-9 * h:
            raise ValueError("times must be uniformly spaced")

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], start: float,
                      stop: float, num: int) -> "SampledFunction":
        """Sample a vectorized callable on num equispaced points of [start, stop]."""
        ts = np.linspace(start, stop, num)
        return cls(times=ts, values=np.asarray(fn(ts), dtype=float))

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def index_at(self, t: float) -> int:
        """Index of the grid node equal to t; rejects off-grid times."""
        h = self.step
        i = round((t - self.times[0]) / h)
        if i < 0 or i >= len(self.times) or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t!r} is not a node of the sample grid")
        return int(i)


def _derivative_at(values: np.ndarray, step: float, i: int) -> float:
    """Second-order finite difference at node i (one-sided at the ends)."""
    last = len(values) - 1
    if i == 0:
        return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
    if i == last:
        return (3.0 * values[last] - 4.0 * values[last - 1] + values[last - 2]) / (2.0 * step)
    return (values[i + 1] - values[i - 1]) / (2.0 * step)


def approx_rl_derivative(x: SampledFunction, cfg: ExpansionConfig, t: float) -> float:
    """Evaluate the expansion of the fractional derivative of x at time t.

    t must coincide with a node of x's grid, strictly after the lower
    terminal (the leading (t-a)^(-alpha) factor is singular at t = a).
    x'(t) is a second-order finite difference on the grid; each V_p(t) is
    the trapezoidal quadrature of (1-p) (tau-a)^(p-2) x(tau) over [a, t].
    """
    if cfg.alpha >= 1.0:
        raise ValueError("the pointwise expansion requires alpha < 1")
    a = cfg.lower_terminal
    if abs(x.times[0] - a) > 1e-9 * max(1.0, abs(a)):
        raise ValueError(
            f"sample grid must start at the lower terminal a = {a!r}, "
            f"got times[0] = {x.times[0]!r}"
        )
    i = x.index_at(t)
    if i == 0:
        raise ValueError("t must be strictly greater than the lower terminal")

    coefs = ExpansionCoefficients.from_config(cfg)
    h = x.step
    tau = t - a
    xd = _derivative_at(x.values, h, i)
    result = (coefs.a_coef * tau ** (-cfg.alpha) * x.values[i]
              + coefs.a_prime_coef * tau ** (1.0 - cfg.alpha) * xd)

    shifted = x.times[: i + 1] - a
    vals = x.values[: i + 1]
    power = np.ones_like(shifted)          # (tau - a)^(p-2), built incrementally
    for p in range(2, cfg.order_n + 1):
        integrand = (1.0 - p) * power * vals
        v_p = h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
        result -= coefs.c_coefs[p - 2] * tau ** (1.0 - p - cfg.alpha) * v_p
        power = power * shifted
    return float(result)


@dataclass(frozen=True)
class AugmentedVectorField:
    """Ordinary vector field equivalent to a d-dimensional fractional system.

    State layout: the first physical_dim entries are the physical states;
    then, for each physical state in order, its auxiliaries V_2, ..., V_N.
    Total dimension is physical_dim * order_n.
    """

    physical_dim: int
    order_n: int
    rhs: Callable[[float, np.ndarray], np.ndarray]

    @property
    def total_dim(self) -> int:
        return self.physical_dim * self.order_n

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.rhs(t, y)


def expand_system(f: Callable[[float, np.ndarray], np.ndarray], dim: int,
                  cfg: ExpansionConfig) -> AugmentedVectorField:
    """Turn the fractional system D^alpha x = f(t, x) into an ordinary one.

    For alpha < 1 the physical states obey

        x_k' = [f_k(t, x) - A tau^(-alpha) x_k + sum_p C_p tau^(1-p-alpha) V_p^k]
               * tau^(alpha-1) / A',

    with tau = t - a, while each auxiliary follows V_p^k' = (1-p) tau^(p-2) x_k,
    all starting from V_p^k(a) = 0.  For alpha = 1 the original field is
    embedded unchanged, with identically-zero auxiliary dynamics, so the
    classical system is recovered exactly rather than in the limit.

    Raises DegenerateCoefficientError when |A'| is below the safe floor.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    n = cfg.order_n
    a = cfg.lower_terminal

    if cfg.alpha == 1.0:
        def classical_embedding(t: float, y: np.ndarray) -> np.ndarray:
            out = np.zeros(dim * n)
            out[:dim] = f(t, y[:dim])
            return out

        return AugmentedVectorField(physical_dim=dim, order_n=n, rhs=classical_embedding)

    coefs = ExpansionCoefficients.from_config(cfg)
    alpha = cfg.alpha
    a_coef = coefs.a_coef
    inv_a_prime = 1.0 / coefs.a_prime_coef
    c_coefs = coefs.c_coefs
    p_range = np.arange(2, n + 1, dtype=float)
    aux_exponents = p_range - 2.0            # tau^(p-2)
    moment_exponents = 1.0 - p_range - alpha  # tau^(1-p-alpha)
    one_minus_p = 1.0 - p_range

    def augmented(t: float, y: np.ndarray) -> np.ndarray:
        tau = t - a
        x = y[:dim]
        v = y[dim:].reshape(dim, n - 1)
        weighted_moments = v @ (c_coefs * tau ** moment_exponents)
        bracket = f(t, x) - a_coef * tau ** (-alpha) * x + weighted_moments
        dx = bracket * (tau ** (alpha - 1.0) * inv_a_prime)
        dv = (one_minus_p * tau ** aux_exponents)[None, :] * x[:, None]
        return np.concatenate([dx, dv.ravel()])

    return AugmentedVectorField(physical_dim=dim, order_n=n, rhs=augmented)

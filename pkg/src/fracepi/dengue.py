"""Host-vector dengue compartment model.

Hosts split into susceptible S_h, infected I_h, and resistant R_h with a
constant total N_h; mosquitoes split into susceptible S_m and infected I_m
with constant total N_m.  Transmission happens through mosquito bites in
both directions:

    S_h' = mu_h N_h - (B beta_mh I_m / N_h + mu_h) S_h
    I_h' = B beta_mh (I_m / N_h) S_h - (eta_h + mu_h) I_h
    R_h' = eta_h I_h - mu_h R_h
    S_m' = mu_m N_m - (B beta_hm I_h / N_h + mu_m) S_m
    I_m' = B beta_hm (I_h / N_h) S_m - mu_m I_m

The default parameter set describes a dengue outbreak on the scale of the
2009 Cape Verde epidemic: 56 000 hosts, three mosquitoes per host, and an
index cluster of 216 infected people.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "StateVector",
    "classical_rhs",
    "default_scenario",
    "population_drift",
]


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological constants of the host-vector model.

    Rates are per day; beta_mh and beta_hm are per-bite transmission
    probabilities.  n_m must equal m_ratio * n_h.
    """

    n_h: float          # host population
    n_m: float          # mosquito population
    m_ratio: float      # mosquitoes per host
    bite_rate: float    # B, bites per day
    beta_mh: float      # mosquito -> human transmission probability per bite
    beta_hm: float      # human -> mosquito transmission probability per bite
    mu_h: float         # human natural death rate
    mu_m: float         # mosquito natural death rate
    eta_h: float        # human recovery rate

    def __post_init__(self) -> None:
        for name in ("n_h", "n_m", "m_ratio", "bite_rate", "beta_mh", "beta_hm",
                     "mu_h", "mu_m", "eta_h"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        for name in ("beta_mh", "beta_hm"):
            if getattr(self, name) > 1.0:
                raise ValueError(f"{name} is a probability and must be <= 1")
        if abs(self.n_m - self.m_ratio * self.n_h) > 1e-9 * self.n_m:
            raise ValueError(
                f"n_m = {self.n_m!r} does not equal m_ratio * n_h = "
                f"{self.m_ratio * self.n_h!r}"
            )


@dataclass(frozen=True)
class StateVector:
    """Compartment populations (persons and mosquitoes)."""

    s_h: float
    i_h: float
    r_h: float
    s_m: float
    i_m: float

    def __post_init__(self) -> None:
        for name in ("s_h", "i_h", "r_h", "s_m", "i_m"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value!r}")

    @property
    def total_hosts(self) -> float:
        return self.s_h + self.i_h + self.r_h

    @property
    def total_mosquitoes(self) -> float:
        return self.s_m + self.i_m

    def as_array(self) -> np.ndarray:
        return np.array([self.s_h, self.i_h, self.r_h, self.s_m, self.i_m])

    @classmethod
    def from_array(cls, values: np.ndarray) -> "StateVector":
        s_h, i_h, r_h, s_m, i_m = (float(v) for v in values)
        return cls(s_h=s_h, i_h=i_h, r_h=r_h, s_m=s_m, i_m=i_m)


def classical_rhs(t: float, y: np.ndarray, params: ModelParams) -> np.ndarray:
    """Time derivative of the compartment vector (S_h, I_h, R_h, S_m, I_m).

    Pure function of the state; t is accepted for integrator compatibility
    (the model is autonomous).  Whenever the compartment sums equal N_h and
    N_m, the host and mosquito totals are conserved exactly:
    dS_h + dI_h + dR_h = 0 and dS_m + dI_m = 0.
    """
    s_h, i_h, r_h, s_m, i_m = y
    foi_host = params.bite_rate * params.beta_mh * i_m / params.n_h
    foi_vector = params.bite_rate * params.beta_hm * i_h / params.n_h
    return np.array([
        params.mu_h * params.n_h - (foi_host + params.mu_h) * s_h,
        foi_host * s_h - (params.eta_h + params.mu_h) * i_h,
        params.eta_h * i_h - params.mu_h * r_h,
        params.mu_m * params.n_m - (foi_vector + params.mu_m) * s_m,
        foi_vector * s_m - params.mu_m * i_m,
    ])


def default_scenario() -> tuple[ModelParams, StateVector]:
    """Baseline outbreak: 56 000 hosts, 3:1 mosquito ratio, 216 index cases.

    Human life expectancy 71 years, mean infectious period 3 days, mosquito
    life span 10 days, 0.7 bites per mosquito per day, 0.36 transmission
    probability per bite in both directions.
    """
    n_h = 56000.0
    m_ratio = 3.0
    params = ModelParams(
        n_h=n_h,
        n_m=m_ratio * n_h,
        m_ratio=m_ratio,
        bite_rate=0.7,
        beta_mh=0.36,
        beta_hm=0.36,
        mu_h=1.0 / (71 * 365),
        mu_m=1.0 / 10.0,
        eta_h=1.0 / 3.0,
    )
    initial = StateVector(
        s_h=n_h - 216.0,
        i_h=216.0,
        r_h=0.0,
        s_m=params.n_m,
        i_m=0.0,
    )
    return params, initial


def population_drift(values: np.ndarray, params: ModelParams) -> tuple[float, float]:
    """Worst relative drift of the host and mosquito totals over a trajectory.

    values must have the five compartments as columns in standard order.
    Classical runs conserve both totals to roundoff; fractional-order runs
    do not (a fractional derivative of a constant is nonzero), and this
    diagnostic is how that drift is surfaced rather than hidden.
    """
    host_total = values[:, 0] + values[:, 1] + values[:, 2]
    mosquito_total = values[:, 3] + values[:, 4]
    host_drift = float(np.max(np.abs(host_total - params.n_h)) / params.n_h)
    mosquito_drift = float(np.max(np.abs(mosquito_total - params.n_m)) / params.n_m)
    return host_drift, mosquito_drift

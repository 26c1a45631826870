"""Fixed-step RK4 integration and the dengue simulation drivers.

The fractional driver integrates the augmented system produced by
`expansion.expand_system`.  Its right-hand side carries t^(alpha-1) and
t^(-alpha) factors that are singular at t = 0, so integration starts at a
small positive offset (1e-6 days by default) with the physical states at
their t = 0 values and every auxiliary V_p at zero.  The first grid
interval is crossed with geometrically growing sub-steps: near the offset
the stiff x/t terms demand steps proportional to t, and a full-size first
step would destroy the run.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dengue import ModelParams, StateVector, classical_rhs
from .expansion import ExpansionConfig, expand_system

__all__ = [
    "BlowUpError",
    "TimeGrid",
    "TimeSeries",
    "DENGUE_COLUMNS",
    "integrate_rk4",
    "simulate_classical",
    "simulate_fractional",
    "aux_column_names",
]

DENGUE_COLUMNS = ("S_h", "I_h", "R_h", "S_m", "I_m")

# Sub-step growth ratio for the singular start: the stiff x/t modes need
# steps proportional to the current time, and 2**(1/8) keeps each sub-step
# below ~9% of it.
RAMP_FACTOR = 2.0 ** 0.125

# Undershoot beyond -1e-6 of the relevant population total is reported.
UNDERSHOOT_TOL = 1e-6


class BlowUpError(RuntimeError):
    """A trajectory left the finite range; carries the failure time."""

    def __init__(self, time: float, step_index: int):
        super().__init__(f"non-finite state at t = {time:g} (step {step_index})")
        self.time = time
        self.step_index = step_index


@dataclass(frozen=True)
class TimeGrid:
    """Uniform output grid in days; the last step shrinks to land on t_end."""

    t_start: float
    t_end: float
    step: float

    def __post_init__(self) -> None:
        for name in ("t_start", "t_end", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step!r}")
        if self.t_start >= self.t_end:
            raise ValueError("t_start must be below t_end")
        if (self.t_end - self.t_start) / self.step < 2:
            raise ValueError("grid must span at least two steps")

    def nodes(self) -> np.ndarray:
        """Node array; the final node is exactly t_end."""
        span = self.t_end - self.t_start
        n_full = int(math.floor(span / self.step + 1e-9))
        ts = self.t_start + self.step * np.arange(n_full + 1)
        if self.t_end - ts[-1] > 1e-9 * self.step:
            ts = np.append(ts, self.t_end)
        else:
            ts[-1] = self.t_end
        return ts


@dataclass(frozen=True)
class TimeSeries:
    """A trajectory: node times plus one state row per node."""

    times: np.ndarray
    values: np.ndarray
    columns: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or len(times) != values.shape[0]:
            raise ValueError("values must be a (num_nodes, dim) array")
        if self.columns is not None and len(self.columns) != values.shape[1]:
            raise ValueError("column names must match the state dimension")

    def column(self, name: str) -> np.ndarray:
        if self.columns is None:
            raise ValueError("series has no column names")
        return self.values[:, self.columns.index(name)]

    def nearest_index(self, t: float) -> int:
        """Index of the node closest to t; t must lie within the span."""
        times = self.times
        tol = 1e-9 * max(1.0, abs(times[-1]))
        if t < times[0] - tol or t > times[-1] + tol:
            raise ValueError(
                f"t = {t!r} is outside the simulated span [{times[0]!r}, {times[-1]!r}]"
            )
        i = int(np.searchsorted(times, t))
        if i == 0:
            return 0
        if i >= len(times):
            return len(times) - 1
        return i if times[i] - t < t - times[i - 1] else i - 1


def _rk4_path(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray,
              ts: np.ndarray) -> np.ndarray:
    """Classical fourth-order Runge-Kutta over an explicit node array."""
    y = np.array(y0, dtype=float)
    out = np.empty((len(ts), len(y)))
    out[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(len(ts) - 1):
            t = ts[i]
            h = ts[i + 1] - t
            k1 = f(t, y)
            k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = f(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise BlowUpError(time=float(ts[i + 1]), step_index=i + 1)
            out[i + 1] = y
    return out


def integrate_rk4(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray,
                  grid: TimeGrid) -> TimeSeries:
    """Integrate y' = f(t, y) from y(t_start) = y0 over the grid.

    Raises BlowUpError (with the offending time) the moment any state
    component becomes non-finite; no silent NaN propagation.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    ts = grid.nodes()
    return TimeSeries(times=ts, values=_rk4_path(f, y0, ts))


def _validate_initial(params: ModelParams, y0: StateVector) -> None:
    if abs(y0.total_hosts - params.n_h) > 1e-9 * params.n_h:
        raise ValueError(
            f"initial host compartments sum to {y0.total_hosts!r}, expected n_h = {params.n_h!r}"
        )
    if abs(y0.total_mosquitoes - params.n_m) > 1e-9 * params.n_m:
        raise ValueError(
            f"initial mosquito compartments sum to {y0.total_mosquitoes!r}, "
            f"expected n_m = {params.n_m!r}"
        )


def _warn_undershoot(series: TimeSeries, params: ModelParams) -> None:
    # Report, never clamp: clamping would silently distort the
    # conservation diagnostics.
    scales = np.array([params.n_h] * 3 + [params.n_m] * 2)
    floors = -UNDERSHOOT_TOL * scales
    physical = series.values[:, :5]
    mask = physical < floors
    if np.any(mask):
        rows, cols = np.nonzero(mask)
        k = np.argmin(physical[rows, cols] / scales[cols])
        name = DENGUE_COLUMNS[cols[k]]
        warnings.warn(
            f"negative undershoot: {name} = {physical[rows[k], cols[k]]:.6g} "
            f"at t = {series.times[rows[k]]:g}",
            RuntimeWarning,
            stacklevel=3,
        )


def simulate_classical(params: ModelParams, y0: StateVector, grid: TimeGrid) -> TimeSeries:
    """Integrate the classical model; host and mosquito totals are conserved."""
    _validate_initial(params, y0)

    def f(t: float, y: np.ndarray) -> np.ndarray:
        return classical_rhs(t, y, params)

    ts = grid.nodes()
    series = TimeSeries(times=ts, values=_rk4_path(f, y0.as_array(), ts),
                        columns=DENGUE_COLUMNS)
    _warn_undershoot(series, params)
    return series


def aux_column_names(order_n: int) -> tuple[str, ...]:
    """Auxiliary column labels: V2_S_h ... VN_S_h, V2_I_h, ... (state-major)."""
    return tuple(f"V{p}_{name}" for name in DENGUE_COLUMNS for p in range(2, order_n + 1))


def _startup_nodes(start: float, stop: float, origin: float) -> np.ndarray:
    """Geometric sub-steps from start to stop, graded towards the origin."""
    offsets = [start - origin]
    while offsets[-1] * RAMP_FACTOR < stop - origin:
        offsets.append(offsets[-1] * RAMP_FACTOR)
    nodes = origin + np.array(offsets + [stop - origin])
    return nodes


def simulate_fractional(params: ModelParams, y0: StateVector, cfg: ExpansionConfig,
                        grid: TimeGrid, *, start_offset: float = 1e-6,
                        keep_aux: bool = False) -> TimeSeries:
    """Integrate the fractional-order model through its augmented system.

    All auxiliaries start at zero and the physical states at their t = 0
    values; integration starts at lower_terminal + start_offset and the
    first grid interval is crossed with graded sub-steps (see the module
    docstring).  The returned series reports the physical compartments on
    the requested grid, with the first node holding the initial state;
    keep_aux=True appends the auxiliary trajectories as extra columns.

    alpha = 1 delegates to simulate_classical, so that case is identical
    to the classical run on the same grid, bit for bit.
    """
    if cfg.alpha == 1.0:
        series = simulate_classical(params, y0, grid)
        if not keep_aux:
            return series
        aux = np.zeros((len(series.times), 5 * (cfg.order_n - 1)))
        return TimeSeries(times=series.times,
                          values=np.hstack([series.values, aux]),
                          columns=DENGUE_COLUMNS + aux_column_names(cfg.order_n))

    if start_offset <= 0 or not math.isfinite(start_offset):
        raise ValueError(f"start_offset must be positive and finite, got {start_offset!r}")
    if grid.t_start < cfg.lower_terminal:
        raise ValueError("the grid cannot start before the lower terminal")
    _validate_initial(params, y0)

    def f(t: float, y: np.ndarray) -> np.ndarray:
        return classical_rhs(t, y, params)

    field = expand_system(f, 5, cfg)
    nodes = grid.nodes()
    y0_aug = np.concatenate([y0.as_array(), np.zeros(5 * (cfg.order_n - 1))])
    values = np.empty((len(nodes), field.total_dim))
    values[0] = y0_aug

    start = max(grid.t_start, cfg.lower_terminal + start_offset)
    if start >= nodes[1]:
        raise ValueError(
            f"start_offset = {start_offset!r} does not leave room before the "
            f"first grid node at t = {nodes[1]!r}"
        )
    if nodes[0] >= start:
        # Grid begins past the singular region: integrate it directly.
        values[:] = _rk4_path(field.rhs, y0_aug, nodes)
    else:
        ramp = _startup_nodes(start, nodes[1], cfg.lower_terminal)
        head = _rk4_path(field.rhs, y0_aug, ramp)
        values[1:] = _rk4_path(field.rhs, head[-1], nodes[1:])

    if keep_aux:
        series = TimeSeries(times=nodes, values=values,
                            columns=DENGUE_COLUMNS + aux_column_names(cfg.order_n))
    else:
        series = TimeSeries(times=nodes, values=values[:, :5], columns=DENGUE_COLUMNS)
    _warn_undershoot(series, params)
    return series

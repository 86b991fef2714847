"""Rolling-horizon parking-pricing optimization on the macro model.

At every control boundary the loop pulls the plant's family accumulations
into a macro state, solves a finite-horizon pricing problem with a
multi-start pattern search, applies the first interval's prices to the
plant, and advances. Prices are box-bounded and consecutive intervals may
differ by at most a smoothing gap (including the step from the last applied
price).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .macromodel import (
    MacroParams,
    MacroState,
    MacroTrajectories,
    simulate_macro,
)
from .microsim import Simulation

FACILITIES = ("on", "off")


@dataclass(frozen=True)
class PricingSchedule:
    """Per-interval (tau_on, tau_off) prices with bound and smoothing limits."""

    interval_hr: float
    prices: tuple[tuple[float, float], ...]
    tau_min: float = 0.0
    tau_max: float = 10.0
    tau_gap: float = 3.0

    def __post_init__(self):
        if self.interval_hr <= 0:
            raise ValueError("interval must be > 0")
        if self.tau_gap < 0 or self.tau_max < self.tau_min:
            raise ValueError("infeasible price constraint box")
        for tau_on, tau_off in self.prices:
            for tau in (tau_on, tau_off):
                if not (self.tau_min - 1e-9 <= tau <= self.tau_max + 1e-9):
                    raise ValueError(f"price {tau} outside [{self.tau_min}, {self.tau_max}]")
        for (a_on, a_off), (b_on, b_off) in zip(self.prices, self.prices[1:]):
            if abs(b_on - a_on) > self.tau_gap + 1e-9 or abs(b_off - a_off) > self.tau_gap + 1e-9:
                raise ValueError("consecutive prices violate the smoothing gap")

    def per_step(self, dt_hr: float, n_steps: int) -> np.ndarray:
        steps_per = int(round(self.interval_hr / dt_hr))
        rows = []
        for i in range(n_steps):
            j = min(i // steps_per, len(self.prices) - 1)
            rows.append(self.prices[j])
        return np.array(rows)


@dataclass(frozen=True)
class MpcConfig:
    prediction_horizon: float = 0.5  # hr
    control_interval: float = 0.25  # hr
    n_intervals: int = 2  # pricing intervals optimized simultaneously
    dt_macro: float = 10.0 / 3600.0  # hr
    n_starts: int = 8
    budget: int = 400  # objective evaluations per start
    controlled: tuple[str, ...] = ("on",)
    tau_min: float = 0.0
    tau_max: float = 10.0
    tau_gap: float = 3.0
    seed: int = 0
    objective: str = "ineffective_cruising"  # or "total_travel_time"

    def __post_init__(self):
        if abs(self.n_intervals * self.control_interval - self.prediction_horizon) > 1e-9:
            raise ValueError("prediction horizon must equal n_intervals * control_interval")
        steps = self.control_interval / self.dt_macro
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("macro step must divide the control interval")
        if self.tau_gap < 0 or self.tau_max < self.tau_min:
            raise ValueError("infeasible price constraint box")
        if not self.controlled or any(f not in FACILITIES for f in self.controlled):
            raise ValueError("controlled facilities must be a non-empty subset of on/off")
        if self.objective not in ("ineffective_cruising", "total_travel_time"):
            raise ValueError(f"unknown objective {self.objective!r}")


def objective_ineffective_cruising(traj: MacroTrajectories, params: MacroParams) -> float:
    """veh-hr of on-street cruising plus the full-lot circuit deadweight loss.

    Cruising of vehicles that manage to park off street is not counted."""
    cruise = float(traj.n_c[:-1].sum()) * params.dt
    deadweight = float(traj.q_off_on.sum()) * params.l_off / params.v_off_f
    return cruise + deadweight


def objective_total_travel_time(traj: MacroTrajectories, params: MacroParams) -> float:
    """veh-hr on the road network plus the circuit deadweight loss."""
    on_road = float(traj.n[:-1].sum()) * params.dt
    deadweight = float(traj.q_off_on.sum()) * params.l_off / params.v_off_f
    return on_road + deadweight


def repair_schedule(
    raw: np.ndarray,
    prev: np.ndarray | None,
    tau_min: float,
    tau_max: float,
    tau_gap: float,
) -> np.ndarray:
    """Project interval prices into the box and smoothing-gap feasible set.

    Projection runs forward per facility: each interval is clipped into the
    box intersected with [previous - gap, previous + gap]. With ``prev``
    None the first interval is only box-clipped.
    """
    out = np.array(raw, dtype=float)
    for col in range(out.shape[1]):
        last = None if prev is None else prev[col]
        for i in range(out.shape[0]):
            lo, hi = tau_min, tau_max
            if last is not None:
                lo = max(lo, last - tau_gap)
                hi = min(hi, last + tau_gap)
            out[i, col] = min(max(out[i, col], lo), hi)
            last = out[i, col]
    return out


def _pattern_search(f, x0: np.ndarray, repair, budget: int, init_step: float, min_step: float = 0.01):
    """Coordinate pattern search with first-improvement polling.

    Returns (best_x, best_f, history of best values, evaluations used)."""
    x = repair(x0)
    fx = f(x)
    evals = 1
    history = [fx]
    step = init_step
    dims = x.size
    while evals < budget and step >= min_step:
        improved = False
        for d in range(dims):
            for sign in (1.0, -1.0):
                if evals >= budget:
                    break
                cand = x.copy()
                cand.flat[d] += sign * step
                cand = repair(cand)
                if np.allclose(cand, x):
                    continue
                fc = f(cand)
                evals += 1
                history.append(min(history[-1], fc))
                if fc < fx - 1e-12:
                    x, fx = cand, fc
                    improved = True
                    break
            if evals >= budget:
                break
        if not improved:
            step *= 0.5
    return x, fx, history, evals


@dataclass
class OpenLoopSolution:
    schedule: PricingSchedule
    objective: float
    evaluations: int
    indifferent: bool
    best_history: list[float]


def solve_open_loop(
    state: MacroState,
    park_forecast: np.ndarray,
    pass_forecast: np.ndarray,
    params: MacroParams,
    config: MpcConfig,
    prior_prices: tuple[float, float] | None,
    base_prices: tuple[float, float] | None = None,
    extra_starts: list[np.ndarray] | None = None,
) -> OpenLoopSolution:
    """Multi-start pattern search over the interval prices of the horizon.

    ``prior_prices`` anchor the smoothing gap to the last applied interval
    (None for one-shot full-horizon problems, whose first interval is only
    box-bounded). Uncontrolled facilities stay at ``base_prices``. Global
    optimality is not guaranteed; feasibility of the returned schedule is.
    """
    n_int = config.n_intervals
    base = prior_prices if base_prices is None else base_prices
    if base is None:
        raise ValueError("need base prices when no prior prices are given")
    n_steps = len(park_forecast)
    steps_per = int(round(config.control_interval / config.dt_macro))
    cols = [FACILITIES.index(fac) for fac in config.controlled]
    prev = None if prior_prices is None else np.array(prior_prices, dtype=float)

    objective_fn = (
        objective_ineffective_cruising
        if config.objective == "ineffective_cruising"
        else objective_total_travel_time
    )

    def full_matrix(x: np.ndarray) -> np.ndarray:
        mat = np.tile(np.asarray(base, dtype=float), (n_int, 1))
        mat[:, cols] = x.reshape(n_int, len(cols))
        return mat

    def repair(x: np.ndarray) -> np.ndarray:
        mat = full_matrix(x)
        fixed = repair_schedule(mat, prev, config.tau_min, config.tau_max, config.tau_gap)
        return fixed[:, cols].reshape(-1)

    cache: dict[bytes, float] = {}

    def evaluate(x: np.ndarray) -> float:
        key = x.tobytes()
        if key in cache:
            return cache[key]
        mat = full_matrix(x)
        rows = np.repeat(mat, steps_per, axis=0)[:n_steps]
        traj = simulate_macro(park_forecast, pass_forecast, rows, params, initial_state=state)
        val = objective_fn(traj, params)
        cache[key] = val
        return val

    dim = n_int * len(cols)
    rng = np.random.default_rng(config.seed)
    anchor = prev if prev is not None else np.asarray(base, dtype=float)
    starts = [np.tile([anchor[c] for c in cols], n_int).astype(float)]
    starts.append(np.full(dim, config.tau_min, dtype=float))
    starts.append(np.full(dim, config.tau_max, dtype=float))
    if extra_starts:
        starts.extend(np.asarray(s, dtype=float).reshape(-1) for s in extra_starts)
    while len(starts) < config.n_starts:
        starts.append(rng.uniform(config.tau_min, config.tau_max, size=dim))
    starts = starts[: max(config.n_starts, len(starts))]

    best_x, best_f, evals_total = None, math.inf, 0
    history: list[float] = []
    init_step = max((config.tau_max - config.tau_min) / 4.0, 0.25)
    for x0 in starts:
        x, fx, hist, used = _pattern_search(evaluate, x0, repair, config.budget, init_step)
        evals_total += used
        history.extend(min(h, best_f) for h in hist)
        if fx < best_f:
            best_x, best_f = x, fx

    values = list(cache.values())
    indifferent = (max(values) - min(values)) <= 1e-9 * max(1.0, abs(best_f))
    schedule = PricingSchedule(
        interval_hr=config.control_interval,
        prices=tuple(tuple(row) for row in full_matrix(best_x)),
        tau_min=config.tau_min,
        tau_max=config.tau_max,
        tau_gap=config.tau_gap,
    )
    return OpenLoopSolution(schedule, best_f, evals_total, indifferent, history)


def solve_full_horizon(
    park_profile: np.ndarray,
    pass_profile: np.ndarray,
    params: MacroParams,
    config: MpcConfig,
    horizon: float,
    base_prices: tuple[float, float],
    mode: str = "dynamic",
    initial_state: MacroState | None = None,
) -> OpenLoopSolution:
    """One optimization over the whole horizon: time-varying prices in
    "dynamic" mode, a single constant price in "static" mode.

    The dynamic solve is seeded with the static optimum, so its objective can
    never exceed the static one."""
    if mode not in ("dynamic", "static"):
        raise ValueError(f"unknown mode {mode!r}")
    state = initial_state.copy() if initial_state is not None else MacroState()
    n_int_dyn = int(round(horizon / config.control_interval))
    static_cfg = replace(
        config,
        n_intervals=1,
        control_interval=horizon,
        prediction_horizon=horizon,
    )
    static = solve_open_loop(
        state, park_profile, pass_profile, params, static_cfg, None, base_prices
    )
    if mode == "static":
        return static
    dyn_cfg = replace(
        config,
        n_intervals=n_int_dyn,
        prediction_horizon=n_int_dyn * config.control_interval,
    )
    seed_start = np.tile(
        [static.schedule.prices[0][FACILITIES.index(f)] for f in config.controlled], n_int_dyn
    )
    return solve_open_loop(
        state,
        park_profile,
        pass_profile,
        params,
        dyn_cfg,
        None,
        base_prices,
        extra_starts=[seed_start],
    )


# ------------------------------------------------------------------ plants


class MacroPlant:
    """The macro model itself as the controlled plant (for self-consistency
    checks and fast closed-loop experiments)."""

    def __init__(self, params: MacroParams, park_profile, pass_profile, base_prices):
        self.params = params
        self.park = np.asarray(park_profile, dtype=float)
        self.pazz = np.asarray(pass_profile, dtype=float)
        self.prices = tuple(base_prices)
        self.state = MacroState()
        self.t_hr = 0.0
        self.step = 0
        self.n_c_series: list[float] = []
        self.q_off_on_series: list[float] = []
        self.n_series: list[float] = []

    def read_state(self) -> MacroState:
        return self.state.copy()

    def set_prices(self, tau_on: float, tau_off: float):
        self.prices = (tau_on, tau_off)

    def advance(self, interval_hr: float):
        n = int(round(interval_hr / self.params.dt))
        lo, hi = self.step, min(self.step + n, len(self.park))
        rows = np.tile(self.prices, (hi - lo, 1))
        traj = simulate_macro(
            self.park[lo:hi], self.pazz[lo:hi], rows, self.params, initial_state=self.state
        )
        self.n_c_series.extend(traj.n_c[:-1].tolist())
        self.q_off_on_series.extend(traj.q_off_on.tolist())
        self.n_series.extend(traj.n[:-1].tolist())
        self.state = traj.final_state
        self.step = hi
        self.t_hr = hi * self.params.dt

    def ineffective_cruising(self) -> float:
        return (
            float(np.sum(self.n_c_series)) * self.params.dt
            + float(np.sum(self.q_off_on_series)) * self.params.l_off / self.params.v_off_f
        )

    def total_travel_time(self) -> float:
        return float(np.sum(self.n_series)) * self.params.dt

    def realized_n_c(self, lo: int, n: int) -> np.ndarray:
        return np.asarray(self.n_c_series[lo : lo + n])


class MicroPlant:
    """A live micro-simulation exposed through the plant protocol.

    Family counts map directly onto the macro accumulations (vehicles in the
    lot circuit count toward the moving-to-off family); past parking flows
    are re-binned to the macro step to seed the re-departure cohorts.
    Cruising distance already traveled is discarded, a known residual source.
    """

    def __init__(self, sim: Simulation, params: MacroParams):
        self.sim = sim
        self.params = params
        self._bin = int(round(params.dt * 3600.0 / sim.dt))

    def read_state(self) -> MacroState:
        sim = self.sim
        fam = {"i": 0.0, "ii": 0.0, "iii": 0.0, "iv": 0.0}
        for occ in sim.occupants.values():
            for veh in occ:
                fam[veh.family] += 1.0
        state = MacroState(
            n_m_off=fam["ii"] + len(sim.circuit_heap),
            n_m_on=fam["i"],
            n_m_pass=fam["iii"],
            n_c=fam["iv"],
            n_off=float(sim.lot_occ),
            n_on=float(sim.occupied_on),
        )
        done = sim.step_i
        usable = (done // self._bin) * self._bin
        parked_on = sim._series["parked_on"][:usable].reshape(-1, self._bin).sum(axis=1)
        parked_off = sim._series["parked_off"][:usable].reshape(-1, self._bin).sum(axis=1)
        overflow = sim._series["overflow"][:usable].reshape(-1, self._bin).sum(axis=1)
        state.k = len(parked_on)
        state.o_c_hist = [0.0] + parked_on.tolist()
        state.o_m_off_hist = [0.0] + (parked_off + overflow).tolist()
        state.q_off_on_hist = [0.0] + overflow.tolist()
        state.q_out_off_hist = [0.0] * (state.k + 1)
        state.q_out_on_hist = [0.0] * (state.k + 1)
        # seed the macro balance identity at the pull point (captive spots
        # count in n_on but are not vehicles, so the sim's own injected
        # total does not apply)
        state.cum_exit = 0.0
        state.cum_inflow = (
            state.n_m_off
            + state.n_m_on
            + state.n_m_pass
            + state.n_c
            + state.n_off
            + state.n_on
            + state.in_circuit(self.params.k_off)
        )
        return state

    def set_prices(self, tau_on: float, tau_off: float):
        self.sim.set_prices(tau_on, tau_off)

    def advance(self, interval_hr: float):
        self.sim.run_until(self.sim.t + interval_hr * 3600.0)

    def ineffective_cruising(self) -> float:
        sim = self.sim
        s = sim._series
        done = sim.step_i
        on_street = float(s["n_iv"][:done].sum()) * sim.dt / 3600.0
        circuits = float(s["overflow"][:done].sum())
        lot = sim.lot
        return on_street + (circuits * lot.circuit_time if lot else 0.0)

    def total_travel_time(self) -> float:
        sim = self.sim
        return float(sim._series["active"][: sim.step_i].sum()) * sim.dt / 3600.0

    def realized_n_c(self, lo: int, n: int) -> np.ndarray:
        sim = self.sim
        hi = min((lo + n) * self._bin, sim.step_i)
        block = sim._series["n_iv"][lo * self._bin : hi]
        usable = (len(block) // self._bin) * self._bin
        return block[:usable].reshape(-1, self._bin).mean(axis=1)


@dataclass
class MpcIteration:
    t_hr: float
    applied: tuple[float, float]
    predicted_objective: float
    evaluations: int
    predicted_n_c: np.ndarray
    realized_n_c: np.ndarray | None


@dataclass
class MpcRunLog:
    iterations: list[MpcIteration]
    applied_schedule: PricingSchedule
    plant_ineffective_cruising: float
    plant_total_travel_time: float


def mpc_loop(
    plant,
    params: MacroParams,
    config: MpcConfig,
    park_forecast: np.ndarray,
    pass_forecast: np.ndarray,
    horizon: float,
    base_prices: tuple[float, float] = (0.0, 0.0),
) -> MpcRunLog:
    """Closed-loop rolling-horizon control of ``plant``.

    ``park_forecast``/``pass_forecast`` are per-macro-step expected inflows
    over the full horizon (the known-demand assumption); the forecast beyond
    the horizon is zero-padded. The first optimized interval is applied at
    every control boundary.
    """
    park_forecast = np.asarray(park_forecast, dtype=float)
    pass_forecast = np.asarray(pass_forecast, dtype=float)
    steps_per = int(round(config.control_interval / config.dt_macro))
    horizon_steps = int(round(config.prediction_horizon / config.dt_macro))
    n_controls = int(round(horizon / config.control_interval))
    applied: list[tuple[float, float]] = []
    iterations: list[MpcIteration] = []
    prior = base_prices

    for K in range(n_controls):
        lo = K * steps_per
        park = park_forecast[lo : lo + horizon_steps]
        pazz = pass_forecast[lo : lo + horizon_steps]
        if len(park) < horizon_steps:
            pad = horizon_steps - len(park)
            park = np.concatenate([park, np.zeros(pad)])
            pazz = np.concatenate([pazz, np.zeros(pad)])
        state = plant.read_state()
        sol = solve_open_loop(state, park, pazz, params, config, prior, base_prices)
        tau_on, tau_off = sol.schedule.prices[0]
        rows = sol.schedule.per_step(config.dt_macro, horizon_steps)
        pred = simulate_macro(park, pazz, rows, params, initial_state=state)
        plant.set_prices(tau_on, tau_off)
        plant.advance(config.control_interval)
        realized = None
        if hasattr(plant, "realized_n_c"):
            realized = plant.realized_n_c(lo, steps_per)
        iterations.append(
            MpcIteration(
                t_hr=K * config.control_interval,
                applied=(tau_on, tau_off),
                predicted_objective=sol.objective,
                evaluations=sol.evaluations,
                predicted_n_c=pred.n_c[:steps_per],  # step starts, as the objective counts
                realized_n_c=realized,
            )
        )
        applied.append((tau_on, tau_off))
        prior = (tau_on, tau_off)

    schedule = PricingSchedule(
        interval_hr=config.control_interval,
        prices=tuple(applied),
        tau_min=config.tau_min,
        tau_max=config.tau_max,
        tau_gap=config.tau_gap,
    )
    return MpcRunLog(
        iterations=iterations,
        applied_schedule=schedule,
        plant_ineffective_cruising=plant.ineffective_cruising(),
        plant_total_travel_time=plant.total_travel_time(),
    )

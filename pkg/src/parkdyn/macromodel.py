"""Deterministic accumulation-based parking dynamics.

Six vehicle families exchange flows each step: three moving families (to
on-street parking, to the off-street lot, passing through), one cruising
family, and the two parked pools. Speeds come from a fitted NFD, outflows
from Little's formula, re-departures from the parking-duration distribution,
and a full lot spills searchers back onto the street after a fixed circuit
delay. All flows are fractional (veh per step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import DistanceModel, evaluate_clamped
from .network import DurationDistribution


class ConservationError(RuntimeError):
    """Per-step mass balance failed beyond numerical tolerance."""


@dataclass(frozen=True)
class NfdModel:
    """Three-parameter logistic speed-accumulation curve."""

    v0: float  # km/hr
    n0: float  # veh
    w: float  # veh

    def __post_init__(self):
        if self.v0 <= 0 or self.w <= 0:
            raise ValueError("need v0 > 0 and w > 0")


def nfd_speed(model: NfdModel, n: float) -> float:
    if n < 0:
        raise ValueError("accumulation must be >= 0")
    z = (n - model.n0) / model.w
    if z > 700.0:
        return 0.0
    return model.v0 / (1.0 + math.exp(z))


@dataclass(frozen=True)
class MacroParams:
    nfd: NfdModel
    distance_model: DistanceModel  # occupancy -> expected cruise distance, km
    duration: DurationDistribution
    N_on: int
    N_off: int
    l_m_on: float  # km, mean moving distance of to-on-street vehicles
    l_m_off: float
    l_m_pass: float
    l_off: float  # km, one circuit of the lot
    v_on_f: float  # km/hr, desired on-street cruising speed
    v_off_f: float  # km/hr, in-lot cruising speed
    dt: float  # hr
    alpha_on: float = 0.0
    alpha_off: float = 0.0
    beta: float = 0.0  # 1/$, fee coefficient of the binary choice model

    def __post_init__(self):
        if min(self.N_on, self.N_off) < 0:
            raise ValueError("capacities must be >= 0")
        if min(self.l_m_on, self.l_m_off, self.l_m_pass, self.l_off) <= 0:
            raise ValueError("distances must be > 0")
        if min(self.v_on_f, self.v_off_f) <= 0 or self.dt <= 0:
            raise ValueError("speeds and dt must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    @property
    def k_off(self) -> int:
        """Circuit delay in steps: nearest integer (half-up) to l_off/(v_off_f dt)."""
        return int(math.floor(self.l_off / (self.v_off_f * self.dt) + 0.5))

    def redeparture_weights(self, n_steps: int) -> np.ndarray:
        return np.asarray(self.duration.step_weights(self.dt, n_steps))


@dataclass
class MacroState:
    """Accumulations at the end of step k plus the flow histories that the
    re-departure sums and the delayed lot-overflow term need.

    History arrays are step-indexed from 1; index 0 is padding so that
    ``o_c_hist[i]`` is the flow of step i.
    """

    n_m_off: float = 0.0
    n_m_on: float = 0.0
    n_m_pass: float = 0.0
    n_c: float = 0.0
    n_off: float = 0.0
    n_on: float = 0.0
    k: int = 0
    o_c_hist: list[float] = field(default_factory=lambda: [0.0])
    o_m_off_hist: list[float] = field(default_factory=lambda: [0.0])
    q_off_on_hist: list[float] = field(default_factory=lambda: [0.0])
    q_out_off_hist: list[float] = field(default_factory=lambda: [0.0])
    q_out_on_hist: list[float] = field(default_factory=lambda: [0.0])
    cum_inflow: float = 0.0
    cum_exit: float = 0.0

    def n_active(self) -> float:
        return self.n_m_off + self.n_m_on + self.n_m_pass + self.n_c

    def in_circuit(self, k_off: int) -> float:
        """Vehicles currently cruising out of the full lot (overflow pipeline)."""
        lo = max(1, self.k - k_off + 1)
        return sum(self.q_off_on_hist[lo : self.k + 1])

    def copy(self) -> "MacroState":
        return MacroState(
            self.n_m_off,
            self.n_m_on,
            self.n_m_pass,
            self.n_c,
            self.n_off,
            self.n_on,
            self.k,
            list(self.o_c_hist),
            list(self.o_m_off_hist),
            list(self.q_off_on_hist),
            list(self.q_out_off_hist),
            list(self.q_out_on_hist),
            self.cum_inflow,
            self.cum_exit,
        )


def split_demand(
    total_inflow: float, tau_on: float, tau_off: float, params: MacroParams
) -> tuple[float, float]:
    """Binary-logit split of parking demand between on- and off-street."""
    if total_inflow < 0:
        raise ValueError("inflow must be >= 0")
    u_on = params.alpha_on - params.beta * tau_on
    u_off = params.alpha_off - params.beta * tau_off
    share_on = 1.0 / (1.0 + math.exp(u_off - u_on))
    return total_inflow * share_on, total_inflow * (1.0 - share_on)


def redeparture_flows(
    o_c_hist,
    o_m_off_hist,
    q_off_on_hist,
    duration: DurationDistribution,
    k: int,
    dt: float,
) -> tuple[float, float]:
    """Expected re-departures during step k from every past parked cohort.

    Histories are sequences with ``hist[i]`` the flow of step i (index 0
    padding). The off-street cohort of step i is the arrivals that actually
    parked, o_m_off(i) - q_off_on(i).
    """
    if k < 2:
        return 0.0, 0.0
    q_on = 0.0
    q_off = 0.0
    for i in range(2, k + 1):
        w = duration.cdf((k - i + 1) * dt) - duration.cdf((k - i) * dt)
        if w == 0.0:
            continue
        q_on += o_c_hist[i - 1] * w
        q_off += (o_m_off_hist[i - 1] - q_off_on_hist[i - 1]) * w
    return q_on, q_off


def redeparture_flows_uniform(
    o_c_hist, o_m_off_hist, q_off_on_hist, horizon: float, k: int, dt: float
) -> tuple[float, float]:
    """Simplified re-departure flows for a uniform duration on [0, horizon]:
    every parked cohort re-departs at the constant rate dt/horizon."""
    if k < 2:
        return 0.0, 0.0
    rate = dt / horizon
    q_on = rate * sum(o_c_hist[1:k])
    q_off = rate * (sum(o_m_off_hist[1:k]) - sum(q_off_on_hist[1:k]))
    return q_on, q_off


def overflow(
    o_m_off: float,
    n_m_off_prev: float,
    q_in_off: float,
    n_off_prev: float,
    q_out_off: float,
    params: MacroParams,
) -> tuple[float, int]:
    """Vehicles pushed back to on-street search by a full lot, and the
    circuit delay in steps after which they reappear."""
    entering = min(o_m_off, n_m_off_prev + q_in_off)
    free = params.N_off - n_off_prev + q_out_off
    return max(0.0, entering - free), params.k_off


def productions_and_outflows(
    state: MacroState,
    params: MacroParams,
    q_in_on: float,
    q_in_off: float,
    q_in_pass: float,
    q_out_on: float,
    q_out_off: float,
    q_off_on_delayed: float,
) -> dict[str, float]:
    """Little's-formula transfer flows for one step, with capacity caps.

    The cruising outflow is capped by both the cruisers available this step
    and the free on-street spots (including spots vacated by this step's
    re-departures).
    """
    for name in ("n_m_off", "n_m_on", "n_m_pass", "n_c", "n_off", "n_on"):
        if getattr(state, name) < 0:
            raise ValueError(f"negative accumulation {name}")
    n = state.n_active()
    v = nfd_speed(params.nfd, n)
    v_on = min(params.v_on_f, v)
    P_c = state.n_c * v_on
    P_m = n * v - P_c
    O_on = state.n_on / params.N_on if params.N_on > 0 else 0.0
    l_c = evaluate_clamped(params.distance_model, O_on)

    dt = params.dt
    n_m_sum = state.n_m_off + state.n_m_on + state.n_m_pass
    if n_m_sum > 0.0:
        share = P_m * dt / n_m_sum
        o_m_off = min(share * state.n_m_off / params.l_m_off, state.n_m_off + q_in_off)
        o_m_on = min(share * state.n_m_on / params.l_m_on, state.n_m_on + q_in_on)
        o_m_pass = min(
            share * state.n_m_pass / params.l_m_pass,
            state.n_m_pass + q_in_pass + q_out_on + q_out_off,
        )
    else:
        o_m_off = o_m_on = o_m_pass = 0.0

    q_off_on, _ = overflow(o_m_off, state.n_m_off, q_in_off, state.n_off, q_out_off, params)

    o_c_raw = P_c * dt / l_c if l_c > 0 else float("inf")
    cap_avail = state.n_c + q_off_on_delayed + o_m_on
    cap_spots = params.N_on - state.n_on + q_out_on
    o_c = min(o_c_raw, cap_avail, cap_spots)
    o_c = max(0.0, o_c)

    return {
        "o_c": o_c,
        "o_m_on": o_m_on,
        "o_m_off": o_m_off,
        "o_m_pass": o_m_pass,
        "q_off_on": q_off_on,
        "P_c": P_c,
        "P_m": P_m,
        "v": v,
        "O_on": O_on,
        "l_c": l_c,
        "o_c_spot_capped": o_c_raw > cap_spots or cap_avail > cap_spots,
    }


def _settle(x: float, scale: float) -> float:
    # float dust from the balance arithmetic, not a logic clamp
    if x < 0.0:
        if x < -1e-9 * max(1.0, scale):
            raise ConservationError(f"negative accumulation {x}")
        return 0.0
    return x


def macro_step(
    state: MacroState,
    q_in_on: float,
    q_in_off: float,
    q_in_pass: float,
    params: MacroParams,
    redeparture_weights: np.ndarray | None = None,
) -> dict[str, float]:
    """Advance the state by one step (in place) and return the step's flows.

    ``redeparture_weights`` may carry precomputed per-lag duration-CDF
    increments; otherwise they are derived from the duration distribution.
    """
    if min(q_in_on, q_in_off, q_in_pass) < 0:
        raise ValueError("inflows must be >= 0")
    k = state.k + 1

    if redeparture_weights is not None and k >= 2:
        h_on = np.asarray(state.o_c_hist[1:k])
        h_off = np.asarray(state.o_m_off_hist[1:k]) - np.asarray(state.q_off_on_hist[1:k])
        w_rev = redeparture_weights[k - 2 :: -1]
        q_out_on = float(np.dot(h_on, w_rev))
        q_out_off = float(np.dot(h_off, w_rev))
    else:
        q_out_on, q_out_off = redeparture_flows(
            state.o_c_hist, state.o_m_off_hist, state.q_off_on_hist, params.duration, k, params.dt
        )

    k_off = params.k_off
    if k_off == 0:
        delayed_known = None  # equals this step's overflow, resolved below
    else:
        i = k - k_off
        delayed_known = state.q_off_on_hist[i] if i >= 1 else 0.0

    flows = productions_and_outflows(
        state,
        params,
        q_in_on,
        q_in_off,
        q_in_pass,
        q_out_on,
        q_out_off,
        delayed_known if delayed_known is not None else 0.0,
    )
    if delayed_known is None:
        delayed = flows["q_off_on"]
        if delayed > 0.0:
            flows = productions_and_outflows(
                state, params, q_in_on, q_in_off, q_in_pass, q_out_on, q_out_off, delayed
            )
    else:
        delayed = delayed_known

    o_c = flows["o_c"]
    o_m_on = flows["o_m_on"]
    o_m_off = flows["o_m_off"]
    o_m_pass = flows["o_m_pass"]
    q_off_on = flows["q_off_on"]

    scale = state.cum_inflow + q_in_on + q_in_off + q_in_pass
    state.n_m_off = _settle(state.n_m_off + q_in_off - o_m_off, scale)
    state.n_m_on = _settle(state.n_m_on + q_in_on - o_m_on, scale)
    state.n_m_pass = _settle(
        state.n_m_pass + q_in_pass + q_out_on + q_out_off - o_m_pass, scale
    )
    state.n_c = _settle(state.n_c + delayed + o_m_on - o_c, scale)
    n_off_new = _settle(state.n_off + o_m_off - q_off_on - q_out_off, scale)
    if q_off_on > 0.0:
        n_off_new = min(n_off_new, float(params.N_off))
    state.n_off = n_off_new
    n_on_new = _settle(state.n_on + o_c - q_out_on, scale)
    if flows["o_c_spot_capped"]:
        n_on_new = min(n_on_new, float(params.N_on))
    state.n_on = n_on_new

    state.k = k
    state.o_c_hist.append(o_c)
    state.o_m_off_hist.append(o_m_off)
    state.q_off_on_hist.append(q_off_on)
    state.q_out_off_hist.append(q_out_off)
    state.q_out_on_hist.append(q_out_on)
    state.cum_inflow += q_in_on + q_in_off + q_in_pass
    state.cum_exit += o_m_pass

    total = (
        state.n_m_off
        + state.n_m_on
        + state.n_m_pass
        + state.n_c
        + state.n_off
        + state.n_on
        + state.in_circuit(k_off)
        + state.cum_exit
    )
    residual = abs(total - state.cum_inflow)
    if residual > 1e-9 * max(1.0, state.cum_inflow):
        raise ConservationError(f"step {k}: conservation residual {residual}")

    out = dict(flows)
    out.update(q_out_on=q_out_on, q_out_off=q_out_off, q_off_on_delayed=delayed)
    return out


@dataclass
class MacroTrajectories:
    """Per-step time series of one macro run; accumulations include t=0."""

    t: np.ndarray  # hr, len n_steps+1
    n_m_on: np.ndarray
    n_m_off: np.ndarray
    n_m_pass: np.ndarray
    n_c: np.ndarray
    n_on: np.ndarray
    n_off: np.ndarray
    n: np.ndarray
    v: np.ndarray
    O_on: np.ndarray
    o_c: np.ndarray  # len n_steps
    q_off_on: np.ndarray
    q_out_on: np.ndarray
    q_out_off: np.ndarray
    final_state: "MacroState | None" = None

    @property
    def n_steps(self) -> int:
        return len(self.o_c)


def simulate_macro(
    park_inflow,
    pass_inflow,
    prices,
    params: MacroParams,
    initial_state: MacroState | None = None,
) -> MacroTrajectories:
    """Run the mass-conservation system over a demand and price profile.

    ``park_inflow``/``pass_inflow`` are per-step totals (veh/step);
    ``prices`` has one (tau_on, tau_off) row per step. The parking inflow is
    split on/off-street by the choice model at each step's prices.
    """
    park_inflow = np.asarray(park_inflow, dtype=float)
    pass_inflow = np.asarray(pass_inflow, dtype=float)
    prices = np.asarray(prices, dtype=float).reshape(len(park_inflow), 2)
    if len(pass_inflow) != len(park_inflow):
        raise ValueError("demand profiles must have equal length")
    n_steps = len(park_inflow)
    state = initial_state.copy() if initial_state is not None else MacroState()
    weights = params.redeparture_weights(state.k + n_steps)

    acc = {
        name: np.empty(n_steps + 1)
        for name in ("n_m_on", "n_m_off", "n_m_pass", "n_c", "n_on", "n_off", "n", "v", "O_on")
    }
    flow = {name: np.empty(n_steps) for name in ("o_c", "q_off_on", "q_out_on", "q_out_off")}

    def record_acc(i):
        acc["n_m_on"][i] = state.n_m_on
        acc["n_m_off"][i] = state.n_m_off
        acc["n_m_pass"][i] = state.n_m_pass
        acc["n_c"][i] = state.n_c
        acc["n_on"][i] = state.n_on
        acc["n_off"][i] = state.n_off
        acc["n"][i] = state.n_active()
        acc["v"][i] = nfd_speed(params.nfd, state.n_active())
        acc["O_on"][i] = state.n_on / params.N_on if params.N_on > 0 else 0.0

    record_acc(0)
    for i in range(n_steps):
        q_in_on, q_in_off = split_demand(park_inflow[i], prices[i, 0], prices[i, 1], params)
        flows = macro_step(state, q_in_on, q_in_off, pass_inflow[i], params, weights)
        flow["o_c"][i] = flows["o_c"]
        flow["q_off_on"][i] = flows["q_off_on"]
        flow["q_out_on"][i] = flows["q_out_on"]
        flow["q_out_off"][i] = flows["q_out_off"]
        record_acc(i + 1)

    t = params.dt * np.arange(n_steps + 1)
    return MacroTrajectories(t=t, **acc, **flow, final_state=state)


def uniform_profile(total: float, n_steps: int) -> np.ndarray:
    """Per-step inflow of a demand spread uniformly over the horizon."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return np.full(n_steps, total / n_steps)

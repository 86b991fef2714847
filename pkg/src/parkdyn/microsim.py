"""Discrete-time mesoscopic simulator of parking search on a road network.

Vehicles belong to one of six parking-related families:

  i    moving toward an on-street target
  ii   moving toward the off-street lot
  iii  in transit (passing through, or re-departed after parking)
  iv   cruising for an on-street spot
  v    parked on street
  vi   parked off street

Link dynamics are mesoscopic: per-link Greenshields speed from the density of
the other vehicles on the link, with single-lane links capped at the slowest
cruiser's desired speed (moving-bottleneck approximation). Parked vehicles
occupy spots but not road space. A run is fully determined by
(network, scenario, seed).
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, field, asdict
from typing import NamedTuple

import numpy as np

from .network import (
    DurationDistribution,
    Network,
    TripChain,
    greenshields_speed,
)

FAMILIES = ("i", "ii", "iii", "iv", "v", "vi")
ALLOWED_TRANSITIONS = frozenset(
    {
        ("new", "i"),
        ("new", "ii"),
        ("new", "iii"),
        ("i", "v"),
        ("i", "iv"),
        ("iv", "v"),
        ("v", "iii"),
        ("ii", "vi"),
        ("ii", "iv"),
        ("vi", "iii"),
        ("iii", "exited"),
    }
)


class TopologyError(RuntimeError):
    """The search reached a node it cannot leave."""


@dataclass(frozen=True)
class GuidanceConfig:
    local_guidance: bool = False
    regional_guidance: bool = False
    regional_threshold: float = 0.95
    compliance: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.compliance <= 1.0):
            raise ValueError("compliance must lie in [0, 1]")


DEMAND_PROFILES = ("uniform", "ramp-up", "ramp-down")


@dataclass(frozen=True)
class ScenarioConfig:
    """Demand, choice, and run-control parameters of one micro scenario."""

    parker_count: int = 0
    passer_count: int = 0
    parker_profile: str = "uniform"
    passer_profile: str = "uniform"
    tau_on: float = 0.0  # $ per parking event
    tau_off: float = 0.0
    alpha_on: float = 0.0  # location attractions (utility units)
    alpha_off: float = 0.0
    beta: float = 0.0  # 1/$
    duration: DurationDistribution = field(default_factory=DurationDistribution)
    cruise_speed: float = 30.0  # km/hr set value; drawn +- jitter per driver
    cruise_speed_jitter: float = 5.0
    desired_speed: float = 50.0
    desired_speed_jitter: float = 5.0
    captive_spots: int = 0
    preoccupied_spots: int = 0
    vacate_per_minute: float = 0.0
    dt_sim: float = 1.0  # s
    horizon: float = 1.0  # hr
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    reeval_period: float = 30.0  # s between mid-link search re-evaluations
    gridlock_steps: int = 600

    def __post_init__(self):
        if self.parker_count < 0 or self.passer_count < 0:
            raise ValueError("demand counts must be >= 0")
        if self.parker_profile not in DEMAND_PROFILES or self.passer_profile not in DEMAND_PROFILES:
            raise ValueError(f"demand profiles must be one of {DEMAND_PROFILES}")
        if self.dt_sim <= 0 or self.horizon <= 0:
            raise ValueError("dt_sim and horizon must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ScenarioConfig":
        d = dict(d)
        if isinstance(d.get("duration"), dict):
            dd = d["duration"]
            d["duration"] = DurationDistribution(
                kind=dd.get("kind", "uniform"),
                lo=dd.get("lo", 0.0),
                hi=dd.get("hi", 1.0),
                xs=tuple(dd.get("xs", ())),
                cdf_values=tuple(dd.get("cdf_values", ())),
            )
        if isinstance(d.get("guidance"), dict):
            d["guidance"] = GuidanceConfig(**d["guidance"])
        return ScenarioConfig(**d)

    @staticmethod
    def load(path) -> "ScenarioConfig":
        with open(path) as fh:
            return ScenarioConfig.from_dict(json.load(fh))


class Event(NamedTuple):
    vehicle_id: int
    t_s: float
    from_family: str
    to_family: str
    link_id: str
    dist_km: float  # cumulative distance in the departing family
    occ_on: float
    occ_off: float


class VehicleRecord(NamedTuple):
    """Per-vehicle aggregates accumulated during the run."""

    vehicle_id: int
    purpose: str  # park-on | park-off | pass (realized choice)
    entry_s: float
    family_end: str
    parked: bool
    dist_total: float
    dist_iv: float
    circuits: int
    drive_time_s: float
    freeflow_time_s: float


def choose_parking_alternative(fees, attractions, beta: float, rng) -> tuple[int, list[float]]:
    """Multinomial-logit draw over parking alternatives.

    Utility of alternative a is attraction_a - beta * fee_a. Returns the
    sampled index and the full probability vector.
    """
    fees = list(fees)
    attractions = list(attractions)
    if not fees or len(fees) != len(attractions):
        raise ValueError("need matching, non-empty fees and attractions")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    utils = [a - beta * f for f, a in zip(fees, attractions)]
    top = max(utils)
    weights = [math.exp(u - top) for u in utils]
    total = sum(weights)
    probs = [w / total for w in weights]
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u <= acc:
            return i, probs
    return len(probs) - 1, probs


def apply_regional_guidance(
    regional_occupancy: float, config: GuidanceConfig, rng, compliant: bool | None = None
) -> bool:
    """True when the driver diverts away from the saturated region.

    Compliance may be resolved per driver (``compliant``) or drawn per call
    from the configured compliance fraction.
    """
    if regional_occupancy <= config.regional_threshold:
        return False
    if compliant is not None:
        return compliant
    return rng.random() < config.compliance


class _Vehicle:
    __slots__ = (
        "vid",
        "trip",
        "purpose",
        "family",
        "link",
        "pos",
        "route",
        "route_i",
        "target_link",
        "dist_family",
        "dist_total",
        "dist_iv",
        "drive_time_s",
        "freeflow_time_s",
        "circuits",
        "compliant",
        "next_recheck_s",
        "parked_link",
        "ever_parked",
    )

    def __init__(self, vid, trip, compliant):
        self.vid = vid
        self.trip = trip
        self.purpose = trip.purpose
        self.family = "new"
        self.link = None
        self.pos = 0.0
        self.route = []
        self.route_i = 0
        self.target_link = None
        self.dist_family = 0.0
        self.dist_total = 0.0
        self.dist_iv = 0.0
        self.drive_time_s = 0.0
        self.freeflow_time_s = 0.0
        self.circuits = 0
        self.compliant = compliant
        self.next_recheck_s = 0.0
        self.parked_link = None
        self.ever_parked = False


@dataclass
class RunResult:
    """Event log, per-step series, vehicle table, and summary of one run."""

    events: list[Event]
    series: dict[str, np.ndarray]
    vehicles: list[VehicleRecord]
    seed: int
    dt_sim: float
    horizon: float
    network_length: float
    l_off: float
    v_off_f: float
    summary: dict

    def ineffective_cruising_time(self) -> float:
        """veh-hr cruising on street plus full-lot circuit deadweight."""
        on_street = float(self.series["n_iv"].sum()) * self.dt_sim / 3600.0
        circuits = float(self.series["overflow"].sum())
        return on_street + circuits * self.l_off / self.v_off_f


class Simulation:
    """One deterministic replication; advance with step() or run()."""

    def __init__(self, network: Network, scenario: ScenarioConfig, seed: int):
        self.net = network
        self.sc = scenario
        self.seed = seed
        self.dt = scenario.dt_sim
        self.dt_hr = self.dt / 3600.0
        self.n_steps = int(round(scenario.horizon * 3600.0 / self.dt))
        self.t = 0.0
        self.step_i = 0
        self.tau_on = scenario.tau_on
        self.tau_off = scenario.tau_off

        self.rng_search = random.Random(f"{seed}-search")
        self.rng_choice = random.Random(f"{seed}-choice")
        rng = random.Random(f"{seed}-demand")

        self.lot = next(iter(sorted(network.lots))) if network.lots else None
        if self.lot is not None:
            self.lot = network.lots[self.lot]
        self.lot_occ = 0
        self.capacity = network.total_parking_capacity
        self.free = {lid: ln.parking_capacity for lid, ln in network.links.items()}
        self.occupied_on = 0
        self.region_occ = {r: 0 for r in network.regions()}
        self.region_cap = {r: network.region_capacity(r) for r in network.regions()}
        self.link_region = network.region_assignment
        self.supply_links = sorted(
            lid for lid, ln in network.links.items() if ln.parking_capacity > 0
        )
        if scenario.parker_count and not self.supply_links and self.lot is None:
            raise ValueError("parkers scheduled but the network has no parking supply")

        boundary = list(network.boundary_nodes())
        if not boundary:
            boundary = sorted(network.nodes)
        self._build_demand(rng, boundary)
        self._block_spots(rng)

        self.occupants: dict[str, list[_Vehicle]] = {lid: [] for lid in network.links}
        self.link_order = sorted(network.links)
        self.parked_heap: list = []  # (depart_t_s, seq, vehicle)
        self.circuit_heap: list = []  # (exit_t_s, seq, vehicle)
        self._seq = 0
        self._sweeping = False
        self._entered: list[tuple[str, _Vehicle]] = []
        self.events: list[Event] = []
        self.vehicles: list[_Vehicle] = []
        self.injected = 0
        self.exited = 0
        self.cur_parked_on = 0  # vehicles currently in family v
        self.parked_on_total = 0
        self.parked_off_total = 0
        self.still_steps = 0
        self.gridlock = False

        names = (
            "t_s",
            "dist_km",
            "active",
            "n_i",
            "n_ii",
            "n_iii",
            "n_iv",
            "n_on",
            "n_off",
            "in_circuit",
            "occ_on",
            "occ_off",
            "parked_on",
            "parked_off",
            "overflow",
        )
        self._series = {k: np.zeros(self.n_steps) for k in names}

    # ------------------------------------------------------------- setup

    def _build_demand(self, rng, boundary):
        sc = self.sc
        horizon_s = sc.horizon * 3600.0

        def draw(profile):
            u = rng.random()
            if profile == "ramp-up":  # arrival density rising linearly from zero
                u = math.sqrt(u)
            elif profile == "ramp-down":
                u = 1.0 - math.sqrt(1.0 - u)
            return u * horizon_s

        arrivals = []
        for n, purpose, profile in (
            (sc.parker_count, "park", sc.parker_profile),
            (sc.passer_count, "pass", sc.passer_profile),
        ):
            times = sorted(draw(profile) for _ in range(n))
            arrivals.extend((t, purpose) for t in times)
        arrivals.sort()
        self.pending: list[_Vehicle] = []
        for vid, (t_s, purpose) in enumerate(arrivals):
            origin = rng.choice(boundary)
            others = [b for b in boundary if b != origin]
            dest = rng.choice(others) if others else origin
            duration = sc.duration.sample(rng) if purpose == "park" else 0.0
            trip = TripChain(
                vehicle_id=vid,
                entry_time=t_s,
                origin=origin,
                destination=dest,
                purpose="park-on" if purpose == "park" else "pass",
                parking_duration=duration,
                desired_speed=rng.uniform(
                    sc.desired_speed - sc.desired_speed_jitter,
                    sc.desired_speed + sc.desired_speed_jitter,
                ),
                desired_cruise_speed=rng.uniform(
                    sc.cruise_speed - sc.cruise_speed_jitter,
                    sc.cruise_speed + sc.cruise_speed_jitter,
                ),
            )
            self.pending.append(_Vehicle(vid, trip, rng.random() < sc.guidance.compliance))
        self.pending.reverse()  # pop from the back in time order

    def _block_spots(self, rng):
        sc = self.sc
        need = sc.captive_spots + sc.preoccupied_spots
        if need > self.capacity:
            raise ValueError("captive + preoccupied spots exceed on-street capacity")
        slots: list[str] = []
        if need:
            pool = [
                lid
                for lid in self.supply_links
                for _ in range(self.net.links[lid].parking_capacity)
            ]
            rng.shuffle(pool)
            slots = pool[:need]
            for lid in slots:
                self._take_spot(lid)
        vacatable = slots[sc.captive_spots :]
        self.vacate_schedule: list[tuple[float, str]] = []
        if vacatable and sc.vacate_per_minute > 0:
            gap_s = 60.0 / sc.vacate_per_minute
            self.vacate_schedule = [((i + 1) * gap_s, lid) for i, lid in enumerate(vacatable)]
            self.vacate_schedule.reverse()

    # ------------------------------------------------------- spot helpers

    def _take_spot(self, lid):
        self.free[lid] -= 1
        self.occupied_on += 1
        self.region_occ[self.link_region[lid]] += 1

    def _free_spot(self, lid):
        self.free[lid] += 1
        self.occupied_on -= 1
        self.region_occ[self.link_region[lid]] -= 1

    def occ_on(self) -> float:
        return self.occupied_on / self.capacity if self.capacity else 0.0

    def occ_off(self) -> float:
        return self.lot_occ / self.lot.capacity if self.lot and self.lot.capacity else 0.0

    def regional_occupancy(self, region: int) -> float:
        cap = self.region_cap.get(region, 0)
        return self.region_occ.get(region, 0) / cap if cap else 0.0

    # ---------------------------------------------------------- logging

    def _log(self, veh: _Vehicle, to_family: str, link_id: str):
        if (veh.family, to_family) not in ALLOWED_TRANSITIONS:
            raise RuntimeError(f"illegal family transition {veh.family}->{to_family}")
        self.events.append(
            Event(
                veh.vid,
                self.t,
                veh.family,
                to_family,
                link_id,
                veh.dist_family,
                self.occ_on(),
                self.occ_off(),
            )
        )
        if veh.family == "iv":
            veh.dist_iv += veh.dist_family
        veh.family = to_family
        veh.dist_family = 0.0

    # ------------------------------------------------------- search logic

    def set_prices(self, tau_on: float, tau_off: float):
        """Prices seen by parkers arriving from now on."""
        self.tau_on = tau_on
        self.tau_off = tau_off

    def _candidates(self, veh: _Vehicle, node_id: int) -> list[str]:
        node = self.net.nodes[node_id]
        outs = self.net.out_links[node_id]
        if not outs:
            raise TopologyError(f"dead-end node {node_id}")
        reverse = self.net.reverse_link(veh.link) if veh.link else None
        cands = [lid for lid in outs if node.allows_u_turn or lid != reverse]
        if not cands:
            cands = list(outs)
        gc = self.sc.guidance
        if gc.regional_guidance:
            here = self.link_region.get(veh.link) if veh.link else None
            kept = [
                lid
                for lid in cands
                if self.link_region[lid] == here
                or not apply_regional_guidance(
                    self.regional_occupancy(self.link_region[lid]),
                    gc,
                    self.rng_search,
                    veh.compliant,
                )
            ]
            if kept:
                cands = kept
        return cands

    def local_search_step(self, veh: _Vehicle, node_id: int) -> str:
        """Next-link choice of a cruising vehicle at an intersection."""
        cands = self._candidates(veh, node_id)
        rng = self.rng_search
        links = self.net.links
        if self.sc.guidance.local_guidance:
            free = [lid for lid in cands if self.free[lid] > 0 and links[lid].parking_capacity > 0]
            if free:
                occ = [
                    (links[lid].parking_capacity - self.free[lid]) / links[lid].parking_capacity
                    for lid in free
                ]
                best = min(occ)
                ties = [lid for lid, o in zip(free, occ) if o == best]
                return ties[0] if len(ties) == 1 else rng.choice(ties)
            return cands[0] if len(cands) == 1 else rng.choice(cands)
        supplied = [lid for lid in cands if links[lid].parking_capacity > 0]
        pool = supplied if supplied else cands
        return pool[0] if len(pool) == 1 else rng.choice(pool)

    # ------------------------------------------------------- state moves

    def _place(self, veh: _Vehicle, lid: str):
        veh.link = lid
        veh.pos = 0.0
        if self._sweeping:
            self._entered.append((lid, veh))
        else:
            self.occupants[lid].append(veh)

    def _enter_link(self, veh: _Vehicle, lid: str):
        """Move onto a link; searching vehicles park on entry if a spot is free."""
        if veh.family == "i" and lid == veh.target_link:
            if self.free[lid] > 0:
                self._park_on(veh, lid)
                return
            self._log(veh, "iv", lid)  # target full: the on-street search begins
            veh.next_recheck_s = self.t + self.sc.reeval_period
        elif veh.family == "iv":
            if self.free[lid] > 0 and self.net.links[lid].parking_capacity > 0:
                self._park_on(veh, lid)
                return
            veh.next_recheck_s = self.t + self.sc.reeval_period
        self._place(veh, lid)

    def _park_on(self, veh: _Vehicle, lid: str):
        self._take_spot(lid)
        self._log(veh, "v", lid)
        veh.link = None
        veh.parked_link = lid
        veh.ever_parked = True
        self.cur_parked_on += 1
        self.parked_on_total += 1
        self._series["parked_on"][self.step_i] += 1
        self._seq += 1
        heapq.heappush(
            self.parked_heap, (self.t + veh.trip.parking_duration * 3600.0, self._seq, veh)
        )

    def _arrive_lot(self, veh: _Vehicle):
        lot = self.lot
        if self.lot_occ < lot.capacity:
            self.lot_occ += 1
            self._log(veh, "vi", lot.id)
            veh.link = None
            veh.ever_parked = True
            self.parked_off_total += 1
            self._series["parked_off"][self.step_i] += 1
            self._seq += 1
            heapq.heappush(
                self.parked_heap, (self.t + veh.trip.parking_duration * 3600.0, self._seq, veh)
            )
        else:
            veh.circuits += 1
            veh.link = None
            self._series["overflow"][self.step_i] += 1
            self._seq += 1
            heapq.heappush(self.circuit_heap, (self.t + lot.circuit_time * 3600.0, self._seq, veh))

    def _route_to_exit(self, veh: _Vehicle, from_node: int):
        dest = veh.trip.destination
        if from_node == dest:
            self._log(veh, "exited", "")
            self.exited += 1
            return
        veh.route = self.net.path_links(from_node, dest)
        veh.route_i = 0
        self._enter_link(veh, veh.route[0])

    def _arrival(self, veh: _Vehicle, lid: str):
        """Vehicle reached the end of ``lid``; route or search onwards."""
        node = self.net.links[lid].to_node
        fam = veh.family
        if fam == "iv":
            nxt = self.local_search_step(veh, node)
            veh.target_link = nxt
            self._enter_link(veh, nxt)
            return
        if fam == "ii" and veh.route_i == len(veh.route) - 1:
            self._arrive_lot(veh)
            return
        if fam == "iii" and veh.route_i == len(veh.route) - 1:
            self._log(veh, "exited", lid)
            self.exited += 1
            veh.link = None
            return
        veh.route_i += 1
        self._enter_link(veh, veh.route[veh.route_i])

    # ------------------------------------------------------------- step

    def _inject_due(self):
        while self.pending and self.pending[-1].trip.entry_time <= self.t:
            veh = self.pending.pop()
            trip = veh.trip
            self.injected += 1
            self.vehicles.append(veh)
            if trip.purpose == "pass":
                self._log(veh, "iii", "")
                veh.route = self.net.path_links(trip.origin, trip.destination)
                veh.route_i = 0
                self._enter_link(veh, veh.route[0])
                continue
            fees = [self.tau_on]
            attr = [self.sc.alpha_on]
            if self.lot is not None and self.supply_links:
                fees.append(self.tau_off)
                attr.append(self.sc.alpha_off)
                pick, _ = choose_parking_alternative(fees, attr, self.sc.beta, self.rng_choice)
            else:
                pick = 0 if self.supply_links else 1
            if pick == 0:
                veh.purpose = "park-on"
                target = self.rng_choice.choice(self.supply_links)
                veh.target_link = target
                self._log(veh, "i", target)
                head = self.net.path_links(trip.origin, self.net.links[target].from_node)
                veh.route = head + [target]
            else:
                veh.purpose = "park-off"
                entry = self.lot.entry_link
                self._log(veh, "ii", entry)
                head = self.net.path_links(trip.origin, self.net.links[entry].from_node)
                veh.route = head + [entry]
            veh.route_i = 0
            self._enter_link(veh, veh.route[0])

    def _circuit_exits(self):
        while self.circuit_heap and self.circuit_heap[0][0] <= self.t:
            _, _, veh = heapq.heappop(self.circuit_heap)
            veh.dist_total += self.lot.circuit_length
            veh.drive_time_s += self.lot.circuit_time * 3600.0
            entry = self.lot.entry_link
            self._log(veh, "iv", entry)
            veh.target_link = entry
            self._enter_link(veh, entry)

    def _redepartures(self):
        while self.parked_heap and self.parked_heap[0][0] <= self.t:
            _, _, veh = heapq.heappop(self.parked_heap)
            if veh.family == "v":
                self.cur_parked_on -= 1
                self._free_spot(veh.parked_link)
                self._log(veh, "iii", veh.parked_link)
                self._route_to_exit(veh, self.net.links[veh.parked_link].to_node)
            else:
                self.lot_occ -= 1
                self._log(veh, "iii", self.lot.id)
                self._route_to_exit(veh, self.net.links[self.lot.entry_link].to_node)

    def _vacate_due(self):
        while self.vacate_schedule and self.vacate_schedule[-1][0] <= self.t:
            _, lid = self.vacate_schedule.pop()
            self._free_spot(lid)

    def step(self):
        """Advance one dt: inject, move, park, cycle the lot, re-depart."""
        i = self.step_i
        self._inject_due()
        self._circuit_exits()

        dt_hr = self.dt_hr
        moved_any = False
        dist_sum = 0.0
        links = self.net.links
        self._sweeping = True
        for lid in self.link_order:
            occ = self.occupants[lid]
            if not occ:
                continue
            link = links[lid]
            k = (len(occ) - 1) / (link.length * link.lanes)
            eff = greenshields_speed(k, link.free_flow_speed, link.jam_density)
            if link.lanes == 1:
                for veh in occ:
                    if veh.family == "iv" and veh.trip.desired_cruise_speed < eff:
                        eff = veh.trip.desired_cruise_speed
            stay = []
            free_here = self.free
            for veh in occ:
                if (
                    veh.family == "iv"
                    and link.parking_capacity > 0
                    and free_here[lid] > 0
                    and self.t >= veh.next_recheck_s
                ):
                    self._park_on(veh, lid)  # a spot freed since entry
                    continue
                cap = (
                    veh.trip.desired_cruise_speed
                    if veh.family == "iv"
                    else veh.trip.desired_speed
                )
                v = eff if eff < cap else cap
                adv = v * dt_hr
                room = link.length - veh.pos
                arrived = adv >= room
                if arrived:
                    adv = room
                else:
                    veh.pos += adv
                    stay.append(veh)
                veh.dist_family += adv
                veh.dist_total += adv
                veh.drive_time_s += self.dt
                veh.freeflow_time_s += (
                    3600.0 * adv / min(link.free_flow_speed, veh.trip.desired_speed)
                )
                dist_sum += adv
                if adv > 0.0:
                    moved_any = True
                if arrived:
                    self._arrival(veh, lid)
            self.occupants[lid] = stay
        self._sweeping = False
        for lid, veh in self._entered:
            self.occupants[lid].append(veh)
        self._entered.clear()

        self._redepartures()
        self._vacate_due()

        s = self._series
        n_i = n_ii = n_iii = n_iv = active = 0
        for occ in self.occupants.values():
            for veh in occ:
                active += 1
                fam = veh.family
                if fam == "i":
                    n_i += 1
                elif fam == "ii":
                    n_ii += 1
                elif fam == "iii":
                    n_iii += 1
                else:
                    n_iv += 1
        s["t_s"][i] = self.t
        s["dist_km"][i] = dist_sum
        s["active"][i] = active
        s["n_i"][i] = n_i
        s["n_ii"][i] = n_ii
        s["n_iii"][i] = n_iii
        s["n_iv"][i] = n_iv
        s["n_on"][i] = self.cur_parked_on
        s["n_off"][i] = self.lot_occ
        s["in_circuit"][i] = len(self.circuit_heap)
        s["occ_on"][i] = self.occ_on()
        s["occ_off"][i] = self.occ_off()

        if active and not moved_any:
            self.still_steps += 1
            if self.still_steps >= self.sc.gridlock_steps:
                self.gridlock = True
        else:
            self.still_steps = 0

        self.step_i += 1
        self.t = self.step_i * self.dt

    def run_until(self, t_s: float):
        while self.step_i < self.n_steps and self.t < t_s - 1e-9:
            self.step()

    def check_conservation(self) -> bool:
        """injected == on-network + parked + in-lot-circuit + exited."""
        on_net = sum(len(v) for v in self.occupants.values())
        total = on_net + len(self.parked_heap) + len(self.circuit_heap) + self.exited
        return total == self.injected

    def run(self) -> RunResult:
        while self.step_i < self.n_steps:
            self.step()
        return self.result()

    def result(self) -> RunResult:
        records = [
            VehicleRecord(
                vehicle_id=v.vid,
                purpose=v.purpose,
                entry_s=v.trip.entry_time,
                family_end=v.family,
                parked=v.ever_parked,
                dist_total=v.dist_total,
                dist_iv=v.dist_iv + (v.dist_family if v.family == "iv" else 0.0),
                circuits=v.circuits,
                drive_time_s=v.drive_time_s,
                freeflow_time_s=v.freeflow_time_s,
            )
            for v in self.vehicles
        ]
        trimmed = {k: v[: self.step_i].copy() for k, v in self._series.items()}
        summary = {
            "seed": self.seed,
            "injected": self.injected,
            "exited": self.exited,
            "parked_on_total": self.parked_on_total,
            "parked_off_total": self.parked_off_total,
            "gridlock": self.gridlock,
            "on_street_capacity": self.capacity,
            "lot_capacity": self.lot.capacity if self.lot else 0,
            "network_length": self.net.total_length,
            "l_off": self.lot.circuit_length if self.lot else 0.0,
            "v_off_f": self.lot.internal_cruise_speed if self.lot else 1.0,
        }
        return RunResult(
            events=list(self.events),
            series=trimmed,
            vehicles=records,
            seed=self.seed,
            dt_sim=self.dt,
            horizon=self.sc.horizon,
            network_length=self.net.total_length,
            l_off=self.lot.circuit_length if self.lot else 0.0,
            v_off_f=self.lot.internal_cruise_speed if self.lot else 1.0,
            summary=summary,
        )


# ---------------------------------------------------------------- analysis


def measure_nfd(series: dict, network_length: float, window_s: float, dt_s: float):
    """Edie aggregates per time window: (t, K veh/km, Q veh/hr, V km/hr).

    Windows without any vehicle time are omitted. Parked and in-lot vehicles
    never enter the series' distance or active-count sums.
    """
    if window_s <= 0:
        raise ValueError("window must be > 0")
    if network_length <= 0:
        raise ValueError("network length must be > 0")
    steps = max(1, int(round(window_s / dt_s)))
    n = len(series["t_s"])
    rows = []
    for start in range(0, n, steps):
        end = min(start + steps, n)
        T_w = (end - start) * dt_s / 3600.0
        dist = float(np.sum(series["dist_km"][start:end]))
        time_vh = float(np.sum(series["active"][start:end])) * dt_s / 3600.0
        K = time_vh / (network_length * T_w)
        if K <= 0:
            continue
        Q = dist / (network_length * T_w)
        rows.append((float(series["t_s"][start]), K, Q, Q / K))
    return rows


def performance_metrics(result: RunResult) -> dict:
    """Network performance of one replication.

    Delay compares the driven time against free-flow traversal of the same
    path; lot circuits count fully as delay. Distance-to-park is family-iv
    distance plus lot circuits, for parked vehicles only; vehicles still
    cruising at the horizon end count against the completion rate.
    """
    vehicles = result.vehicles
    travel, delay, speeds, dists = [], [], [], []
    dtp = []
    n_parkers = 0
    n_parked = 0
    for rec in vehicles:
        if rec.purpose in ("park-on", "park-off"):
            n_parkers += 1
            if rec.parked:
                n_parked += 1
                dtp.append(rec.dist_iv + rec.circuits * result.l_off)
        if rec.family_end == "exited":
            travel.append(rec.drive_time_s)
            delay.append(rec.drive_time_s - rec.freeflow_time_s)
            if rec.drive_time_s > 0:
                speeds.append(rec.dist_total / (rec.drive_time_s / 3600.0))
            dists.append(rec.dist_total)

    def mean(x):
        return float(np.mean(x)) if x else None

    return {
        "n_vehicles": len(vehicles),
        "n_parkers": n_parkers,
        "avg_travel_time_s": mean(travel),
        "avg_delay_s": mean(delay),
        "avg_speed_kmh": mean(speeds),
        "avg_distance_km": mean(dists),
        "completion_rate": (n_parked / n_parkers) if n_parkers else None,
        "distance_to_park": dtp,
        "mean_distance_to_park": mean(dtp),
        "avg_occupancy": float(result.series["occ_on"].mean())
        if len(result.series["occ_on"])
        else 0.0,
    }


def mean_network_speed(result: RunResult) -> float:
    """Edie space-mean speed over the whole run (total distance / total time)."""
    dist = float(result.series["dist_km"].sum())
    time_vh = float(result.series["active"].sum()) * result.dt_sim / 3600.0
    return dist / time_vh if time_vh > 0 else 0.0

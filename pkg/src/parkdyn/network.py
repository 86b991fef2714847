"""Road network, parking supply, and demand data model.

Networks are directed: a two-way street is two links. All quantities carry
the units used throughout the package: km, km/hr, veh/km/lane.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field, replace
from pathlib import Path


class NetworkFormatError(ValueError):
    """Malformed network file; message carries the offending field."""


@dataclass(frozen=True)
class Node:
    id: int
    x: float = 0.0  # meters
    y: float = 0.0
    allows_u_turn: bool = False


@dataclass(frozen=True)
class Link:
    """Directed street segment with an optional on-street parking lane."""

    id: str
    from_node: int
    to_node: int
    length: float  # km
    free_flow_speed: float = 50.0  # km/hr
    jam_density: float = 100.0  # veh/km/lane
    lanes: int = 1
    parking_capacity: int = 0
    spot_spacing: float = 0.0  # km between consecutive spots

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"link {self.id}: length must be > 0")
        if self.free_flow_speed <= 0 or self.jam_density <= 0:
            raise ValueError(f"link {self.id}: speeds and densities must be > 0")
        if self.lanes < 1:
            raise ValueError(f"link {self.id}: lanes must be >= 1")
        if self.parking_capacity < 0 or self.spot_spacing < 0:
            raise ValueError(f"link {self.id}: parking fields must be non-negative")
        if self.parking_capacity > 0:
            if self.spot_spacing == 0.0:
                # even spacing over the link when not given explicitly
                object.__setattr__(self, "spot_spacing", self.length / self.parking_capacity)
            if self.spot_spacing * self.parking_capacity > self.length * (1 + 1e-9):
                raise ValueError(f"link {self.id}: spots do not fit on the link")

    @property
    def free_flow_time(self) -> float:
        """hr to traverse at free-flow speed."""
        return self.length / self.free_flow_speed


@dataclass(frozen=True)
class OffStreetLot:
    """Off-street parking container reached from the end of its entry link.

    A vehicle arriving at a full lot drives one circuit of ``circuit_length``
    at ``internal_cruise_speed`` before reappearing on the entry link.
    """

    id: str
    entry_link: str
    capacity: int
    circuit_length: float = 0.3  # km
    internal_cruise_speed: float = 15.0  # km/hr

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError(f"lot {self.id}: capacity must be >= 0")
        if self.circuit_length <= 0 or self.internal_cruise_speed <= 0:
            raise ValueError(f"lot {self.id}: circuit fields must be > 0")

    @property
    def circuit_time(self) -> float:
        """hr spent cruising out of a full lot."""
        return self.circuit_length / self.internal_cruise_speed


class Network:
    """Immutable directed road graph with parking supplies and lots.

    ``region_assignment`` maps every link id to an integer region, used by
    the bi-partitioned regional guidance.
    """

    def __init__(self, nodes, links, lots=(), region_assignment=None):
        self.nodes: dict[int, Node] = {n.id: n for n in nodes}
        if len(self.nodes) != len(list(nodes)):
            raise ValueError("duplicate node ids")
        self.links: dict[str, Link] = {}
        for ln in links:
            if ln.id in self.links:
                raise ValueError(f"duplicate link id {ln.id}")
            if ln.from_node not in self.nodes or ln.to_node not in self.nodes:
                raise ValueError(f"link {ln.id}: endpoint not in network")
            self.links[ln.id] = ln
        self.lots: dict[str, OffStreetLot] = {}
        for lot in lots:
            if lot.entry_link not in self.links:
                raise ValueError(f"lot {lot.id}: entry link {lot.entry_link} not in network")
            self.lots[lot.id] = lot
        self.region_assignment: dict[str, int] = dict(region_assignment or {})
        for lid in self.region_assignment:
            if lid not in self.links:
                raise ValueError(f"region assignment references unknown link {lid}")
        for lid in self.links:
            self.region_assignment.setdefault(lid, 0)
        self.out_links: dict[int, tuple[str, ...]] = {nid: () for nid in self.nodes}
        grouped: dict[int, list[str]] = {nid: [] for nid in self.nodes}
        for ln in self.links.values():
            grouped[ln.from_node].append(ln.id)
        for nid, lids in grouped.items():
            self.out_links[nid] = tuple(sorted(lids))
        self.total_length = sum(ln.length for ln in self.links.values())
        if self.links and self.total_length <= 0:
            raise ValueError("total network length must be > 0")
        self._reverse: dict[str, str | None] = {}
        by_pair = {(ln.from_node, ln.to_node): ln.id for ln in self.links.values()}
        for ln in self.links.values():
            self._reverse[ln.id] = by_pair.get((ln.to_node, ln.from_node))
        self._next_hop: dict[int, dict[int, str]] | None = None

    @property
    def total_parking_capacity(self) -> int:
        return sum(ln.parking_capacity for ln in self.links.values())

    def regions(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.region_assignment.values())))

    def region_capacity(self, region: int) -> int:
        return sum(
            ln.parking_capacity
            for ln in self.links.values()
            if self.region_assignment[ln.id] == region
        )

    def reverse_link(self, link_id: str) -> str | None:
        """The opposite-direction link of a two-way street, if present."""
        return self._reverse[link_id]

    def boundary_nodes(self) -> tuple[int, ...]:
        """Perimeter heuristic: nodes with fewer out-links than the maximum."""
        if not self.nodes:
            return ()
        deg = {nid: len(self.out_links[nid]) for nid in self.nodes}
        top = max(deg.values())
        picked = tuple(sorted(n for n, d in deg.items() if d < top))
        return picked if picked else tuple(sorted(self.nodes))

    def next_hop(self) -> dict[int, dict[int, str]]:
        """next_hop[dest][node] -> out-link on the free-flow shortest path."""
        if self._next_hop is None:
            table: dict[int, dict[int, str]] = {}
            in_links: dict[int, list[Link]] = {nid: [] for nid in self.nodes}
            for ln in self.links.values():
                in_links[ln.to_node].append(ln)
            for dest in self.nodes:
                # Dijkstra on the reversed graph from dest
                dist = {dest: 0.0}
                hop: dict[int, str] = {}
                pq = [(0.0, dest)]
                while pq:
                    d, u = heapq.heappop(pq)
                    if d > dist.get(u, float("inf")):
                        continue
                    for ln in in_links[u]:
                        nd = d + ln.free_flow_time
                        v = ln.from_node
                        if nd < dist.get(v, float("inf")) - 1e-15:
                            dist[v] = nd
                            hop[v] = ln.id
                            heapq.heappush(pq, (nd, v))
                table[dest] = hop
            self._next_hop = table
        return self._next_hop

    def path_links(self, origin: int, dest: int) -> list[str]:
        """Free-flow shortest path as a link sequence (empty if origin==dest)."""
        hop = self.next_hop()[dest]
        path, node = [], origin
        while node != dest:
            if node not in hop:
                raise ValueError(f"no path from {origin} to {dest}")
            lid = hop[node]
            path.append(lid)
            node = self.links[lid].to_node
        return path

    def is_strongly_connected(self) -> bool:
        if not self.nodes:
            return True
        start = next(iter(self.nodes))
        for forward in (True, False):
            seen = {start}
            stack = [start]
            edges: dict[int, list[int]] = {nid: [] for nid in self.nodes}
            for ln in self.links.values():
                if forward:
                    edges[ln.from_node].append(ln.to_node)
                else:
                    edges[ln.to_node].append(ln.from_node)
            while stack:
                u = stack.pop()
                for v in edges[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            if len(seen) != len(self.nodes):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "units": {"length": "km", "speed": "km/hr", "density": "veh/km/lane"},
            "nodes": [
                {"id": n.id, "x": n.x, "y": n.y, "allows_u_turn": n.allows_u_turn}
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "links": [
                {
                    "id": ln.id,
                    "from_node": ln.from_node,
                    "to_node": ln.to_node,
                    "length": ln.length,
                    "free_flow_speed": ln.free_flow_speed,
                    "jam_density": ln.jam_density,
                    "lanes": ln.lanes,
                    "parking_capacity": ln.parking_capacity,
                    "spot_spacing": ln.spot_spacing,
                }
                for ln in sorted(self.links.values(), key=lambda ln: ln.id)
            ],
            "lots": [
                {
                    "id": lot.id,
                    "entry_link": lot.entry_link,
                    "capacity": lot.capacity,
                    "circuit_length": lot.circuit_length,
                    "internal_cruise_speed": lot.internal_cruise_speed,
                }
                for lot in sorted(self.lots.values(), key=lambda lot: lot.id)
            ],
            "regions": {lid: self.region_assignment[lid] for lid in sorted(self.region_assignment)},
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class DurationDistribution:
    """Parking-duration distribution with a queryable CDF (hours).

    ``kind`` is "uniform" (lo, hi) or "table" with an explicit piecewise-linear
    CDF over``xs``/``cdf_values`` (must start at F(0)=0 and end at 1).
    """

    kind: str = "uniform"
    lo: float = 0.0
    hi: float = 1.0
    xs: tuple[float, ...] = ()
    cdf_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "uniform":
            if not (0 <= self.lo < self.hi):
                raise ValueError("uniform duration needs 0 <= lo < hi")
        elif self.kind == "table":
            xs, fs = self.xs, self.cdf_values
            if len(xs) != len(fs) or len(xs) < 2:
                raise ValueError("table duration needs matching xs/cdf_values")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("table xs must be strictly increasing")
            if any(b < a for a, b in zip(fs, fs[1:])):
                raise ValueError("table cdf must be non-decreasing")
            if xs[0] != 0.0 or abs(fs[0]) > 1e-12 or abs(fs[-1] - 1.0) > 1e-12:
                raise ValueError("table cdf must run from F(0)=0 to F(x_max)=1")
        else:
            raise ValueError(f"unknown duration kind {self.kind!r}")

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        if self.kind == "uniform":
            if x <= self.lo:
                return 0.0
            if x >= self.hi:
                return 1.0
            return (x - self.lo) / (self.hi - self.lo)
        xs, fs = self.xs, self.cdf_values
        if x >= xs[-1]:
            return 1.0
        for (x0, f0), (x1, f1) in zip(zip(xs, fs), zip(xs[1:], fs[1:])):
            if x <= x1:
                return f0 + (f1 - f0) * (x - x0) / (x1 - x0)
        return 1.0

    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        xs, fs = self.xs, self.cdf_values
        return sum(0.5 * (x0 + x1) * (f1 - f0) for x0, x1, f0, f1 in zip(xs, xs[1:], fs, fs[1:]))

    def sample(self, rng) -> float:
        u = rng.random()
        if self.kind == "uniform":
            return self.lo + u * (self.hi - self.lo)
        xs, fs = self.xs, self.cdf_values
        for (x0, f0), (x1, f1) in zip(zip(xs, fs), zip(xs[1:], fs[1:])):
            if u <= f1:
                if f1 == f0:
                    return x1
                return x0 + (x1 - x0) * (u - f0) / (f1 - f0)
        return xs[-1]

    def step_weights(self, dt: float, n_steps: int):
        """P(duration falls in step j), j = 0..n_steps-1, for re-departure sums."""
        return [self.cdf((j + 1) * dt) - self.cdf(j * dt) for j in range(n_steps)]


@dataclass(frozen=True)
class TripChain:
    """One traveler: entry, origin/destination boundary nodes, parking intent."""

    vehicle_id: int
    entry_time: float  # s
    origin: int
    destination: int
    purpose: str  # park-on | park-off | pass
    parking_duration: float = 0.0  # hr, unused for purpose=pass
    desired_speed: float = 50.0  # km/hr
    desired_cruise_speed: float = 30.0  # km/hr

    def __post_init__(self):
        if self.purpose not in ("park-on", "park-off", "pass"):
            raise ValueError(f"unknown purpose {self.purpose!r}")
        if self.parking_duration < 0:
            raise ValueError("parking_duration must be >= 0")


def greenshields_speed(k: float, v_f: float, k_j: float) -> float:
    """Linear speed-density relation, clamped at zero beyond jam density."""
    if k < 0:
        raise ValueError("density must be >= 0")
    return max(0.0, v_f * (1.0 - k / k_j))


def build_grid(
    rows: int,
    cols: int,
    link_length: float,
    v_f: float,
    k_j: float,
    parking_capacity_per_link: int,
    d_p: float = 0.0,
) -> Network:
    """Bidirectional square-grid network; rows split into two guidance regions.

    Region 1 covers links whose midpoint lies in the upper half of the rows.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs rows >= 2 and cols >= 2")
    if link_length <= 0 or v_f <= 0 or k_j <= 0:
        raise ValueError("grid parameters must be positive")
    if parking_capacity_per_link < 0 or d_p < 0:
        raise ValueError("parking parameters must be non-negative")

    def nid(r, c):
        return r * cols + c

    nodes = [
        Node(id=nid(r, c), x=c * link_length * 1000.0, y=r * link_length * 1000.0)
        for r in range(rows)
        for c in range(cols)
    ]
    links = []
    regions = {}

    def add(u, v, row_mid):
        lid = f"{u}-{v}"
        links.append(
            Link(
                id=lid,
                from_node=u,
                to_node=v,
                length=link_length,
                free_flow_speed=v_f,
                jam_density=k_j,
                parking_capacity=parking_capacity_per_link,
                spot_spacing=d_p,
            )
        )
        regions[lid] = 1 if row_mid >= rows / 2.0 else 0

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                add(nid(r, c), nid(r, c + 1), r)
                add(nid(r, c + 1), nid(r, c), r)
            if r + 1 < rows:
                add(nid(r, c), nid(r + 1, c), r + 0.5)
                add(nid(r + 1, c), nid(r, c), r + 0.5)
    return Network(nodes, links, region_assignment=regions)


def redistribute_parking(
    network: Network,
    total_spots: int,
    region_shares: dict[int, float] | None = None,
    supply_fraction: float = 1.0,
) -> Network:
    """Spread an exact total of on-street spots evenly over the links.

    With ``region_shares`` (region id -> fraction of the total, summing to 1)
    each region receives its share spread evenly over its own links, which
    gives the upper/lower supply imbalance the regional-guidance experiments
    rely on. ``supply_fraction`` < 1 concentrates each region's spots on an
    evenly spaced subset of its links. Remainders go to the first links in
    sorted-id order; spot spacing is re-derived from each link's length.
    """
    if total_spots < 0:
        raise ValueError("total_spots must be >= 0")
    if not (0 < supply_fraction <= 1):
        raise ValueError("supply_fraction must lie in (0, 1]")
    lids = sorted(network.links)
    caps = {lid: 0 for lid in lids}
    if region_shares is None:
        groups = [(lids, total_spots)]
    else:
        if abs(sum(region_shares.values()) - 1.0) > 1e-9:
            raise ValueError("region shares must sum to 1")
        groups = []
        assigned = 0
        items = sorted(region_shares.items())
        for i, (region, share) in enumerate(items):
            in_region = [lid for lid in lids if network.region_assignment[lid] == region]
            if not in_region:
                raise ValueError(f"no links in region {region}")
            spots = total_spots - assigned if i == len(items) - 1 else int(round(total_spots * share))
            assigned += spots
            groups.append((in_region, spots))
    for group, spots in groups:
        if supply_fraction < 1.0:
            keep = max(1, int(round(len(group) * supply_fraction)))
            stride = len(group) / keep
            group = [group[int(i * stride)] for i in range(keep)]
        base, extra = divmod(spots, len(group))
        for i, lid in enumerate(group):
            caps[lid] = base + (1 if i < extra else 0)
    new_links = [
        replace(network.links[lid], parking_capacity=caps[lid], spot_spacing=0.0)
        for lid in lids
    ]
    return Network(
        list(network.nodes.values()),
        new_links,
        lots=list(network.lots.values()),
        region_assignment=network.region_assignment,
    )


def add_lot(network: Network, lot: OffStreetLot) -> Network:
    return Network(
        list(network.nodes.values()),
        list(network.links.values()),
        lots=list(network.lots.values()) + [lot],
        region_assignment=network.region_assignment,
    )


def save_network(network: Network, path) -> None:
    Path(path).write_text(json.dumps(network.to_dict(), indent=1, sort_keys=True))


def load_network(path) -> Network:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise NetworkFormatError(f"{path}: not valid JSON ({e})") from e

    def need(d, key, where):
        if key not in d:
            raise NetworkFormatError(f"{path}: missing {key!r} in {where}")
        return d[key]

    try:
        nodes = [
            Node(
                id=int(need(n, "id", "node")),
                x=float(n.get("x", 0.0)),
                y=float(n.get("y", 0.0)),
                allows_u_turn=bool(n.get("allows_u_turn", False)),
            )
            for n in need(raw, "nodes", "file")
        ]
        links = [
            Link(
                id=str(need(ln, "id", "link")),
                from_node=int(need(ln, "from_node", f"link {ln.get('id')}")),
                to_node=int(need(ln, "to_node", f"link {ln.get('id')}")),
                length=float(need(ln, "length", f"link {ln.get('id')}")),
                free_flow_speed=float(ln.get("free_flow_speed", 50.0)),
                jam_density=float(ln.get("jam_density", 100.0)),
                lanes=int(ln.get("lanes", 1)),
                parking_capacity=int(ln.get("parking_capacity", 0)),
                spot_spacing=float(ln.get("spot_spacing", 0.0)),
            )
            for ln in need(raw, "links", "file")
        ]
        lots = [
            OffStreetLot(
                id=str(need(lot, "id", "lot")),
                entry_link=str(need(lot, "entry_link", f"lot {lot.get('id')}")),
                capacity=int(need(lot, "capacity", f"lot {lot.get('id')}")),
                circuit_length=float(lot.get("circuit_length", 0.3)),
                internal_cruise_speed=float(lot.get("internal_cruise_speed", 15.0)),
            )
            for lot in raw.get("lots", [])
        ]
        regions = {str(k): int(v) for k, v in raw.get("regions", {}).items()}
        return Network(nodes, links, lots=lots, region_assignment=regions)
    except NetworkFormatError:
        raise
    except (ValueError, TypeError, KeyError) as e:
        raise NetworkFormatError(f"{path}: {e}") from e

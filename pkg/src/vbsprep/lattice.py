"""Lattice graphs, sublattice coloring, and the site -> qubit assignment.

A lattice is a multigraph of sites and links.  Every link carries one
valence bond, realized on one qubit at each endpoint.  Open chains keep a
fixed-spin dangling qubit at each end so that every site encodes the same
local spin; all other lattices give boundary sites a smaller local spin
equal to half their coordination number.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError, NotBipartiteError

BOUNDARY_OPEN = "open_chain"
BOUNDARY_RING = "ring"
BOUNDARY_EXPLICIT = "explicit_graph"

SPIN_UP = "up"
SPIN_DOWN = "down"


@dataclass(frozen=True)
class Lattice:
    n_sites: int
    links: tuple[tuple[int, int], ...]
    boundary: str = BOUNDARY_EXPLICIT
    boundary_spins: tuple[str, str] | None = None
    name: str = "lattice"

    def __post_init__(self):
        for a, b in self.links:
            if not (0 <= a < self.n_sites and 0 <= b < self.n_sites):
                raise ConfigError(f"link ({a},{b}) references a missing site")
            if a == b:
                raise ConfigError("self-loops are not allowed")
        if self.boundary == BOUNDARY_OPEN and self.boundary_spins is None:
            raise ConfigError("open chains need boundary_spins")

    def coordination(self, site: int) -> int:
        return sum(1 for a, b in self.links if site in (a, b))

    def boundary_slots(self, site: int) -> int:
        """Dangling fixed spin-1/2 slots (open-chain ends only)."""
        if self.boundary == BOUNDARY_OPEN and site in (0, self.n_sites - 1):
            return 1
        return 0

    def site_twice_spin(self, site: int) -> int:
        """2S of the site = number of qubits encoding it."""
        return self.coordination(site) + self.boundary_slots(site)

    def uniform_twice_spin(self) -> int:
        values = {self.site_twice_spin(s) for s in range(self.n_sites)}
        if len(values) != 1:
            raise ConfigError(f"lattice has mixed local spins 2S in {sorted(values)}")
        return values.pop()

    def sublattice(self) -> tuple[str, ...]:
        """2-coloring of the sites; raises NotBipartiteError on an odd cycle."""
        color: dict[int, str] = {}
        adj: dict[int, set[int]] = {s: set() for s in range(self.n_sites)}
        for a, b in self.links:
            adj[a].add(b)
            adj[b].add(a)
        for start in range(self.n_sites):
            if start in color:
                continue
            color[start] = "A"
            stack = [start]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if v not in color:
                        color[v] = "B" if color[u] == "A" else "A"
                        stack.append(v)
                    elif color[v] == color[u]:
                        raise NotBipartiteError(
                            f"odd cycle through sites {u} and {v}: lattice is not bipartite"
                        )
        return tuple(color[s] for s in range(self.n_sites))

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "sites": list(range(self.n_sites)),
            "links": [list(l) for l in self.links],
            "boundary": self.boundary,
            "boundary_spins": list(self.boundary_spins) if self.boundary_spins else None,
        }


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_chain(n_sites: int, boundary: str, boundary_spins: tuple[str, str] = (SPIN_UP, SPIN_UP)) -> Lattice:
    """1D chain; `boundary` is "open" or "ring"."""
    if n_sites < 2:
        raise ConfigError("a chain needs at least 2 sites")
    if boundary in ("open", BOUNDARY_OPEN):
        links = tuple((i, i + 1) for i in range(n_sites - 1))
        for s in boundary_spins:
            if s not in (SPIN_UP, SPIN_DOWN):
                raise ConfigError(f"boundary spin must be up/down, got {s!r}")
        return Lattice(n_sites, links, BOUNDARY_OPEN, tuple(boundary_spins), name=f"chain:{n_sites}:open")
    if boundary in ("ring", BOUNDARY_RING):
        links = tuple((i, (i + 1) % n_sites) for i in range(n_sites))
        return Lattice(n_sites, links, BOUNDARY_RING, None, name=f"chain:{n_sites}:ring")
    raise ConfigError(f"unknown chain boundary {boundary!r}")


def build_three_link_pair() -> Lattice:
    """Two sites joined by three links: the minimal coordination-3 cell."""
    return Lattice(2, ((0, 1), (0, 1), (0, 1)), BOUNDARY_EXPLICIT, name="three-link-pair")


def build_three_link_ring(n_sites: int) -> Lattice:
    """Even ring with alternating double/single links; every coordination is 3."""
    if n_sites < 2 or n_sites % 2:
        raise ConfigError("three-link ring needs an even site count >= 2")
    if n_sites == 2:
        return build_three_link_pair()
    links: list[tuple[int, int]] = []
    for i in range(n_sites):
        j = (i + 1) % n_sites
        links.append((i, j))
        if i % 2 == 0:
            links.append((i, j))
    return Lattice(n_sites, tuple(links), BOUNDARY_EXPLICIT, name=f"three-link-ring:{n_sites}")


def build_honeycomb_patch(rows: int, cols: int) -> Lattice:
    """Brick-wall honeycomb patch of rows x cols hexagons.

    Vertices live on integer (x, y); each hexagon is a 2x1 brick with
    vertical edges at its two ends.  Interior sites have coordination 3.
    """
    if rows < 1 or cols < 1:
        raise ConfigError("honeycomb patch needs rows, cols >= 1")
    verts: dict[tuple[int, int], int] = {}
    edges: set[tuple[int, int, int, int]] = set()

    def vid(x, y):
        if (x, y) not in verts:
            verts[(x, y)] = len(verts)
        return verts[(x, y)]

    for r in range(rows):
        for c in range(cols):
            x0, y0 = 2 * c + (r % 2), r
            for dx in (0, 1):
                edges.add((x0 + dx, y0, x0 + dx + 1, y0))
                edges.add((x0 + dx, y0 + 1, x0 + dx + 1, y0 + 1))
            edges.add((x0, y0, x0, y0 + 1))
            edges.add((x0 + 2, y0, x0 + 2, y0 + 1))
    for x1, y1, x2, y2 in sorted(edges):
        vid(x1, y1), vid(x2, y2)
    links = tuple(
        (verts[(x1, y1)], verts[(x2, y2)]) for x1, y1, x2, y2 in sorted(edges)
    )
    return Lattice(len(verts), links, BOUNDARY_EXPLICIT, name=f"honeycomb:{rows}:{cols}")


def lattice_from_json(text: str) -> Lattice:
    """Load {sites: [...], links: [[a,b],...], boundary: ..., boundary_spins: ...}."""
    doc = json.loads(text)
    try:
        sites = doc["sites"]
        links = tuple(tuple(int(v) for v in l) for l in doc["links"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad lattice document: {exc}") from exc
    boundary = doc.get("boundary", BOUNDARY_EXPLICIT)
    spins = doc.get("boundary_spins")
    return Lattice(
        len(sites),
        links,
        boundary,
        tuple(spins) if spins else None,
        name=doc.get("name", "file-lattice"),
    )


# ---------------------------------------------------------------------------
# qubit assignment
# ---------------------------------------------------------------------------

METHOD_HADAMARD_ALL = "hadamard_all"
METHOD_ISLANDS = "islands_plus_sublattice"
METHOD_MPS = "mps"


@dataclass(frozen=True)
class SiteEncoding:
    """Map from lattice structure to simulator qubit indices.

    site_qubits[s] lists site s's data qubits ordered by incident link;
    link_qubits[k] gives (qubit at link[k][0], qubit at link[k][1]);
    boundary_qubits lists (qubit, "up"/"down") for fixed dangling spins.
    """

    lattice: Lattice
    site_qubits: tuple[tuple[int, ...], ...]
    link_qubits: tuple[tuple[int, int], ...]
    boundary_qubits: tuple[tuple[int, str], ...]
    ancilla: tuple[int | None, ...]
    n_data_qubits: int
    total_qubits: int
    method: str

    def site_ancilla(self, site: int) -> int:
        a = self.ancilla[site]
        if a is None:
            raise ConfigError(f"site {site} has no ancilla under method {self.method!r}")
        return a


def assign_qubits(lattice: Lattice, method: str = METHOD_HADAMARD_ALL) -> SiteEncoding:
    """Allocate data qubits per (site, link) incidence plus method ancillas."""
    site_lists: list[list[int]] = [[] for _ in range(lattice.n_sites)]
    link_pairs: list[tuple[int, int]] = []
    boundary: list[tuple[int, str]] = []
    counter = 0

    # Left dangling qubit first so that site qubit order matches the chain
    # drawing (dangling, then links left to right).
    if lattice.boundary == BOUNDARY_OPEN:
        site_lists[0].append(counter)
        boundary.append((counter, lattice.boundary_spins[0]))
        counter += 1

    by_site_pending: dict[int, list[int]] = {s: [] for s in range(lattice.n_sites)}
    for k, (a, b) in enumerate(lattice.links):
        by_site_pending[a].append(k)
        by_site_pending[b].append(k)

    link_slots: dict[tuple[int, int], int] = {}
    for s in range(lattice.n_sites):
        for k in by_site_pending[s]:
            link_slots[(s, k)] = counter
            site_lists[s].append(counter)
            counter += 1
        if lattice.boundary == BOUNDARY_OPEN and s == lattice.n_sites - 1:
            site_lists[s].append(counter)
            boundary.append((counter, lattice.boundary_spins[1]))
            counter += 1
    link_pairs = [
        (link_slots[(a, k)], link_slots[(b, k)]) for k, (a, b) in enumerate(lattice.links)
    ]
    n_data = counter

    anc: list[int | None] = [None] * lattice.n_sites
    if method == METHOD_HADAMARD_ALL:
        for s in range(lattice.n_sites):
            anc[s] = counter
            counter += 1
    elif method == METHOD_ISLANDS:
        colors = lattice.sublattice()
        for s in range(lattice.n_sites):
            if colors[s] == "B":
                anc[s] = counter
                counter += 1
    elif method == METHOD_MPS:
        if lattice.boundary == BOUNDARY_RING:
            counter += 1  # single post-selected ancilla, index n_data
    else:
        raise ConfigError(f"unknown assignment method {method!r}")

    return SiteEncoding(
        lattice=lattice,
        site_qubits=tuple(tuple(v) for v in site_lists),
        link_qubits=tuple(link_pairs),
        boundary_qubits=tuple(boundary),
        ancilla=tuple(anc),
        n_data_qubits=n_data,
        total_qubits=counter,
        method=method,
    )


# ---------------------------------------------------------------------------
# coupling maps
# ---------------------------------------------------------------------------

ALL_TO_ALL = "all_to_all"
LINEAR = "linear"
HEAVY_HEX = "heavy_hex"


@dataclass(frozen=True)
class CouplingMap:
    name: str
    n_qubits: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ConfigError("coupling edge references a missing qubit")
        if self.name != ALL_TO_ALL and self.n_qubits > 1 and not self._connected():
            raise ConfigError("coupling map must be connected")

    def _connected(self) -> bool:
        adj = {q: set() for q in range(self.n_qubits)}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, stack = {0}, [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_qubits

    def connected_subset(self, qubits) -> bool:
        qs = set(qubits)
        if self.name == ALL_TO_ALL:
            return True
        if len(qs) <= 1:
            return True
        adj = {q: set() for q in qs}
        for a, b in self.edges:
            if a in qs and b in qs:
                adj[a].add(b)
                adj[b].add(a)
        start = next(iter(qs))
        seen, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(qs)

    def are_coupled(self, a: int, b: int) -> bool:
        if self.name == ALL_TO_ALL:
            return a != b
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, q: int):
        if self.name == ALL_TO_ALL:
            return [p for p in range(self.n_qubits) if p != q]
        return sorted({b if a == q else a for a, b in self.edges if q in (a, b)})

    def shortest_path(self, a: int, b: int) -> list[int]:
        if self.name == ALL_TO_ALL:
            return [a, b]
        prev = {a: None}
        queue = [a]
        while queue:
            u = queue.pop(0)
            if u == b:
                break
            for v in self.neighbors(u):
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        if b not in prev:
            raise ConfigError(f"no path between qubits {a} and {b}")
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        return path[::-1]


def all_to_all(n_qubits: int) -> CouplingMap:
    return CouplingMap(ALL_TO_ALL, n_qubits)


def linear_coupling(n_qubits: int) -> CouplingMap:
    edges = frozenset((i, i + 1) for i in range(n_qubits - 1))
    return CouplingMap(LINEAR, n_qubits, edges)


def heavy_hex_patch(n_sets: int = 1) -> CouplingMap:
    """Row segment of a heavy-hex layout: a line with one bridge qubit per set.

    Per six-qubit set k the line spans positions 9k .. 9k+6 (set k+1 reuses
    the tail positions as its lead-in) and a bridge qubit hangs off position
    9k+5.  Declared geometry for the routing and displacement tests.
    """
    if n_sets < 1:
        raise ConfigError("need at least one set")
    line_len = 7 + 9 * (n_sets - 1)
    edges = {(i, i + 1) for i in range(line_len - 1)}
    n = line_len
    for k in range(n_sets):
        anchor = 9 * k + 5
        edges.add((anchor, n))
        n += 1
    return CouplingMap(HEAVY_HEX, n, frozenset(tuple(sorted(e)) for e in edges))

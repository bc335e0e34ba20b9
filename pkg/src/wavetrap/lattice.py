"""Oscillator-network construction: specs, validation, stiffness assembly.

A NetworkSpec is a declarative description of a mass-spring network (N
nodes, optional pinning springs, undirected coupling edges, boundary
kind, optional side-branch cavity).  `assemble` turns it into the mass
vector and symmetric stiffness matrix the dynamics and modes layers
work with; the cavity, when present, occupies the last index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

BOUNDARIES = ("free", "fixed_left", "fixed_right", "fixed_both", "periodic")

# Energy-transport pathways of the 7-pigment antenna graph, 1-based
# pigment labels: 6-5-7-4-3 and 1-2-7-3, with the conversion site
# adjacent to pigment 3.
FMO_PATHWAY_EDGES = ((6, 5), (5, 7), (7, 4), (4, 3), (1, 2), (2, 7), (7, 3))
FMO_TARGET_PIGMENT = 3


class ValidationError(ValueError):
    """A network specification violates one of its invariants."""


@dataclass(frozen=True)
class Cavity:
    """Side-branch storage oscillator attached at one network site."""

    site: int
    mass: float
    spring: float
    onsite: float = 0.0

    @property
    def frequency(self) -> float:
        """Isolated cavity frequency sqrt(spring/mass); 0 when decoupled."""
        return math.sqrt(self.spring / self.mass)


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative oscillator network.

    edges hold one (i, j, stiffness) triple per undirected pair with
    i < j.  Walls are encoded as extra pinning stiffness on the end
    node plus the boundary marker, which keeps the dimension fixed and
    matches the mirror-image construction used by the transport layer.
    """

    node_count: int
    masses: tuple
    onsite_springs: tuple
    edges: tuple
    boundary: str = "free"
    cavity: Cavity | None = None

    # -- graph helpers ----------------------------------------------------

    def degree(self, i: int) -> int:
        return sum(1 for a, b, _ in self.edges if a == i or b == i)

    def neighbors(self, i: int) -> list:
        out = []
        for a, b, _ in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def edge_pairs(self) -> set:
        return {(a, b) for a, b, _ in self.edges}

    def is_connected(self) -> bool:
        if self.node_count <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for j in self.neighbors(stack.pop()):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.node_count

    def chain_ordering(self):
        """Path or cycle ordering of the nodes, None for other graphs.

        Returns (order, closed): `order` lists the node indices along
        the path, `closed` is True for a ring.  Needed by directed
        pulse construction and the mirror-image references.
        """
        n = self.node_count
        if n == 1:
            return [0], False
        degs = [self.degree(i) for i in range(n)]
        if any(d > 2 for d in degs) or not self.is_connected():
            return None
        ends = [i for i in range(n) if degs[i] == 1]
        if len(ends) == 2:
            start, closed = min(ends), False
        elif not ends and all(d == 2 for d in degs):
            start, closed = 0, True
        else:
            return None
        order = [start]
        prev = -1
        while len(order) < n:
            nxt = [j for j in self.neighbors(order[-1]) if j != prev]
            if closed and len(order) == 1:
                nxt = [min(nxt)]  # deterministic direction around a ring
            if not nxt:
                return None
            prev = order[-1]
            order.append(nxt[0])
        return order, closed

    def uniform_chain_parameters(self):
        """(m, k, k0) when the network is a uniform chain/ring, else None.

        Walls are recognised: the extra pinning they add on end nodes is
        discounted before the uniformity check.
        """
        ordering = self.chain_ordering()
        if ordering is None:
            return None
        ks = {round(k, 15) for _, _, k in self.edges}
        if len(self.edges) and len(ks) != 1:
            return None
        k = self.edges[0][2] if self.edges else 0.0
        if len(set(self.masses)) != 1:
            return None
        base = list(self.onsite_springs)
        if self.boundary in ("fixed_left", "fixed_both"):
            base[ordering[0][0]] -= k
        if self.boundary in ("fixed_right", "fixed_both"):
            base[ordering[0][-1]] -= k
        if len({round(v, 15) for v in base}) != 1:
            return None
        return self.masses[0], k, base[0]

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "node_count": self.node_count,
            "masses": list(self.masses),
            "onsite_springs": list(self.onsite_springs),
            "edges": [[a, b, k] for a, b, k in self.edges],
            "boundary": self.boundary,
        }
        if self.cavity is not None:
            doc["cavity"] = {
                "target_site": self.cavity.site,
                "cavity_mass": self.cavity.mass,
                "cavity_spring": self.cavity.spring,
                "cavity_onsite": self.cavity.onsite,
            }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "NetworkSpec":
        doc = json.loads(text)
        return spec_from_dict(doc)


_SPEC_KEYS = {"node_count", "masses", "onsite_springs", "edges", "boundary",
              "cavity"}
_CAVITY_KEYS = {"target_site", "cavity_mass", "cavity_spring", "cavity_onsite"}


def spec_from_dict(doc: dict) -> NetworkSpec:
    """Build and validate a NetworkSpec from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ValidationError("network document must be a JSON object")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise ValidationError(
            f"unknown network field(s): {', '.join(sorted(unknown))}")
    try:
        n = doc["node_count"]
        masses = tuple(float(v) for v in doc["masses"])
        onsite = tuple(float(v) for v in doc["onsite_springs"])
        edges = tuple((int(a), int(b), float(k)) for a, b, k in doc["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed network document: {exc}") from exc
    boundary = doc.get("boundary", "free")
    cavity = None
    if "cavity" in doc and doc["cavity"] is not None:
        cdoc = doc["cavity"]
        unknown = set(cdoc) - _CAVITY_KEYS
        if unknown:
            raise ValidationError(
                f"unknown cavity field(s): {', '.join(sorted(unknown))}")
        cavity = Cavity(site=int(cdoc["target_site"]),
                        mass=float(cdoc["cavity_mass"]),
                        spring=float(cdoc["cavity_spring"]),
                        onsite=float(cdoc.get("cavity_onsite", 0.0)))
    spec = NetworkSpec(node_count=int(n), masses=masses,
                       onsite_springs=onsite, edges=edges,
                       boundary=boundary, cavity=cavity)
    _raise_if_invalid(spec)
    return spec


@dataclass(frozen=True)
class StiffnessSystem:
    """Assembled mass vector and stiffness matrix, ready for dynamics.

    dimension is N, or N+1 with a cavity (cavity at index dimension-1).
    onsite/edge_* are the decomposition the trajectory kernels consume;
    summing them reproduces stiffness_matrix exactly.
    """

    dimension: int
    mass_vector: np.ndarray
    stiffness_matrix: np.ndarray
    onsite: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_k: np.ndarray
    cavity_index: int | None
    spec: NetworkSpec

    def frequency_upper_bound(self) -> float:
        """Cheap Gershgorin bound on the largest normal-mode frequency."""
        rows = np.abs(self.stiffness_matrix).sum(axis=1) / self.mass_vector
        return math.sqrt(max(rows.max(), 0.0))


# ---------------------------------------------------------------------------
# builders


def build_chain(n: int, m: float = 1.0, k: float = 1.0, k0: float = 0.0,
                boundary: str = "free") -> NetworkSpec:
    """Uniform chain of n oscillators; fixed ends add a wall spring k."""
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    if m <= 0:
        raise ValidationError(f"m must be positive, got {m}")
    if k <= 0:
        raise ValidationError(f"k must be positive, got {k}")
    if k0 < 0:
        raise ValidationError(f"k0 must be non-negative, got {k0}")
    if boundary not in BOUNDARIES:
        raise ValidationError(f"unknown boundary {boundary!r}")
    if boundary == "periodic" and n < 3:
        raise ValidationError("periodic chain needs n >= 3")
    onsite = [k0] * n
    if boundary in ("fixed_left", "fixed_both"):
        onsite[0] += k
    if boundary in ("fixed_right", "fixed_both"):
        onsite[-1] += k
    edges = [(i, i + 1, k) for i in range(n - 1)]
    if boundary == "periodic":
        edges.append((0, n - 1, k))
    spec = NetworkSpec(node_count=n, masses=(m,) * n,
                       onsite_springs=tuple(onsite),
                       edges=tuple(sorted(edges)), boundary=boundary)
    _raise_if_invalid(spec)
    return spec


def build_ring(n: int, m: float = 1.0, k: float = 1.0,
               k0: float = 0.0) -> NetworkSpec:
    """Closed uniform ring; needs at least 3 nodes."""
    if not isinstance(n, int) or n < 3:
        raise ValidationError(f"ring needs n >= 3 nodes, got {n!r}")
    return build_chain(n, m=m, k=k, k0=k0, boundary="periodic")


def build_custom(masses, onsite_springs, edges,
                 boundary: str = "free") -> NetworkSpec:
    """Arbitrary network from explicit per-node and per-edge data."""
    masses = tuple(float(v) for v in masses)
    onsite = tuple(float(v) for v in onsite_springs)
    norm_edges = []
    for a, b, k in edges:
        a, b = int(a), int(b)
        if a > b:
            a, b = b, a
        norm_edges.append((a, b, float(k)))
    spec = NetworkSpec(node_count=len(masses), masses=masses,
                       onsite_springs=onsite, edges=tuple(sorted(norm_edges)),
                       boundary=boundary)
    _raise_if_invalid(spec)
    return spec


def fmo_preset() -> NetworkSpec:
    """Seven-pigment antenna graph with its two transport pathways.

    Unit masses and couplings (no measured stiffnesses exist for this
    graph; tune via config).  The conversion site sits next to pigment
    FMO_TARGET_PIGMENT; attach the cavity there with `attach_cavity`.
    Pigments are 1-based externally, stored 0-based.
    """
    edges = tuple(sorted((min(a, b) - 1, max(a, b) - 1, 1.0)
                         for a, b in FMO_PATHWAY_EDGES))
    spec = NetworkSpec(node_count=7, masses=(1.0,) * 7,
                       onsite_springs=(0.0,) * 7, edges=edges,
                       boundary="free")
    _raise_if_invalid(spec)
    return spec


def fmo_target_site() -> int:
    """0-based index of the preferred cavity attachment site."""
    return FMO_TARGET_PIGMENT - 1


def attach_cavity(spec: NetworkSpec, site: int, mass: float,
                  spring: float, onsite: float = 0.0) -> NetworkSpec:
    """Attach the single storage cavity at `site`; returns a new spec."""
    if spec.cavity is not None:
        raise ValidationError("spec already has a cavity; only one supported")
    if not 0 <= site < spec.node_count:
        raise ValidationError(f"cavity site {site} out of range")
    if mass <= 0:
        raise ValidationError(f"cavity mass must be positive, got {mass}")
    if spring < 0:
        raise ValidationError(f"cavity spring must be >= 0, got {spring}")
    if onsite < 0:
        raise ValidationError(f"cavity onsite must be >= 0, got {onsite}")
    return replace(spec, cavity=Cavity(site=site, mass=mass, spring=spring,
                                       onsite=onsite))


def retune_cavity(spec: NetworkSpec, mass: float = None,
                  spring: float = None) -> NetworkSpec:
    """Replace cavity parameters on a spec that already has one."""
    if spec.cavity is None:
        raise ValidationError("spec has no cavity to retune")
    cav = spec.cavity
    return replace(spec, cavity=Cavity(
        site=cav.site,
        mass=cav.mass if mass is None else mass,
        spring=cav.spring if spring is None else spring,
        onsite=cav.onsite))


# ---------------------------------------------------------------------------
# validation and assembly


def validate(spec: NetworkSpec) -> list:
    """All violated invariants as human-readable strings; [] means ok."""
    errors = []
    n = spec.node_count
    if n < 1:
        errors.append("node_count must be positive")
    if len(spec.masses) != n:
        errors.append(f"masses length {len(spec.masses)} != node_count {n}")
    if len(spec.onsite_springs) != n:
        errors.append("onsite_springs length != node_count")
    for i, m in enumerate(spec.masses):
        if not m > 0:
            errors.append(f"mass must be positive (node {i}: {m})")
    for i, k0 in enumerate(spec.onsite_springs):
        if k0 < 0:
            errors.append(f"onsite spring must be non-negative (node {i})")
    seen = set()
    for a, b, k in spec.edges:
        if a == b:
            errors.append(f"self-loop on node {a}")
            continue
        if not (0 <= a < n and 0 <= b < n):
            errors.append(f"edge ({a},{b}) index out of range")
            continue
        if a > b:
            errors.append(f"edge ({a},{b}) not stored with i < j")
        if (a, b) in seen:
            errors.append(f"duplicate edge ({a},{b})")
        seen.add((a, b))
        if not k > 0:
            errors.append(f"edge ({a},{b}) stiffness must be positive")
    if spec.boundary not in BOUNDARIES:
        errors.append(f"unknown boundary {spec.boundary!r}")
    elif spec.boundary == "periodic":
        ordering = spec.chain_ordering()
        if ordering is None or not ordering[1]:
            errors.append("periodic requires chain ordering")
    cav = spec.cavity
    if cav is not None:
        if not 0 <= cav.site < n:
            errors.append(f"cavity site {cav.site} out of range")
        if not cav.mass > 0:
            errors.append("cavity mass must be positive")
        if cav.spring < 0:
            errors.append("cavity spring must be non-negative")
        if cav.onsite < 0:
            errors.append("cavity onsite must be non-negative")
    return errors


def _raise_if_invalid(spec: NetworkSpec):
    errors = validate(spec)
    if errors:
        raise ValidationError("; ".join(errors))


def require_connected(spec: NetworkSpec):
    """Transport experiments need a connected network."""
    if not spec.is_connected():
        raise ValidationError("network is disconnected; transport run rejected")


def assemble(spec: NetworkSpec) -> StiffnessSystem:
    """Mass vector and exactly-symmetric stiffness matrix for the spec."""
    _raise_if_invalid(spec)
    n = spec.node_count
    has_cavity = spec.cavity is not None
    d = n + 1 if has_cavity else n
    masses = np.empty(d)
    onsite = np.zeros(d)
    masses[:n] = spec.masses
    onsite[:n] = spec.onsite_springs
    ei = [a for a, _, _ in spec.edges]
    ej = [b for _, b, _ in spec.edges]
    ek = [k for _, _, k in spec.edges]
    cavity_index = None
    if has_cavity:
        cav = spec.cavity
        cavity_index = d - 1
        masses[cavity_index] = cav.mass
        onsite[cavity_index] = cav.onsite
        if cav.spring > 0:
            ei.append(cav.site)
            ej.append(cavity_index)
            ek.append(cav.spring)
    edge_i = np.asarray(ei, dtype=np.int64)
    edge_j = np.asarray(ej, dtype=np.int64)
    edge_k = np.asarray(ek, dtype=float)
    kmat = np.diag(onsite.copy())
    for a, b, k in zip(edge_i, edge_j, edge_k):
        kmat[a, a] += k
        kmat[b, b] += k
        kmat[a, b] -= k
        kmat[b, a] -= k
    return StiffnessSystem(dimension=d, mass_vector=masses,
                           stiffness_matrix=kmat, onsite=onsite,
                           edge_i=edge_i, edge_j=edge_j, edge_k=edge_k,
                           cavity_index=cavity_index, spec=spec)

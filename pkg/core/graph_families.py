# core/graph_families.py
"""
Deterministic generators for the graph families that carry the dependence
structure, plus the structural diagnostics used to check them.

Every generated graph stores its edges in canonical lexicographic order, so
edge index k means the same edge on every run.
"""
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Tuple, Union

import networkx as nx
import numpy as np
from sympy import isprime

from config import HYPERCUBE_MAX_M
from core.exceptions import GraphError

logger = logging.getLogger(__name__)


class FamilyTag(str, Enum):
    BIPARTITE = "bipartite"
    TWO_HUB = "two_hub"
    HYPERCUBE = "hypercube"
    FAN = "fan"
    CAGE = "cage"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value: Union[str, "FamilyTag"]) -> "FamilyTag":
        """Accept enum members, values and the CLI spelling (two-hub)"""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("-", "_"))
        except ValueError:
            choices = ", ".join(tag.value for tag in cls)
            raise GraphError(f"Unknown graph family '{value}'. Expected one of: {choices}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph with canonically ordered edges (i < j, sorted)"""

    vertex_count: int
    edges: np.ndarray
    family_tag: FamilyTag = FamilyTag.CUSTOM
    size_param: int = 0

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.vertex_count < 1:
            raise GraphError(f"vertex_count must be positive, got {self.vertex_count}")
        if edges.size:
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise GraphError("Edges must satisfy i < j (no self-loops, canonical orientation)")
            if edges.min() < 0 or edges.max() >= self.vertex_count:
                raise GraphError(f"Edge endpoints must lie in [0, {self.vertex_count})")
            codes = edges[:, 0] * self.vertex_count + edges[:, 1]
            if np.any(np.diff(codes) <= 0):
                raise GraphError("Edges must be sorted lexicographically and free of duplicates")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "family_tag", FamilyTag.parse(self.family_tag))

    @classmethod
    def from_edges(cls, vertex_count: int, pairs: Iterable[Tuple[int, int]],
                   family_tag: FamilyTag = FamilyTag.CUSTOM, size_param: int = 0) -> "Graph":
        """Build a graph from arbitrary (i, j) pairs, normalizing to canonical form"""
        array = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if np.any(array[:, 0] == array[:, 1]):
            raise GraphError("Self-loops are not allowed")
        array = np.sort(array, axis=1)
        order = np.lexsort((array[:, 1], array[:, 0]))
        array = array[order]
        if len(array) > 1 and np.any(np.all(np.diff(array, axis=0) == 0, axis=1)):
            raise GraphError("Duplicate edges are not allowed")
        return cls(vertex_count, array, family_tag, size_param)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def edge_list(self) -> List[List[int]]:
        return self.edges.tolist()

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.vertex_count)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.vertex_count))
        graph.add_edges_from(map(tuple, self.edges.tolist()))
        return graph

    def same_as(self, other: "Graph") -> bool:
        """Byte-level equality of the canonical representation"""
        return (self.vertex_count == other.vertex_count
                and self.family_tag == other.family_tag
                and self.size_param == other.size_param
                and self.edges.tobytes() == other.edges.tobytes())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family_tag.value,
            "param": int(self.size_param),
            "vertex_count": int(self.vertex_count),
            "edges": self.edge_list(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Graph":
        try:
            return cls(int(payload["vertex_count"]), np.asarray(payload["edges"], dtype=np.int64),
                       FamilyTag.parse(payload.get("family", "custom")), int(payload.get("param", 0)))
        except KeyError as e:
            raise GraphError(f"Graph JSON is missing field {e}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_param(name: str, value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise GraphError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


def complete_bipartite(m: int) -> Graph:
    """K_{m,m}: vertices 0..m-1 on side 1, m..2m-1 on side 2"""
    m = _check_param("m", m)
    left = np.repeat(np.arange(m), m)
    right = m + np.tile(np.arange(m), m)
    logger.debug(f"Built complete bipartite graph K_{m},{m} with {m * m} edges")
    return Graph(2 * m, np.column_stack([left, right]), FamilyTag.BIPARTITE, m)


def two_hub(m: int) -> Graph:
    """Hubs 0 and m+1, each joined to every middle vertex 1..m"""
    m = _check_param("m", m)
    middle = np.arange(1, m + 1)
    edges = np.concatenate([
        np.column_stack([np.zeros(m, dtype=np.int64), middle]),
        np.column_stack([middle, np.full(m, m + 1)]),
    ])
    return Graph.from_edges(m + 2, edges, FamilyTag.TWO_HUB, m)


def hypercube(m: int, max_m: int = HYPERCUBE_MAX_M) -> Graph:
    """m-dimensional hypercube; vertex v is the binary vector of its index"""
    m = _check_param("m", m)
    if m > max_m:
        raise GraphError(f"hypercube dimension {m} exceeds the configured cap {max_m}")
    vertices = np.arange(2 ** m, dtype=np.int64)
    blocks = []
    for bit in range(m):
        low = vertices[(vertices >> bit) & 1 == 0]
        blocks.append(np.column_stack([low, low | (1 << bit)]))
    edges = np.concatenate(blocks)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    logger.debug(f"Built {m}-hypercube with {len(edges)} edges")
    return Graph(2 ** m, edges, FamilyTag.HYPERCUBE, m)


def edge_directions(g: Graph) -> np.ndarray:
    """Direction class d in 1..m of every hypercube edge (the flipped coordinate)"""
    if g.family_tag is not FamilyTag.HYPERCUBE:
        raise GraphError("Direction classes are only defined for hypercube graphs")
    flipped = g.edges[:, 0] ^ g.edges[:, 1]
    return np.log2(flipped).astype(np.int64) + 1


def hypercube_direction(g: Graph, k: int) -> int:
    """Direction class of edge k, recomputed from its endpoints"""
    if not 0 <= k < g.edge_count:
        raise GraphError(f"Edge index {k} out of range for {g.edge_count} edges")
    return int(edge_directions(g)[k])


def fan(m: int) -> Graph:
    """m four-cycles sharing the base edge (M_0, M_{2m+1})"""
    m = _check_param("m", m)
    apex = 2 * m + 1
    idx = np.arange(1, m + 1)
    pairs = [np.array([[0, apex]]),
             np.column_stack([np.zeros(m, dtype=np.int64), idx]),
             np.column_stack([m + idx, np.full(m, apex)]),
             np.column_stack([idx, m + idx])]
    return Graph.from_edges(2 * m + 2, np.concatenate(pairs), FamilyTag.FAN, m)


def projective_points(q: int) -> np.ndarray:
    """Normalized homogeneous coordinates of PG(2, q): first nonzero entry is 1"""
    reps = [(0, 0, 1)]
    reps += [(0, 1, b) for b in range(q)]
    reps += [(1, a, b) for a in range(q) for b in range(q)]
    return np.array(reps, dtype=np.int64)


def cage_incidence(q: int) -> Graph:
    """Point-line incidence graph of PG(2, q) for prime q: points first, then lines"""
    q = _check_param("q", q)
    if q < 2 or not isprime(q):
        raise GraphError(f"q={q} is not prime; only prime orders (GF(p) arithmetic) are supported")
    points = projective_points(q)
    size = len(points)
    incident = (points @ points.T) % q == 0
    rows, cols = np.nonzero(incident)
    edges = np.column_stack([rows, size + cols])
    logger.debug(f"Built PG(2,{q}) incidence graph: {2 * size} vertices, {len(edges)} edges")
    return Graph(2 * size, edges, FamilyTag.CAGE, q)


GENERATORS: Dict[FamilyTag, Callable[[int], Graph]] = {
    FamilyTag.BIPARTITE: complete_bipartite,
    FamilyTag.TWO_HUB: two_hub,
    FamilyTag.HYPERCUBE: hypercube,
    FamilyTag.FAN: fan,
    FamilyTag.CAGE: cage_incidence,
}


def generate(family: Union[str, FamilyTag], param: int) -> Graph:
    tag = FamilyTag.parse(family)
    if tag not in GENERATORS:
        raise GraphError(f"Family '{tag.value}' has no generator")
    return GENERATORS[tag](param)


def family_size(family: Union[str, FamilyTag], param: int) -> Tuple[int, int]:
    """(vertex_count, edge_count) from the closed-form family formulas"""
    tag = FamilyTag.parse(family)
    p = _check_param("param", param)
    formulas = {
        FamilyTag.BIPARTITE: (2 * p, p * p),
        FamilyTag.TWO_HUB: (p + 2, 2 * p),
        FamilyTag.HYPERCUBE: (2 ** p, p * 2 ** (p - 1)),
        FamilyTag.FAN: (2 * p + 2, 3 * p + 1),
        FamilyTag.CAGE: (2 * (p * p + p + 1), (p + 1) * (p * p + p + 1)),
    }
    if tag not in formulas:
        raise GraphError(f"Family '{tag.value}' has no closed-form size")
    return formulas[tag]


def girth(g: Graph) -> Union[int, float]:
    """Shortest cycle length via BFS from every vertex; math.inf for forests"""
    result = nx.girth(g.to_networkx())
    return result if math.isinf(result) else int(result)


def degree_sequence(g: Graph) -> List[int]:
    """Vertex degrees in non-increasing order"""
    return sorted(g.degrees().tolist(), reverse=True)


def is_regular(g: Graph) -> bool:
    degrees = g.degrees()
    return bool(np.all(degrees == degrees[0]))


def diameter(g: Graph) -> Union[int, float]:
    graph = g.to_networkx()
    if not nx.is_connected(graph):
        return math.inf
    return int(nx.diameter(graph))


REGULAR_FAMILIES = {
    FamilyTag.BIPARTITE: lambda m: (m, 2 * m),
    FamilyTag.HYPERCUBE: lambda m: (m, 2 ** m),
    FamilyTag.CAGE: lambda q: (q + 1, 2 * (q * q + q + 1)),
}


def connectivity_ratio(family: Union[str, FamilyTag], m: int) -> Fraction:
    """degree(G_m) / vertex_count for a regular family, as an exact rational"""
    tag = FamilyTag.parse(family)
    if tag not in REGULAR_FAMILIES:
        raise GraphError(f"Family '{tag.value}' is not regular; connectivity ratio is undefined")
    m = _check_param("m", m)
    if tag is FamilyTag.CAGE and not isprime(m):
        raise GraphError(f"q={m} is not prime")
    degree, vertices = REGULAR_FAMILIES[tag](m)
    return Fraction(degree, vertices)


def graph_summary(g: Graph) -> Dict[str, Any]:
    degrees = g.degrees()
    summary = {
        "family": g.family_tag.value,
        "param": g.size_param,
        "vertex_count": g.vertex_count,
        "edge_count": g.edge_count,
        "min_degree": int(degrees.min()),
        "max_degree": int(degrees.max()),
        "regular": is_regular(g),
    }
    if g.edge_count <= 200000:
        value = girth(g)
        summary["girth"] = "inf" if math.isinf(value) else value
    if g.family_tag in REGULAR_FAMILIES:
        ratio = connectivity_ratio(g.family_tag, g.size_param)
        summary["connectivity_ratio"] = f"{ratio.numerator}/{ratio.denominator}"
    return summary

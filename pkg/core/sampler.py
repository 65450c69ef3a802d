# core/sampler.py
"""
Realizations of the label / indicator / value layers on a graph, with exact
closed-form fast paths for the families that admit one.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config import REPLICATION_BLOCK, WORKER_THREADS
from core.exceptions import SamplerError
from core.graph_families import FamilyTag, Graph, edge_directions, family_size, generate
from core.margins import MarginSpec

logger = logging.getLogger(__name__)

GraphOrFamily = Union[Graph, Tuple[Union[str, FamilyTag], int]]


@dataclass
class SequenceSample:
    """One realization of the construction on a fixed graph"""

    m_labels: np.ndarray
    d_values: np.ndarray
    xi_count: int
    xi_std: float
    ell: int
    x_values: Optional[np.ndarray] = None
    s_n: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.d_values.shape[0])


@dataclass
class SimulationBlock:
    """Consecutive replications start .. start + len - 1 drawn from one RNG stream"""

    start: int
    xi_count: np.ndarray
    xi_std: np.ndarray
    s_n: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.xi_count.shape[0])

    @property
    def rep_index(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self))


def _check_ell(ell: int) -> int:
    if isinstance(ell, bool) or not isinstance(ell, (int, np.integer)) or ell < 2:
        raise SamplerError(f"ell must be an integer >= 2, got {ell!r}")
    return int(ell)


def standardize_xi(xi_count, n: int, ell: int):
    """(Xi - n/ell) / sqrt(n (1/ell)(1 - 1/ell)) with the analytic moments"""
    w = 1.0 / ell
    return (np.asarray(xi_count, dtype=float) - n * w) / math.sqrt(n * w * (1 - w))


def draw_labels(g: Graph, ell: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. uniform vertex labels on {1..ell}"""
    ell = _check_ell(ell)
    return rng.integers(1, ell + 1, size=g.vertex_count)


def edge_indicators(g: Graph, labels: np.ndarray, ell: int) -> Tuple[np.ndarray, int, float]:
    """D_k = 1 iff the endpoint labels of edge k coincide; returns (d, Xi, xi)"""
    labels = np.asarray(labels)
    if labels.shape != (g.vertex_count,):
        raise SamplerError(f"Expected {g.vertex_count} labels, got shape {labels.shape}")
    d = (labels[g.edges[:, 0]] == labels[g.edges[:, 1]]).astype(np.uint8)
    xi_count = int(d.sum())
    return d, xi_count, float(standardize_xi(xi_count, g.edge_count, _check_ell(ell)))


def xi_by_direction(g: Graph, labels: np.ndarray) -> np.ndarray:
    """Per-direction sums of the +/-1 indicators 2D - 1 on a hypercube"""
    directions = edge_directions(g)
    d = (labels[g.edges[:, 0]] == labels[g.edges[:, 1]]).astype(np.int64)
    return np.bincount(directions - 1, weights=2 * d - 1, minlength=g.size_param).astype(np.int64)


def xi_fast_bipartite(m: int, ell: int, rng: np.random.Generator, size: Optional[int] = None):
    """Xi = sum_i N1_i N2_i for two independent Multinomial(m, 1/ell) count vectors"""
    ell = _check_ell(ell)
    probs = np.full(ell, 1.0 / ell)
    n1 = rng.multinomial(m, probs, size=size)
    n2 = rng.multinomial(m, probs, size=size)
    xi_count = (n1 * n2).sum(axis=-1)
    return xi_count, standardize_xi(xi_count, m * m, ell)


def xi_fast_two_hub(m: int, rng: np.random.Generator, size: Optional[int] = None):
    """Xi = I 2B + (1 - I) m with I ~ Bernoulli(1/2), B ~ Binomial(m, 1/2)"""
    hubs_match = rng.integers(0, 2, size=size).astype(bool)
    b = rng.binomial(m, 0.5, size=size)
    xi_count = np.where(hubs_match, 2 * b, m)
    return xi_count, standardize_xi(xi_count, 2 * m, 2)


def xi_fast_fan(m: int, rng: np.random.Generator, size: Optional[int] = None):
    """Xi = I (1 + m + 2B) + (1 - I) 2(m - B) with B ~ Binomial(m, 1/4)"""
    ends_match = rng.integers(0, 2, size=size).astype(bool)
    b = rng.binomial(m, 0.25, size=size)
    xi_count = np.where(ends_match, 1 + m + 2 * b, 2 * (m - b))
    return xi_count, standardize_xi(xi_count, 3 * m + 1, 2)


def _fast_bipartite(m, ell, rng, size):
    return xi_fast_bipartite(m, ell, rng, size)[0]


def _fast_two_hub(m, ell, rng, size):
    return xi_fast_two_hub(m, rng, size)[0]


def _fast_fan(m, ell, rng, size):
    return xi_fast_fan(m, rng, size)[0]


FAST_PATHS: Dict[FamilyTag, Tuple[Callable, Optional[int]]] = {
    FamilyTag.BIPARTITE: (_fast_bipartite, None),
    FamilyTag.TWO_HUB: (_fast_two_hub, 2),
    FamilyTag.FAN: (_fast_fan, 2),
}


def has_fast_path(family: Union[str, FamilyTag], ell: int) -> bool:
    tag = FamilyTag.parse(family)
    if tag not in FAST_PATHS:
        return False
    required = FAST_PATHS[tag][1]
    return required is None or required == ell


def build_x_sequence(sample: SequenceSample, spec: MarginSpec,
                     rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """X_k from V where D_k = 1 and from U where D_k = 0; S_n standardized by (mu, sigma)"""
    if sample.d_values is None:
        raise SamplerError("Sample carries no edge indicators")
    if spec.ell != sample.ell:
        raise SamplerError(f"Margin was split for ell={spec.ell} but the sample uses ell={sample.ell}")
    d = sample.d_values.astype(bool)
    x_values = np.empty(sample.n)
    x_values[d] = spec.sample_V(rng, int(d.sum()))
    x_values[~d] = spec.sample_U(rng, int((~d).sum()))
    return x_values, standardized_sum(x_values.sum(), sample.n, spec)


def standardized_sum(total, n: int, spec: MarginSpec):
    return (np.asarray(total, dtype=float) - n * spec.mu) / (spec.sigma * math.sqrt(n))


def sample_sequence(g: Graph, ell: int, rng: np.random.Generator,
                    spec: Optional[MarginSpec] = None) -> SequenceSample:
    labels = draw_labels(g, ell, rng)
    d, xi_count, xi_std = edge_indicators(g, labels, ell)
    sample = SequenceSample(labels, d, xi_count, xi_std, ell)
    if spec is not None:
        sample.x_values, s_n = build_x_sequence(sample, spec, rng)
        sample.s_n = float(s_n)
    return sample


def block_rng(seed: int, block: int) -> np.random.Generator:
    """RNG stream owned by replication block `block`"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _part_sums(spec: MarginSpec, n: int, xi_count: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if spec.sigma2_U == 0 and spec.sigma2_V == 0:
        return (n - xi_count) * spec.mu_U + xi_count * spec.mu_V
    return np.array([spec.part_sum(rng, n - int(k), int(k)) for k in xi_count])


class Simulation:
    """Resolved inputs of one simulate call; runs one replication block at a time"""

    def __init__(self, g_or_family: GraphOrFamily, spec: Optional[MarginSpec], replications: int,
                 seed: int, fast_path: bool = False, ell: Optional[int] = None):
        self.logger = logging.getLogger(__name__)
        if isinstance(replications, bool) or not isinstance(replications, (int, np.integer)) or replications < 1:
            raise SamplerError(f"replications must be a positive integer, got {replications!r}")
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
            raise SamplerError(f"seed must be a non-negative integer, got {seed!r}")
        if spec is not None and ell is not None and spec.ell != ell:
            raise SamplerError(f"ell={ell} conflicts with the margin's ell={spec.ell}")
        ell = spec.ell if spec is not None else ell
        if ell is None:
            raise SamplerError("ell is required when no margin is attached")

        self.spec = spec
        self.ell = _check_ell(ell)
        self.replications = int(replications)
        self.seed = int(seed)
        self.fast_path = fast_path

        if isinstance(g_or_family, Graph):
            self.graph: Optional[Graph] = g_or_family
            self.family, self.param = g_or_family.family_tag, g_or_family.size_param
            self.n = g_or_family.edge_count
        else:
            family, param = g_or_family
            self.family, self.param = FamilyTag.parse(family), int(param)
            self.graph = None
            self.n = family_size(self.family, self.param)[1]

        if fast_path:
            if self.family not in FAST_PATHS:
                raise SamplerError(f"No fast path exists for family '{self.family.value}'")
            if not has_fast_path(self.family, self.ell):
                raise SamplerError(f"The '{self.family.value}' fast path requires ell="
                                   f"{FAST_PATHS[self.family][1]}, got ell={self.ell}")
        elif self.graph is None:
            self.graph = generate(self.family, self.param)

    @property
    def block_count(self) -> int:
        return -(-self.replications // REPLICATION_BLOCK)

    def run_block(self, block: int) -> SimulationBlock:
        rng = block_rng(self.seed, block)
        start = block * REPLICATION_BLOCK
        size = min(REPLICATION_BLOCK, self.replications - start)
        self.logger.debug(f"Block {block}: replications {start}..{start + size - 1}")

        if self.fast_path:
            kernel = FAST_PATHS[self.family][0]
            xi_count = np.asarray(kernel(self.param, self.ell, rng, size), dtype=np.int64)
            s_n = None
            if self.spec is not None:
                s_n = standardized_sum(_part_sums(self.spec, self.n, xi_count, rng), self.n, self.spec)
            return SimulationBlock(start, xi_count, standardize_xi(xi_count, self.n, self.ell), s_n)

        xi_count = np.empty(size, dtype=np.int64)
        s_n = np.empty(size) if self.spec is not None else None
        for j in range(size):
            sample = sample_sequence(self.graph, self.ell, rng, self.spec)
            xi_count[j] = sample.xi_count
            if s_n is not None:
                s_n[j] = sample.s_n
        return SimulationBlock(start, xi_count, standardize_xi(xi_count, self.n, self.ell), s_n)


def simulate(g_or_family: GraphOrFamily, spec: Optional[MarginSpec], replications: int, seed: int,
             fast_path: bool = False, ell: Optional[int] = None,
             workers: Optional[int] = None) -> Iterator[SimulationBlock]:
    """
    Stream replication blocks in replication order. Replication j is drawn from
    the stream of block j // REPLICATION_BLOCK, so the output depends only on
    (seed, inputs) and never on the worker count.
    """
    simulation = Simulation(g_or_family, spec, replications, seed, fast_path, ell)
    return _stream(simulation, workers or WORKER_THREADS)


def _stream(simulation: Simulation, workers: int) -> Iterator[SimulationBlock]:
    logger.info(f"Simulating {simulation.replications} replications of {simulation.family.value} "
                f"(param={simulation.param}, n={simulation.n}, ell={simulation.ell}) "
                f"fast_path={simulation.fast_path} on {workers} worker(s)")
    started = time.perf_counter()
    if workers == 1 or simulation.block_count == 1:
        for block in range(simulation.block_count):
            yield simulation.run_block(block)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(simulation.run_block, range(simulation.block_count))
    logger.info(f"Simulation finished in {time.perf_counter() - started:.3f}s")


def simulate_to_frame(g_or_family: GraphOrFamily, spec: Optional[MarginSpec], replications: int,
                      seed: int, fast_path: bool = False, ell: Optional[int] = None,
                      workers: Optional[int] = None) -> pd.DataFrame:
    """Collect simulate output into rep_index, xi_count, xi_std, s_n columns"""
    blocks = list(simulate(g_or_family, spec, replications, seed, fast_path, ell, workers))
    xi_count = np.concatenate([b.xi_count for b in blocks])
    s_n = (np.concatenate([b.s_n for b in blocks]) if spec is not None
           else np.full(xi_count.shape, np.nan))
    return pd.DataFrame({
        "rep_index": np.concatenate([b.rep_index for b in blocks]),
        "xi_count": xi_count,
        "xi_std": np.concatenate([b.xi_std for b in blocks]),
        "s_n": s_n,
    })


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial_pmf(m: int, ell: int) -> List[Tuple[Tuple[int, ...], Fraction]]:
    table = []
    for counts in _compositions(m, ell):
        ways = math.factorial(m)
        for c in counts:
            ways //= math.factorial(c)
        table.append((counts, Fraction(ways, ell ** m)))
    return table


def representation_pmf(family: Union[str, FamilyTag], m: int, ell: int = 2) -> Dict[int, Fraction]:
    """Exact pmf of the fast-path representation of Xi, as rationals"""
    tag = FamilyTag.parse(family)
    if not has_fast_path(tag, ell):
        raise SamplerError(f"No closed-form representation for '{tag.value}' at ell={ell}")
    pmf: Dict[int, Fraction] = {}

    def add(value: int, mass: Fraction):
        pmf[value] = pmf.get(value, Fraction(0)) + mass

    if tag is FamilyTag.BIPARTITE:
        table = _multinomial_pmf(m, ell)
        for c1, p1 in table:
            for c2, p2 in table:
                add(sum(a * b for a, b in zip(c1, c2)), p1 * p2)
    elif tag is FamilyTag.TWO_HUB:
        add(m, Fraction(1, 2))
        for b in range(m + 1):
            add(2 * b, Fraction(comb(m, b), 2 ** (m + 1)))
    else:
        for b in range(m + 1):
            mass = Fraction(comb(m, b) * 3 ** (m - b), 2 * 4 ** m)
            add(1 + m + 2 * b, mass)
            add(2 * (m - b), mass)
    return dict(sorted(pmf.items()))


def benchmark_bipartite_fast_path(m: int = 1000, ell: int = 2, replications: int = 20,
                                  seed: int = 0) -> float:
    """Speedup of the multinomial kernel over the O(m^2) edge path; logged, not enforced"""
    g = generate(FamilyTag.BIPARTITE, m)
    rng = block_rng(seed, 0)
    started = time.perf_counter()
    for _ in range(replications):
        edge_indicators(g, draw_labels(g, ell, rng), ell)
    slow = time.perf_counter() - started
    started = time.perf_counter()
    for _ in range(replications):
        xi_fast_bipartite(m, ell, rng)
    fast = max(time.perf_counter() - started, 1e-9)
    speedup = slow / fast
    level = logging.INFO if speedup >= 50 else logging.WARNING
    logger.log(level, f"Bipartite fast path at m={m}, ell={ell}: {speedup:.1f}x faster than the edge path")
    return speedup

"""Two-state Gibbs model on a finite graph with an auxiliary-slab embedding.

Spins live in {0,1}^V and the energy is H(x) = -(1 + #agreeing edges), so
-H(x) >= 1 everywhere.  Lifting each configuration x to the vertical segment
{x} x [0, exp(-beta*H(x))] gives a nested family whose slab measure equals
the partition function Z(beta), which is what lets the generic shrinking
engine estimate Z(beta)/Z(0) with Z(0) = 2^V known.

Everything here is exact: small graphs are enumerated outright (grouped by
energy level, so per-step work is proportional to the number of distinct
energies, not the number of configurations).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .errors import EnumerationCapError
from .families import NestedFamily, open_unit_uniform

__all__ = [
    "LatticeGraph",
    "GibbsFamily",
    "hamiltonian",
    "brute_force_log_z",
    "brute_force_z",
    "exact_gibbs_sample",
    "sample_energy_levels",
    "gibbs_shrink_step",
    "beta_update",
    "expected_run_cost",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 24


@dataclass(frozen=True)
class LatticeGraph:
    """Finite simple graph: vertex count plus an edge list of unordered pairs."""

    n_vertices: int
    edges: tuple

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @classmethod
    def lattice(cls, width: int, height: int, periodic: bool = False) -> "LatticeGraph":
        """Rectangular grid; periodic=True wraps both directions."""
        if width < 1 or height < 1:
            raise ValueError("lattice dimensions must be positive")

        def vid(i, j):
            return i * width + j

        edges = set()
        for i in range(height):
            for j in range(width):
                if j + 1 < width:
                    edges.add((vid(i, j), vid(i, j + 1)))
                elif periodic and width > 2:
                    edges.add((vid(i, 0), vid(i, j)))
                if i + 1 < height:
                    edges.add((vid(i, j), vid(i + 1, j)))
                elif periodic and height > 2:
                    edges.add((vid(0, j), vid(i, j)))
        return cls(width * height, tuple(sorted(edges)))

    @classmethod
    def from_edge_list_file(cls, path) -> "LatticeGraph":
        """Text file with one 'u v' pair per line; vertex count inferred."""
        edges = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                u, v = map(int, line.split())
                edges.append((u, v))
        if not edges:
            raise ValueError(f"no edges found in {path}")
        n = max(max(u, v) for u, v in edges) + 1
        return cls(n, tuple(edges))


def hamiltonian(x, g: LatticeGraph) -> float:
    """H(x) = -(1 + number of agreeing edges); always at most -1."""
    x = np.asarray(x)
    if x.shape != (g.n_vertices,):
        raise ValueError(
            f"configuration has shape {x.shape}, expected ({g.n_vertices},)"
        )
    agree = 0
    for u, v in g.edges:
        if x[u] == x[v]:
            agree += 1
    return float(-(1 + agree))


class _Enumeration:
    """Exhaustive energy table for one graph, grouped by energy level."""

    CHUNK = 1 << 16

    def __init__(self, g: LatticeGraph):
        if g.n_vertices > ENUMERATION_CAP:
            raise EnumerationCapError(
                f"{g.n_vertices} vertices exceeds the enumeration cap "
                f"({ENUMERATION_CAP}); plug in an external sampler instead"
            )
        self.graph = g
        n = g.n_vertices
        total = 1 << n
        shifts = np.arange(n, dtype=np.uint32)
        us = np.array([e[0] for e in g.edges], dtype=np.intp)
        vs = np.array([e[1] for e in g.edges], dtype=np.intp)
        neg_energy = np.empty(total, dtype=np.int32)
        for start in range(0, total, self.CHUNK):
            idx = np.arange(start, min(start + self.CHUNK, total), dtype=np.uint64)
            bits = (idx[:, None] >> shifts) & 1
            agree = np.sum(bits[:, us] == bits[:, vs], axis=1) if len(us) else 0
            neg_energy[start : start + len(idx)] = 1 + agree
        self.neg_energy = neg_energy
        self.levels, self.level_counts = np.unique(neg_energy, return_counts=True)
        self.log_level_counts = np.log(self.level_counts)
        # Config indices sorted by energy level, for within-level sampling.
        self._order = np.argsort(neg_energy, kind="stable")
        self._level_offsets = np.concatenate(([0], np.cumsum(self.level_counts)))

    def log_z(self, beta: float) -> float:
        return float(logsumexp(self.log_level_counts + beta * self.levels))

    def sample_level(self, beta: float, rng) -> int:
        """Draw -H(X) for X ~ pi_beta."""
        logw = self.log_level_counts + beta * self.levels
        p = np.exp(logw - logsumexp(logw))
        p /= p.sum()
        i = rng.choice(len(self.levels), p=p)
        return int(self.levels[i])

    def sample_config(self, beta: float, rng) -> np.ndarray:
        logw = self.log_level_counts + beta * self.levels
        p = np.exp(logw - logsumexp(logw))
        p /= p.sum()
        i = rng.choice(len(self.levels), p=p)
        j = rng.integers(self._level_offsets[i], self._level_offsets[i + 1])
        idx = int(self._order[j])
        n = self.graph.n_vertices
        return ((idx >> np.arange(n)) & 1).astype(np.int8)


@lru_cache(maxsize=32)
def _enumeration(g: LatticeGraph) -> _Enumeration:
    return _Enumeration(g)


def brute_force_log_z(beta: float, g: LatticeGraph) -> float:
    """ln Z(beta) by exhaustive enumeration (log-sum-exp throughout)."""
    return _enumeration(g).log_z(beta)


def brute_force_z(beta: float, g: LatticeGraph) -> float:
    """Z(beta) on the linear scale; exact where representable (Z(0) = 2^V
    comes out as an exact float), log-space fallback on overflow."""
    enum = _enumeration(g)
    with np.errstate(over="ignore"):
        total = float(np.sum(enum.level_counts * np.exp(beta * enum.levels)))
        if not math.isfinite(total):
            total = float(np.exp(enum.log_z(beta)))
    return total


def exact_gibbs_sample(beta: float, g: LatticeGraph, rng) -> np.ndarray:
    """Exact draw from pi_beta(x) = exp(-beta H(x)) / Z(beta)."""
    return _enumeration(g).sample_config(beta, rng)


def sample_energy_levels(beta: float, g: LatticeGraph, size: int, rng) -> np.ndarray:
    """Vectorized draws of -H(X) for X ~ pi_beta."""
    enum = _enumeration(g)
    logw = enum.log_level_counts + beta * enum.levels
    p = np.exp(logw - logsumexp(logw))
    p /= p.sum()
    return rng.choice(enum.levels, size=size, p=p)


def beta_update(neg_energy: float, beta_i: float, y: float) -> float:
    """Deterministic part of the shrink: beta_next = ln(y) / (-H(x))."""
    if neg_energy < 1:
        raise ValueError("-H(x) must be at least 1")
    return float(np.log(y)) / neg_energy


def gibbs_shrink_step(x, g: LatticeGraph, beta_i: float, rng) -> float:
    """Auxiliary-height update: Y ~ Uniform(0, exp(-beta_i H(x))), then
    beta_next = ln(Y)/(-H(x)) = beta_i + ln(U)/(-H(x)).

    Drawing U from the open interval keeps the shrink strict.
    """
    neg_h = -hamiltonian(x, g)
    return _gibbs_step_from_neg_energy(neg_h, beta_i, rng)


def _gibbs_step_from_neg_energy(neg_energy: float, beta_i: float, rng) -> float:
    u = open_unit_uniform(rng)
    return beta_i + float(np.log(u)) / neg_energy


def expected_run_cost(beta: float, g: LatticeGraph) -> float:
    """Mean samples per run from shell beta to center 0:
    1 + ln Z(beta) - #V ln 2."""
    return 1.0 + brute_force_log_z(beta, g) - g.n_vertices * np.log(2.0)


class GibbsFamily(NestedFamily):
    """Auxiliary-slab nested family for a two-state Gibbs model.

    Shell at the user-chosen inverse temperature, center at 0 (where the slab
    measure is exactly 2^V).  The point descriptor returned by :meth:`draw` is
    the sampled negative energy -H(X), which is all the shrink update needs;
    use :func:`exact_gibbs_sample` for full configurations.
    """

    def __init__(self, graph: LatticeGraph, beta: float):
        if beta <= 0:
            raise ValueError("shell inverse temperature must be positive")
        self.graph = graph
        self.beta_shell = float(beta)
        self.beta_center = 0.0
        self._enum = _enumeration(graph)

    def draw(self, beta, rng):
        neg_energy = self._enum.sample_level(beta, rng)
        beta_next = _gibbs_step_from_neg_energy(neg_energy, beta, rng)
        return neg_energy, beta_next

    def log_measure(self, beta):
        return self._enum.log_z(beta)

    @property
    def lambda_at_least_one(self):
        return self.log_ratio_span() >= 1.0

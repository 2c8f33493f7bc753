# -*- coding: utf-8 -*-
"""Asymptotic Plateau problem: phase partitions in the ρ → 0 limit and their edge cuts.

A partition D0 ⊔ D1 of the ball is b_Ω-minimal in a window Ω if no set agreeing with D0 outside
Ω^in crosses fewer Ω-internal edges. Minimality is certified by exhaustive enumeration of the
2^{#Ω^in} competitors and by an s-t minimum cut.
"""

import dataclasses
import json
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp

from allen_cahn import PhasePartition, Potential, action_values, classify_phases, two_valued
from boundary import BoundaryPoint, BoundarySpec, CylinderUnion, cone
from cayley import CayleyBall, Subset, geodesic, inner_set
from dirichlet import ComponentsAudit, DirichletProblem, connected_windows, solve_one

log = logging.getLogger(__name__)


class StabilizationError(RuntimeError):
    def __init__(self, message: str, sites: Subset) -> None:
        super().__init__(message)
        self.sites = sites


class CapExceededError(ValueError):
    """Exhaustive certification requested on a window with too many free sites."""


@dataclass(frozen=True)
class CutWindow:
    ball: CayleyBall
    omega: Subset
    omega_in: Subset

    @classmethod
    def make(cls, ball: CayleyBall, omega: Subset) -> "CutWindow":
        omega = np.asarray(omega, dtype=bool)
        if omega.shape != (ball.size,):
            raise ValueError("window does not match the ball")
        return cls(ball, omega, inner_set(ball, omega, allow_rim=True))

    @classmethod
    def ball_window(cls, ball: CayleyBall, m: int, centre: int = 0) -> "CutWindow":
        dist = ball.distance_from(np.arange(ball.size) == centre)
        return cls.make(ball, (dist >= 0) & (dist <= m))

    @property
    def free_sites(self) -> Subset:
        return self.omega_in

    def internal_edges(self) -> Tuple[np.ndarray, np.ndarray]:
        src, dst = self.ball.undirected_edges()
        keep = self.omega[src] & self.omega[dst]
        return src[keep], dst[keep]

    def describe(self) -> Dict[str, object]:
        spec, words = self.ball.spec, self.ball.words
        return {
            "omega": [spec.format(words[i]) for i in np.flatnonzero(self.omega).tolist()],
            "free": int(self.omega_in.sum()),
        }


def edge_cut(B: Subset, window: CutWindow) -> int:
    """b_Ω(B): ordered pairs (g, gs) in Ω×Ω with g in B and gs not in B."""
    B = np.asarray(B, dtype=bool)
    src, dst = window.internal_edges()
    return int(np.count_nonzero(B[src] != B[dst]))


def cut_edges(partition: PhasePartition, window: CutWindow) -> List[Tuple[int, int]]:
    src, dst = window.internal_edges()
    cross = partition.D0[src] != partition.D0[dst]
    return list(zip(src[cross].tolist(), dst[cross].tolist()))


# certification


@dataclass
class Certification:
    window: Dict[str, object]
    mode: str
    b_omega: int
    minimum: int
    witness: Optional[List[str]]
    exhaustive_minimum: Optional[int] = None
    oracle_minimum: Optional[int] = None

    @property
    def minimal(self) -> bool:
        return self.b_omega <= self.minimum

    @property
    def agree(self) -> Optional[bool]:
        if self.exhaustive_minimum is None or self.oracle_minimum is None:
            return None
        return self.exhaustive_minimum == self.oracle_minimum

    def to_json(self) -> str:
        out = dataclasses.asdict(self)
        out["minimal"] = self.minimal
        return json.dumps(out, sort_keys=True)


class PlateauCertifier:
    """Exhaustive and min-cut certification of b_Ω-minimality."""

    BRUTE_FORCE_CAP: int = 20
    """Largest #Ω^in enumerated exhaustively"""
    CHUNK: int = 1 << 16
    """Bitmasks evaluated per vectorised batch"""

    def __init__(self, cap: Optional[int] = None) -> None:
        self.cap = self.BRUTE_FORCE_CAP if cap is None else cap

    def exhaustive(self, D0: Subset, window: CutWindow) -> Tuple[int, Subset]:
        """Minimum of b_Ω over all sets agreeing with D0 off Ω^in, and a minimising set."""
        free = np.flatnonzero(window.omega_in)
        if free.size > self.cap:
            raise CapExceededError(f"{free.size} free sites exceed the cap {self.cap}")
        src, dst = window.internal_edges()
        bit = np.full(window.ball.size, -1, dtype=np.int64)
        bit[free] = np.arange(free.size)
        fixed = np.asarray(D0, dtype=bool)

        best_value = math.inf
        best_mask = 0
        total = 1 << free.size
        for start in range(0, total, self.CHUNK):
            masks = np.arange(start, min(start + self.CHUNK, total), dtype=np.int64)
            cut = np.zeros(masks.size, dtype=np.int64)
            for u, v in zip(src.tolist(), dst.tolist()):
                lu = (masks >> bit[u]) & 1 if bit[u] >= 0 else int(fixed[u])
                lv = (masks >> bit[v]) & 1 if bit[v] >= 0 else int(fixed[v])
                cut += np.not_equal(lu, lv)
            j = int(np.argmin(cut))
            if cut[j] < best_value:
                best_value = int(cut[j])
                best_mask = int(masks[j])
        best = fixed.copy()
        for i, site in enumerate(free.tolist()):
            best[site] = bool((best_mask >> i) & 1)
        return int(best_value), best

    @staticmethod
    def oracle(D0: Subset, window: CutWindow) -> Tuple[int, Subset]:
        """Minimum s-t cut with the fixed D0 sites contracted to s and the others to t."""
        D0 = np.asarray(D0, dtype=bool)
        free = window.omega_in
        src, dst = window.internal_edges()

        def node(i: int):
            if free[i]:
                return i
            return "s" if D0[i] else "t"

        graph = nx.DiGraph()
        graph.add_nodes_from(["s", "t"])
        graph.add_nodes_from(np.flatnonzero(free).tolist())
        constant = 0
        for u, v in zip(src.tolist(), dst.tolist()):
            a, b = node(u), node(v)
            if a == b:
                continue
            if {a, b} == {"s", "t"}:
                constant += 1
                continue
            for x, y in ((a, b), (b, a)):
                if graph.has_edge(x, y):
                    graph[x][y]["capacity"] += 1
                else:
                    graph.add_edge(x, y, capacity=1)
        value, (reachable, _) = nx.minimum_cut(graph, "s", "t", flow_func=edmonds_karp)
        best = D0.copy()
        for i in np.flatnonzero(free).tolist():
            best[i] = i in reachable
        return int(value) + constant, best

    def certify(
        self, partition: PhasePartition, window: CutWindow, mode: str = "both"
    ) -> Certification:
        if mode not in ("exhaustive", "oracle", "both"):
            raise ValueError(f"unknown certification mode {mode!r}")
        n_free = int(window.omega_in.sum())
        if mode == "exhaustive" and n_free > self.cap:
            raise CapExceededError(f"{n_free} free sites exceed the cap {self.cap}")
        b = edge_cut(partition.D0, window)
        exhaustive_min = oracle_min = None
        witness_set = None
        if mode == "both" and n_free > self.cap:
            log.info("window with %d free sites: min cut only", n_free)
        if mode in ("exhaustive", "both") and n_free <= self.cap:
            exhaustive_min, witness_set = self.exhaustive(partition.D0, window)
        if mode in ("oracle", "both"):
            oracle_min, oracle_set = self.oracle(partition.D0, window)
            if witness_set is None:
                witness_set = oracle_set
        minimum = exhaustive_min if exhaustive_min is not None else oracle_min
        assert minimum is not None and witness_set is not None
        if exhaustive_min is not None and oracle_min is not None and exhaustive_min != oracle_min:
            log.error("exhaustive minimum %d differs from min cut %d", exhaustive_min, oracle_min)
        witness = None
        if minimum < b:
            spec, words = window.ball.spec, window.ball.words
            witness = [spec.format(words[i]) for i in np.flatnonzero(witness_set).tolist()]
        return Certification(
            window.describe(), mode, b, minimum, witness, exhaustive_min, oracle_min
        )


def plateau_certify(
    partition: PhasePartition, window: CutWindow, mode: str = "both", cap: Optional[int] = None
) -> Certification:
    return PlateauCertifier(cap).certify(partition, window, mode)


# windows


def default_windows(
    ball: CayleyBall,
    max_radius: int = 5,
    count: int = 100,
    rng: Optional[np.random.Generator] = None,
) -> List[CutWindow]:
    """Balls B_m for m <= max_radius within the ball, plus random connected windows."""
    rng = np.random.default_rng(0) if rng is None else rng
    radii = range(min(max_radius, ball.radius) + 1)
    out = [CutWindow.make(ball, ball.ball_mask(m)) for m in radii]
    out += [CutWindow.make(ball, w) for w in connected_windows(ball, count, rng)]
    return out


# ρ ladder


def separation_margin(C_hat: float, h: float, n: int, sigma: float) -> float:
    """(1 - 2σ)² - Ĉe^{hn} / (Ĉe^{hn} + 1); positive when the ladder rung separates."""
    growth = C_hat * math.exp(h * n)
    return (1.0 - 2.0 * sigma) ** 2 - growth / (growth + 1.0)


def sigma_lower_bound(rho: float, potential: Potential, sigma0: float) -> float:
    """A-priori lower bound for the distance of a solution with a phase interface from the two
    phase values: ρ(c1 - c0) / max |V''| on [c0 - σ0, c1 + σ0]."""
    grid = np.linspace(potential.c0 - sigma0, potential.c1 + sigma0, 2001)
    return rho * (potential.c1 - potential.c0) / float(np.abs(potential.second(grid)).max())


def default_ladder(rho1: float, depth: int) -> List[float]:
    """ρ_n = ρ1·4^{-n}, n = 1..depth."""
    return [rho1 * 4.0 ** (-n) for n in range(1, depth + 1)]


def rho_sweep(
    problem: DirichletProblem,
    ladder: Optional[Sequence[float]] = None,
    C_tilde: float = 1.0,
    h: Optional[float] = None,
    depth: int = 4,
    m: Optional[int] = None,
    N: Optional[int] = None,
) -> PhasePartition:
    """Solve along a decreasing ρ ladder and return the stabilised phase partition."""
    config = problem.config
    ladder = default_ladder(config.rho1, depth) if ladder is None else list(ladder)
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("rho ladder must be strictly decreasing")
    if ladder[0] > config.rho1 * (1 + 1e-12):
        raise ValueError(f"rho ladder starts above rho1 = {config.rho1:.6g}")
    spec = problem.spec
    h = spec.entropy_closed_form if h is None else h
    if h is None:
        raise ValueError("entropy must be given for groups without a closed form")
    C_hat = spec.num_generators * C_tilde
    N = problem.N_list[-1] if N is None else N
    m = min(4, N - 1) if m is None else m

    partitions: List[PhasePartition] = []
    rungs: List[Dict[str, float]] = []
    for n, rho in enumerate(ladder, start=1):
        field, _, _ = solve_one(dataclasses.replace(problem, rho=rho), N)
        partition = classify_phases(field, config.sigma0)
        y = two_valued(field.ball, partition.D0, field.pot)
        sigma = float(np.abs(field.values - y).max())
        margin = separation_margin(C_hat, h, n, sigma)
        rungs.append({"rho": rho, "sigma": sigma, "margin": margin})
        log.info("rung %d: rho=%.4g sigma=%.3e margin=%.3e", n, rho, sigma, margin)
        if margin <= 0:
            raise ValueError(f"rung {n} (rho={rho:.4g}) violates the separation inequality")
        if partition.violations:
            raise ValueError(f"rung {n} has {partition.violations} sites in the middle band")
        partitions.append(partition)

    final = partitions[-1]
    window = final.ball.ball_mask(m)
    if len(partitions) >= 2:
        changed = (partitions[-2].D0 != final.D0) & window
        if changed.any():
            raise StabilizationError(f"labels on B_{m} changed at the last rung", changed)
    agreed = False
    for p in partitions:
        same = not np.any((p.D0 != final.D0) & window)
        if agreed and not same:
            log.warning("labels on B_%d left the limit after agreeing with it", m)
        agreed |= same
    return PhasePartition(final.ball, final.D0, final.D1, final.middle, rungs)


# partition audits


@dataclass
class SeparationAudit:
    passed: bool
    checked: int
    gaps: List[Tuple[int, int]]
    max_crossings: int


def separation_audit(
    partition: PhasePartition,
    D0: CylinderUnion,
    samples: int = 200,
    depth: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> SeparationAudit:
    """Every geodesic from a deep site of cone(D0) to a deep site of cone(D1) meets T."""
    ball = partition.ball
    spec = ball.spec
    rng = np.random.default_rng(0) if rng is None else rng
    if isinstance(D0, BoundaryPoint):
        return SeparationAudit(True, 0, [], 0)
    if not isinstance(D0, BoundarySpec):
        D0 = BoundarySpec.make(spec, [c.prefix for c in D0])
    depth = max(1, ball.radius // 2) if depth is None else depth
    deep = ball.lengths >= depth
    inner = np.flatnonzero(cone(ball, D0) & deep)
    outer = np.flatnonzero(cone(ball, D0.complement()) & deep)
    if inner.size == 0 or outer.size == 0:
        return SeparationAudit(True, 0, [], 0)
    T = partition.T
    graph = None if spec.is_tree else ball.graph()
    gaps: List[Tuple[int, int]] = []
    max_crossings = 0
    for _ in range(samples):
        g = int(rng.choice(inner))
        k = int(rng.choice(outer))
        if spec.is_tree:
            paths = [[ball.index_of(e.word) for e in geodesic(spec, ball.words[g], ball.words[k])]]
        else:
            assert graph is not None
            paths = list(nx.all_shortest_paths(graph, g, k))
        for path in paths:
            hits = int(np.count_nonzero(T[np.array(path)]))
            max_crossings = max(max_crossings, hits)
            if hits == 0:
                gaps.append((g, k))
                break
    if gaps:
        log.warning("%d sampled paths avoid the transition set", len(gaps))
    return SeparationAudit(not gaps, samples, gaps, max_crossings)


def infinite_components_audit(partition: PhasePartition) -> ComponentsAudit:
    """Every component of D0 and of D1 reaches the outermost sphere of the ball."""
    ball = partition.ball
    rim = ball.sphere_mask(ball.radius)
    islands: List[Subset] = []
    for region in (partition.D0, partition.D1):
        if not region.any():
            continue
        count, labels = ball.components(region)
        touching = set(np.unique(labels[rim & region]).tolist())
        islands += [labels == c for c in range(count) if c not in touching]
    return ComponentsAudit(not islands, islands)


@dataclass(frozen=True)
class ActionBridge:
    action: float
    cut_term: float
    leaving: int

    def holds(self, rtol: float = 1e-12, atol: float = 1e-15) -> bool:
        return abs(self.action - self.cut_term) <= rtol * abs(self.cut_term) + atol


def action_bridge(
    partition: PhasePartition, window: CutWindow, rho: float, potential: Potential
) -> ActionBridge:
    """W_Ω of the two-valued field against (ρ/2)(c1 - c0)²·b_Ω(D0).

    The action is taken without the constant #Ω·V(c0) and without the ρ/4-weighted pairs that
    leave Ω; ``leaving`` counts those pairs.
    """
    ball = partition.ball
    y = two_valued(ball, partition.D0, potential)
    gap = (potential.c1 - potential.c0) ** 2
    W = action_values(ball, y, window.omega, rho, potential, allow_rim=True)
    omega = np.flatnonzero(window.omega)
    nbrs = ball.adjacency[omega]
    valid = nbrs >= 0
    outside = valid & ~window.omega[np.maximum(nbrs, 0)]
    differs = partition.D0[np.maximum(nbrs, 0)] != partition.D0[omega][:, None]
    leaving = int(np.count_nonzero(outside & differs))
    W -= omega.size * float(potential.value(potential.c0))
    W -= rho / 4.0 * gap * leaving
    cut_term = rho / 2.0 * gap * edge_cut(partition.D0, window)
    return ActionBridge(W, cut_term, leaving)

# -*- coding: utf-8 -*-
"""Minimal Dirichlet problem at infinity.

Cone-seeded solves on a growing sequence of balls, the transition sets of the solutions, the audits
that a minimiser has to pass (components reach the rim, quasi-minimality), the constants of the
cascade estimate and the decay of a solution towards c0 / c1 deep inside a cone.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from allen_cahn import (
    ContinuationConfig,
    Potential,
    RhoTooLargeError,
    ScalarField,
    continue_from_seed,
    solve_dirichlet,
    two_valued,
)
from boundary import (
    BoundaryPoint,
    BoundarySpec,
    ConstantsReport,
    CylinderUnion,
    VisualMetricParams,
    calibrate_constants,
    cone,
    cone_oracle,
    visual_ball,
)
from cayley import (
    CayleyBall,
    GroupSpec,
    Subset,
    boundary_in,
    boundary_out,
    build_ball,
    inner_set,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirichletProblem:
    spec: GroupSpec
    D0: BoundarySpec
    rho: float
    N_list: Tuple[int, ...]
    config: ContinuationConfig
    potential: Potential = field(default_factory=Potential.quartic, compare=False)
    tol: float = 1e-10
    max_sweeps: int = 10_000

    def __post_init__(self) -> None:
        if self.D0.spec != self.spec:
            raise ValueError("boundary spec belongs to a different group")
        if not self.N_list:
            raise ValueError("at least one ball radius is needed")
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ValueError(f"ball radii must be increasing: {self.N_list}")
        if self.N_list[0] < 1:
            raise ValueError("ball radii must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    @classmethod
    def make(
        cls,
        spec: GroupSpec,
        prefixes: Sequence[str],
        N_list: Sequence[int],
        rho: Optional[float] = None,
        potential: Optional[Potential] = None,
        k: Optional[float] = None,
    ) -> "DirichletProblem":
        """Problem for D0 = union of the cylinders ``prefixes``; ρ defaults to ρ0/10."""
        potential = Potential.quartic() if potential is None else potential
        config = ContinuationConfig.from_potential(potential, spec.num_generators, k)
        rho = config.rho0 / 10.0 if rho is None else rho
        D0 = BoundarySpec.parse(spec, prefixes)
        return cls(spec, D0, rho, tuple(N_list), config, potential)

    def describe(self) -> Dict[str, object]:
        return {
            "group": self.spec.describe(),
            "D0": [self.spec.format(p) for p in self.D0.prefixes],
            "rho": self.rho,
            "N_list": list(self.N_list),
            "k": self.config.k,
            "potential": self.potential.describe(),
        }


# seeds and solves


def anti_continuum_seed(
    D0: CylinderUnion,
    ball: CayleyBall,
    R: Optional[int] = None,
    potential: Optional[Potential] = None,
) -> ScalarField:
    """c0 on the inner set of cone(D0), c1 elsewhere, as a ρ = 0 field.

    Membership of neighbours outside the ball is decided on words, so rim elements are classified
    as in the infinite group.
    """
    potential = Potential.quartic() if potential is None else potential
    spec = ball.spec
    R = spec.shadow_radius if R is None else R
    in_cone = cone(ball, D0, R)
    nbrs = ball.neighbor_values(in_cone, fill=True).astype(bool)
    inner = in_cone & np.all(nbrs, axis=1)
    rim = np.flatnonzero(in_cone & ~ball.internal)
    if rim.size:
        oracle = cone_oracle(spec, D0, R)
        for i in rim.tolist():
            word = ball.words[i]
            outside = [s for s, j in enumerate(ball.adjacency[i].tolist()) if j < 0]
            inner[i] = inner[i] and all(
                oracle.contains(spec.times_letter(word, s)) for s in outside
            )
    values = np.where(inner, potential.c0, potential.c1)
    return ScalarField(ball, values, 0.0, potential=potential)


@dataclass
class StabilizationMonitor:
    """Sup-difference of consecutive solutions on each fixed ball B_m."""

    radii: Tuple[int, ...]
    m_values: Tuple[int, ...]
    diffs: Dict[int, List[float]]

    def final(self, m: int) -> float:
        return self.diffs[m][-1] if self.diffs[m] else math.inf

    def stabilized(self, m: int, tol: float = 1e-8) -> bool:
        return self.final(m) < tol

    def non_increasing_from(self, m: int) -> Optional[int]:
        """First index past which the sup-differences on B_m no longer grow, or None."""
        d = self.diffs[m]
        for start in range(len(d)):
            if all(b <= a + 1e-15 for a, b in zip(d[start:], d[start + 1 :])):
                return start
        return None


@dataclass
class SequenceResult:
    fields: List[ScalarField]
    seeds: List[ScalarField]
    free: List[Subset]
    monitor: StabilizationMonitor


def _shared_values(small: ScalarField, big: ScalarField, m: int) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.flatnonzero(small.ball.ball_mask(m))
    other = np.array([big.ball.index_of(small.ball.words[i]) for i in idx.tolist()])
    return small.values[idx], big.values[other]


def solve_one(problem: DirichletProblem, N: int) -> Tuple[ScalarField, ScalarField, Subset]:
    """x^N on B_{N+1}: values outside (B_N)^in frozen to the cone seed."""
    ball = build_ball(problem.spec, N + 1)
    seed = anti_continuum_seed(problem.D0, ball, potential=problem.potential)
    free = ball.ball_mask(N - 1)
    potential = problem.potential
    result = solve_dirichlet(
        ball,
        seed.values,
        free,
        problem.rho,
        potential,
        tol=problem.tol,
        max_sweeps=problem.max_sweeps,
        config=problem.describe(),
    )
    field = result.field
    if problem.rho <= problem.config.rho0:
        # polish around the two-valued labels of the minimiser
        labels = np.abs(field.values - potential.c0) < np.abs(field.values - potential.c1)
        target = two_valued(ball, labels, potential)
        target[~free] = seed.values[~free]
        try:
            polished = continue_from_seed(
                ball, target, problem.rho, free, problem.config, potential, start=field.values
            )
            values = polished.field.values
            field = ScalarField(ball, values, problem.rho, ~free, potential, field.config)
        except (ValueError, RhoTooLargeError) as err:
            log.warning("N=%d: keeping the coordinate-descent solution (%s)", N, err)
    assert np.array_equal(field.values[~free], seed.values[~free])
    return field, seed, free


def solve_sequence(
    problem: DirichletProblem, monitor_radius: Optional[int] = None
) -> SequenceResult:
    fields: List[ScalarField] = []
    seeds: List[ScalarField] = []
    frees: List[Subset] = []
    for N in problem.N_list:
        log.info("solving on B_%d", N + 1)
        field, seed, free = solve_one(problem, N)
        fields.append(field)
        seeds.append(seed)
        frees.append(free)

    top = problem.N_list[0] - 1 if monitor_radius is None else monitor_radius
    m_values = tuple(range(0, max(top, 0) + 1))
    diffs: Dict[int, List[float]] = {m: [] for m in m_values}
    for small, big in zip(fields, fields[1:]):
        for m in m_values:
            a, b = _shared_values(small, big, m)
            diffs[m].append(float(np.abs(a - b).max()))
    monitor = StabilizationMonitor(tuple(problem.N_list), m_values, diffs)
    for m in m_values:
        log.info("B_%d: final sup-change %.3e", m, monitor.final(m))
    return SequenceResult(fields, seeds, frees, monitor)


# transition sets and audits


def _phase_one(field: ScalarField) -> Subset:
    return np.abs(field.values - field.pot.c1) <= np.abs(field.values - field.pot.c0)


@dataclass
class TransitionSet:
    sites: Subset
    edges: List[Tuple[int, int]]
    N: int
    distance_to_id: Optional[int]
    num_components: int


def extract_transition_set(field: ScalarField, sigma0: float) -> TransitionSet:
    """Sites with a neighbour whose value differs by at least 2σ0."""
    ball = field.ball
    x = field.values
    src, dst = ball.undirected_edges()
    jump = np.abs(x[src] - x[dst]) >= 2.0 * sigma0
    sites = ball.empty()
    sites[src[jump]] = True
    sites[dst[jump]] = True
    distance_to_id = int(ball.lengths[sites].min()) if sites.any() else None
    num_components, _ = ball.components(sites)
    edges = list(zip(src[jump].tolist(), dst[jump].tolist()))
    return TransitionSet(sites, edges, ball.radius - 1, distance_to_id, num_components)


@dataclass
class ComponentsAudit:
    passed: bool
    islands: List[Subset]


def connected_components_audit(
    field: ScalarField, reach: Optional[Subset] = None
) -> ComponentsAudit:
    """Every component of each phase region must meet ``reach`` (default: the outermost sphere)."""
    ball = field.ball
    reach = ball.sphere_mask(ball.radius) if reach is None else reach
    islands: List[Subset] = []
    phase1 = _phase_one(field)
    for region in (~phase1, phase1):
        if not region.any():
            continue
        count, labels = ball.components(region)
        touching = set(np.unique(labels[reach & region]).tolist())
        for c in range(count):
            if c not in touching:
                islands.append(labels == c)
    if islands:
        log.warning("%d phase components avoid the rim", len(islands))
    return ComponentsAudit(not islands, islands)


def quasi_minimality_audit(field: ScalarField, D: Subset, literal: bool = False) -> int:
    """6#S·#(∂^in D ∩ phase1) - #(∂^out phase1 ∩ D^in).

    ``literal=True`` counts ∂^out phase1 ∩ D instead of D^in.
    """
    ball = field.ball
    D = np.asarray(D, dtype=bool)
    phase1 = _phase_one(field)
    bound = 6 * ball.spec.num_generators * int((boundary_in(ball, D) & phase1).sum())
    target = D if literal else inner_set(ball, D)
    count = int((boundary_out(ball, phase1, allow_rim=True) & target).sum())
    return bound - count


# windows


def ball_windows(
    ball: CayleyBall, count: int, rng: np.random.Generator, max_radius: int = 2
) -> List[Subset]:
    """Balls of random radius around random centres, clipped to the internal sites."""
    centres = np.flatnonzero(ball.internal)
    out = []
    for _ in range(count):
        c = int(rng.choice(centres))
        m = int(rng.integers(0, max_radius + 1))
        dist = ball.distance_from(np.arange(ball.size) == c)
        out.append((dist >= 0) & (dist <= m) & ball.internal)
    return out


def connected_windows(
    ball: CayleyBall, count: int, rng: np.random.Generator, max_size: int = 12
) -> List[Subset]:
    """Random connected growths inside the internal sites."""
    centres = np.flatnonzero(ball.internal)
    out = []
    for _ in range(count):
        window = ball.empty()
        window[int(rng.choice(centres))] = True
        target = int(rng.integers(1, max_size + 1))
        while window.sum() < target:
            nbrs = ball.adjacency[window].ravel()
            nbrs = nbrs[nbrs >= 0]
            nbrs = nbrs[ball.internal[nbrs] & ~window[nbrs]]
            if nbrs.size == 0:
                break
            window[int(rng.choice(nbrs))] = True
        out.append(window)
    return out


def random_windows(
    ball: CayleyBall, count: int, rng: np.random.Generator, density: float = 0.1
) -> List[Subset]:
    out = []
    for _ in range(count):
        out.append((rng.random(ball.size) < density) & ball.internal)
    return out


# cascade constants


@dataclass
class MainLemmaConstants:
    r: float
    k: float
    L0: int
    n1_lower: float
    n1: float
    D: float
    h: float
    epsilon: float
    k0: float
    k1: float
    C_tilde: float
    C4: float
    C5: float
    num_generators: int

    @property
    def exponent(self) -> float:
        return 4.0 * self.D / (4.0 * self.D - 1.0)

    @property
    def ratio(self) -> float:
        """n_{i+1} / n_i."""
        return (self.D + 0.5) / (self.D + 0.25)

    @property
    def n1_admissible(self) -> bool:
        return self.n1 >= self.n1_lower

    def r_i(self, i: int) -> float:
        if i <= 0:
            return 0.0
        return 6.0 * self.r / math.pi**2 * math.fsum(1.0 / j**2 for j in range(1, i + 1))

    def d_i(self, i: int) -> float:
        return 6.0 * self.r / (math.pi**2 * (i + 1) ** 2)

    def n_i(self, i: int) -> float:
        return self.ratio ** (i - 1) * self.n1

    def t(self, n: float) -> float:
        return math.exp(-self.epsilon * n) / (4.0 * self.k1)

    def threshold(self, n: float) -> float:
        """k·e^{ε(D+¼)n}."""
        return self.k * math.exp(self.epsilon * (self.D + 0.25) * n)

    def M_i(self, i: int) -> int:
        n_next = self.n_i(i + 1)
        return math.ceil(n_next + self.ratio * self.threshold(n_next) + 1)

    def separating_count_bound(self, i: int) -> float:
        """Lower bound for the number of disjoint separating sets in V_i."""
        return self.k1 * self.d_i(i) * math.exp(self.epsilon * (self.n_i(i) - 1.0)) - 2.0

    def depth_bound(self) -> int:
        """Smallest m past which the cone of B_{r_1} holds enough phase 1 to start the cascade."""
        n0 = math.ceil(self.n1_lower)
        D = self.D
        arg = math.pi ** (2 * D) * self.k / (self.C5 * (6.0 * self.r) ** D)
        m = self.ratio * (1.0 + 1.0 / (4.0 * D)) * math.log(arg) * n0
        return max(0, math.ceil(m))

    def sequence(self, count: int) -> Dict[str, List[float]]:
        keys = ("i", "r_i", "d_i", "n_i", "M_i", "t_n")
        rows: Dict[str, List[float]] = {key: [] for key in keys}
        for i in range(1, count + 1):
            rows["i"].append(i)
            rows["r_i"].append(self.r_i(i))
            rows["d_i"].append(self.d_i(i))
            rows["n_i"].append(self.n_i(i))
            rows["M_i"].append(self.M_i(i))
            rows["t_n"].append(self.t(math.floor(self.n_i(i))))
        return rows


def least_l0(D: float) -> int:
    """Least integer L0 such that (log L)^{4D} < L for every L >= L0."""
    a = 4.0 * D
    if a <= math.e:
        return 1
    # largest root of u = a·log u, u = log L
    u_star = brentq(lambda u: u - a * math.log(u), a, a * a, xtol=1e-14)
    L0 = int(math.floor(math.exp(u_star))) + 1
    while math.log(L0 - 1) > a * math.log(math.log(L0 - 1)):
        L0 -= 1
    while not math.log(L0) > a * math.log(math.log(L0)):
        L0 += 1
    return L0


def compute_constants(
    r: float,
    problem: DirichletProblem,
    constants: Optional[ConstantsReport] = None,
    n1: Optional[float] = None,
    calibration_radius: int = 6,
) -> MainLemmaConstants:
    if r <= 0:
        raise ValueError("radius at infinity must be positive")
    if constants is None:
        constants = calibrate_constants(build_ball(problem.spec, calibration_radius))
    D, eps, h = constants.D, constants.epsilon, constants.h
    if D <= 0.25:
        raise ValueError(f"dimension D = {D:.4g} must exceed 1/4")
    q = problem.spec.num_generators
    k = (48.0 * q * constants.k0 * constants.C_tilde) ** (4.0 * D / (4.0 * D - 1.0))
    L0 = least_l0(D)
    C = constants.C_tilde
    k1_shifted = constants.k1 * math.exp(-eps)
    terms = (
        4.0 / (eps * (4.0 * D + 1.0)) * math.log(L0 / k),
        32.0 * h,
        2.0 / eps * math.log((k + 2.0 * C) * 4.0 * math.pi**2 / (3.0 * r * C * k1_shifted)),
    )
    n1_lower = max(terms)
    log.info("cascade constants: k=%.4g L0=%d n1_lower=%.4g", k, L0, n1_lower)
    return MainLemmaConstants(
        r=r,
        k=k,
        L0=L0,
        n1_lower=n1_lower,
        n1=n1_lower if n1 is None else n1,
        D=D,
        h=h,
        epsilon=eps,
        k0=constants.k0,
        k1=constants.k1,
        C_tilde=C,
        C4=constants.C4,
        C5=constants.C5,
        num_generators=q,
    )


@dataclass
class CascadeRow:
    N: int
    i: int
    n_i: float
    r_i: float
    count: int
    threshold: float
    triggered: bool
    conclusion: Optional[bool]


@dataclass
class CascadeReport:
    rows: List[CascadeRow]
    n1: float
    n1_lower: float
    n1_admissible: bool

    @property
    def passed(self) -> bool:
        return all(row.conclusion is not False for row in self.rows)

    @property
    def triggered(self) -> bool:
        return any(row.triggered for row in self.rows)


def _cone_of_ball(
    ball: CayleyBall, xi0: BoundaryPoint, r: float, consts: MainLemmaConstants, R: int
) -> Subset:
    params = VisualMetricParams(consts.epsilon, consts.h)
    return cone(ball, visual_ball(xi0, r, params, ball.spec), R)


def cascade_audit(
    fields: Sequence[ScalarField],
    xi0: BoundaryPoint,
    r: float,
    constants: MainLemmaConstants,
    phase1: Optional[Sequence[Subset]] = None,
    max_index: int = 64,
) -> CascadeReport:
    """Hypothesis and conclusions of the cascade estimate, per field and index i with n_i < N.

    ``phase1`` overrides the phase-1 region of each field.
    """
    rows: List[CascadeRow] = []
    for idx, field in enumerate(fields):
        ball = field.ball
        R = ball.spec.shadow_radius
        N = ball.radius - 1
        region = _phase_one(field) if phase1 is None else np.asarray(phase1[idx], dtype=bool)
        cones: Dict[int, Subset] = {}

        def cone_at(i: int) -> Subset:
            if i not in cones:
                cones[i] = _cone_of_ball(ball, xi0, constants.r_i(i), constants, R)
            return cones[i]

        active_from: Optional[int] = None
        i = 1
        while i <= max_index and constants.n_i(i) < N:
            n_i = constants.n_i(i)
            count = int((cone_at(i) & region).sum())
            threshold = constants.threshold(n_i)
            triggered = count >= threshold
            if triggered and active_from is None:
                active_from = i
            conclusion = None
            if active_from is not None:
                V = (cone_at(i + 1) & ~cone_at(i)) & ~ball.ball_mask(math.floor(n_i))
                conclusion = int((V & region).sum()) >= threshold
            r_i = constants.r_i(i)
            rows.append(CascadeRow(N, i, n_i, r_i, count, threshold, triggered, conclusion))
            i += 1
    if not any(row.triggered for row in rows):
        log.info(
            "cascade hypothesis not triggered (n1=%.4g, n1_lower=%.4g)",
            constants.n1,
            constants.n1_lower,
        )
    return CascadeReport(rows, constants.n1, constants.n1_lower, constants.n1_admissible)


# decay towards the phase values


@dataclass
class DecayRow:
    cylinder: str
    phase: int
    n: int
    deviation: float


@dataclass
class DecayReport:
    rows: List[DecayRow]
    rates: Dict[str, Optional[float]]
    monotone: bool
    within_band: bool
    k: float

    @property
    def passed(self) -> bool:
        rates_ok = all(rate is None or rate <= self.k for rate in self.rates.values())
        return self.monotone and self.within_band and rates_ok

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["cylinder", "phase", "n", "deviation"])
            for row in self.rows:
                writer.writerow([row.cylinder, row.phase, row.n, repr(row.deviation)])


def asymptotic_value_audit(
    field: ScalarField,
    D0: BoundarySpec,
    sigma0: float,
    k: float,
    floor: float = 1e-13,
) -> DecayReport:
    """max |x_g - c_j| over cone(cylinder) minus B_n, for the cylinders of D0 (j = 0) and of its
    complement (j = 1), and the geometric rate fitted to the deviations above ``floor``."""
    ball = field.ball
    spec = ball.spec
    pot = field.pot
    rows: List[DecayRow] = []
    rates: Dict[str, Optional[float]] = {}
    monotone = True
    worst = 0.0
    tests = [(c, 0) for c in D0.cylinders] + [(c, 1) for c in D0.complement()]
    for cyl, phase in tests:
        name = f"{spec.format(cyl.prefix)}:{phase}"
        target = pot.c0 if phase == 0 else pot.c1
        mask = cone(ball, [cyl])
        devs: List[float] = []
        for n in range(len(cyl.prefix) - 1, ball.radius + 1):
            sites = mask & ~ball.ball_mask(n)
            if not sites.any():
                break
            dev = float(np.abs(field.values[sites] - target).max())
            devs.append(dev)
            rows.append(DecayRow(name, phase, n, dev))
        monotone &= all(b <= a for a, b in zip(devs, devs[1:]))
        worst = max([worst] + devs)
        start = len(cyl.prefix) - 1
        ns = [start + j for j, d in enumerate(devs) if d > floor]
        if len(ns) >= 2:
            fit = linregress(np.array(ns, dtype=float), np.log([devs[n - start] for n in ns]))
            rates[name] = float(math.exp(fit.slope))
        else:
            rates[name] = None
    return DecayReport(rows, rates, monotone, worst <= sigma0, k)

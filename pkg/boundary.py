# -*- coding: utf-8 -*-
"""Boundary at infinity: rays, cylinders, the visual metric, shadows and cones.

A boundary point is an eventually periodic infinite normal-form word. The visual distance of two
points (or group elements) is e^{-ε·ℓ} with ℓ the length of their longest common prefix; on trees
ℓ is exactly the distance from the identity to the connecting geodesic.
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import linregress

from cayley import (
    CayleyBall,
    GroupSpec,
    Subset,
    Word,
    build_ball,
    distance,
    entropy_estimate,
    growth_constant,
    isoperimetric_audit,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundaryPoint:
    preperiod: Word
    period: Word

    @classmethod
    def make(
        cls, spec: GroupSpec, preperiod: Sequence[int], period: Sequence[int]
    ) -> "BoundaryPoint":
        point = cls(tuple(preperiod), tuple(period))
        if not point.period:
            raise ValueError("period must be nonempty")
        probe = point.ray(len(point.preperiod) + 3 * len(point.period))
        if not spec.is_reduced(probe):
            raise ValueError(
                f"ray {spec.format(point.preperiod)}({spec.format(point.period)})^∞ is not reduced"
            )
        return point

    @classmethod
    def parse(cls, spec: GroupSpec, preperiod: str, period: str) -> "BoundaryPoint":
        return cls.make(spec, _letters(spec, preperiod), _letters(spec, period))

    def ray(self, depth: int) -> Word:
        """First ``depth`` letters of the infinite word."""
        out = self.preperiod[:depth]
        while len(out) < depth:
            out += self.period
        return out[:depth]

    def same_point(self, other: "BoundaryPoint") -> bool:
        depth = max(len(self.preperiod), len(other.preperiod))
        depth += len(self.period) * len(other.period) + 1
        return self.ray(depth) == other.ray(depth)


def _letters(spec: GroupSpec, text: str) -> Word:
    lookup = {name: i for i, name in enumerate(spec.generators)}
    return tuple(lookup[ch] for ch in text)


@dataclass(frozen=True)
class Cylinder:
    """Rays whose normal form starts with ``prefix``."""

    prefix: Word

    def __post_init__(self) -> None:
        if not self.prefix:
            raise ValueError("cylinder prefix must be nonempty")


def _extensions(spec: GroupSpec, word: Word) -> List[Word]:
    out = []
    for s in range(spec.num_generators):
        longer = spec.times_letter(word, s)
        if longer == word + (s,):
            out.append(longer)
    return out


def _covered(spec: GroupSpec, word: Word, prefixes: Sequence[Word]) -> bool:
    """Whether every ray through ``word`` extends one of ``prefixes``."""
    deeper = False
    for w in prefixes:
        if len(w) <= len(word):
            if word[: len(w)] == w:
                return True
        elif w[: len(word)] == word:
            deeper = True
    if not deeper:
        return False
    return all(_covered(spec, ext, prefixes) for ext in _extensions(spec, word))


@dataclass(frozen=True)
class BoundarySpec:
    """D0 as a union of cylinders; D1 is its closed complement."""

    spec: GroupSpec
    cylinders: Tuple[Cylinder, ...]

    @classmethod
    def make(cls, spec: GroupSpec, prefixes: Sequence[Sequence[int]]) -> "BoundarySpec":
        words = sorted({spec.normal_form(p) for p in prefixes}, key=lambda w: (len(w), w))
        for w in words:
            if not w:
                raise ValueError("empty prefix denotes the whole boundary")
        kept: List[Word] = []
        for w in words:
            if not any(w[: len(v)] == v for v in kept):
                kept.append(w)
        if not kept:
            raise ValueError("boundary spec has no cylinders: phase 0 would be empty")
        if _covered(spec, (), kept):
            raise ValueError("cylinders cover the whole boundary: phase 1 would be empty")
        return cls(spec, tuple(Cylinder(w) for w in kept))

    @classmethod
    def parse(cls, spec: GroupSpec, prefixes: Sequence[str]) -> "BoundarySpec":
        return cls.make(spec, [_letters(spec, p) for p in prefixes])

    @property
    def prefixes(self) -> List[Word]:
        return [c.prefix for c in self.cylinders]

    def complement(self) -> List[Cylinder]:
        """D1 as a minimal list of cylinders."""
        out: List[Cylinder] = []

        def walk(word: Word) -> None:
            deeper = False
            for w in self.prefixes:
                if len(w) <= len(word) and word[: len(w)] == w:
                    return
                if len(w) > len(word) and w[: len(word)] == word:
                    deeper = True
            if not deeper:
                out.append(Cylinder(word))
                return
            for ext in _extensions(self.spec, word):
                walk(ext)

        walk(())
        return out

    def contains(self, point: BoundaryPoint) -> bool:
        return any(point.ray(len(w)) == w for w in self.prefixes)


def whole_boundary(spec: GroupSpec) -> List[Cylinder]:
    return [Cylinder(w) for w in _extensions(spec, ())]


CylinderUnion = Union[BoundarySpec, Sequence[Cylinder], BoundaryPoint]


def _prefixes_of(U: CylinderUnion) -> List[Word]:
    if isinstance(U, BoundaryPoint):
        return []  # a single point has empty interior
    if isinstance(U, BoundarySpec):
        return U.prefixes
    return [c.prefix for c in U]


@dataclass(frozen=True)
class VisualMetricParams:
    epsilon: float
    h: float
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.D <= 0.25:
            raise ValueError(f"dimension D = h/epsilon = {self.D:.4g} must exceed 1/4")

    @property
    def D(self) -> float:
        return self.h / self.epsilon

    @classmethod
    def for_spec(
        cls, spec: GroupSpec, epsilon: Optional[float] = None, h: Optional[float] = None
    ) -> "VisualMetricParams":
        if h is None:
            h = spec.entropy_closed_form
        if h is None:
            raise ValueError("entropy must be given for a group without closed form")
        return cls(epsilon=h / 2 if epsilon is None else epsilon, h=h)


Point = Union[BoundaryPoint, Word, Sequence[int]]


def _common_prefix(x: Word, y: Word) -> int:
    n = 0
    for a, b in zip(x, y):
        if a != b:
            break
        n += 1
    return n


def gromov_depth(x: Point, y: Point) -> Optional[int]:
    """Common-prefix depth of two points, ``None`` when they coincide."""
    if isinstance(x, BoundaryPoint) and isinstance(y, BoundaryPoint):
        if x.same_point(y):
            return None
        depth = max(len(x.preperiod), len(y.preperiod)) + len(x.period) * len(y.period) + 1
        return _common_prefix(x.ray(depth), y.ray(depth))
    if isinstance(x, BoundaryPoint):
        x, y = y, x
    xw = tuple(x)  # type: ignore
    if isinstance(y, BoundaryPoint):
        return _common_prefix(xw, y.ray(len(xw) + 1))
    yw = tuple(y)
    if xw == yw:
        return None
    return _common_prefix(xw, yw)


def visual_distance(x: Point, y: Point, params: VisualMetricParams) -> float:
    depth = gromov_depth(x, y)
    if depth is None:
        return 0.0
    return math.exp(-params.epsilon * depth)


def shadow_membership(spec: GroupSpec, xi: BoundaryPoint, g: Sequence[int], R: int) -> bool:
    """Whether the ray to ``xi`` passes within distance R of g."""
    if R < 0:
        raise ValueError("shadow radius must be non-negative")
    g = tuple(g)
    ray = xi.ray(len(g) + R)
    return min(distance(spec, g, ray[:t]) for t in range(len(ray) + 1)) <= R


def visual_ball(
    xi0: BoundaryPoint, r: float, params: VisualMetricParams, spec: GroupSpec
) -> List[Cylinder]:
    """The closed visual ball of radius r around xi0, as cylinders."""
    if r >= 1.0:
        return whole_boundary(spec)
    depth = int(math.ceil(-math.log(r) / params.epsilon - 1e-9))
    if depth <= 0:
        return whole_boundary(spec)
    return [Cylinder(xi0.ray(depth))]


class _ShadowOracle:
    """Membership of words in a cone, for words inside or outside a ball."""

    def __init__(self, spec: GroupSpec, U: CylinderUnion, R: int) -> None:
        self.spec = spec
        self.prefixes = _prefixes_of(U)
        self.R = R
        self.offsets = build_ball(spec, R).words if R > 0 else [()]
        self.maxlen = max((len(w) for w in self.prefixes), default=0)
        self.by_length: Dict[int, set] = {}
        for w in self.prefixes:
            self.by_length.setdefault(len(w), set()).add(w)
        self._cache: Dict[Word, bool] = {}

    def _cyl_covered(self, word: Word) -> bool:
        if len(word) >= self.maxlen:
            return any(word[:n] in ws for n, ws in self.by_length.items())
        hit = self._cache.get(word)
        if hit is None:
            hit = _covered(self.spec, word, self.prefixes)
            self._cache[word] = hit
        return hit

    def contains(self, word: Word) -> bool:
        if not self.prefixes:
            return False
        if self.R == 0:
            return self._cyl_covered(word)
        return all(self._cyl_covered(self.spec.multiply(word, u)) for u in self.offsets)


def cone(ball: CayleyBall, U: CylinderUnion, R: Optional[int] = None) -> Subset:
    """{g in ball : S(g, R) ⊆ U}."""
    R = ball.spec.shadow_radius if R is None else R
    oracle = _ShadowOracle(ball.spec, U, R)
    mask = ball.empty()
    if not oracle.prefixes:
        return mask
    for i, word in enumerate(ball.words):
        mask[i] = oracle.contains(word)
    return mask


def cone_oracle(spec: GroupSpec, U: CylinderUnion, R: Optional[int] = None) -> _ShadowOracle:
    return _ShadowOracle(spec, U, spec.shadow_radius if R is None else R)


# constants


@dataclass
class ConstantsReport:
    """Geometric constants with a provenance flag each (closed_form | calibrated | assumed)."""

    R: int
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C_tilde: float
    k0: float
    k1: float
    lam: float
    h: float
    D: float
    epsilon: float
    delta: float
    delta_tilde: float
    c_sandwich: float
    provenance: Dict[str, str] = field(default_factory=dict)

    def t(self, n: float) -> float:
        """Annulus width t_n = k1^{-1}/4 · e^{-εn}."""
        return math.exp(-self.epsilon * n) / (4.0 * self.k1)

    @property
    def params(self) -> VisualMetricParams:
        return VisualMetricParams(epsilon=self.epsilon, h=self.h, lam=self.lam)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConstantsReport":
        return cls(**json.loads(text))


def _shadow_diameter_scale(spec: GroupSpec, word: Word, R: int, offsets: List[Word]) -> int:
    hs = [spec.multiply(word, u) for u in offsets] if R > 0 else [word]
    if len(hs) == 1:
        return len(hs[0])
    depth = min(len(h) for h in hs)
    for h in hs[1:]:
        depth = min(depth, _common_prefix(hs[0], h))
    return depth


def calibrate_constants(
    ball: CayleyBall,
    epsilon: Optional[float] = None,
    samples: int = 1000,
    rng: Optional[np.random.Generator] = None,
) -> ConstantsReport:
    """Closed forms on trees, sampled maxima times a safety factor 2 otherwise."""
    SAFETY = 2.0
    spec = ball.spec
    rng = np.random.default_rng(0) if rng is None else rng
    prov: Dict[str, str] = {}

    h = spec.entropy_closed_form
    if h is None:
        h = entropy_estimate(ball).slope
        prov["h"] = "calibrated"
    else:
        prov["h"] = "closed_form"
    prov["epsilon"] = "assumed" if epsilon is None else "closed_form"
    eps = h / 2 if epsilon is None else epsilon
    D = h / eps
    if D <= 0.25:
        raise ValueError(f"dimension D = {D:.4g} must exceed 1/4")
    prov["D"] = prov["epsilon"]
    R = spec.shadow_radius
    prov["R"] = "closed_form" if spec.is_tree else "assumed"
    prov["delta"] = "closed_form"
    prov["delta_tilde"] = "assumed"

    q = spec.num_generators
    pick = rng.integers(1, ball.size, size=min(samples, ball.size - 1))
    if spec.is_tree:
        C1 = q / (q - 1)
        C2 = C4 = 1.0
        lam = 1.0
        C_tilde = q / (q - 2) if q > 2 else growth_constant(ball, h)
        k0 = 1.0 / ((q - 2) * math.log(2))
        c_sandwich = math.exp(eps)
        for name in ("C1", "C2", "C4", "lam", "C_tilde", "k0", "c_sandwich"):
            prov[name] = "closed_form"
    else:
        offsets = build_ball(spec, R).words
        s = 1.05 * h
        C1 = 1.0
        scale = 0.0
        lam_log = 0.0
        Z = float(np.exp(-s * ball.lengths).sum())
        for i in pick.tolist():
            word = ball.words[i]
            depth = _shadow_diameter_scale(spec, word, R, offsets)
            scale = max(scale, math.exp(eps * (len(word) - depth)))
            tail = shadow_tail_weight(ball, i, s, window=ball.radius - len(word)) / Z
            if tail > 0:
                ratio = tail * math.exp(h * len(word))
                C1 = max(C1, ratio, 1.0 / ratio)
            j = int(rng.integers(0, ball.size))
            other = ball.words[j]
            if other != word:
                gromov = (len(word) + len(other) - distance(spec, word, other)) / 2
                lam_log = max(lam_log, abs(_common_prefix(word, other) - gromov))
        C1 *= SAFETY
        C2 = C4 = SAFETY * scale
        lam = SAFETY * math.exp(eps * lam_log)
        C_tilde = SAFETY * growth_constant(ball, h)
        k0 = 0.0
        for i in pick[: min(200, pick.size)].tolist():
            around = ball.distance_from(np.arange(ball.size) == i)
            A = (around >= 0) & (around <= 1) & ball.internal
            if A.any():
                k0 = isoperimetric_audit(ball, A, k0).k0_empirical
        k0 = SAFETY * max(k0, isoperimetric_audit(ball, ball.ball_mask(ball.radius - 1)).ratio)
        c_sandwich = lam * math.exp(eps * (2 * R + 1))
        for name in ("C1", "C2", "C4", "lam", "C_tilde", "k0"):
            prov[name] = "calibrated"
        prov["c_sandwich"] = "assumed"

    C3 = C1 * math.exp(h) * C2**D
    prov["C3"] = "closed_form" if spec.is_tree else "calibrated"
    k1 = 1.0 / (4.0 * min(math.exp(eps) * C4, math.exp(eps * (2 * R + spec.delta_tilde)) * C2))
    prov["k1"] = "closed_form" if spec.is_tree else "calibrated"

    C5 = 1.0
    first = whole_boundary(spec)[0]
    r = math.exp(-eps * len(first.prefix))
    if ball.radius >= 2:
        growth = cone_growth_audit(
            ball, [first], r=r, params=VisualMetricParams(eps, h, lam), C4=C4, min_radius=2
        )
        if growth.envelope is not None:
            C5 = growth.envelope
    C5 *= SAFETY
    prov["C5"] = "calibrated"

    return ConstantsReport(
        R=R,
        C1=C1,
        C2=C2,
        C3=C3,
        C4=C4,
        C5=C5,
        C_tilde=C_tilde,
        k0=k0,
        k1=k1,
        lam=lam,
        h=h,
        D=D,
        epsilon=eps,
        delta=spec.delta,
        delta_tilde=spec.delta_tilde,
        c_sandwich=c_sandwich,
        provenance=prov,
    )


# separating sets


@dataclass(frozen=True)
class SeparatingSet:
    sites: Subset
    n: int
    t_n: float
    annulus: Tuple[float, float]
    degenerate: bool


def _annulus_reachable(
    word: Word, xi0: BoundaryPoint, lo: float, hi: float, eps: float
) -> bool:
    """Whether some ray through ``word`` has visual distance to xi0 in [lo, hi]."""
    depth = _common_prefix(word, xi0.ray(len(word)))
    if depth < len(word):
        d = math.exp(-eps * depth)
        return lo <= d <= hi
    # word lies on the ray to xi0: reachable values e^{-εj}, j >= |word|, and 0
    if lo <= 0.0:
        return True
    j_min = max(len(word), int(math.ceil(-math.log(hi) / eps - 1e-12))) if hi < 1 else len(word)
    j_max = int(math.floor(-math.log(lo) / eps + 1e-12))
    return j_min <= j_max


def separating_set(
    ball: CayleyBall,
    xi0: BoundaryPoint,
    r: float,
    n: int,
    constants: ConstantsReport,
) -> SeparatingSet:
    """A_{r,t_n}: elements outside B_n near rays whose endpoint lies in the annulus around xi0."""
    t = constants.t(n)
    lo, hi = r + t, r + 3 * t
    sites = ball.empty()
    if n >= ball.radius:
        return SeparatingSet(sites, n, t, (lo, hi), True)
    spec = ball.spec
    R = constants.R
    offsets = build_ball(spec, R).words if R > 0 else [()]
    start = int(ball.sphere_offsets[n + 1])
    for i in range(start, ball.size):
        word = ball.words[i]
        for u in offsets:
            if _annulus_reachable(spec.multiply(word, u), xi0, lo, hi, constants.epsilon):
                sites[i] = True
                break
    degenerate = not sites.any()
    if degenerate:
        log.info(
            "separating set empty at depth %d for r=%.4g (annulus [%.4g, %.4g])", n, r, lo, hi
        )
    return SeparatingSet(sites, n, t, (lo, hi), degenerate)


@dataclass(frozen=True)
class SeparationCheck:
    passed: bool
    escaped: Subset


def check_separation(
    ball: CayleyBall, sep: SeparatingSet, inner: Subset, outer: Subset
) -> SeparationCheck:
    """Exhaustive search for a path outside B_n from ``inner`` to the complement of ``outer``
    that avoids the separating set."""
    allowed = ~ball.ball_mask(sep.n) & ~sep.sites
    start = inner & allowed
    frontier = start.copy()
    seen = start.copy()
    while frontier.any():
        nbrs = ball.adjacency[frontier].ravel()
        nbrs = nbrs[nbrs >= 0]
        new = np.zeros_like(seen)
        new[nbrs] = True
        new &= allowed & ~seen
        seen |= new
        frontier = new
    escaped = seen & ~outer
    return SeparationCheck(passed=not escaped.any(), escaped=escaped)


def path_interception_rate(
    ball: CayleyBall,
    sep: SeparatingSet,
    inner: Subset,
    outer: Subset,
    num_paths: int = 200,
    max_steps: int = 200,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, int]:
    """Random walks outside B_n starting in ``inner``; fraction of walks reaching the complement
    of ``outer`` that hit the separating set first. Returns (rate, number of reaching walks)."""
    rng = np.random.default_rng(0) if rng is None else rng
    outside = ~ball.ball_mask(sep.n)
    starts = np.flatnonzero(inner & outside)
    if starts.size == 0:
        return 1.0, 0
    reached = intercepted = 0
    for _ in range(num_paths):
        g = int(rng.choice(starts))
        hit = bool(sep.sites[g])
        for _ in range(max_steps):
            if not outer[g]:
                reached += 1
                intercepted += hit
                break
            nbrs = ball.adjacency[g]
            nbrs = nbrs[(nbrs >= 0)]
            nbrs = nbrs[outside[nbrs]]
            if nbrs.size == 0:
                break
            g = int(rng.choice(nbrs))
            hit = hit or bool(sep.sites[g])
    return (intercepted / reached if reached else 1.0), reached


# growth of cones


@dataclass
class GrowthAudit:
    counts: List[int]
    slope: float
    intercept: float
    expected_slope: float
    envelope: Optional[float]
    emptied: bool

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["n", "count"])
            for n, count in enumerate(self.counts):
                writer.writerow([n, count])


def cone_growth_audit(
    ball: CayleyBall,
    U: CylinderUnion,
    r: Optional[float] = None,
    params: Optional[VisualMetricParams] = None,
    C4: float = 1.0,
    min_radius: int = 6,
) -> GrowthAudit:
    """Fit log #(C ∩ S_n) against n and report the envelope C5 of #(C ∩ S_n) / (r^D e^{εnD})."""
    if ball.radius < min_radius:
        raise ValueError(f"growth audit needs radius >= {min_radius}, got {ball.radius}")
    if params is None:
        params = VisualMetricParams.for_spec(ball.spec)
    mask = cone(ball, U)
    counts = [
        int(mask[ball.sphere_offsets[m] : ball.sphere_offsets[m + 1]].sum())
        for m in range(ball.radius + 1)
    ]
    arr = np.array(counts)
    nonzero = np.flatnonzero(arr)
    emptied = bool(nonzero.size and nonzero[-1] < ball.radius)
    if emptied:
        log.warning("cone empties at sphere %d before the ball rim", nonzero[-1] + 1)
    slope = intercept = float("nan")
    if nonzero.size >= 2:
        first = max(1, int(nonzero[0]))
        ns = np.arange(first, int(nonzero[-1]) + 1)
        fit = linregress(ns, np.log(arr[ns]))
        slope, intercept = float(fit.slope), float(fit.intercept)

    envelope = None
    if r is not None and nonzero.size:
        eps, D = params.epsilon, params.D
        ns = nonzero[np.exp(eps * nonzero) >= C4 / r]
        if ns.size:
            ratio = arr[ns] / (r**D * np.exp(eps * ns * D))
            envelope = float(max(ratio.max(), (1.0 / ratio).max()))
    return GrowthAudit(counts, slope, intercept, params.h, envelope, emptied)


# Patterson-Sullivan weights at finite s


def ps_weight(ball: CayleyBall, s: float, A: Subset, h: float) -> float:
    """Σ_A e^{-s|g|} / Σ_ball e^{-s|g|}."""
    if s <= h:
        raise ValueError(f"exponent s = {s} must exceed the entropy h = {h}")
    weights = np.exp(-s * ball.lengths)
    return float(weights[np.asarray(A, dtype=bool)].sum() / weights.sum())


def descendants(ball: CayleyBall, i: int, window: Optional[int] = None) -> Subset:
    """Elements whose word extends the word of element i, at most ``window`` letters longer."""
    mask = ball.empty()
    mask[i] = True
    frontier = np.array([i])
    word_len = int(ball.lengths[i])
    depth = 0
    limit = ball.radius - word_len if window is None else window
    while frontier.size and depth < limit:
        nbrs = ball.adjacency[frontier].ravel()
        nbrs = np.unique(nbrs[nbrs >= 0])
        nbrs = nbrs[ball.lengths[nbrs] == word_len + depth + 1]
        if not ball.spec.is_tree:
            word = ball.words[i]
            nbrs = np.array(
                [j for j in nbrs.tolist() if ball.words[j][:word_len] == word], dtype=np.int64
            )
        mask[nbrs] = True
        frontier = nbrs
        depth += 1
    return mask


def shadow_tail_weight(ball: CayleyBall, i: int, s: float, window: Optional[int] = None) -> float:
    """Unnormalised ν_s mass of the elements beyond element i."""
    tail = descendants(ball, i, window)
    return float(np.exp(-s * ball.lengths[tail]).sum())


@dataclass(frozen=True)
class ShadowScaling:
    depths: Tuple[int, ...]
    log_weights: Tuple[float, ...]
    slope: float
    s: float
    h: float

    @property
    def passed(self) -> bool:
        """Slope within 5% of -s; shallow balls bend it below -s."""
        return abs(self.slope + self.s) <= 0.05 * self.s


def ps_shadow_scaling(
    ball: CayleyBall, s: float, h: float, depths: Optional[Sequence[int]] = None
) -> ShadowScaling:
    """Regression of log ν_s(shadow of g) against |g|.

    Each shadow runs from g out to the rim, so deeper elements have shorter tails and the
    truncation of the ball shows up in the slope.
    """
    if s <= h:
        raise ValueError(f"exponent s = {s} must exceed the entropy h = {h}")
    if depths is None:
        depths = list(range(1, ball.radius // 2 + 1))
    if len(depths) < 2 or max(depths) >= ball.radius:
        raise ValueError(f"depths {list(depths)} need two values below the radius {ball.radius}")
    Z = float(np.exp(-s * ball.lengths).sum())
    logs = []
    for d in depths:
        i = int(ball.sphere_offsets[d])
        logs.append(math.log(shadow_tail_weight(ball, i, s) / Z))
    fit = linregress(np.array(depths, dtype=float), np.array(logs))
    log.debug("shadow scaling at s=%.4g: slope %.4g over depths %s", s, fit.slope, list(depths))
    return ShadowScaling(tuple(depths), tuple(logs), float(fit.slope), s, h)


# truncated cones


@dataclass(frozen=True)
class TruncatedCone:
    sites: Subset
    n: int
    inner_radius: float
    outer_radius: float
    c: float


def truncated_cone_neighborhood(
    ball: CayleyBall, xi0: BoundaryPoint, r: float, constants: ConstantsReport
) -> TruncatedCone:
    """C_{B_r(xi0)} \\ B_n, with n the largest integer such that C2 e^{-εn} >= r."""
    params = constants.params
    cylinders = visual_ball(xi0, r, params, ball.spec)
    mask = cone(ball, cylinders, constants.R)
    if mask.all():
        raise ValueError(f"radius {r} is too large: the cone is the whole ball")
    n = int(math.floor(math.log(constants.C2 / r) / constants.epsilon + 1e-9))
    n = max(n, 0)
    c = constants.c_sandwich
    return TruncatedCone(mask & ~ball.ball_mask(n), n, r / c, r * c, c)


def sandwich_holds(
    ball: CayleyBall, tc: TruncatedCone, xi0: BoundaryPoint, params: VisualMetricParams
) -> bool:
    """B_{r/c}(xi0) ∩ ball ⊆ truncated cone ⊆ B_{cr}(xi0), checked on every element."""
    d = np.array([visual_distance(w, xi0, params) for w in ball.words])
    inside_small = d <= tc.inner_radius * (1 + 1e-12)
    inside_large = d <= tc.outer_radius * (1 + 1e-12)
    return bool(np.all(tc.sites[inside_small]) and np.all(inside_large[tc.sites]))


def shadows_disjoint(spec: GroupSpec, g: Word, h: Word) -> bool:
    """Shadows with R = 0 on a tree are disjoint iff neither word extends the other."""
    n = min(len(g), len(h))
    return g[:n] != h[:n]


def sample_boundary_points(
    spec: GroupSpec, count: int, rng: np.random.Generator, max_pre: int = 4, max_period: int = 3
) -> List[BoundaryPoint]:
    out: List[BoundaryPoint] = []
    while len(out) < count:
        pre: Word = ()
        for _ in range(int(rng.integers(0, max_pre + 1))):
            pre = _random_extension(spec, pre, rng)
        word = pre
        for _ in range(int(rng.integers(1, max_period + 1))):
            word = _random_extension(spec, word, rng)
        period = word[len(pre) :]
        try:
            out.append(BoundaryPoint.make(spec, pre, period))
        except ValueError:
            continue
    return out


def _random_extension(spec: GroupSpec, word: Word, rng: np.random.Generator) -> Word:
    options = _extensions(spec, word)
    return options[int(rng.integers(0, len(options)))]


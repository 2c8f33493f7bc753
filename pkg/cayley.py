# -*- coding: utf-8 -*-
"""Cayley balls of free groups and free products of cyclic groups.

Group elements are reduced words over a symmetric generating set S. Every group handled here is a
free product of cyclic factors: a free group of rank k is the free product of k copies of the
integers, and a factor of finite order m contributes the m-cycle of its generator. Words are
normalised syllable by syllable, with exponents of a finite factor taken in (-m/2, m/2].

A ball B_n is enumerated breadth first, so its elements are sorted by word length and every sub-ball
B_m is a prefix of the element array. Subsets of a ball are boolean masks over that array.
"""

import hashlib
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import numpy.typing as npt
from scipy import sparse
from scipy.sparse import csgraph
from scipy.stats import linregress

log = logging.getLogger(__name__)

Word = Tuple[int, ...]
Subset = npt.NDArray[np.bool_]
IntArray = npt.NDArray[np.int64]

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class RimError(ValueError):
    """A set operation needs neighbours that lie outside the enumerated ball."""


class BallTooLargeError(ValueError):
    """The requested ball has more elements than the configured cap."""


@dataclass(frozen=True)
class GroupSpec:
    """A free product of cyclic groups with its symmetric generating set.

    ``orders`` holds one entry per factor: ``None`` for an infinite cyclic factor, ``m >= 2`` for
    a cyclic factor of order m. Use :meth:`free_group` and :meth:`free_product` to build one.
    """

    backend: str
    orders: Tuple[Optional[int], ...]

    def __post_init__(self) -> None:
        if self.backend == "free":
            if any(m is not None for m in self.orders):
                raise ValueError("free group factors must be infinite cyclic")
            if len(self.orders) < 2:
                raise ValueError(f"free group of rank {len(self.orders)} is elementary")
        elif self.backend == "free_product":
            if any(m is None or m < 2 for m in self.orders):
                raise ValueError(f"free product factors need finite order >= 2: {self.orders}")
            if len(self.orders) < 2:
                raise ValueError("free product needs at least two factors")
            if len(self.orders) == 2 and self.orders[0] == 2 and self.orders[1] == 2:
                raise ValueError("Z/2 * Z/2 is elementary (infinite dihedral)")
        else:
            raise ValueError(f"unknown backend {self.backend!r}")
        if len(self.orders) > len(_LETTERS):
            raise ValueError("too many factors")

    @classmethod
    def free_group(cls, rank: int) -> "GroupSpec":
        return cls("free", tuple([None] * rank))

    @classmethod
    def free_product(cls, orders: Sequence[int]) -> "GroupSpec":
        return cls("free_product", tuple(int(m) for m in orders))

    # generator tables

    @cached_property
    def letters(self) -> Tuple[Tuple[int, int], ...]:
        """(factor, sign) for each generator; an order-2 generator is its own inverse."""
        table = []
        for factor, m in enumerate(self.orders):
            table.append((factor, 1))
            if m != 2:
                table.append((factor, -1))
        return tuple(table)

    @cached_property
    def generators(self) -> Tuple[str, ...]:
        names = []
        for factor, sign in self.letters:
            name = _LETTERS[factor]
            names.append(name if sign > 0 else name.upper())
        return tuple(names)

    @cached_property
    def inverse_letter(self) -> Tuple[int, ...]:
        lookup = {fs: i for i, fs in enumerate(self.letters)}
        out = []
        for factor, sign in self.letters:
            out.append(lookup.get((factor, -sign), lookup[(factor, sign)]))
        return tuple(out)

    @cached_property
    def _letter_of(self) -> Dict[Tuple[int, int], int]:
        return {fs: i for i, fs in enumerate(self.letters)}

    @property
    def num_generators(self) -> int:
        return len(self.letters)

    @property
    def rank(self) -> int:
        return len(self.orders)

    @property
    def is_tree(self) -> bool:
        """The Cayley graph is a tree iff no factor has finite order above 2."""
        return all(m is None or m == 2 for m in self.orders)

    @cached_property
    def delta(self) -> float:
        """Slimness constant of geodesic triangles.

        The Cayley graph is a tree of m-cycles glued at vertices, so its slimness is the largest
        slimness of a single cycle.
        """
        finite = [m for m in self.orders if m is not None and m > 2]
        if not finite:
            return 0.0
        return float(max(_cycle_slimness(m) for m in finite))

    @property
    def delta_tilde(self) -> float:
        """Slimness for triangles with ideal vertices, calibrated as delta + 1."""
        return self.delta + 1.0

    @property
    def shadow_radius(self) -> int:
        return 0 if self.is_tree else int(math.ceil(2.0 * self.delta_tilde))

    @property
    def entropy_closed_form(self) -> Optional[float]:
        if self.backend == "free":
            return math.log(2 * self.rank - 1)
        if self.is_tree:
            return math.log(self.rank - 1)  # (rank)-regular tree
        return None

    def predicted_ball_size(self, n: int) -> Optional[int]:
        if not self.is_tree:
            return None
        deg = self.num_generators
        if n == 0:
            return 1
        if deg == 2:
            return 2 * n + 1
        return 1 + deg * ((deg - 1) ** n - 1) // (deg - 2)

    def describe(self) -> Dict[str, object]:
        return {"backend": self.backend, "orders": list(self.orders)}

    # normal forms

    def _expand(self, factor: int, exponent: int) -> Word:
        if exponent > 0:
            return (self._letter_of[(factor, 1)],) * exponent
        return (self._letter_of[(factor, -1)],) * (-exponent)

    def _canonical(self, factor: int, exponent: int) -> int:
        m = self.orders[factor]
        if m is None:
            return exponent
        exponent %= m
        if 2 * exponent > m:
            exponent -= m
        return exponent

    def normal_form(self, word: Sequence[int]) -> Word:
        """Reduce an arbitrary letter sequence to its geodesic normal form."""
        syllables: List[List[int]] = []
        for letter in word:
            factor, sign = self.letters[letter]
            if syllables and syllables[-1][0] == factor:
                exponent = self._canonical(factor, syllables[-1][1] + sign)
                if exponent == 0:
                    syllables.pop()
                else:
                    syllables[-1][1] = exponent
            else:
                syllables.append([factor, self._canonical(factor, sign)])
        out: Word = ()
        for factor, exponent in syllables:
            out += self._expand(factor, exponent)
        return out

    def times_letter(self, word: Word, letter: int) -> Word:
        """Right multiplication of a normal-form word by one generator."""
        if not word:
            return self.normal_form((letter,))
        factor, sign = self.letters[letter]
        last_factor, last_sign = self.letters[word[-1]]
        if last_factor != factor:
            return word + self._expand(factor, self._canonical(factor, sign))
        if self.orders[factor] is None:
            if last_sign != sign:
                return word[:-1]
            return word + (letter,)
        run = 1
        while run < len(word) and word[-run - 1] == word[-1]:
            run += 1
        exponent = self._canonical(factor, last_sign * run + sign)
        return word[:-run] + self._expand(factor, exponent)

    def multiply(self, left: Word, right: Sequence[int]) -> Word:
        out = left
        for letter in right:
            out = self.times_letter(out, letter)
        return out

    def inverse(self, word: Word) -> Word:
        return self.normal_form(tuple(self.inverse_letter[s] for s in reversed(word)))

    def is_reduced(self, word: Sequence[int]) -> bool:
        return self.normal_form(word) == tuple(word)

    def parse(self, text: str) -> Word:
        """Parse generator names ("aB", "id" or "" for the identity) into a normal form."""
        if text in ("", "id", "e"):
            return ()
        lookup = {name: i for i, name in enumerate(self.generators)}
        try:
            letters = [lookup[ch] for ch in text]
        except KeyError as err:
            raise ValueError(f"unknown generator {err} in {text!r}") from None
        return self.normal_form(letters)

    def format(self, word: Sequence[int]) -> str:
        if not word:
            return "id"
        return "".join(self.generators[s] for s in word)


def _cycle_slimness(m: int) -> int:
    def path(x: int, y: int) -> List[int]:
        step = 1 if (y - x) % m <= m // 2 else -1
        pts = [x]
        while pts[-1] != y:
            pts.append((pts[-1] + step) % m)
        return pts

    def dist(x: int, y: int) -> int:
        d = abs(x - y) % m
        return min(d, m - d)

    worst = 0
    for a, b, c in itertools.product(range(m), repeat=3):
        sides = (path(a, b), path(b, c), path(c, a))
        for i, side in enumerate(sides):
            others = sides[(i + 1) % 3] + sides[(i + 2) % 3]
            for p in side:
                worst = max(worst, min(dist(p, q) for q in others))
    return worst


@dataclass(frozen=True)
class Element:
    word: Word

    @property
    def length(self) -> int:
        return len(self.word)


@dataclass(frozen=True, eq=False)
class CayleyBall:
    """Enumerated ball B_n with adjacency; external neighbour slots hold -1."""

    MEMORY_CAP: ClassVar[int] = 20_000_000
    """Maximal number of enumerated elements (F_2 radius 14 is about 9.6e6)"""

    spec: GroupSpec
    radius: int
    words: List[Word] = field(repr=False)
    adjacency: IntArray = field(repr=False)
    lengths: IntArray = field(repr=False)
    _index: Dict[Word, int] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.lengths)

    @cached_property
    def sphere_offsets(self) -> IntArray:
        """``sphere_offsets[m]:sphere_offsets[m+1]`` indexes the sphere S_m."""
        return np.searchsorted(self.lengths, np.arange(self.radius + 2)).astype(np.int64)

    @cached_property
    def internal(self) -> Subset:
        """Elements whose neighbours all lie in the ball."""
        return np.all(self.adjacency >= 0, axis=1)

    @cached_property
    def ball_hash(self) -> str:
        desc = json.dumps({**self.spec.describe(), "radius": self.radius}, sort_keys=True)
        return hashlib.sha256(desc.encode()).hexdigest()

    def element(self, i: int) -> Element:
        return Element(self.words[i])

    def index_of(self, word: Sequence[int]) -> int:
        """Index of a normal-form word, or -1 when it lies outside the ball."""
        j = self._index.get(tuple(word), -1)
        return j if j < self.size else -1

    def empty(self) -> Subset:
        return np.zeros(self.size, dtype=bool)

    def ball_mask(self, m: int) -> Subset:
        mask = self.empty()
        mask[: self.sphere_offsets[min(max(m, -1), self.radius) + 1]] = True
        return mask

    def sphere_mask(self, m: int) -> Subset:
        mask = self.empty()
        if 0 <= m <= self.radius:
            mask[self.sphere_offsets[m] : self.sphere_offsets[m + 1]] = True
        return mask

    def rim(self) -> Subset:
        return self.sphere_mask(self.radius)

    def restrict(self, m: int) -> "CayleyBall":
        """View of B_m sharing this enumeration."""
        if m > self.radius:
            raise ValueError(f"cannot restrict radius {self.radius} ball to {m}")
        count = int(self.sphere_offsets[m + 1])
        adjacency = self.adjacency[:count].copy()
        adjacency[adjacency >= count] = -1
        return CayleyBall(
            spec=self.spec,
            radius=m,
            words=self.words[:count],
            adjacency=adjacency,
            lengths=self.lengths[:count],
            _index=self._index,
        )

    def neighbor_values(self, values: npt.NDArray, fill=np.nan) -> npt.NDArray:
        """``values`` gathered along adjacency, ``fill`` on external slots."""
        adj = self.adjacency
        gathered = values[np.maximum(adj, 0)]
        return np.where(adj >= 0, gathered, fill)

    @cached_property
    def edges(self) -> Tuple[IntArray, IntArray]:
        """Internal directed edges (g, gs), one per generator slot."""
        src = np.repeat(np.arange(self.size, dtype=np.int64), self.spec.num_generators)
        dst = self.adjacency.ravel()
        keep = dst >= 0
        return src[keep], dst[keep]

    def undirected_edges(self) -> Tuple[IntArray, IntArray]:
        src, dst = self.edges
        keep = src < dst
        return src[keep], dst[keep]

    def distance_from(self, mask: Subset) -> IntArray:
        """Distance inside the ball to the nearest element of ``mask`` (-1 if unreachable)."""
        dist = np.full(self.size, -1, dtype=np.int64)
        frontier = np.flatnonzero(mask)
        d = 0
        while frontier.size:
            dist[frontier] = d
            nbrs = self.adjacency[frontier].ravel()
            nbrs = np.unique(nbrs[nbrs >= 0])
            frontier = nbrs[dist[nbrs] < 0]
            d += 1
        return dist

    def components(self, mask: Subset) -> Tuple[int, IntArray]:
        """Connected components of the subgraph induced on ``mask``.

        Returns the number of components and a label per element (-1 outside the mask).
        """
        src, dst = self.edges
        keep = mask[src] & mask[dst]
        graph = sparse.coo_matrix(
            (np.ones(int(keep.sum()), dtype=np.int8), (src[keep], dst[keep])),
            shape=(self.size, self.size),
        ).tocsr()
        _, labels = csgraph.connected_components(graph, directed=False)
        labels = labels.astype(np.int64)
        labels[~mask] = -1
        kept = np.unique(labels[mask])
        relabel = np.full(labels.max() + 1 if labels.size else 0, -1, dtype=np.int64)
        relabel[kept] = np.arange(kept.size)
        labels[mask] = relabel[labels[mask]]
        return int(kept.size), labels

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.size))
        src, dst = self.undirected_edges()
        g.add_edges_from(zip(src.tolist(), dst.tolist()))
        return g


def build_ball(spec: GroupSpec, n: int, memory_cap: Optional[int] = None) -> CayleyBall:
    """Enumerate all normal-form words of length at most ``n``."""
    if n < 0:
        raise ValueError(f"radius must be non-negative, got {n}")
    cap = CayleyBall.MEMORY_CAP if memory_cap is None else memory_cap
    predicted = spec.predicted_ball_size(n)
    if predicted is not None and predicted > cap:
        raise BallTooLargeError(f"B_{n} has {predicted} elements, cap is {cap}")

    num_gen = spec.num_generators
    words: List[Word] = [()]
    index: Dict[Word, int] = {(): 0}
    rows: List[List[int]] = []
    i = 0
    while i < len(words):
        word = words[i]
        row = []
        for s in range(num_gen):
            h = spec.times_letter(word, s)
            j = index.get(h)
            if j is None:
                if len(h) > n:
                    j = -1
                else:
                    j = len(words)
                    if j >= cap:
                        raise BallTooLargeError(f"B_{n} exceeds the cap of {cap} elements")
                    words.append(h)
                    index[h] = j
            row.append(j)
        rows.append(row)
        i += 1

    adjacency = np.array(rows, dtype=np.int64).reshape(len(words), num_gen)
    lengths = np.fromiter((len(w) for w in words), dtype=np.int64, count=len(words))
    log.debug("enumerated B_%d of %s: %d elements", n, spec.describe(), len(words))
    return CayleyBall(
        spec=spec, radius=n, words=words, adjacency=adjacency, lengths=lengths, _index=index
    )


# growth


def sphere_sizes(ball: CayleyBall) -> List[int]:
    return np.diff(ball.sphere_offsets).tolist()


@dataclass(frozen=True)
class GrowthEstimate:
    slope: float
    intercept: float
    closed_form: Optional[float]
    radii: Tuple[int, ...]


def entropy_estimate(ball: CayleyBall) -> GrowthEstimate:
    """Least-squares slope of log #B_m against m over the upper half of the radii.

    The first spheres are dropped because #B_m is only asymptotically exponential.
    """
    n = ball.radius
    if n < 3:
        raise ValueError(f"entropy estimate needs radius >= 3, got {n}")
    radii = np.arange(max(1, n // 2), n + 1)
    counts = ball.sphere_offsets[radii + 1]
    fit = linregress(radii, np.log(counts))
    return GrowthEstimate(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        closed_form=ball.spec.entropy_closed_form,
        radii=tuple(radii.tolist()),
    )


def growth_constant(ball: CayleyBall, h: float) -> float:
    """Smallest C with e^{hm}/C <= #B_m <= C e^{hm} over the enumerated radii."""
    m = np.arange(ball.radius + 1)
    counts = ball.sphere_offsets[m + 1].astype(float)
    ratio = counts / np.exp(h * m)
    return float(max(ratio.max(), (1.0 / ratio).max()))


# set boundaries


def _as_subset(ball: CayleyBall, A: Subset) -> Subset:
    A = np.asarray(A, dtype=bool)
    if A.shape != (ball.size,):
        raise ValueError(f"subset of length {A.shape} does not match ball of size {ball.size}")
    return A


def _check_rim(ball: CayleyBall, A: Subset, allow_rim: bool) -> None:
    if not allow_rim and np.any(A & ~ball.internal):
        raise RimError("subset touches external neighbour slots; pass allow_rim=True to truncate")


def outer_set(ball: CayleyBall, A: Subset, allow_rim: bool = False) -> Subset:
    """A^out = {g : d(g, A) <= 1}."""
    A = _as_subset(ball, A)
    _check_rim(ball, A, allow_rim)
    out = A.copy()
    nbrs = ball.adjacency[A].ravel()
    out[nbrs[nbrs >= 0]] = True
    return out


def inner_set(ball: CayleyBall, A: Subset, allow_rim: bool = False) -> Subset:
    """A^in = {g in A : all gs in A}; rim elements count as not inner when truncating."""
    A = _as_subset(ball, A)
    _check_rim(ball, A, allow_rim)
    inside = ball.neighbor_values(A, fill=False).astype(bool)
    return A & np.all(inside, axis=1)


def boundary_out(ball: CayleyBall, A: Subset, allow_rim: bool = False) -> Subset:
    A = _as_subset(ball, A)
    return outer_set(ball, A, allow_rim) & ~A


def boundary_in(ball: CayleyBall, A: Subset, allow_rim: bool = False) -> Subset:
    A = _as_subset(ball, A)
    return A & ~inner_set(ball, A, allow_rim)


def boundary_full(ball: CayleyBall, A: Subset, allow_rim: bool = False) -> Subset:
    return boundary_out(ball, A, allow_rim) | boundary_in(ball, A, allow_rim)


@dataclass(frozen=True)
class IsoperimetricResult:
    size: int
    boundary_size: int
    ratio: float
    k0_empirical: float


def isoperimetric_audit(
    ball: CayleyBall, A: Subset, running_max: float = 0.0
) -> IsoperimetricResult:
    """(#A / log max(#A, 2)) / #∂^out A, and the running maximum over a corpus."""
    A = _as_subset(ball, A)
    size = int(A.sum())
    if size == 0:
        raise ValueError("isoperimetric ratio of the empty set")
    boundary = int(boundary_out(ball, A).sum())
    ratio = (size / math.log(max(size, 2))) / boundary
    return IsoperimetricResult(size, boundary, ratio, max(running_max, ratio))


# metric


def distance(spec: GroupSpec, g: Word, h: Word) -> int:
    return len(spec.multiply(spec.inverse(g), h))


def geodesic(spec: GroupSpec, g: Word, h: Word) -> List[Element]:
    """Geodesic from g to h following the normal form of g^-1 h."""
    step = spec.multiply(spec.inverse(g), h)
    path = [Element(tuple(g))]
    current = tuple(g)
    for letter in step:
        current = spec.times_letter(current, letter)
        path.append(Element(current))
    return path


def triangle_slimness(spec: GroupSpec, a: Word, b: Word, c: Word) -> int:
    """Max over points of a side of the distance to the union of the two other sides."""
    sides = [
        [e.word for e in geodesic(spec, a, b)],
        [e.word for e in geodesic(spec, b, c)],
        [e.word for e in geodesic(spec, c, a)],
    ]
    worst = 0
    for i, side in enumerate(sides):
        others = sides[(i + 1) % 3] + sides[(i + 2) % 3]
        for p in side:
            worst = max(worst, min(distance(spec, p, q) for q in others))
    return worst


# export


def ball_metadata(ball: CayleyBall) -> Dict[str, object]:
    return {
        **ball.spec.describe(),
        "generators": list(ball.spec.generators),
        "radius": ball.radius,
        "sphere_sizes": sphere_sizes(ball),
        "ball_hash": ball.ball_hash,
    }


def write_edge_list(ball: CayleyBall, path: str) -> None:
    src, dst = ball.undirected_edges()
    with open(path, "w") as f:
        for u, v in zip(src.tolist(), dst.tolist()):
            f.write(f"{u} {v}\n")


def write_graphml(ball: CayleyBall, path: str) -> None:
    g = ball.graph()
    for i in range(ball.size):
        g.nodes[i]["word"] = ball.spec.format(ball.words[i])
        g.nodes[i]["length"] = int(ball.lengths[i])
    nx.write_graphml(g, path)


def write_metadata(ball: CayleyBall, path: str) -> None:
    with open(path, "w") as f:
        json.dump(ball_metadata(ball), f, indent=2, sort_keys=True)

# -*- coding: utf-8 -*-
"""Discrete Allen-Cahn equation ρΔx - V'(x) = 0 on a Cayley ball.

The action of a field on a finite set B is

    W_B(x) = Σ_{g∈B} ( Σ_{s∈S} ρ/4 (x_{gs} - x_g)² + V(x_g) ),

with the potential counted once per site, so that -∂W/∂x_g = ρΔ_g(x) - V'(x_g) at every g with
all neighbours in B. Solutions for small ρ are continued from critical-point-valued seeds with the
quasi-Newton map K(X) = X - (V'(X) - ρΔX) / V''(x⁰), which is a contraction on the σ0-ball.
"""

import logging
from dataclasses import dataclass, field
from typing import ClassVar, Dict, List, Optional, Sequence, Tuple

import h5py
import networkx as nx
import numpy as np
import numpy.typing as npt
from numpy.polynomial import Polynomial

from _base import Base, ChecksumError, array_checksum, read_json_attr
from cayley import (
    CayleyBall,
    GroupSpec,
    RimError,
    Subset,
    boundary_full,
    boundary_out,
    build_ball,
    inner_set,
)

log = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


class RhoTooLargeError(ValueError):
    def __init__(self, rho: float, rho0: float) -> None:
        super().__init__(f"rho = {rho:.6g} exceeds the continuation threshold rho0 = {rho0:.6g}")
        self.rho = rho
        self.rho0 = rho0


class SolverDivergedError(RuntimeError):
    def __init__(self, message: str, field: "ScalarField", trace: Sequence[float]) -> None:
        super().__init__(message)
        self.field = field
        self.trace = list(trace)


class ContractionError(RuntimeError):
    """The iterates of the quasi-Newton map left their geometric envelope."""


class Potential:
    """Polynomial double-well potential with two absolute minima c0 < c1.

    ``coefficients`` are in increasing degree, as for ``numpy.polynomial.Polynomial``.
    """

    SAMPLES: int = 4001
    """Grid size for the sampled invariants (absolute minima, Lipschitz constant of V'')"""

    def __init__(self, coefficients: Sequence[float], name: str = "polynomial") -> None:
        self.coefficients = [float(c) for c in coefficients]
        self.name = name
        self._poly = Polynomial(self.coefficients)
        if self._poly.degree() < 4 or self._poly.degree() % 2:
            raise ValueError("double-well potential needs an even degree >= 4")
        if self.coefficients[-1] <= 0:
            raise ValueError("potential must be coercive (positive leading coefficient)")
        self._d1 = self._poly.deriv()
        self._d2 = self._d1.deriv()
        self._d3 = self._d2.deriv()

        roots = self._d1.roots()
        real = np.sort(roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real)
        for _ in range(2):
            curv = self._d2(real)
            real = real - np.divide(self._d1(real), curv, out=np.zeros_like(real), where=curv != 0)
        self.critical_points: List[float] = [float(c) for c in real]
        values = self._poly(real)
        vmin = values.min()
        minima = real[np.abs(values - vmin) <= 1e-12 * (1 + abs(vmin))]
        if minima.size != 2:
            raise ValueError(f"potential needs exactly two absolute minima, found {minima.size}")
        self.c0 = float(minima[0])
        self.c1 = float(minima[1])

        inside = [c for c in self.critical_points if self.c0 <= c <= self.c1]
        curvature = np.abs(self._d2(np.array(inside)))
        if np.any(curvature <= 1e-12):
            raise ValueError("potential is not Morse at a critical point in [c0, c1]")
        self.hat_c = float(min(abs(self._d2(self.c0)), abs(self._d2(self.c1))))
        """Lower bound for |V''| at the two minima"""
        self.hat_c_all = float(curvature.min())
        """Lower bound for |V''| at every critical point in [c0, c1]"""
        saddles = [c for c in inside if self.c0 < c < self.c1]
        self.saddle_gap = (
            float(min(self._poly(np.array(saddles))) - self._poly(self.c0)) if saddles else np.inf
        )
        grid = np.linspace(self.c0 - 1.0, self.c1 + 1.0, self.SAMPLES)
        if np.any(self._poly(grid) < self._poly(self.c0) - 1e-12):
            raise ValueError("sampled potential drops below V(c0)")
        self.lipschitz_V2 = float(np.abs(self._d3(grid)).max())

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "Potential":
        return cls(coefficients)

    @classmethod
    def quartic(cls) -> "Potential":
        """V(y) = (1 - y²)² / 4."""
        return cls([0.25, 0.0, -0.5, 0.0, 0.25], name="quartic")

    def value(self, y):
        return self._poly(y)

    def first(self, y):
        return self._d1(y)

    def second(self, y):
        return self._d2(y)

    def is_critical(self, y: FloatArray, atol: float = 1e-12) -> npt.NDArray[np.bool_]:
        crit = np.array(self.critical_points)
        return np.min(np.abs(np.asarray(y)[..., None] - crit), axis=-1) <= atol

    def site_minimize(self, a: FloatArray, b: FloatArray, current: FloatArray) -> FloatArray:
        """Global minimiser of a/2·y² - b·y + V(y), per site.

        Stationary points are the eigenvalues of the companion matrices of V'(y) + a·y - b,
        polished by Newton steps; ties go to the candidate closest to ``current``.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        coef = self._d1.coef
        d = coef.size - 1
        n = a.size
        lower = np.zeros((n, d), dtype=float)
        lower[:] = coef[:-1]
        lower[:, 1] += a
        lower[:, 0] -= b
        companion = np.zeros((n, d, d), dtype=float)
        companion[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        companion[:, :, -1] = -lower / coef[-1]
        roots = np.linalg.eigvals(companion)
        real = np.abs(roots.imag) <= 1e-7 * (1.0 + np.abs(roots.real))
        y = np.where(real, roots.real, np.nan)
        for _ in range(3):
            grad = self._d1(y) + a[:, None] * y - b[:, None]
            curv = self._d2(y) + a[:, None]
            step = np.divide(grad, curv, out=np.zeros_like(y), where=np.abs(curv) > 1e-300)
            y = y - step
        energy = 0.5 * a[:, None] * y**2 - b[:, None] * y + self._poly(y)
        energy = np.where(np.isnan(energy), np.inf, energy)
        best = energy.min(axis=1, keepdims=True)
        near = energy <= best + 1e-13 * (1.0 + np.abs(best))
        dist = np.where(near, np.abs(y - np.asarray(current, dtype=float)[:, None]), np.inf)
        return y[np.arange(n), np.argmin(dist, axis=1)]

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "coefficients": self.coefficients}


@dataclass(frozen=True)
class ContinuationConfig:
    """Thresholds of the anti-continuum continuation."""

    K_DEFAULT: ClassVar[float] = 0.5
    """Default contraction constant of the quasi-Newton map"""

    k: float
    sigma0: float
    rho0: float
    rho1: float
    c_tilde: float
    hat_c: float
    num_generators: int
    max_iter: int = 1000
    tol: float = 1e-13

    @classmethod
    def from_potential(
        cls,
        potential: Potential,
        num_generators: int,
        k: Optional[float] = None,
        include_saddles: bool = False,
        max_iter: int = 1000,
        tol: float = 1e-13,
    ) -> "ContinuationConfig":
        k = cls.K_DEFAULT if k is None else k
        if not 0.0 < k < 1.0:
            raise ValueError(f"contraction constant must lie in (0, 1), got {k}")
        hat_c = potential.hat_c_all if include_saddles else potential.hat_c
        width = potential.c1 - potential.c0
        sigma0 = min(k * hat_c / (2.0 * potential.lipschitz_V2), width / 3.0 * (1.0 - 1e-9))
        c_tilde = 2.0 * num_generators * (width + 2.0 * sigma0)
        rho0 = min(k * hat_c / (2.0 * c_tilde), (1.0 - k) * sigma0 * hat_c / c_tilde)
        rho1 = compute_rho1(potential, sigma0, num_generators, rho0)
        return cls(k, sigma0, rho0, rho1, c_tilde, hat_c, num_generators, max_iter, tol)


def compute_rho1(potential: Potential, sigma0: float, num_generators: int, rho0: float) -> float:
    """Largest ρ0·2^{-j} such that |V'(y)| <= 2ρ(c1-c0)#S forces y into a σ0-band around a
    critical value and #S(c1-c0)²ρ <= 2·(V(saddle) - V(c0))."""
    width = potential.c1 - potential.c0
    grid = np.linspace(potential.c0, potential.c1, 20001)
    crit = np.array(potential.critical_points)
    edges = np.concatenate([crit - sigma0, crit + sigma0])
    grid = np.concatenate([grid, edges[(edges >= potential.c0) & (edges <= potential.c1)]])
    far = np.min(np.abs(grid[:, None] - crit), axis=1) >= sigma0 * (1 - 1e-12)
    floor = float(np.abs(potential.first(grid[far])).min()) if far.any() else np.inf
    rho = rho0
    for _ in range(200):
        banded = 2.0 * rho * width * num_generators < floor
        saddle = num_generators * width**2 * rho <= 2.0 * potential.saddle_gap
        if banded and saddle:
            return rho
        rho /= 2.0
    raise ValueError("no admissible rho1 found in the dyadic sweep")


class ScalarField(Base):
    """Values on a Cayley ball together with the coupling and the frozen region."""

    def __init__(
        self,
        ball: CayleyBall,
        values: FloatArray,
        rho: float,
        frozen: Optional[Subset] = None,
        potential: Optional[Potential] = None,
        config: Optional[dict] = None,
    ) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (ball.size,):
            raise ValueError(f"field of length {values.shape} on a ball of size {ball.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if rho < 0:
            raise ValueError("rho must be non-negative")
        self._ball = ball
        self._potential = Potential.quartic() if potential is None else potential
        self.values = values
        self.rho = float(rho)
        self.frozen = ball.empty() if frozen is None else np.asarray(frozen, dtype=bool)
        self.radius = ball.radius
        self.group = ball.spec.describe()
        self.potential = self._potential.coefficients
        self.ball_hash = ball.ball_hash
        self.config = {} if config is None else dict(config)

    @property
    def ball(self) -> CayleyBall:
        return self._ball

    @property
    def pot(self) -> Potential:
        return self._potential

    def with_values(self, values: FloatArray, rho: Optional[float] = None) -> "ScalarField":
        return ScalarField(
            self._ball,
            values,
            self.rho if rho is None else rho,
            self.frozen,
            self._potential,
            self.config,
        )

    @property
    def checksum(self) -> str:
        return array_checksum(self.values)

    def save(self, save_filename: Optional[str] = None) -> str:
        self.checksum_sha256 = self.checksum
        try:
            return super()._save("field", save_filename=save_filename)
        finally:
            del self.checksum_sha256

    @classmethod
    def load(cls, load_filename: str, ball: Optional[CayleyBall] = None) -> "ScalarField":
        with h5py.File(load_filename, "r") as h5f:
            values: FloatArray = h5f["values"][()]  # type: ignore
            frozen: npt.NDArray[np.bool_] = h5f["frozen"][()]  # type: ignore
            rho = float(h5f.attrs["rho"])  # type: ignore
            radius = int(h5f.attrs["radius"])  # type: ignore
            ball_hash = str(h5f.attrs["ball_hash"])
            checksum = str(h5f.attrs["checksum_sha256"])
            group = read_json_attr(h5f, "group")
            config = read_json_attr(h5f, "config")
            coefficients = h5f["potential"][()]  # type: ignore

        if array_checksum(values) != checksum:
            raise ChecksumError(f"checksum mismatch in {load_filename}")
        if ball is None:
            spec = GroupSpec(group["backend"], tuple(group["orders"]))
            ball = build_ball(spec, radius)
        if ball.ball_hash != ball_hash:
            raise ValueError(f"{load_filename} was written for a different ball")
        return cls(ball, values, rho, frozen, Potential(coefficients.tolist()), config)


# operators


def laplacian_all(ball: CayleyBall, values: FloatArray) -> FloatArray:
    """Σ_s (x_{gs} - x_g) per element, NaN where a neighbour lies outside the ball."""
    nbrs = ball.neighbor_values(values)
    return nbrs.sum(axis=1) - ball.spec.num_generators * values


def laplacian(field: ScalarField, g: int) -> float:
    adj = field.ball.adjacency[g]
    if np.any(adj < 0):
        raise RimError(f"element {g} has neighbours outside the ball")
    return float(field.values[adj].sum() - adj.size * field.values[g])


def residual_all(
    ball: CayleyBall, values: FloatArray, rho: float, potential: Potential
) -> FloatArray:
    return rho * laplacian_all(ball, values) - potential.first(values)


def residual(field: ScalarField, g: int) -> float:
    """ρΔ_g(x) - V'(x_g)."""
    return field.rho * laplacian(field, g) - float(field.pot.first(field.values[g]))


def action_values(
    ball: CayleyBall,
    values: FloatArray,
    B: Subset,
    rho: float,
    potential: Potential,
    allow_rim: bool = False,
    per_edge: bool = False,
) -> float:
    """W_B of raw values.

    The default counts V(x_g) once per site, which is the normalisation under which the
    gradient of W_B is minus the residual. ``per_edge`` counts it once per pair (g, s), so the
    potential term is #S times larger; a constant field at the saddle 0 of the quartic then
    has action #B·#S/4 instead of #B/4.
    """
    B = np.asarray(B, dtype=bool)
    if not allow_rim and np.any(B & ~ball.internal):
        raise RimError("action over a set touching the ball rim")
    nbrs = ball.neighbor_values(values)[B]
    diff = nbrs - values[B][:, None]
    kinetic = np.nansum(diff**2) * rho / 4.0
    weight = ball.spec.num_generators if per_edge else 1
    return float(kinetic + weight * potential.value(values[B]).sum())


def action(
    field: ScalarField, B: Subset, allow_rim: bool = False, per_edge: bool = False
) -> float:
    """W_B of the field."""
    return action_values(field.ball, field.values, B, field.rho, field.pot, allow_rim, per_edge)


def site_energy(
    ball: CayleyBall, values: FloatArray, sites: npt.NDArray[np.int64], y: FloatArray, rho: float,
    potential: Potential,
) -> FloatArray:
    """Part of the action depending on x_g, evaluated at x_g = y."""
    nbrs = values[ball.adjacency[sites]]
    return 0.5 * rho * np.sum((y[:, None] - nbrs) ** 2, axis=1) + potential.value(y)


# Dirichlet solver


@dataclass
class DirichletResult:
    field: ScalarField
    trace: List[float]
    actions: List[float]
    sweeps: int


def _sweep_classes(ball: CayleyBall, free: Subset) -> List[npt.NDArray[np.int64]]:
    """Independent sets of free sites, sphere by sphere from the identity outwards."""
    classes = []
    for m in range(ball.radius + 1):
        sites = np.flatnonzero(free & ball.sphere_mask(m))
        if sites.size == 0:
            continue
        if ball.spec.is_tree:
            classes.append(sites)  # a sphere of a tree is independent
            continue
        g = nx.Graph()
        g.add_nodes_from(sites.tolist())
        local = set(sites.tolist())
        for i in sites.tolist():
            for j in ball.adjacency[i].tolist():
                if j in local:
                    g.add_edge(i, j)
        coloring = nx.greedy_color(g, strategy="largest_first")
        for color in sorted(set(coloring.values())):
            classes.append(np.array(sorted(i for i, c in coloring.items() if c == color)))
    return classes


def solve_dirichlet(
    ball: CayleyBall,
    values: FloatArray,
    free: Subset,
    rho: float,
    potential: Optional[Potential] = None,
    tol: float = 1e-10,
    max_sweeps: int = 10_000,
    mode: str = "gauss_seidel",
    config: Optional[dict] = None,
) -> DirichletResult:
    """Minimise the action over the ``free`` sites with all other values frozen.

    Coordinate descent with exact single-site minimisation. In Gauss-Seidel mode the sites are
    visited sphere by sphere, alternately inside-out and outside-in; Jacobi mode updates every
    free site at once.
    """
    potential = Potential.quartic() if potential is None else potential
    free = np.asarray(free, dtype=bool)
    if np.any(free & ~ball.internal):
        raise RimError("free sites must have all neighbours inside the ball")
    x = np.array(values, dtype=np.float64)
    boundary = boundary_full(ball, free, allow_rim=True) & ~free
    lo, hi = potential.c0, potential.c1
    if np.any((x[boundary] < lo - 1e-12) | (x[boundary] > hi + 1e-12)):
        raise ValueError("boundary values must lie in [c0, c1]")
    if mode not in ("gauss_seidel", "jacobi"):
        raise ValueError(f"unknown sweep mode {mode!r}")

    free_idx = np.flatnonzero(free)
    classes = _sweep_classes(ball, free) if mode == "gauss_seidel" else [free_idx]
    monitor = free | boundary
    num_gen = ball.spec.num_generators
    a_all = np.full(ball.size, rho * num_gen)

    def sup_residual() -> float:
        if free_idx.size == 0:
            return 0.0
        lap = x[ball.adjacency[free_idx]].sum(axis=1) - num_gen * x[free_idx]
        return float(np.abs(rho * lap - potential.first(x[free_idx])).max())

    trace = [sup_residual()]
    actions = [action_values(ball, x, monitor, rho, potential, allow_rim=True)]
    sweeps = 0
    while trace[-1] >= tol:
        if sweeps >= max_sweeps:
            field = ScalarField(ball, x, rho, ~free, potential, config)
            raise SolverDivergedError(
                f"no convergence after {sweeps} sweeps (residual {trace[-1]:.3e})", field, trace
            )
        order = classes if sweeps % 2 == 0 else classes[::-1]
        for sites in order:
            b = rho * x[ball.adjacency[sites]].sum(axis=1)
            x[sites] = potential.site_minimize(a_all[sites], b, x[sites])
        sweeps += 1
        trace.append(sup_residual())
        actions.append(action_values(ball, x, monitor, rho, potential, allow_rim=True))
        if actions[-1] > actions[-2] + 1e-12 * (1.0 + abs(actions[-2])):
            log.warning("action increased in sweep %d: %.17g -> %.17g", sweeps, *actions[-2:])
        log.debug("sweep %d: residual %.3e", sweeps, trace[-1])

    log.info("Dirichlet solve converged in %d sweeps (rho=%.4g)", sweeps, rho)
    field = ScalarField(ball, x, rho, ~free, potential, config)
    return DirichletResult(field, trace, actions, sweeps)


@dataclass(frozen=True)
class LocalMinimality:
    passed: bool
    worst: float


def local_minimality_certificate(
    field: ScalarField, free: Subset, tol_probe: float = 1e-6
) -> LocalMinimality:
    """Single-site probes x_g ± tol_probe must not decrease the action."""
    sites = np.flatnonzero(free)
    if sites.size == 0:
        return LocalMinimality(True, 0.0)
    x = field.values
    base = site_energy(field.ball, x, sites, x[sites], field.rho, field.pot)
    worst = np.inf
    for sign in (1.0, -1.0):
        shifted = x[sites] + sign * tol_probe
        probe = site_energy(field.ball, x, sites, shifted, field.rho, field.pot)
        worst = min(worst, float((probe - base).min()))
    return LocalMinimality(worst >= -1e-14, worst)


# anti-continuum continuation


def quasi_newton_step(
    ball: CayleyBall,
    X: FloatArray,
    seed: FloatArray,
    region_inner: Subset,
    rho: float,
    potential: Potential,
) -> FloatArray:
    """K(X)_g = X_g - (V'(X_g) - 1_{B^in}(g)·ρΔ_g(X)) / V''(x⁰_g).

    Outside B^in the seed is a fixed point and is returned unchanged.
    """
    region_inner = np.asarray(region_inner, dtype=bool)
    curvature = potential.second(seed[region_inner])
    if np.any(np.abs(curvature) <= 1e-12):
        raise ValueError("seed is not Morse: V'' vanishes at a seed value")
    if np.any(region_inner & ~ball.internal):
        raise RimError("continuation region must lie inside the ball")
    idx = np.flatnonzero(region_inner)
    lap = X[ball.adjacency[idx]].sum(axis=1) - ball.spec.num_generators * X[idx]
    out = np.array(seed, dtype=np.float64)
    out[idx] = X[idx] - (potential.first(X[idx]) - rho * lap) / curvature
    return out


@dataclass
class ContinuationResult:
    field: ScalarField
    steps: List[float]
    errors: List[float]

    @property
    def iterations(self) -> int:
        return len(self.steps)


def continue_from_seed(
    ball: CayleyBall,
    seed: FloatArray,
    rho: float,
    region_inner: Subset,
    config: ContinuationConfig,
    potential: Optional[Potential] = None,
    start: Optional[FloatArray] = None,
) -> ContinuationResult:
    """Fixed point x^ρ of the quasi-Newton map near the seed x⁰."""
    potential = Potential.quartic() if potential is None else potential
    if rho > config.rho0 * (1 + 1e-12):
        raise RhoTooLargeError(rho, config.rho0)
    seed = np.asarray(seed, dtype=np.float64)
    if not np.all(potential.is_critical(seed, atol=1e-10)):
        raise ValueError("seed values must be critical points of the potential")
    if np.any((seed < potential.c0 - 1e-12) | (seed > potential.c1 + 1e-12)):
        raise ValueError("seed values must lie in [c0, c1]")

    X = seed.copy() if start is None else np.asarray(start, dtype=np.float64).copy()
    if np.abs(X - seed).max() > config.sigma0 * (1 + 1e-12):
        raise ValueError("starting point lies outside the sigma0-ball of the seed")
    X[~np.asarray(region_inner, dtype=bool)] = seed[~np.asarray(region_inner, dtype=bool)]

    iterates = [X]
    steps: List[float] = []
    while True:
        X_next = quasi_newton_step(ball, X, seed, region_inner, rho, potential)
        steps.append(float(np.abs(X_next - X).max()))
        iterates.append(X_next)
        X = X_next
        if steps[-1] < config.tol:
            break
        if len(steps) >= config.max_iter:
            field = ScalarField(ball, X, rho, ~region_inner, potential)
            raise SolverDivergedError("continuation did not converge", field, steps)

    errors = [float(np.abs(it - X).max()) for it in iterates]
    for m in range(len(steps) - 1):
        if steps[m + 1] > config.k * steps[m] + 1e-12:
            raise ContractionError(f"step {m + 1} grew: {steps[m + 1]:.3e} > k·{steps[m]:.3e}")
    for m, err in enumerate(errors):
        if err > errors[0] * config.k**m + 1e-12:
            raise ContractionError(f"iterate error {err:.3e} above envelope at step {m}")
    if np.abs(X - seed).max() > config.sigma0 * (1 + 1e-9):
        raise ContractionError("fixed point left the sigma0-ball of the seed")
    log.debug("continuation converged in %d steps (rho=%.4g)", len(steps), rho)
    field = ScalarField(ball, X, rho, ~np.asarray(region_inner, dtype=bool), potential)
    return ContinuationResult(field, steps, errors)


# order checks


def minmax_check(
    ball: CayleyBall, x: FloatArray, y: FloatArray, B: Subset, rho: float, potential: Potential
) -> float:
    """W(x) + W(y) - W(max(x, y)) - W(min(x, y))."""

    def W(v: FloatArray) -> float:
        return action_values(ball, v, B, rho, potential, allow_rim=True)

    return W(x) + W(y) - W(np.maximum(x, y)) - W(np.minimum(x, y))


def comparison_check(
    ball: CayleyBall, x: FloatArray, y: FloatArray, B: Subset, atol: float = 1e-12
) -> str:
    """Order of two minimisers with x <= y on ∂^f B.

    ``identical`` when |y - x| <= atol on all of B and its rim, ``strictly_ordered`` when
    y - x > atol at every inner site of B, ``violation`` otherwise. A single inner site
    where the two fields touch while they differ elsewhere is a violation.
    """
    B = np.asarray(B, dtype=bool)
    rim = boundary_full(ball, B, allow_rim=True)
    if np.any(x[rim] > y[rim] + atol):
        raise ValueError("comparison needs x <= y on the boundary of B")
    closure = B | rim
    if np.all(np.abs(y[closure] - x[closure]) <= atol):
        return "identical"
    interior = inner_set(ball, B, allow_rim=True)
    if np.all(y[interior] - x[interior] > atol):
        return "strictly_ordered"
    return "violation"


@dataclass
class PhasePartition:
    """Sites labelled by phase; ``middle`` marks values outside both σ0-bands."""

    ball: CayleyBall
    D0: Subset
    D1: Subset
    middle: Subset
    rho_ladder: List[Dict[str, float]] = field(default_factory=list)
    transition: Optional[Subset] = None

    def __post_init__(self) -> None:
        if np.any(self.D0 & self.D1) or not np.all(self.D0 | self.D1):
            raise ValueError("phase sets must be disjoint and cover the ball")

    @property
    def T(self) -> Subset:
        """∂^out D0 ∪ ∂^out D1 within the ball."""
        if self.transition is not None:
            return self.transition
        return boundary_out(self.ball, self.D0, allow_rim=True) | boundary_out(
            self.ball, self.D1, allow_rim=True
        )

    def cut_edges(self) -> List[Tuple[int, int]]:
        src, dst = self.ball.undirected_edges()
        cross = self.D0[src] != self.D0[dst]
        return list(zip(src[cross].tolist(), dst[cross].tolist()))

    @property
    def violations(self) -> int:
        return int(self.middle.sum())


def classify_phases(field: ScalarField, sigma0: float) -> PhasePartition:
    """Label by the nearer minimum and report values outside [c0, c0+σ0) ∪ (c1-σ0, c1]."""
    pot = field.pot
    x = field.values
    D0 = np.abs(x - pot.c0) < np.abs(x - pot.c1)
    banded = (np.abs(x - pot.c0) < sigma0) | (np.abs(x - pot.c1) < sigma0)
    partition = PhasePartition(field.ball, D0, ~D0, ~banded)
    if partition.violations:
        log.warning("%d sites in the middle band", partition.violations)
    return partition


def two_valued(ball: CayleyBall, D0: Subset, potential: Potential) -> FloatArray:
    return np.where(np.asarray(D0, dtype=bool), potential.c0, potential.c1).astype(np.float64)

# -*- coding: utf-8 -*-
"""
Run the Dirichlet-at-infinity and Plateau pipelines from one JSON configuration.

Verbs: ``run <config>``, ``report <manifest>``, ``audit <field-file>`` and
``certify <partition> <window-spec>``. The exit code is 0 only if every enabled audit passes.
"""

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import time
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from _base import Base, ChecksumError, array_checksum, config_hash
from allen_cahn import (
    ContinuationConfig,
    PhasePartition,
    Potential,
    ScalarField,
    local_minimality_certificate,
)
from boundary import (
    BoundaryPoint,
    BoundarySpec,
    ConstantsReport,
    VisualMetricParams,
    calibrate_constants,
)
from cayley import GroupSpec, build_ball, entropy_estimate, sphere_sizes, write_metadata
from dirichlet import (
    DirichletProblem,
    asymptotic_value_audit,
    ball_windows,
    cascade_audit,
    compute_constants,
    connected_components_audit,
    connected_windows,
    extract_transition_set,
    quasi_minimality_audit,
    random_windows,
    solve_sequence,
)
from plateau import (
    CutWindow,
    action_bridge,
    cut_edges,
    default_windows,
    infinite_components_audit,
    plateau_certify,
    rho_sweep,
    separation_audit,
    separation_margin,
    sigma_lower_bound,
)

log = logging.getLogger(__name__)


class RunError(RuntimeError):
    def __init__(self, message: str, manifest_path: str) -> None:
        super().__init__(message)
        self.manifest_path = manifest_path


# configuration


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GroupConfig(_Model):
    backend: Literal["free", "free_product"] = "free"
    orders: List[Optional[int]] = Field(default_factory=lambda: [None, None])

    def to_spec(self) -> GroupSpec:
        return GroupSpec(self.backend, tuple(self.orders))

    @model_validator(mode="after")
    def _check_group(self) -> "GroupConfig":
        self.to_spec()
        return self


class PotentialConfig(_Model):
    name: Literal["quartic", "polynomial"] = "quartic"
    coefficients: Optional[List[float]] = None

    def to_potential(self) -> Potential:
        if self.name == "quartic":
            return Potential.quartic()
        assert self.coefficients is not None
        return Potential.polynomial(self.coefficients)

    @model_validator(mode="after")
    def _check_potential(self) -> "PotentialConfig":
        if self.name == "polynomial" and not self.coefficients:
            raise ValueError("polynomial potential needs coefficients")
        self.to_potential()
        return self


class RhoRule(_Model):
    kind: Literal["fixed", "ladder"] = "fixed"
    value: Optional[float] = None
    fraction_of_rho0: float = 0.1
    ladder: Optional[List[float]] = None
    depth: int = 4

    @field_validator("ladder")
    @classmethod
    def _decreasing(cls, ladder: Optional[List[float]]) -> Optional[List[float]]:
        if ladder is not None:
            if not ladder or any(r <= 0 for r in ladder):
                raise ValueError("ladder entries must be positive")
            if any(b >= a for a, b in zip(ladder, ladder[1:])):
                raise ValueError("rho ladder must be strictly decreasing")
        return ladder


class Tolerances(_Model):
    solve: float = 1e-10
    max_sweeps: int = 10_000
    continuation: float = 1e-13
    stabilization: float = 1e-8
    tol_probe: float = 1e-6


class AuditToggles(_Model):
    geometry: bool = True
    components: bool = True
    quasi_minimality: bool = True
    quasi_minimality_windows: int = 300
    cascade: bool = True
    decay: bool = True
    plateau: bool = True


class PlateauConfig(_Model):
    window_radius: int = 3
    random_windows: int = 20
    mode: Literal["exhaustive", "oracle", "both"] = "both"
    cap: int = 20
    stabilization_radius: int = 4


class CascadeConfig(_Model):
    preperiod: str = ""
    period: str = "a"
    r: float = 0.5
    n1: Optional[float] = None


class ExperimentConfig(_Model):
    name: str
    group: GroupConfig = Field(default_factory=GroupConfig)
    D0: List[str]
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    epsilon: Optional[float] = None
    k: float = 0.5
    rho: RhoRule = Field(default_factory=RhoRule)
    N_list: List[int]
    cascade: CascadeConfig = Field(default_factory=CascadeConfig)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    seed: int = 0
    output_dir: str = "runs"
    audits: AuditToggles = Field(default_factory=AuditToggles)
    plateau: PlateauConfig = Field(default_factory=PlateauConfig)

    @field_validator("N_list")
    @classmethod
    def _increasing(cls, radii: List[int]) -> List[int]:
        if not radii or radii[0] < 2:
            raise ValueError("ball radii must start at 2 or above")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"ball radii must be increasing: {radii}")
        return radii

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        spec = self.group.to_spec()
        BoundarySpec.parse(spec, self.D0)
        h = spec.entropy_closed_form
        if h is not None:
            eps = h / 2 if self.epsilon is None else self.epsilon
            VisualMetricParams(eps, h)
        self._check_ladder(spec, h)
        return self

    def _check_ladder(self, spec: GroupSpec, h: Optional[float]) -> None:
        if self.rho.kind != "ladder" or self.rho.ladder is None or h is None or not spec.is_tree:
            return
        potential = self.potential.to_potential()
        config = ContinuationConfig.from_potential(potential, spec.num_generators, self.k)
        q = spec.num_generators
        C_tilde = q / (q - 2) if q > 2 else 1.0
        for n, rho in enumerate(self.rho.ladder, start=1):
            sigma = sigma_lower_bound(rho, potential, config.sigma0)
            if separation_margin(q * C_tilde, h, n, sigma) <= 0:
                raise ValueError(f"ladder rung {n} (rho={rho}) violates the separation inequality")

    @property
    def content_hash(self) -> str:
        return config_hash(self.model_dump(mode="json"))

    def problem(self) -> DirichletProblem:
        spec = self.group.to_spec()
        potential = self.potential.to_potential()
        config = ContinuationConfig.from_potential(
            potential, spec.num_generators, self.k, tol=self.tolerances.continuation
        )
        rho = self.rho.value
        if rho is None:
            rho = config.rho0 * self.rho.fraction_of_rho0
        return DirichletProblem(
            spec,
            BoundarySpec.parse(spec, self.D0),
            rho,
            tuple(self.N_list),
            config,
            potential,
            tol=self.tolerances.solve,
            max_sweeps=self.tolerances.max_sweeps,
        )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r") as f:
        return ExperimentConfig.model_validate_json(f.read())


class RunManifest(_Model):
    config_hash: str
    config: dict
    stages: Dict[str, str] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)
    artifacts: List[str] = Field(default_factory=list)
    checksums: Dict[str, str] = Field(default_factory=dict)
    audits: Dict[str, bool] = Field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.audits.values())


# partition files


def write_partition_csv(partition: PhasePartition, path: str) -> None:
    ball = partition.ball
    header = {**ball.spec.describe(), "radius": ball.radius}
    with open(path, "w", newline="") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(f)
        writer.writerow(["index", "word", "phase"])
        for i in range(ball.size):
            writer.writerow([i, ball.spec.format(ball.words[i]), 0 if partition.D0[i] else 1])


def read_partition_csv(path: str) -> PhasePartition:
    with open(path, "r", newline="") as f:
        header = json.loads(f.readline())
        rows = list(csv.DictReader(f))
    spec = GroupSpec(header["backend"], tuple(header["orders"]))
    ball = build_ball(spec, int(header["radius"]))
    if len(rows) != ball.size:
        raise ValueError(f"{path}: {len(rows)} labels for a ball of size {ball.size}")
    D0 = ball.empty()
    for row in rows:
        D0[int(row["index"])] = row["phase"] == "0"
    return PhasePartition(ball, D0, ~D0, ball.empty())


def parse_window(partition: PhasePartition, text: str) -> CutWindow:
    """``B<m>`` or ``B<m>:<word>``: the ball of radius m around the identity or the given word."""
    if not text.startswith("B"):
        raise ValueError(f"window spec must look like B<m> or B<m>:<word>, got {text!r}")
    radius, _, word = text[1:].partition(":")
    ball = partition.ball
    centre = ball.index_of(ball.spec.parse(word)) if word else 0
    if centre < 0:
        raise ValueError(f"window centre {word!r} lies outside the ball")
    return CutWindow.ball_window(ball, int(radius), centre)


# pipeline


class Experiment(Base):
    """One configured run; arrays and summaries are replaced by ``run``."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config.model_dump(mode="json")
        self.config_hash = config.content_hash
        self._config = config

        self.sphere_sizes = None  # replaced by run
        self.monitor = None  # replaced by run
        self.decay_deviation = None  # replaced by run

    def save(self, save_filename: Optional[str] = None) -> str:
        return super()._save("experiment", save_filename=save_filename)

    def run(self, output_dir: Optional[str] = None) -> RunManifest:
        config = self._config
        out = os.path.realpath(output_dir or os.path.join(config.output_dir, config.name))
        os.makedirs(os.path.join(out, "fields"), exist_ok=True)
        manifest = RunManifest(config_hash=self.config_hash, config=self.config)
        manifest_path = os.path.join(out, "manifest.json")
        summary: Dict[str, object] = {}
        state: Dict[str, object] = {}

        def stage(name: str, enabled: bool, func) -> None:
            if not enabled:
                manifest.stages[name] = "skipped"
                summary[name] = "skipped"
                return
            t0 = time.perf_counter()
            log.info("stage %s", name)
            func()
            manifest.timings[name] = time.perf_counter() - t0
            manifest.stages[name] = "done"

        audits = config.audits
        try:
            stage("ball", True, lambda: self._stage_ball(out, manifest, summary, state))
            stage("geometry", audits.geometry, lambda: self._stage_geometry(summary, state))
            stage("solve", True, lambda: self._stage_solve(out, manifest, summary, state))
            stage("audits", True, lambda: self._stage_audits(manifest, summary, state))
            stage(
                "plateau",
                audits.plateau,
                lambda: self._stage_plateau(out, manifest, summary, state),
            )
        except Exception as err:
            manifest.error = f"{type(err).__name__}: {err}"
            self._write(out, manifest, summary)
            log.error("run aborted: %s", manifest.error)
            raise RunError(manifest.error, manifest_path) from err

        self._write(out, manifest, summary)
        self.save(os.path.join(out, "experiment.h5"))
        manifest.artifacts.append("experiment.h5")
        with open(manifest_path, "w") as f:
            f.write(manifest.model_dump_json(indent=2))
        return manifest

    @staticmethod
    def _write(out: str, manifest: RunManifest, summary: Dict[str, object]) -> None:
        with open(os.path.join(out, "audits.json"), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True, default=_jsonable)
        if "audits.json" not in manifest.artifacts:
            manifest.artifacts.append("audits.json")
        with open(os.path.join(out, "manifest.json"), "w") as f:
            f.write(manifest.model_dump_json(indent=2))

    def _stage_ball(self, out: str, manifest: RunManifest, summary: dict, state: dict) -> None:
        config = self._config
        spec = config.group.to_spec()
        ball = build_ball(spec, max(3, min(config.N_list[-1] + 1, 8)))
        write_metadata(ball, os.path.join(out, "ball.json"))
        manifest.artifacts.append("ball.json")
        growth = entropy_estimate(ball)
        self.sphere_sizes = np.array(sphere_sizes(ball))
        summary["growth"] = {
            "sphere_sizes": self.sphere_sizes.tolist(),
            "slope": growth.slope,
            "closed_form": growth.closed_form,
        }
        state["ball"] = ball

    def _stage_geometry(self, summary: dict, state: dict) -> None:
        ball = state["ball"]
        small = ball.restrict(min(ball.radius, 6))
        rng = np.random.default_rng(self._config.seed)
        constants = calibrate_constants(small, self._config.epsilon, rng=rng)
        summary["constants"] = dataclasses.asdict(constants)
        state["constants"] = constants

    def _stage_solve(self, out: str, manifest: RunManifest, summary: dict, state: dict) -> None:
        problem = self._config.problem()
        result = solve_sequence(problem)
        for N, field in zip(problem.N_list, result.fields):
            name = os.path.join("fields", f"field_N{N}.h5")
            field.save(os.path.join(out, name))
            manifest.artifacts.append(name)
            manifest.checksums[name] = field.checksum
        monitor = result.monitor
        self.monitor = np.array([monitor.diffs[m] for m in monitor.m_values])
        m_top = monitor.m_values[-1]
        stable = monitor.stabilized(m_top, self._config.tolerances.stabilization)
        manifest.audits["stabilization"] = stable if len(result.fields) > 1 else True
        summary["solve"] = {
            "rho": problem.rho,
            "rho0": problem.config.rho0,
            "rho1": problem.config.rho1,
            "sigma0": problem.config.sigma0,
            "monitor": {str(m): monitor.diffs[m] for m in monitor.m_values},
        }
        state["problem"] = problem
        state["sequence"] = result

    def _stage_audits(self, manifest: RunManifest, summary: dict, state: dict) -> None:
        config = self._config
        problem: DirichletProblem = state["problem"]
        result = state["sequence"]
        sigma0 = problem.config.sigma0
        rng = np.random.default_rng(config.seed)
        audits = config.audits

        transitions = []
        components_ok = quasi_ok = local_ok = True
        worst_slack = math.inf
        for field, free in zip(result.fields, result.free):
            ts = extract_transition_set(field, sigma0)
            transitions.append(
                {"N": ts.N, "sites": int(ts.sites.sum()), "edges": len(ts.edges),
                 "distance_to_id": ts.distance_to_id, "components": ts.num_components}
            )
            probe = local_minimality_certificate(field, free, config.tolerances.tol_probe)
            local_ok &= probe.passed
            if audits.components:
                components_ok &= connected_components_audit(field).passed
            if audits.quasi_minimality:
                count = audits.quasi_minimality_windows
                windows = [field.ball.internal]
                windows += ball_windows(field.ball, count // 3, rng)
                windows += connected_windows(field.ball, count // 3, rng)
                windows += random_windows(field.ball, count - 2 * (count // 3), rng)
                for D in windows:
                    worst_slack = min(worst_slack, quasi_minimality_audit(field, D))
        summary["transition"] = transitions
        manifest.audits["local_minimality"] = bool(local_ok)
        if audits.components:
            manifest.audits["components"] = bool(components_ok)
        if audits.quasi_minimality:
            quasi_ok = worst_slack >= 0
            manifest.audits["quasi_minimality"] = bool(quasi_ok)
            summary["quasi_minimality"] = {"worst_slack": worst_slack}

        if audits.cascade:
            spec = problem.spec
            xi0 = BoundaryPoint.parse(spec, config.cascade.preperiod, config.cascade.period)
            constants: Optional[ConstantsReport] = state.get("constants")  # type: ignore
            lemma = compute_constants(config.cascade.r, problem, constants, n1=config.cascade.n1)
            report = cascade_audit(result.fields, xi0, config.cascade.r, lemma)
            summary["cascade"] = {
                "k": lemma.k,
                "L0": lemma.L0,
                "n1": lemma.n1,
                "n1_lower": lemma.n1_lower,
                "n1_admissible": report.n1_admissible,
                "depth_bound": lemma.depth_bound(),
                "rows": [dataclasses.asdict(row) for row in report.rows],
                "triggered": report.triggered,
            }
            manifest.audits["cascade"] = report.passed
            log.info("cascade: n1_lower = %.4g, triggered = %s", lemma.n1_lower, report.triggered)

        if audits.decay:
            decay = asymptotic_value_audit(result.fields[-1], problem.D0, sigma0, problem.config.k)
            summary["decay"] = {
                "rows": [dataclasses.asdict(row) for row in decay.rows],
                "rates": decay.rates,
                "monotone": decay.monotone,
                "within_band": decay.within_band,
            }
            self.decay_deviation = np.array([row.deviation for row in decay.rows])
            manifest.audits["decay"] = decay.passed

    def _stage_plateau(self, out: str, manifest: RunManifest, summary: dict, state: dict) -> None:
        config = self._config
        problem: DirichletProblem = state["problem"]
        constants: Optional[ConstantsReport] = state.get("constants")  # type: ignore
        C_tilde = constants.C_tilde if constants is not None else 1.0
        h = constants.h if constants is not None else None
        ladder = config.rho.ladder if config.rho.kind == "ladder" else None
        partition = rho_sweep(
            problem,
            ladder,
            C_tilde=C_tilde,
            h=h,
            depth=config.rho.depth,
            m=config.plateau.stabilization_radius,
        )
        write_partition_csv(partition, os.path.join(out, "partition.csv"))
        manifest.artifacts.append("partition.csv")

        ball = partition.ball
        rng = np.random.default_rng(config.seed)
        plateau = config.plateau
        windows = default_windows(ball, plateau.window_radius, plateau.random_windows, rng)
        certifications = []
        minimal = agree = bridge = True
        for window in windows:
            cert = plateau_certify(partition, window, plateau.mode, plateau.cap)
            certifications.append(json.loads(cert.to_json()))
            minimal &= cert.minimal
            agree &= cert.agree is not False
            bridge &= action_bridge(partition, window, problem.rho, problem.potential).holds()
        with open(os.path.join(out, "certifications.json"), "w") as f:
            json.dump(certifications, f, indent=2, sort_keys=True)
        manifest.artifacts.append("certifications.json")

        whole = CutWindow.make(ball, ball.internal)
        with open(os.path.join(out, "cut_edges.csv"), "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["u", "v"])
            for u, v in cut_edges(partition, whole):
                writer.writerow([ball.spec.format(ball.words[u]), ball.spec.format(ball.words[v])])
        manifest.artifacts.append("cut_edges.csv")

        separation = separation_audit(partition, problem.D0, rng=rng)
        components = infinite_components_audit(partition)
        manifest.audits["plateau_minimal"] = bool(minimal)
        manifest.audits["oracle_agreement"] = bool(agree)
        manifest.audits["action_bridge"] = bool(bridge)
        manifest.audits["separation"] = separation.passed
        manifest.audits["infinite_components"] = components.passed
        summary["plateau"] = {
            "ladder": partition.rho_ladder,
            "windows": len(windows),
            "certifications": certifications,
            "separation_max_crossings": separation.max_crossings,
        }


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def run(config: ExperimentConfig, output_dir: Optional[str] = None) -> RunManifest:
    return Experiment(config).run(output_dir)


# report


def _load_manifest(path: str) -> RunManifest:
    with open(path, "r") as f:
        return RunManifest.model_validate_json(f.read())


def report(manifest_path: str) -> str:
    """Human-readable summary; writes report_*.csv next to the manifest."""
    manifest = _load_manifest(manifest_path)
    out = os.path.dirname(os.path.realpath(manifest_path))
    lines = [f"run {manifest.config.get('name')} (config {manifest.config_hash[:12]})"]

    missing = [a for a in manifest.artifacts if not os.path.exists(os.path.join(out, a))]
    for name in missing:
        lines.append(f"MISSING artifact: {name}")
    for name, checksum in manifest.checksums.items():
        path = os.path.join(out, name)
        if not os.path.exists(path):
            continue
        field = ScalarField.load(path)
        if array_checksum(field.values) != checksum:
            raise ChecksumError(f"{name} does not match the manifest checksum")

    summary: Dict[str, object] = {}
    audits_path = os.path.join(out, "audits.json")
    if os.path.exists(audits_path):
        with open(audits_path, "r") as f:
            summary = json.load(f)

    lines.append("stages: " + ", ".join(f"{k}={v}" for k, v in manifest.stages.items()))
    for name, passed in sorted(manifest.audits.items()):
        lines.append(f"  {name:<22s} {'pass' if passed else 'FAIL'}")

    growth = summary.get("growth")
    if isinstance(growth, dict):
        rows = [[n, s] for n, s in enumerate(growth["sphere_sizes"])]
        _write_csv(os.path.join(out, "report_growth.csv"), ["n", "sphere_size"], rows)
        lines.append(
            f"growth: entropy fit {growth['slope']:.6f} (closed form {growth['closed_form']})"
        )

    constants = summary.get("constants")
    if isinstance(constants, dict):
        prov = constants.get("provenance", {})
        rows = [[k, v, prov.get(k, "")] for k, v in sorted(constants.items()) if k != "provenance"]
        header = ["name", "value", "provenance"]
        _write_csv(os.path.join(out, "report_constants.csv"), header, rows)
        lines.append("constants:")
        lines += [f"  {k:<12s} {v!s:<24s} {p}" for k, v, p in rows]
    elif constants == "skipped" or manifest.stages.get("geometry") == "skipped":
        lines.append("constants: skipped")

    decay = summary.get("decay")
    if isinstance(decay, dict):
        rows = [[r["cylinder"], r["phase"], r["n"], r["deviation"]] for r in decay["rows"]]
        header = ["cylinder", "phase", "n", "deviation"]
        _write_csv(os.path.join(out, "report_decay.csv"), header, rows)
        lines.append("decay rates: " + ", ".join(f"{k}={v}" for k, v in decay["rates"].items()))

    cascade = summary.get("cascade")
    if isinstance(cascade, dict):
        lines.append(
            f"cascade: n1_lower={cascade['n1_lower']:.4g} n1={cascade['n1']:.4g} "
            f"triggered={cascade['triggered']}"
        )

    plateau = summary.get("plateau")
    if isinstance(plateau, dict):
        rows = [
            [i, c["mode"], c["b_omega"], c["minimum"], c["minimal"]]
            for i, c in enumerate(plateau["certifications"])
        ]
        _write_csv(
            os.path.join(out, "report_certifications.csv"),
            ["window", "mode", "b_omega", "minimum", "minimal"],
            rows,
        )
        lines.append(f"plateau: {len(rows)} windows certified")
    else:
        lines.append("plateau: skipped")
    if manifest.error:
        lines.append(f"error: {manifest.error}")
    return "\n".join(lines)


def _write_csv(path: str, header: Sequence[str], rows: List[list]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


# field and partition verbs


def audit_field(path: str, windows: int = 300, seed: int = 0) -> Dict[str, bool]:
    field = ScalarField.load(path)
    potential = field.pot
    config = ContinuationConfig.from_potential(potential, field.ball.spec.num_generators)
    rng = np.random.default_rng(seed)
    free = ~field.frozen
    results = {
        "components": connected_components_audit(field).passed,
        "local_minimality": local_minimality_certificate(field, free).passed,
    }
    samples = [field.ball.internal] + connected_windows(field.ball, windows, rng)
    results["quasi_minimality"] = min(quasi_minimality_audit(field, D) for D in samples) >= 0
    ts = extract_transition_set(field, config.sigma0)
    log.info("transition set: %d sites, distance to id %s", int(ts.sites.sum()), ts.distance_to_id)
    return results


def certify_partition(partition_path: str, window_spec: str, mode: str = "both") -> bool:
    partition = read_partition_csv(partition_path)
    window = parse_window(partition, window_spec)
    cert = plateau_certify(partition, window, mode)
    print(cert.to_json())
    return cert.minimal


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperbolic-ac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("run", help="run the pipeline of a config file")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None)
    p = sub.add_parser("report", help="summarise a run manifest")
    p.add_argument("manifest")
    p = sub.add_parser("audit", help="re-run the field audits on a saved field")
    p.add_argument("field")
    p = sub.add_parser("certify", help="certify a partition on a window B<m>[:<word>]")
    p.add_argument("partition")
    p.add_argument("window")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    if args.verb == "run":
        manifest = run(load_config(args.config), args.output_dir)
        for name, passed in sorted(manifest.audits.items()):
            print(f"{name:<22s} {'pass' if passed else 'FAIL'}")
        return 0 if manifest.passed else 1
    if args.verb == "report":
        print(report(args.manifest))
        return 0 if _load_manifest(args.manifest).passed else 1
    if args.verb == "audit":
        results = audit_field(args.field)
        for name, passed in results.items():
            print(f"{name:<22s} {'pass' if passed else 'FAIL'}")
        return 0 if all(results.values()) else 1
    return 0 if certify_partition(args.partition, args.window) else 1


if __name__ == "__main__":
    sys.exit(main())

"""
Experiment runner: builds a scenario problem, runs ADMM and collects the report.
"""

import itertools
import statistics
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from coopadmm.admm.orchestrator import AdmmOptions, AdmmOrchestrator, ProgressCallback, RunStatus
from coopadmm.config.manager import RoadConfig, ScenarioConfig
from coopadmm.core.base_service import BaseService
from coopadmm.core.constants import BACKENDS
from coopadmm.core.exceptions import ConfigError
from coopadmm.core.interfaces import DoubleMatrix
from coopadmm.solvers.ddp import DdpOptions
from coopadmm.scenarios.presets import validate_scenario


def pair_distance_series(states: DoubleMatrix, n_p: int = 2) -> Tuple[List[Tuple[int, int]], DoubleMatrix]:
    """Distances of every vehicle pair at steps 1..T.

    Args:
        states: (N, T+1, n) trajectories

    Returns:
        (pairs, distances) with distances shaped (T, len(pairs))
    """
    states = np.asarray(states, dtype=float)
    N = states.shape[0]
    pairs = list(itertools.combinations(range(N), 2))
    T = states.shape[1] - 1 if states.ndim == 3 else 0
    if not pairs:
        return pairs, np.zeros((T, 0))
    idx = np.asarray(pairs)
    pos = states[:, 1:, :n_p]
    return pairs, np.linalg.norm(pos[idx[:, 0]] - pos[idx[:, 1]], axis=2).T


@dataclass
class ExperimentReport:
    """Everything an experiment emits: iterates, final trajectories, distances and timings."""

    scenario: str
    backend: str
    seed: int
    status: RunStatus
    iterations: int
    final_iteration: int
    history_states: DoubleMatrix
    history_inputs: DoubleMatrix
    states: DoubleMatrix
    inputs: DoubleMatrix
    references: DoubleMatrix
    pairs: List[Tuple[int, int]]
    distances: DoubleMatrix
    residuals: List[float]
    dual_residuals: List[float]
    y_step_ms: List[float]
    z_step_ms: List[float]
    total_s: float
    d_safe: float
    road: RoadConfig = field(default_factory=RoadConfig)
    vehicle_length: float = 2.5
    vehicle_width: float = 1.6
    tau_s: float = 0.1

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    @property
    def min_distance(self) -> float:
        return float(self.distances.min()) if self.distances.size else float('inf')

    @property
    def min_distance_per_step(self) -> DoubleMatrix:
        if self.distances.shape[1] == 0:
            return np.full(self.distances.shape[0], np.inf)
        return self.distances.min(axis=1)

    @property
    def mean_y_step_ms(self) -> float:
        return float(np.mean(self.y_step_ms)) if self.y_step_ms else 0.0

    @property
    def mean_z_step_ms(self) -> float:
        return float(np.mean(self.z_step_ms)) if self.z_step_ms else 0.0

    @classmethod
    def empty(cls, scenario: str = "empty", backend: str = "sdr", T: int = 0) -> "ExperimentReport":
        return cls(
            scenario=scenario, backend=backend, seed=0, status=RunStatus.CONVERGED, iterations=0,
            final_iteration=0, history_states=np.zeros((0, 0, T + 1, 4)), history_inputs=np.zeros((0, 0, T, 2)),
            states=np.zeros((0, T + 1, 4)), inputs=np.zeros((0, T, 2)), references=np.zeros((0, T, 4)),
            pairs=[], distances=np.zeros((T, 0)), residuals=[], dual_residuals=[], y_step_ms=[], z_step_ms=[],
            total_s=0.0, d_safe=0.0,
        )


class ExperimentRunner(BaseService):
    """Runs scenarios with a chosen back-end, singly, as seeded trials or as a back-end comparison."""

    def __init__(self, threads: int = 0, sink: Optional[ProgressCallback] = None):
        BaseService.__init__(self)
        self.threads = threads
        self.sink = sink

    def options_for(self, config: ScenarioConfig, backend: str, seed: int) -> AdmmOptions:
        p = config.params
        return AdmmOptions(
            sigma=p.sigma, eps=p.eps, max_iterations=p.max_admm_iterations, backend=backend,
            ddp=DdpOptions(max_iterations=p.max_ddp_iterations), safety_margin=p.safety_margin,
            seed=seed, threads=self.threads,
        )

    def run_experiment(self, config: ScenarioConfig, backend: Optional[str] = None,
                       seed: Optional[int] = None) -> ExperimentReport:
        """Run one scenario.

        Args:
            config: Scenario
            backend: Projection back-end; config.backend when omitted
            seed: Seed of jitter and randomised extraction; config.seed when omitted

        Returns:
            ExperimentReport; non-convergence is reported in ``status``

        Raises:
            ConfigError: If the scenario is invalid
        """
        backend = backend or config.backend
        if backend not in BACKENDS:
            raise ConfigError(f"Unknown backend {backend!r}")
        seed = config.seed if seed is None else seed
        built = validate_scenario(config, seed)

        with self.timed(f"{config.name}/{backend} seed {seed}") as watch:
            orchestrator = AdmmOrchestrator(built.problem, self.options_for(config, backend, seed), self.sink)
            result = orchestrator.run()
        total_s = watch.elapsed_ms / 1e3

        states = np.array([tr.states for tr in result.trajectories])
        inputs = np.array([tr.inputs for tr in result.trajectories])
        pairs, distances = pair_distance_series(states)
        report = ExperimentReport(
            scenario=config.name, backend=backend, seed=seed, status=result.status, iterations=result.iterations,
            final_iteration=result.state.k, history_states=result.history_states,
            history_inputs=result.history_inputs, states=states, inputs=inputs,
            references=np.array(built.references), pairs=pairs, distances=distances,
            residuals=result.residuals, dual_residuals=result.dual_residuals,
            y_step_ms=result.y_step_ms, z_step_ms=result.z_step_ms, total_s=total_s,
            d_safe=config.params.d_safe, road=config.road, vehicle_length=config.params.length,
            vehicle_width=config.params.width, tau_s=config.params.tau_s,
        )
        self.log_info(f"{config.name}/{backend} seed {seed}: {result.status.value} after {result.iterations} "
                      f"iterations, min distance {report.min_distance:.3f} m, {total_s:.2f} s")
        return report

    def run_trials(self, config: ScenarioConfig, backend: Optional[str] = None, seed: Optional[int] = None,
                   trials: int = 1) -> List[ExperimentReport]:
        """Seeds seed .. seed + trials - 1."""
        if trials < 1:
            raise ConfigError(f"trials must be at least 1, got {trials}")
        first = config.seed if seed is None else seed
        return [self.run_experiment(config, backend, first + t) for t in range(trials)]

    def compare_backends(self, config: ScenarioConfig, backends: Sequence[str] = BACKENDS,
                         seed: Optional[int] = None, trials: int = 1) -> List[ExperimentReport]:
        reports = []
        for backend in backends:
            reports.extend(self.run_trials(config, backend, seed, trials))
        return reports


def median_iterations(reports: Sequence[ExperimentReport]) -> float:
    return float(statistics.median(r.iterations for r in reports)) if reports else float('nan')


def run_experiment(config: ScenarioConfig, backend: Optional[str] = None, seed: Optional[int] = None,
                   threads: int = 0, sink: Optional[ProgressCallback] = None) -> ExperimentReport:
    """Convenience wrapper around ``ExperimentRunner.run_experiment``."""
    return ExperimentRunner(threads, sink).run_experiment(config, backend, seed)


def single_vehicle_config(config: ScenarioConfig, index: int = 0) -> ScenarioConfig:
    """Copy of ``config`` keeping only vehicle ``index``."""
    return replace(config, name=f"{config.name}-v{index}", vehicles=[config.vehicles[index]])

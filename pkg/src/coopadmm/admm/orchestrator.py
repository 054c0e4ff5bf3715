"""
Consensus ADMM over per-agent DDP and per-timestep collision projection.

Each iteration: y from N DDP solves toward z - lambda/sigma; z from T projections of
select_T(y) + lambda/sigma; lambda += sigma (select_T(y) - z). Stops on |select_T(y) - z| <= eps.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional

import numpy as np

from coopadmm.core.base_service import BaseService
from coopadmm.core.constants import DEFAULT_ADMM_MAX_ITER, DEFAULT_EPS, DEFAULT_SIGMA
from coopadmm.core.error_handler import failure_context
from coopadmm.core.exceptions import BackendFailure, ConfigError, SolverError
from coopadmm.core.interfaces import DoubleMatrix, PositionProjector
from coopadmm.model.layout import agent_targets, pack_agent, primal_residual, select_T
from coopadmm.model.problem import CoopProblem
from coopadmm.solvers.ddp import DdpOptions, StageCostModel, Trajectory, initial_trajectory, solve_agent
from coopadmm.admm.projection import ProjectionTarget, make_projector, project_step
from coopadmm.admm.workers import WorkerPool

ProgressCallback = Callable[[dict], None]


class RunStatus(Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not_converged"


@dataclass(frozen=True)
class AdmmOptions:
    """ADMM parameters.

    Args:
        sigma: Augmented Lagrangian penalty
        eps: Primal residual tolerance
        max_iterations: Iteration limit k_admm
        backend: Projection back-end name (sdr, miqp, oracle)
        ddp: Options of the per-agent DDP
        safety_margin: Added to d_safe inside the projection
        seed: Root seed of randomised extraction
        threads: Worker count; 0 defers to the environment and available parallelism
        polish: Local refinement after SDR extraction
    """

    sigma: float = DEFAULT_SIGMA
    eps: float = DEFAULT_EPS
    max_iterations: int = DEFAULT_ADMM_MAX_ITER
    backend: str = "sdr"
    ddp: DdpOptions = field(default_factory=DdpOptions)
    safety_margin: float = 0.0
    seed: int = 0
    threads: int = 0
    polish: bool = True

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.safety_margin < 0:
            raise ConfigError("safety_margin must be nonnegative")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")


@dataclass
class AdmmState:
    """Iterate k with its residual history and per-step timings (all of length k)."""

    k: int
    y: DoubleMatrix
    z: DoubleMatrix
    lam: DoubleMatrix
    trajectories: List[Trajectory]
    residuals: List[float] = field(default_factory=list)
    dual_residuals: List[float] = field(default_factory=list)
    y_step_ms: List[float] = field(default_factory=list)
    z_step_ms: List[float] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.residuals[-1] if self.residuals else float('inf')


@dataclass
class AdmmResult:
    """Final (or best-residual) iterate plus every iterate's decoded trajectories.

    ``state`` is the returned iterate; ``last`` is the iterate the loop stopped at, whose
    residual and timing lists cover all ``iterations`` steps.
    """

    state: AdmmState
    status: RunStatus
    trajectories: List[Trajectory]
    history_states: DoubleMatrix
    history_inputs: DoubleMatrix
    iterations: int
    last: Optional[AdmmState] = None

    @property
    def residuals(self) -> List[float]:
        return list((self.last or self.state).residuals)

    @property
    def dual_residuals(self) -> List[float]:
        return list((self.last or self.state).dual_residuals)

    @property
    def y_step_ms(self) -> List[float]:
        return list((self.last or self.state).y_step_ms)

    @property
    def z_step_ms(self) -> List[float]:
        return list((self.last or self.state).z_step_ms)

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED


def update_dual(lam: DoubleMatrix, sigma: float, ty: DoubleMatrix, z: DoubleMatrix) -> DoubleMatrix:
    """lambda + sigma (T y - z)."""
    return lam + sigma * (ty - z)


class AdmmOrchestrator(BaseService):
    """Runs the ADMM loop for one problem; the only stateful component."""

    def __init__(self, problem: CoopProblem, opts: AdmmOptions = AdmmOptions(),
                 sink: Optional[ProgressCallback] = None, projector: Optional[PositionProjector] = None):
        BaseService.__init__(self)
        self.problem = problem
        self.opts = opts
        self.sink = sink
        self.layout = problem.layout
        self.projector = projector or make_projector(opts.backend, self.layout.n_p, opts.polish)
        self.pairs = tuple(problem.pairs)
        self.u_lower, self.u_upper = problem.input_bounds_stacked()

    def initial_state(self) -> AdmmState:
        """y from zero-input rollouts, z = lambda = 0."""
        layout = self.layout
        trajectories = [initial_trajectory(a.dynamics, a.x0, layout.T) for a in self.problem.agents]
        y = np.concatenate([pack_agent(layout, tr.states, tr.inputs) for tr in trajectories])
        return AdmmState(k=0, y=y, z=layout.zeros_z(), lam=layout.zeros_z(), trajectories=trajectories)

    def _solve_agent(self, i: int, v: DoubleMatrix, warm: Trajectory) -> Trajectory:
        agent = self.problem.agents[i]
        pos_target, input_target = agent_targets(self.layout, v[self.layout.agent_z(i)])
        cost = StageCostModel.for_agent(agent, self.opts.sigma, pos_target, input_target,
                                        self.opts.ddp.state_penalty)
        with failure_context(SolverError, f"DDP failed for agent {i}", agent=i):
            result = solve_agent(cost, agent.dynamics, agent.x0, agent.bounds, warm, self.opts.ddp)
        if not result.converged:
            self.log_debug("DDP for agent %d stopped after %d iterations without converging", i, result.iterations)
        return result.trajectory

    def _projection_target(self, tau: int, v: DoubleMatrix) -> ProjectionTarget:
        layout = self.layout
        return ProjectionTarget(
            tau=tau, c_u=v[layout.input_index(tau)], c_p=v[layout.position_index(tau)], pairs=self.pairs,
            d_safe=self.problem.d_safe + self.opts.safety_margin,
            u_lower=self.u_lower[tau], u_upper=self.u_upper[tau], n_p=layout.n_p,
        )

    def admm_step(self, state: AdmmState, pool: WorkerPool) -> AdmmState:
        """One y-update, z-update and dual ascent.

        Raises:
            SolverError: Naming the failing agent
            BackendFailure: Naming the failing timestep
        """
        layout, sigma = self.layout, self.opts.sigma
        k = state.k + 1

        with self.timed(f"y-update {k}") as y_watch:
            v_y = state.z - state.lam / sigma
            trajectories = pool.map_ordered(lambda i: self._solve_agent(i, v_y, state.trajectories[i]),
                                            range(layout.N))
            y = np.concatenate([pack_agent(layout, tr.states, tr.inputs) for tr in trajectories])

        with self.timed(f"z-update {k}") as z_watch:
            ty = select_T(layout, y)
            v_z = ty + state.lam / sigma
            targets = [self._projection_target(tau, v_z) for tau in range(layout.T)]
            seed = self.opts.seed

            def project(target: ProjectionTarget):
                with failure_context(BackendFailure, "projection failed", tau=target.tau, iteration=k):
                    return project_step(target, self.projector, (seed, k, target.tau))

            blocks = pool.map_ordered(project, targets)
            z = np.empty(layout.z_size)
            for tau, (z_u, z_p) in enumerate(blocks):
                z[layout.input_index(tau)] = z_u
                z[layout.position_index(tau)] = z_p
        y_ms, z_ms = y_watch.elapsed_ms, z_watch.elapsed_ms

        lam = update_dual(state.lam, sigma, ty, z)
        residual = float(np.linalg.norm(ty - z))
        dual_residual = float(sigma * np.linalg.norm(z - state.z))

        new_state = replace(
            state, k=k, y=y, z=z, lam=lam, trajectories=trajectories,
            residuals=state.residuals + [residual], dual_residuals=state.dual_residuals + [dual_residual],
            y_step_ms=state.y_step_ms + [y_ms], z_step_ms=state.z_step_ms + [z_ms],
        )
        if self.sink is not None:
            self.sink({'iteration': k, 'residual': residual, 'dual_residual': dual_residual,
                       'y_step_ms': y_ms, 'z_step_ms': z_ms})
        return new_state

    def run(self) -> AdmmResult:
        """Iterate until the primal residual reaches eps or the iteration limit.

        Returns:
            AdmmResult; when not converged it carries the best-residual iterate
        """
        state = self.initial_state()
        history_states = [np.array([tr.states for tr in state.trajectories])]
        history_inputs = [np.array([tr.inputs for tr in state.trajectories])]
        best = None
        status = RunStatus.NOT_CONVERGED

        with WorkerPool(self.opts.threads) as pool:
            self.log_info(f"ADMM start: {self.layout.N} agents, T={self.layout.T}, {len(self.pairs)} pairs, "
                          f"backend {self.projector.name}, {pool.max_workers} workers")
            while state.k < self.opts.max_iterations:
                state = self.admm_step(state, pool)
                history_states.append(np.array([tr.states for tr in state.trajectories]))
                history_inputs.append(np.array([tr.inputs for tr in state.trajectories]))
                if best is None or state.residual < best.residual:
                    best = state
                if state.residual <= self.opts.eps:
                    status = RunStatus.CONVERGED
                    break

        final = state if status is RunStatus.CONVERGED else best
        if status is RunStatus.CONVERGED:
            self.log_info(f"ADMM converged in {state.k} iterations, residual {state.residual:.3g}")
        else:
            self.log_warning(f"ADMM did not converge in {state.k} iterations; best residual "
                             f"{final.residual:.3g} at iteration {final.k}")
        return AdmmResult(
            state=final, status=status, trajectories=final.trajectories,
            history_states=np.array(history_states), history_inputs=np.array(history_inputs),
            iterations=state.k, last=state,
        )


def admm_step(state: AdmmState, problem: CoopProblem, opts: AdmmOptions = AdmmOptions(),
              pool: Optional[WorkerPool] = None) -> AdmmState:
    """Single ADMM iteration on ``state``."""
    orchestrator = AdmmOrchestrator(problem, opts)
    if pool is not None:
        return orchestrator.admm_step(state, pool)
    with WorkerPool(opts.threads) as own_pool:
        return orchestrator.admm_step(state, own_pool)


def initial_state(problem: CoopProblem, opts: AdmmOptions = AdmmOptions()) -> AdmmState:
    return AdmmOrchestrator(problem, opts).initial_state()


def run(problem: CoopProblem, opts: AdmmOptions = AdmmOptions(),
        sink: Optional[ProgressCallback] = None) -> AdmmResult:
    """Full ADMM solve of ``problem``."""
    return AdmmOrchestrator(problem, opts, sink).run()


def consensus_residual(problem: CoopProblem, state: AdmmState) -> float:
    return primal_residual(problem.layout, state.y, state.z)

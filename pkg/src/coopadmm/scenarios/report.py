"""
Report emission: trajectory, distance and summary CSVs plus SVG figures.
"""

import csv
import logging
import os
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

import numpy as np  # noqa: E402

from coopadmm.core.exceptions import CoopAdmmError  # noqa: E402
from coopadmm.scenarios.reference import ARM_DIRECTIONS  # noqa: E402
from coopadmm.scenarios.runner import ExperimentReport, median_iterations  # noqa: E402
from coopadmm.utils.helpers import format_float, prepare_output_dir  # noqa: E402

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["vehicle", "iteration", "tau", "p_x", "p_y", "theta", "v", "delta", "a"]
DISTANCE_COLUMNS = ["tau", "pair", "distance"]
SUMMARY_COLUMNS = ["backend", "scenario", "seed", "iterations", "y_step_ms", "z_step_ms", "total_s",
                   "status", "min_distance", "final_iteration"]

TRAJECTORIES_FILE = "trajectories.csv"
DISTANCES_FILE = "distances.csv"
SUMMARY_FILE = "summary.csv"
FAN_FILE = "trajectories_fan.svg"
SNAPSHOT_FILE = "snapshots.svg"
DISTANCE_PLOT_FILE = "distances.svg"

plt.rcParams['svg.hashsalt'] = 'coopadmm'
plt.rcParams['svg.fonttype'] = 'none'


def _open_csv(path: Path):
    try:
        return open(path, 'w', newline='', encoding='utf-8')
    except OSError as e:
        raise CoopAdmmError(f"Cannot write {path}: {e}", error_code="IO001", details={'path': str(path)})


def write_trajectories_csv(report: ExperimentReport, path: str | os.PathLike) -> Path:
    """One row per vehicle, iteration and step; inputs are empty at tau = T."""
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(TRAJECTORY_COLUMNS)
        hist_x, hist_u = report.history_states, report.history_inputs
        for i in range(hist_x.shape[1] if hist_x.ndim == 4 else 0):
            for k in range(hist_x.shape[0]):
                T = hist_u.shape[2]
                for tau in range(T + 1):
                    x = hist_x[k, i, tau]
                    u = [format_float(v) for v in hist_u[k, i, tau]] if tau < T else ["", ""]
                    writer.writerow([i, k, tau] + [format_float(v) for v in x] + u)
    return path


def write_distances_csv(report: ExperimentReport, path: str | os.PathLike) -> Path:
    """Pair distances of the final trajectories at tau = 1..T."""
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(DISTANCE_COLUMNS)
        for t in range(report.distances.shape[0] if report.pairs else 0):
            for p, (i, j) in enumerate(report.pairs):
                writer.writerow([t + 1, f"{i}-{j}", format_float(report.distances[t, p])])
    return path


def summary_row(report: ExperimentReport) -> Dict[str, str]:
    return {
        "backend": report.backend,
        "scenario": report.scenario,
        "seed": str(report.seed),
        "iterations": str(report.iterations),
        "y_step_ms": format_float(report.mean_y_step_ms),
        "z_step_ms": format_float(report.mean_z_step_ms),
        "total_s": format_float(report.total_s),
        "status": report.status.value,
        "min_distance": format_float(report.min_distance),
        "final_iteration": str(report.final_iteration),
    }


def write_summary_csv(reports: Sequence[ExperimentReport], path: str | os.PathLike) -> Path:
    """One row per report, in the given order."""
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for report in reports:
            writer.writerow(summary_row(report))
    return path


def read_trajectories_csv(path: str | os.PathLike) -> Dict[str, np.ndarray]:
    """Parse a trajectories CSV back into (iterations, N, T+1, 4) states and (iterations, N, T, 2) inputs."""
    with open(path, newline='', encoding='utf-8') as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {'states': np.zeros((0, 0, 0, 4)), 'inputs': np.zeros((0, 0, 0, 2))}
    N = max(int(r['vehicle']) for r in rows) + 1
    K = max(int(r['iteration']) for r in rows) + 1
    T = max(int(r['tau']) for r in rows)
    states = np.zeros((K, N, T + 1, 4))
    inputs = np.zeros((K, N, T, 2))
    for r in rows:
        i, k, tau = int(r['vehicle']), int(r['iteration']), int(r['tau'])
        states[k, i, tau] = [float(r[c]) for c in ("p_x", "p_y", "theta", "v")]
        if tau < T:
            inputs[k, i, tau] = [float(r['delta']), float(r['a'])]
    return {'states': states, 'inputs': inputs}


def read_distances_csv(path: str | os.PathLike) -> List[Dict[str, str]]:
    with open(path, newline='', encoding='utf-8') as fh:
        return list(csv.DictReader(fh))


def _draw_road(ax, report: ExperimentReport) -> None:
    road = report.road
    w = road.lane_width
    extent = road.arm_length
    if report.history_states.size:
        extent = max(extent, float(np.abs(report.history_states[..., :2]).max()))
    for arm in road.arms:
        a = np.array(ARM_DIRECTIONS[arm])
        side = np.array([-a[1], a[0]])
        for edge in (-w, w):
            start = edge * side + w * a
            end = edge * side + extent * a
            ax.plot([start[0], end[0]], [start[1], end[1]], color='black', linewidth=2.0)
        ax.plot([w * a[0], extent * a[0]], [w * a[1], extent * a[1]], color='grey', linestyle=':', linewidth=1.0)
    # close the junction box on sides without an arm
    for arm, a in ARM_DIRECTIONS.items():
        if arm in road.arms:
            continue
        a = np.array(a)
        side = np.array([-a[1], a[0]])
        ax.plot(*zip(w * a - w * side, w * a + w * side), color='black', linewidth=2.0)


def plot_fan(report: ExperimentReport) -> Figure:
    """Every ADMM iterate of every vehicle, shaded by iteration, over dashed references."""
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_road(ax, report)
    hist = report.history_states
    K = hist.shape[0]
    N = hist.shape[1] if hist.ndim == 4 else 0
    cmap = plt.get_cmap('tab10')
    for i in range(N):
        color = cmap(i % 10)
        for k in range(K):
            alpha = 0.15 + 0.85 * (k + 1) / K
            ax.plot(hist[k, i, :, 0], hist[k, i, :, 1], color=color, alpha=alpha, linewidth=1.0,
                    gid=f"traj-{i}-{k}")
        ref = report.references[i]
        ax.plot(ref[:, 0], ref[:, 1], color=color, linestyle='--', linewidth=0.8, gid=f"ref-{i}")
        ax.plot(hist[-1, i, 0, 0], hist[-1, i, 0, 1], marker='o', color=color, gid=f"start-{i}")
        ax.plot(report.states[i, -1, 0], report.states[i, -1, 1], marker='D', color=color, gid=f"end-{i}")
    ax.set_aspect('equal')
    ax.set_xlabel('x [m]')
    ax.set_ylabel('y [m]')
    ax.set_title(f"{report.scenario} / {report.backend}: {K - 1 if K else 0} ADMM iterations")
    return fig


def plot_snapshots(report: ExperimentReport, panels: int = 4) -> Figure:
    """Vehicle footprints at evenly spaced steps."""
    N = report.states.shape[0]
    T = report.states.shape[1] - 1 if report.states.ndim == 3 else 0
    steps = np.linspace(0, T, panels).round().astype(int) if T > 0 else np.zeros(panels, dtype=int)
    fig, axes = plt.subplots(1, panels, figsize=(4 * panels, 4))
    cmap = plt.get_cmap('tab10')
    for ax, tau in zip(np.atleast_1d(axes), steps):
        _draw_road(ax, report)
        for i in range(N):
            px, py, theta = report.states[i, tau, :3]
            L, W = report.vehicle_length, report.vehicle_width
            corner = np.array([px, py]) - 0.5 * L * np.array([np.cos(theta), np.sin(theta)]) \
                - 0.5 * W * np.array([-np.sin(theta), np.cos(theta)])
            ax.add_patch(Rectangle(tuple(corner), L, W, angle=float(np.degrees(theta)),
                                   color=cmap(i % 10), alpha=0.8))
            ax.plot(report.states[i, :tau + 1, 0], report.states[i, :tau + 1, 1], color=cmap(i % 10), linewidth=0.8)
        ax.set_aspect('equal')
        ax.set_title(f"t = {tau * report.tau_s:.1f} s")
    return fig


def plot_distances(report: ExperimentReport) -> Figure:
    """Pair distances over time with the safety distance."""
    fig, ax = plt.subplots(figsize=(7, 4))
    t = np.arange(1, report.distances.shape[0] + 1) * report.tau_s
    for p, (i, j) in enumerate(report.pairs):
        ax.plot(t, report.distances[:, p], linewidth=1.0, label=f"{i}-{j}")
    ax.axhline(report.d_safe, color='grey', linewidth=2.0, label='d_safe')
    ax.set_xlabel('t [s]')
    ax.set_ylabel('distance [m]')
    if 0 < len(report.pairs) <= 12:
        ax.legend(fontsize='small', ncol=2)
    return fig


def _save(fig: Figure, path: Path) -> Path:
    try:
        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise CoopAdmmError(f"Cannot write {path}: {e}", error_code="IO001", details={'path': str(path)})
    finally:
        plt.close(fig)
    return path


def emit_outputs(report: ExperimentReport, out_dir: str | os.PathLike, plots: bool = True) -> List[Path]:
    """Write CSVs and (optionally) SVG figures of one report.

    Returns:
        Paths written

    Raises:
        CoopAdmmError: If the directory or a file cannot be written
    """
    out = prepare_output_dir(out_dir)
    written = [
        write_trajectories_csv(report, out / TRAJECTORIES_FILE),
        write_distances_csv(report, out / DISTANCES_FILE),
        write_summary_csv([report], out / SUMMARY_FILE),
    ]
    if plots and report.states.shape[0] > 0:
        written.append(_save(plot_fan(report), out / FAN_FILE))
        written.append(_save(plot_snapshots(report), out / SNAPSHOT_FILE))
        written.append(_save(plot_distances(report), out / DISTANCE_PLOT_FILE))
    logger.info(f"Wrote {len(written)} files to {out}")
    return written


def emit_comparison(reports: Sequence[ExperimentReport], out_dir: str | os.PathLike) -> Path:
    """Summary CSV over many reports, with a log line of median iterations per back-end."""
    out = prepare_output_dir(out_dir)
    path = write_summary_csv(reports, out / SUMMARY_FILE)
    for backend in dict.fromkeys(r.backend for r in reports):
        chosen = [r for r in reports if r.backend == backend]
        logger.info(f"{backend}: median iterations {median_iterations(chosen):g} over {len(chosen)} runs")
    return path

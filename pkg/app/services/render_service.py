"""Rendus SVG: carte et traces d'agents, courbe de progression de l'entraînement DQN."""

import io
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")  # backend non interactif
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from app.core.exceptions import TraceMapMismatch  # noqa: E402
from app.models.track import CellKind, Position, TrackMap  # noqa: E402
from app.schemas.eval_dto import EpisodeFile  # noqa: E402
from app.schemas.training_dto import TrainingTraceRow  # noqa: E402
from app.services.track_service import compute_trajectory  # noqa: E402

logger = logging.getLogger(__name__)

# order follows CellKind values
CELL_COLORS = ["#2b2b2b", "#ffffff", "#7b3fa0", "#3a9d3a"]
TRACE_COLORS = ["#d62728", "#1f77b4", "#ff7f0e", "#17becf", "#e377c2", "#8c564b", "#bcbd22"]

# fixed salt and no date: identical inputs give identical bytes
RC_PARAMS = {
    "svg.hashsalt": "racetrack-lab",
    "svg.fonttype": "none",
    "path.simplify": False,
}


def _to_svg(fig) -> str:
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def trace_points(track_map: TrackMap, episode: EpisodeFile) -> List[Position]:
    """Positions successives de la voiture; un pas terminal s'arrête sur la case d'arrivée ou le mur"""
    header = episode.header
    if header.map_id != track_map.map_id:
        raise TraceMapMismatch(
            f"Trace enregistrée sur {header.map_id}, carte fournie {track_map.map_id}"
        )
    x, y = header.start[0], header.start[1]
    if track_map.is_blocked(x, y):
        raise TraceMapMismatch(f"Départ ({x}, {y}) sur un mur de {track_map.map_id}")

    points: List[Position] = [(x, y)]
    for step in episode.steps:
        if (step.x, step.y) != points[-1] or track_map.is_blocked(step.x, step.y):
            raise TraceMapMismatch(f"Pas incohérent avec la carte en ({step.x}, {step.y})")
        ax, ay = (0, 0) if step.noise_applied else (step.ax, step.ay)
        velocity = (step.vx + ax, step.vy + ay)
        if step.outcome == "moved":
            points.append((step.x + velocity[0], step.y + velocity[1]))
            continue
        target = CellKind.GOAL if step.outcome == "goal" else CellKind.WALL
        trajectory = compute_trajectory((step.x, step.y), velocity)
        hit = next((p for p in trajectory[1:] if track_map.cell(*p) is target), None)
        if hit is None:
            raise TraceMapMismatch(f"Issue {step.outcome} introuvable depuis ({step.x}, {step.y})")
        points.append(hit)
    return points


def render_traces(
    track_map: TrackMap,
    episodes: Sequence[EpisodeFile],
    labels: Sequence[str] = (),
) -> str:
    """Grille (murs sombres, départ violet, arrivée verte) et une polyligne par trace"""
    lines: List[Tuple[str, List[Position]]] = []
    for i, episode in enumerate(episodes):
        label = labels[i] if i < len(labels) else f"{episode.header.agent} #{episode.header.run}"
        lines.append((label, trace_points(track_map, episode)))

    grid = [[int(kind) for kind in row] for row in track_map.cells]
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots(
            figsize=(max(4.0, track_map.width * 0.3 + 2.5), max(3.0, track_map.height * 0.3 + 1))
        )
        ax.imshow(grid, cmap=ListedColormap(CELL_COLORS), vmin=0, vmax=3, interpolation="nearest")
        drawn = []
        for i, (label, points) in enumerate(lines):
            xs = [p[0] for p in points]
            ys = [p[1] for p in points]
            (line,) = ax.plot(xs, ys, color=TRACE_COLORS[i % len(TRACE_COLORS)], linewidth=1.5, label=label)
            drawn.append(line)
        handles = [
            Patch(facecolor=CELL_COLORS[CellKind.WALL], label="mur"),
            Patch(facecolor=CELL_COLORS[CellKind.START], label="départ"),
            Patch(facecolor=CELL_COLORS[CellKind.GOAL], label="arrivée"),
        ] + drawn
        ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.01, 1.0), fontsize=7)
        # ids set after the legend so its handle copies stay anonymous
        for i, line in enumerate(drawn):
            line.set_gid(f"trace-{i}")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(track_map.map_id)
        fig.tight_layout()
        return _to_svg(fig)


def render_training_curve(rows: Sequence[TrainingTraceRow], title: str = "DQN") -> str:
    """Retour non actualisé par épisode et sa moyenne glissante"""
    episodes = [row.episode for row in rows]
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(episodes, [row.return_raw for row in rows], color="#c7c7c7", linewidth=0.5, label="retour")
        averaged = [(row.episode, row.trailing_avg) for row in rows if row.trailing_avg is not None]
        if averaged:
            (curve,) = ax.plot(
                [e for e, _ in averaged],
                [v for _, v in averaged],
                color="#1f77b4",
                linewidth=1.5,
                label="moyenne glissante",
            )
            ax.legend(loc="lower right", fontsize=8)
            curve.set_gid("trailing-average")
        ax.set_xlabel("épisode")
        ax.set_ylabel("retour")
        ax.set_title(title)
        fig.tight_layout()
        return _to_svg(fig)


def write_svg(svg: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    logger.info("Rendu écrit: %s", path)
    return path

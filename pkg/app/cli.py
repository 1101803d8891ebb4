"""Point d'entrée en ligne de commande du laboratoire Racetrack.

Priorité de configuration: option explicite > fichier `--config` (JSON) > variables
d'environnement RTLAB_* > valeur par défaut.

Codes de sortie: 0 succès, 1 erreur d'usage ou de configuration, 2 résultat négatif du
domaine (état insoluble), 3 échec à l'exécution.
"""

import argparse
import json
import logging
import re
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import torch
from pydantic import ValidationError

from app.core import config as app_config
from app.core.exceptions import (
    ConfigurationError,
    DatasetFormatError,
    MapMismatchError,
    MapParseError,
    ModelFormatError,
    RacetrackError,
    ReportFormatError,
    TraceMapMismatch,
    UnknownMap,
    UnknownPreset,
)
from app.core.logging import configure_logging
from app.core.seeding import derive_rng
from app.ml.linear import LinearKind
from app.models.track import State, TrackMap
from app.repositories.dataset_repository import read_dataset, write_dataset
from app.repositories.manifest_repository import write_manifest
from app.repositories.map_repository import get_map_repository
from app.repositories.model_repository import save_checkpoints
from app.repositories.report_repository import (
    export_report,
    read_training_trace,
    write_dagger_history,
    write_training_trace,
)
from app.repositories.trace_repository import read_episode, write_episode
from app.schemas.dataset_dto import DATASET_PRESETS, DatasetConfig, DatasetHeader
from app.schemas.eval_dto import EvalConfig
from app.schemas.manifest_dto import RunManifest
from app.schemas.track_dto import DQN_MODES, EVAL_PRESETS
from app.schemas.training_dto import (
    DQN_STEP_SIZE,
    IMITATION_STEP_SIZE,
    MAX_PIL_EPOCHS,
    DaggerConfig,
    DqnConfig,
    PilConfig,
)
from app.services.agent_service import build_agent
from app.services.datagen_service import generate_dataset
from app.services.dqn_service import dqn_train
from app.services.evaluation_service import EvaluationService, action_quality, to_episode_file
from app.services.planner_service import get_planner
from app.services.render_service import render_traces, render_training_curve, write_svg
from app.services.training_service import train_dagger, train_linear, train_pil

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NEGATIVE = 2
EXIT_RUNTIME = 3

TRAIN_METHODS = ("pil-nn", "pil-lda", "pil-lr", "dagger", "dqn")

# options meaningful for each training method
TRAIN_OPTIONS = {
    "pil-nn": {"dataset", "epochs", "step_size", "batch_size"},
    "pil-lda": {"dataset"},
    "pil-lr": {"dataset"},
    "dagger": {
        "pretrain",
        "iters",
        "samples_per_iter",
        "epochs_per_iter",
        "pretrain_epochs",
        "step_size",
        "batch_size",
        "random_start",
        "random_velocity",
        "noisy",
        "velocity_bound",
        "step_cap",
    },
    "dqn": {
        "mode",
        "episodes",
        "buffer_capacity",
        "gamma",
        "epsilon_decay",
        "epsilon_end",
        "batch_size",
        "target_sync",
        "step_size",
        "step_cap",
    },
}
ALL_TRAIN_OPTIONS = set().union(*TRAIN_OPTIONS.values())


class UsageError(Exception):
    """Mauvaise utilisation de la ligne de commande (code de sortie 1)"""


class UnsolvableResult(Exception):
    """Résultat négatif du domaine (code de sortie 2)"""


class LabArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class Resolver:
    """Résout une option: ligne de commande, puis fichier de config, puis Settings"""

    def __init__(self, args: argparse.Namespace, file_config: Dict[str, Any]):
        self.args = args
        self.file_config = file_config

    def get(self, name: str, default: Any = None) -> Any:
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        value = self.file_config.get(name)
        if value is not None:
            return value
        return default


def _load_file_config(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Fichier de configuration illisible: {path} ({exc})") from exc
    if not isinstance(payload, dict):
        raise ConfigurationError("Le fichier de configuration doit contenir un objet JSON")
    # keys accept the flag spelling too (`step-size` or `step_size`)
    return {key.replace("-", "_"): value for key, value in payload.items()}


def _manifest(
    subcommand: str,
    config: Dict[str, Any],
    seed: int,
    outputs: Sequence[Path],
    track_map: Optional[TrackMap] = None,
) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        config=config,
        seed=seed,
        map_id=track_map.map_id if track_map else None,
        map_hash=track_map.content_hash if track_map else None,
        tool_version=app_config.settings.APP_VERSION,
        outputs=[str(p) for p in outputs],
        created_at=datetime.now(timezone.utc),
    )


def _load_map(resolver: Resolver) -> TrackMap:
    map_ref = resolver.get("map")
    if map_ref is None:
        raise UsageError("--map est requis")
    return get_map_repository().get(map_ref)


def _seed(resolver: Resolver) -> int:
    return int(resolver.get("seed", app_config.settings.SEED))


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


# Sous-commandes


def cmd_gen_data(resolver: Resolver) -> int:
    settings = app_config.settings
    track_map = _load_map(resolver)
    preset = resolver.get("preset")
    if preset is None:
        raise UsageError("--preset est requis")
    if preset not in DATASET_PRESETS:
        raise UsageError(f"Preset inconnu: {preset} (attendu: {', '.join(DATASET_PRESETS)})")
    out = resolver.get("out")
    if out is None:
        raise UsageError("--out est requis")

    seed = _seed(resolver)
    config = DatasetConfig.from_preset(
        preset,
        size=int(resolver.get("size", settings.DATASET_SIZE)),
        velocity_bound=int(resolver.get("velocity_bound", settings.VELOCITY_BOUND)),
    )
    samples = generate_dataset(track_map, config, seed, jobs=int(resolver.get("jobs", settings.JOBS)))
    header = DatasetHeader(
        map_id=track_map.map_id,
        preset=config.preset,
        size=len(samples),
        seed=seed,
        velocity_bound=config.velocity_bound,
    )
    path = write_dataset(samples, out, header)
    write_manifest(
        _manifest("gen-data", config.model_dump(), seed, [path], track_map), path
    )
    return EXIT_OK


def _check_train_flags(method: str, resolver: Resolver) -> None:
    """Options d'entraînement d'une autre méthode: refusées en ligne de commande comme dans --config"""
    unexpected = []
    for name in sorted(ALL_TRAIN_OPTIONS - TRAIN_OPTIONS[method]):
        if getattr(resolver.args, name, None) is not None:
            unexpected.append("--" + name.replace("_", "-"))
        elif resolver.file_config.get(name) is not None:
            unexpected.append(f"{name} (--config)")
    if unexpected:
        raise UsageError(f"Options incompatibles avec `train {method}`: {', '.join(unexpected)}")


def _read_training_set(resolver: Resolver, name: str, track_map: Optional[TrackMap]):
    path = resolver.get(name)
    if path is None:
        raise UsageError(f"--{name} est requis")
    header, samples = read_dataset(path, track_map.map_id if track_map else None)
    return header, samples


def cmd_train(resolver: Resolver, args: argparse.Namespace) -> int:
    settings = app_config.settings
    method = args.method
    _check_train_flags(method, resolver)
    out_dir = Path(resolver.get("out") or f"checkpoints/{method}")
    seed = _seed(resolver)
    rng = derive_rng(seed, "train", method)
    track_map: Optional[TrackMap] = None
    outputs: List[Path] = []

    if method in ("pil-nn", "pil-lda", "pil-lr"):
        track_map = get_map_repository().get(resolver.get("map")) if resolver.get("map") else None
        header, samples = _read_training_set(resolver, "dataset", track_map)
        if method == "pil-nn":
            config = PilConfig(
                dataset_preset=header.preset,
                max_epochs=resolver.get("epochs", MAX_PIL_EPOCHS),
                step_size=resolver.get("step_size", IMITATION_STEP_SIZE),
                batch_size=resolver.get("batch_size", 32),
            )
            checkpoints = train_pil(samples, config, rng)
        else:
            kind = LinearKind.LDA if method == "pil-lda" else LinearKind.LR
            config = None
            checkpoints = train_linear(samples, kind)
        resolved = {"dataset": str(resolver.get("dataset")), "preset": header.preset}
        if config is not None:
            resolved.update(config.model_dump())
    elif method == "dagger":
        track_map = _load_map(resolver)
        header, samples = _read_training_set(resolver, "pretrain", track_map)
        config = DaggerConfig(
            pretrain_preset=header.preset,
            iterations=resolver.get("iters", 20),
            samples_per_iteration=resolver.get("samples_per_iter", 5000),
            epochs_per_iteration=resolver.get("epochs_per_iter", 8),
            pretrain_epochs=resolver.get("pretrain_epochs", 8),
            step_size=resolver.get("step_size", IMITATION_STEP_SIZE),
            batch_size=resolver.get("batch_size", 32),
            random_start=bool(resolver.get("random_start", False)),
            random_velocity=bool(resolver.get("random_velocity", False)),
            noisy=bool(resolver.get("noisy", False)),
            velocity_bound=resolver.get("velocity_bound", settings.VELOCITY_BOUND),
            step_cap=resolver.get("step_cap", settings.STEP_CAP),
        )
        checkpoints = train_dagger(track_map, samples, config, rng)
        outputs.append(write_dagger_history(checkpoints.history, out_dir / "iterations.csv"))
        resolved = {"pretrain": str(resolver.get("pretrain")), **config.model_dump()}
    else:
        track_map = _load_map(resolver)
        config = DqnConfig(
            mode=resolver.get("mode", "NS-D"),
            episodes=resolver.get("episodes", 100_000),
            buffer_capacity=resolver.get("buffer_capacity", 100_000),
            gamma=resolver.get("gamma", settings.GAMMA),
            epsilon_decay=resolver.get("epsilon_decay", 0.999),
            epsilon_end=resolver.get("epsilon_end", 1e-4),
            batch_size=resolver.get("batch_size", 32),
            target_sync_interval=resolver.get("target_sync", 500),
            step_size=resolver.get("step_size", DQN_STEP_SIZE),
            step_cap=resolver.get("step_cap", settings.STEP_CAP),
        )
        checkpoints = dqn_train(track_map, config, rng)
        outputs.append(write_training_trace(checkpoints.history, out_dir / "training-trace.csv"))
        resolved = config.model_dump()

    outputs.extend(save_checkpoints(checkpoints, out_dir))
    write_manifest(_manifest("train", {"method": method, **resolved}, seed, outputs, track_map), out_dir)
    if checkpoints.aborted:
        logger.error("Entraînement interrompu: %s", checkpoints.aborted)
        return EXIT_RUNTIME
    return EXIT_OK


def _agent_refs(resolver: Resolver) -> List[tuple]:
    refs = resolver.get("agent") or []
    if isinstance(refs, str):
        refs = [refs]
    if not refs:
        raise UsageError("Au moins un --agent est requis")
    parsed = []
    for ref in refs:
        # `nom=chemin` names a checkpoint agent explicitly
        name, sep, target = ref.partition("=")
        parsed.append((target, name) if sep else (ref, None))
    return parsed


def cmd_evaluate(resolver: Resolver) -> int:
    settings = app_config.settings
    track_map = _load_map(resolver)
    seed = _seed(resolver)
    preset = resolver.get("preset", "NS-ZV-D")
    if preset not in EVAL_PRESETS:
        raise UsageError(f"Configuration inconnue: {preset} (attendu: {', '.join(EVAL_PRESETS)})")
    config = EvalConfig(
        preset=preset,
        runs=resolver.get("runs", settings.RUNS),
        step_cap=resolver.get("step_cap", settings.STEP_CAP),
        gamma=resolver.get("gamma", settings.GAMMA),
        seed=seed,
        velocity_bound=resolver.get("velocity_bound", settings.VELOCITY_BOUND),
    )
    agents = [build_agent(ref, track_map, name) for ref, name in _agent_refs(resolver)]
    traces_dir = resolver.get("traces_dir")
    keep = int(resolver.get("traces", 1)) if traces_dir else 0

    service = EvaluationService(track_map, config, jobs=int(resolver.get("jobs", settings.JOBS)))
    reports = service.evaluate(agents, keep_traces=keep)

    out = resolver.get("out") or "report.csv"
    fmt = resolver.get("format") or ("json" if str(out).endswith(".json") else "csv")
    outputs = [export_report(list(reports.values()), out, fmt)]
    if traces_dir:
        for agent_id, episodes in service.episodes.items():
            for run, trace in episodes:
                episode = to_episode_file(track_map, agent_id, config.preset, run, trace)
                name = f"{_safe_name(agent_id)}-run{run:05d}.jsonl"
                outputs.append(write_episode(episode, Path(traces_dir) / name))

    resolved = {**config.model_dump(), "agents": [ref for ref, _ in _agent_refs(resolver)]}
    write_manifest(_manifest("evaluate", resolved, seed, outputs, track_map), outputs[0])
    for report in reports.values():
        print(
            f"{report.agent}: win {report.win_rate:.4f} loss {report.loss_rate:.4f} "
            f"timeout {report.timeout_rate:.4f}"
        )
    return EXIT_OK


def cmd_quality(resolver: Resolver) -> int:
    settings = app_config.settings
    track_map = _load_map(resolver)
    seed = _seed(resolver)
    preset = resolver.get("preset", "NS-ZV")
    runs = int(resolver.get("runs", settings.RUNS))
    refs = _agent_refs(resolver)
    reports = []
    for ref, name in refs:
        agent = build_agent(ref, track_map, name)
        rng = derive_rng(seed, "quality", preset, agent.agent_id)
        reports.append(
            action_quality(
                agent,
                track_map,
                preset,
                runs,
                rng,
                step_cap=int(resolver.get("step_cap", settings.STEP_CAP)),
                velocity_bound=int(resolver.get("velocity_bound", settings.VELOCITY_BOUND)),
            )
        )
    out = resolver.get("out") or "quality.csv"
    fmt = resolver.get("format") or ("json" if str(out).endswith(".json") else "csv")
    path = export_report(reports, out, fmt)
    resolved = {"preset": preset, "runs": runs, "agents": [ref for ref, _ in refs]}
    write_manifest(_manifest("quality", resolved, seed, [path], track_map), path)
    for report in reports:
        print(
            f"{report.agent}: optimal {report.optimal_frac:.4f} secure {report.secure_frac:.4f} "
            f"fatal {report.fatal_frac:.4f} ({report.decisions} décisions)"
        )
    return EXIT_OK


def _format_actions(actions) -> str:
    return " ".join(f"({ax},{ay})" for ax, ay in actions)


def cmd_plan(resolver: Resolver, args: argparse.Namespace) -> int:
    track_map = _load_map(resolver)
    state = State(args.x, args.y, args.vx, args.vy)
    if track_map.is_blocked(state.x, state.y):
        raise UsageError(f"({state.x}, {state.y}) n'est pas une case praticable de {track_map.map_id}")
    plan = get_planner(track_map).astar(state)
    if plan is None:
        print("unsolvable")
        raise UnsolvableResult(f"Aucun plan depuis {tuple(state)}")
    print(f"length: {plan.length}")
    print(f"first_actions: {_format_actions(plan.first_actions)}")
    print(f"witness: {_format_actions(plan.witness)}")
    return EXIT_OK


def _trace_files(refs: Sequence[str]) -> List[Path]:
    files: List[Path] = []
    for ref in refs:
        path = Path(ref)
        if path.is_dir():
            files.extend(sorted(path.glob("*.jsonl")))
        else:
            files.append(path)
    return files


def cmd_render(resolver: Resolver) -> int:
    out = resolver.get("out")
    if out is None:
        raise UsageError("--out est requis")
    training_trace = resolver.get("training_trace")
    seed = _seed(resolver)
    if training_trace:
        svg = render_training_curve(read_training_trace(training_trace))
        path = write_svg(svg, out)
        write_manifest(_manifest("render", {"training_trace": training_trace}, seed, [path]), path)
        return EXIT_OK

    track_map = _load_map(resolver)
    refs = resolver.get("trace") or []
    files = _trace_files([refs] if isinstance(refs, str) else refs)
    if not files:
        raise UsageError("--trace ou --training-trace est requis")
    svg = render_traces(track_map, [read_episode(f) for f in files])
    path = write_svg(svg, out)
    write_manifest(
        _manifest("render", {"traces": [str(f) for f in files]}, seed, [path], track_map), path
    )
    return EXIT_OK


def cmd_serve(resolver: Resolver) -> int:
    import uvicorn

    settings = app_config.settings
    uvicorn.run(
        "app.main:app",
        host=resolver.get("host", settings.HOST),
        port=int(resolver.get("port", settings.PORT)),
    )
    return EXIT_OK


# Construction du parseur


def _flag(value: str) -> bool:
    return value.lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(
        prog="rtlab", description="Racetrack: expert A*, imitation, DAGGER, DQN et évaluation"
    )
    parser.add_argument("--config", help="Fichier JSON de configuration (options par défaut)")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING...")
    sub = parser.add_subparsers(dest="command", parser_class=LabArgumentParser)
    sub.required = True

    def common(p):
        p.add_argument("--map", help="Identifiant de carte embarquée ou chemin .track")
        p.add_argument("--seed", type=int, help="Graine maîtresse (défaut: RTLAB_SEED)")

    p = sub.add_parser("gen-data", help="Générer un jeu de données étiqueté")
    common(p)
    p.add_argument("--preset", help=", ".join(DATASET_PRESETS))
    p.add_argument("--size", type=int)
    p.add_argument("--velocity-bound", dest="velocity_bound", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")

    p = sub.add_parser("train", help="Entraîner un agent")
    p.add_argument("method", choices=TRAIN_METHODS)
    common(p)
    p.add_argument("--out", help="Répertoire des checkpoints")
    p.add_argument("--dataset")
    p.add_argument("--pretrain")
    p.add_argument("--epochs", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--samples-per-iter", dest="samples_per_iter", type=int)
    p.add_argument("--epochs-per-iter", dest="epochs_per_iter", type=int)
    p.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int)
    p.add_argument("--random-start", dest="random_start", type=_flag)
    p.add_argument("--random-velocity", dest="random_velocity", type=_flag)
    p.add_argument("--noisy", type=_flag)
    p.add_argument("--velocity-bound", dest="velocity_bound", type=int)
    p.add_argument("--mode", help=", ".join(DQN_MODES))
    p.add_argument("--episodes", type=int)
    p.add_argument("--buffer-capacity", dest="buffer_capacity", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon-decay", dest="epsilon_decay", type=float)
    p.add_argument("--epsilon-end", dest="epsilon_end", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--target-sync", dest="target_sync", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--step-cap", dest="step_cap", type=int)

    p = sub.add_parser("evaluate", help="Comparer des agents sur une configuration")
    common(p)
    p.add_argument("--agent", action="append", help="expert, random, idle, ou [nom=]checkpoint.json")
    p.add_argument("--preset", help=", ".join(EVAL_PRESETS))
    p.add_argument("--runs", type=int)
    p.add_argument("--step-cap", dest="step_cap", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--velocity-bound", dest="velocity_bound", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--traces-dir", dest="traces_dir")
    p.add_argument("--traces", type=int, help="Nombre d'épisodes exportés par agent")
    p.add_argument("--out")

    p = sub.add_parser("quality", help="Qualité des actions (optimale / sûre / fatale)")
    common(p)
    p.add_argument("--agent", action="append")
    p.add_argument("--preset", help="NS-ZV, RS-ZV, RS-RV")
    p.add_argument("--runs", type=int)
    p.add_argument("--step-cap", dest="step_cap", type=int)
    p.add_argument("--velocity-bound", dest="velocity_bound", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")

    p = sub.add_parser("plan", help="Plan optimal depuis un état")
    common(p)
    p.add_argument("x", type=int)
    p.add_argument("y", type=int)
    p.add_argument("vx", type=int, nargs="?", default=0)
    p.add_argument("vy", type=int, nargs="?", default=0)

    p = sub.add_parser("render", help="Rendu SVG de traces ou d'une courbe d'entraînement")
    common(p)
    p.add_argument("--trace", action="append", help="Fichier .jsonl ou répertoire de traces")
    p.add_argument("--training-trace", dest="training_trace")
    p.add_argument("--out")

    p = sub.add_parser("serve", help="Lancer l'API HTTP")
    p.add_argument("--host")
    p.add_argument("--port", type=int)

    return parser


USAGE_ERRORS = (
    UsageError,
    ConfigurationError,
    UnknownPreset,
    UnknownMap,
    MapParseError,
    ModelFormatError,
    DatasetFormatError,
    MapMismatchError,
    ReportFormatError,
    TraceMapMismatch,
    ValidationError,
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        resolver = Resolver(args, _load_file_config(args.config))
        configure_logging(resolver.get("log_level"))
        # single-threaded kernels keep repeated runs bit-identical
        torch.set_num_threads(1)

        command = args.command
        if command == "gen-data":
            return cmd_gen_data(resolver)
        if command == "train":
            return cmd_train(resolver, args)
        if command == "evaluate":
            return cmd_evaluate(resolver)
        if command == "quality":
            return cmd_quality(resolver)
        if command == "plan":
            return cmd_plan(resolver, args)
        if command == "render":
            return cmd_render(resolver)
        return cmd_serve(resolver)
    except UnsolvableResult as exc:
        logger.info("%s", exc)
        return EXIT_NEGATIVE
    except USAGE_ERRORS as exc:
        print(f"erreur: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RacetrackError, OSError) as exc:
        logger.error("Échec: %s", exc)
        print(f"échec: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

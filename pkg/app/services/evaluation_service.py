"""Évaluation des agents: taux de victoire, retours et pas, qualité des actions."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from app.core.seeding import derive_rng
from app.models.track import Action, Outcome, State, TrackMap
from app.schemas.eval_dto import EpisodeFile, EpisodeHeader, EvalConfig, EvalReport, QualityReport
from app.schemas.planner_dto import ActionQuality
from app.schemas.track_dto import TraceRecord, sim_config_for_preset, sim_config_for_quality
from app.services.agent_service import Agent
from app.services.planner_service import get_planner
from app.services.track_service import TrackSimulator, sample_initial_state

logger = logging.getLogger(__name__)

WIN, LOSS, TIMEOUT = "win", "loss", "timeout"
# Runs are evaluated in fixed blocks so that results do not depend on the worker count
RUN_BLOCK = 250


class EpisodeStep(NamedTuple):
    state: State
    action: Action
    noise_applied: bool
    outcome: Outcome
    reward: int

    def to_record(self) -> TraceRecord:
        return TraceRecord(
            x=self.state.x,
            y=self.state.y,
            vx=self.state.vx,
            vy=self.state.vy,
            ax=self.action[0],
            ay=self.action[1],
            noise_applied=self.noise_applied,
            outcome=self.outcome.value,
            reward=self.reward,
        )


@dataclass
class EpisodeTrace:
    start: State
    steps: List[EpisodeStep] = field(default_factory=list)
    result: str = TIMEOUT

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def return_raw(self) -> float:
        return float(sum(step.reward for step in self.steps))

    def discounted_return(self, gamma: float) -> float:
        """Somme de gamma^t * r_{t+1}"""
        total, discount = 0.0, 1.0
        for step in self.steps:
            total += discount * step.reward
            discount *= gamma
        return total


def run_episode(
    agent: Agent,
    track_map: TrackMap,
    start: State,
    noisy: bool,
    step_cap: int,
    rng: np.random.Generator,
) -> EpisodeTrace:
    """Jouer un épisode jusqu'à l'arrivée (victoire), un mur (défaite) ou step_cap pas"""
    simulator = TrackSimulator(track_map)
    trace = EpisodeTrace(start=start)
    state = start
    for _ in range(step_cap):
        action = agent.act(state, simulator.encode(state), rng)
        outcome, reward = simulator.step(state, action, noisy, rng)
        trace.steps.append(EpisodeStep(state, action, outcome.noise_applied, outcome.kind, reward))
        if outcome.kind is Outcome.REACHED_GOAL:
            trace.result = WIN
            return trace
        if outcome.kind is Outcome.CRASHED:
            trace.result = LOSS
            return trace
        state = outcome.next_state
    trace.result = TIMEOUT
    return trace


def to_episode_file(
    track_map: TrackMap, agent_id: str, preset: str, run: int, trace: EpisodeTrace
) -> EpisodeFile:
    return EpisodeFile(
        header=EpisodeHeader(
            map_id=track_map.map_id,
            agent=agent_id,
            config=preset,
            run=run,
            start=list(trace.start),
            result=trace.result,
        ),
        steps=[step.to_record() for step in trace.steps],
    )


class RunResult(NamedTuple):
    result: str
    steps: int
    return_raw: float
    return_disc: float


def draw_starts(track_map: TrackMap, config: EvalConfig) -> List[State]:
    """Départs partagés par tous les agents; non filtrés sur la solvabilité"""
    sim_config = sim_config_for_preset(config.preset, config.velocity_bound)
    rng = derive_rng(config.seed, "starts", config.preset)
    return [
        sample_initial_state(track_map, sim_config, rng, require_solvable=False)
        for _ in range(config.runs)
    ]


def _run_block(
    agent: Agent,
    track_map: TrackMap,
    starts: Sequence[State],
    first_run: int,
    config: EvalConfig,
    noisy: bool,
    keep_traces: int = 0,
):
    results, traces = [], []
    for offset, start in enumerate(starts):
        run = first_run + offset
        rng = derive_rng(config.seed, run, agent.agent_id)
        trace = run_episode(agent, track_map, start, noisy, config.step_cap, rng)
        results.append(
            RunResult(trace.result, trace.length, trace.return_raw, trace.discounted_return(config.gamma))
        )
        if run < keep_traces:
            traces.append((run, trace))
    return results, traces


def aggregate(
    agent_id: str, config: EvalConfig, results: Sequence[RunResult], solvable_start_frac: float
) -> EvalReport:
    runs = len(results)
    wins = sum(r.result == WIN for r in results)
    losses = sum(r.result == LOSS for r in results)
    timeouts = runs - wins - losses
    win_steps = [r.steps for r in results if r.result == WIN]
    # sequential sums in run order
    return EvalReport(
        agent=agent_id,
        config=config.preset,
        runs=runs,
        wins=wins,
        losses=losses,
        timeouts=timeouts,
        win_rate=wins / runs,
        loss_rate=losses / runs,
        timeout_rate=timeouts / runs,
        avg_return_disc=sum(r.return_disc for r in results) / runs,
        avg_return_raw=sum(r.return_raw for r in results) / runs,
        avg_steps_wins=sum(win_steps) / len(win_steps) if win_steps else None,
        solvable_start_frac=solvable_start_frac,
    )


class EvaluationService:
    """Évaluation appariée: mêmes départs et flux aléatoires par (run, agent)"""

    def __init__(self, track_map: TrackMap, config: EvalConfig, jobs: int = 1):
        self.track_map = track_map
        self.config = config
        self.jobs = max(1, jobs)
        self.planner = get_planner(track_map)
        self.episodes: Dict[str, List] = {}

    def _run_agent(self, agent: Agent, starts: List[State], noisy: bool, keep_traces: int):
        blocks = [
            (first, starts[first : first + RUN_BLOCK]) for first in range(0, len(starts), RUN_BLOCK)
        ]
        if self.jobs == 1 or len(blocks) == 1:
            outputs = [
                _run_block(agent, self.track_map, block, first, self.config, noisy, keep_traces)
                for first, block in blocks
            ]
        else:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = [
                    pool.submit(
                        _run_block, agent, self.track_map, block, first, self.config, noisy, keep_traces
                    )
                    for first, block in blocks
                ]
                outputs = [future.result() for future in futures]
        results = [r for block_results, _ in outputs for r in block_results]
        traces = [t for _, block_traces in outputs for t in block_traces]
        return results, traces

    def evaluate(self, agents: Sequence[Agent], keep_traces: int = 0) -> Dict[str, EvalReport]:
        if not agents:
            raise ValueError("Au moins un agent est requis")
        ids = [agent.agent_id for agent in agents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Identifiants d'agents dupliqués: {ids}")

        sim_config = sim_config_for_preset(self.config.preset, self.config.velocity_bound)
        starts = draw_starts(self.track_map, self.config)
        solvable = sum(self.planner.is_solvable(s) for s in starts) / len(starts)

        reports: Dict[str, EvalReport] = {}
        for agent in agents:
            results, traces = self._run_agent(agent, starts, sim_config.noisy, keep_traces)
            reports[agent.agent_id] = aggregate(agent.agent_id, self.config, results, solvable)
            self.episodes[agent.agent_id] = traces
            report = reports[agent.agent_id]
            logger.info(
                "%s sur %s/%s: victoires %.4f, défaites %.4f, temps écoulé %.4f",
                agent.agent_id,
                self.track_map.map_id,
                self.config.preset,
                report.win_rate,
                report.loss_rate,
                report.timeout_rate,
            )
        return reports


def evaluate_agents(
    agents: Sequence[Agent],
    track_map: TrackMap,
    config: EvalConfig,
    jobs: int = 1,
) -> Dict[str, EvalReport]:
    return EvaluationService(track_map, config, jobs).evaluate(agents)


def action_quality(
    agent: Agent,
    track_map: TrackMap,
    preset: str,
    runs: int,
    rng: np.random.Generator,
    step_cap: int = 1000,
    velocity_bound: int = 5,
) -> QualityReport:
    """Classer chaque action choisie (optimale / sûre / fatale) sur des épisodes déterministes"""
    sim_config = sim_config_for_quality(preset, velocity_bound)
    planner = get_planner(track_map)
    counts = {quality: 0 for quality in ActionQuality}
    excluded = 0

    for _ in range(runs):
        start = sample_initial_state(track_map, sim_config, rng, require_solvable=False)
        trace = run_episode(agent, track_map, start, False, step_cap, rng)
        for step in trace.steps:
            if not planner.is_solvable(step.state):
                excluded += 1
                continue
            counts[planner.classify_action(step.state, step.action)] += 1

    report = QualityReport(
        agent=agent.agent_id,
        config=sim_config.preset_id[:-2],
        decisions=sum(counts.values()),
        optimal=counts[ActionQuality.OPTIMAL],
        secure=counts[ActionQuality.SECURE],
        fatal=counts[ActionQuality.FATAL],
        excluded_unsolvable=excluded,
    )
    logger.info(
        "Qualité %s sur %s: %d décisions, optimales %.4f, fatales %.4f",
        agent.agent_id,
        report.config,
        report.decisions,
        report.optimal_frac,
        report.fatal_frac,
    )
    return report

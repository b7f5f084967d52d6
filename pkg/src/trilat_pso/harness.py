"""Baseline runs, multi-trial experiments and parameter sweeps.

Every trial draws its own seed from the experiment seed, so records do not
depend on how many trials run in parallel. Outputs are a per-solution records
CSV, an aggregate CSV (AVG, STDEV, AVG+STDEV, AVG-STDEV and MEDIAN rows), a
per-trial CSV and SVG plots. Sweeps and the binary vs continuous comparison
write one row per setting or method.
"""
import enum
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from trilat_pso import report
from trilat_pso.config import RADIO_KEYS, apply_overrides, describe
from trilat_pso.mopso import MopsoConfig, mopso_run
from trilat_pso.radio import (
    DEFAULT_RADIO,
    RANGE_LIMITS,
    PowerLevel,
    RadioParams,
    RangeAssignment,
    level_range,
)
from trilat_pso.simulation import SimOutcome, simulate
from trilat_pso.swarm import (
    ObjectiveVector,
    PositionUpdate,
    PsoConfig,
    Representation,
    decode,
    sopso_run,
)
from trilat_pso.topology import Topology


class Command(enum.Enum):
    """Experiment kinds."""

    BASELINE = "baseline"
    SOPSO = "sopso"
    MOPSO_BINARY = "mopso-bin"
    MOPSO_CONTINUOUS = "mopso-cont"
    SWEEP = "sweep"
    COMPARE = "compare"

    @property
    def stem(self) -> str:
        return self.value.replace("-", "_")


RECORD_COLUMNS = [
    "trial",
    "solution_index",
    "steps",
    "node_steps",
    "power_mw",
    "localized_blind",
    "participants",
    "messages",
    "min_msgs",
    "mid_msgs",
    "max_msgs",
]
METRICS = RECORD_COLUMNS[2:]
ASSIGNMENT_COLUMN = "ranges_m"
LEVEL_COLUMNS = list(report.LEVEL_COLUMNS)
STATISTICS = ["AVG", "STDEV", "AVG+STDEV", "AVG-STDEV", "MEDIAN"]


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to rerun an experiment.

    Parameters
    ----------
    command: Command
    topology: Topology
    trials: int, default 1
    seed: int, default 0
        Experiment seed; trial seeds are derived from it.
    overrides: tuple of (key, value) pairs
        Raw config overrides, applied in order after the defaults.
    output_dir: Path
    position_update: PositionUpdate, optional
        Continuous-mode update rule; overrides any ``position_update`` key.
    representation: Representation, default Representation.BINARY
        Encoding used by the single-objective optimizer.
    n_jobs: int, default 1
        Parallel trial workers.
    sweep_parameter: str, optional
        Parameter a sweep varies; see :data:`SWEEP_GRIDS`.
    sweep_base: Command, default Command.MOPSO_CONTINUOUS
        Optimizer a sweep replays.
    plots: bool, default True
    topology_source: str
        Where the topology came from, for reports.
    """

    command: Command
    topology: Topology
    trials: int = 1
    seed: int = 0
    overrides: Tuple[Tuple[str, str], ...] = ()
    output_dir: Path = Path(".")
    position_update: Optional[PositionUpdate] = None
    representation: Representation = Representation.BINARY
    n_jobs: int = 1
    sweep_parameter: Optional[str] = None
    sweep_base: Command = Command.MOPSO_CONTINUOUS
    plots: bool = True
    topology_source: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1.")
        if self.seed < 0:
            raise ValueError("seed must be non-negative.")
        if self.command is Command.SWEEP and self.sweep_parameter not in SWEEP_GRIDS:
            raise ValueError(
                f"unknown sweep parameter {self.sweep_parameter!r}; "
                f"choose from {', '.join(SWEEP_GRIDS)}."
            )
        if self.sweep_base in (Command.BASELINE, Command.SWEEP, Command.COMPARE):
            raise ValueError("a sweep replays sopso, mopso-bin or mopso-cont.")


@dataclass(frozen=True)
class TrialRecord:
    """Solutions of one trial.

    ``improvement`` is the relative power saving of the cheapest solution that
    localizes as many blind nodes as the uniform-Max baseline, or None.
    """

    trial_index: int
    seed: int
    rows: Tuple[Dict, ...]
    wall_time: float
    improvement: Optional[float] = None


@dataclass(frozen=True)
class ExperimentResult:
    """Frames and files produced by one command."""

    records: pd.DataFrame
    aggregate: Optional[pd.DataFrame]
    trials: Tuple[TrialRecord, ...]
    paths: Tuple[Path, ...]
    report: str


def trial_seed(seed: int, trial: int) -> int:
    """Seed of one trial, derived from the experiment seed."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def mode_of(command: Command, spec: ExperimentSpec) -> Representation:
    if command is Command.MOPSO_CONTINUOUS:
        return Representation.CONTINUOUS
    if command is Command.MOPSO_BINARY:
        return Representation.BINARY
    return spec.representation


def build_config(
    spec: ExperimentSpec, command: Command = None, extra: Dict[str, str] = None
) -> PsoConfig:
    """Defaults, then the experiment's overrides, then ``extra``, then dedicated flags."""
    command = command or spec.command
    if command is Command.SOPSO:
        config = PsoConfig()
    elif command in (Command.MOPSO_BINARY, Command.MOPSO_CONTINUOUS):
        config = MopsoConfig.defaults(mode_of(command, spec))
    else:
        raise ValueError(f"{command.value} has no optimizer config.")
    config = apply_overrides(config, dict(spec.overrides))
    if extra:
        config = apply_overrides(config, extra)
    config = replace(config, seed=spec.seed)
    if spec.position_update is not None:
        config = replace(config, position_update=spec.position_update)
    return config


def run_baseline(
    topology: Topology, radio: RadioParams = DEFAULT_RADIO
) -> Dict[PowerLevel, SimOutcome]:
    """Flood the topology three times with every node at the same level."""
    outcomes = {}
    for level in PowerLevel:
        assignment = RangeAssignment.uniform(level, len(topology), radio)
        outcomes[level] = simulate(topology, assignment)
        logger.info(
            "baseline {}: {} blind localized in {} steps",
            level.name,
            outcomes[level].localized_blind,
            outcomes[level].steps,
        )
    return outcomes


def baseline_frame(
    outcomes: Dict[PowerLevel, SimOutcome], radio: RadioParams = DEFAULT_RADIO
) -> pd.DataFrame:
    rows = [
        {
            "level": level.name.lower(),
            "range_m": level_range(level, radio),
            "steps": outcome.steps,
            "node_steps": outcome.node_steps,
            "power_mw": outcome.total_power_mw,
            "localized_blind": outcome.localized_blind,
            "participants": outcome.participants,
            "messages": outcome.messages,
        }
        for level, outcome in outcomes.items()
    ]
    return pd.DataFrame(rows)


def render_baseline(
    topology: Topology,
    outcomes: Dict[PowerLevel, SimOutcome],
    radio: RadioParams = DEFAULT_RADIO,
) -> str:
    runs = baseline_frame(outcomes, radio).to_dict("records")
    for run in runs:
        run["label"] = run["level"].capitalize()
    return report.render_baseline(runs, len(topology), topology.n_anchors)


def _row(
    trial: int, index: int, objectives: ObjectiveVector, assignment: RangeAssignment
) -> Dict:
    levels = objectives.level_messages or (None, None, None)
    row = {
        "trial": trial,
        "solution_index": index,
        "steps": objectives.time_steps,
        "node_steps": objectives.node_steps,
        "power_mw": objectives.power_mw,
        "localized_blind": objectives.localized_blind,
        "participants": objectives.participants,
        "messages": objectives.messages,
    }
    row.update(zip(LEVEL_COLUMNS, levels))
    row[ASSIGNMENT_COLUMN] = ";".join(repr(float(r)) for r in assignment.ranges_m())
    return row


def improvement_over(
    solutions: Sequence[ObjectiveVector], baseline: SimOutcome
) -> Optional[float]:
    """Relative power saving against a baseline run.

    Only solutions localizing at least as many blind nodes as the baseline
    count; the cheapest one is compared.
    """
    eligible = [s.power_mw for s in solutions if s.localized_blind >= baseline.localized_blind]
    if not eligible or baseline.total_power_mw == 0:
        return None
    return (baseline.total_power_mw - min(eligible)) / baseline.total_power_mw


def run_trial(
    topology: Topology,
    config: PsoConfig,
    command: Command,
    mode: Representation,
    trial: int,
    baseline: SimOutcome,
) -> TrialRecord:
    """Run one optimizer trial with the derived trial seed."""
    seed = trial_seed(config.seed, trial)
    config = replace(config, seed=seed)
    started = time.perf_counter()
    if command is Command.SOPSO:
        best = sopso_run(topology, config, mode=mode)
        solutions = [best.best_objectives]
        assignments = [best.best_assignment]
        improvement = None
    else:
        archive = mopso_run(topology, config, mode).archive
        solutions = [entry.objectives for entry in archive]
        assignments = [
            decode(entry.position, mode, config.radio, config.bounds) for entry in archive
        ]
        improvement = improvement_over(solutions, baseline)
    wall_time = time.perf_counter() - started
    logger.info("trial {} finished: {} solutions in {:.2f} s", trial, len(solutions), wall_time)
    return TrialRecord(
        trial_index=trial,
        seed=seed,
        rows=tuple(
            _row(trial, i, s, a) for i, (s, a) in enumerate(zip(solutions, assignments))
        ),
        wall_time=wall_time,
        improvement=improvement,
    )


def records_frame(trials: Sequence[TrialRecord]) -> pd.DataFrame:
    """One row per solution of every trial, in trial order."""
    rows = [row for trial in trials for row in trial.rows]
    frame = pd.DataFrame(rows, columns=RECORD_COLUMNS + [ASSIGNMENT_COLUMN])
    return frame.astype({column: "Int64" for column in LEVEL_COLUMNS})


def trials_frame(trials: Sequence[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "trial": [t.trial_index for t in trials],
            "seed": [t.seed for t in trials],
            "solutions": [len(t.rows) for t in trials],
            "improvement": [np.nan if t.improvement is None else t.improvement for t in trials],
        }
    )


def aggregate_frame(
    records: pd.DataFrame, improvements: Optional[Sequence[Optional[float]]] = None
) -> pd.DataFrame:
    """Statistics of every metric over all solution rows.

    STDEV is the sample (n - 1) standard deviation, reported as 0.0 for a
    single row. An ``improvement`` column, when given, is aggregated over
    trials instead of rows, ignoring trials without an eligible solution.

    Returns
    -------
    pandas.DataFrame
        Rows AVG, STDEV, AVG+STDEV, AVG-STDEV and MEDIAN indexed by
        ``statistic``.
    """
    columns = {m: records[m].astype(float).to_numpy() for m in METRICS}
    if improvements is not None:
        columns["improvement"] = np.array(
            [np.nan if i is None else i for i in improvements], dtype=float
        )
    stats = {}
    for name, values in columns.items():
        values = values[~np.isnan(values)]
        if len(values) == 0:
            stats[name] = [np.nan] * len(STATISTICS)
            continue
        avg = float(np.mean(values))
        if len(values) > 1:
            std = float(np.std(values, ddof=1))
        else:
            logger.warning("{} has a single value; reporting STDEV 0.0.", name)
            std = 0.0
        stats[name] = [avg, std, avg + std, avg - std, float(np.median(values))]
    frame = pd.DataFrame(stats, index=pd.Index(STATISTICS, name="statistic"))
    return frame


def run_trials(spec: ExperimentSpec, config: PsoConfig, command: Command = None):
    """Run ``spec.trials`` independent trials, in parallel with ``spec.n_jobs`` workers.

    Returns
    -------
    (list of TrialRecord, pandas.DataFrame, pandas.DataFrame)
        Trials, solution records and their aggregate.
    """
    command = command or spec.command
    mode = mode_of(command, spec)
    baseline = simulate(
        spec.topology, RangeAssignment.uniform(PowerLevel.MAX, len(spec.topology), config.radio)
    )
    trials = Parallel(n_jobs=spec.n_jobs)(
        delayed(run_trial)(spec.topology, config, command, mode, trial, baseline)
        for trial in range(spec.trials)
    )
    records = records_frame(trials)
    improvements = None
    if command is not Command.SOPSO:
        improvements = [t.improvement for t in trials]
        found = [i for i in improvements if i is not None]
        if found:
            logger.info(
                "median power improvement over uniform Max: {:.2%} ({} of {} trials)",
                float(np.median(found)),
                len(found),
                len(trials),
            )
        else:
            logger.warning("no trial matched the uniform-Max localized count.")
    return trials, records, aggregate_frame(records, improvements)


SWEEP_GRIDS = {
    "particles+iterations": [(5, 5), (10, 10), (20, 20), (50, 50), (100, 100), (150, 150), (200, 200)],
    "max_range": [64.0, 80.0, 96.0, 105.0, 112.0, 119.0, 125.0, 132.0],
    "mutation_fraction": [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
    "mutation_value": ["min", "max"],
    "inertia": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
}


def sweep_settings(parameter: str, min_range: float = 64.0) -> List[Tuple[str, Dict[str, str]]]:
    """Label and config overrides of every setting of a sweep.

    Raises
    ------
    ValueError
        If the parameter has no grid.
    """
    if parameter not in SWEEP_GRIDS:
        raise ValueError(
            f"unknown sweep parameter {parameter!r}; choose from {', '.join(SWEEP_GRIDS)}."
        )
    settings = []
    for value in SWEEP_GRIDS[parameter]:
        if parameter == "particles+iterations":
            particles, iterations = value
            settings.append(
                (f"{particles}x{iterations}", {"n_particles": str(particles), "n_iterations": str(iterations)})
            )
        elif parameter == "max_range":
            overrides = {"max_range": repr(value)}
            if value <= min_range:
                overrides["min_range"] = repr(RANGE_LIMITS[0])
            settings.append((repr(value), overrides))
        else:
            settings.append((str(value), {parameter: str(value)}))
    return settings


SWEEP_METRICS = ["steps", "power_mw", "localized_blind", "messages"]


def run_sweep(spec: ExperimentSpec) -> pd.DataFrame:
    """Replay the base optimizer once per setting, changing one parameter.

    Returns
    -------
    pandas.DataFrame
        One row per setting with ``<metric>_avg``, ``<metric>_std`` and the
        median improvement.
    """
    base = build_config(spec, spec.sweep_base)
    rows = []
    for label, overrides in sweep_settings(spec.sweep_parameter, base.min_range):
        config = build_config(spec, spec.sweep_base, overrides)
        logger.info("sweep {} = {}", spec.sweep_parameter, label)
        _, records, aggregate = run_trials(spec, config, spec.sweep_base)
        rows.append(_setting_row(label, records, aggregate))
    return pd.DataFrame(rows)


def _setting_row(label: str, records: pd.DataFrame, aggregate: pd.DataFrame) -> Dict:
    row = {"setting": label}
    for metric in SWEEP_METRICS:
        row[f"{metric}_avg"] = aggregate.loc["AVG", metric]
        row[f"{metric}_std"] = aggregate.loc["STDEV", metric]
    row["solutions"] = len(records)
    row["improvement_median"] = (
        aggregate.loc["MEDIAN", "improvement"] if "improvement" in aggregate else np.nan
    )
    return row


COMPARED = (Command.MOPSO_BINARY, Command.MOPSO_CONTINUOUS)


def run_comparison(spec: ExperimentSpec) -> pd.DataFrame:
    """Run binary and continuous MOPSO on the same topology and trial seeds.

    Returns
    -------
    pandas.DataFrame
        One row per method, shaped like a sweep row, with ``setting`` holding
        the command name.
    """
    rows = []
    for command in COMPARED:
        logger.info("comparing {}", command.value)
        _, records, aggregate = run_trials(spec, build_config(spec, command), command)
        rows.append(_setting_row(command.value, records, aggregate))
    return pd.DataFrame(rows)


def _settings_text(spec: ExperimentSpec, config: Optional[PsoConfig]) -> Dict[str, str]:
    settings = {
        "topology": spec.topology_source or "<in memory>",
        "nodes": str(len(spec.topology)),
        "anchors": str(spec.topology.n_anchors),
        "trials": str(spec.trials),
        "seed": str(spec.seed),
    }
    if config is not None:
        settings.update(describe(config))
    return settings


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run a command and write its CSV files and plots into ``spec.output_dir``."""
    output_dir = Path(spec.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    stem = spec.command.stem
    if spec.command is Command.BASELINE:
        radio = build_radio(spec)
        outcomes = run_baseline(spec.topology, radio)
        frame = baseline_frame(outcomes, radio)
        paths = [report.write_csv(frame, output_dir / f"{stem}.csv", kind=stem)]
        if spec.plots:
            ranges = {level.name.capitalize(): level_range(level, radio) for level in PowerLevel}
            paths += report.emit_topology_plot(spec.topology, ranges, output_dir, stem)
        text = render_baseline(spec.topology, outcomes, radio)
        return ExperimentResult(frame, None, (), tuple(paths), text)
    if spec.command is Command.SWEEP:
        sweep = run_sweep(spec)
        name = spec.sweep_parameter.replace("+", "_")
        paths = [report.write_csv(sweep, output_dir / f"sweep_{name}.csv", kind="sweep")]
        if spec.plots:
            paths += report.emit_sweep_plot(sweep, output_dir, name)
        text = report.render_summary(
            f"sweep of {spec.sweep_parameter} over {spec.sweep_base.value}",
            _settings_text(spec, build_config(spec, spec.sweep_base)),
        )
        return ExperimentResult(sweep, None, (), tuple(paths), text)
    if spec.command is Command.COMPARE:
        comparison = run_comparison(spec)
        paths = [report.write_csv(comparison, output_dir / f"{stem}.csv", kind=stem)]
        if spec.plots:
            paths += report.emit_comparison_plot(comparison, output_dir, stem)
        text = report.render_summary(
            "binary vs continuous MOPSO",
            _settings_text(spec, None),
            comparison.set_index("setting"),
        )
        return ExperimentResult(comparison, None, (), tuple(paths), text)
    config = build_config(spec)
    trials, records, aggregate = run_trials(spec, config)
    paths = [
        report.write_csv(records, output_dir / f"{stem}_records.csv", kind="records"),
        report.write_csv(aggregate, output_dir / f"{stem}_aggregate.csv", kind="aggregate", index=True),
        report.write_csv(trials_frame(trials), output_dir / f"{stem}_trials.csv", kind="trials"),
    ]
    if spec.plots:
        paths += report.emit_plots(records, output_dir, stem)
        if mode_of(spec.command, spec) is Representation.BINARY:
            paths += report.emit_level_usage_plot(records, output_dir, stem)
    text = report.render_summary(stem, _settings_text(spec, config), aggregate)
    return ExperimentResult(records, aggregate, tuple(trials), tuple(paths), text)


def build_radio(spec: ExperimentSpec) -> RadioParams:
    """Link budget after the radio overrides of the experiment."""
    overrides = {k: v for k, v in spec.overrides if k in RADIO_KEYS}
    unknown = [k for k, _ in spec.overrides if k not in RADIO_KEYS]
    if unknown:
        raise ValueError(f"baseline only accepts radio keys, got {', '.join(unknown)}.")
    return apply_overrides(PsoConfig(), overrides).radio

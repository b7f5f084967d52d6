"""Command line interface.

::

    trilat-pso gen-topology --gen 240,40,1000 --seed 7 --out topo.txt
    trilat-pso baseline --topology topo.txt
    trilat-pso mopso-cont --topology topo.txt --trials 50 --jobs 4 --out results
    trilat-pso sweep --param max_range --topology topo.txt --trials 10
    trilat-pso compare --topology topo.txt --trials 20 --set n_iterations=50

Exit codes: 0 on success, 1 for usage and parameter errors, 2 for I/O and
topology file errors.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from loguru import logger

from trilat_pso import __version__
from trilat_pso.config import parse_key_values, read_config_file
from trilat_pso.harness import SWEEP_GRIDS, Command, ExperimentSpec, run_experiment
from trilat_pso.swarm import PositionUpdate, Representation
from trilat_pso.topology import (
    Topology,
    TopologyParseError,
    TopologyValidationError,
    generate_random,
    load,
    save,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class ArgumentParser(argparse.ArgumentParser):
    """Parser that exits with the usage code instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_gen(value: str) -> Tuple[int, int, float]:
    """``N,ANCHORS,SIDE`` generation arguments."""
    parts = value.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected N,ANCHORS,SIDE.")
    try:
        return int(parts[0]), int(parts[1]), float(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad generation arguments {value!r}.") from exc


def parse_set(value: str) -> Tuple[str, str]:
    """One ``key=value`` override."""
    try:
        ((key, raw),) = parse_key_values([value]).items()
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return key, raw


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Experiment seed.")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug detail.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings only.")

    source = ArgumentParser(add_help=False)
    group = source.add_mutually_exclusive_group(required=True)
    group.add_argument("--topology", type=Path, help="Topology file to read.")
    group.add_argument("--gen", type=parse_gen, metavar="N,ANCHORS,SIDE", help="Generate a topology.")
    source.add_argument("--out", type=Path, default=Path("."), help="Output directory.")
    source.add_argument(
        "--set", dest="overrides", type=parse_set, action="append", default=[], metavar="KEY=VALUE"
    )
    source.add_argument("--config", type=Path, help="File of key=value lines.")

    experiment = ArgumentParser(add_help=False)
    experiment.add_argument("--trials", type=int, default=1)
    experiment.add_argument("--jobs", type=int, default=1, help="Parallel trial workers.")
    experiment.add_argument(
        "--mode",
        type=PositionUpdate,
        choices=list(PositionUpdate),
        help="Continuous position update rule: standard, literal or paper-literal.",
    )
    experiment.add_argument("--no-plots", action="store_true")

    parser = ArgumentParser(prog="trilat-pso", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    commands.add_parser("baseline", parents=[common, source], help="Uniform Min, Mid and Max runs.")
    sopso = commands.add_parser(
        "sopso", parents=[common, source, experiment], help="Single-objective swarm."
    )
    sopso.add_argument(
        "--representation",
        type=Representation,
        choices=list(Representation),
        default=Representation.BINARY,
    )
    commands.add_parser(
        "mopso-bin", parents=[common, source, experiment], help="Binary multi-objective swarm."
    )
    commands.add_parser(
        "mopso-cont", parents=[common, source, experiment], help="Continuous multi-objective swarm."
    )
    sweep = commands.add_parser(
        "sweep", parents=[common, source, experiment], help="Vary one parameter."
    )
    sweep.add_argument("--param", required=True, help=f"One of {', '.join(SWEEP_GRIDS)}.")
    sweep.add_argument(
        "--base",
        type=Command,
        choices=[Command.SOPSO, Command.MOPSO_BINARY, Command.MOPSO_CONTINUOUS],
        default=Command.MOPSO_CONTINUOUS,
    )
    commands.add_parser(
        "compare",
        parents=[common, source, experiment],
        help="Binary and continuous multi-objective swarms on the same trial seeds.",
    )
    gen = commands.add_parser("gen-topology", parents=[common], help="Write a random topology.")
    gen.add_argument("--gen", type=parse_gen, required=True, metavar="N,ANCHORS,SIDE")
    gen.add_argument("--out", type=Path, default=Path("topology.txt"), help="Topology file.")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.remove()
    logger.add(sys.stderr, level=level, format="{level: <8} {message}")


def resolve_topology(args) -> Tuple[Topology, str]:
    if args.topology is not None:
        return load(args.topology), str(args.topology)
    n_nodes, n_anchors, side = args.gen
    source = f"generated {n_nodes},{n_anchors},{side!r} seed {args.seed}"
    return generate_random(n_nodes, n_anchors, side, args.seed), source


def collect_overrides(args) -> Tuple[Tuple[str, str], ...]:
    """Config file pairs followed by ``--set`` pairs."""
    pairs = []
    if args.config is not None:
        pairs.extend(read_config_file(args.config).items())
    pairs.extend(args.overrides)
    merged = {}
    for key, value in pairs:
        merged[key] = value
    return tuple(merged.items())


def _gen_topology(args) -> int:
    n_nodes, n_anchors, side = args.gen
    topology = generate_random(n_nodes, n_anchors, side, args.seed)
    save(topology, args.out)
    print(f"{args.out}: {len(topology)} nodes, {topology.n_anchors} anchors, side {side!r}")
    return EXIT_OK


def _experiment(args) -> int:
    command = Command(args.command)
    try:
        topology, source = resolve_topology(args)
    except (TopologyParseError, TopologyValidationError) as exc:
        if args.topology is None:
            raise
        logger.error("{}: {}", args.topology, exc)
        return EXIT_IO
    spec = ExperimentSpec(
        command=command,
        topology=topology,
        trials=getattr(args, "trials", 1),
        seed=args.seed,
        overrides=collect_overrides(args),
        output_dir=args.out,
        position_update=getattr(args, "mode", None),
        representation=getattr(args, "representation", Representation.BINARY),
        n_jobs=getattr(args, "jobs", 1),
        sweep_parameter=getattr(args, "param", None),
        sweep_base=getattr(args, "base", Command.MOPSO_CONTINUOUS),
        plots=not getattr(args, "no_plots", False),
        topology_source=source,
    )
    result = run_experiment(spec)
    print(result.report, end="")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose, args.quiet)
    try:
        if args.command == "gen-topology":
            return _gen_topology(args)
        return _experiment(args)
    except (OSError, UnicodeDecodeError) as exc:
        logger.error("{}", exc)
        return EXIT_IO
    except ValueError as exc:
        logger.error("{}", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

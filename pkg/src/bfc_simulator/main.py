# Entry point for the full-duplex beamforming-cancellation simulator

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from bfc_simulator.channel import writeChannelCsv
from bfc_simulator.errors import ConfigError, SimulatorError
from bfc_simulator.hybrid import writeCodebookCsv
from bfc_simulator.scenario_config import BUNDLED_SCENARIOS, loadConfig, parseGrid
from bfc_simulator.sim import VALID_LINKS, runSweep, trialChannels

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s]: %(message)s"
LOG_FILE_NAME = "bfcsim.log"

VALID_SUBCOMMANDS = ("run", "sweep", "dump-channel", "dump-codebook", "validate")
VALID_DOMAINS = ("taps", "subcarriers")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4


@dataclass
class CliInvocation:
    """Parsed command line."""
    subcommand: str
    configPath: str | None
    outputPath: Path
    overrides: list[str] = field(default_factory=list)
    seed: int | None = None
    trials: int | None = None
    grid: list[float] | None = None
    snrDb: float | None = None
    workers: int | None = None
    diagnostics: bool = False
    link: str = "ki"
    domain: str = "subcarriers"
    trial: int = 0
    verbose: bool = False


# ============================================================
# Logging
# ============================================================

_installedHandlers: list[logging.Handler] = []


def configureLogging(outputPath: Path | None, verbose: bool) -> None:
    """Console handler plus a log file inside the output directory."""
    teardownLogging()
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)

    console = logging.StreamHandler()
    console.setFormatter(logging.Formatter(LOG_FORMAT))
    console.setLevel(logging.DEBUG if verbose else logging.INFO)
    handlers: list[logging.Handler] = [console]

    if outputPath is not None:
        outputPath.mkdir(parents=True, exist_ok=True)
        fileHandler = logging.FileHandler(outputPath / LOG_FILE_NAME)
        fileHandler.setFormatter(logging.Formatter(LOG_FORMAT))
        fileHandler.setLevel(logging.DEBUG)
        handlers.append(fileHandler)

    for handler in handlers:
        root.addHandler(handler)
        _installedHandlers.append(handler)


def teardownLogging() -> None:
    root = logging.getLogger()
    while _installedHandlers:
        handler = _installedHandlers.pop()
        root.removeHandler(handler)
        handler.close()


# ============================================================
# Argument parsing
# ============================================================

def buildParser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        help=f"Scenario JSON file or bundled name ({', '.join(BUNDLED_SCENARIOS)})",
    )
    common.add_argument("--out", default="results", help="Output directory (default: results)")
    common.add_argument("--seed", type=int, help="Override masterSeed")
    common.add_argument("--trials", type=int, help="Override the trial count")
    common.add_argument("--grid", help="Override the SNR grid, comma-separated dB values")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config field by dotted key, e.g. nodes.i.nrfTx=8 (repeatable)",
    )
    common.add_argument("--verbose", action="store_true", help="Log DEBUG to the console")

    parser = argparse.ArgumentParser(
        prog="bfcsim", description="Full-duplex beamforming-cancellation simulator"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    run = sub.add_parser("run", parents=[common], help="Evaluate one SNR point")
    run.add_argument("--snr", type=float, help="snr_ij grid value in dB (default: first grid value)")
    sweep = sub.add_parser("sweep", parents=[common], help="Evaluate the whole SNR grid")
    for p in (run, sweep):
        p.add_argument("--workers", type=int, help="Worker threads (default: CPU count)")
        p.add_argument("--diagnostics", action="store_true", help="Also write diagnostics.csv")

    dumpChannel = sub.add_parser("dump-channel", parents=[common], help="Write one channel draw")
    dumpChannel.add_argument("--link", choices=VALID_LINKS, default="ki")
    dumpChannel.add_argument("--domain", choices=VALID_DOMAINS, default="subcarriers")
    dumpChannel.add_argument("--trial", type=int, default=0, help="Trial index of the draw")
    dumpChannel.add_argument("--snr", type=float, help="snr_ij grid value selecting the draw")

    sub.add_parser("dump-codebook", parents=[common], help="Write the scenario's RF codebook")
    sub.add_parser("validate", parents=[common], help="Validate configs (all bundled if none given)")
    return parser


def parseArgs(argv: list[str] | None = None) -> CliInvocation:
    """Parse argv; argparse exits with status 2 on usage errors."""
    parser = buildParser()
    args = parser.parse_args(argv)
    try:
        grid = parseGrid(args.grid) if args.grid is not None else None
    except ConfigError as e:
        parser.error(str(e))
    return CliInvocation(
        subcommand=args.subcommand,
        configPath=args.config,
        outputPath=Path(args.out),
        overrides=list(args.set),
        seed=args.seed,
        trials=args.trials,
        grid=grid,
        snrDb=getattr(args, "snr", None),
        workers=getattr(args, "workers", None),
        diagnostics=getattr(args, "diagnostics", False),
        link=getattr(args, "link", "ki"),
        domain=getattr(args, "domain", "subcarriers"),
        trial=getattr(args, "trial", 0),
        verbose=args.verbose,
    )


# ============================================================
# Subcommands
# ============================================================

def _load(invocation: CliInvocation, configPath: str | None = None):
    path = configPath or invocation.configPath
    if path is None:
        raise ConfigError(f"--config is required for '{invocation.subcommand}'")
    return loadConfig(
        path,
        overrides=invocation.overrides,
        seed=invocation.seed,
        trials=invocation.trials,
        grid=invocation.grid,
    )


def _runOrSweep(invocation: CliInvocation) -> None:
    config = _load(invocation)
    if invocation.subcommand == "run":
        point = (
            config.snrPointFor(invocation.snrDb)
            if invocation.snrDb is not None
            else config.snrPoints[0]
        )
        points = (point,)
    else:
        points = config.snrPoints

    table = runSweep(config, workers=invocation.workers, snrPoints=points)
    out = invocation.outputPath
    table.writeTrialsCsv(out / "trials.csv")
    if invocation.subcommand == "sweep":
        table.writeAggregateCsv(out / "aggregate.csv")
    if invocation.diagnostics:
        table.writeDiagnosticsCsv(out / "diagnostics.csv")


def _dumpChannel(invocation: CliInvocation) -> None:
    config = _load(invocation)
    if invocation.trial < 0:
        raise ConfigError(f"--trial must be >= 0, got {invocation.trial}")
    point = (
        config.snrPointFor(invocation.snrDb) if invocation.snrDb is not None else config.snrPoints[0]
    )
    channels = trialChannels(config, point, invocation.trial)
    indexName = "tap" if invocation.domain == "taps" else "subcarrier"
    writeChannelCsv(
        invocation.outputPath / f"channel_{invocation.link}_{invocation.domain}.csv",
        channels.link(invocation.link, invocation.domain),
        indexName=indexName,
    )


def _dumpCodebook(invocation: CliInvocation) -> None:
    config = _load(invocation)
    writeCodebookCsv(invocation.outputPath / "codebook.csv", config.codebooks().i)


def _validate(invocation: CliInvocation) -> None:
    targets = [invocation.configPath] if invocation.configPath else list(BUNDLED_SCENARIOS)
    for target in targets:
        config = _load(invocation, target)
        logger.info(f"'{target}' is valid (scenario '{config.name}')")


_HANDLERS = {
    "run": _runOrSweep,
    "sweep": _runOrSweep,
    "dump-channel": _dumpChannel,
    "dump-codebook": _dumpCodebook,
    "validate": _validate,
}


def dispatch(invocation: CliInvocation) -> int:
    """Execute a parsed invocation and return the process exit status."""
    handler = _HANDLERS.get(invocation.subcommand)
    if handler is None:
        print(buildParser().format_usage(), file=sys.stderr, end="")
        print(
            f"bfcsim: unknown subcommand '{invocation.subcommand}'. "
            f"Must be one of: {list(VALID_SUBCOMMANDS)}",
            file=sys.stderr,
        )
        return EXIT_USAGE

    writesFiles = invocation.subcommand != "validate"
    configureLogging(invocation.outputPath if writesFiles else None, invocation.verbose)
    try:
        handler(invocation)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (SimulatorError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME
    finally:
        teardownLogging()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    return dispatch(parseArgs(argv))


if __name__ == "__main__":
    sys.exit(main())

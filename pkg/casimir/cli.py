from __future__ import annotations

import argparse
import logging
import sys
import traceback
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from casimir.config import ScenarioConfig, default_config, load_config
from casimir.errors import CasimirError, ConfigError, NonConvergenceError
from casimir.scenarios import run_scenario
from storage.local import LocalStorage

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

# подкоманда -> вид сценария в конфиге
COMMANDS = {
    "pressure": "pressure",
    "sweep": "temperature_sweep",
    "reflect": "reflection_table",
    "sphere": "sphere_modes",
    "oracle": "oracle_run",
    "validate": "validate",
}


# logging helpers


def setup_logging(logdir: str, level: str) -> logging.Logger:
    Path(logdir).mkdir(parents=True, exist_ok=True)
    ts = datetime.now().strftime("%Y%m%d_%H%M%S")
    logfile = Path(logdir) / f"run_{ts}.log"

    logger = logging.getLogger("casimir")
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    logger.handlers.clear()
    logger.propagate = False

    fmt = logging.Formatter("%(asctime)s | %(levelname)s | %(message)s")

    fh = logging.FileHandler(str(logfile), encoding="utf-8")
    fh.setFormatter(fmt)
    fh.setLevel(logger.level)

    sh = logging.StreamHandler(sys.stdout)
    sh.setFormatter(fmt)
    sh.setLevel(logger.level)

    logger.addHandler(fh)
    logger.addHandler(sh)

    logger.info(f"logfile: {logfile}")
    return logger


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="casimir", description="Casimir forces from dispersion theory and dipole lattices")

    ap.add_argument("--root", default="data", help="output root folder (default: data)")
    ap.add_argument("--logdir", default="logs", help="log directory (default: logs)")
    ap.add_argument("--loglevel", default="INFO", help="INFO/WARNING/ERROR/DEBUG (default: INFO)")

    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("pressure", "sweep", "reflect", "sphere", "oracle"):
        p = sub.add_parser(name, help=f"run a {COMMANDS[name]} scenario")
        p.add_argument("config", help="scenario file (INI)")

    v = sub.add_parser("validate", help="run the property suite")
    v.add_argument("config", nargs="?", default=None, help="optional scenario file of kind validate")
    v.add_argument("--slow", action="store_true", help="include the slow lattice cross-validation")
    return ap


def _load(command: str, path: Optional[str]) -> ScenarioConfig:
    kind = COMMANDS[command]
    if path is None:
        return default_config(kind, "validation.csv")
    cfg = load_config(path)
    if cfg.kind != kind:
        raise cfg.error(f"'{command}' needs kind = {kind}, got '{cfg.kind}'", "scenario", "kind")
    return cfg


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger = setup_logging(args.logdir, args.loglevel)

    try:
        cfg = _load(args.command, getattr(args, "config", None))
        storage = LocalStorage(root=args.root)
        kwargs = {"slow": args.slow} if args.command == "validate" else {}
        result, path = run_scenario(cfg, storage, logger, **kwargs)
    except ConfigError as exc:
        logger.error(f"config error: {exc}")
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        best = "" if exc.best is None else f" | best: {exc.best:.6e}"
        logger.error(f"non-convergence: {exc}{best}")
        return EXIT_NONCONVERGENCE
    except CasimirError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    except Exception:
        logger.error(f"[{args.command}] crashed:\n{traceback.format_exc()}")
        return EXIT_FAILED

    logger.info(f"output: {path}")
    failed = result.extra.get("failed") if args.command == "validate" else None
    if failed:
        logger.error(f"validation failed: {', '.join(failed)}")
        return EXIT_FAILED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

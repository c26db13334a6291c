from __future__ import annotations

import time
import traceback

from casimir.cli import setup_logging
from casimir.config import load_config
from casimir.scenarios import run_scenario
from storage.local import LocalStorage

# Чтобы прогнать все сценарии (они отработают по очереди) - достаточно раскомментить нужные строки ниже и запустить python master.py
# Результаты пишутся в data/, логи - в logs/

CONFIGS = [
    "configs/perfect_conductor.ini",
    "configs/plasma_sweep.ini",
    "configs/reflection_table.ini",
    #"configs/sphere_modes.ini",
    #"configs/oracle_slabs.ini",   # долго: несколько минут
]


def run_all(root: str = "data") -> int:
    logger = setup_logging("logs", "INFO")
    storage = LocalStorage(root=root)

    done = 0
    t0 = time.time()
    for path in CONFIGS:
        try:
            cfg = load_config(path)
            run_scenario(cfg, storage, logger)
            done += 1
        except Exception:
            # падение одного сценария не останавливает остальные
            logger.error(f"[{path}] crashed:\n{traceback.format_exc()}")

    logger.info(f"TOTAL scenarios done: {done}/{len(CONFIGS)} | total time: {time.time() - t0:.2f}s")
    return done


if __name__ == "__main__":
    run_all()

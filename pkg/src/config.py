import logging
import os
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


def _env_number(name, default, cast):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning(f"Некорректное значение {name}={raw!r}, используется {default}")
        return default


DEFAULT_SEED = _env_number("BPL_SEED", 1, int)

MONTE_CARLO_TRIALS = _env_number("BPL_TRIALS", 10000, int)
MONTE_CARLO_BATCH = 2000

# секунд реального времени на одну единицу модельного времени (1 ед. = 1 мс)
WALLCLOCK_SCALE = _env_number("BPL_WALLCLOCK_SCALE", 0.001, float)
WALLCLOCK_TIMEOUT = _env_number("BPL_WALLCLOCK_TIMEOUT", 60.0, float)

LOG_FILE = os.getenv("BPL_LOG_FILE", "")

REL_TOL = 1e-9
PROB_TOL = 1e-9

CHANNEL_CAPACITY = 1

DEPTH_SCAN_LIMIT = 200

# размер SVG в пунктах (1 pt = 1/72 дюйма)
SVG_SIZE_PT = (800, 500)

DATA_PATHS = {
    "sweeps": "data/sweeps/",
    "timelines": "data/timelines/",
}

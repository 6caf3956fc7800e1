"""In-process vectorized environment API over the rtg core.

Minimal surface for external learners: ``create`` a handle over parallel
episodes, ``reset``/``step`` individual slots, ``close`` when done.
Observation buffers are uint8 arrays shaped (player, row, col, channel).
"""

__version__ = "0.1.0"

from .env import (  # noqa: F401
    EnvHandle,
    close,
    create,
    list_scenarios,
    reset,
)
from .env import step_env as step  # noqa: F401

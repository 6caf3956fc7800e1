"""Frozen color palette and pixel-layout constants.

docs/observation-layout.md is the normative description of the observation
format; the values here must match it byte for byte.  Scripted policies
parse observations by exact color match, so nothing in this file may change
without breaking recorded replays and the layout document.
"""

from __future__ import annotations

import numpy as np

TILE_PX = 3

GRASS = (54, 72, 44)
TREE = (18, 134, 62)
GENERAL = (255, 214, 0)
NEUTRAL_ROLE = (128, 128, 128)
BLACK = (0, 0, 0)

# Indexed by Team value.
TEAM_COLORS = ((224, 48, 48), (48, 224, 48), (48, 96, 224))

# Dead sprites keep their colors at half intensity (integer floor).
def dim(color: tuple[int, int, int]) -> tuple[int, int, int]:
    return (color[0] // 2, color[1] // 2, color[2] // 2)


# One entry per player index; distinct from each other and from team colors.
ID_COLORS = (
    (255, 255, 255), (255, 128, 0), (0, 255, 255), (255, 0, 255),
    (255, 255, 0), (160, 32, 240), (0, 128, 255), (255, 160, 122),
    (128, 255, 0), (0, 255, 128), (255, 0, 128), (128, 0, 255),
    (0, 64, 128), (128, 64, 0), (192, 192, 96), (96, 192, 192),
    (192, 96, 192), (64, 128, 64), (230, 230, 140), (70, 130, 180),
    (210, 105, 30), (176, 48, 96), (100, 180, 100), (180, 100, 60),
)

# Blue's general-direction indicator: one color per octant, keyed by the
# sign pair (sign(gx - x), sign(gy - y)) with y growing southward.
OCTANT_COLORS = {
    (0, -1): (250, 250, 110),   # N
    (1, -1): (255, 170, 70),    # NE
    (1, 0): (240, 90, 160),     # E
    (1, 1): (170, 70, 255),     # SE
    (0, 1): (90, 160, 240),     # S
    (-1, 1): (70, 255, 170),    # SW
    (-1, 0): (160, 240, 90),    # W
    (-1, -1): (255, 110, 110),  # NW
}

OCTANT_BY_COLOR = {color: signs for signs, color in OCTANT_COLORS.items()}


def intensity_byte(num: int, den: int) -> int:
    """round(255 * num / den) in exact integer arithmetic (half rounds up)."""
    if den <= 0:
        return 0
    return (510 * num + den) // (2 * den)


def byte_to_count(value: int, den: int) -> int:
    """Inverse of intensity_byte for den <= 255: recovers num exactly."""
    return (2 * value * den + 255) // 510


def as_array(color: tuple[int, int, int]) -> np.ndarray:
    return np.array(color, dtype=np.uint8)

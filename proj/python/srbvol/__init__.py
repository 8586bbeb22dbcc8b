"""Python access to the srbvol core.

Volumes and determinants return plain numbers; the dynamics functions return
the same dictionaries the command-line tool writes as JSON.
"""

import json

from ._srbvol import (
    InputError,
    SrbvolError,
    det,
    norm,
    parallelepiped_volume,
    unit_ball_coord_volume,
)
from . import _srbvol

__all__ = [
    "InputError",
    "SrbvolError",
    "det",
    "norm",
    "parallelepiped_volume",
    "unit_ball_coord_volume",
    "lyapunov",
    "srb_density",
    "entropy_check",
    "suite",
]


def lyapunov(system, space=None, steps=100000, seed=1):
    return json.loads(_srbvol._lyapunov(system, space, steps, seed))


def srb_density(system="solenoid", space=None, index=150, points=0, bins=64, seed=1):
    return json.loads(_srbvol._srb_density(system, space, index, points, bins, seed))


def entropy_check(system, space=None, steps=100000, seed=1):
    return json.loads(_srbvol._entropy_check(system, space, steps, seed))


def suite(level="quick", seed=42, workers=1):
    """Returns (all criteria passed, suite report)."""
    ok, text = _srbvol._suite(level, seed, workers)
    return ok, json.loads(text)

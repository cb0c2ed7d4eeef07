"""Figure panels rendered from sfpg pipeline exports."""

from .errors import ChecksumMismatch, FigureError, MissingInput
from .manifest import RunManifest
from .render import (PANELS, FigureRecipe, guide_line_offsets, pump_omega0,
                     render)

__all__ = [
    "ChecksumMismatch",
    "FigureError",
    "FigureRecipe",
    "MissingInput",
    "PANELS",
    "RunManifest",
    "guide_line_offsets",
    "pump_omega0",
    "render",
]

__version__ = "0.1.0"

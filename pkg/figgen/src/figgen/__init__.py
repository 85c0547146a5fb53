"""Figure generation for pump-probe simulation CSV outputs.

Consumes only the documented CSV column contracts; independent of the
simulation package.
"""

from .readers import (
    AU_TIME_FS,
    SchemaError,
    read_density,
    read_field,
    read_fit_curve,
    read_stats,
    read_yield,
)
from .figures import FigureSpec, KINDS, build_figure, render

__all__ = [
    "AU_TIME_FS",
    "SchemaError",
    "FigureSpec",
    "KINDS",
    "build_figure",
    "render",
    "read_density",
    "read_field",
    "read_fit_curve",
    "read_stats",
    "read_yield",
]

__version__ = "0.1.0"

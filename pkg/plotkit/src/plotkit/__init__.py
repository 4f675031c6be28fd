"""Figure renderer for the radar pipeline's SARM and CSV artifacts.

Reads only the on-disk artifact formats (SARM binary matrices, CSV
curves, JSON reports); it does not depend on the package that produces
them.
"""

from .sarm import Sarm, SarmFormatError, read_sarm
from .figures import FigureSpecError, load_spec, render

__all__ = [
    "Sarm",
    "SarmFormatError",
    "read_sarm",
    "FigureSpecError",
    "load_spec",
    "render",
]

"""Figure rendering for solver experiment artifacts.

Consumes only the documented file formats (``history.csv`` per run and the
batch ``summary.json``); it never imports the solver package.
"""

from .bundle import CurveBundle, SchemaError, load_histories, variance_series
from .render import render

__all__ = ["CurveBundle", "SchemaError", "load_histories", "variance_series", "render"]

__version__ = "0.1.0"

"""Figures from hdpslice trace files."""

from .plotting import plot_diagnostics, plot_nmi
from .reader import Trace, TraceFormatError, read_trace

__version__ = "0.1.0"

__all__ = ["Trace", "TraceFormatError", "plot_diagnostics", "plot_nmi", "read_trace"]

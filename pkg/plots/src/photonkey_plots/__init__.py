"""Figure rendering for photonkey curve and sweep CSVs."""
from .figures import plot_fig1, plot_sweep
from .io import CurveFile, SchemaError, SweepFile

__version__ = "0.1.0"

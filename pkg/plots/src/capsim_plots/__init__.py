"""Band charts over capsim experiment CSVs.

Reads the harness CSV schema (experiment,param,value,trial,metric,
metric_value), never recomputes metrics, and renders one chart per
requested metric: a mean center line per series with the min-max range
shaded behind it.
"""

from .plotting import PlotSpec, PlotSpecError, load_rows, plot_band

__version__ = "0.1.0"

__all__ = ["PlotSpec", "PlotSpecError", "load_rows", "plot_band", "__version__"]

"""idslab-plot: publication-style figures from idslab CSV outputs.

The pipeline boundary is the filesystem: this package only reads the
delimited files and fit reports the idslab CLI writes, validates their
headers against the published schemas, and renders figures.
"""

__version__ = "0.1.0"

from idslab_plot.render import FigureJob, build_figure, render

__all__ = ["FigureJob", "build_figure", "render"]

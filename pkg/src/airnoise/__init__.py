"""Hourly aircraft-noise exposure analytics.

Pipeline stages: ingest CSV streams, aggregate 3-second samples into hourly
equivalent levels, fuse with de-facto population at the census-tract grain,
compute threshold exposure and Gini inequality series, train boosted-tree
noise models and attribute their predictions with exact Shapley values.
"""

__version__ = "0.1.0"

from .errors import AirnoiseError

__all__ = ["AirnoiseError", "__version__"]

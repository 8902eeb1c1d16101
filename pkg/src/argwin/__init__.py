"""argwin: winning arguments in bipolar reply trees, in theory and in ensembles."""

__version__ = "0.1.0"
